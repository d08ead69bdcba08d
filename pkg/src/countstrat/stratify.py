"""MAP-optimal partitioning of a count histogram into contiguous bins.

The objective is a Bayesian score: a per-bin likelihood (multinomial with
uniform within-bin cell probabilities, or Poisson with a shared within-bin
rate) summed over bins, plus a truncated geometric prior over the number of
bins. The maximizer over all contiguous partitions is found by dynamic
programming over histogram cells; a brute-force enumerator over the same
candidate space serves as a verification oracle for small inputs.

Split points fall on cell boundaries (a cell is one count value with
nonzero frequency), so a run of identical counts is never split across
bins. Bins are delimited by their start cells: a bin stretches from its
first cell to the cell just before the next bin's first cell, the first
bin starts at count 0, and the last bin ends at the histogram's max count.

Determinism is handled at two levels. The dynamic program and the direct
scoring path share one float convention (per-cell log-gamma terms summed
left to right, values always from ``math.log``/``math.lgamma``) so their
scores agree to within a few ulps. On top of that, candidates within a
tiny relative window of the float optimum are re-ranked in exact rational
arithmetic, because mathematically tied partitions (symmetric frequency
patterns, or gamma values whose log cancels a likelihood difference) are
generally not float ties.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .counts import CountHistogram
from .errors import RangeError, ValidationError

BRUTE_FORCE_MAX_CELLS = 20

# Score ties that are mathematically exact (e.g. merging two unit cells at
# gamma = 0.5) are not float ties: libm's lgamma and log disagree by a few
# ulps on values that coincide algebraically. Candidates within this
# relative window of the float optimum are therefore re-ranked in exact
# rational arithmetic, in the DP and the brute-force oracle alike, so true
# ties resolve by the documented rule on every platform. The window is
# ~1000x the worst accumulated rounding drift and far below any genuine
# score gap. Exact re-ranking is skipped for instances too large to ever
# meet the oracle (the float order is still deterministic there).
_TIE_REL_WINDOW = 1e-12
_EXACT_TIE_CELL_LIMIT = 64
_EXACT_TIE_MASS_LIMIT = 10_000


class LikelihoodKind(enum.Enum):
    MULTINOMIAL = "multinomial"
    POISSON = "poisson"


@dataclass(frozen=True)
class Bin:
    """Closed count interval [lo, hi]."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValidationError(f"invalid bin bounds [{self.lo}, {self.hi}]")

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class PriorConfig:
    """Truncated geometric prior over the number of bins.

    ``alpha`` of None means "number of cells", which makes the cap vacuous;
    it is resolved against a concrete histogram before scoring.
    """

    gamma: float
    alpha: int | None = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.alpha is not None and self.alpha < 1:
            raise ValidationError(f"alpha must be >= 1, got {self.alpha}")

    def resolved(self, n_cells: int) -> "PriorConfig":
        if self.alpha is not None:
            return self
        return PriorConfig(self.gamma, n_cells)


@dataclass(frozen=True)
class BinningConfig:
    """Everything needed to fit bins directly: prior, cap, smoothing, likelihood."""

    gamma: float = 0.5
    alpha: int | None = None
    beta: int = 1
    likelihood_kind: LikelihoodKind = LikelihoodKind.MULTINOMIAL

    def __post_init__(self):
        PriorConfig(self.gamma, self.alpha)
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")

    @property
    def prior(self) -> PriorConfig:
        return PriorConfig(self.gamma, self.alpha)


@dataclass(frozen=True)
class Partition:
    """Ordered, contiguous, exhaustive bins over [0, C] with their MAP score."""

    bins: tuple[Bin, ...]
    map_score: float
    gamma_used: float
    likelihood_kind: LikelihoodKind

    def __post_init__(self):
        if not self.bins:
            raise ValidationError("partition needs at least one bin")
        if self.bins[0].lo != 0:
            raise ValidationError("first bin must start at count 0")
        for prev, cur in zip(self.bins, self.bins[1:]):
            if cur.lo != prev.hi + 1:
                raise ValidationError(
                    f"bins not contiguous: [{prev.lo},{prev.hi}] then [{cur.lo},{cur.hi}]"
                )

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    @property
    def max_count(self) -> int:
        return self.bins[-1].hi


def locate_bin(bins: tuple[Bin, ...], count: float) -> tuple[int, bool]:
    """Return (bin index containing count, clamped_above flag).

    Counts above the partition range map to the last bin with the flag set.
    """
    if count < bins[0].lo:
        raise RangeError(f"count {count} below partition range start {bins[0].lo}")
    if count > bins[-1].hi:
        return len(bins) - 1, True
    lo_idx, hi_idx = 0, len(bins) - 1
    while lo_idx < hi_idx:
        mid = (lo_idx + hi_idx) // 2
        if count > bins[mid].hi:
            lo_idx = mid + 1
        else:
            hi_idx = mid
    return lo_idx, False


def prior_log_prob(n_bins: int, cfg: PriorConfig) -> float:
    """Log of the truncated geometric prior; -inf outside support [1, alpha]."""
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    if cfg.alpha is None:
        raise ValidationError("alpha unresolved; call cfg.resolved(n_cells) first")
    if n_bins > cfg.alpha:
        return float("-inf")
    g = cfg.gamma
    log_p0 = math.log((1.0 - g) / (1.0 - g**cfg.alpha))
    return log_p0 + n_bins * math.log(g)


def _multinomial_block(mass: int, lgamma_sum: float, width: int) -> float:
    # Canonical op order; the vectorized DP mirrors it exactly.
    return (math.lgamma(mass + 1) - lgamma_sum) - mass * math.log(width)


def _poisson_block(mass: int, lgamma_sum: float, width: int) -> float:
    if mass == 0:
        return 0.0
    return (mass * (math.log(mass) - math.log(width)) - mass) - lgamma_sum


def bin_log_likelihood(hist: CountHistogram, lo: int, hi: int, kind: LikelihoodKind) -> float:
    """Log-likelihood of one bin [lo, hi] of the histogram.

    Multinomial: cell probabilities are uniform within the bin (1/width).
    Poisson: one shared rate mass/width across the bin's cells. Both reduce
    to 0 for a zero-mass bin.
    """
    if not 0 <= lo <= hi <= hist.max_count:
        raise RangeError(
            f"bin [{lo}, {hi}] outside histogram range [0, {hist.max_count}]"
        )
    mass = 0
    lgamma_sum = 0.0
    for c in range(lo, hi + 1):
        f = hist.freqs[c]
        mass += f
        lgamma_sum += math.lgamma(f + 1)
    if kind is LikelihoodKind.MULTINOMIAL:
        if mass == 0:
            return 0.0
        return _multinomial_block(mass, lgamma_sum, hi - lo + 1)
    return _poisson_block(mass, lgamma_sum, hi - lo + 1)


def partition_log_score(
    hist: CountHistogram, partition: Partition, cfg: PriorConfig, kind: LikelihoodKind
) -> float:
    """Sum of bin log-likelihoods plus the bin-count prior."""
    if partition.bins[-1].hi != hist.max_count:
        raise ValidationError(
            f"partition ends at {partition.bins[-1].hi}, histogram at {hist.max_count}"
        )
    score = 0.0
    for b in partition.bins:
        score += bin_log_likelihood(hist, b.lo, b.hi, kind)
    return score + prior_log_prob(partition.n_bins, cfg.resolved(len(hist.support)))


def _bins_from_starts(support: tuple[int, ...], starts: list[int], max_count: int) -> tuple[Bin, ...]:
    """Bins from the cell indices starting each block (starts[0] == 0)."""
    bins = []
    for k, st in enumerate(starts):
        lo = 0 if k == 0 else support[st]
        hi = max_count if k == len(starts) - 1 else support[starts[k + 1]] - 1
        bins.append(Bin(lo, hi))
    return tuple(bins)


class _CellData:
    """Per-histogram arrays shared by the DP paths."""

    def __init__(self, hist: CountHistogram):
        support = hist.support
        if not support:
            raise ValidationError("histogram has no mass")
        self.support = support
        self.max_count = hist.max_count
        self.masses = np.array([hist.freqs[c] for c in support], dtype=np.int64)
        self.cell_lg = np.array([math.lgamma(int(x) + 1) for x in self.masses])
        self.mass_cum = np.concatenate(([0], np.cumsum(self.masses)))
        total = int(self.masses.sum())
        top = max(total, hist.max_count + 1)
        # index 0 is a never-used guard (log/lgamma pole at 0)
        self.ln_tab = np.array([np.nan] + [math.log(k) for k in range(1, top + 1)])
        self.lgam_tab = np.array([np.nan] + [math.lgamma(k) for k in range(1, total + 2)])
        # block starting at cell i has lo = 0 for i == 0, else the cell value
        self.lo_arr = np.array(support, dtype=np.int64)
        self.lo_arr[0] = 0

    @property
    def n_cells(self) -> int:
        return len(self.support)

    @property
    def exact_ties_enabled(self) -> bool:
        return _exact_ties_enabled(self.n_cells, int(self.mass_cum[-1]))

    def block_end(self, j: int) -> int:
        if j == self.n_cells - 1:
            return self.max_count
        return self.support[j + 1] - 1

    def block_scores_ending_at(self, r: int, lgamma_acc: np.ndarray, kind: LikelihoodKind) -> np.ndarray:
        """Scores of blocks (i..r) for i = 0..r; lgamma_acc[i] holds the
        left-to-right sum of cell_lg[i..r]."""
        bmass = self.mass_cum[r + 1] - self.mass_cum[: r + 1]
        widths = self.block_end(r) - self.lo_arr[: r + 1] + 1
        if kind is LikelihoodKind.MULTINOMIAL:
            return (self.lgam_tab[bmass + 1] - lgamma_acc[: r + 1]) - bmass * self.ln_tab[widths]
        return (bmass * (self.ln_tab[bmass] - self.ln_tab[widths]) - bmass) - lgamma_acc[: r + 1]


def _tie_window(top: float) -> float:
    return _TIE_REL_WINDOW * max(1.0, abs(top))


def _exact_ties_enabled(n_cells: int, total: int) -> bool:
    return n_cells <= _EXACT_TIE_CELL_LIMIT and total <= _EXACT_TIE_MASS_LIMIT


def _exact_partition_key(
    support, mass_cum, max_count: int, starts: list[int], r: int,
    kind: LikelihoodKind, gamma: Fraction | None,
) -> Fraction:
    """Exact rational ranking key of the partition of cells 0..r given by
    the block start indices.

    Partition-constant factors (the per-cell factorials and, for Poisson,
    exp(-total)) are dropped, so keys are only comparable for the same
    histogram prefix. ``gamma`` of None drops the prior factor too (used
    where the compared partitions share their bin count).
    """
    key = Fraction(1)
    for k, start in enumerate(starts):
        j_end = (starts[k + 1] - 1) if k + 1 < len(starts) else r
        mass = int(mass_cum[j_end + 1] - mass_cum[start])
        lo = 0 if start == 0 else support[start]
        hi = max_count if j_end == len(support) - 1 else support[j_end + 1] - 1
        width = hi - lo + 1
        if kind is LikelihoodKind.MULTINOMIAL:
            key *= Fraction(math.factorial(mass), width**mass)
        else:
            key *= Fraction(mass**mass, width**mass)
    if gamma is not None:
        key *= gamma ** len(starts)
    return key


def _starts_from_last(last: np.ndarray, r: int) -> list[int]:
    """Block starts of the stored optimal prefix partition ending at cell r
    (empty for r < 0)."""
    if r < 0:
        return []
    starts = []
    while True:
        i = int(last[r])
        starts.append(i)
        if i == 0:
            break
        r = i - 1
    starts.reverse()
    return starts


def _dp_uncapped(cells: _CellData, ln_gamma: float, gamma: float, kind: LikelihoodKind) -> list[int]:
    """Forward DP over cells; returns the block start indices of the optimum.

    Ties resolve to fewer bins, then to the earlier split, applied at every
    prefix, which matches comparing full partitions by (score, n_bins,
    reversed split sequence). Near-tied candidates are re-ranked exactly
    (see _TIE_REL_WINDOW) when the instance is small enough.
    """
    m = cells.n_cells
    exact = cells.exact_ties_enabled
    gamma_fr = Fraction(gamma) if exact else None
    best = np.empty(m)
    nbins = np.empty(m, dtype=np.int64)
    last = np.empty(m, dtype=np.int64)
    acc = np.zeros(m)
    prev = np.empty(m)
    nb = np.empty(m, dtype=np.int64)
    for r in range(m):
        acc[: r + 1] += cells.cell_lg[r]
        scores = cells.block_scores_ending_at(r, acc, kind)
        prev[0] = 0.0
        prev[1 : r + 1] = best[:r]
        cand = (prev[: r + 1] + scores) + ln_gamma
        top = float(cand.max())
        nb[0] = 1
        nb[1 : r + 1] = nbins[:r] + 1
        near = np.flatnonzero(cand >= top - _tie_window(top))
        if len(near) == 1:
            pick = int(near[0])
        elif exact:
            ranked = []
            for i in (int(x) for x in near):
                starts_i = _starts_from_last(last, i - 1) + [i]
                key = _exact_partition_key(
                    cells.support, cells.mass_cum, cells.max_count, starts_i, r, kind, gamma_fr
                )
                ranked.append((key, -int(nb[i]), -i))
            want = max(ranked)
            pick = -want[2]
        else:
            tie = cand == top
            nb_best = nb[: r + 1][tie].min()
            pick = int(np.argmax(tie & (nb[: r + 1] == nb_best)))
        # store the float group maximum so chain error stays at ulp scale
        best[r] = top
        nbins[r] = nb[pick]
        last[r] = pick
    return _starts_from_last(last, m - 1)


def _starts_from_back(back: np.ndarray, b: int, r: int) -> list[int]:
    starts = []
    while b >= 1:
        i = int(back[b][r])
        starts.append(i)
        r, b = i - 1, b - 1
    starts.reverse()
    return starts


def _dp_capped(cells: _CellData, ln_gamma: float, gamma: float, alpha: int, kind: LikelihoodKind) -> list[int]:
    """Two-dimensional DP over (bin count, cells) for alpha below the cell count."""
    m = cells.n_cells
    exact = cells.exact_ties_enabled
    gamma_fr = Fraction(gamma) if exact else None
    neg_inf = float("-inf")
    score = np.full((alpha + 1, m), neg_inf)
    back = np.zeros((alpha + 1, m), dtype=np.int64)
    acc = np.zeros(m)
    for r in range(m):
        acc[: r + 1] += cells.cell_lg[r]
        blocks = cells.block_scores_ending_at(r, acc, kind)
        score[1][r] = blocks[0]
        back[1][r] = 0
        for b in range(2, min(alpha, r + 1) + 1):
            # last block starts at i >= b-1; prior layer indexed at i-1
            cand = score[b - 1][b - 2 : r] + blocks[b - 1 : r + 1]
            top = float(cand.max())
            if top == neg_inf:
                continue
            near = np.flatnonzero(cand >= top - _tie_window(top))
            if len(near) == 1:
                pick = int(near[0])
            elif exact:
                # bin count is fixed within the layer: drop the prior factor
                ranked = []
                for offset in (int(x) for x in near):
                    i = offset + (b - 1)
                    starts_i = _starts_from_back(back, b - 1, i - 1) + [i]
                    key = _exact_partition_key(
                        cells.support, cells.mass_cum, cells.max_count, starts_i, r, kind, None
                    )
                    ranked.append((key, -i))
                pick = -(max(ranked)[1]) - (b - 1)
            else:
                pick = int(np.argmax(cand == top))
            score[b][r] = top
            back[b][r] = pick + (b - 1)
    finals = []
    for b in range(1, alpha + 1):
        if score[b][m - 1] == neg_inf:
            continue
        finals.append((float(score[b][m - 1] + b * ln_gamma), b))
    top_total = max(t for t, _ in finals)
    near_b = [b for t, b in finals if t >= top_total - _tie_window(top_total)]
    if len(near_b) == 1 or not exact:
        best_b = near_b[0] if len(near_b) == 1 else _best_final_float(finals, top_total)
    else:
        ranked = []
        for b in near_b:
            starts_b = _starts_from_back(back, b, m - 1)
            key = _exact_partition_key(
                cells.support, cells.mass_cum, cells.max_count, starts_b, m - 1, kind, gamma_fr
            )
            ranked.append((key, -b))
        best_b = -(max(ranked)[1])
    return _starts_from_back(back, best_b, m - 1)


def _best_final_float(finals: list[tuple[float, int]], top_total: float) -> int:
    for total, b in finals:  # ascending b: first exact top wins = fewest bins
        if total == top_total:
            return b
    raise AssertionError("unreachable")


def optimal_partition(hist: CountHistogram, cfg: PriorConfig, kind: LikelihoodKind) -> Partition:
    """MAP partition over all contiguous cell-boundary partitions.

    Deterministic: score ties prefer fewer bins, then the earlier last
    split. The returned map_score is recomputed with partition_log_score so
    it matches direct rescoring bit for bit.
    """
    if hist.total <= 0:
        raise ValidationError("histogram must have positive total mass")
    cells = _CellData(hist)
    rcfg = cfg.resolved(cells.n_cells)
    ln_gamma = math.log(cfg.gamma)
    if rcfg.alpha >= cells.n_cells:
        starts = _dp_uncapped(cells, ln_gamma, cfg.gamma, kind)
    else:
        starts = _dp_capped(cells, ln_gamma, cfg.gamma, rcfg.alpha, kind)
    bins = _bins_from_starts(cells.support, starts, hist.max_count)
    partition = Partition(bins, 0.0, cfg.gamma, kind)
    score = partition_log_score(hist, partition, rcfg, kind)
    return Partition(bins, score, cfg.gamma, kind)


def brute_force_partition(hist: CountHistogram, cfg: PriorConfig, kind: LikelihoodKind) -> Partition:
    """Exhaustive maximizer over all 2^(M-1) contiguous partitions.

    Verification oracle for optimal_partition; refuses more than
    BRUTE_FORCE_MAX_CELLS cells. Applies the same tie-breaking rule:
    fewer bins first, then the lexicographically smallest reversed
    split sequence (i.e. earlier last split).
    """
    if hist.total <= 0:
        raise ValidationError("histogram must have positive total mass")
    support = hist.support
    m = len(support)
    if m > BRUTE_FORCE_MAX_CELLS:
        raise ValidationError(
            f"brute force refuses {m} cells (limit {BRUTE_FORCE_MAX_CELLS}): 2^(M-1) partitions"
        )
    rcfg = cfg.resolved(m)
    ln_gamma = math.log(cfg.gamma)
    mass_cum = [0]
    for c in support:
        mass_cum.append(mass_cum[-1] + hist.freqs[c])
    exact = _exact_ties_enabled(m, mass_cum[-1])
    gamma_fr = Fraction(cfg.gamma) if exact else None
    table = {}
    for i in range(m):
        lo = 0 if i == 0 else support[i]
        for j in range(i, m):
            hi = hist.max_count if j == m - 1 else support[j + 1] - 1
            table[(i, j)] = bin_log_likelihood(hist, lo, hi, kind)

    candidates = []
    for mask in range(1 << (m - 1)):
        starts = [0] + [t + 1 for t in range(m - 1) if mask >> t & 1]
        if len(starts) > rcfg.alpha:
            continue
        rank = 0.0
        for k, st in enumerate(starts):
            en = (starts[k + 1] - 1) if k + 1 < len(starts) else m - 1
            rank = (rank + table[(st, en)]) + ln_gamma
        candidates.append((rank, starts))
    top = max(rank for rank, _ in candidates)
    near = [
        (rank, starts)
        for rank, starts in candidates
        if rank >= top - _tie_window(top)
    ]
    if len(near) == 1:
        best_starts = near[0][1]
    elif exact:
        # re-rank the near-tied set exactly, mirroring the DP's resolution
        ranked = []
        for _, starts in near:
            key = _exact_partition_key(
                support, mass_cum, hist.max_count, starts, m - 1, kind, gamma_fr
            )
            ranked.append((key, -len(starts), tuple(-s for s in reversed(starts)), starts))
        best_starts = max(ranked)[3]
    else:
        float_ties = [
            (len(starts), tuple(reversed(starts)), starts)
            for rank, starts in near
            if rank == top
        ]
        best_starts = min(float_ties)[2]
    bins = _bins_from_starts(support, best_starts, hist.max_count)
    partition = Partition(bins, 0.0, cfg.gamma, kind)
    score = partition_log_score(hist, partition, rcfg, kind)
    return Partition(bins, score, cfg.gamma, kind)


def fit_partition(records, cfg: BinningConfig) -> Partition:
    """Smooth the records' histogram and fit the MAP partition directly
    (no gamma grid search)."""
    from .counts import build_histogram, smooth

    hist = smooth(build_histogram(records), cfg.beta)
    return optimal_partition(hist, cfg.prior, cfg.likelihood_kind)


def partition_to_json_dict(partition: Partition, alpha: int, beta: int) -> dict:
    return {
        "gamma": partition.gamma_used,
        "alpha": alpha,
        "beta": beta,
        "likelihood": partition.likelihood_kind.value,
        "map_score": partition.map_score,
        "bins": [{"lo": b.lo, "hi": b.hi} for b in partition.bins],
    }


def partition_from_json_dict(obj: dict) -> tuple[Partition, int, int]:
    """Parse the partition export schema; returns (partition, alpha, beta)."""
    try:
        bins = tuple(Bin(int(b["lo"]), int(b["hi"])) for b in obj["bins"])
        partition = Partition(
            bins,
            float(obj["map_score"]),
            float(obj["gamma"]),
            LikelihoodKind(obj["likelihood"]),
        )
        return partition, int(obj["alpha"]), int(obj["beta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad partition document: {exc}") from None
