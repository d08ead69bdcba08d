"""Synthetic heavy-tailed count benchmark with a toy trainable predictor.

Counts come from a discretized, capped log-normal; each sample carries one
scalar feature z = y*(1+eps) so a two-parameter linear probe is learnable.
The comparison harness trains that probe three ways on identical data:
plain shuffled minibatches with an absolute-error loss, and round-robin or
random-bin balanced plans with the combined (model + bin) loss, then
evaluates all three on one held-out split. The probe is deliberately tiny
so runs take seconds and differences are attributable to the sampling and
loss choices rather than model capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .counts import CountRecord, build_histogram, smooth
from .errors import ValidationError
from .evaluate import EvalReport, PredictionRecord, evaluate
from .loss import LossConfig, routed_bin_loss, routed_bin_loss_subgradient
from .sampling import SamplingScheme, assign_bins, plan_epoch
from .stratify import BinningConfig, Partition, optimal_partition
from .tuning import split_records

SCHEMES = ("none", "rr", "rs")

# Binning used by the benchmark unless overridden: few wide strata, like the
# bin layouts the grid-searched pipeline settles on for real count data.
DEFAULT_SYNTH_BINNING = BinningConfig(gamma=0.1, alpha=6)

# offset keeping per-epoch plan seeds disjoint across runs
_EPOCH_SEED_STRIDE = 100003


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings for one synthetic dataset."""

    n_samples: int = 800
    log_mean: float = 3.0
    log_sigma: float = 1.4
    max_count: int = 2000
    noise_spread: float = 0.15
    noise_bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.noise_spread < 0:
            raise ValidationError("noise_spread must be >= 0")
        if self.max_count < 1:
            raise ValidationError("max_count must be >= 1")
        if self.log_sigma < 0:
            raise ValidationError("log_sigma must be >= 0")


@dataclass(frozen=True)
class TrainerConfig:
    epochs: int = 20
    learning_rate: float = 0.5
    batch_size: int = 32
    loss: LossConfig = LossConfig()
    holdout_ratio: float = 0.25

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if not 0.0 < self.holdout_ratio < 1.0:
            raise ValidationError("holdout_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class ToyFit:
    """Fitted probe y_hat = weight * (z / scale) + offset, with its training curve."""

    weight: float
    offset: float
    scale: float
    epoch_losses: tuple[float, ...]

    def predict(self, z: float) -> float:
        return self.weight * (z / self.scale) + self.offset


@dataclass(frozen=True)
class ComparisonReport:
    """Held-out evaluation of the three schemes plus per-seed win counts."""

    reports: tuple[tuple[str, EvalReport], ...]  # first seed, one entry per scheme
    seeds: tuple[int, ...]
    pooled_std_by_seed: tuple[tuple[str, tuple[float, ...]], ...]
    win_counts: tuple[tuple[str, int], ...]  # seeds where rr/rs beat the baseline


def generate_dataset(spec: SynthSpec) -> tuple[list[CountRecord], dict[str, float]]:
    """Seeded dataset: capped, rounded log-normal counts and noisy features."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    raw = rng.lognormal(mean=spec.log_mean, sigma=spec.log_sigma, size=spec.n_samples)
    counts = np.minimum(np.rint(raw).astype(np.int64), spec.max_count)
    eps = spec.noise_bias + spec.noise_spread * rng.standard_normal(spec.n_samples)
    z = counts * (1.0 + eps)
    records = [CountRecord(f"s{i:05d}", int(c)) for i, c in enumerate(counts)]
    features = {rec.id: float(v) for rec, v in zip(records, z)}
    return records, features


def _epoch_batches_shuffled(ids: list[str], batch_size: int, seed: int) -> list[tuple[str, ...]]:
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(ids))
    order = [ids[i] for i in perm]
    return [tuple(order[i : i + batch_size]) for i in range(0, len(order), batch_size)]


def fit_toy_regressor(
    train: list[CountRecord],
    features: dict[str, float],
    partition: Partition,
    cfg: TrainerConfig,
    scheme: str,
    seed: int,
) -> ToyFit:
    """Subgradient-descent fit of the linear probe under one scheme.

    scheme "none" trains on seeded shuffled batches with the plain
    absolute-error loss and never consults the bin structure; "rr"/"rs" use
    the corresponding balanced plan and the combined loss.
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    y = {r.id: float(r.count) for r in train}
    zs = np.array([abs(features[r.id]) for r in train])
    scale = max(float(zs.mean()), 1e-9)
    u = {r.id: features[r.id] / scale for r in train}
    ids = [r.id for r in train]
    assignment = assign_bins(train, partition) if scheme != "none" else None
    lam1, lam2 = cfg.loss.lambda1, cfg.loss.lambda2

    weight, offset = 0.0, 0.0
    epoch_losses = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate / (1.0 + epoch)
        plan_seed = seed * _EPOCH_SEED_STRIDE + epoch
        if scheme == "none":
            batches = _epoch_batches_shuffled(ids, cfg.batch_size, plan_seed)
        else:
            batches = plan_epoch(assignment, cfg.batch_size, plan_seed, SamplingScheme(scheme)).batches
        loss_sum = 0.0
        for batch in batches:
            g_w = 0.0
            g_c = 0.0
            for sample_id in batch:
                yi = y[sample_id]
                ui = u[sample_id]
                pred = weight * ui + offset
                err = pred - yi
                sign = 0.0 if err == 0.0 else math.copysign(1.0, err)
                loss = abs(err)
                grad = sign
                if scheme != "none":
                    extra, _ = routed_bin_loss(yi, pred, partition.bins, lam1)
                    loss += lam2 * extra
                    grad += lam2 * routed_bin_loss_subgradient(yi, pred, partition.bins, lam1)
                loss_sum += loss
                g_w += grad * ui
                g_c += grad
            weight -= lr * g_w / len(batch)
            offset -= lr * g_c / len(batch)
        epoch_losses.append(loss_sum / len(ids))
    return ToyFit(weight, offset, scale, tuple(epoch_losses))


def run_comparison(
    spec: SynthSpec,
    binning: BinningConfig = DEFAULT_SYNTH_BINNING,
    trainer: TrainerConfig = TrainerConfig(),
    seeds: tuple[int, ...] = tuple(range(10)),
) -> ComparisonReport:
    """Train and evaluate all three schemes per seed.

    Every scheme within a seed shares the dataset, train/test split and
    partition; win counts tally the seeds where a balanced scheme's pooled
    error std lands below the baseline's.
    """
    if not seeds:
        raise ValidationError("need at least one seed")
    pooled_std = {s: [] for s in SCHEMES}
    first_reports: dict[str, EvalReport] = {}
    for run_index, seed in enumerate(seeds):
        records, features = generate_dataset(replace(spec, seed=seed))
        train, test = split_records(records, trainer.holdout_ratio, seed)
        hist = smooth(build_histogram(train), binning.beta)
        partition = optimal_partition(hist, binning.prior, binning.likelihood_kind)
        for scheme in SCHEMES:
            fit = fit_toy_regressor(train, features, partition, trainer, scheme, seed)
            preds = [
                PredictionRecord(r.id, r.count, fit.predict(features[r.id])) for r in test
            ]
            report = evaluate(preds, partition)
            pooled_std[scheme].append(report.pooled_std)
            if run_index == 0:
                first_reports[scheme] = report
    wins = {
        scheme: sum(
            1
            for k in range(len(seeds))
            if pooled_std[scheme][k] < pooled_std["none"][k]
        )
        for scheme in ("rr", "rs")
    }
    return ComparisonReport(
        reports=tuple((s, first_reports[s]) for s in SCHEMES),
        seeds=tuple(seeds),
        pooled_std_by_seed=tuple((s, tuple(pooled_std[s])) for s in SCHEMES),
        win_counts=tuple((s, wins[s]) for s in ("rr", "rs")),
    )


def comparison_json_dict(report: ComparisonReport) -> dict:
    from .evaluate import report_json_dict

    return {
        "seeds": list(report.seeds),
        "win_counts": {s: w for s, w in report.win_counts},
        "pooled_std_by_seed": {s: list(v) for s, v in report.pooled_std_by_seed},
        "first_seed_reports": {s: report_json_dict(r) for s, r in report.reports},
    }
