"""Balanced, seeded minibatch plans over bin-assigned training samples.

Both schemes draw without replacement until the whole training set is
consumed, so one plan is exactly one epoch. Round-robin (RR) cycles the
bins in order, drawing one random unused sample per visit; random-bin (RS)
picks a non-exhausted bin uniformly at each step. Randomness comes from
NumPy's PCG64 generator seeded explicitly, so plans are reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .counts import CountRecord
from .errors import ValidationError
from .stratify import Partition, locate_bin


class SamplingScheme(enum.Enum):
    RR = "rr"
    RS = "rs"


@dataclass(frozen=True)
class BinAssignment:
    """Training ids grouped by the bin containing their count."""

    by_bin: tuple[tuple[str, ...], ...]
    clamped_ids: tuple[str, ...] = ()

    @property
    def bin_count(self) -> int:
        return len(self.by_bin)

    @property
    def total(self) -> int:
        return sum(len(ids) for ids in self.by_bin)

    @property
    def has_clamped(self) -> bool:
        return bool(self.clamped_ids)


@dataclass(frozen=True)
class BatchPlan:
    """One epoch of minibatches; concatenated batches cover every id once."""

    batches: tuple[tuple[str, ...], ...]
    batch_size: int
    seed: int
    scheme: SamplingScheme


def assign_bins(records: list[CountRecord], partition: Partition) -> BinAssignment:
    """Route each record into the bin containing its count.

    Counts above the partition range land in the last bin and are reported
    through clamped_ids.
    """
    buckets: list[list[str]] = [[] for _ in partition.bins]
    clamped: list[str] = []
    for rec in records:
        idx, was_clamped = locate_bin(partition.bins, rec.count)
        buckets[idx].append(rec.id)
        if was_clamped:
            clamped.append(rec.id)
    return BinAssignment(tuple(tuple(b) for b in buckets), tuple(clamped))


def _validated(assignment: BinAssignment, batch_size: int) -> None:
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
    if assignment.total < 1:
        raise ValidationError("assignment holds no samples")


def _draw(rng: np.random.Generator, bucket: list[str]) -> str:
    # swap-pop: uniform over remaining, O(1)
    j = int(rng.integers(len(bucket)))
    bucket[j], bucket[-1] = bucket[-1], bucket[j]
    return bucket.pop()


def _as_plan(draws: list[str], batch_size: int, seed: int, scheme: SamplingScheme) -> BatchPlan:
    batches = tuple(
        tuple(draws[i : i + batch_size]) for i in range(0, len(draws), batch_size)
    )
    return BatchPlan(batches, batch_size, seed, scheme)


def plan_epoch_rr(assignment: BinAssignment, batch_size: int, seed: int) -> BatchPlan:
    """Round-robin epoch plan: one draw per bin visit, exhausted bins skipped."""
    _validated(assignment, batch_size)
    remaining = [list(ids) for ids in assignment.by_bin]
    rng = np.random.Generator(np.random.PCG64(seed))
    n_bins = len(remaining)
    draws: list[str] = []
    left = assignment.total
    cursor = 0
    while left:
        while not remaining[cursor]:
            cursor = (cursor + 1) % n_bins
        draws.append(_draw(rng, remaining[cursor]))
        left -= 1
        cursor = (cursor + 1) % n_bins
    return _as_plan(draws, batch_size, seed, SamplingScheme.RR)


def plan_epoch_rs(assignment: BinAssignment, batch_size: int, seed: int) -> BatchPlan:
    """Random-bin epoch plan: uniform over non-exhausted bins at every step."""
    _validated(assignment, batch_size)
    remaining = [list(ids) for ids in assignment.by_bin]
    rng = np.random.Generator(np.random.PCG64(seed))
    draws: list[str] = []
    left = assignment.total
    while left:
        nonempty = [i for i, bucket in enumerate(remaining) if bucket]
        pick = nonempty[int(rng.integers(len(nonempty)))]
        draws.append(_draw(rng, remaining[pick]))
        left -= 1
    return _as_plan(draws, batch_size, seed, SamplingScheme.RS)


def plan_epoch(assignment: BinAssignment, batch_size: int, seed: int, scheme: SamplingScheme) -> BatchPlan:
    if scheme is SamplingScheme.RR:
        return plan_epoch_rr(assignment, batch_size, seed)
    if scheme is SamplingScheme.RS:
        return plan_epoch_rs(assignment, batch_size, seed)
    raise ValidationError(f"unknown scheme {scheme!r}")


def plan_to_json_dict(plan: BatchPlan) -> dict:
    return {
        "scheme": plan.scheme.value,
        "batch_size": plan.batch_size,
        "seed": plan.seed,
        "batches": [list(b) for b in plan.batches],
    }
