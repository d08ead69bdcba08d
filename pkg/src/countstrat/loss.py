"""Strata-aware loss: logarithmic inside the ground truth's bin, linear outside.

A prediction landing in the same bin as the ground truth incurs a damped
log(1 + error) penalty; a prediction outside the bin pays the full absolute
error. The loss is meant as an additive companion to a model's own loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .stratify import Bin, locate_bin


@dataclass(frozen=True)
class LossConfig:
    lambda1: float = 1.0  # weight of the in-bin logarithmic branch
    lambda2: float = 1.0  # weight of the whole term when added to a model loss

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValidationError("lambda1 and lambda2 must be >= 0")


def _piecewise(y: float, y_hat: float, lo: float, hi: float, lambda1: float) -> float:
    err = abs(y - y_hat)
    if lo <= y_hat <= hi:
        return lambda1 * math.log1p(err)
    return err


def _piecewise_subgradient(y: float, y_hat: float, lo: float, hi: float, lambda1: float) -> float:
    if y_hat == y:
        return 0.0
    sign = 1.0 if y_hat > y else -1.0
    # bin edges take the inside branch, matching the loss itself
    if lo <= y_hat <= hi:
        return lambda1 * sign / (1.0 + abs(y - y_hat))
    return sign


def bin_loss(y: float, y_hat: float, bin_: Bin, lambda1: float = 1.0) -> float:
    """Piecewise penalty for a ground truth y known to lie in bin_."""
    if not bin_.contains(y):
        raise ValidationError(f"ground truth {y} outside its bin [{bin_.lo}, {bin_.hi}]")
    return _piecewise(y, y_hat, bin_.lo, bin_.hi, lambda1)


def combined_loss(model_loss: float, y: float, y_hat: float, bin_: Bin, cfg: LossConfig) -> float:
    """Model loss plus the weighted bin penalty."""
    if not math.isfinite(model_loss):
        raise ValidationError(f"model_loss must be finite, got {model_loss}")
    return model_loss + cfg.lambda2 * bin_loss(y, y_hat, bin_, cfg.lambda1)


def bin_loss_subgradient(y: float, y_hat: float, bin_: Bin, lambda1: float = 1.0) -> float:
    """d(bin_loss)/d(y_hat); 0 at y_hat == y, inside-branch value on bin edges."""
    if not bin_.contains(y):
        raise ValidationError(f"ground truth {y} outside its bin [{bin_.lo}, {bin_.hi}]")
    return _piecewise_subgradient(y, y_hat, bin_.lo, bin_.hi, lambda1)


def routed_bin_loss(y: float, y_hat: float, bins: tuple[Bin, ...], lambda1: float = 1.0) -> tuple[float, Bin]:
    """Locate y's bin (clamping counts above the range into the last bin)
    and evaluate the loss there. Returns (loss, bin used)."""
    idx, _ = locate_bin(bins, y)
    b = bins[idx]
    return _piecewise(y, y_hat, b.lo, b.hi, lambda1), b


def routed_bin_loss_subgradient(y: float, y_hat: float, bins: tuple[Bin, ...], lambda1: float = 1.0) -> float:
    idx, _ = locate_bin(bins, y)
    b = bins[idx]
    return _piecewise_subgradient(y, y_hat, b.lo, b.hi, lambda1)
