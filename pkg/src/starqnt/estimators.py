"""Point estimators built from outcome frequencies.

Every frequency helper accepts either a :class:`~starqnt.sampling.Dataset`
(empirical frequencies) or an :class:`~starqnt.dists.OutcomeDistribution`
(exact population values, "plug-in" mode), so the same wiring serves both
Monte Carlo runs and exactness checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import UsageError, bit_table, parity_table
from .dists import OutcomeDistribution
from .sampling import Dataset

EPS_SING = 1e-3


@dataclass(frozen=True)
class EstimatorResult:
    value: float
    valid: bool = True
    clamped: bool = False
    raw: Optional[float] = None

    def __post_init__(self):
        if self.raw is None:
            object.__setattr__(self, "raw", self.value)


def _table(source) -> tuple[np.ndarray, int]:
    if isinstance(source, Dataset):
        return source.frequencies(), source.width
    if isinstance(source, OutcomeDistribution):
        return source.probs, source.width
    raise UsageError(f"cannot take frequencies of {type(source).__name__}")


def freq_bit_one(data, j: int) -> float:
    probs, width = _table(data)
    if not 0 <= j < width:
        raise UsageError(f"bit {j} outside width {width}")
    return float(probs @ bit_table(width)[:, j])


def freq_xor(data, j: int) -> float:
    """Frequency of bit 0 xor bit j being 1."""
    probs, width = _table(data)
    if not 1 <= j < width:
        raise UsageError(f"xor position {j} must be in 1..{width - 1}")
    bits = bit_table(width)
    return float(probs @ (bits[:, 0] ^ bits[:, j]))


def freq_parity(data) -> float:
    probs, width = _table(data)
    return float(probs @ parity_table(width))


def est_direct(p_one: float) -> EstimatorResult:
    """No-flip probability of a bit whose flip probability is ``p_one``."""
    return EstimatorResult(1.0 - p_one)


def _invert(p_one: float, known: float, eps: float) -> EstimatorResult:
    # p_one = known + x - 2 * known * x, solved for x
    denom = 1.0 - 2.0 * known
    num = p_one - known
    if denom != 0.0:
        raw = num / denom
    elif num != 0.0:
        raw = math.copysign(math.inf, num)
    else:
        raw = math.nan
    valid = abs(denom) >= eps
    if math.isnan(raw):
        return EstimatorResult(0.5, valid=False, clamped=True, raw=raw)
    value = min(max(raw, 0.0), 1.0)
    return EstimatorResult(value, valid=valid, clamped=value != raw, raw=raw)


def invert_m_marginal(p_one: float, theta0_hat: float, eps: float = EPS_SING) -> EstimatorResult:
    """Leaf parameter from a multicast-type marginal, given the root estimate."""
    return _invert(p_one, theta0_hat, eps)


def invert_for_theta0(p_one: float, thetaj_hat: float, eps: float = EPS_SING) -> EstimatorResult:
    """Root parameter from the same marginal, given a leaf estimate."""
    return _invert(p_one, thetaj_hat, eps)


def average_valid(results: list[EstimatorResult]) -> EstimatorResult:
    """Mean of the valid results; flagged invalid (mean of all clamped values) if none are."""
    good = [r for r in results if r.valid]
    if good:
        value = float(np.mean([r.value for r in good]))
        raw = float(np.mean([r.raw for r in good]))
        return EstimatorResult(value, True, any(r.clamped for r in good), raw)
    value = float(np.mean([r.value for r in results]))
    with np.errstate(invalid="ignore"):
        raw = float(np.mean([r.raw for r in results]))
    return EstimatorResult(value, False, True, raw)
