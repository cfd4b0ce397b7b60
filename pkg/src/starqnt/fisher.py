"""Fisher information of measured outcome laws and the trace of its inverse."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import UsageError, as_theta
from .dists import DistGradient, OutcomeDistribution, meas_dist, meas_dist_grad
from .protocols import ProtocolSpec, Step

EPS_P = 1e-14
KAPPA_MAX = 1e12


@dataclass(frozen=True)
class QcrbResult:
    trace_inv: Optional[float]
    condition_number: float
    singular: bool


def cfim(dist: OutcomeDistribution, grad: DistGradient) -> np.ndarray:
    """Classical Fisher information; outcomes with p <= EPS_P are skipped."""
    if dist.width != grad.width:
        raise UsageError("distribution and gradient widths differ")
    keep = dist.probs > EPS_P
    g = grad.partials[keep]
    f = (g / dist.probs[keep, None]).T @ g
    return (f + f.T) / 2


def step_cfim(step: Step, n: int, theta) -> np.ndarray:
    dist = meas_dist(step.circuit, step.basis, n, theta, step.root)
    grad = meas_dist_grad(step.circuit, step.basis, n, theta, step.root)
    return cfim(dist, grad)


def protocol_qfim(spec: ProtocolSpec, theta) -> np.ndarray:
    """Copy-weighted sum of per-step information matrices."""
    th = as_theta(theta)
    if th.size != spec.n:
        raise UsageError(f"expected {spec.n} parameters, got {th.size}")
    if np.any((th <= 0.0) | (th >= 1.0)):
        raise UsageError("information matrices need theta strictly inside (0, 1)")
    return sum(step.m * step_cfim(step, spec.n, th) for step in spec.steps)


def qcrb_trace(F, kappa_max: float = KAPPA_MAX) -> QcrbResult:
    F = np.asarray(F, dtype=float)
    eig = np.linalg.eigvalsh((F + F.T) / 2)
    lo, hi = eig.min(), eig.max()
    if hi <= 0.0 or lo <= 0.0:
        return QcrbResult(None, float("inf"), True)
    kappa = float(hi / lo)
    if not np.isfinite(kappa) or kappa > kappa_max:
        return QcrbResult(None, kappa, True)
    return QcrbResult(float(np.sum(1.0 / eig)), kappa, False)
