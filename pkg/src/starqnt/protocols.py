"""The six end-to-end tomography protocols: copy allocation, execution, wiring."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import UsageError, as_theta
from .dists import Basis, Circuit, OutcomeDistribution, meas_dist, outcome_nodes
from .estimators import (
    EstimatorResult,
    average_valid,
    est_direct,
    freq_bit_one,
    freq_parity,
    freq_xor,
    invert_for_theta0,
    invert_m_marginal,
)
from .sampling import child_seed, draw_samples


class Protocol(str, enum.Enum):
    IE_1STEP = "IE_1STEP"
    BF_1STEP = "BF_1STEP"
    IE_2STEP = "IE_2STEP"
    BF_2STEP = "BF_2STEP"
    RIM_2STEP = "RIM_2STEP"
    RI_NSTEP = "RI_NSTEP"

    @property
    def index(self) -> int:
        return list(Protocol).index(self)

    def multiple(self, n: int) -> int:
        """``m_total`` must be a multiple of this."""
        if self is Protocol.RI_NSTEP:
            return n
        return 2 if self.value.endswith("2STEP") else 1

    @property
    def uses_inversion(self) -> bool:
        return self in (Protocol.BF_1STEP, Protocol.BF_2STEP, Protocol.RIM_2STEP)


def parse_protocol(value) -> Protocol:
    try:
        return Protocol(str(getattr(value, "value", value)).upper())
    except ValueError:
        raise UsageError(f"unknown protocol {value!r}; choose from {[p.value for p in Protocol]}") from None


@dataclass(frozen=True)
class Step:
    circuit: Circuit
    basis: Basis
    root: int
    m: int


@dataclass(frozen=True)
class ProtocolSpec:
    protocol: Protocol
    n: int
    steps: tuple[Step, ...]

    @property
    def m_total(self) -> int:
        return sum(s.m for s in self.steps)


def plan_protocol(protocol, n: int, m_total: int) -> ProtocolSpec:
    protocol = parse_protocol(protocol)
    if n < 2:
        raise UsageError(f"a star needs n >= 2 channels, got {n}")
    k = protocol.multiple(n)
    if m_total < k or m_total % k:
        raise UsageError(f"{protocol.value} needs m_total to be a positive multiple of {k}, got {m_total}")
    half = m_total // 2
    plans = {
        Protocol.IE_1STEP: [Step(Circuit.IE, Basis.EIGEN, 0, m_total)],
        Protocol.BF_1STEP: [Step(Circuit.BF, Basis.EIGEN, 0, m_total)],
        Protocol.IE_2STEP: [Step(Circuit.IE, Basis.Z, 0, half), Step(Circuit.IE, Basis.X, 0, half)],
        Protocol.BF_2STEP: [Step(Circuit.BF, Basis.Z, 0, half), Step(Circuit.BF, Basis.X, 0, half)],
        Protocol.RIM_2STEP: [Step(Circuit.RI, Basis.EIGEN, 0, half), Step(Circuit.M, Basis.EIGEN, 0, half)],
    }
    if protocol is Protocol.RI_NSTEP:
        steps = [Step(Circuit.RI, Basis.EIGEN, r, m_total // n) for r in range(n)]
    else:
        steps = plans[protocol]
    return ProtocolSpec(protocol, n, tuple(steps))


def feasible_m(protocol, n: int, m: int) -> int:
    """Largest feasible ``m_total`` not above ``m`` (0 if none)."""
    k = parse_protocol(protocol).multiple(n)
    return (m // k) * k


@dataclass(frozen=True)
class EstimateReport:
    theta_hat: tuple[EstimatorResult, ...]
    protocol: Protocol
    m_total: int
    seed: Optional[int]
    err_l2: Optional[float] = None
    exact: bool = field(default=False)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.theta_hat])

    @property
    def invalid_count(self) -> int:
        return sum(not r.valid for r in self.theta_hat)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "m_total": self.m_total,
            "seed": self.seed,
            "exact": self.exact,
            "err_l2": self.err_l2,
            "invalid_count": self.invalid_count,
            "theta_hat": [
                {"value": r.value, "valid": r.valid, "clamped": r.clamped, "raw": r.raw}
                for r in self.theta_hat
            ],
        }


@lru_cache(maxsize=4096)
def _cached_dist(circuit: Circuit, basis: Basis, n: int, theta: tuple, root: int) -> OutcomeDistribution:
    return meas_dist(circuit, basis, n, theta, root)


def step_sources(spec: ProtocolSpec, theta, seed: Optional[int] = None, exact: bool = False) -> list:
    """One frequency source per step: a Dataset, or the exact table when ``exact``.

    Step i draws from the stream ``child_seed(seed, 0, 0, i)``.
    """
    th = tuple(float(t) for t in as_theta(theta))
    if len(th) != spec.n:
        raise UsageError(f"expected {spec.n} parameters, got {len(th)}")
    out = []
    for i, step in enumerate(spec.steps):
        dist = _cached_dist(step.circuit, step.basis, spec.n, th, step.root)
        if exact:
            out.append(dist)
        else:
            if seed is None:
                raise UsageError("sampling mode needs a seed")
            out.append(draw_samples(dist, step.m, child_seed(seed, 0, 0, i)))
    return out


def _multicast_leaves(src, theta0: EstimatorResult, n: int, xor: bool) -> list[EstimatorResult]:
    """Leaf estimates from a p_M-shaped marginal and a root estimate."""
    out = []
    for j in range(1, n):
        p_one = freq_xor(src, j) if xor else freq_bit_one(src, j)
        res = invert_m_marginal(p_one, theta0.value)
        if not theta0.valid:
            res = EstimatorResult(res.value, False, res.clamped, res.raw)
        out.append(res)
    return out


def estimate(spec: ProtocolSpec, sources: list) -> list[EstimatorResult]:
    """Apply the protocol's estimator wiring to per-step frequency sources."""
    n, p = spec.n, spec.protocol
    if p is Protocol.IE_1STEP:
        (src,) = sources
        return [est_direct(freq_bit_one(src, j)) for j in range(n)]
    if p is Protocol.BF_1STEP:
        (src,) = sources
        theta0 = est_direct(freq_bit_one(src, 0))
        return [theta0] + _multicast_leaves(src, theta0, n, xor=False)
    if p is Protocol.IE_2STEP:
        zsrc, xsrc = sources
        return [est_direct(freq_parity(xsrc))] + [est_direct(freq_xor(zsrc, j)) for j in range(1, n)]
    if p is Protocol.BF_2STEP:
        zsrc, xsrc = sources
        theta0 = est_direct(freq_parity(xsrc))
        return [theta0] + _multicast_leaves(zsrc, theta0, n, xor=True)
    if p is Protocol.RIM_2STEP:
        ri, mc = sources
        leaves = [est_direct(freq_bit_one(ri, k)) for k in range(n - 1)]
        roots = [invert_for_theta0(freq_bit_one(mc, k), leaves[k].value) for k in range(n - 1)]
        return [average_valid(roots)] + leaves
    # RI_NSTEP: pool every dataset whose root is not node j
    out = []
    for j in range(n):
        ones = total = 0.0
        for step, src in zip(spec.steps, sources):
            if step.root == j:
                continue
            pos = outcome_nodes(step.circuit, n, step.root).index(j)
            ones += step.m * freq_bit_one(src, pos)
            total += step.m
        out.append(est_direct(ones / total))
    return out


def execute_protocol(spec: ProtocolSpec, theta_true, seed: Optional[int] = None, exact: bool = False) -> EstimateReport:
    th = as_theta(theta_true)
    sources = step_sources(spec, th, seed, exact)
    results = tuple(estimate(spec, sources))
    values = np.array([r.value for r in results])
    err = float(np.linalg.norm(values - th))
    return EstimateReport(results, spec.protocol, spec.m_total, seed, err, exact)
