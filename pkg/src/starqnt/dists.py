"""Closed-form outcome laws of the four distribution circuits.

Multicast (M) and root-independent (RI) states live on the n-1 leaves and are
diagonal in Z; leaf position k carries parameter theta[k+1]. Independent
encoding (IE) and back-and-forth (BF) states live on all n end-nodes and are
diagonal in the GHZ basis; bit 0 is the GHZ phase bit.

A non-zero root r is handled by swapping theta[0] and theta[r] before
evaluating the root-0 formulas, and swapping the gradient columns back.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    MAX_WIDTH,
    BitString,
    BitsLike,
    UsageError,
    alpha_grad_table,
    alpha_table,
    as_bits,
    as_theta,
    bit_table,
    parity_table,
)


class Circuit(str, enum.Enum):
    M = "M"
    IE = "IE"
    RI = "RI"
    BF = "BF"


class Basis(str, enum.Enum):
    EIGEN = "EIGEN"
    Z = "Z"
    X = "X"
    GHZ = "GHZ"


GHZ_DIAGONAL = (Circuit.IE, Circuit.BF)


def parse_circuit(value) -> Circuit:
    try:
        return Circuit(str(getattr(value, "value", value)).upper())
    except ValueError:
        raise UsageError(f"unknown circuit {value!r}") from None


def parse_basis(value) -> Basis:
    try:
        return Basis(str(getattr(value, "value", value)).upper())
    except ValueError:
        raise UsageError(f"unknown basis {value!r}") from None


def eigenbasis(circuit: Circuit) -> Basis:
    """Physical basis that diagonalizes the circuit's output state."""
    return Basis.GHZ if parse_circuit(circuit) in GHZ_DIAGONAL else Basis.Z


def outcome_width(circuit: Circuit, n: int) -> int:
    return n if parse_circuit(circuit) in GHZ_DIAGONAL else n - 1


def root_permutation(n: int, root: int) -> np.ndarray:
    if not 0 <= root < n:
        raise UsageError(f"root {root} outside 0..{n - 1}")
    perm = np.arange(n)
    perm[0], perm[root] = root, 0
    return perm


def outcome_nodes(circuit: Circuit, n: int, root: int = 0) -> list[int]:
    """End-node index that owns each outcome bit."""
    perm = root_permutation(n, root)
    if parse_circuit(circuit) in GHZ_DIAGONAL:
        return [int(v) for v in perm]
    return [int(v) for v in perm[1:]]


@dataclass(frozen=True)
class OutcomeDistribution:
    width: int
    probs: np.ndarray
    circuit: Optional[Circuit] = None
    basis: Optional[Basis] = None
    root: int = 0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (1 << self.width,):
            raise UsageError(f"table of shape {probs.shape} does not match width {self.width}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, s: BitsLike) -> float:
        s = as_bits(s)
        if s.width != self.width:
            raise UsageError(f"label width {s.width} != {self.width}")
        return float(self.probs[s.to_int()])

    def as_dict(self) -> dict[str, float]:
        return {str(BitString.from_int(i, self.width)): float(p) for i, p in enumerate(self.probs)}


@dataclass(frozen=True)
class DistGradient:
    """``partials[s, j]`` is the derivative of p(s) with respect to theta[j]."""

    width: int
    partials: np.ndarray = field(repr=False)

    def __post_init__(self):
        partials = np.array(self.partials, dtype=float)
        if partials.ndim != 2 or partials.shape[0] != (1 << self.width):
            raise UsageError(f"gradient of shape {partials.shape} does not match width {self.width}")
        partials.setflags(write=False)
        object.__setattr__(self, "partials", partials)

    @property
    def n_params(self) -> int:
        return self.partials.shape[1]

    def partial(self, s: BitsLike, j: int) -> float:
        return float(self.partials[as_bits(s).to_int(), j])


def _check(circuit, n: int, theta) -> tuple[Circuit, np.ndarray]:
    circuit = parse_circuit(circuit)
    if n < 2:
        raise UsageError(f"a star needs n >= 2 channels, got {n}")
    th = as_theta(theta)
    if th.size != n:
        raise UsageError(f"expected {n} parameters, got {th.size}")
    if outcome_width(circuit, n) > MAX_WIDTH:
        raise UsageError(f"outcome width above {MAX_WIDTH} not supported")
    return circuit, th


def _multicast(th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """p_M over n-1 leaf bits and its (2**(n-1), n) gradient."""
    a = alpha_table(th[1:])
    ga = alpha_grad_table(th[1:])
    # bitwise negation of label i is the reversed integer order
    a_neg, ga_neg = a[::-1], ga[::-1]
    p = th[0] * a + (1.0 - th[0]) * a_neg
    g = np.empty((a.size, th.size))
    g[:, 0] = a - a_neg
    g[:, 1:] = th[0] * ga + (1.0 - th[0]) * ga_neg
    return p, g


def _eigen(circuit: Circuit, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = th.size
    if circuit is Circuit.M:
        return _multicast(th)
    if circuit is Circuit.IE:
        return alpha_table(th), alpha_grad_table(th)
    if circuit is Circuit.RI:
        g = np.zeros((1 << (n - 1), n))
        g[:, 1:] = alpha_grad_table(th[1:])
        return alpha_table(th[1:]), g
    # BF: phase bit is an independent Bernoulli(theta0) times p_M on the rest
    pm, gm = _multicast(th)
    phase = np.array([th[0], 1.0 - th[0]])
    p = np.concatenate([phase[0] * pm, phase[1] * pm])
    g = np.concatenate([phase[0] * gm, phase[1] * gm])
    g[: pm.size, 0] += pm
    g[pm.size:, 0] -= pm
    return p, g


def _z_reduction(n: int) -> np.ndarray:
    """Index into the core table for each Z outcome: z_{1:} xor (z_0 * all-ones)."""
    half = 1 << (n - 1)
    z = np.arange(1 << n)
    rest = z & (half - 1)
    return np.where(z >= half, (half - 1) ^ rest, rest)


def _measured(circuit: Circuit, basis: Basis, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = th.size
    if basis is Basis.GHZ:
        if circuit not in GHZ_DIAGONAL:
            raise UsageError(f"GHZ basis is not defined for the {circuit.value} state")
        basis = Basis.EIGEN
    if circuit not in GHZ_DIAGONAL:
        if basis is Basis.X:
            raise UsageError(f"X basis is not defined for the {circuit.value} state")
        return _eigen(circuit, th)
    if basis is Basis.EIGEN:
        return _eigen(circuit, th)
    if basis is Basis.Z:
        if circuit is Circuit.IE:
            core = alpha_table(th[1:])
            gcore = np.zeros((core.size, n))
            gcore[:, 1:] = alpha_grad_table(th[1:])
        else:
            core, gcore = _multicast(th)
        idx = _z_reduction(n)
        return 0.5 * core[idx], 0.5 * gcore[idx]
    # X basis: only parity carries information, and only about theta0
    beta = parity_table(n)
    scale = 1.0 / (1 << (n - 1))
    p = np.where(beta == 1, 1.0 - th[0], th[0]) * scale
    g = np.zeros((p.size, n))
    g[:, 0] = (1.0 - 2.0 * beta) * scale
    return p, g


def _evaluate(circuit, basis, n, theta, root):
    circuit, th = _check(circuit, n, theta)
    basis = parse_basis(basis)
    perm = root_permutation(n, root)
    p, g = _measured(circuit, basis, th[perm])
    return circuit, basis, p, g[:, perm]


def state_dist(circuit, n: int, theta, root: int = 0) -> OutcomeDistribution:
    """Eigenvalue table of the state distributed by ``circuit``."""
    circuit, basis, p, _ = _evaluate(circuit, Basis.EIGEN, n, theta, root)
    return OutcomeDistribution(outcome_width(circuit, n), p, circuit, basis, root)


def meas_dist(circuit, basis, n: int, theta, root: int = 0) -> OutcomeDistribution:
    circuit, basis, p, _ = _evaluate(circuit, basis, n, theta, root)
    return OutcomeDistribution(outcome_width(circuit, n), p, circuit, basis, root)


def meas_dist_grad(circuit, basis, n: int, theta, root: int = 0) -> DistGradient:
    circuit, _, _, g = _evaluate(circuit, basis, n, theta, root)
    return DistGradient(outcome_width(circuit, n), g)


def valid_bases(circuit) -> tuple[Basis, ...]:
    if parse_circuit(circuit) in GHZ_DIAGONAL:
        return (Basis.EIGEN, Basis.Z, Basis.X)
    return (Basis.EIGEN, Basis.Z)


__all__ = [
    "Basis",
    "Circuit",
    "DistGradient",
    "OutcomeDistribution",
    "bit_table",
    "eigenbasis",
    "meas_dist",
    "meas_dist_grad",
    "outcome_nodes",
    "outcome_width",
    "parse_basis",
    "parse_circuit",
    "root_permutation",
    "state_dist",
    "valid_bases",
]
