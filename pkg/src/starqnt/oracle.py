"""Brute-force density-matrix simulation of the distribution circuits.

Used only to cross-check the closed forms in :mod:`starqnt.dists`. Qubit 0 is
the leftmost tensor factor. Register order at the end of each circuit:

* M, RI: leaves v_1 .. v_{n-1}
* IE:    v_0 (the kept Bell half), then v_1 .. v_{n-1}
* BF:    v_0 (the returned control), then v_1 .. v_{n-1}
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import BitString, BitsLike, UsageError, as_bits, as_theta
from .dists import Basis, Circuit, OutcomeDistribution, parse_basis, parse_circuit

MAX_QUBITS = 6

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _embed(gate: np.ndarray, qubit: int, q: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(q):
        out = np.kron(out, gate if k == qubit else I2)
    return out


def _cnot(control: int, targets, q: int) -> np.ndarray:
    """Permutation matrix flipping every target when the control reads 1."""
    dim = 1 << q
    mask = 0
    for t in targets:
        mask |= 1 << (q - 1 - t)
    cbit = 1 << (q - 1 - control)
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        out[i ^ mask if i & cbit else i, i] = 1.0
    return out


class Register:
    """A q-qubit density matrix that gates and channels act on in place."""

    def __init__(self, q: int):
        if not 1 <= q <= MAX_QUBITS:
            raise UsageError(f"oracle supports 1..{MAX_QUBITS} qubits, got {q}")
        self.q = q
        self.rho = np.zeros((1 << q, 1 << q), dtype=complex)
        self.rho[0, 0] = 1.0

    def _check(self, qubit: int):
        if not 0 <= qubit < self.q:
            raise UsageError(f"qubit {qubit} outside register of {self.q}")

    def gate(self, u: np.ndarray, qubit: int) -> "Register":
        self._check(qubit)
        full = _embed(u, qubit, self.q)
        self.rho = full @ self.rho @ full.conj().T
        return self

    def cnot(self, control: int, targets) -> "Register":
        for t in (control, *targets):
            self._check(t)
        if targets:
            full = _cnot(control, list(targets), self.q)
            self.rho = full @ self.rho @ full.T
        return self

    def bitflip(self, qubit: int, theta_e: float) -> "Register":
        self.rho = apply_bitflip(self.rho, qubit, theta_e)
        return self


def apply_bitflip(rho: np.ndarray, qubit: int, theta_e: float) -> np.ndarray:
    q = int(round(np.log2(rho.shape[0])))
    if not 0 <= qubit < q:
        raise UsageError(f"qubit {qubit} outside register of {q}")
    xq = _embed(X, qubit, q)
    return theta_e * rho + (1.0 - theta_e) * (xq @ rho @ xq)


def run_circuit(circuit, n: int, theta) -> np.ndarray:
    """Joint end-node density matrix produced by ``circuit`` with root v_0."""
    circuit = parse_circuit(circuit)
    th = as_theta(theta)
    if not 2 <= n <= MAX_QUBITS or th.size != n:
        raise UsageError(f"oracle needs 2 <= n <= {MAX_QUBITS} and n parameters")

    if circuit in (Circuit.M, Circuit.RI):
        # qubit 0 is the transmitted root qubit, kept at v_n as control, then sent to v_1
        reg = Register(n - 1)
        if circuit is Circuit.RI:
            reg.gate(H, 0)
        reg.bitflip(0, th[0])
        if circuit is Circuit.RI:
            reg.gate(H, 0)
        reg.cnot(0, range(1, n - 1))
        for k in range(n - 1):
            reg.bitflip(k, th[k + 1])
        return reg.rho

    reg = Register(n)
    if circuit is Circuit.IE:
        # qubit 0 stays at v_0; qubit 1 crosses channel 0, controls at v_n, then goes to v_1
        reg.gate(H, 0).cnot(0, [1])
        reg.gate(X, 0).gate(H, 0).gate(X, 0)
        reg.bitflip(1, th[0])
        reg.gate(Z, 1).gate(H, 1).gate(Z, 1)
        reg.cnot(1, range(2, n))
        for j in range(1, n):
            reg.bitflip(j, th[j])
        return reg.rho

    # BF: qubit 0 crosses channel 0, seeds the GHZ circuit, and crosses channel 0 again
    reg.bitflip(0, th[0])
    reg.gate(H, 0).cnot(0, range(1, n))
    reg.bitflip(0, th[0])
    for j in range(1, n):
        reg.bitflip(j, th[j])
    return reg.rho


@lru_cache(maxsize=None)
def ghz_vector(label: str) -> np.ndarray:
    s = BitString.from_str(label)
    q = s.width
    vec = np.zeros(1 << q, dtype=complex)
    rest = BitString(s.bits[1:]) if q > 1 else None
    low = rest.to_int() if rest else 0
    high = (1 << (q - 1)) | (rest.negate().to_int() if rest else 0)
    vec[low] += 1.0
    vec[high] += (-1.0) ** s[0]
    vec /= np.sqrt(2.0)
    vec.setflags(write=False)
    return vec


def ghz_projector(s: BitsLike) -> np.ndarray:
    v = ghz_vector(str(as_bits(s)))
    return np.outer(v, v.conj())


@lru_cache(maxsize=None)
def _basis_matrix(kind: Basis, q: int) -> np.ndarray:
    """Columns are the basis vectors in label order."""
    if kind is Basis.Z:
        return np.eye(1 << q, dtype=complex)
    if kind is Basis.X:
        out = np.array([[1.0 + 0j]])
        for _ in range(q):
            out = np.kron(out, H)
        return out
    return np.stack([ghz_vector(str(BitString.from_int(i, q))) for i in range(1 << q)], axis=1)


def born_distribution(rho: np.ndarray, basis) -> OutcomeDistribution:
    basis = parse_basis(basis)
    if basis is Basis.EIGEN:
        raise UsageError("the oracle measures in Z, X or GHZ explicitly")
    dim = rho.shape[0]
    q = int(round(np.log2(dim)))
    if rho.shape != (dim, dim) or (1 << q) != dim:
        raise UsageError(f"not a qubit density matrix: shape {rho.shape}")
    b = _basis_matrix(basis, q)
    probs = np.einsum("ki,kl,li->i", b.conj(), rho, b).real
    return OutcomeDistribution(q, probs, basis=basis)


def ghz_overlap(x: BitsLike, s: BitsLike) -> float:
    """|<x+|Phi_s>|^2 by explicit inner product."""
    x, s = as_bits(x), as_bits(s)
    if x.width != s.width:
        raise UsageError("x and s need equal widths")
    xplus = _basis_matrix(Basis.X, x.width)[:, x.to_int()]
    return float(abs(np.vdot(xplus, ghz_vector(str(s)))) ** 2)


def oracle_dist(circuit, basis, n: int, theta) -> OutcomeDistribution:
    """Oracle counterpart of :func:`starqnt.dists.meas_dist` (root 0)."""
    circuit, basis = parse_circuit(circuit), parse_basis(basis)
    if basis is Basis.EIGEN:
        basis = Basis.GHZ if circuit in (Circuit.IE, Circuit.BF) else Basis.Z
    return born_distribution(run_circuit(circuit, n, theta), basis)


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    herm = np.max(np.abs(rho - rho.conj().T)) < 1e-12
    trace = abs(np.trace(rho) - 1.0) < 1e-12
    psd = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() > -tol
    return bool(herm and trace and psd)
