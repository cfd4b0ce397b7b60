"""Seeded Monte Carlo draws from outcome tables.

Generator: ``numpy.random.Generator(numpy.random.PCG64(seed))``. Draws use
inverse-CDF lookup (``searchsorted`` on the cumulative table) over one
``Generator.random`` call, so a fixed numpy major version reproduces
datasets bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BitString, UsageError
from .dists import Basis, Circuit, OutcomeDistribution, parse_basis, parse_circuit

GENERATOR = "numpy.random.PCG64"
MASK64 = (1 << 64) - 1

# child_seed(0, 0, 0, 0); frozen so a change in the mixer is caught by the tests
CHILD_SEED_ZERO = 0x2130748AAAC80268


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def child_seed(master: int, protocol_idx: int, trial_idx: int, step_idx: int) -> int:
    """64-bit seed for one sampling stream.

    Each field is folded in with a SplitMix64 finalizer round:
    ``h = mix(h ^ field)`` starting from ``h = mix(master)``.
    """
    h = _splitmix64(int(master) & MASK64)
    for field in (protocol_idx, trial_idx, step_idx):
        h = _splitmix64(h ^ (int(field) & MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


@dataclass(frozen=True, eq=False)
class Dataset:
    width: int
    outcomes: np.ndarray
    seed: int
    circuit: Optional[Circuit] = None
    basis: Optional[Basis] = None
    root: int = 0

    def __post_init__(self):
        out = np.array(self.outcomes, dtype=np.int64).reshape(-1)
        if out.size and (out.min() < 0 or out.max() >= (1 << self.width)):
            raise UsageError(f"outcome outside width {self.width}")
        out.setflags(write=False)
        object.__setattr__(self, "outcomes", out)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        meta = (self.width, self.seed, self.circuit, self.basis, self.root)
        return meta == (other.width, other.seed, other.circuit, other.basis, other.root) and bool(
            np.array_equal(self.outcomes, other.outcomes)
        )

    __hash__ = None

    @property
    def m(self) -> int:
        return int(self.outcomes.size)

    def bitstrings(self) -> list[BitString]:
        return [BitString.from_int(int(v), self.width) for v in self.outcomes]

    def frequencies(self) -> np.ndarray:
        if self.m == 0:
            raise UsageError("empty dataset")
        return np.bincount(self.outcomes, minlength=1 << self.width) / self.m

    def dumps(self) -> str:
        circuit = self.circuit.value if self.circuit else "-"
        basis = self.basis.value if self.basis else "-"
        lines = [f"# {circuit} {basis} {self.width} {self.m} {self.seed} {self.root}"]
        lines += [str(b) for b in self.bitstrings()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Dataset":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise UsageError("missing dataset header")
        circuit, basis, width, m, seed, root = lines[0][1:].split()
        width, m = int(width), int(m)
        body = lines[1:]
        if len(body) != m or any(len(b) != width for b in body):
            raise UsageError("dataset body does not match header")
        return cls(
            width=width,
            outcomes=[BitString.from_str(b).to_int() for b in body],
            seed=int(seed),
            circuit=None if circuit == "-" else parse_circuit(circuit),
            basis=None if basis == "-" else parse_basis(basis),
            root=int(root),
        )


def draw_indices(probs: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(m), side="right")
    return np.minimum(idx, probs.size - 1)


def draw_samples(dist: OutcomeDistribution, m: int, seed: int) -> Dataset:
    if m < 1:
        raise UsageError(f"need m >= 1 samples, got {m}")
    outcomes = draw_indices(dist.probs, m, make_rng(seed))
    return Dataset(dist.width, outcomes, int(seed), dist.circuit, dist.basis, dist.root)
