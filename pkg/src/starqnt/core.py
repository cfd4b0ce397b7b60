"""Bit-string primitives, the channel parameter vector and the Bernoulli joint law.

Bit 0 is the leftmost character of a label and the most significant bit of
its integer encoding, so ``BitString.from_str("011").to_int() == 3`` and
``BitString.from_str("011")[0] == 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

MAX_WIDTH = 20


class UsageError(ValueError):
    """Raised when an operation is called outside its domain."""


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise UsageError("bit strings need width >= 1")
        if any(b not in (0, 1) for b in self.bits):
            raise UsageError(f"non-binary digit in {self.bits!r}")

    @classmethod
    def from_str(cls, label: str) -> "BitString":
        return cls(tuple(int(c) for c in label))

    @classmethod
    def from_int(cls, value: int, width: int) -> "BitString":
        if width < 1 or not 0 <= value < (1 << width):
            raise UsageError(f"{value} does not fit in {width} bits")
        return cls(tuple((value >> (width - 1 - j)) & 1 for j in range(width)))

    @property
    def width(self) -> int:
        return len(self.bits)

    def to_int(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def negate(self) -> "BitString":
        return BitString(tuple(1 - b for b in self.bits))

    def __xor__(self, other: "BitString") -> "BitString":
        if other.width != self.width:
            raise UsageError("xor of bit strings with different widths")
        return BitString(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def __getitem__(self, item):
        return self.bits[item]

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


BitsLike = Union[BitString, str, Sequence[int]]


def as_bits(s: BitsLike) -> BitString:
    if isinstance(s, BitString):
        return s
    if isinstance(s, str):
        return BitString.from_str(s)
    return BitString(tuple(int(b) for b in s))


@dataclass(frozen=True)
class ParamVector:
    """No-flip probabilities, one per channel; ``theta[j]`` belongs to link (v_j, v_n)."""

    theta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if len(self.theta) < 2:
            raise UsageError("a star needs at least two channels")
        if any(not 0.0 <= t <= 1.0 for t in self.theta):
            raise UsageError(f"theta outside [0, 1]: {self.theta}")

    @classmethod
    def uniform(cls, n: int, value: float) -> "ParamVector":
        return cls((value,) * n)

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def flip(self) -> np.ndarray:
        return 1.0 - self.array()

    def array(self) -> np.ndarray:
        return np.array(self.theta, dtype=float)


def as_theta(theta, *, min_len: int = 1) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    if isinstance(theta, ParamVector):
        return theta.array()
    arr = np.asarray(theta, dtype=float).reshape(-1)
    if arr.size < min_len:
        raise UsageError(f"need at least {min_len} parameters, got {arr.size}")
    if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
        raise UsageError(f"theta outside [0, 1]: {arr}")
    return arr


@lru_cache(maxsize=None)
def bit_table(width: int) -> np.ndarray:
    """Rows are the 2**width labels in integer order; column j is bit j."""
    if not 1 <= width <= MAX_WIDTH:
        raise UsageError(f"width must be in [1, {MAX_WIDTH}], got {width}")
    idx = np.arange(1 << width)
    shifts = np.arange(width - 1, -1, -1)
    table = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)
    table.setflags(write=False)
    return table


def parity(s: BitsLike) -> int:
    return sum(as_bits(s).bits) % 2


def alpha(s: BitsLike, theta) -> float:
    """Probability of the flip pattern ``s`` when bit j flips with probability 1 - theta[j]."""
    s = as_bits(s)
    th = as_theta(theta)
    if th.size != s.width:
        raise UsageError(f"width {s.width} does not match {th.size} parameters")
    out = 1.0
    for b, t in zip(s.bits, th):
        out *= (1.0 - t) if b else t
    return out


def alpha_grad(s: BitsLike, theta, j: int) -> float:
    s = as_bits(s)
    th = as_theta(theta)
    if th.size != s.width:
        raise UsageError(f"width {s.width} does not match {th.size} parameters")
    if not 0 <= j < th.size:
        raise UsageError(f"parameter index {j} out of range")
    out = 1.0 - 2.0 * s[j]
    for i, (b, t) in enumerate(zip(s.bits, th)):
        if i != j:
            out *= (1.0 - t) if b else t
    return out


def alpha_table(theta) -> np.ndarray:
    """``alpha`` evaluated on every label of width ``len(theta)``, integer order."""
    th = as_theta(theta)
    bits = bit_table(th.size)
    return np.where(bits == 1, 1.0 - th, th).prod(axis=1)


def alpha_grad_table(theta) -> np.ndarray:
    """Shape (2**k, k): entry [s, j] is the partial of alpha(s, theta) in theta[j]."""
    th = as_theta(theta)
    k = th.size
    bits = bit_table(k)
    factors = np.where(bits == 1, 1.0 - th, th)
    out = np.empty(factors.shape)
    for j in range(k):
        rest = np.delete(factors, j, axis=1).prod(axis=1) if k > 1 else np.ones(len(bits))
        out[:, j] = (1.0 - 2.0 * bits[:, j]) * rest
    return out


def parity_table(width: int) -> np.ndarray:
    return bit_table(width).sum(axis=1) % 2
