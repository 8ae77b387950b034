"""Arithmetic over the prime field F_p.

Field elements are machine integers in [0, p-1]; vectors are numpy arrays
with the same canonical embedding into the integers. The embedding is fixed
once and for all so that mod-p congruences and integer lattice arithmetic
can be mixed freely.
"""

from dataclasses import dataclass

import numpy as np

# products of two elements must fit in int64 without overflow
MAX_P = 1 << 15


def _is_prime(p):
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class Prime:
    """A validated prime modulus p with 2 <= p <= 2**15."""

    p: int

    def __post_init__(self):
        p = self.p
        if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
            raise ValueError("p must be an integer")
        if p > MAX_P:
            raise ValueError(f"p = {p} exceeds the supported bound {MAX_P}")
        if not _is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        object.__setattr__(self, "p", int(p))

    def __int__(self):
        return self.p


def _as_modulus(p) -> int:
    return p.p if isinstance(p, Prime) else Prime(p).p


def fadd(a, b, p):
    """(a + b) mod p."""
    return (a + b) % _as_modulus(p)


def fsub(a, b, p):
    """(a - b) mod p."""
    return (a - b) % _as_modulus(p)


def fmul(a, b, p):
    """(a * b) mod p."""
    return (a * b) % _as_modulus(p)


def finv(a, p):
    """Multiplicative inverse of a mod p (Fermat); a must be nonzero."""
    m = _as_modulus(p)
    a = int(a) % m
    if a == 0:
        raise ZeroDivisionError("no inverse of zero")
    return pow(a, m - 2, m)


def mod_p(v, p):
    """Coordinate-wise canonical residue in [0, p-1].

    Negative inputs map to the nonnegative representative, e.g. -1 -> p-1.
    Accepts scalars or array-likes; returns int64 arrays for vector input.
    """
    m = _as_modulus(p)
    if np.isscalar(v):
        return int(v) % m
    return np.asarray(v, dtype=np.int64) % m


def validate_field_vec(v, p) -> np.ndarray:
    """Check every entry is an integer in [0, p-1]; returns the int64 array."""
    m = _as_modulus(p)
    raw = np.asarray(v)
    if not np.issubdtype(raw.dtype, np.integer):
        if not np.all(raw == np.floor(raw)):
            raise ValueError("entries must be integers")
    arr = raw.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= m):
        raise ValueError(f"entries outside [0, {m - 1}]")
    return arr
