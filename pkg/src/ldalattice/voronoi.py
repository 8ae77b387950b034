"""Voronoi constellation encoding and demapping.

Messages (u, s) index cosets of Lambda = p*Gamma inside the Construction-A
lattice Lambda_f = C + p Z^n: the point c + p*s, with c the systematic
codeword of u and s bounded coordinate-wise by Gamma's diagonal, is a
complete-set-of-coset-leaders parameterization. Encoding folds into the
Voronoi region of Lambda; demapping inverts by mod-p reduction plus a
backward substitution on the triangular generator. Generic over any
lower-triangular integer Gamma; the Leech direct sum is one configuration.
"""

import math

import numpy as np

from .field import Prime, mod_p
from .lattice import TriangularGen, _batch_quantize, _coeff_to_point
from .ldpc import ParityCheck, encode_systematic


class DemapError(ValueError):
    pass


class Message:
    """Information unit: u over F_p^k plus per-coordinate shifts s,
    0 <= s_i < t_ii."""

    def __init__(self, u, s):
        self.u = np.asarray(u, dtype=np.int64)
        self.s = np.asarray(s, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, Message):
            return NotImplemented
        return (np.array_equal(self.u, other.u)
                and np.array_equal(self.s, other.s))

    def __repr__(self):
        return f"Message(u={self.u.tolist()}, s={self.s.tolist()})"


class VoronoiCode:
    """A nested pair Lambda = p*Gamma inside Lambda_f = C + p Z^n.

    gamma may be a TriangularGen or anything exposing one as `.T`
    (e.g. a block-diagonal shaping lattice); diagonal bounds, carrier
    cardinality, and the exact quantizer all derive from it.
    """

    def __init__(self, H: ParityCheck, gamma):
        self.H = H
        self.p = H.p
        self.n = H.n
        self.k = H.k
        if isinstance(gamma, TriangularGen):
            self.gamma = gamma
        else:
            other_p = getattr(gamma, "p", None)
            if other_p is not None and other_p.p != self.p.p:
                raise ValueError("shaping lattice and code disagree on p")
            self.gamma = gamma.T
        if self.gamma.n != self.n:
            raise ValueError(
                f"Gamma dimension {self.gamma.n} != blocklength {self.n}")
        self.bounds = self.gamma.diag.copy()
        # Lambda = p * Gamma, kept as an integer generator for exact folding
        self._lambda_gen = self.gamma.scaled(self.p.p)

    def cardinality(self):
        """M = p^k * |S| exactly (python int; may be astronomically large)."""
        return self.p.p ** self.k * self.gamma.volume()

    def quantize_lambda(self, y):
        """Closest point of Lambda = p*Gamma to y (exact, integer output)."""
        y = np.asarray(y, dtype=np.float64)
        Z = _batch_quantize(self._lambda_gen, y[None, :])
        return _coeff_to_point(self._lambda_gen, Z)[0]


def code_rate(code: VoronoiCode):
    """(log2 M)/n in bits per dimension, computed in log space."""
    log2_m = code.k * math.log2(code.p.p) + float(
        np.log2(code.bounds.astype(np.float64)).sum())
    return log2_m / code.n


def sample_message(code: VoronoiCode, rng) -> Message:
    """Uniform message: u over F_p^k, each s_i over [0, t_ii)."""
    u = rng.integers(0, code.p.p, size=code.k)
    s = rng.integers(0, code.bounds)
    return Message(u, s)


def coset_leader(code: VoronoiCode, m: Message):
    """x' = c + p*s, the Lemma-1 representative of the message's coset."""
    if m.u.shape != (code.k,):
        raise ValueError(f"u must have length {code.k}")
    if m.s.shape != (code.n,):
        raise ValueError(f"s must have length {code.n}")
    if np.any(m.s < 0) or np.any(m.s >= code.bounds):
        raise ValueError("s out of the diagonal bounds")
    c = encode_systematic(code.H, m.u)
    return c + code.p.p * m.s


def encode(code: VoronoiCode, m: Message):
    """Constellation point x = x' - Q_{V(Lambda)}(x'), a minimum-coset
    representative in Lambda_f."""
    xp = coset_leader(code, m)
    return xp - code.quantize_lambda(xp)


def demap(code: VoronoiCode, x) -> Message:
    """Invert encode: u from mod-p reduction, s by backward substitution.

    Accepts any integer vector in Lambda_f's ambient space and depends only
    on the coset of x modulo Lambda; non-integer input is rejected with
    "input not a constellation point".
    """
    x = np.asarray(x)
    if x.shape != (code.n,):
        raise ValueError(f"expected a length-{code.n} vector")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(x == np.floor(x)):
            raise DemapError("input not a constellation point")
        x = x.astype(np.int64)
    x = x.astype(np.int64)
    p = code.p.p
    c = mod_p(x, code.p)
    u = c[:code.k]
    num = x - c
    if np.any(num % p != 0):
        raise DemapError("input not a constellation point")
    r = num // p

    # r = s - z Gamma; solve from the last coordinate up (Gamma is lower
    # triangular, so coordinate i only sees z_j with j > i)
    B = code.gamma.block
    b = B.shape[0]
    R = r.reshape(code.gamma.ell, b)
    Z = np.zeros_like(R)
    S = np.zeros_like(R)
    for i in range(b - 1, -1, -1):
        acc = R[:, i] + Z[:, i + 1:] @ B[i + 1:, i]
        S[:, i] = acc % B[i, i]
        q = S[:, i] - acc
        if np.any(q % B[i, i] != 0):
            raise DemapError("input not a constellation point")
        Z[:, i] = q // B[i, i]
    return Message(u, S.reshape(code.n))


def save_messages(messages, path):
    """One record per line: the k symbols of u then the n entries of s,
    space separated."""
    with open(path, "w") as fh:
        for m in messages:
            parts = [str(int(v)) for v in m.u] + [str(int(v)) for v in m.s]
            fh.write(" ".join(parts) + "\n")


def load_messages(code: VoronoiCode, path):
    out = []
    with open(path) as fh:
        for lineno, ln in enumerate(fh, 1):
            ln = ln.strip()
            if not ln:
                continue
            vals = [int(v) for v in ln.split()]
            if len(vals) != code.k + code.n:
                raise ValueError(
                    f"{path}:{lineno}: expected {code.k + code.n} integers")
            out.append(Message(vals[:code.k], vals[code.k:]))
    return out
