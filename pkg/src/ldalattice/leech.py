"""The scaled Leech lattice and block-diagonal shaping lattices.

Holds a lower-triangular integer generator of the Leech lattice scaled by
sqrt(8) (so every squared norm is an integer multiple of 16 and the
minimum squared norm is 32), validates its identity numerically, and
assembles the direct-sum shaping generator diag(alpha*G24, ..., alpha*G24)
with block-wise closest-point quantization.
"""

import numpy as np

from .field import Prime
from .lattice import (
    TriangularGen,
    _batch_quantize,
    enumerate_within,
    save_generator,
)

# Lower-triangular generator of sqrt(8) * Leech. Rows 0-23 are basis
# vectors; diagonal (8,4,...,2,...,1), determinant 2**36.
_G24_ROWS = (
    ( 8,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  2,  2,  2,  2,  2,  2,  2,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  2,  2,  2,  0,  0,  0,  0,  2,  2,  2,  2,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  2,  0,  0,  2,  2,  0,  0,  2,  2,  0,  0,  2,  2,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  0,  2,  0,  2,  0,  2,  0,  2,  0,  2,  0,  2,  0,  2,  0,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  0,  0,  2,  2,  0,  0,  2,  2,  0,  0,  2,  2,  0,  0,  2,  0,  0,  0,  0,  0,  0,  0,  0),
    ( 4,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  4,  0,  0,  0,  0,  0,  0,  0),
    ( 2,  0,  2,  0,  2,  0,  0,  2,  2,  2,  0,  0,  0,  0,  0,  0,  2,  2,  0,  0,  0,  0,  0,  0),
    ( 2,  0,  0,  2,  2,  2,  0,  0,  2,  0,  2,  0,  0,  0,  0,  0,  2,  0,  2,  0,  0,  0,  0,  0),
    ( 2,  2,  0,  0,  2,  0,  2,  0,  2,  0,  0,  2,  0,  0,  0,  0,  2,  0,  0,  2,  0,  0,  0,  0),
    ( 0,  2,  2,  2,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0),
    ( 0,  2,  2,  2,  2,  0,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0),
    ( 0,  2,  2,  2,  2,  0,  0,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0,  0,  0,  2,  0),
    (-3,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1),
)

G24_MIN_SQ_NORM = 32
G24_DET = 2 ** 36


class LeechValidationError(Exception):
    """The embedded generator failed an identity check."""


class LeechGen:
    """Validated scaled-Leech generator; g24 is the 24x24 integer matrix."""

    def __init__(self, g24):
        self.g24 = np.asarray(g24, dtype=np.int64)
        self.gen = TriangularGen(self.g24)


def g24_matrix():
    return np.array(_G24_ROWS, dtype=np.int64)


def validate_g24(mat, combos=1000, seed=24) -> dict:
    """Run the full identity suite; returns the measured statistics.

    Checks: triangularity and positive diagonal, determinant 2**36,
    squared norms of all rows and of random integer combinations divisible
    by 16, minimum squared norm exactly 32 by bounded enumeration, and the
    per-column nonzero counts (average 5.625, min 1, max 21).
    """
    try:
        gen = TriangularGen(mat)
    except ValueError as exc:
        raise LeechValidationError(str(exc)) from exc
    if gen.n != 24:
        raise LeechValidationError(f"expected 24 dims, got {gen.n}")
    det = gen.volume()
    if det != G24_DET:
        raise LeechValidationError(f"determinant {det} != 2**36")

    m = gen.block
    norms = np.einsum("ij,ij->i", m, m)
    if np.any(norms % 16 != 0):
        raise LeechValidationError("a generator row has norm not 0 mod 16")
    rng = np.random.default_rng(seed)
    Z = rng.integers(-4, 5, size=(combos, 24))
    V = Z @ m
    vn = np.einsum("ij,ij->i", V, V)
    if np.any(vn % 16 != 0):
        raise LeechValidationError("random combination norm not 0 mod 16")

    pts, d2 = enumerate_within(gen, G24_MIN_SQ_NORM + 0.5)
    nonzero = d2[d2 > 0.5]
    if nonzero.size == 0 or int(nonzero.min()) != G24_MIN_SQ_NORM:
        raise LeechValidationError("minimum squared norm is not 32")
    shell = int(np.count_nonzero(np.abs(d2 - G24_MIN_SQ_NORM) < 0.5))

    col_nz = np.count_nonzero(m, axis=0)
    stats = {
        "det": det,
        "col_nonzero_avg": col_nz.sum() / 24.0,
        "col_nonzero_min": int(col_nz.min()),
        "col_nonzero_max": int(col_nz.max()),
        "min_sq_norm": int(nonzero.min()),
        "min_shell_count": shell,
    }
    if stats["col_nonzero_avg"] != 5.625:
        raise LeechValidationError("column nonzero average is not 5.625")
    if stats["col_nonzero_min"] != 1 or stats["col_nonzero_max"] != 21:
        raise LeechValidationError("column nonzero min/max mismatch")
    return stats


_CACHE = None


def load_g24(validate=True) -> LeechGen:
    """The embedded constant; all identity invariants verified on first load."""
    global _CACHE
    if _CACHE is not None:
        return _CACHE
    mat = g24_matrix()
    if validate:
        validate_g24(mat)
    _CACHE = LeechGen(mat)
    return _CACHE


def export_g24(path):
    """Write G24 in the generator file format for external verification."""
    save_generator(load_g24().gen, path)


class ShapingLattice:
    """Shaping by the direct sum of ell copies of alpha * (sqrt(8) Leech).

    The shaping lattice proper is Lambda = p * Gamma where Gamma has the
    block-diagonal generator T = diag(alpha*G24, ..., alpha*G24); the
    quantizer splits into ell independent 24-dimensional searches.
    """

    def __init__(self, ell, alpha, p):
        if int(ell) < 1:
            raise ValueError("ell must be >= 1")
        if int(alpha) < 1:
            raise ValueError("alpha must be a positive integer")
        self.ell = int(ell)
        self.alpha = int(alpha)
        self.p = p if isinstance(p, Prime) else Prime(p)
        block = self.alpha * load_g24().g24
        self.T = TriangularGen.block_diagonal(block, self.ell)
        self.n = self.T.n
        # generator of Lambda = p * Gamma, kept integer for exact folding
        self._lambda_gen = self.T.scaled(self.p.p)

    def s_set_size(self):
        """|S| = prod of diagonal bounds = alpha^n * (2^36)^ell (exact)."""
        return self.T.volume()


def quantize_shaping(S: ShapingLattice, y):
    """Closest point of Lambda = p*Gamma to y, block by block (exact)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (S.n,):
        raise ValueError(f"expected a length-{S.n} vector")
    Z = _batch_quantize(S._lambda_gen, y[None, :])
    b = S._lambda_gen.block
    return (Z.reshape(-1, b.shape[0]) @ b).reshape(S.n)


def s_set_bounds(S: ShapingLattice):
    """Per-coordinate exclusive upper bounds alpha*g_i, tiled ell times."""
    return S.T.diag.copy()
