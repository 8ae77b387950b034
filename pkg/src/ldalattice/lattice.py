"""Integer lattice machinery on lower-triangular generators.

Covers volume and volume-to-noise ratio bookkeeping, exact closest-point
search (depth-first Schnorr-Euchner enumeration working directly on the
triangular generator, warm-started at the Babai point), bounded-radius
enumeration, and Monte-Carlo estimation of the shaping gain.

Generators may be stored dense or as ell repeated diagonal blocks; the
block form keeps direct-sum lattices (used for shaping) linear in n.
"""

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        def wrap(f):
            return f
        return wrap

TWO_PI_E = 2.0 * math.pi * math.e

# refuse to materialize dense matrices beyond this dimension
DENSE_LIMIT = 4096


class TriangularGen:
    """Lower-triangular integer generator with positive diagonal.

    Rows are basis vectors: the lattice is {z @ mat : z integer}.
    Either holds a dense n x n matrix, or a 24-style block replicated
    ell times along the diagonal (block-diagonal compact form).
    """

    def __init__(self, mat):
        mat = np.asarray(mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("generator must be square")
        if not np.issubdtype(mat.dtype, np.integer):
            if not np.all(mat == np.floor(mat)):
                raise ValueError("generator entries must be integers")
        mat = mat.astype(np.int64)
        n = mat.shape[0]
        if np.any(mat[np.triu_indices(n, k=1)] != 0):
            raise ValueError("generator must be lower triangular")
        if np.any(np.diag(mat) <= 0):
            raise ValueError("diagonal entries must be positive")
        self._mat = mat
        self._block = None
        self.ell = 1
        self.n = n
        self.diag = np.diag(mat).copy()

    @classmethod
    def block_diagonal(cls, block, ell):
        """Generator of the ell-fold direct sum of the lattice of `block`."""
        if isinstance(block, TriangularGen):
            block = block.dense()
        base = cls(block)
        if ell < 1:
            raise ValueError("ell must be >= 1")
        if ell == 1:
            return base
        obj = cls.__new__(cls)
        obj._mat = None
        obj._block = base._mat
        obj.ell = int(ell)
        obj.n = base.n * int(ell)
        obj.diag = np.tile(base.diag, int(ell))
        return obj

    @property
    def is_block(self):
        return self._block is not None

    @property
    def block(self):
        """The repeated diagonal block (the whole matrix if dense)."""
        return self._mat if self._block is None else self._block

    @property
    def block_dim(self):
        return self.block.shape[0]

    def dense(self):
        """Materialize the full matrix (guarded against huge n)."""
        if self._mat is not None:
            return self._mat
        if self.n > DENSE_LIMIT:
            raise ValueError(
                f"refusing to build dense {self.n}x{self.n} matrix; "
                "use the block form"
            )
        b = self._block.shape[0]
        out = np.zeros((self.n, self.n), dtype=np.int64)
        for i in range(self.ell):
            out[i * b:(i + 1) * b, i * b:(i + 1) * b] = self._block
        return out

    def scaled(self, factor):
        """Generator of the lattice scaled by a positive integer factor."""
        factor = int(factor)
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.is_block:
            return TriangularGen.block_diagonal(self._block * factor, self.ell)
        return TriangularGen(self._mat * factor)

    def volume(self):
        """Fundamental volume = product of diagonal entries (exact int)."""
        v = 1
        for t in self.block.diagonal():
            v *= int(t)
        return v ** self.ell

    def normalized_volume(self):
        """vol^(2/n), computed in log space to dodge bigint overflow."""
        log_vol = float(np.log(self.diag.astype(np.float64)).sum())
        return math.exp(2.0 * log_vol / self.n)

    def __eq__(self, other):
        if not isinstance(other, TriangularGen):
            return NotImplemented
        return (self.n == other.n and self.ell == other.ell
                and np.array_equal(self.block, other.block))


def volume(T: TriangularGen):
    return T.volume()


def vnr(normalized_volume, sigma2):
    """Volume-to-noise ratio vol^(2/n) / (2*pi*e*sigma2), linear scale."""
    if normalized_volume <= 0 or sigma2 <= 0:
        raise ValueError("normalized volume and sigma2 must be positive")
    return normalized_volume / (TWO_PI_E * sigma2)


def vnr_db(normalized_volume, sigma2):
    return 10.0 * math.log10(vnr(normalized_volume, sigma2))


def sigma2_for_vnr(normalized_volume, vnr_linear):
    """Noise variance at which the lattice operates at the given VNR."""
    return normalized_volume / (TWO_PI_E * vnr_linear)


def poltyrev_sigma_max(normalized_volume):
    """Largest per-dimension noise variance with vanishing error possible."""
    if normalized_volume <= 0:
        raise ValueError("normalized volume must be positive")
    return normalized_volume / TWO_PI_E


@njit(cache=True)
def _cvp_one(T, y, z_out):
    """Exact closest point by depth-first enumeration, best-first child order.

    Works level n-1 .. 0 on the lower-triangular T; the first leaf reached
    is the Babai nearest-plane point, which seeds the pruning radius.
    When the origin ties the optimum (relative tolerance 1e-12) the origin
    wins; other ties keep the first point found.  Preferring the origin
    makes folding idempotent: quantizing u - closest(u) returns 0 even
    when u - closest(u) sits exactly on the Voronoi boundary, which
    integer constellation points regularly do.
    """
    n = T.shape[0]
    e = np.zeros(n)
    zc = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    pd = np.zeros(n)
    yn = 0.0
    for i in range(n):
        yn += y[i] * y[i]
    best = np.inf
    j = n - 1
    pd[j] = 0.0
    e[j] = y[j] / T[j, j]
    zc[j] = np.int64(np.floor(e[j] + 0.5))
    step[j] = 1 if e[j] - zc[j] >= 0 else -1
    while True:
        diff = T[j, j] * (zc[j] - e[j])
        d = pd[j] + diff * diff
        if d < best:
            if j > 0:
                j -= 1
                pd[j] = d
                r = y[j]
                for i in range(j + 1, n):
                    r -= zc[i] * T[i, j]
                e[j] = r / T[j, j]
                zc[j] = np.int64(np.floor(e[j] + 0.5))
                step[j] = 1 if e[j] - zc[j] >= 0 else -1
            else:
                best = d
                for i in range(n):
                    z_out[i] = zc[i]
                zc[0] += step[0]
                step[0] = -step[0] - (1 if step[0] >= 0 else -1)
        else:
            # children are visited in increasing partial distance, so the
            # whole remaining sibling list is pruned at once
            if j == n - 1:
                break
            j += 1
            zc[j] += step[j]
            step[j] = -step[j] - (1 if step[j] >= 0 else -1)
    if best >= yn - 1e-12 * max(yn, 1.0):
        for i in range(n):
            z_out[i] = 0
        return yn
    return best


@njit(cache=True)
def _cvp_batch(T, Y):
    m = Y.shape[0]
    n = T.shape[0]
    Z = np.zeros((m, n), dtype=np.int64)
    D = np.zeros(m)
    for t in range(m):
        D[t] = _cvp_one(T, Y[t], Z[t])
    return Z, D


@njit(cache=True)
def _enum_radius(T, y, r2, cap):
    """All lattice points with ||zT - y||^2 <= r2; stores up to cap of them.

    Returns the true count even when it exceeds cap, so callers can retry
    with a larger buffer.
    """
    n = T.shape[0]
    e = np.zeros(n)
    zc = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    pd = np.zeros(n)
    out = np.zeros((cap, n), dtype=np.int64)
    dists = np.zeros(cap)
    count = 0
    j = n - 1
    pd[j] = 0.0
    e[j] = y[j] / T[j, j]
    zc[j] = np.int64(np.floor(e[j] + 0.5))
    step[j] = 1 if e[j] - zc[j] >= 0 else -1
    while True:
        diff = T[j, j] * (zc[j] - e[j])
        d = pd[j] + diff * diff
        if d <= r2:
            if j > 0:
                j -= 1
                pd[j] = d
                r = y[j]
                for i in range(j + 1, n):
                    r -= zc[i] * T[i, j]
                e[j] = r / T[j, j]
                zc[j] = np.int64(np.floor(e[j] + 0.5))
                step[j] = 1 if e[j] - zc[j] >= 0 else -1
            else:
                if count < cap:
                    for i in range(n):
                        out[count, i] = zc[i]
                    dists[count] = d
                count += 1
                zc[0] += step[0]
                step[0] = -step[0] - (1 if step[0] >= 0 else -1)
        else:
            if j == n - 1:
                break
            j += 1
            zc[j] += step[j]
            step[j] = -step[j] - (1 if step[j] >= 0 else -1)
    return count, out, dists


def _batch_quantize(T: TriangularGen, Y):
    """Closest-point coefficients for a batch of targets (rows of Y)."""
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if T.is_block:
        b = T.block_dim
        m = Y.shape[0]
        Yb = Y.reshape(m * T.ell, b)
        Zb, _ = _cvp_batch(T.block.astype(np.float64), Yb)
        return Zb.reshape(m, T.n)
    Z, _ = _cvp_batch(T.block.astype(np.float64), Y)
    return Z


def _coeff_to_point(T: TriangularGen, Z):
    if T.is_block:
        b = T.block_dim
        shape = Z.shape
        Xb = Z.reshape(-1, b) @ T.block
        return Xb.reshape(shape)
    return Z @ T.block


def closest_point(T: TriangularGen, y):
    """Exact nearest lattice point to y; returns (z, z @ T)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (T.n,):
        raise ValueError(f"expected a length-{T.n} vector")
    Z = _batch_quantize(T, y[None, :])
    z = Z[0]
    return z, _coeff_to_point(T, Z)[0]


def babai_round(T: TriangularGen, y):
    """Nearest-plane successive rounding; a fast, possibly suboptimal point."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (T.n,):
        raise ValueError(f"expected a length-{T.n} vector")
    B = T.block.astype(np.float64)
    b = B.shape[0]
    yb = y.reshape(T.ell, b)
    Z = np.zeros((T.ell, b), dtype=np.int64)
    for j in range(b - 1, -1, -1):
        resid = yb[:, j] - Z[:, j + 1:] @ B[j + 1:, j]
        Z[:, j] = np.floor(resid / B[j, j] + 0.5).astype(np.int64)
    return (Z @ T.block).reshape(T.n)


def enumerate_within(T: TriangularGen, radius_sq, center=None):
    """All lattice points within sqrt(radius_sq) of center (default origin).

    Returns (points, squared_distances) sorted in enumeration order.
    Dense generators only; intended for identity checks in modest dims.
    """
    if T.is_block:
        raise ValueError("enumeration requires a dense generator")
    if center is None:
        center = np.zeros(T.n)
    center = np.asarray(center, dtype=np.float64)
    Tf = T.block.astype(np.float64)
    cap = 4096
    while True:
        count, Z, D = _enum_radius(Tf, center, float(radius_sq), cap)
        if count <= cap:
            break
        cap = int(count) + 1
    Z = Z[:count]
    return Z @ T.block, D[:count].copy()


@dataclass(frozen=True)
class ShapingGainEstimate:
    gamma_db: float
    ci_low_db: float
    ci_high_db: float
    samples: int
    second_moment: float   # estimated E ||x||^2 over the Voronoi region
    stderr: float


def _shaping_chunk(T, seed_key, count):
    rng = np.random.default_rng(seed_key)
    U = rng.random((count, T.n))
    if T.is_block:
        b = T.block_dim
        Y = (U.reshape(-1, b) @ T.block).reshape(count, T.n)
    else:
        Y = U @ T.block
    Z = _batch_quantize(T, Y)
    X = Y - _coeff_to_point(T, Z)
    sq = np.einsum("ij,ij->i", X, X)
    return float(sq.sum()), float((sq * sq).sum()), count


def shaping_gain_mc(T: TriangularGen, samples, rng, chunk_size=20000,
                    workers=1):
    """Monte-Carlo shaping gain of the Voronoi region of T, in dB.

    Samples uniformly in the fundamental parallelepiped, folds into the
    Voronoi region by subtracting the closest lattice point, and averages
    the squared norm. Chunk RNG streams are keyed by (seed, chunk index),
    so the result is identical for any worker count.
    """
    samples = int(samples)
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(np.iinfo(np.int64).max))
    else:
        seed = int(rng)
    counts = []
    done = 0
    while done < samples:
        c = min(chunk_size, samples - done)
        counts.append(c)
        done += c
    jobs = [((seed, idx), c) for idx, c in enumerate(counts)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_shaping_chunk_star,
                                  [(T, key, c) for key, c in jobs]))
    else:
        stats = [_shaping_chunk(T, key, c) for key, c in jobs]
    s1 = sum(s[0] for s in stats)
    s2 = sum(s[1] for s in stats)
    nsamp = sum(s[2] for s in stats)
    mean = s1 / nsamp
    var = max(s2 / nsamp - mean * mean, 0.0)
    se = math.sqrt(var / nsamp)
    nu = T.normalized_volume()
    gamma = (T.n / 12.0) * nu / mean
    lo = (T.n / 12.0) * nu / (mean + 1.96 * se)
    hi = (T.n / 12.0) * nu / max(mean - 1.96 * se, 1e-300)
    return ShapingGainEstimate(
        gamma_db=10.0 * math.log10(gamma),
        ci_low_db=10.0 * math.log10(lo),
        ci_high_db=10.0 * math.log10(hi),
        samples=nsamp,
        second_moment=mean,
        stderr=se,
    )


def _shaping_chunk_star(args):
    return _shaping_chunk(*args)


def save_generator(T: TriangularGen, path):
    """Plain-text format: first line n, then n rows of n integers."""
    mat = T.dense()
    with open(path, "w") as fh:
        fh.write(f"{T.n}\n")
        for row in mat:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def load_generator(path) -> TriangularGen:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty generator file")
    n = int(tokens[0])
    vals = tokens[1:]
    if len(vals) != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, got {len(vals)}")
    mat = np.array([int(v) for v in vals], dtype=np.int64).reshape(n, n)
    return TriangularGen(mat)
