"""Dual-diagonal nonbinary LDPC codes over F_p.

The parity-check matrix is H = (L | R) with R dual-diagonal (nonzero main
diagonal, nonzero first subdiagonal, nothing else) and L column- and
row-regular. The structure gives forward-substitution encoding in linear
time and a Tanner graph that is kept free of 4-cycles.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .field import Prime, finv, validate_field_vec

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        def wrap(f):
            return f
        return wrap

REPAIR_ATTEMPTS = 10_000


class GirthError(RuntimeError):
    """Raised when 4-cycle-free construction fails within the attempt bound."""


@dataclass(frozen=True)
class CodeParams:
    """Dimension k, modulus p, left-block degrees (d_c, d_r), and RNG seed."""

    k: int
    p: Prime
    d_c: int
    d_r: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.p, Prime):
            object.__setattr__(self, "p", Prime(self.p))
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.d_c < 1 or self.d_r < 1:
            raise ValueError("degrees must be positive")
        if (self.k * (self.d_c + self.d_r)) % self.d_r != 0:
            raise ValueError("k*(d_c+d_r)/d_r is not an integer")

    @property
    def n(self):
        return self.k * (self.d_c + self.d_r) // self.d_r

    @property
    def rate(self):
        return Fraction(self.d_r, self.d_r + self.d_c)


class ParityCheck:
    """Sparse H = (L | R) held as per-row arrays.

    left_cols/left_coeffs are (n-k, d_r); diag_coeffs[i] multiplies column
    k+i; sub_coeffs[i] multiplies column k+i-1 (sub_coeffs[0] is unused
    since row 0 has no subdiagonal entry).
    """

    def __init__(self, params, left_cols, left_coeffs, diag_coeffs,
                 sub_coeffs):
        self.params = params
        self.p = params.p
        self.n = params.n
        self.k = params.k
        m = self.n - self.k
        self.left_cols = np.asarray(left_cols, dtype=np.int64).reshape(
            m, params.d_r)
        self.left_coeffs = np.asarray(left_coeffs, dtype=np.int64).reshape(
            m, params.d_r)
        self.diag_coeffs = np.asarray(diag_coeffs, dtype=np.int64)
        self.sub_coeffs = np.asarray(sub_coeffs, dtype=np.int64)
        pv = self.p.p
        if self.diag_coeffs.shape != (m,) or self.sub_coeffs.shape != (m,):
            raise ValueError("right-block coefficient arrays have wrong size")
        if np.any(self.diag_coeffs % pv == 0):
            raise ValueError("dual-diagonal entries must be nonzero")
        if np.any(self.sub_coeffs[1:] % pv == 0):
            raise ValueError("subdiagonal entries must be nonzero")
        self._inv_diag = np.array(
            [finv(int(c), self.p) for c in self.diag_coeffs], dtype=np.int64)

    @property
    def num_rows(self):
        return self.n - self.k

    @property
    def num_nonzeros(self):
        return self.params.d_c * self.k + 2 * (self.num_rows - 1) + 1

    def row_support(self, i):
        cols = sorted(int(c) for c in self.left_cols[i])
        if i == 0:
            return cols + [self.k]
        return cols + [self.k + i - 1, self.k + i]

    @property
    def rows(self):
        """Rows as lists of (column, coefficient), sorted by column."""
        out = []
        for i in range(self.num_rows):
            entries = [(int(c), int(h)) for c, h in
                       zip(self.left_cols[i], self.left_coeffs[i])]
            if i > 0:
                entries.append((self.k + i - 1, int(self.sub_coeffs[i])))
            entries.append((self.k + i, int(self.diag_coeffs[i])))
            entries.sort()
            out.append(entries)
        return out

    def validate(self):
        """Check every structural invariant; raises ValueError on failure."""
        m = self.num_rows
        k, d_c, d_r = self.k, self.params.d_c, self.params.d_r
        if np.any(self.left_cols < 0) or np.any(self.left_cols >= k):
            raise ValueError("left column index out of range")
        counts = np.bincount(self.left_cols.ravel(), minlength=k)
        if np.any(counts != d_c):
            raise ValueError("left block is not column-regular")
        for i in range(m):
            if len(set(self.left_cols[i].tolist())) != d_r:
                raise ValueError(f"row {i} repeats a left column")
        _check_girth(self.left_cols, m)
        return True


def _check_girth(left_cols, m):
    """No two rows may share two columns; adjacent rows already share one
    right column, so they may share no left column at all."""
    pair_seen = set()
    col_rows = {}
    for i in range(m):
        for c in left_cols[i]:
            col_rows.setdefault(int(c), []).append(i)
    for c, rows_list in col_rows.items():
        for a, b in itertools.combinations(sorted(set(rows_list)), 2):
            if b - a == 1:
                raise ValueError(
                    f"rows {a},{b} share left column {c} and a right column")
            if (a, b) in pair_seen:
                raise ValueError(f"rows {a},{b} share two left columns")
            pair_seen.add((a, b))
    return True


def _min_sq_dist_exhaustive(coeffs, p):
    """Minimum squared Euclidean distance of the single-parity-check code
    {x in F_p^t : sum h_i x_i = 0} under centered representatives."""
    t = len(coeffs)
    h = [int(c) % p for c in coeffs]
    inv_last = finv(h[-1], Prime(p))
    if t == 2:
        x1 = np.arange(1, p, dtype=np.int64)
        x2 = (-h[0] * x1 * inv_last) % p
        words = np.stack([x1, x2], axis=1)
    elif t == 3:
        g1, g2 = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
        x3 = (-(h[0] * g1 + h[1] * g2) * inv_last) % p
        words = np.stack([g1.ravel(), g2.ravel(), x3.ravel()], axis=1)
        words = words[np.any(words != 0, axis=1)]
    else:
        grids = np.meshgrid(*[np.arange(p)] * (t - 1), indexing="ij")
        free = np.stack([g.ravel() for g in grids], axis=1)
        acc = (free @ np.array(h[:-1])) % p
        last = (-acc * inv_last) % p
        words = np.concatenate([free, last[:, None]], axis=1)
        words = words[np.any(words != 0, axis=1)]
    centered = words - p * (words > p // 2)
    return int(np.einsum("ij,ij->i", centered, centered).min())


@lru_cache(maxsize=None)
def _qualifying_tuples(p, t):
    """All coefficient tuples in [1,p-1]^t whose parity-check code has
    minimum Euclidean distance > sqrt(2), by exhaustive enumeration."""
    good = []
    for tup in itertools.product(range(1, p), repeat=t):
        if _min_sq_dist_exhaustive(tup, p) > 2:
            good.append(tup)
    return tuple(good)


@lru_cache(maxsize=None)
def _best_tuples(p, t):
    """Tuples achieving the maximum possible minimum distance. Fallback for
    tiny fields (p <= 3) where no tuple clears the sqrt(2) threshold."""
    best = -1
    pool = []
    for tup in itertools.product(range(1, p), repeat=t):
        d = _min_sq_dist_exhaustive(tup, p)
        if d > best:
            best = d
            pool = [tup]
        elif d == best:
            pool.append(tup)
    return tuple(pool)


def optimize_row_coeffs(row_support, p, rng):
    """Draw coefficients for the given row support uniformly from the set
    of tuples passing the minimum-distance criterion."""
    p = p if isinstance(p, Prime) else Prime(p)
    t = len(row_support)
    if t < 2:
        raise ValueError("row support must have at least 2 columns")
    pool = _qualifying_tuples(p.p, t)
    if not pool:
        raise ValueError(
            f"no coefficient tuple of size {t} passes the distance test "
            f"for p={p.p}")
    return pool[int(rng.integers(len(pool)))]


def _build_left_permutations(k, d_c, rng):
    """d_c stacked k x k permutations; adjacent stacks must not meet at the
    block boundary (the only way a 4-cycle can arise for d_r = 1)."""
    perms = [rng.permutation(k) for _ in range(d_c)]
    for _ in range(REPAIR_ATTEMPTS):
        bad = None
        for b in range(1, d_c):
            if perms[b][0] == perms[b - 1][k - 1]:
                bad = b
                break
        if bad is None:
            cols = np.concatenate(perms)
            return cols.reshape(k * d_c, 1)
        j = int(rng.integers(1, k))
        perms[bad][0], perms[bad][j] = perms[bad][j], perms[bad][0]
    raise GirthError("girth constraint unsatisfiable at this size")


def _left_violations(left_cols, m):
    bad = set()
    for i in range(m):
        if len(set(left_cols[i].tolist())) != left_cols.shape[1]:
            bad.add(i)
    col_rows = {}
    for i in range(m):
        for c in left_cols[i]:
            col_rows.setdefault(int(c), []).append(i)
    pair_seen = set()
    for c, rows_list in col_rows.items():
        for a, b in itertools.combinations(sorted(set(rows_list)), 2):
            if b - a == 1 or (a, b) in pair_seen:
                bad.add(a)
                bad.add(b)
            pair_seen.add((a, b))
    return bad


def _build_left_config_model(k, d_c, d_r, m, rng):
    """Random (d_c, d_r)-regular left block via stub matching, repaired by
    bounded random edge swaps until 4-cycle-free."""
    stubs = np.repeat(np.arange(k, dtype=np.int64), d_c)
    rng.shuffle(stubs)
    left = stubs.reshape(m, d_r)
    for _ in range(REPAIR_ATTEMPTS):
        bad = _left_violations(left, m)
        if not bad:
            return left
        i = sorted(bad)[int(rng.integers(len(bad)))]
        s = int(rng.integers(d_r))
        i2 = int(rng.integers(m))
        s2 = int(rng.integers(d_r))
        before = len(bad)
        left[i, s], left[i2, s2] = left[i2, s2], left[i, s]
        if len(_left_violations(left, m)) > before:
            left[i, s], left[i2, s2] = left[i2, s2], left[i, s]
    raise GirthError("girth constraint unsatisfiable at this size")


def build_code(params: CodeParams) -> ParityCheck:
    """Construct H = (L | R) deterministically from params.seed.

    L is d_c stacked random permutations for d_r = 1 (the simulated
    construction) and a configuration-model regular bipartite graph
    otherwise; both are repaired until the Tanner graph has girth >= 6.
    Row coefficients come from optimize_row_coeffs.
    """
    rng = np.random.default_rng(params.seed)
    k, d_c, d_r = params.k, params.d_c, params.d_r
    n = params.n
    m = n - k
    if d_r == 1:
        left_cols = _build_left_permutations(k, d_c, rng)
    else:
        left_cols = _build_left_config_model(k, d_c, d_r, m, rng)

    left_coeffs = np.zeros((m, d_r), dtype=np.int64)
    diag_coeffs = np.zeros(m, dtype=np.int64)
    sub_coeffs = np.zeros(m, dtype=np.int64)
    pv = params.p.p
    for i in range(m):
        support = [int(c) for c in left_cols[i]]
        if i > 0:
            support.append(k + i - 1)
        support.append(k + i)
        if _qualifying_tuples(pv, len(support)):
            coeffs = optimize_row_coeffs(tuple(support), params.p, rng)
        else:
            # p = 2 or 3 has only the elements +-1, so nothing clears the
            # sqrt(2) threshold; fall back to distance-maximizing tuples
            pool = _best_tuples(pv, len(support))
            coeffs = pool[int(rng.integers(len(pool)))]
        left_coeffs[i] = coeffs[:d_r]
        if i == 0:
            diag_coeffs[i] = coeffs[d_r]
        else:
            sub_coeffs[i] = coeffs[d_r]
            diag_coeffs[i] = coeffs[d_r + 1]
    return ParityCheck(params, left_cols, left_coeffs, diag_coeffs,
                       sub_coeffs)


@njit(cache=True)
def _parity_chain(left_sums, sub_coeffs, inv_diag, p):
    m = left_sums.shape[0]
    out = np.zeros(m, dtype=np.int64)
    prev = np.int64(0)
    for i in range(m):
        acc = left_sums[i]
        if i > 0:
            acc = (acc + sub_coeffs[i] * prev) % p
        prev = ((-acc) % p) * inv_diag[i] % p
        out[i] = prev
    return out


def encode_systematic(H: ParityCheck, u):
    """Systematic codeword: first k symbols are u, parities solved one per
    row by forward substitution (each equation has one new unknown)."""
    u = validate_field_vec(u, H.p)
    if u.shape != (H.k,):
        raise ValueError(f"expected {H.k} information symbols")
    p = H.p.p
    left_sums = np.einsum("ij,ij->i", H.left_coeffs, u[H.left_cols]) % p
    parities = _parity_chain(left_sums, H.sub_coeffs, H._inv_diag,
                             np.int64(p))
    return np.concatenate([u, parities])


def syndrome(H: ParityCheck, c):
    """H c^T mod p, in time proportional to the nonzero count."""
    c = np.asarray(c, dtype=np.int64)
    if c.shape != (H.n,):
        raise ValueError(f"expected a length-{H.n} vector")
    p = H.p.p
    k = H.k
    s = np.einsum("ij,ij->i", H.left_coeffs, c[H.left_cols]) % p
    s = (s + H.diag_coeffs * c[k:]) % p
    s[1:] = (s[1:] + H.sub_coeffs[1:] * c[k:-1]) % p
    return s % p


def save_matrix(H: ParityCheck, path):
    """Plain text: header `p n k d_c d_r seed`, then `row (col:coeff)*`."""
    pr = H.params
    with open(path, "w") as fh:
        fh.write(f"{pr.p.p} {pr.n} {pr.k} {pr.d_c} {pr.d_r} {pr.seed}\n")
        for i, row in enumerate(H.rows):
            cells = " ".join(f"{c}:{h}" for c, h in row)
            fh.write(f"{i} {cells}\n")


def load_matrix(path) -> ParityCheck:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    p, n, k, d_c, d_r, seed = (int(v) for v in lines[0].split())
    params = CodeParams(k=k, p=Prime(p), d_c=d_c, d_r=d_r, seed=seed)
    if params.n != n:
        raise ValueError(f"{path}: header n={n} inconsistent with k and degrees")
    m = n - k
    if len(lines) - 1 != m:
        raise ValueError(f"{path}: expected {m} rows, got {len(lines) - 1}")
    left_cols = np.zeros((m, d_r), dtype=np.int64)
    left_coeffs = np.zeros((m, d_r), dtype=np.int64)
    diag_coeffs = np.zeros(m, dtype=np.int64)
    sub_coeffs = np.zeros(m, dtype=np.int64)
    for ln in lines[1:]:
        parts = ln.split()
        i = int(parts[0])
        lefts = []
        for cell in parts[1:]:
            col_s, coeff_s = cell.split(":")
            col, coeff = int(col_s), int(coeff_s)
            if col < k:
                lefts.append((col, coeff))
            elif col == k + i:
                diag_coeffs[i] = coeff
            elif col == k + i - 1 and i > 0:
                sub_coeffs[i] = coeff
            else:
                raise ValueError(f"{path}: row {i} has a stray column {col}")
        if len(lefts) != d_r:
            raise ValueError(f"{path}: row {i} does not have d_r left entries")
        for s, (col, coeff) in enumerate(lefts):
            left_cols[i, s] = col
            left_coeffs[i, s] = coeff
    return ParityCheck(params, left_cols, left_coeffs, diag_coeffs,
                       sub_coeffs)
