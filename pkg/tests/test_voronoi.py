"""Coset-leader encoding, Voronoi folding, and back-substitution demapping."""

from itertools import product

import numpy as np
import pytest

from ldalattice import (
    CodeParams,
    DemapError,
    Message,
    Prime,
    ShapingLattice,
    TriangularGen,
    VoronoiCode,
    build_code,
    code_rate,
    coset_leader,
    demap,
    encode,
    encode_systematic,
    load_messages,
    mod_p,
    sample_message,
    save_messages,
)
from ldalattice.leech import g24_matrix


def small_code(seed=7, p=3):
    H = build_code(CodeParams(k=2, p=Prime(p), d_c=2, d_r=1, seed=seed))
    rng = np.random.default_rng(seed)
    n = H.n
    low = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        low[i, :i] = rng.integers(-2, 3, size=i)
        low[i, i] = rng.integers(1, 3)
    return VoronoiCode(H, TriangularGen(low))


def all_messages(code):
    k, n, p = code.k, code.n, code.p.p
    for u in product(range(p), repeat=k):
        for s in product(*[range(int(b)) for b in code.bounds]):
            yield Message(np.array(u), np.array(s))


def test_repetition_code_coset_example():
    # n=2, p=3, C = {00, 11, 22}, Gamma = [[2,0],[1,2]]: the 12 points c+3s
    # are pairwise non-congruent modulo Lambda = 3*Gamma
    gamma = np.array([[2, 0], [1, 2]])
    lam = 3 * gamma
    pts = []
    for a in range(3):
        c = np.array([a, a])
        for s1 in range(2):
            for s2 in range(2):
                pts.append(c + 3 * np.array([s1, s2]))
    assert len(pts) == 12
    inv = np.linalg.inv(lam.astype(float))
    for i in range(12):
        for j in range(i + 1, 12):
            z = (pts[i] - pts[j]) @ inv
            assert not np.allclose(z, np.round(z), atol=1e-9)


def test_identity_gamma_degenerates_to_centered_code():
    H = build_code(CodeParams(k=4, p=Prime(5), d_c=1, d_r=1, seed=2))
    code = VoronoiCode(H, TriangularGen(np.eye(H.n, dtype=np.int64)))
    assert code.cardinality() == 5 ** 4
    assert code_rate(code) == pytest.approx(0.5 * np.log2(5))
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = sample_message(code, rng)
        assert np.all(m.s == 0)
        x = encode(code, m)
        c = encode_systematic(H, m.u)
        assert np.array_equal(x, c - 5 * (c > 2))  # centered representatives
        assert demap(code, x) == m


def test_exhaustive_encode_demap_small():
    code = small_code()
    M = code.cardinality()
    seen = set()
    for m in all_messages(code):
        x = encode(code, m)
        assert np.array_equal(code.quantize_lambda(x), np.zeros(code.n))
        c = mod_p(x, code.p)
        assert np.array_equal(c, encode_systematic(code.H, m.u))
        assert demap(code, x) == m
        seen.add(tuple(int(v) for v in x))
    assert len(seen) == M  # injective over the full message set


def test_coset_leader_formula_and_validation():
    code = small_code(seed=9)
    rng = np.random.default_rng(1)
    m = sample_message(code, rng)
    xp = coset_leader(code, m)
    c = encode_systematic(code.H, m.u)
    assert np.array_equal(xp, c + 3 * m.s)
    bad = Message(m.u, m.s.copy())
    bad.s[0] = int(code.bounds[0])
    with pytest.raises(ValueError, match="bounds"):
        coset_leader(code, bad)
    with pytest.raises(ValueError):
        coset_leader(code, Message(m.u[:1], m.s))


def test_encode_stays_in_coset():
    code = small_code(seed=13)
    rng = np.random.default_rng(3)
    lam = code.gamma.dense() * 3
    inv = np.linalg.inv(lam.astype(float))
    for _ in range(100):
        m = sample_message(code, rng)
        xp = coset_leader(code, m)
        x = encode(code, m)
        z = (xp - x) @ inv
        assert np.allclose(z, np.round(z), atol=1e-9)


def test_demap_coset_invariance():
    code = small_code(seed=21)
    rng = np.random.default_rng(5)
    lam = code.gamma.dense() * 3
    for _ in range(100):
        m = sample_message(code, rng)
        x = encode(code, m)
        shift = rng.integers(-3, 4, size=code.n) @ lam
        assert demap(code, x + shift) == m


def test_demap_rejects_non_integer():
    code = small_code()
    m = sample_message(code, np.random.default_rng(0))
    x = encode(code, m).astype(float)
    assert demap(code, x) == m  # integral floats are fine
    with pytest.raises(DemapError, match="not a constellation point"):
        demap(code, x + 0.25)
    with pytest.raises(ValueError):
        demap(code, x[:-1])


def test_sample_message_respects_bounds():
    code = small_code(seed=31)
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = sample_message(code, rng)
        assert np.all((0 <= m.u) & (m.u < 3))
        assert np.all((0 <= m.s) & (m.s < code.bounds))


def test_leech_roundtrip_single_block():
    H = build_code(CodeParams(k=8, p=Prime(13), d_c=2, d_r=1, seed=5))
    code = VoronoiCode(H, ShapingLattice(ell=1, alpha=1, p=13))
    assert code.cardinality() == 13 ** 8 * 2 ** 36
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = sample_message(code, rng)
        x = encode(code, m)
        assert demap(code, x) == m


def test_leech_code_rate_closed_form():
    # R_C = R log2 p + log2 alpha + 3/2 for the scaled-Leech diagonal
    H = build_code(CodeParams(k=8, p=Prime(13), d_c=2, d_r=1, seed=5))
    r1 = code_rate(VoronoiCode(H, ShapingLattice(ell=1, alpha=1, p=13)))
    assert r1 == pytest.approx(np.log2(13) / 3 + 1.5, rel=1e-12)
    r2 = code_rate(VoronoiCode(H, ShapingLattice(ell=1, alpha=2, p=13)))
    assert r2 == pytest.approx(r1 + 1.0, rel=1e-12)


def test_demap_recursion_touches_at_most_footnote_bound():
    # the cited per-column nonzero maximum of 21 includes the diagonal, so
    # the backward recursion sums at most 20 off-diagonal terms
    m = g24_matrix()
    below = [int(np.count_nonzero(m[i + 1:, i])) for i in range(24)]
    assert max(below) == 20
    assert max(below) + 1 == 21


def test_voronoi_code_validation():
    H = build_code(CodeParams(k=2, p=Prime(3), d_c=2, d_r=1, seed=7))
    with pytest.raises(ValueError, match="dimension"):
        VoronoiCode(H, TriangularGen(np.eye(4, dtype=np.int64)))
    with pytest.raises(ValueError, match="disagree"):
        H24 = build_code(CodeParams(k=8, p=Prime(11), d_c=2, d_r=1, seed=5))
        VoronoiCode(H24, ShapingLattice(ell=1, alpha=1, p=13))


def test_message_serialization_roundtrip(tmp_path):
    code = small_code(seed=17)
    rng = np.random.default_rng(23)
    msgs = [sample_message(code, rng) for _ in range(20)]
    path = tmp_path / "msgs.txt"
    save_messages(msgs, path)
    back = load_messages(code, path)
    assert back == msgs
    first = path.read_text().splitlines()[0].split()
    assert len(first) == code.k + code.n


def test_load_messages_rejects_bad_line(tmp_path):
    code = small_code()
    path = tmp_path / "bad.txt"
    path.write_text("0 1 0 0 0\n")
    with pytest.raises(ValueError, match="expected"):
        load_messages(code, path)


def test_message_equality():
    a = Message([1, 2], [0, 1])
    b = Message([1, 2], [0, 1])
    c = Message([1, 2], [1, 1])
    assert a == b and a != c
    assert a.__eq__(42) is NotImplemented
