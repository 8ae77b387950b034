"""Acceptance suite: one test per shipping criterion.

Each criterion gets a single test function whose PASSED/FAILED line in the
pytest -v output is the verdict. Criteria 6 and 7 also have optional
long-run profiles, skipped unless LDALATTICE_LONG_RUN=1 (they take hours).
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from ldalattice import (
    CodeParams,
    Prime,
    ShapingLattice,
    TriangularGen,
    VoronoiCode,
    build_code,
    code_rate,
    demap,
    encode,
    encode_systematic,
    sample_message,
    shaping_gain_mc,
)
from ldalattice.leech import g24_matrix, load_g24, validate_g24
from ldalattice.sim import (
    ExperimentConfig,
    capacity_anchor_db,
    emit_results,
    run_infinite,
    run_voronoi,
)
from ldalattice.voronoi import Message

LONG_RUN = os.environ.get("LDALATTICE_LONG_RUN") == "1"


# ---------------------------------------------------------------- helpers

def coset_key(x, pg):
    """Canonical representative of x modulo the lattice generated by the
    rows of pg (lower triangular): reduce coordinates from the last row
    down, leaving each entry in [0, pg[j,j]). Independent of demap."""
    r = [int(v) for v in x]
    n = len(r)
    for j in range(n - 1, -1, -1):
        q = r[j] // int(pg[j][j])
        for i in range(j + 1):
            r[i] -= q * int(pg[j][i])
    return tuple(r)


def random_gamma(rng, n):
    mat = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        mat[i, i] = rng.integers(1, 4)
        for j in range(i):
            mat[i, j] = rng.integers(-2, 3)
    return mat


def lemma1_bijective(codewords, gamma, p):
    """Exact check that C + p*S tiles the quotient by p*Gamma once each."""
    n = gamma.shape[0]
    pg = (p * gamma).tolist()
    vol = int(np.prod(np.diag(gamma)))
    shift_ranges = [range(int(gamma[i, i])) for i in range(n)]
    keys = set()
    count = 0
    for c in codewords:
        for s in itertools.product(*shift_ranges):
            x = np.asarray(c, dtype=np.int64) + p * np.array(s, dtype=np.int64)
            keys.add(coset_key(x, pg))
            count += 1
    want = len(codewords) * vol
    return count == want and len(keys) == want


def all_messages(code):
    ranges = [range(int(b)) for b in code.bounds]
    for u in itertools.product(range(code.p.p), repeat=code.k):
        for s in itertools.product(*ranges):
            yield Message(np.array(u, dtype=np.int64),
                          np.array(s, dtype=np.int64))


def rule_of_three_upper(pr, n):
    """95% upper confidence limit on SER when zero errors were seen."""
    return pr.ser if pr.coord_errors > 0 else 3.0 / (pr.frames * n)


# ------------------------------------------------------------- criterion 1

def test_criterion_01_coset_cover_bijective():
    # C + pS must hit every class of the fine/coarse quotient exactly once,
    # on >= 200 random small instances across n in {2,3,4} and p in {2,3}
    t0 = time.perf_counter()
    checked = 0
    for p in (2, 3):
        for seed in range(25):
            rng = np.random.default_rng([p, seed])

            # n = 2: explicit rate-1/2 systematic code, outside build_code's
            # supported shapes
            gamma = random_gamma(rng, 2)
            a = int(rng.integers(0, p))
            words = [np.array([u, (a * u) % p]) for u in range(p)]
            assert lemma1_bijective(words, gamma, p)
            checked += 1

            for k, d_c, d_r in ((2, 1, 2), (2, 1, 1), (3, 1, 3)):
                H = build_code(CodeParams(k=k, p=Prime(p), d_c=d_c, d_r=d_r,
                                          seed=int(rng.integers(2**31))))
                words = [encode_systematic(H, np.array(u))
                         for u in itertools.product(range(p), repeat=k)]
                gamma = random_gamma(rng, H.n)
                assert lemma1_bijective(words, gamma, p)
                checked += 1
    elapsed = time.perf_counter() - t0
    assert checked >= 200
    assert elapsed < 60
    print(f"criterion 1: PASS - {checked} instances bijective in {elapsed:.1f}s")


# ------------------------------------------------------------- criterion 2

def test_criterion_02_demap_encode_roundtrip():
    t0 = time.perf_counter()
    # exhaustive on small instances
    for p, k, d_c, d_r, seed in ((2, 2, 1, 2, 0), (3, 2, 1, 2, 1),
                                 (5, 2, 1, 2, 2), (3, 3, 1, 3, 3)):
        H = build_code(CodeParams(k=k, p=Prime(p), d_c=d_c, d_r=d_r,
                                  seed=seed))
        rng = np.random.default_rng(seed)
        code = VoronoiCode(H, TriangularGen(random_gamma(rng, H.n)))
        total = 0
        for m in all_messages(code):
            assert demap(code, encode(code, m)) == m
            total += 1
        assert total == code.cardinality()

    # randomized at scale: 10^4 messages on the 240-dim Leech constellation
    H = build_code(CodeParams(k=80, p=Prime(13), d_c=2, d_r=1, seed=2))
    code = VoronoiCode(H, ShapingLattice(ell=10, alpha=1, p=Prime(13)))
    rng = np.random.default_rng(240)
    for _ in range(10**4):
        m = sample_message(code, rng)
        assert demap(code, encode(code, m)) == m
    elapsed = time.perf_counter() - t0
    assert elapsed < 60
    print(f"criterion 2: PASS - exhaustive + 10^4 Leech roundtrips "
          f"in {elapsed:.1f}s")


# ------------------------------------------------------------- criterion 3

def test_criterion_03_leech_generator_identity():
    stats = validate_g24(g24_matrix(), combos=1000, seed=24)
    assert stats["det"] == 2**36
    assert stats["min_sq_norm"] == 32
    assert stats["min_shell_count"] == 196560
    assert stats["col_nonzero_avg"] == pytest.approx(5.625)
    assert stats["col_nonzero_min"] == 1
    assert stats["col_nonzero_max"] == 21
    print("criterion 3: PASS - det 2^36, min norm 32 (196560 vectors), "
          "column stats 5.625/1/21")


# ------------------------------------------------------------- criterion 4

def test_criterion_04_shaping_gain():
    t0 = time.perf_counter()
    leech = shaping_gain_mc(load_g24().gen, 10**6, 24)
    cubic = shaping_gain_mc(TriangularGen(np.eye(24, dtype=np.int64)),
                            10**6, 24)
    elapsed = time.perf_counter() - t0
    assert leech.gamma_db == pytest.approx(1.03, abs=0.05)
    assert cubic.gamma_db == pytest.approx(0.0, abs=0.02)
    assert elapsed < 600
    print(f"criterion 4: PASS - Leech {leech.gamma_db:.4f} dB, "
          f"cubic {cubic.gamma_db:.4f} dB in {elapsed:.0f}s")


# ------------------------------------------------------------- criterion 5

def leech_code_rate():
    H = build_code(CodeParams(k=8, p=Prime(13), d_c=2, d_r=1, seed=1))
    code = VoronoiCode(H, ShapingLattice(ell=1, alpha=1, p=Prime(13)))
    return code_rate(code)


@pytest.mark.xfail(strict=True,
                   reason="stated constant 2.7337 is off by 2.2e-4: the "
                          "formula R log2(p) + log2(alpha) + 3/2 gives "
                          "2.73348, and the tolerance is 1e-4")
def test_criterion_05_rate_constant_literal():
    rc = leech_code_rate()
    print(f"criterion 5 (literal): FAIL expected - rate {rc:.6f} vs "
          f"2.7337 +/- 0.0001")
    assert rc == pytest.approx(2.7337, abs=0.0001)


def test_criterion_05_rate_formula_and_anchor():
    rc = leech_code_rate()
    # exact closed form: (1/3) log2 13 + log2 1 + 3/2
    assert rc == pytest.approx(math.log2(13) / 3 + 1.5, rel=1e-12)
    assert rc == pytest.approx(2.73, abs=0.005)
    anchor = capacity_anchor_db(rc)
    assert anchor == pytest.approx(8.98, abs=0.01)
    print(f"criterion 5: PASS - rate {rc:.6f} bits/dim (~2.73), "
          f"anchor {anchor:.4f} dB (8.98 +/- 0.01)")


# ------------------------------------------------------------- criterion 6

def test_criterion_06_infinite_constellation_waterfall():
    cfg = ExperimentConfig(mode="infinite", k=3333, p=13, d_c=2, d_r=1,
                           sweep=(0.15, 0.20, 0.25, 0.30, 0.40, 0.65),
                           trials=16, target_errors=100, timing=False,
                           seed=1)
    res = run_infinite(cfg)
    n = res.n

    # the scalar pZ baseline is a lower bound at every point; with zero
    # observed errors the 95% upper confidence limit must still clear it
    for pr, bound in zip(res.points, res.meta["bounds"]):
        assert rule_of_three_upper(pr, n) >= bound

    # >= 3 decade drop within a 0.5 dB window inside (0, 1.5]
    found = None
    for a, b in itertools.combinations(res.points, 2):
        if not (0.0 < a.point_db and b.point_db <= 1.5):
            continue
        if not (0.0 < b.point_db - a.point_db <= 0.5):
            continue
        if a.ser > 0 and rule_of_three_upper(b, n) <= 1e-3 * a.ser:
            found = (a, b)
            break
    assert found is not None, "no 3-decade drop in any 0.5 dB window"
    a, b = found
    print(f"criterion 6: PASS - SER {a.ser:.4g} at {a.point_db:g} dB -> "
          f"<= {rule_of_three_upper(b, n):.3g} at {b.point_db:g} dB")


@pytest.mark.skipif(not LONG_RUN, reason="hours; set LDALATTICE_LONG_RUN=1")
def test_criterion_06_long_run_profile():
    # full-scale reference: waterfall onset at or below 0.4 dB VNR
    cfg = ExperimentConfig(mode="infinite", k=333333, p=13, d_c=2, d_r=1,
                           sweep=(0.20, 0.30, 0.40), trials=64,
                           target_errors=100, timing=False, seed=1)
    res = run_infinite(cfg)
    assert any(rule_of_three_upper(pr, res.n) < 1e-5
               for pr in res.points if pr.point_db <= 0.4)


# ------------------------------------------------------------- criterion 7

def test_criterion_07_voronoi_constellation_waterfall():
    cfg = ExperimentConfig(mode="voronoi", k=3336, p=13, d_c=2, d_r=1,
                           alpha=1, sweep=(9.8, 10.0, 10.2), trials=32,
                           target_errors=100, power_samples=1000,
                           timing=False, seed=1)
    res = run_voronoi(cfg)
    assert res.meta["capacity_db"] == pytest.approx(8.98, abs=0.01)
    good = [pr for pr in res.points
            if pr.point_db <= 10.5 and rule_of_three_upper(pr, res.n) < 1e-4]
    assert good, "no sweep point at or below 10.5 dB reaches SER < 1e-4"
    best = min(good, key=lambda pr: pr.point_db)
    print(f"criterion 7: PASS - SER <= {rule_of_three_upper(best, res.n):.3g} "
          f"at {best.point_db:g} dB "
          f"({best.point_db - res.meta['capacity_db']:.2f} dB from capacity)")


@pytest.mark.skipif(not LONG_RUN, reason="hours; set LDALATTICE_LONG_RUN=1")
def test_criterion_07_long_run_profile():
    # full-scale reference: within 0.8 dB of the capacity anchor
    cfg = ExperimentConfig(mode="voronoi", k=333336, p=13, d_c=2, d_r=1,
                           alpha=1, sweep=(9.6, 9.78), trials=64,
                           target_errors=100, power_samples=1000,
                           timing=False, seed=1)
    res = run_voronoi(cfg)
    assert any(rule_of_three_upper(pr, res.n) < 1e-4
               for pr in res.points if pr.point_db <= 9.78)


# ------------------------------------------------------------- criterion 8

def interp_db_at(points, level):
    """dB where the log-linear SER curve crosses the given level."""
    pts = [(pr.point_db, pr.ser) for pr in points if pr.coord_errors > 0]
    assert len(pts) >= 2, "need two measurable points per curve"
    logs = np.array([math.log10(s) for _, s in pts])
    dbs = np.array([d for d, _ in pts])
    order = np.argsort(logs)
    return float(np.interp(math.log10(level), logs[order], dbs[order]))


def test_criterion_08_mmse_shift():
    base = dict(mode="voronoi", k=3336, p=13, d_c=2, d_r=1, alpha=1,
                sweep=(9.78, 9.86, 9.94), trials=32, target_errors=10**9,
                power_samples=1000, timing=False, seed=1)
    off = run_voronoi(ExperimentConfig(**base, mmse=False))
    on = run_voronoi(ExperimentConfig(**base, mmse=True))

    ser_off = [pr.ser for pr in off.points if pr.coord_errors > 0]
    ser_on = [pr.ser for pr in on.points if pr.coord_errors > 0]
    lo = max(min(ser_off), min(ser_on))
    hi = min(max(ser_off), max(ser_on))
    assert lo < hi, "curves share no SER range"
    level = 10 ** ((math.log10(lo) + math.log10(hi)) / 2)

    shift = interp_db_at(off.points, level) - interp_db_at(on.points, level)
    assert 0.03 <= shift <= 0.15
    print(f"criterion 8: PASS - Wiener scaling moves the curve "
          f"{shift:.3f} dB left at SER {level:.3g}")


# ------------------------------------------------------------- criterion 9

def test_criterion_09_encode_demap_linear_time():
    sizes = (240, 2400, 24000)
    times = []
    for n in sizes:
        H = build_code(CodeParams(k=n // 3, p=Prime(13), d_c=2, d_r=1,
                                  seed=9))
        code = VoronoiCode(H, ShapingLattice(ell=n // 24, alpha=1,
                                             p=Prime(13)))
        rng = np.random.default_rng(n)
        msgs = [sample_message(code, rng) for _ in range(3)]
        assert demap(code, encode(code, msgs[0])) == msgs[0]  # warm caches
        reps = max(2, 24000 // n)
        t0 = time.perf_counter()
        for i in range(reps):
            m = msgs[i % 3]
            demap(code, encode(code, m))
        times.append((time.perf_counter() - t0) / reps)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    assert 0.85 <= slope <= 1.15
    per_frame = ", ".join(f"n={n}: {t*1e3:.1f} ms"
                          for n, t in zip(sizes, times))
    print(f"criterion 9: PASS - fit exponent {slope:.3f} ({per_frame})")


# ------------------------------------------------------------ criterion 10

def test_criterion_10_worker_count_determinism(tmp_path):
    base = dict(mode="voronoi", k=8, sweep=(10.0, 12.0), trials=8,
                power_samples=1000, timing=False, seed=1)
    res1 = run_voronoi(ExperimentConfig(**base, workers=1))
    res8 = run_voronoi(ExperimentConfig(**base, workers=8))
    for a, b in zip(res1.points, res8.points):
        assert (a.frames, a.coord_errors, a.frame_errors, a.iters_total,
                a.symbol_errors) == (b.frames, b.coord_errors,
                                     b.frame_errors, b.iters_total,
                                     b.symbol_errors)
    p1, p8 = tmp_path / "w1.csv", tmp_path / "w8.csv"
    emit_results(res1, p1)
    emit_results(res8, p8)
    assert p1.read_bytes() == p8.read_bytes()
    print("criterion 10: PASS - 1 vs 8 workers: identical counts, "
          "byte-identical CSV")
