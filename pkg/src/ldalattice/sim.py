"""Monte-Carlo AWGN experiment harness.

Two experiment modes: `infinite` sweeps SER against the volume-to-noise
ratio for the bare Construction-A lattice (unconstrained channel), and
`voronoi` sweeps SER against Eb/N0 for the power-constrained Voronoi
constellation with Leech shaping, with optional Wiener (MMSE) front-end
scaling. Results go to a fixed-schema CSV plus a companion plot script.

Determinism contract: every frame draws from an RNG stream keyed by
(seed, purpose, frame index) and frames are scheduled in fixed-size waves,
so error counts are identical for any worker count.
"""

import math
import os
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .field import Prime
from .lattice import TriangularGen, sigma2_for_vnr
from .ldpc import CodeParams, ParityCheck, build_code, encode_systematic
from .leech import ShapingLattice
from .voronoi import (
    Message,
    VoronoiCode,
    code_rate,
    demap,
    encode,
    sample_message,
)
from .decoder import decode_point

CSV_COLUMNS = ("point_db", "sigma2", "frames", "coord_errors", "ser",
               "frame_errors", "fer", "mean_iters", "seconds")

BATCH_FRAMES = 4
WAVE_BATCHES = 8

# RNG purpose tags: streams are default_rng([seed, purpose, index])
_PURPOSE_POWER = 0
_PURPOSE_FRAME = 1

# bounded shift range for infinite-mode transmission: z_i in [0, SHIFT_SPAN)
SHIFT_SPAN = 10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = ""
    n: int = 0
    k: int = 0
    p: int = 13
    d_c: int = 2
    d_r: int = 1
    alpha: int = 1
    ell: int = 0
    sweep: tuple = ()
    trials: int = 256
    target_errors: int = 100
    max_iter: int = 100
    mmse: bool = False
    seed: int = 1
    workers: int = 1
    window: int = 3
    power_samples: int = 1000
    timing: bool = True
    lattice: str = "leech"
    samples: int = 100000
    infile: str = ""

    def resolved_dims(self):
        """(n, k) from whichever of the two was given."""
        d_sum = self.d_c + self.d_r
        if self.k:
            n = self.k * d_sum // self.d_r
            if (self.k * d_sum) % self.d_r:
                raise ConfigError("k*(d_c+d_r)/d_r is not an integer")
            if self.n and self.n != n:
                raise ConfigError(f"n={self.n} inconsistent with k={self.k}")
            return n, self.k
        if self.n:
            if (self.n * self.d_r) % d_sum:
                raise ConfigError(
                    f"n={self.n} is not divisible by (d_c+d_r)/d_r structure")
            return self.n, self.n * self.d_r // d_sum
        raise ConfigError("one of k or n is required")

    def validated(self, mode=None):
        mode = mode or self.mode
        if mode not in ("infinite", "voronoi"):
            raise ConfigError(f"unknown mode {mode!r}")
        n, k = self.resolved_dims()
        if mode == "voronoi" and n % 24 != 0:
            raise ConfigError(f"voronoi mode requires 24 | n, got n={n}")
        if not self.sweep:
            raise ConfigError("sweep must list at least one dB point")
        if self.trials < 1 or self.max_iter < 1 or self.window < 1:
            raise ConfigError("trials, max_iter, window must be positive")
        if self.power_samples < 1000:
            raise ConfigError("power_samples must be >= 1000")
        return replace(self, mode=mode, n=n, k=k,
                       ell=(n // 24 if mode == "voronoi" else self.ell))


_BOOL_WORDS = {"on": True, "true": True, "1": True, "yes": True,
               "off": False, "false": False, "0": False, "no": False}


def _parse_bool(s):
    try:
        return _BOOL_WORDS[s.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected on/off, got {s!r}") from None


def _parse_sweep(s):
    try:
        return tuple(float(v) for v in s.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad sweep list {s!r}") from None


def parse_config_file(path):
    """Plain-text key=value pairs; '#' starts a comment."""
    raw = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, val = line.split("=", 1)
                raw[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return raw


def build_config(raw, **overrides):
    """ExperimentConfig from raw string pairs plus keyword overrides."""
    parsers = {}
    for f in fields(ExperimentConfig):
        if f.name == "sweep":
            parsers[f.name] = _parse_sweep
        elif f.type == "bool" or isinstance(f.default, bool):
            parsers[f.name] = _parse_bool
        elif isinstance(f.default, int):
            parsers[f.name] = int
        else:
            parsers[f.name] = str
    kwargs = {}
    for key, val in raw.items():
        if key not in parsers:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = parsers[key](val)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"bad value for {key}: {val!r}") from None
    for key, val in overrides.items():
        if val is not None:
            kwargs[key] = val
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class PointResult:
    point_db: float
    sigma2: float
    frames: int
    coord_errors: int
    frame_errors: int
    iters_total: int
    symbol_errors: int
    seconds: float

    @property
    def ser(self):
        return self.coord_errors / (self.frames * self._n)

    @property
    def fer(self):
        return self.frame_errors / self.frames

    @property
    def mean_iters(self):
        return self.iters_total / self.frames

    _n: int = 1


@dataclass
class SweepResult:
    mode: str
    n: int
    points: list
    meta: dict = field(default_factory=dict)


def q_func(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def pz_baseline(p, sigma2):
    """Lower bound on per-coordinate SER: the scalar p*Z error 2Q(p/(2s))."""
    return 2.0 * q_func(p / (2.0 * math.sqrt(sigma2)))


def capacity_anchor_db(rc):
    """Eb/N0 at which Shannon capacity equals the code rate rc bits/dim."""
    snr_cap = 2.0 ** (2.0 * rc) - 1.0
    return 10.0 * math.log10(snr_cap / (2.0 * rc))


def ebn0_db_to_sigma2(power, rc, ebn0_db):
    return power / (2.0 * rc * 10.0 ** (ebn0_db / 10.0))


def sigma2_to_ebn0_db(power, rc, sigma2):
    return 10.0 * math.log10(power / (2.0 * rc * sigma2))


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    stderr: float
    samples: int


# simulation context shared with forked workers through module state
_CTX = None


@dataclass
class _SimContext:
    cfg: ExperimentConfig
    H: ParityCheck
    vcode: object = None


def _make_context(cfg) -> _SimContext:
    params = CodeParams(k=cfg.k, p=Prime(cfg.p), d_c=cfg.d_c, d_r=cfg.d_r,
                        seed=cfg.seed)
    H = build_code(params)
    ctx = _SimContext(cfg=cfg, H=H)
    if cfg.mode == "voronoi":
        shaping = ShapingLattice(ell=cfg.ell, alpha=cfg.alpha, p=H.p)
        ctx.vcode = VoronoiCode(H, shaping)
    return ctx


def estimate_power(code: VoronoiCode, samples, seed=1) -> PowerEstimate:
    """Empirical per-dimension power of the constellation.

    Mean of ||x||^2 / n over uniform messages, each from the stream
    (seed, power-tag, sample index); reports the standard error.
    """
    samples = int(samples)
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    vals = np.empty(samples)
    for i in range(samples):
        rng = np.random.default_rng([seed, _PURPOSE_POWER, i])
        m = sample_message(code, rng)
        x = encode(code, m)
        vals[i] = float(x @ x) / code.n
    power = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    return PowerEstimate(power=power, stderr=stderr, samples=samples)


_POWER_CACHE = {}


def _cached_power(ctx) -> PowerEstimate:
    cfg = ctx.cfg
    key = (cfg.k, cfg.p, cfg.d_c, cfg.d_r, cfg.alpha, cfg.ell, cfg.seed,
           cfg.power_samples)
    if key not in _POWER_CACHE:
        _POWER_CACHE[key] = estimate_power(ctx.vcode, cfg.power_samples,
                                           seed=cfg.seed)
    return _POWER_CACHE[key]


def _run_batch(args):
    """Decode frames [f0, f1) at one sweep point; returns summed counters."""
    mode, sigma2, snr, f0, f1 = args
    ctx = _CTX
    cfg = ctx.cfg
    H = ctx.H
    p = H.p.p
    sigma = math.sqrt(sigma2)
    coord = frame_err = iters = sym = 0
    for f in range(f0, f1):
        rng = np.random.default_rng([cfg.seed, _PURPOSE_FRAME, f])
        if mode == "infinite":
            u = rng.integers(0, p, size=H.k)
            c = encode_systematic(H, u)
            z = rng.integers(0, SHIFT_SPAN, size=H.n)
            x = c + p * z
            g = rng.standard_normal(H.n)
            y = x + sigma * g
            res = decode_point(H, y, sigma2, snr=None, window=cfg.window,
                               max_iter=cfg.max_iter)
            x_hat = res.x_hat
        else:
            vcode = ctx.vcode
            msg = sample_message(vcode, rng)
            x = encode(vcode, msg)
            g = rng.standard_normal(H.n)
            y = x + sigma * g
            res = decode_point(H, y, sigma2, snr=snr, window=cfg.window,
                               max_iter=cfg.max_iter)
            x_hat = res.x_hat - vcode.quantize_lambda(res.x_hat)
            m_hat = demap(vcode, x_hat)
            if m_hat != msg:
                frame_err += 1
        errs = int(np.count_nonzero(x_hat != x))
        coord += errs
        sym += int(np.count_nonzero((x_hat - x) % p != 0))
        iters += res.iterations
        if mode == "infinite" and errs:
            frame_err += 1
    return coord, frame_err, iters, sym, f1 - f0


def _sweep_point(ctx, pool, mode, db, sigma2, snr):
    cfg = ctx.cfg
    t0 = time.perf_counter()
    coord = frame_err = iters = sym = frames = 0
    next_frame = 0
    wave_frames = BATCH_FRAMES * WAVE_BATCHES
    while next_frame < cfg.trials and coord < cfg.target_errors:
        end = min(next_frame + wave_frames, cfg.trials)
        batches = []
        f = next_frame
        while f < end:
            f1 = min(f + BATCH_FRAMES, end)
            batches.append((mode, sigma2, snr, f, f1))
            f = f1
        if pool is not None:
            results = list(pool.map(_run_batch, batches))
        else:
            results = [_run_batch(b) for b in batches]
        for c, fe, it, sy, nf in results:
            coord += c
            frame_err += fe
            iters += it
            sym += sy
            frames += nf
        next_frame = end
    seconds = time.perf_counter() - t0 if cfg.timing else 0.0
    pr = PointResult(point_db=db, sigma2=sigma2, frames=frames,
                     coord_errors=coord, frame_errors=frame_err,
                     iters_total=iters, symbol_errors=sym, seconds=seconds)
    pr._n = ctx.H.n
    return pr


def _make_pool(cfg):
    if cfg.workers <= 1:
        return None
    import multiprocessing
    from concurrent.futures import ProcessPoolExecutor
    return ProcessPoolExecutor(
        max_workers=cfg.workers,
        mp_context=multiprocessing.get_context("fork"))


def _monotonicity_warnings(points, n):
    msgs = []
    for a, b in zip(points, points[1:]):
        se_a = math.sqrt(max(a.ser * (1 - a.ser), 1e-300) / (a.frames * n))
        se_b = math.sqrt(max(b.ser * (1 - b.ser), 1e-300) / (b.frames * n))
        if b.ser > a.ser + 2.0 * (se_a + se_b):
            msgs.append(
                f"warning: SER rises from {a.ser:.3g} at {a.point_db:g} dB "
                f"to {b.ser:.3g} at {b.point_db:g} dB")
    return msgs


def run_infinite(cfg: ExperimentConfig) -> SweepResult:
    """SER vs VNR for the infinite Construction-A constellation.

    Transmits random lattice points (random codeword plus a bounded random
    p*Z^n shift) so that nothing can exploit an all-zero assumption.
    """
    global _CTX
    cfg = cfg.validated("infinite")
    ctx = _make_context(cfg)
    _CTX = ctx
    rate = float(ctx.H.params.rate)
    nu = float(cfg.p) ** (2.0 * (1.0 - rate))
    result = SweepResult(mode="infinite", n=cfg.n, points=[])
    result.meta["normalized_volume"] = nu
    result.meta["bounds"] = []
    pool = _make_pool(cfg)
    try:
        for db in cfg.sweep:
            sigma2 = sigma2_for_vnr(nu, 10.0 ** (db / 10.0))
            bound = pz_baseline(cfg.p, sigma2)
            result.meta["bounds"].append(bound)
            pr = _sweep_point(ctx, pool, "infinite", db, sigma2, None)
            result.points.append(pr)
            print(f"vnr {db:g} dB  sigma2 {sigma2:.6g}  frames {pr.frames}  "
                  f"ser {pr.ser:.6g}  pz-bound {bound:.6g}  "
                  f"mean-iters {pr.mean_iters:.2f}")
    finally:
        if pool is not None:
            pool.shutdown()
    for msg in _monotonicity_warnings(result.points, cfg.n):
        print(msg)
    return result


def run_voronoi(cfg: ExperimentConfig) -> SweepResult:
    """SER vs Eb/N0 for the Leech-shaped Voronoi constellation."""
    global _CTX
    cfg = cfg.validated("voronoi")
    ctx = _make_context(cfg)
    _CTX = ctx
    rc = code_rate(ctx.vcode)
    cap_db = capacity_anchor_db(rc)
    print(f"code rate {rc:.6f} bits/dim; "
          f"capacity anchor Eb/N0 = {cap_db:.3f} dB")
    pw = _cached_power(ctx)
    print(f"power estimate P = {pw.power:.6f} (stderr {pw.stderr:.2g}, "
          f"{pw.samples} samples)")
    result = SweepResult(mode="voronoi", n=cfg.n, points=[])
    result.meta.update(code_rate=rc, capacity_db=cap_db, power=pw.power,
                       power_stderr=pw.stderr, mmse=cfg.mmse)
    pool = _make_pool(cfg)
    try:
        for db in cfg.sweep:
            sigma2 = ebn0_db_to_sigma2(pw.power, rc, db)
            snr = pw.power / sigma2 if cfg.mmse else None
            pr = _sweep_point(ctx, pool, "voronoi", db, sigma2, snr)
            result.points.append(pr)
            sym_ser = pr.symbol_errors / (pr.frames * cfg.n)
            print(f"ebn0 {db:g} dB  sigma2 {sigma2:.6g}  frames {pr.frames}  "
                  f"ser {pr.ser:.6g}  symbol-ser {sym_ser:.6g}  "
                  f"fer {pr.fer:.6g}  mean-iters {pr.mean_iters:.2f}")
    finally:
        if pool is not None:
            pool.shutdown()
    for msg in _monotonicity_warnings(result.points, cfg.n):
        print(msg)
    return result


_PLOT_TEMPLATE = '''"""Plot SER sweep results (log-scale SER vs dB)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv_path!r}
xs, ys = [], []
with open(path) as fh:
    for row in csv.DictReader(fh):
        xs.append(float(row["point_db"]))
        ys.append(float(row["ser"]))
fig, ax = plt.subplots()
ax.semilogy(xs, ys, "o-")
ax.set_xlabel({xlabel!r})
ax.set_ylabel("symbol error rate")
ax.grid(True, which="both", alpha=0.3)
fig.savefig(path + ".png", dpi=150)
print("wrote", path + ".png")
'''


def emit_results(result: SweepResult, path):
    """Write the CSV (fixed schema) and a companion plot script."""
    try:
        with open(path, "w") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for pr in result.points:
                row = (repr(float(pr.point_db)), repr(float(pr.sigma2)),
                       str(pr.frames), str(pr.coord_errors),
                       repr(float(pr.ser)), str(pr.frame_errors),
                       repr(float(pr.fer)), repr(float(pr.mean_iters)),
                       repr(float(pr.seconds)))
                fh.write(",".join(row) + "\n")
        xlabel = ("VNR (dB)" if result.mode == "infinite"
                  else "Eb/N0 (dB)")
        plot_path = os.path.splitext(path)[0] + "_plot.py"
        with open(plot_path, "w") as fh:
            fh.write(_PLOT_TEMPLATE.format(csv_path=os.path.basename(path),
                                           xlabel=xlabel))
    except OSError as exc:
        raise OSError(f"failed writing results near {path}: {exc}") from exc
    return path, plot_path
