"""Command-line front end.

Subcommands: build-code, validate-leech, encode, demap, sim-infinite,
sim-voronoi, shaping-gain. Each accepts --config (plain-text key=value,
keys mirror the experiment config fields) plus overriding --seed,
--workers, --out. Exit codes: 0 success, 1 config error, 2 invariant or
validation failure.
"""

import argparse
import sys

import numpy as np

from .field import Prime
from .lattice import TriangularGen, shaping_gain_mc
from .ldpc import CodeParams, GirthError, build_code, save_matrix
from .leech import (
    LeechValidationError,
    ShapingLattice,
    export_g24,
    load_g24,
    validate_g24,
    g24_matrix,
)
from .voronoi import (
    DemapError,
    VoronoiCode,
    code_rate,
    demap,
    encode,
    load_messages,
    save_messages,
)
from .sim import (
    ConfigError,
    build_config,
    emit_results,
    parse_config_file,
    run_infinite,
    run_voronoi,
)


def _load_config(args, **extra):
    raw = parse_config_file(args.config) if args.config else {}
    return build_config(raw, seed=args.seed, workers=args.workers, **extra)


def _require_out(args):
    if not args.out:
        raise ConfigError("--out is required for this command")
    return args.out


def _voronoi_code(cfg):
    n, k = cfg.resolved_dims()
    params = CodeParams(k=k, p=Prime(cfg.p), d_c=cfg.d_c, d_r=cfg.d_r,
                        seed=cfg.seed)
    H = build_code(params)
    if cfg.lattice == "leech":
        if n % 24 != 0:
            raise ConfigError(f"Leech shaping requires 24 | n, got n={n}")
        gamma = ShapingLattice(ell=n // 24, alpha=cfg.alpha, p=H.p)
    elif cfg.lattice == "zn":
        gamma = TriangularGen(np.eye(n, dtype=np.int64))
    else:
        raise ConfigError(f"unknown lattice {cfg.lattice!r}; use leech or zn")
    return VoronoiCode(H, gamma)


def _cmd_build_code(args):
    cfg = _load_config(args)
    n, k = cfg.resolved_dims()
    params = CodeParams(k=k, p=Prime(cfg.p), d_c=cfg.d_c, d_r=cfg.d_r,
                        seed=cfg.seed)
    H = build_code(params)
    H.validate()
    out = _require_out(args)
    save_matrix(H, out)
    print(f"wrote H ({H.num_rows} x {H.n}, p={cfg.p}, "
          f"{H.num_nonzeros} nonzeros) to {out}")
    return 0


def _cmd_validate_leech(args):
    stats = validate_g24(g24_matrix())
    print(f"determinant {stats['det']} (2^36)")
    print(f"column nonzeros: avg {stats['col_nonzero_avg']}, "
          f"min {stats['col_nonzero_min']}, max {stats['col_nonzero_max']}")
    print(f"minimum squared norm {stats['min_sq_norm']} "
          f"({stats['min_shell_count']} minimal vectors)")
    if args.out:
        export_g24(args.out)
        print(f"exported generator to {args.out}")
    return 0


def _cmd_encode(args):
    cfg = _load_config(args)
    if not cfg.infile:
        raise ConfigError("encode needs infile=<message file> in the config")
    code = _voronoi_code(cfg)
    msgs = load_messages(code, cfg.infile)
    out = _require_out(args)
    with open(out, "w") as fh:
        for m in msgs:
            x = encode(code, m)
            fh.write(" ".join(str(int(v)) for v in x) + "\n")
    print(f"encoded {len(msgs)} messages "
          f"(rate {code_rate(code):.6f} bits/dim) to {out}")
    return 0


def _cmd_demap(args):
    cfg = _load_config(args)
    if not cfg.infile:
        raise ConfigError("demap needs infile=<point file> in the config")
    code = _voronoi_code(cfg)
    out = _require_out(args)
    msgs = []
    with open(cfg.infile) as fh:
        for lineno, ln in enumerate(fh, 1):
            ln = ln.strip()
            if not ln:
                continue
            x = np.array([int(v) for v in ln.split()], dtype=np.int64)
            if x.size != code.n:
                raise DemapError(
                    f"{cfg.infile}:{lineno}: expected {code.n} coordinates")
            msgs.append(demap(code, x))
    save_messages(msgs, out)
    print(f"demapped {len(msgs)} points to {out}")
    return 0


def _cmd_sim_infinite(args):
    cfg = _load_config(args, mode="infinite")
    result = run_infinite(cfg)
    if args.out:
        csv_path, plot_path = emit_results(result, args.out)
        print(f"wrote {csv_path} and {plot_path}")
    return 0


def _cmd_sim_voronoi(args):
    cfg = _load_config(args, mode="voronoi")
    result = run_voronoi(cfg)
    if args.out:
        csv_path, plot_path = emit_results(result, args.out)
        print(f"wrote {csv_path} and {plot_path}")
    return 0


def _cmd_shaping_gain(args):
    cfg = _load_config(args)
    if cfg.lattice == "leech":
        gen = TriangularGen(load_g24().g24)
    elif cfg.lattice == "zn":
        n = cfg.n or 24
        gen = TriangularGen(np.eye(n, dtype=np.int64))
    else:
        raise ConfigError(f"unknown lattice {cfg.lattice!r}; use leech or zn")
    est = shaping_gain_mc(gen, cfg.samples, cfg.seed, workers=cfg.workers)
    print(f"shaping gain {est.gamma_db:.4f} dB "
          f"(95% CI [{est.ci_low_db:.4f}, {est.ci_high_db:.4f}], "
          f"{est.samples} samples)")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("gamma_db,ci_low_db,ci_high_db,samples\n")
            fh.write(f"{est.gamma_db!r},{est.ci_low_db!r},"
                     f"{est.ci_high_db!r},{est.samples}\n")
        print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "build-code": _cmd_build_code,
    "validate-leech": _cmd_validate_leech,
    "encode": _cmd_encode,
    "demap": _cmd_demap,
    "sim-infinite": _cmd_sim_infinite,
    "sim-voronoi": _cmd_sim_voronoi,
    "shaping-gain": _cmd_shaping_gain,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ldalattice",
        description="Construction-A Voronoi lattice codes: build, validate, "
                    "simulate")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="plain-text key=value config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", default=None)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (LeechValidationError, GirthError, DemapError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
