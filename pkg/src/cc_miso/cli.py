"""Command line front end: cc-miso {sweep, verify, dof}."""

from __future__ import annotations

import argparse
import sys

from .combinatorics import ConfigError, SystemConfig, generate_files
from .channel import sample_channel
from .delivery import (
    dump_transcript,
    run_delivery_complex,
    run_delivery_finite,
    verify_delivery,
    worst_case_demand,
)
from .harness import (
    SweepSpec,
    db_to_linear,
    emit_csv,
    emit_plot,
    estimate_dof,
    find_crossover,
    run_sweep,
)
from .rates import dof as dof_formula


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    """Accept 'lo:step:hi' (inclusive) or a comma list of dB values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected lo:step:hi, got {text!r}")
        lo, step, hi = (float(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        out = []
        x = lo
        while x <= hi + 1e-9:
            out.append(round(x, 9))
            x += step
        return tuple(out)
    return tuple(float(p) for p in text.split(","))


def _parse_schemes(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(","))


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, required=True, help="number of users")
    p.add_argument("--L", type=int, required=True, help="number of transmit antennas")
    p.add_argument("--N", type=int, required=True, help="library size in files")
    p.add_argument("--M", type=str, required=True, help="cache size in files (int, fraction like 1/2, or decimal)")
    p.add_argument("--F", type=int, default=None, help="file size in bits (default: smallest valid >= 1024)")


def _config_from(args, snr_linear: float = 100.0) -> SystemConfig:
    return SystemConfig(K=args.K, L=args.L, N=args.N, M=args.M, F=args.F, snr=snr_linear)


def _cmd_sweep(args) -> int:
    cfg = _config_from(args)
    spec = SweepSpec(
        cfg=cfg,
        snr_db=args.snr_db,
        trials=args.trials,
        base_seed=args.seed,
        schemes=args.schemes,
        solver=args.solver,
    )
    result = run_sweep(spec)
    print(f"# sweep K={cfg.K} L={cfg.L} N={cfg.N} M={cfg.M} t={cfg.t} "
          f"trials={args.trials} solver={args.solver} seed={args.seed} "
          f"redraws={result.meta['redraws']}")
    print(f"{'snr_db':>8} {'scheme':>6} {'mean_rsym':>12} {'stderr':>10}")
    for row in result.rows:
        print(f"{row.snr_db:8.2f} {row.scheme:6d} {row.mean_rsym:12.5f} {row.stderr:10.5f}")
    schemes = result.schemes()
    for i, a in enumerate(schemes):
        for b in schemes[i + 1:]:
            x = find_crossover(result, a, b)
            where = f"{x:.2f} dB" if x is not None else "none on grid"
            print(f"# crossover scheme {a} vs {b}: {where}")
    if args.csv:
        emit_csv(result, args.csv)
        print(f"# wrote {args.csv}")
    if args.plot:
        emit_plot(result, args.plot)
        print(f"# wrote {args.plot}")
    return 0


def _cmd_verify(args) -> int:
    cfg = _config_from(args, snr_linear=db_to_linear(args.snr_db))
    cm = sample_channel(cfg, args.seed)
    files = generate_files(cfg, args.seed + 1)
    demand = worst_case_demand(cfg)
    run = run_delivery_complex if args.algorithm == "complex" else run_delivery_finite
    transcript, decoded = run(cfg, cm, demand, files)
    report = verify_delivery(cfg, transcript, decoded)
    bits_ok = all(
        (decoded[k] == files[demand.d[k - 1] - 1]).all() for k in range(1, cfg.K + 1)
    )
    for name, ok, detail in report.checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
    print(f"{'ok  ' if bits_ok else 'FAIL'} bit-exact reconstruction")
    if args.dump:
        dump_transcript(transcript, args.dump)
        print(f"# wrote {args.dump}")
    verdict = report.passed and bits_ok
    print(f"# verify {args.algorithm}: {'PASS' if verdict else 'FAIL'}")
    return 0 if verdict else 1


def _cmd_dof(args) -> int:
    cfg = _config_from(args)
    lo, hi = args.window
    est = estimate_dof(cfg, args.scheme, snr_lo_db=lo, snr_hi_db=hi,
                       trials=args.trials, base_seed=args.seed)
    exact = dof_formula(args.scheme, cfg)
    print(f"scheme {args.scheme}: estimated DoF = {est:.4f} over [{lo:g}, {hi:g}] dB "
          f"({args.trials} trials), formula = {exact} = {float(exact):.4f}")
    return 0


def _parse_window(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cc-miso",
        description="Finite-SNR comparison of multicast and zero-forcing coded-caching delivery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo SNR sweep over the requested schemes")
    _add_config_args(p)
    p.add_argument("--snr-db", type=_parse_snr_grid, default=(10.0, 15.0, 20.0, 25.0, 30.0),
                   help="dB grid as lo:step:hi or comma list (default 10:5:30)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--schemes", type=_parse_schemes, default=(1, 2, 3))
    p.add_argument("--solver", choices=("sdr", "grid"), default="sdr")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", type=str, default=None, help="write the table to this CSV path")
    p.add_argument("--plot", type=str, default=None, help="write an SVG/PNG rate plot to this path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run one delivery pass and audit it end to end")
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", choices=("complex", "finite"), required=True)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--dump", type=str, default=None, help="write the transcript to this path")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("dof", help="estimate a scheme's high-SNR slope")
    _add_config_args(p)
    p.add_argument("--scheme", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--window", type=_parse_window, default=(60.0, 80.0),
                   help="dB window lo:hi for the finite difference (default 60:80)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_dof)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
