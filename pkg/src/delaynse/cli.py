"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 configuration or input
error, 3 numerical blow-up.  Output paths named in a configuration file are
resolved relative to the directory holding that file.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, SimConfig, load_config
from .delay import solve_delay
from .io import CheckpointError, read_checkpoint, write_checkpoint, write_diagnostics
from .linearized import BlowUpError
from .reference import solve_nse
from .spectral import divergence_max, sobolev_norm
from .verify import dt_refinement_study, mu_sweep, run_invariant_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


class _InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _load(path) -> tuple[SimConfig, Path]:
    p = Path(path)
    try:
        return load_config(p), p.resolve().parent
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc.strerror}") from None


def _out(base: Path, name: str | None, suffix: str = "") -> Path | None:
    if not name:
        return None
    p = Path(name)
    if suffix:
        p = p.with_name(p.stem + suffix + p.suffix)
    return p if p.is_absolute() else base / p


def _emit(traj, cfg: SimConfig, base: Path, suffix: str):
    ck = _out(base, cfg.checkpoint, suffix)
    dg = _out(base, cfg.diagnostics, suffix)
    if ck is not None:
        write_checkpoint(traj, ck)
        print(f"checkpoint: {ck}")
    if dg is not None:
        write_diagnostics(traj, dg)
        print(f"diagnostics: {dg}")
    u = traj.final
    print(f"t = {traj.T:.17g}  |u|_0 = {sobolev_norm(u, 0):.17g}  div_max = {divergence_max(u):.3e}")


def _simulate(args) -> int:
    cfg, base = _load(args.config)
    traj = solve_delay(
        cfg.history(), cfg.u0(), cfg.forcing(), cfg.nu, cfg.T, alpha=cfg.alpha, store_every=cfg.store_every
    )
    _emit(traj, cfg, base, "")
    return EXIT_OK


def _simulate_nse(args) -> int:
    cfg, base = _load(args.config)
    traj = solve_nse(cfg.u0(), cfg.forcing(), cfg.nu, cfg.dt, cfg.T, alpha=cfg.alpha, store_every=cfg.store_every)
    # keep the delayed run's outputs intact
    _emit(traj, cfg, base, "_nse")
    return EXIT_OK


def _verify(args) -> int:
    cfg, _ = _load(args.config)
    report = run_invariant_suite(cfg, sabotage=args.sabotage)
    sys.stdout.write(report.to_text())
    if not report.passed:
        print(f"FAILED: {', '.join(report.failures())}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _mu_sweep(args) -> int:
    cfg, _ = _load(args.config)
    try:
        sweep = mu_sweep(cfg, args.mus, splitting=not args.no_splitting)
    except ValueError as exc:
        raise ConfigError("mus", str(exc)) from None
    text = sweep.to_csv()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _dt_study(args) -> int:
    cfg, _ = _load(args.config)
    try:
        st = dt_refinement_study(cfg, args.dts, problem=args.problem)
    except ValueError as exc:
        raise ConfigError("dts", str(exc)) from None
    print("dt,error_vs_finest,energy_residual")
    for dt, e, r in zip(st.dts, st.errors, st.residuals):
        print(f"{dt:.17g},{e:.17g},{r:.17g}")
    order = st.order
    print(f"# state order: {order if isinstance(order, str) else f'{order:.4f}'}")
    print(f"# energy residual order: {st.residual_order:.4f}")
    return EXIT_OK


def _inspect(args) -> int:
    try:
        recs = read_checkpoint(args.checkpoint)
    except OSError as exc:
        raise _InputError(f"cannot read {args.checkpoint}: {exc.strerror}") from None
    if not recs:
        print("records: 0")
        return EXIT_OK
    r0 = recs[0]
    print(f"records: {len(recs)}  N = {r0.N}  L = {r0.L:.17g}  nu = {r0.nu:.17g}  mu = {r0.mu:.17g}  dt = {r0.dt:.17g}")
    show = recs if args.all else recs[-1:]
    for r in show:
        print(f"t = {r.t:.17g}  |u|_0 = {sobolev_norm(r.field, 0):.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delaynse", description="Delayed Navier-Stokes on the periodic box.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="delayed run; writes checkpoint and diagnostics")
    s.add_argument("config")
    s.set_defaults(func=_simulate)

    s = sub.add_parser("simulate-nse", help="undelayed reference run")
    s.add_argument("config")
    s.set_defaults(func=_simulate_nse)

    s = sub.add_parser("verify", help="invariant suite; exit 0 iff every check passes")
    s.add_argument("config")
    s.add_argument("--sabotage", choices=("dealias", "leray"), help="disable a safeguard (negative control)")
    s.set_defaults(func=_verify)

    s = sub.add_parser("mu-sweep", help="distance to the undelayed run as mu shrinks (CSV)")
    s.add_argument("config")
    s.add_argument("--mus", type=_floats, required=True)
    s.add_argument("--no-splitting", action="store_true", help="skip the splitting integrals")
    s.add_argument("-o", "--output")
    s.set_defaults(func=_mu_sweep)

    s = sub.add_parser("dt-study", help="time-step refinement study")
    s.add_argument("config")
    s.add_argument("--dts", type=_floats, required=True)
    s.add_argument("--problem", choices=("delay", "linearized", "decay"), default="delay")
    s.set_defaults(func=_dt_study)

    s = sub.add_parser("inspect", help="print checkpoint header and norms")
    s.add_argument("checkpoint")
    s.add_argument("--all", action="store_true", help="one line per record")
    s.set_defaults(func=_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return args.func(args)
    except (ConfigError, CheckpointError, _InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
