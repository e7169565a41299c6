"""Command-line entry point: run, validate, analyze, and plot subcommands.

Every invocation ends with a single machine-parseable line of the form
"RESULT status=<ok|invalid|error|terminated> ..." and exits 0 on success,
1 on validation or usage errors, and 2 when a run terminates on a
numerical guard (blow-up or exhausted CFL fallback).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    CriterionLedger,
    LedgerSettings,
    UndefinedCutoffError,
    update_ledger,
)
from .snapshot import SnapshotError, load_snapshot, save_snapshot
from .solver import RunResult, SolverState, make_initial_state, run
from .svgplot import emit_plots, ledger_table
from .timeseries import COLUMNS, _fmt, read_timeseries, write_timeseries


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the contract is exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bqlp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="simulate a configuration with live diagnostics")
    p_run.add_argument("config", help="path to a JSON run configuration")

    p_val = sub.add_parser("validate", help="check a configuration without running")
    p_val.add_argument("config", help="path to a JSON run configuration")

    p_an = sub.add_parser("analyze", help="offline diagnostics of saved snapshots")
    p_an.add_argument("snapshots", nargs="+", help="snapshot files")
    p_an.add_argument("--s", type=float, default=0.5, help="velocity norm exponent")
    p_an.add_argument("--sigma", type=float, default=-0.25, help="temperature norm exponent")
    p_an.add_argument("--c", type=float, default=1.0, help="dissipation threshold constant")
    p_an.add_argument("--out", default=None, help="write CSV here instead of stdout")

    p_plot = sub.add_parser("plot", help="render charts from a time-series CSV")
    p_plot.add_argument("timeseries", help="CSV written by a run")
    p_plot.add_argument("--out", default=None, help="output directory (default: CSV's directory)")
    return parser


def _result(status: str, **kv) -> None:
    pairs = " ".join(f"{k}={v}" for k, v in kv.items())
    print(f"RESULT status={status}" + (f" {pairs}" if pairs else ""))


def _cmd_validate(args) -> int:
    try:
        load_config(args.config)
    except ConfigError as exc:
        _result("invalid", field=exc.field_path, command="validate")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _result("ok", command="validate", config=args.config)
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _result("invalid", field=exc.field_path, command="run")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result, ledger, outdir = execute_run(cfg)
    status = "ok" if result.status == "completed" else "terminated"
    _result(
        status,
        command="run",
        reason=result.status,
        t_final=_fmt(result.state.t),
        steps=result.steps,
        samples=len(ledger),
        out=str(outdir),
    )
    return 0 if result.status == "completed" else 2


def execute_run(cfg: RunConfig) -> tuple[RunResult, CriterionLedger, Path]:
    """Integrate a configuration, writing CSV, plots, and snapshots.

    Returns (run result, ledger, output directory).  Used by the run
    subcommand and directly by tests.
    """
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    state = make_initial_state(cfg.grid, cfg.ic)
    settings = LedgerSettings(
        s=cfg.s,
        sigma=cfg.sigma,
        nu=cfg.physics.nu,
        kappa=cfg.physics.kappa,
        c=cfg.physics.c,
        gronwall=cfg.gronwall,
    )
    ledger = CriterionLedger(settings)
    snapshots_on = "snapshots" in cfg.output.formats and cfg.output.snapshot_stride > 0
    if snapshots_on:
        (outdir / "snapshots").mkdir(exist_ok=True)

    def sink(st: SolverState, step_index: int) -> None:
        update_ledger(ledger, st.t, st.u, st.theta)
        if snapshots_on and (len(ledger) - 1) % cfg.output.snapshot_stride == 0:
            save_snapshot(
                st,
                outdir / "snapshots" / f"snap_{step_index:08d}.bqlp",
                cfg.physics.nu,
                cfg.physics.kappa,
            )

    result = run(cfg.solver_params(), state, sink=sink)

    if "csv" in cfg.output.formats:
        write_timeseries(ledger, outdir / "timeseries.csv")
    if "svg" in cfg.output.formats:
        emit_plots(ledger_table(ledger), outdir / "plots")
    # The final (or last valid) state is always persisted for restart/analyze.
    save_snapshot(result.state, outdir / "final.bqlp", cfg.physics.nu, cfg.physics.kappa)
    return result, ledger, outdir


def _cmd_analyze(args) -> int:
    from .diagnostics import diagnostics_record

    rows = []
    for snap_path in args.snapshots:
        try:
            state, meta = load_snapshot(snap_path)
        except (SnapshotError, OSError) as exc:
            _result("invalid", command="analyze", file=snap_path)
            print(f"error: {exc}", file=sys.stderr)
            return 1
        settings = LedgerSettings(
            s=args.s, sigma=args.sigma, nu=meta["nu"], kappa=meta["kappa"], c=args.c
        )
        try:
            rec = diagnostics_record(state.t, state.u, state.theta, settings)
        except UndefinedCutoffError as exc:
            _result("invalid", command="analyze", file=snap_path)
            print(f"error: {exc}", file=sys.stderr)
            return 1
        rows.append(rec)

    lines = [",".join(COLUMNS)]
    nan = float("nan")
    for rec in rows:
        q = float(rec.q_value) if rec.q_value is not None else nan
        lam = rec.lambda_value if rec.lambda_value is not None else nan
        # Running integrals are path-dependent and not recoverable from
        # isolated snapshots; those columns carry nan.
        row = (
            rec.t, rec.energy_u, rec.energy_theta, rec.hs_u, rec.hsigma_theta,
            q, lam, rec.f, nan, rec.bkm, nan, rec.i1, rec.i2, rec.i3,
        )
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    _result("ok", command="analyze", snapshots=len(rows))
    return 0


def _cmd_plot(args) -> int:
    try:
        table = read_timeseries(args.timeseries)
    except (OSError, ValueError) as exc:
        _result("invalid", command="plot", file=args.timeseries)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.out) if args.out else Path(args.timeseries).parent / "plots"
    emit_plots(table, outdir)
    _result("ok", command="plot", out=str(outdir))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "analyze": _cmd_analyze,
        "plot": _cmd_plot,
    }
    return handlers[args.command](args)


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
