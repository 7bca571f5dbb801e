"""Command-line interface: a thin client over the simulator service.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(non-convergence, truncation leakage, non-finite output); partial sweep
results are flushed before a failing exit.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .client import ServiceError, make_client
from .config import ConfigError, load_scenario
from .models import ResultRow, RunResult, Scenario, SweepSpec

CSV_COLUMNS = (
    "point_id", "swept_value", "I_ss", "B", "phi_ss", "Gamma", "xi",
    "i2_zero", "Q_II", "stable", "sf_valid", "trunc_ok", "method",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_outputs(result: RunResult, out_path: Path) -> list[Path]:
    """Write the CSV rows, the JSON manifest and, when any closed-form
    deviations were recorded, the discrepancy report."""
    written = []
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])
    written.append(out_path)
    manifest_path = out_path.with_suffix(".manifest.json")
    manifest = dict(result.manifest)
    manifest["warnings"] = result.warnings
    manifest["failures"] = [f.model_dump() for f in result.failures]
    manifest["notes"] = {str(r.point_id): r.note for r in result.rows if r.note}
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    written.append(manifest_path)
    flagged = [d for d in result.discrepancies if not d["within_tol"]]
    if flagged:
        disc_path = out_path.with_suffix(".discrepancies.json")
        disc_path.write_text(json.dumps(result.discrepancies, sort_keys=True,
                                        indent=2) + "\n")
        written.append(disc_path)
    return written


def _default_out(config_path: str, mode: str) -> Path:
    stem = Path(config_path).stem
    return Path(f"{stem}.{mode}.csv")


def _finish(result: RunResult, out: Path, quiet: bool = False) -> int:
    files = write_outputs(result, out)
    if not quiet:
        for w in result.warnings:
            print(f"warning: {w}", file=sys.stderr)
        for f in files:
            print(f"wrote {f}")
    if result.failures:
        for f in result.failures:
            at = "" if f.swept_value is None else f" (swept_value = {f.swept_value:g})"
            print(f"error: point {f.point_id}{at}: {f.error}", file=sys.stderr)
        return 2
    return 0


def cmd_run(args) -> int:
    scenario, extras = load_scenario(args.config)
    updates = {}
    if args.mode:
        updates["mode"] = args.mode
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if updates:
        scenario = scenario.model_copy(update=updates)
    scenario = Scenario(**scenario.model_dump())  # re-validate mode constraints
    client = make_client(args.server)
    if scenario.mode == "sweep":
        result = client.sweep(scenario)
    elif scenario.mode == "compare":
        result = client.compare(scenario)
    else:
        result = client.run(scenario)
    out = Path(args.out or extras.get("out") or _default_out(args.config, scenario.mode))
    return _finish(result, out)


def cmd_sweep(args) -> int:
    scenario, extras = load_scenario(args.config)
    sweep = SweepSpec(axis=args.axis, start=args.from_, stop=args.to,
                      points=args.points)
    updates: dict = {"sweep": sweep, "mode": "sweep"}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    scenario = scenario.model_copy(update=updates)
    client = make_client(args.server)
    result = client.sweep(scenario)
    out = Path(args.out or extras.get("out") or _default_out(args.config, "sweep"))
    return _finish(result, out)


def cmd_compare(args) -> int:
    scenario, extras = load_scenario(args.config)
    oracle_spec = scenario.oracle
    if args.nmax is not None:
        from .models import OracleSpec

        base = oracle_spec.model_dump() if oracle_spec else {}
        base["n_max"] = args.nmax
        oracle_spec = OracleSpec(**base)
    scenario = scenario.model_copy(update={"oracle": oracle_spec, "mode": "compare"})
    scenario = Scenario(**scenario.model_dump())
    client = make_client(args.server)
    result = client.compare(scenario)
    out = Path(args.out or extras.get("out") or _default_out(args.config, "compare"))
    return _finish(result, out)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="micromaser-fpe",
        description="Noise of micromaser light from correlated atom bunches",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--mode", choices=("coefficients", "steady-state", "noise",
                                          "oracle", "compare", "sweep", "sde"))
    p_run.add_argument("--out", help="output CSV path")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--threads", type=int)
    p_run.add_argument("--server", help="remote service URL (default: in-process)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--from", dest="from_", type=float, required=True)
    p_sweep.add_argument("--to", type=float, required=True)
    p_sweep.add_argument("--points", type=int, required=True)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--threads", type=int)
    p_sweep.add_argument("--server")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="drift/diffusion prediction vs Fock-space oracle")
    p_cmp.add_argument("config")
    p_cmp.add_argument("--nmax", type=int, help="Fock-space truncation override")
    p_cmp.add_argument("--out")
    p_cmp.add_argument("--server")
    p_cmp.set_defaults(func=cmd_compare)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ServiceError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
