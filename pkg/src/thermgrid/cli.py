"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 scenario or
input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ComparisonReport, HotspotReport, compare, hotspot, tier_profile
from .calibration import calibrate
from .errors import IoError, ScenarioError, SolverDivergence, ThermGridError
from .fabrics import CALIBRATION_TARGETS, FABRICS, build_fabric
from .fileio import export_csv, export_vtk, vtk_text
from .geometry import Scenario, voxelize
from .pipeline import assemble_scenario, steady_state, transient_run
from .thermal import DEFAULT_TOL, run_transient
from .verify import run_all

log = logging.getLogger("thermgrid")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_SCENARIO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be > 0: {text!r}")
        return value
    return parse


def _scenario_args(p, power=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fabric", choices=FABRICS, type=str.lower, help="preset NAND circuit")
    src.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--spacing", type=_positive(float), default=2.0, help="voxel size in nm (presets: 1 or 2)")
    p.add_argument("--dielectric", action="store_true", help="wrap the circuit in dielectric fill")
    p.add_argument("--extraction", action="store_true", help="add thermal junction, connector and heat pillar")
    p.add_argument("--stack", type=int, choices=(3, 4), default=3, help="Skybridge transistor count")
    p.add_argument("--margin", type=_positive(float), default=None, help="dielectric margin in nm")
    p.add_argument("--placement", default=None, help="region label the thermal junction attaches to")
    if power:
        pw = p.add_mutually_exclusive_group()
        pw.add_argument("--power", type=float, help="per-source heater power in W")
        pw.add_argument("--calibrate-to", type=_positive(float), dest="calibrate_to",
                        help="calibrate the baseline peak to this temperature (K)")
    p.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL, help="relative residual for CG")
    p.add_argument("--preconditioner", choices=("auto", "jacobi", "amg"), default="auto")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("vtk", "csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermgrid", description="Voxel electro-thermal simulator for transistor-level 3-D ICs.")
    parser.add_argument("--version", action="version", version=f"thermgrid {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("build", help="voxelize a scenario and print statistics")
    _scenario_args(p, power=False)

    p = sub.add_parser("steady", help="steady temperature and hotspot report")
    _scenario_args(p)
    p.add_argument("--layers", action="store_true", help="include the per-layer table in text output")

    p = sub.add_parser("transient", help="probe temperature trace under the duty-cycled sources")
    _scenario_args(p)
    p.add_argument("--dt", type=_positive(float), default=0.1, help="time step in ns")
    p.add_argument("--t-end", type=_positive(float), default=200.0, dest="t_end", help="end time in ns")
    p.add_argument("--probe", action="append", help="region label to record (repeatable)")
    p.add_argument("--hold", action="store_true", help="keep sources on instead of following the schedule")
    p.add_argument("--sample-every", type=int, default=1, dest="sample_every")

    p = sub.add_parser("report", help="render a saved JSON report as text")
    p.add_argument("path", help="report JSON written by steady or compare")
    p.add_argument("--layers", action="store_true")

    p = sub.add_parser("compare", help="peak reduction of a variant against its baseline")
    _scenario_args(p)
    p.add_argument("reports", nargs="*", help="two saved report JSON files (baseline, variant)")

    p = sub.add_parser("calibrate", help="heater power that sets the baseline peak")
    _scenario_args(p, power=False)
    p.add_argument("--calibrate-to", type=_positive(float), dest="calibrate_to", help="target peak (K)")
    p.add_argument("--probe", action="append", help="calibration region label (repeatable)")
    p.add_argument("--tol-k", type=_positive(float), default=1.0, dest="tol_k")

    sub.add_parser("verify", help="run the analytic oracle suite")
    return parser


# --------------------------------------------------------------------------- scenario resolution

def _load(args, extraction=None, dielectric=None) -> Scenario:
    extraction = args.extraction if extraction is None else extraction
    dielectric = args.dielectric if dielectric is None else dielectric
    if args.scenario:
        s = Scenario.from_json(args.scenario)
        if dielectric or extraction:
            from .geometry import add_dielectric_medium, add_extraction_features

            if dielectric:
                s = add_dielectric_medium(s, args.margin if args.margin is not None else 60.0)
            if extraction:
                s = add_extraction_features(s, args.placement)
        s.validate()
        return s
    if not args.fabric:
        raise UsageError("give --fabric or --scenario")
    kw = {}
    if args.margin is not None:
        kw["margin"] = args.margin
    return build_fabric(
        args.fabric, dielectric=dielectric, extraction=extraction, spacing=args.spacing,
        stack=args.stack, placement=args.placement, **kw,
    )


def _resolve_power(args, scenario: Scenario) -> tuple[Scenario, float | None, dict]:
    """Apply ``--power`` or calibrate the baseline, as the presets intend."""
    if getattr(args, "power", None) is not None:
        return scenario.with_power(args.power), args.power, {"mode": "fixed"}
    target = getattr(args, "calibrate_to", None)
    if target is None and args.fabric:
        target = CALIBRATION_TARGETS[args.fabric]
    if target is None:
        return scenario, None, {"mode": "scenario"}
    baseline = _load(args, extraction=False, dielectric=False)
    cal = calibrate(baseline, target, tol=args.tol, preconditioner=args.preconditioner)
    prov = {"mode": "calibrated", "target_K": target, "baseline_peak_K": cal.peak_T, "region": cal.region}
    return scenario.with_power(cal.power), cal.power, prov


def _outdir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _stem(args) -> str:
    if args.scenario:
        return Path(args.scenario).stem
    parts = [args.fabric]
    if args.dielectric:
        parts.append("dielectric")
    if args.extraction:
        parts.append("extraction")
    return "_".join(parts)


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------- commands

def cmd_build(args, out):
    scenario = _load(args)
    grid = voxelize(scenario)
    counts = {}
    for i, mat in enumerate(grid.palette):
        n = int(np.count_nonzero(grid.material_idx == i))
        if n:
            counts[mat.name] = n
    lo, hi = scenario.bounds()
    stats = {
        "dims": list(grid.dims),
        "spacing_nm": grid.spacing,
        "active_voxels": int(grid.active.sum()),
        "bounds_nm": [list(lo), list(hi)],
        "voxels_per_material": counts,
        "labels": len(grid.labels),
    }
    print(json.dumps(stats, indent=1))
    d = _outdir(args)
    if d is not None:
        stem = _stem(args)
        scenario.to_json(d / f"{stem}.scenario.json")
        material = np.where(grid.active, grid.material_idx, -1).astype(float)
        _write(d / f"{stem}.materials.vtk", vtk_text(material, grid, "material_index"))
    return EXIT_OK


def cmd_steady(args, out):
    scenario = _load(args)
    scenario, power, prov = _resolve_power(args, scenario)
    T = steady_state(scenario, tol=args.tol, preconditioner=args.preconditioner)
    report = hotspot(T, power=power)
    report.meta = {"scenario": _stem(args), "calibration": prov, "spacing_nm": scenario.spacing}
    fmt = args.format or "json"
    print(report.to_text(layers=args.layers))
    d = _outdir(args)
    if d is not None:
        stem = _stem(args)
        _write(d / f"{stem}.report.json", report.to_json())
        if fmt == "vtk":
            export_vtk(T, d / f"{stem}.T.vtk")
        profile = tier_profile(T)
        _write(d / f"{stem}.profile.json", json.dumps([list(r) for r in profile], indent=1))
    return EXIT_OK


def cmd_transient(args, out):
    scenario = _load(args)
    scenario, power, prov = _resolve_power(args, scenario)
    probes = args.probe or ([scenario.meta["probe"]] if scenario.meta.get("probe") else None)
    if not probes:
        raise UsageError("give at least one --probe label")
    trace = transient_run(
        scenario, args.t_end, args.dt, probes=probes, hold=args.hold, tol=args.tol,
        preconditioner=args.preconditioner, sample_every=args.sample_every,
    )
    print(f"{'t_ns':>10}  " + "  ".join(f"{p:>16}" for p in probes))
    step = max(1, len(trace) // 20)
    for i in list(range(0, len(trace), step)) + ([len(trace) - 1] if (len(trace) - 1) % step else []):
        print(f"{trace.times_ns[i]:>10.3f}  " + "  ".join(f"{v:>16.4f}" for v in trace.temperatures[i]))
    if power is not None:
        print(f"heater power [W]  {power:.6e}")
    d = _outdir(args)
    if d is not None:
        export_csv(trace, d / f"{_stem(args)}.trace.csv")
        if args.format == "vtk":
            export_vtk(trace.info["final"], d / f"{_stem(args)}.T_final.vtk")
    return EXIT_OK


def cmd_report(args, out):
    try:
        data = json.loads(Path(args.path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read report {args.path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"report {args.path!r} is not valid JSON: {exc}") from exc
    try:
        if "peak_T" in data:
            print(HotspotReport.from_dict(data).to_text(layers=args.layers))
        else:
            print(ComparisonReport.from_dict(data).to_text())
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed report {args.path!r}: {exc!r}") from exc
    return EXIT_OK


def cmd_compare(args, out):
    if args.reports:
        if len(args.reports) != 2:
            raise UsageError("compare takes exactly two report files")
        reports = []
        for path in args.reports:
            try:
                reports.append(HotspotReport.from_json(Path(path).read_text()))
            except OSError as exc:
                raise ScenarioError(f"cannot read report {path!r}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"malformed report {path!r}: {exc!r}") from exc
        base, variant = reports
    else:
        if not (args.dielectric or args.extraction):
            raise UsageError("compare needs --dielectric and/or --extraction to define the variant")
        scenario = _load(args)
        scenario, power, prov = _resolve_power(args, scenario)
        baseline = _load(args, extraction=False, dielectric=False)
        if power is not None:
            baseline = baseline.with_power(power)
        base = hotspot(steady_state(baseline, tol=args.tol, preconditioner=args.preconditioner), power=power)
        variant = hotspot(steady_state(scenario, tol=args.tol, preconditioner=args.preconditioner), power=power)
    result = compare(base, variant)
    print(result.to_text())
    d = _outdir(args)
    if d is not None:
        _write(d / "comparison.json", result.to_json())
    return EXIT_OK


def cmd_calibrate(args, out):
    scenario = _load(args)
    target = args.calibrate_to
    if target is None:
        if not args.fabric:
            raise UsageError("give --calibrate-to for scenario files")
        target = CALIBRATION_TARGETS[args.fabric]
    cal = calibrate(scenario, target, label=args.probe, tol_K=args.tol_k, tol=args.tol,
                    preconditioner=args.preconditioner)
    result = {
        "power_W": cal.power, "peak_T": cal.peak_T, "T_target": cal.T_target,
        "T_ambient": cal.T_ambient, "region": cal.region,
    }
    print(json.dumps(result, indent=1))
    d = _outdir(args)
    if d is not None:
        _write(d / f"{_stem(args)}.calibration.json", json.dumps(result, indent=1))
    return EXIT_OK


def cmd_verify(args, out):
    results, elapsed = run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracle checks passed in {elapsed:.2f} s")
    return EXIT_OK if not failed else EXIT_SOLVER


COMMANDS = {
    "build": cmd_build, "steady": cmd_steady, "transient": cmd_transient, "report": cmd_report,
    "compare": cmd_compare, "calibrate": cmd_calibrate, "verify": cmd_verify,
}


def _thread_limit():
    value = os.environ.get("THERMGRID_THREADS")
    if not value:
        return nullcontext()
    try:
        n = int(value)
        if n < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"THERMGRID_THREADS must be a positive integer, got {value!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("missing command; see --help")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        with _thread_limit():
            return COMMANDS[args.command](args, sys.stdout)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverDivergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ScenarioError, IoError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except ThermGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
