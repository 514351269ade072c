"""Command-line interface: ``madelung-lab simulate | diagnose | trajectories | compare``.

Exit codes: 0 success, 2 input error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, export, fieldio, trajectories
from .evolution import SolverAbort
from .fields import Constants, MadelungPair, StateError, WaveFunction, from_wavefunction, to_wavefunction
from .fluctuations import continuity_rate, diagnostics, flow_report, quantum_potential_bracket, rms_momentum_fluctuation, bulk_mask
from .grid import GridError
from .run import Run, RunError, load_run, simulate
from .scenario import ScenarioError
from .scenario import load as load_scenario
from .uncertainty import FisherUndefined, heisenberg_report

EXIT_OK, EXIT_INPUT, EXIT_ABORT = 0, 2, 3


class InputError(Exception):
    pass


def _dump(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")
    return path


# ----------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    try:
        record = simulate(sc, args.output)
    except SolverAbort as err:
        print(f"abort: {err}", file=sys.stderr)
        return EXIT_ABORT
    print(f"{sc.name}: {len(record.snapshots)} snapshots, scenario hash {record.scenario_hash[:12]}, "
          f"{record.wall_clock:.2f} s -> {args.output}")
    for w in record.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------------------
# diagnose


def _state_from_path(path: Path, index: int):
    """Return ``(psi, constants, dP_dt or None, label)``."""
    if path.is_dir():
        try:
            run = load_run(path)
        except (RunError, fieldio.FieldFormatError) as err:
            raise InputError(str(err)) from None
        if run.scheme == "klein-gordon":
            raise InputError("diagnose works on schrodinger or madelung runs")
        c = run.scenario.constants
        psis = [s if isinstance(s, WaveFunction) else to_wavefunction(s, c) for s in run.snapshots]
        if not psis:
            raise InputError(f"{path}: run has no snapshots")
        try:
            i = range(len(psis))[index]
        except IndexError:
            raise InputError(f"snapshot index {index} out of range (0..{len(psis) - 1})") from None
        dP_dt = None
        if len(psis) >= 2:
            a, b = (i - 1, i + 1) if 0 < i < len(psis) - 1 else ((i, i + 1) if i == 0 else (i - 1, i))
            dP_dt = (psis[b].density - psis[a].density) / (psis[b].time - psis[a].time)
        return psis[i], c, dP_dt, f"{path.name}[{i}]"
    if not path.exists():
        raise InputError(f"{path}: no such file or directory")
    try:
        meta = fieldio.read_manifest(path)
        if meta["field_name"] == "P" and path.name.endswith("_P.json"):
            stem = path.with_name(path.name[: -len("_P.json")])
            if stem.with_name(stem.name + "_S.json").exists():
                return to_wavefunction(fieldio.load_pair(stem)), Constants(), None, stem.name
        grid, values, meta = fieldio.read_field(path)
    except fieldio.FieldFormatError as err:
        raise InputError(str(err)) from None
    if meta["dtype"] == "f64":
        if np.any(values < 0):
            raise InputError(f"{path}: real field is read as a density and must be non-negative")
        values = np.sqrt(values)
    return WaveFunction(grid, values, meta["time"]), Constants(), None, path.stem


def _cut(grid, P):
    """Index tuple of the 1-D line along axis 0 through the density maximum."""
    peak = np.unravel_index(int(np.argmax(P)), P.shape)
    return (slice(None),) + tuple(peak[1:])


def cmd_diagnose(args) -> int:
    psi, c, dP_dt, label = _state_from_path(Path(args.path), args.index)
    if args.hbar is not None or args.mass is not None:
        c = Constants(args.hbar or c.hbar, args.mass or c.mass, c.c)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    grid = psi.grid
    P = psi.density
    cut = _cut(grid, P)
    x = grid.axes[0]
    report: dict = {"source": label, "time": psi.time, "which": args.which, "constants": c.to_dict()}
    columns: dict = {"x": x, "P": P[cut]}
    if args.which == "fluctuations":
        d = diagnostics(psi, c)
        report.update(d.summary(grid))
        report["rms_momentum_fluctuation"] = rms_momentum_fluctuation(grid, P, c)
        bulk = bulk_mask(P)
        if bulk.any():
            bracket = quantum_potential_bracket(grid, P, c)
            report["Q_forms_max_difference_bulk"] = float(np.max(np.abs(bracket - d.Q)[bulk]))
        S = from_wavefunction(psi, c).S
        columns.update({"S": S[cut], "v": d.v[0][cut], "u": d.u[0][cut], "delta_p": d.delta_p[0][cut],
                        "k_u": d.k_u[0][cut], "delta_E": d.delta_E[cut], "Q": d.Q[cut],
                        "reliable": d.reliability_mask[cut].astype(float)})
        plots = {"P": P[cut], "S": S[cut], "v": d.v[0][cut], "u": d.u[0][cut],
                 "Q": np.where(d.reliability_mask[cut], d.Q[cut], np.nan)}
    elif args.which == "uncertainty":
        axes = []
        for a in range(grid.dims):
            try:
                rep = heisenberg_report(psi, a, c)
                axes.append(rep.to_dict())
                print(rep.table())
            except FisherUndefined as err:
                axes.append({"axis": a, "error": str(err)})
                print(f"axis {a}: {err}")
            except StateError as err:
                raise InputError(str(err)) from None
        report["axes"] = axes
        plots = {"P": P[cut]}
    else:
        if dP_dt is None:
            dP_dt = continuity_rate(psi, c)
            report["dP_dt_source"] = "schroedinger rate of the state"
        else:
            report["dP_dt_source"] = "finite difference of snapshots"
        fr = flow_report(psi, dP_dt, c)
        report.update(fr.to_dict())
        columns.update({"orth_residual": fr.orth_residual[cut], "div_v": fr.div_v[cut]})
        plots = {"orth_residual": fr.orth_residual[cut], "div_v": fr.div_v[cut]}
        print(f"classification: {fr.classification}")
    _dump(out / "report.json", report)
    export.write_csv(out / "profiles.csv", columns)
    if args.svg:
        for name, y in plots.items():
            export.svg_lines(out / f"cut_{name}.svg", x, {name: y}, title=f"{name} along axis 0 ({label})")
    if args.which == "fluctuations":
        print(json.dumps({k: v for k, v in report.items() if k != "constants"}, indent=2, default=float))
    return EXIT_OK


# ----------------------------------------------------------------------------
# trajectories


MAX_WALKER_CSV = 1000


def cmd_trajectories(args) -> int:
    path = Path(args.run)
    try:
        run = load_run(path)
    except (RunError, fieldio.FieldFormatError) as err:
        raise InputError(str(err)) from None
    if run.scheme == "klein-gordon":
        raise InputError("trajectories need a schrodinger or madelung run")
    if len(run.snapshots) < 2:
        raise InputError("trajectories need at least two snapshots")
    c = run.scenario.constants
    grid = run.grid
    times = np.array([s.time for s in run.snapshots])
    dt_path = args.dt_path or float(np.min(np.diff(times))) / trajectories.NELSON_SUBSTEPS
    seed = args.seed if args.seed is not None else (run.scenario.seed or 0)
    try:
        if args.scheme == "nelson":
            ens = trajectories.nelson_ensemble(run.snapshots, args.n, seed, dt_path, c)
        else:
            P0 = run.snapshots[0].P if isinstance(run.snapshots[0], MadelungPair) else run.snapshots[0].density
            x0 = trajectories.sample_density(grid, P0, seed, args.n)
            ens = trajectories.bohm_trajectories(run.snapshots, x0, dt_path, c)
            ens.seed = seed
    except ValueError as err:
        raise InputError(str(err)) from None
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    fieldio.save_ensemble(out / "ensemble.json", ens, grid)
    n_csv = min(ens.n_walkers, MAX_WALKER_CSV)
    cols = {"walker": np.repeat(np.arange(n_csv), len(times)), "time": np.tile(times, n_csv)}
    for a, name in enumerate("xyz"[: grid.dims]):
        cols[name] = ens.positions[:n_csv, :, a].reshape(-1)
    export.write_csv(out / "walkers.csv", cols)
    dens = [s.P if isinstance(s, MadelungPair) else s.density for s in run.snapshots]
    hist = {"x": grid.axes[0]}
    for k, t in enumerate(times):
        hist[f"t={t:.6g}"] = trajectories.histogram(grid, ens.at(k)[:, 0])[1]
    export.write_csv(out / "histogram.csv", hist)
    ks = [trajectories.ks_distance(grid, dens[k], ens.at(k)[:, 0]) for k in range(len(times))]
    report = {"scheme": args.scheme, "n_walkers": ens.n_walkers, "seed": seed, "dt_path": dt_path,
              "times": times.tolist(), "ks_axis0": ks, "max_ks": max(ks), "walkers_in_csv": n_csv,
              "masked_events": ens.masked_events, "flagged_walkers": int(ens.flagged.sum())}
    _dump(out / "ks.json", report)
    print(f"{args.scheme}: {ens.n_walkers} walkers, max KS distance {max(ks):.4g} over {len(times)} times")
    return EXIT_OK


# ----------------------------------------------------------------------------
# compare


def _load_for_compare(path: Path) -> Run:
    try:
        return load_run(path)
    except (RunError, fieldio.FieldFormatError) as err:
        raise InputError(str(err)) from None


def cmd_compare(args) -> int:
    a, b = _load_for_compare(Path(args.a)), _load_for_compare(Path(args.b))
    if a.grid != b.grid:
        raise InputError("runs are on different grids")
    ta = np.array([s.time for s in a.snapshots])
    tb = np.array([s.time for s in b.snapshots])
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=1e-12, atol=1e-12):
        raise InputError("runs have different snapshot times")
    grid = a.grid
    dist = []
    for sa, sb in zip(a.snapshots, b.snapshots):
        Pa = sa.P if hasattr(sa, "P") else sa.density
        Pb = sb.P if hasattr(sb, "P") else sb.density
        if args.norm == "l2":
            d = np.sqrt(grid.integrate((Pa - Pb) ** 2) / grid.integrate(Pb**2))
        else:
            d = np.max(np.abs(Pa - Pb)) / np.max(np.abs(Pb))
        dist.append(float(d))
    doc = {"a": str(args.a), "b": str(args.b), "norm": args.norm, "metric": f"relative {args.norm} distance of P",
           "times": ta.tolist(), "distance": dist, "max": max(dist)}
    text = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(text)
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="madelung-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", required=True, help="run directory to create")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="fluctuation, uncertainty or flow report for a state or run")
    d.add_argument("path", help="field manifest (.json) or run directory")
    d.add_argument("--which", choices=("fluctuations", "uncertainty", "flow"), required=True)
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--index", type=int, default=-1, help="snapshot index for run directories (default: last)")
    d.add_argument("--svg", action="store_true", help="also write SVG line plots")
    d.add_argument("--hbar", type=float)
    d.add_argument("--mass", type=float)
    d.set_defaults(func=cmd_diagnose)

    t = sub.add_parser("trajectories", help="Bohm or Nelson ensemble through a run's snapshots")
    t.add_argument("run")
    t.add_argument("--scheme", choices=("bohm", "nelson"), required=True)
    t.add_argument("-n", type=int, required=True, help="number of walkers")
    t.add_argument("--seed", type=int)
    t.add_argument("--dt-path", type=float, help="path step (default: snapshot spacing / 10)")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_trajectories)

    c = sub.add_parser("compare", help="distance between the densities of two runs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--norm", choices=("l2", "max"), default="l2")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        print("error: -n must be positive", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ScenarioError, InputError, GridError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except SolverAbort as err:
        print(f"abort: {err}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
