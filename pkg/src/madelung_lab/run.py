"""Scenario execution and run directories.

A run directory holds ``scenario.json`` (the validated input), ``run.json``
(the :class:`RunRecord`) and ``snapshots/`` with one field file set per
snapshot: ``snap_NNNN`` (wave function), ``snap_NNNN_P``/``_S`` (Madelung
pair) or ``snap_NNNN_Psi``/``_dPsi_dt`` (Klein-Gordon state).
"""
from __future__ import annotations

import hashlib
import json
import time as _time
import warnings as _warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__, fieldio, kleingordon, madelung, schrodinger, states
from .evolution import SolverAbort
from .fields import StateError, WaveFunction, from_wavefunction
from .scenario import Scenario, ScenarioError, canonical_json
from .scenario import load as load_scenario
from .scenario import parse as parse_scenario


@dataclass
class RunRecord:
    name: str
    scheme: str
    scenario_hash: str
    tool_version: str
    wall_clock: float
    outputs: list[str] = field(default_factory=list)
    digests: dict[str, str] = field(default_factory=dict)
    snapshots: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    abort: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def initial_state(sc: Scenario) -> WaveFunction:
    try:
        psi = states.make_state(sc.grid, sc.family, sc.params, sc.constants, sc.potential)
    except TypeError as err:
        raise ScenarioError(f"initial.params: {err}") from None
    except StateError as err:
        raise ScenarioError(f"initial: {err}") from None
    return psi


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def simulate(sc: Scenario, out_dir) -> RunRecord:
    """Run the scenario's solver and write the run directory.

    Raises :class:`SolverAbort` after writing an abort record, and
    :class:`ScenarioError` for inputs the solver rejects up front.
    """
    out = Path(out_dir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(json.dumps(sc.raw, indent=2, sort_keys=True) + "\n")
    record = RunRecord(sc.name, sc.scheme, sc.hash, __version__, 0.0)
    start = _time.perf_counter()
    psi0 = initial_state(sc)
    written: list[Path] = [out / "scenario.json"]
    try:
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            if sc.scheme == "schrodinger":
                res = schrodinger.split_step_evolve(psi0, sc.potential, sc.dt, sc.steps, sc.snapshot_every, sc.constants)
                for i, snap in enumerate(res.snapshots):
                    m = fieldio.save_wavefunction(snap_dir / f"snap_{i:04d}", snap)
                    written += [m, fieldio.blob_path(m)]
                    record.snapshots.append({"index": i, "time": snap.time, "files": [m.name]})
                record.diagnostics = {"norm_drift": res.norm_drift, "energy_drift": res.energy_drift}
                record.warnings += res.warnings
            elif sc.scheme == "madelung":
                pair0 = from_wavefunction(psi0, sc.constants)
                try:
                    res = madelung.madelung_evolve(pair0, sc.potential, sc.dt, sc.steps, sc.snapshot_every, sc.constants)
                except ValueError as err:
                    raise ScenarioError(f"schedule.dt: {err}") from None
                for i, snap in enumerate(res.snapshots):
                    p, s = fieldio.save_pair(snap_dir / f"snap_{i:04d}", snap)
                    written += [p, fieldio.blob_path(p), s, fieldio.blob_path(s)]
                    record.snapshots.append({"index": i, "time": snap.time, "files": [p.name, s.name]})
                record.diagnostics = {
                    "norm_drift": res.norm_drift,
                    "energy_drift": res.energy_drift,
                    "renormalizations": res.corrections,
                }
                record.warnings += res.warnings
            else:
                if sc.dpsi_dt == "zero":
                    rate = 0 * psi0.values
                else:
                    rate = kleingordon.positive_frequency_rate(sc.grid, psi0.values, sc.constants)
                state0 = kleingordon.KGState(sc.grid, psi0.values, rate, psi0.time)
                try:
                    res = kleingordon.kg_evolve(state0, sc.dt, sc.steps, sc.snapshot_every, sc.constants)
                except ValueError as err:
                    raise ScenarioError(f"schedule.dt: {err}") from None
                for i, snap in enumerate(res.snapshots):
                    a = fieldio.write_field(snap_dir / f"snap_{i:04d}_Psi", sc.grid, snap.Psi, "Psi", snap.time)
                    b = fieldio.write_field(snap_dir / f"snap_{i:04d}_dPsi_dt", sc.grid, snap.dPsi_dt, "dPsi_dt", snap.time)
                    written += [a, fieldio.blob_path(a), b, fieldio.blob_path(b)]
                    record.snapshots.append({"index": i, "time": snap.time, "files": [a.name, b.name]})
                record.diagnostics = {"charge_drift": res.charge_drift, "charge": res.charges[0]}
                record.warnings += res.warnings
        record.warnings += sorted({str(w.message) for w in caught} - set(record.warnings))
    except SolverAbort as err:
        record.abort = err.to_dict()
        record.wall_clock = _time.perf_counter() - start
        _finish(record, out, written)
        raise
    record.wall_clock = _time.perf_counter() - start
    _finish(record, out, written)
    return record


def _finish(record: RunRecord, out: Path, written: list[Path]) -> None:
    record.outputs = [str(p.relative_to(out)) for p in written] + ["run.json"]
    record.digests = {str(p.relative_to(out)): _digest(p) for p in written}
    record.write(out / "run.json")


# ----------------------------------------------------------------------------
# reading runs back


class RunError(ValueError):
    pass


@dataclass
class Run:
    path: Path
    scenario: Scenario
    record: dict
    snapshots: list

    @property
    def grid(self):
        return self.scenario.grid

    @property
    def scheme(self) -> str:
        return self.scenario.scheme


def load_run(run_dir) -> Run:
    run_dir = Path(run_dir)
    if not (run_dir / "run.json").is_file() or not (run_dir / "scenario.json").is_file():
        raise RunError(f"{run_dir}: not a run directory (run.json / scenario.json missing)")
    record = json.loads((run_dir / "run.json").read_text())
    sc = load_scenario(run_dir / "scenario.json")
    snap_dir = run_dir / "snapshots"
    snaps = []
    for entry in record.get("snapshots", []):
        i = entry["index"]
        if sc.scheme == "schrodinger":
            snaps.append(fieldio.load_wavefunction(snap_dir / f"snap_{i:04d}.json"))
        elif sc.scheme == "madelung":
            snaps.append(fieldio.load_pair(snap_dir / f"snap_{i:04d}"))
        else:
            _, Psi, meta = fieldio.read_field(snap_dir / f"snap_{i:04d}_Psi.json")
            _, dPsi, _ = fieldio.read_field(snap_dir / f"snap_{i:04d}_dPsi_dt.json")
            snaps.append(kleingordon.KGState(sc.grid, Psi, dPsi, meta["time"]))
    return Run(run_dir, sc, record, snaps)


def densities(run: Run) -> list:
    out = []
    for s in run.snapshots:
        if hasattr(s, "P"):
            out.append(s.P)
        else:
            out.append(s.density)
    return out


__all__ = ["RunRecord", "Run", "RunError", "simulate", "load_run", "load_scenario", "parse_scenario", "canonical_json"]
