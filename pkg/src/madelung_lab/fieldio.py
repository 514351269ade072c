"""Field files: a JSON manifest plus a sibling little-endian binary blob.

A manifest ``name.json`` describes ``name.bin``::

    {"dims": 1, "points_per_dim": [512], "length_per_dim": [40.0],
     "dtype": "f64" | "c128", "field_name": "psi", "time": 0.0}

Values are stored row-major as 8-byte floats; complex values are interleaved
``re, im``. Round trips are bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import MadelungPair, WaveFunction
from .grid import Grid

MANIFEST_KEYS = ("dims", "points_per_dim", "length_per_dim", "dtype", "field_name", "time")


class FieldFormatError(ValueError):
    pass


def blob_path(manifest: str | Path) -> Path:
    return Path(manifest).with_suffix(".bin")


def _manifest_path(path: str | Path) -> Path:
    p = Path(path)
    return p if p.suffix == ".json" else p.with_suffix(".json")


def write_field(path, grid: Grid, values, field_name: str, time: float = 0.0) -> Path:
    """Write ``values`` on ``grid``; returns the manifest path."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise FieldFormatError(f"field shape {values.shape} does not match grid {grid.shape}")
    manifest = _manifest_path(path)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    if np.iscomplexobj(values):
        dtype, raw = "c128", np.ascontiguousarray(values, dtype="<c16").view("<f8")
    else:
        dtype, raw = "f64", np.ascontiguousarray(values, dtype="<f8")
    meta = {**grid.to_dict(), "dtype": dtype, "field_name": field_name, "time": float(time)}
    blob_path(manifest).write_bytes(raw.tobytes(order="C"))
    manifest.write_text(json.dumps(meta, indent=2) + "\n")
    return manifest


def read_manifest(path) -> dict:
    manifest = _manifest_path(path)
    try:
        meta = json.loads(manifest.read_text())
    except FileNotFoundError:
        raise FieldFormatError(f"no such field manifest: {manifest}") from None
    except json.JSONDecodeError as err:
        raise FieldFormatError(f"{manifest}:{err.lineno}: invalid JSON ({err.msg})") from None
    missing = [k for k in MANIFEST_KEYS if k not in meta]
    if missing:
        raise FieldFormatError(f"{manifest}: manifest lacks {', '.join(missing)}")
    if meta["dtype"] not in ("f64", "c128"):
        raise FieldFormatError(f"{manifest}: unknown dtype {meta['dtype']!r}")
    return meta


def read_field(path):
    """Return ``(grid, values, manifest)``."""
    manifest = _manifest_path(path)
    meta = read_manifest(manifest)
    grid = Grid.from_dict(meta)
    try:
        raw = np.frombuffer(blob_path(manifest).read_bytes(), dtype="<f8")
    except FileNotFoundError:
        raise FieldFormatError(f"missing binary blob {blob_path(manifest)}") from None
    per_point = 2 if meta["dtype"] == "c128" else 1
    if raw.size != grid.size * per_point:
        raise FieldFormatError(f"{blob_path(manifest)}: expected {grid.size * per_point} values, found {raw.size}")
    values = raw.view("<c16") if per_point == 2 else raw
    return grid, values.reshape(grid.shape).astype(complex if per_point == 2 else float), meta


def save_wavefunction(path, psi: WaveFunction, field_name: str = "psi") -> Path:
    return write_field(path, psi.grid, psi.values, field_name, psi.time)


def load_wavefunction(path) -> WaveFunction:
    grid, values, meta = read_field(path)
    return WaveFunction(grid, values.astype(complex), meta["time"])


def save_pair(stem, pair: MadelungPair) -> tuple[Path, Path]:
    """Write ``stem_P.json`` and ``stem_S.json`` (same grid block)."""
    stem = Path(stem)
    p = write_field(stem.with_name(stem.name + "_P.json"), pair.grid, pair.P, "P", pair.time)
    s = write_field(stem.with_name(stem.name + "_S.json"), pair.grid, pair.S, "S", pair.time)
    return p, s


def load_pair(stem) -> MadelungPair:
    stem = Path(stem)
    gP, P, mP = read_field(stem.with_name(stem.name + "_P.json"))
    gS, S, mS = read_field(stem.with_name(stem.name + "_S.json"))
    if gP != gS:
        raise FieldFormatError("P and S manifests disagree on the grid")
    if mP["time"] != mS["time"]:
        raise FieldFormatError("P and S manifests disagree on the time")
    return MadelungPair(gP, P, S, mP["time"])


def save_ensemble(path, ensemble, grid: Grid) -> Path:
    """Manifest plus walker-major positions ``(n_walkers, n_times, dims)``."""
    manifest = _manifest_path(path)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        **ensemble.metadata(),
        "grid": grid.to_dict(),
        "shape": list(ensemble.positions.shape),
        "dtype": "f64",
        "layout": "walker-major",
        "flagged": np.flatnonzero(ensemble.flagged).tolist(),
    }
    blob_path(manifest).write_bytes(np.ascontiguousarray(ensemble.positions, dtype="<f8").tobytes())
    manifest.write_text(json.dumps(meta, indent=2) + "\n")
    return manifest


def load_ensemble(path):
    """Return ``(TrajectoryEnsemble, grid)``."""
    from .trajectories import TrajectoryEnsemble

    manifest = _manifest_path(path)
    meta = json.loads(manifest.read_text())
    shape = tuple(meta["shape"])
    raw = np.frombuffer(blob_path(manifest).read_bytes(), dtype="<f8")
    if raw.size != int(np.prod(shape)):
        raise FieldFormatError(f"{blob_path(manifest)}: size does not match shape {shape}")
    flagged = np.zeros(shape[0], dtype=bool)
    flagged[meta.get("flagged", [])] = True
    ens = TrajectoryEnsemble(
        meta["scheme"], meta["seed"], meta["dt_path"], np.array(meta["times"]),
        raw.reshape(shape).copy(), flagged, meta.get("masked_events", 0), meta.get("warnings", []),
    )
    return ens, Grid.from_dict(meta["grid"])
