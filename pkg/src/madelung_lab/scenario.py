"""Scenario files: schema, validation with line numbers, canonical hashing."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .fields import Constants
from .grid import Grid
from .potentials import Potential

_positive = {"type": "number", "exclusiveMinimum": 0}
_vector = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3}]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "madelung-lab scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "grid", "initial", "schedule", "scheme"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["points_per_dim", "length_per_dim"],
            "properties": {
                "dims": {"type": "integer", "minimum": 1, "maximum": 3},
                "points_per_dim": {"type": "array", "items": {"type": "integer", "minimum": 32}, "minItems": 1, "maxItems": 3},
                "length_per_dim": {"type": "array", "items": _positive, "minItems": 1, "maxItems": 3},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"hbar": _positive, "mass": _positive, "c": _positive},
        },
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(Potential.KINDS)},
                "omega": _positive,
                "center": _vector,
                "height": {"type": "number"},
                "width": _positive,
                "a": {"type": "number"},
                "b": {"type": "number"},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["gaussian", "oscillator", "coherent", "mixture", "plane_wave", "uniform", "ring"]},
                "params": {"type": "object"},
                "dPsi_dt": {"enum": ["positive-frequency", "zero"]},
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dt", "steps"],
            "properties": {
                "dt": _positive,
                "steps": {"type": "integer", "minimum": 0},
                "snapshot_every": {"type": "integer", "minimum": 1},
            },
        },
        "scheme": {"enum": ["schrodinger", "madelung", "klein-gordon"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
}


class ScenarioError(ValueError):
    """Invalid scenario; the message carries ``file:line`` when known."""


def _locate(text: str, path, extra_key: str | None = None) -> int | None:
    """Best-effort line number of a JSON path in the source text."""
    pos = 0
    for part in list(path) + ([extra_key] if extra_key else []):
        if isinstance(part, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(part))).search(text, pos)
        if m is None:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1 if pos or path else 1


def _error_line(text: str, err: jsonschema.ValidationError) -> int | None:
    extra = None
    if err.validator == "additionalProperties":
        m = re.search(r"'([^']+)' was unexpected", err.message)
        extra = m.group(1) if m else None
    return _locate(text, err.absolute_path, extra)


@dataclass
class Scenario:
    name: str
    grid: Grid
    constants: Constants
    potential: Potential
    family: str
    params: dict
    dt: float
    steps: int
    snapshot_every: int
    scheme: str
    seed: int | None = None
    dpsi_dt: str = "positive-frequency"
    raw: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return canonical_hash(self.raw)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def canonical_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def parse(doc: dict, text: str | None = None, source: str = "<scenario>") -> Scenario:
    """Validate a scenario document and build the typed scenario."""
    text = canonical_json(doc) if text is None else text
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = "/".join(map(str, err.absolute_path)) or "(root)"
        raise ScenarioError(f"{source}:{_error_line(text, err)}: {where}: {err.message}")
    g = doc["grid"]
    try:
        grid = Grid(tuple(g["points_per_dim"]), tuple(float(v) for v in g["length_per_dim"]))
        if "dims" in g and g["dims"] != grid.dims:
            raise ValueError("dims does not match points_per_dim")
        constants = Constants(**doc.get("constants", {}))
        potential = Potential.from_dict(doc.get("potential", {"kind": "free"}))
    except (ValueError, TypeError) as err:
        line = _locate(text, ["grid"] if "grid" in str(err) or "points" in str(err) else ["potential"])
        raise ScenarioError(f"{source}:{line}: {err}") from None
    init = doc["initial"]
    sched = doc["schedule"]
    return Scenario(
        name=doc["name"],
        grid=grid,
        constants=constants,
        potential=potential,
        family=init["family"],
        params=dict(init.get("params", {})),
        dt=float(sched["dt"]),
        steps=int(sched["steps"]),
        snapshot_every=int(sched.get("snapshot_every", max(1, sched["steps"]))),
        scheme=doc["scheme"],
        seed=doc.get("seed"),
        dpsi_dt=init.get("dPsi_dt", "positive-frequency"),
        raw=doc,
    )


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"{path}: cannot read scenario ({err.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}:1: scenario must be a JSON object")
    return parse(doc, text, str(path))


def bundled() -> list[Path]:
    """Paths of the scenarios shipped with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))
