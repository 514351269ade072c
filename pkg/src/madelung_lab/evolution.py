"""Shared result type and abort error for the time integrators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid


class SolverAbort(RuntimeError):
    """Numerical abort (NaN, node formation). Carries the step and time of failure."""

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message if step is None else f"{message} (step {step}, t = {time:.6g})")
        self.reason = message
        self.step = step
        self.time = time

    def to_dict(self) -> dict:
        return {"reason": self.reason, "step": self.step, "time": self.time}


@dataclass
class EvolutionResult:
    grid: Grid
    scheme: str
    snapshots: list
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    warnings: list[str] = field(default_factory=list)
    corrections: list[dict] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def densities(self) -> list[np.ndarray]:
        return [s.P if hasattr(s, "P") else s.density for s in self.snapshots]
