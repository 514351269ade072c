"""External potentials for the scenario library."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid


@dataclass(frozen=True)
class Potential:
    """A named potential evaluated on demand.

    kinds and parameters:

    * ``free``
    * ``harmonic``: ``omega``, optional ``center``; ``V = m omega^2 |x - c|^2 / 2``
    * ``gaussian_barrier``: ``height``, ``width``, ``center``
    * ``double_well``: ``a``, ``b``; ``V = a (x0^2 - b^2)^2`` along axis 0 only
    """

    kind: str = "free"
    params: dict = field(default_factory=dict)

    KINDS = ("free", "harmonic", "gaussian_barrier", "double_well")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        required = {"harmonic": ("omega",), "gaussian_barrier": ("height", "width"), "double_well": ("a", "b")}
        for key in required.get(self.kind, ()):
            if key not in self.params:
                raise ValueError(f"{self.kind} potential needs {key!r}")
        if self.kind == "harmonic" and not self.params["omega"] > 0:
            raise ValueError("omega must be positive")

    @property
    def omega(self) -> float:
        return float(self.params["omega"])

    def evaluate(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        if self.kind == "free":
            return np.zeros(grid.shape)
        center = np.broadcast_to(np.asarray(self.params.get("center", 0.0), dtype=float), (grid.dims,))
        r2 = sum((grid.mesh[a] - center[a]) ** 2 for a in range(grid.dims))
        if self.kind == "harmonic":
            return 0.5 * mass * self.omega**2 * r2
        if self.kind == "gaussian_barrier":
            return self.params["height"] * np.exp(-r2 / (2 * self.params["width"] ** 2))
        a, b = self.params["a"], self.params["b"]
        return a * (grid.mesh[0] ** 2 - b**2) ** 2

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "Potential":
        d = dict(d)
        kind = d.pop("kind", "free")
        return cls(kind, d)


def harmonic(omega: float, center=0.0) -> Potential:
    return Potential("harmonic", {"omega": omega, "center": center})


FREE = Potential()
