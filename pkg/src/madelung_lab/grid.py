"""Uniform periodic grids with spectral calculus.

Every field in the package lives on a :class:`Grid`: a rectilinear lattice of
``points[a]`` samples over ``[-L_a/2, L_a/2)`` on each axis, periodic in every
direction. Scalar fields are arrays shaped ``grid.shape``; vector fields carry a
leading component axis, shape ``(grid.dims, *grid.shape)``.

Derivatives are spectral (multiply by ``i k`` axis by axis). Fourth-order
central differences are kept as an independent cross-check, and are also used
for fields that are smooth but not periodic (velocity ratios such as
``grad P / P`` grow linearly in Gaussian tails).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class GridError(ValueError):
    """Raised for invalid grids or fields that do not fit a grid."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Periodic sampling lattice in 1-3 dimensions.

    Parameters
    ----------
    points : tuple of int
        Samples per axis; each a power of two, at least 32.
    lengths : tuple of float
        Domain extent per axis. Axis ``a`` covers ``[-lengths[a]/2, lengths[a]/2)``.
    """

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(n) for n in np.atleast_1d(self.points))
        lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lengths", lengths)
        if not 1 <= len(points) <= 3:
            raise GridError(f"dims must be 1, 2 or 3, got {len(points)}")
        if len(lengths) != len(points):
            raise GridError("points and lengths must have the same length")
        for n in points:
            if n < 32 or not _is_pow2(n):
                raise GridError(f"points per axis must be a power of two >= 32, got {n}")
        for L in lengths:
            if not np.isfinite(L) or L <= 0:
                raise GridError(f"axis length must be positive and finite, got {L}")

    @classmethod
    def uniform(cls, dims: int, n: int, length: float) -> "Grid":
        return cls((n,) * dims, (length,) * dims)

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def periodic(self) -> bool:
        return True

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """1-D coordinate arrays, ``x_j = -L/2 + j h``."""
        return tuple(-L / 2 + h * np.arange(n) for L, h, n in zip(self.lengths, self.spacing, self.points))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis wave numbers in FFT order, covering ``2 pi j / L`` for ``j = -N/2 .. N/2-1``."""
        return tuple(2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.points, self.spacing))

    def _broadcast_k(self, axis: int, k: np.ndarray) -> np.ndarray:
        shape = [1] * self.dims
        shape[axis] = self.points[axis]
        return k.reshape(shape)

    @cached_property
    def _ik(self) -> tuple[np.ndarray, ...]:
        out = []
        for a, (k, n) in enumerate(zip(self.wavenumbers, self.points)):
            ik = 1j * k.copy()
            ik[n // 2] = 0.0  # Nyquist mode has no odd-derivative partner
            out.append(self._broadcast_k(a, ik))
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for a, k in enumerate(self.wavenumbers):
            k2 = k2 + self._broadcast_k(a, k**2)
        return k2

    @property
    def k_max(self) -> float:
        return float(np.sqrt(sum((np.pi / h) ** 2 for h in self.spacing)))

    # --- field checks -------------------------------------------------

    def check_scalar(self, f, name: str = "field") -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise GridError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        if not np.all(np.isfinite(f)):
            raise GridError(f"{name} contains non-finite values")
        return f

    def check_vector(self, F, name: str = "vector field") -> np.ndarray:
        F = np.asarray(F)
        if F.shape != (self.dims, *self.shape):
            raise GridError(f"{name} has shape {F.shape}, grid expects {(self.dims, *self.shape)}")
        if not np.all(np.isfinite(F)):
            raise GridError(f"{name} contains non-finite values")
        return F

    # --- spectral calculus ------------------------------------------

    def fourier_forward(self, f) -> np.ndarray:
        """Unitary DFT (``norm="ortho"``), so Parseval holds as ``sum|f|^2 = sum|F|^2``."""
        f = self.check_scalar(f)
        return np.fft.fftn(f, norm="ortho")

    def fourier_inverse(self, spectrum) -> np.ndarray:
        spectrum = np.asarray(spectrum)
        if spectrum.shape != self.shape:
            raise GridError(f"spectrum has shape {spectrum.shape}, grid expects {self.shape}")
        return np.fft.ifftn(spectrum, norm="ortho")

    def derivative(self, f, axis: int) -> np.ndarray:
        f = self.check_scalar(f)
        d = np.fft.ifftn(self._ik[axis] * np.fft.fftn(f))
        return d if np.iscomplexobj(f) else d.real

    def gradient(self, f) -> np.ndarray:
        """Spectral gradient; returns shape ``(dims, *shape)``."""
        f = self.check_scalar(f)
        fk = np.fft.fftn(f)
        out = np.stack([np.fft.ifftn(ik * fk) for ik in self._ik])
        return out if np.iscomplexobj(f) else out.real

    def divergence(self, F) -> np.ndarray:
        F = self.check_vector(F)
        acc = sum(self._ik[a] * np.fft.fftn(F[a]) for a in range(self.dims))
        out = np.fft.ifftn(acc)
        return out if np.iscomplexobj(F) else out.real

    def laplacian(self, f) -> np.ndarray:
        f = self.check_scalar(f)
        out = np.fft.ifftn(-self.k_squared * np.fft.fftn(f))
        return out if np.iscomplexobj(f) else out.real

    def integrate(self, f) -> float | complex:
        """Riemann sum ``sum f * prod(h)``; spectrally accurate for smooth periodic integrands."""
        f = self.check_scalar(f)
        return f.sum() * self.cell_volume

    # --- finite differences (cross-check / non-periodic ratios) ------

    def fd_derivative(self, f, axis: int) -> np.ndarray:
        """4th-order central first derivative with periodic wrap."""
        f = np.asarray(f)
        h = self.spacing[axis]
        r = lambda s: np.roll(f, -s, axis=axis)
        return (8 * (r(1) - r(-1)) - (r(2) - r(-2))) / (12 * h)

    def fd_second_derivative(self, f, axis: int) -> np.ndarray:
        f = np.asarray(f)
        h = self.spacing[axis]
        r = lambda s: np.roll(f, -s, axis=axis)
        return (-(r(2) + r(-2)) + 16 * (r(1) + r(-1)) - 30 * f) / (12 * h * h)

    def fd_gradient(self, f) -> np.ndarray:
        return np.stack([self.fd_derivative(f, a) for a in range(self.dims)])

    def fd_divergence(self, F) -> np.ndarray:
        return sum(self.fd_derivative(F[a], a) for a in range(self.dims))

    def fd_laplacian(self, f) -> np.ndarray:
        return sum(self.fd_second_derivative(f, a) for a in range(self.dims))

    def stencil_interior(self, mask) -> np.ndarray:
        """Points whose full +-2 FD stencil (on every axis) lies inside ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        out = mask.copy()
        for a in range(self.dims):
            for s in (-2, -1, 1, 2):
                out &= np.roll(mask, s, axis=a)
        return out

    # --- misc ---------------------------------------------------------

    def marginal(self, f, axis: int) -> np.ndarray:
        """Integrate ``f`` over every axis except ``axis``."""
        f = np.asarray(f)
        others = tuple(a for a in range(self.dims) if a != axis)
        w = np.prod([self.spacing[a] for a in others]) if others else 1.0
        return f.sum(axis=others) * w if others else f.copy()

    def axis_grid(self, axis: int) -> "Grid":
        return Grid((self.points[axis],), (self.lengths[axis],))

    def wrap(self, x) -> np.ndarray:
        """Wrap positions (last axis = dims) into ``[-L/2, L/2)``."""
        x = np.asarray(x, dtype=float)
        L = np.asarray(self.lengths)
        return (x + L / 2) % L - L / 2

    def to_dict(self) -> dict:
        return {"dims": self.dims, "points_per_dim": list(self.points), "length_per_dim": list(self.lengths)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        g = cls(tuple(d["points_per_dim"]), tuple(d["length_per_dim"]))
        if "dims" in d and int(d["dims"]) != g.dims:
            raise GridError("dims does not match points_per_dim")
        return g
