"""Madelung pair (P, S), the wave function, and velocity kinematics.

Conventions used throughout the package:

* ``psi = sqrt(P) * exp(+i S / hbar)`` and ``v = +grad S / m``. With this sign
  the continuity and Hamilton-Jacobi-Bohm equations combine into the usual
  Schroedinger equation ``i hbar dpsi/dt = (-hbar^2/2m lap + V) psi``.
* The density floor is ``1e-12 * max(P)``. Ratios such as ``grad P / P`` and the
  phase of ``psi`` are marked unreliable at or below it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .grid import Grid, GridError

FLOOR_FRACTION = 1e-12
#: Cross-checks that divide by P twice (bracket form of Q, grad R/R vs grad P/2P)
#: are only meaningful where P is well above round-off; see README.
BULK_FRACTION = 1e-4


class StateError(ValueError):
    """Raised for invalid densities, wave functions or Madelung pairs."""


@dataclass(frozen=True)
class Constants:
    """Physical constants in natural units.

    ``alpha`` is fixed at 1/2 and is not a constructor argument.
    """

    hbar: float = 1.0
    mass: float = 1.0
    c: float = 1.0
    alpha: ClassVar[float] = 0.5

    def __post_init__(self):
        for name in ("hbar", "mass", "c"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def diffusion(self) -> float:
        """Nelson diffusion coefficient ``D = hbar / 2m``."""
        return self.hbar / (2 * self.mass)

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "mass": self.mass, "c": self.c}


def density_floor(P) -> float:
    return FLOOR_FRACTION * float(np.max(P))


def reliable_mask(P) -> np.ndarray:
    P = np.asarray(P)
    return P > density_floor(P)


@dataclass
class WaveFunction:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.grid.check_scalar(self.values, "psi"), dtype=complex)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(self.grid.integrate(self.density))

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n <= 0:
            raise StateError("wave function is identically zero")
        return WaveFunction(self.grid, self.values / np.sqrt(n), self.time)


@dataclass
class MadelungPair:
    """Density ``P`` and action ``S`` on one grid.

    ``unreliable`` marks points where ``S`` was continued rather than measured
    (set by :func:`from_wavefunction`); it defaults to ``P <= floor``.
    """

    grid: Grid
    P: np.ndarray
    S: np.ndarray
    time: float = 0.0
    unreliable: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.P = np.asarray(self.grid.check_scalar(self.P, "P"), dtype=float)
        self.S = np.asarray(self.grid.check_scalar(self.S, "S"), dtype=float)
        if np.any(self.P < 0):
            raise StateError("density has negative values")
        if self.unreliable is None:
            self.unreliable = ~reliable_mask(self.P) if self.P.max() > 0 else np.ones(self.grid.shape, bool)

    @property
    def floor(self) -> float:
        return density_floor(self.P)


def normalize(grid: Grid, P) -> np.ndarray:
    """Rescale a density to unit mass."""
    P = grid.check_scalar(P, "P")
    if np.any(P < 0):
        raise StateError("density has negative values")
    mass = grid.integrate(P)
    if mass <= 0:
        raise StateError("density has no mass")
    return P / mass


def to_wavefunction(pair: MadelungPair, constants: Constants = Constants()) -> WaveFunction:
    if np.any(pair.P < 0):
        raise StateError("density has negative values")
    psi = np.sqrt(pair.P) * np.exp(1j * pair.S / constants.hbar)
    return WaveFunction(pair.grid, psi, pair.time)


def _wrap_pi(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _sweep_axis(phase, reliable, out, axis, start, start_vals):
    """Unwrap ``phase`` along ``axis`` outward from index ``start``.

    ``start_vals`` holds the already-unwrapped values on the ``start`` slice.
    Unreliable points copy the last reliable neighbour (nearest along the
    sweep) and do not advance the phase reference.
    """
    ph = np.moveaxis(phase, axis, 0)
    rel = np.moveaxis(reliable, axis, 0)
    res = np.moveaxis(out, axis, 0)
    n = ph.shape[0]
    res[start] = start_vals
    for step in (1, -1):
        last_val = start_vals.copy()
        # reference raw phase: measured value if reliable, else consistent with the continued value
        last_raw = np.where(rel[start], ph[start], start_vals)
        idx = start + step
        while 0 <= idx < n:
            r = rel[idx]
            new = last_val + _wrap_pi(ph[idx] - last_raw)
            res[idx] = np.where(r, new, last_val)
            last_val = res[idx].copy()
            last_raw = np.where(r, ph[idx], last_raw)
            idx += step


def from_wavefunction(psi: WaveFunction, constants: Constants = Constants()) -> MadelungPair:
    """Split ``psi`` into ``(P, S)`` with a branch-continuous action.

    The phase is unwrapped by axis sweeps starting at the global maximum of
    ``P``: first along axis 0 through the maximum, then along axis 1 from that
    line, and so on. Points at or below the density floor get ``S`` from the
    nearest reliable neighbour along the sweep and are flagged in
    ``pair.unreliable``.
    """
    values = psi.values
    P = np.abs(values) ** 2
    if not np.any(P > 0):
        raise StateError("wave function is identically zero")
    rel = reliable_mask(P)
    phase = np.angle(values)
    grid = psi.grid
    start = np.unravel_index(np.argmax(P), P.shape)
    theta = np.zeros(P.shape)

    # axis 0 along the line through the maximum
    line = tuple(slice(None) if a == 0 else start[a] for a in range(grid.dims))
    tmp = np.zeros(grid.points[0])
    _sweep_axis(phase[line], rel[line], tmp, 0, start[0], np.asarray(phase[start]))
    theta[line] = tmp
    for axis in range(1, grid.dims):
        # fan out along ``axis`` from the hyperplane already filled (index start[axis])
        sub_sel = tuple(slice(None) if a <= axis else start[a] for a in range(grid.dims))
        sub_phase = phase[sub_sel]
        sub_rel = rel[sub_sel]
        sub_out = theta[sub_sel].copy()
        start_vals = np.take(sub_out, start[axis], axis=axis)
        _sweep_axis(sub_phase, sub_rel, sub_out, axis, start[axis], start_vals)
        theta[sub_sel] = sub_out
    S = constants.hbar * theta
    return MadelungPair(grid, P, S, psi.time, unreliable=~rel)


#: Spectral energy fraction above half the Nyquist wave number beyond which the
#: phase factor is treated as non-periodic along an axis.
SEAM_TAIL = 1e-16


def _band_limited(phi, axis: int) -> bool:
    spec = np.abs(np.fft.fft(phi, axis=axis)) ** 2
    f = np.abs(np.fft.fftfreq(phi.shape[axis]))
    shape = [1] * phi.ndim
    shape[axis] = -1
    tail = np.sum(spec * (f > 0.25).reshape(shape))
    return tail <= SEAM_TAIL * np.sum(spec)


def _open_derivative(f, h: float, axis: int) -> np.ndarray:
    """Fourth-order central differences without wrap; 2nd-order one-sided at the ends."""
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.gradient(f, h, axis=0, edge_order=2)
    out[2:-2] = (8 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12 * h)
    return np.moveaxis(out, 0, axis)


def action_gradient(grid: Grid, S, constants: Constants = Constants()) -> np.ndarray:
    """``grad S``, insensitive to ``2 pi hbar`` branch jumps.

    Along an axis where ``exp(iS/hbar)`` is periodic and band-limited the
    derivative is spectral on that phase factor, which makes linear ramps
    ``p0 x`` with ``p0 L / hbar`` a multiple of ``2 pi`` exact. Otherwise (for
    example the quadratic action of a spreading packet, which does not close
    across the box seam) ``S`` is unwrapped along the axis and differentiated
    by fourth-order differences without wrap-around.
    """
    S = grid.check_scalar(S, "S")
    hbar = constants.hbar
    phi = np.exp(1j * S / hbar)
    out = np.empty((grid.dims, *grid.shape))
    for a in range(grid.dims):
        if _band_limited(phi, a):
            out[a] = hbar * np.imag(np.conj(phi) * grid.derivative(phi, a))
        else:
            out[a] = _open_derivative(hbar * np.unwrap(S / hbar, axis=a), grid.spacing[a], a)
    return out


def velocity(grid: Grid, S, constants: Constants = Constants()) -> np.ndarray:
    """Velocity field ``v = grad S / m`` of an action field."""
    return action_gradient(grid, S, constants) / constants.mass


def current_velocity(psi: WaveFunction, constants: Constants = Constants()):
    """Velocity ``(hbar/m) Im(psi* grad psi) / |psi|^2`` and its reliability mask.

    Preferred over :func:`velocity` whenever the wave function is available:
    ``psi`` is smooth even where the phase is not (vortex cores, empty tails).
    Unreliable points are set to zero.
    """
    grid = psi.grid
    P = psi.density
    rel = reliable_mask(P)
    j = np.imag(np.conj(psi.values)[None] * grid.gradient(psi.values))
    v = np.zeros_like(j)
    v[:, rel] = constants.hbar / constants.mass * j[:, rel] / P[rel]
    return v, rel


def wavefront_speed(grid: Grid, S_t, S, constants: Constants = Constants(), grad_S=None) -> np.ma.MaskedArray:
    """Speed of the surfaces ``S = const``, ``-(dS/dt) / |grad S|``.

    Points where ``|grad S| < 1e-12 * max|grad S|`` are masked as undefined.
    ``grad_S`` may be passed directly when ``S`` is not periodic on the grid.
    """
    S_t = grid.check_scalar(S_t, "dS/dt")
    g = action_gradient(grid, S, constants) if grad_S is None else grid.check_vector(grad_S)
    mag = np.sqrt(np.sum(g**2, axis=0))
    top = mag.max()
    if top == 0 or not np.any(mag >= 1e-12 * top):
        raise StateError("wavefront speed undefined: grad S vanishes everywhere")
    undefined = mag < 1e-12 * top
    out = np.zeros(grid.shape)
    out[~undefined] = -S_t[~undefined] / mag[~undefined]
    return np.ma.MaskedArray(out, mask=undefined)
