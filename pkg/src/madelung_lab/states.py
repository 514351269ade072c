"""Analytic initial states on periodic grids.

Gaussians are periodised (summed over neighbouring images) so that the
sampled wave function is smooth across the box boundary; for packets much
narrower than the box this changes nothing measurable. Every factory returns a
:class:`~madelung_lab.fields.WaveFunction` normalised on the grid.
"""
from __future__ import annotations

import numpy as np

from .fields import Constants, MadelungPair, StateError, WaveFunction
from .grid import Grid

_IMAGES = range(-2, 3)


def _as_axes(value, dims, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (dims,)).copy()
    if not np.all(np.isfinite(arr)):
        raise StateError(f"{name} must be finite")
    return arr


def _normalized(grid, values, time=0.0):
    return WaveFunction(grid, values, time).normalized()


def free_gaussian_1d(x, t, center, sigma0, momentum, constants: Constants, length=None):
    """Full-line free Gaussian packet (P has std ``sigma0`` at t=0), periodised if ``length``."""
    hbar, m = constants.hbar, constants.mass
    tau = hbar * t / (2 * m * sigma0**2)
    v = momentum / m

    def one(xx):
        z = xx - center - v * t
        return (
            (2 * np.pi * sigma0**2) ** -0.25
            / np.sqrt(1 + 1j * tau)
            * np.exp(-(z**2) / (4 * sigma0**2 * (1 + 1j * tau)) + 1j * (momentum * xx - momentum**2 * t / (2 * m)) / hbar)
        )

    if length is None:
        return one(x)
    return sum(one(x - n * length) for n in _IMAGES)


def free_gaussian_sigma(t, sigma0, constants: Constants = Constants()):
    """Position std of a free Gaussian, ``sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2)``."""
    tau = constants.hbar * t / (2 * constants.mass * sigma0**2)
    return sigma0 * np.sqrt(1 + tau**2)


def free_gaussian_rate(t, sigma0, constants: Constants = Constants()):
    """``sigma_dot / sigma`` for the free Gaussian."""
    a = constants.hbar / (2 * constants.mass * sigma0**2)
    return a**2 * t / (1 + (a * t) ** 2)


def gaussian(grid: Grid, center=0.0, sigma=1.0, momentum=0.0, constants: Constants = Constants(), time=0.0):
    """Product Gaussian packet; ``sigma`` is the std of P per axis.

    With ``time > 0`` the analytic free evolution at that time is returned.
    """
    c = _as_axes(center, grid.dims, "center")
    s = _as_axes(sigma, grid.dims, "sigma")
    p = _as_axes(momentum, grid.dims, "momentum")
    if np.any(s <= 0):
        raise StateError("sigma must be positive")
    vals = np.ones(grid.shape, dtype=complex)
    for a in range(grid.dims):
        vals = vals * free_gaussian_1d(grid.mesh[a], time, c[a], s[a], p[a], constants, grid.lengths[a])
    return _normalized(grid, vals, time)


def oscillator_sigma(omega: float, constants: Constants = Constants()) -> float:
    return float(np.sqrt(constants.hbar / (2 * constants.mass * omega)))


def oscillator_state(grid: Grid, omega: float, n: int = 0, center=0.0, constants: Constants = Constants()):
    """Harmonic eigenstate: ``n`` quanta along axis 0, ground state on other axes."""
    if n not in (0, 1):
        raise StateError("only n = 0 and n = 1 are provided")
    if omega <= 0:
        raise StateError("omega must be positive")
    sig = oscillator_sigma(omega, constants)
    c = _as_axes(center, grid.dims, "center")
    vals = np.ones(grid.shape, dtype=complex)
    for a in range(grid.dims):
        z = grid.mesh[a] - c[a]
        g = np.exp(-(z**2) / (4 * sig**2))
        if a == 0 and n == 1:
            g = g * z / sig
        vals = vals * g
    return _normalized(grid, vals)


def mixture(grid: Grid, separation: float, sigma: float = 1.0, weights=(0.5, 0.5), center=0.0):
    """Real state whose density is a two-Gaussian mixture split along axis 0."""
    c = _as_axes(center, grid.dims, "center")
    P = np.zeros(grid.shape)
    for w, sgn in zip(weights, (-1, 1)):
        comp = np.ones(grid.shape)
        for a in range(grid.dims):
            shift = sgn * separation / 2 if a == 0 else 0.0
            comp = comp * sum(np.exp(-((grid.mesh[a] - c[a] - shift - k * grid.lengths[a]) ** 2) / (2 * sigma**2)) for k in _IMAGES)
        P += w * comp
    return _normalized(grid, np.sqrt(P).astype(complex))


def plane_wave(grid: Grid, mode=1, constants: Constants = Constants()):
    """``exp(i k.x)/sqrt(V)`` with ``k_a = 2 pi mode_a / L_a``."""
    modes = _as_axes(mode, grid.dims, "mode")
    if not np.allclose(modes, np.round(modes)):
        raise StateError("plane-wave mode numbers must be integers on a periodic grid")
    phase = sum(2 * np.pi * modes[a] / grid.lengths[a] * grid.mesh[a] for a in range(grid.dims))
    return WaveFunction(grid, np.exp(1j * phase) / np.sqrt(grid.volume))


def uniform(grid: Grid):
    return WaveFunction(grid, np.full(grid.shape, 1 / np.sqrt(grid.volume), dtype=complex))


def ring(grid: Grid, width: float = 1.0, winding: int = 1, constants: Constants = Constants()):
    """2-D vortex ring ``(x + i y)^l exp(-r^2 / 2 w^2)``: radial P, action ``l hbar theta``."""
    if grid.dims != 2:
        raise StateError("ring state needs a 2-D grid")
    x, y = grid.mesh
    vals = (x + 1j * y) ** winding * np.exp(-(x**2 + y**2) / (2 * width**2))
    return _normalized(grid, vals)


def ring_pair(grid: Grid, width: float = 1.0, winding: int = 1, constants: Constants = Constants()) -> MadelungPair:
    """The ring state built directly as ``P(r)``, ``S = l hbar theta``."""
    x, y = grid.mesh
    r2 = x**2 + y**2
    P = r2**winding * np.exp(-r2 / width**2)
    P = P / grid.integrate(P)
    S = winding * constants.hbar * np.arctan2(y, x)
    return MadelungPair(grid, P, S)


def make_state(grid: Grid, family: str, params: dict, constants: Constants = Constants(), potential=None) -> WaveFunction:
    """Build a named initial state (used by scenario files)."""
    params = dict(params)
    if family == "gaussian":
        return gaussian(grid, constants=constants, **params)
    if family in ("oscillator", "coherent"):
        omega = params.pop("omega", None)
        if omega is None and potential is not None and potential.kind == "harmonic":
            omega = potential.omega
        if omega is None:
            raise StateError(f"{family} state needs omega")
        if family == "coherent":
            offset = params.pop("offset", 0.0)
            return gaussian(grid, center=offset, sigma=oscillator_sigma(omega, constants), constants=constants, **params)
        return oscillator_state(grid, omega, constants=constants, **params)
    if family == "mixture":
        return mixture(grid, **params)
    if family == "plane_wave":
        return plane_wave(grid, constants=constants, **params)
    if family == "uniform":
        return uniform(grid)
    if family == "ring":
        return ring(grid, constants=constants, **params)
    raise StateError(f"unknown initial-state family {family!r}")
