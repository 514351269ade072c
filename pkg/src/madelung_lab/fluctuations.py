"""Momentum/energy fluctuation fields, quantum potential and flow diagnostics.

Sign conventions: the osmotic field here is ``u = -(hbar/2m) grad P / P`` and
the momentum fluctuation is ``delta_p = m u = -(hbar/2) grad P / P``. The
stochastic-mechanics drift ``+(hbar/2m) grad ln P`` used by the Nelson sampler
is ``-u``.

Quantities that need ``grad S`` (velocity, its divergence, the orthogonality
residual) are evaluated from the wave function ``sqrt(P) exp(iS/hbar)``,
which stays smooth where the phase alone does not.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fields import (
    BULK_FRACTION,
    Constants,
    MadelungPair,
    StateError,
    WaveFunction,
    density_floor,
    reliable_mask,
    to_wavefunction,
)
from .grid import Grid

#: Region used for flow classification; below it the ratio fields are round-off.
CLASSIFY_FRACTION = 1e-8
CLASSIFY_TOLERANCE = 1e-6


def _check_density(grid: Grid, P) -> np.ndarray:
    P = np.asarray(grid.check_scalar(P, "P"), dtype=float)
    if np.any(P < 0):
        raise StateError("density has negative values")
    return P


def log_density_gradient(grid: Grid, P):
    """``grad P / P`` on reliable points (zero elsewhere) and the reliability mask."""
    P = _check_density(grid, P)
    rel = reliable_mask(P)
    g = grid.gradient(P)
    out = np.zeros_like(g)
    out[:, rel] = g[:, rel] / P[rel]
    return out, rel


def osmotic_velocity(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    """``u = -(hbar/2m) grad P / P``; zero where ``P`` is at or below the floor."""
    g, _ = log_density_gradient(grid, P)
    return -constants.hbar / (2 * constants.mass) * g


def momentum_fluctuation(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    g, _ = log_density_gradient(grid, P)
    return -0.5 * constants.hbar * g


def wave_number_u(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    return momentum_fluctuation(grid, P, constants) / constants.hbar


def amplitude_wave_number(grid: Grid, P) -> np.ndarray:
    """``-grad R / R`` with ``R = sqrt(P)``; the amplitude form of ``k_u``."""
    P = _check_density(grid, P)
    rel = reliable_mask(P)
    R = np.sqrt(P)
    g = grid.gradient(R)
    out = np.zeros_like(g)
    out[:, rel] = -g[:, rel] / R[rel]
    return out


def fluctuation_magnitude(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    """``|delta_p| = (hbar/2) |grad P / P|`` evaluated as a magnitude, not a vector."""
    g, _ = log_density_gradient(grid, P)
    return 0.5 * constants.hbar * np.sqrt(np.sum(g * g, axis=0))


def fluctuation_direction(delta_p) -> np.ndarray:
    """Unit vector of ``delta_p``; NaN where ``delta_p`` vanishes (extrema of P).

    "Vanishes" means below ``1e-12 * max|delta_p|``, the round-off level of
    the spectral gradient at an extremum.
    """
    delta_p = np.asarray(delta_p)
    mag = np.sqrt(np.sum(delta_p**2, axis=0))
    zero = mag <= 1e-12 * mag.max()
    with np.errstate(invalid="ignore", divide="ignore"):
        n = delta_p / mag
    n[:, zero] = np.nan
    return n


def energy_fluctuation(grid: Grid, v, constants: Constants = Constants()) -> np.ndarray:
    """``delta_E = (hbar/2) div v`` for a periodic velocity field."""
    return 0.5 * constants.hbar * grid.divergence(v)


def quantum_potential(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    """``Q = -(hbar^2/2m) lap(sqrt P) / sqrt P``; zero where ``P`` is at or below the floor."""
    P = _check_density(grid, P)
    if not np.any(P > 0):
        raise StateError("quantum potential undefined: density is zero everywhere")
    rel = reliable_mask(P)
    R = np.sqrt(P)
    lap = grid.laplacian(R)
    Q = np.zeros(grid.shape)
    Q[rel] = -(constants.hbar**2) / (2 * constants.mass) * lap[rel] / R[rel]
    return Q


def quantum_potential_bracket(grid: Grid, P, constants: Constants = Constants()) -> np.ndarray:
    """``(hbar^2/4m) [ (1/2)(grad P/P)^2 - lap P / P ]``; the density form of Q."""
    P = _check_density(grid, P)
    rel = reliable_mask(P)
    g = grid.gradient(P)
    lap = grid.laplacian(P)
    Q = np.zeros(grid.shape)
    ratio2 = np.sum(g[:, rel] ** 2, axis=0) / P[rel] ** 2
    Q[rel] = constants.hbar**2 / (4 * constants.mass) * (0.5 * ratio2 - lap[rel] / P[rel])
    return Q


def bulk_mask(P) -> np.ndarray:
    P = np.asarray(P)
    return P > BULK_FRACTION * P.max()


def fisher_density(grid: Grid, P, axis: int | None = None) -> np.ndarray:
    """Integrand ``(d_a P)^2 / P`` (summed over axes when ``axis`` is None).

    At masked points the limit of the ratio at a double zero of ``P``,
    ``2 d_a^2 P`` (clipped at zero), is used instead. This keeps simple nodes
    on grid points from dropping out of the quadrature; in empty tails the
    limit is zero to round-off.
    """
    P = _check_density(grid, P)
    rel = reliable_mask(P)
    axes = range(grid.dims) if axis is None else (axis,)
    out = np.zeros(grid.shape)
    for a in axes:
        d = grid.derivative(P, a)
        d2 = grid.derivative(d, a)
        term = np.where(rel, 0.0, 2 * np.clip(d2, 0, None))
        term[rel] = d[rel] ** 2 / P[rel]
        out += term
    return out


def rms_momentum_fluctuation(grid: Grid, P, constants: Constants = Constants()) -> float:
    """``sqrt( int P ((hbar/2)|grad P/P|)^2 )``."""
    fisher = grid.integrate(fisher_density(grid, P))
    return float(0.5 * constants.hbar * np.sqrt(max(fisher, 0.0)))


# --- wave-function route -------------------------------------------------


@dataclass
class _PsiCalculus:
    """Currents and ratios from spectral derivatives of a smooth wave function."""

    grid: Grid
    P: np.ndarray
    rel: np.ndarray
    re: np.ndarray  # Re(psi* grad psi) = grad P / 2
    im: np.ndarray  # Im(psi* grad psi) = P grad S / hbar
    im_lap: np.ndarray  # Im(psi* lap psi)

    @classmethod
    def of(cls, psi: WaveFunction) -> "_PsiCalculus":
        grid = psi.grid
        vals = psi.values
        grad = grid.gradient(vals)
        prod = np.conj(vals)[None] * grad
        P = np.abs(vals) ** 2
        return cls(grid, P, reliable_mask(P), prod.real, prod.imag, np.imag(np.conj(vals) * grid.laplacian(vals)))

    def safe_P(self) -> np.ndarray:
        return np.maximum(self.P, max(density_floor(self.P), np.finfo(float).tiny))

    def velocity(self, constants: Constants) -> np.ndarray:
        return constants.hbar / constants.mass * self.im / self.safe_P()[None] * self.rel

    def log_gradient(self) -> np.ndarray:
        return 2 * self.re / self.safe_P()[None] * self.rel

    def P_orth(self, constants: Constants) -> np.ndarray:
        """``P (grad P/P).v``; regularized denominators, valid everywhere."""
        return constants.hbar / constants.mass * 2 * np.sum(self.re * self.im, axis=0) / self.safe_P()

    def P_div_v(self, constants: Constants) -> np.ndarray:
        return constants.hbar / constants.mass * self.im_lap - self.P_orth(constants)


def velocity_divergence(psi: WaveFunction, constants: Constants = Constants()) -> np.ndarray:
    """``div v`` from ``psi``; zero where unreliable."""
    calc = _PsiCalculus.of(psi)
    out = np.zeros(psi.grid.shape)
    out[calc.rel] = calc.P_div_v(constants)[calc.rel] / calc.P[calc.rel]
    return out


@dataclass
class FluctuationDiagnostics:
    u: np.ndarray
    delta_p: np.ndarray
    k_u: np.ndarray
    delta_E: np.ndarray
    Q: np.ndarray
    reliability_mask: np.ndarray
    v: np.ndarray

    def summary(self, grid: Grid) -> dict:
        rel = self.reliability_mask
        mag = np.sqrt(np.sum(self.delta_p**2, axis=0))
        return {
            "max_abs_u": float(np.max(np.abs(self.u))),
            "max_abs_delta_p": float(mag.max()),
            "max_abs_delta_E": float(np.max(np.abs(self.delta_E))),
            "Q_min": float(self.Q[rel].min()) if rel.any() else None,
            "Q_max": float(self.Q[rel].max()) if rel.any() else None,
            "reliable_fraction": float(rel.mean()),
        }


def diagnostics(state, constants: Constants = Constants()) -> FluctuationDiagnostics:
    """All fluctuation fields for a wave function or Madelung pair."""
    psi = to_wavefunction(state, constants) if isinstance(state, MadelungPair) else state
    grid = psi.grid
    P = psi.density
    calc = _PsiCalculus.of(psi)
    dp = momentum_fluctuation(grid, P, constants)
    div = np.zeros(grid.shape)
    div[calc.rel] = calc.P_div_v(constants)[calc.rel] / P[calc.rel]
    return FluctuationDiagnostics(
        u=dp / constants.mass,
        delta_p=dp,
        k_u=dp / constants.hbar,
        delta_E=0.5 * constants.hbar * div,
        Q=quantum_potential(grid, P, constants),
        reliability_mask=calc.rel,
        v=calc.velocity(constants),
    )


# --- flow classification ---------------------------------------------------


def position_spread(grid: Grid, P) -> float:
    """``sqrt(sum_a Var_a)`` of the density (positions taken in ``[-L/2, L/2)``)."""
    mass = grid.integrate(P)
    total = 0.0
    for a in range(grid.dims):
        x = grid.mesh[a]
        mean = grid.integrate(P * x) / mass
        total += grid.integrate(P * (x - mean) ** 2) / mass
    return float(np.sqrt(total))


@dataclass
class FlowReport:
    orth_residual: np.ndarray
    div_v: np.ndarray
    I_dP_dt: float
    I_cross: float
    I_div: float
    I_corr: float
    classification: str
    rate_scale: float
    threshold: float
    max_orth: float
    max_div: float

    def to_dict(self) -> dict:
        return {
            "I_dP_dt": self.I_dP_dt,
            "I_cross": self.I_cross,
            "I_div": self.I_div,
            "I_corr": self.I_corr,
            "max_abs_orth_residual": self.max_orth,
            "max_abs_div_v": self.max_div,
            "classification": self.classification,
            "rate_scale": self.rate_scale,
            "threshold": self.threshold,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def flow_report(pair, dP_dt, constants: Constants = Constants()) -> FlowReport:
    """Orthogonality residual, velocity divergence and the averaged integrals.

    ``pair`` may be a :class:`MadelungPair` or a :class:`WaveFunction`. The
    state is classified ``hamiltonian`` when both ``max|(grad P/P).v|`` and
    ``max|div v|`` (over points with ``P > 1e-8 max P``) stay below
    ``1e-6 * hbar / (m l^2)``, with ``l`` the position spread of ``P``.
    """
    psi = to_wavefunction(pair, constants) if isinstance(pair, MadelungPair) else pair
    grid = psi.grid
    dP_dt = grid.check_scalar(dP_dt, "dP/dt")
    calc = _PsiCalculus.of(psi)
    P, rel = calc.P, calc.rel
    P_orth = calc.P_orth(constants)
    P_div = calc.P_div_v(constants)
    orth = np.zeros(grid.shape)
    div = np.zeros(grid.shape)
    orth[rel] = P_orth[rel] / P[rel]
    div[rel] = P_div[rel] / P[rel]

    grad_S = constants.mass * calc.velocity(constants)
    delta_p = -0.5 * constants.hbar * calc.log_gradient()
    I_corr = float(grid.integrate(P * np.sum(grad_S * delta_p, axis=0)))

    region = P > CLASSIFY_FRACTION * P.max()
    spread = position_spread(grid, P)
    rate = constants.hbar / (constants.mass * spread**2)
    threshold = CLASSIFY_TOLERANCE * rate
    max_orth = float(np.max(np.abs(orth[region])))
    max_div = float(np.max(np.abs(div[region])))
    cls = "hamiltonian" if (max_orth < threshold and max_div < threshold) else "quantum"
    return FlowReport(
        orth_residual=orth,
        div_v=div,
        I_dP_dt=float(grid.integrate(np.where(rel, dP_dt, 0.0))),
        I_cross=float(grid.integrate(P_orth)),
        I_div=float(grid.integrate(P_div)),
        I_corr=I_corr,
        classification=cls,
        rate_scale=rate,
        threshold=threshold,
        max_orth=max_orth,
        max_div=max_div,
    )


def continuity_rate(psi: WaveFunction, constants: Constants = Constants()) -> np.ndarray:
    """``dP/dt = -div(P v) = -(hbar/m) Im(psi* lap psi)`` for a Schroedinger state."""
    calc = _PsiCalculus.of(psi)
    return -constants.hbar / constants.mass * calc.im_lap


def hamiltonian_flow_residual(state, constants: Constants = Constants()):
    """``((grad P/P) . v, div v)`` on reliable points; both vanish for Hamiltonian flow."""
    psi = to_wavefunction(state, constants) if isinstance(state, MadelungPair) else state
    calc = _PsiCalculus.of(psi)
    orth = np.zeros(psi.grid.shape)
    div = np.zeros(psi.grid.shape)
    orth[calc.rel] = calc.P_orth(constants)[calc.rel] / calc.P[calc.rel]
    div[calc.rel] = calc.P_div_v(constants)[calc.rel] / calc.P[calc.rel]
    return orth, div


def unbiasedness_integrals(state, dP_dt=None, constants: Constants = Constants()) -> dict:
    """The four position-averaged integrals of :class:`FlowReport`.

    ``dP_dt`` defaults to the Schroedinger rate of the state.
    """
    psi = to_wavefunction(state, constants) if isinstance(state, MadelungPair) else state
    if dP_dt is None:
        dP_dt = continuity_rate(psi, constants)
    rep = flow_report(psi, dP_dt, constants)
    return {"I_dP_dt": rep.I_dP_dt, "I_cross": rep.I_cross, "I_div": rep.I_div, "I_corr": rep.I_corr}
