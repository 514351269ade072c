"""Klein-Gordon evolution and the relativistic fluctuation fields.

The field obeys ``d^2 Psi/dt^2 = c^2 lap Psi - (m c^2/hbar)^2 Psi`` and is
advanced by leapfrog with the spectral Laplacian. The metric signature is
``(+, -, -, -)`` throughout, so ``box = (1/c^2) d^2/dt^2 - lap`` and the
contravariant gradient is ``d^mu = ((1/c) d/dt, -grad)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import SolverAbort
from .fields import Constants, reliable_mask
from .fluctuations import momentum_fluctuation
from .grid import Grid

CFL_LIMIT = 0.5
SIGNATURE = (1, -1, -1, -1)


@dataclass
class KGState:
    grid: Grid
    Psi: np.ndarray
    dPsi_dt: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.Psi = np.asarray(self.grid.check_scalar(self.Psi, "Psi"), dtype=complex)
        self.dPsi_dt = np.asarray(self.grid.check_scalar(self.dPsi_dt, "dPsi/dt"), dtype=complex)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.Psi) ** 2


@dataclass
class FourVectorField:
    """Time component and spatial components of a contravariant four-vector."""

    time_component: np.ndarray
    space_components: np.ndarray
    mask: np.ndarray
    signature: tuple = SIGNATURE

    def contraction(self) -> np.ma.MaskedArray:
        """``a_mu a^mu = a0^2 - |a|^2`` under the fixed signature."""
        val = self.time_component**2 - np.sum(self.space_components**2, axis=0)
        return np.ma.MaskedArray(val, mask=~self.mask)

    def magnitude(self) -> np.ma.MaskedArray:
        """``sqrt|a_mu a^mu|``."""
        return np.sqrt(np.abs(self.contraction()))


@dataclass
class KGResult:
    """Snapshots of a leapfrog run; iterates like the list of states."""

    grid: Grid
    snapshots: list
    charge_drift: float = 0.0
    charges: list = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.snapshots)

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])


def dispersion(grid: Grid, constants: Constants = Constants()) -> np.ndarray:
    """Analytic ``omega(k) = sqrt(c^2 k^2 + (m c^2/hbar)^2)`` on the wave-number lattice."""
    c = constants.c
    rest = constants.mass * c**2 / constants.hbar
    return np.sqrt(c**2 * grid.k_squared + rest**2)


def positive_frequency_rate(grid: Grid, Psi, constants: Constants = Constants()) -> np.ndarray:
    """``dPsi/dt = -i omega(k) Psi`` mode by mode: the positive-frequency branch."""
    Psi = grid.check_scalar(Psi, "Psi")
    return np.fft.ifftn(-1j * dispersion(grid, constants) * np.fft.fftn(Psi))


def kg_charge(state: KGState) -> float:
    """``(i/2) int (Psi* dPsi/dt - Psi dPsi*/dt) = -int Im(Psi* dPsi/dt)``."""
    return float(-state.grid.integrate(np.imag(np.conj(state.Psi) * state.dPsi_dt)))


def max_stable_dt(grid: Grid, constants: Constants = Constants()) -> float:
    """Largest dt allowed: the CFL bound ``c dt / h <= 0.5`` on every axis
    and leapfrog stability ``dt omega_max < 2`` for the spectral operator."""
    cfl = CFL_LIMIT * min(grid.spacing) / constants.c
    omega_max = float(np.max(dispersion(grid, constants)))
    return min(cfl, 2.0 / omega_max * (1 - 1e-12))


def kg_evolve(
    state0: KGState,
    dt: float,
    n_steps: int,
    snapshot_every: int = 1,
    constants: Constants = Constants(),
) -> KGResult:
    """Leapfrog ``Psi^{n+1} = 2 Psi^n - Psi^{n-1} + dt^2 A Psi^n``.

    The first step uses the Taylor start ``Psi^1 = Psi^0 + dt Psi'^0 +
    dt^2/2 A Psi^0``. Snapshot time derivatives are central differences.
    The staggered charge ``-Im <Psi^n, Psi^{n+1}> / dt`` is conserved by the
    scheme to round-off and is tracked every step.
    """
    grid = state0.grid
    if not dt > 0:
        raise ValueError("dt must be positive")
    if n_steps < 0 or snapshot_every < 1:
        raise ValueError("n_steps must be >= 0 and snapshot_every >= 1")
    c = constants.c
    for h in grid.spacing:
        if c * dt / h > CFL_LIMIT:
            raise ValueError(f"CFL violation: c dt / h = {c * dt / h:.3g} > {CFL_LIMIT}")
    omega_max = float(np.max(dispersion(grid, constants)))
    if dt * omega_max >= 2:
        raise ValueError(f"leapfrog unstable: dt * omega_max = {dt * omega_max:.3g} >= 2")
    factor = -(dt**2) * (c**2 * grid.k_squared + (constants.mass * c**2 / constants.hbar) ** 2)

    def accel_dt2(psi):
        return np.fft.ifftn(factor * np.fft.fftn(psi))

    def staggered(a, b):
        return float(-grid.integrate(np.imag(np.conj(a) * b)) / dt)

    t0 = state0.time
    prev = state0.Psi.copy()
    cur = prev + dt * state0.dPsi_dt + 0.5 * accel_dt2(prev)
    if not np.all(np.isfinite(cur)):
        raise SolverAbort("NaN in Klein-Gordon field", 1, t0 + dt)
    snaps = [KGState(grid, prev.copy(), state0.dPsi_dt.copy(), t0)]
    q0 = staggered(prev, cur)
    charges = [q0]
    drift = 0.0
    for step in range(1, n_steps + 1):
        nxt = 2 * cur - prev + accel_dt2(cur)
        if not np.all(np.isfinite(nxt)):
            raise SolverAbort("NaN in Klein-Gordon field", step, t0 + step * dt)
        q = staggered(cur, nxt)
        drift = max(drift, abs(q - q0) / max(abs(q0), 1e-300))
        if step % snapshot_every == 0:
            snaps.append(KGState(grid, cur.copy(), (nxt - prev) / (2 * dt), t0 + step * dt))
            charges.append(q)
        prev, cur = cur, nxt
    return KGResult(grid, snaps, drift, charges)


def dalembertian(grid: Grid, f, f_prev, f_next, dt: float, constants: Constants = Constants()) -> np.ndarray:
    """``(f_next - 2 f + f_prev) / (c^2 dt^2) - lap f`` with the spectral Laplacian."""
    f = grid.check_scalar(f)
    f_prev, f_next = grid.check_scalar(f_prev), grid.check_scalar(f_next)
    if not dt > 0:
        raise ValueError("dt must be positive")
    return (f_next - 2 * f + f_prev) / (constants.c**2 * dt**2) - grid.laplacian(f)


def _densities(grid, P_prev, P, P_next):
    out = []
    for name, p in (("P_prev", P_prev), ("P", P), ("P_next", P_next)):
        p = np.asarray(grid.check_scalar(p, name), dtype=float)
        if np.any(p < 0):
            raise ValueError(f"{name} has negative values")
        out.append(p)
    return out


def effective_mass_field(grid: Grid, P_prev, P, P_next, dt: float, constants: Constants = Constants()) -> np.ma.MaskedArray:
    """``M^2 c^2 = m^2 c^2 + hbar^2 box(sqrt P) / sqrt P`` at the middle snapshot.

    Masked where ``P`` is at or below the density floor.
    """
    P_prev, P, P_next = _densities(grid, P_prev, P, P_next)
    R = np.sqrt(P)
    box = dalembertian(grid, R, np.sqrt(P_prev), np.sqrt(P_next), dt, constants)
    rel = reliable_mask(P)
    out = np.full(grid.shape, (constants.mass * constants.c) ** 2)
    out[rel] += constants.hbar**2 * box[rel] / R[rel]
    return np.ma.MaskedArray(out, mask=~rel)


def effective_mass(grid: Grid, P_prev, P, P_next, dt: float, constants: Constants = Constants()) -> np.ma.MaskedArray:
    """``M`` itself; masked also where ``M^2`` would be negative."""
    m2c2 = effective_mass_field(grid, P_prev, P, P_next, dt, constants)
    neg = m2c2.filled(0.0) < 0
    return np.ma.MaskedArray(np.sqrt(np.abs(m2c2.data)) / constants.c, mask=m2c2.mask | neg)


def four_momentum_fluctuation(grid: Grid, P_prev, P, P_next, dt: float, constants: Constants = Constants()) -> FourVectorField:
    """``delta p^mu = (hbar/2) d^mu P / P`` at the middle snapshot.

    With ``d^mu = ((1/c) d/dt, -grad)`` the space part coincides with the
    non-relativistic ``delta p = -(hbar/2) grad P / P``. Both parts vanish
    where ``P`` is at or below the floor.
    """
    P_prev, P, P_next = _densities(grid, P_prev, P, P_next)
    if not dt > 0:
        raise ValueError("dt must be positive")
    rel = reliable_mask(P)
    dP_dt = (P_next - P_prev) / (2 * dt)
    time = np.zeros(grid.shape)
    time[rel] = 0.5 * constants.hbar / constants.c * dP_dt[rel] / P[rel]
    space = momentum_fluctuation(grid, P, constants)
    return FourVectorField(time, space, rel)
