"""Split-step Fourier integrator for the Schroedinger equation.

This is the reference solver: the hydrodynamic integrator and the trajectory
samplers are all checked against its snapshots.
"""
from __future__ import annotations

import warnings

import numpy as np

from . import states
from .evolution import EvolutionResult, SolverAbort
from .fields import Constants, StateError, WaveFunction
from .potentials import Potential


def energy(psi: WaveFunction, V: np.ndarray, constants: Constants = Constants()) -> float:
    """``<psi|H|psi>`` with the spectral kinetic operator."""
    grid = psi.grid
    kin = -(constants.hbar**2) / (2 * constants.mass) * grid.laplacian(psi.values)
    return float(np.real(grid.integrate(np.conj(psi.values) * (kin + V * psi.values))))


def accuracy_warnings(grid, V: np.ndarray, dt: float, constants: Constants) -> list[str]:
    out = []
    vmax = float(np.max(np.abs(V)))
    if dt * vmax / constants.hbar >= 0.1:
        out.append(f"dt*max|V|/hbar = {dt * vmax / constants.hbar:.3g} >= 0.1; splitting error may be large")
    kin = dt * constants.hbar * grid.k_max**2 / (2 * constants.mass)
    if kin >= 0.5:
        out.append(f"dt*hbar*k_max^2/2m = {kin:.3g} >= 0.5; highest modes under-resolved in time")
    return out


EDGE_TOLERANCE = 1e-10


def edge_amplitude(psi: WaveFunction) -> float:
    """Largest ``|psi|`` on the box faces relative to ``max |psi|``."""
    a = np.abs(psi.values)
    faces = [np.max(np.take(a, 0, axis=ax)) for ax in range(a.ndim)]
    return float(max(faces) / a.max())


def split_step_evolve(
    psi0: WaveFunction,
    potential: Potential,
    dt: float,
    n_steps: int,
    snapshot_every: int = 1,
    constants: Constants = Constants(),
) -> EvolutionResult:
    """Strang splitting ``exp(-iV dt/2hbar) exp(i hbar dt lap/2m) exp(-iV dt/2hbar)``.

    Snapshots (as wave functions) are taken at step 0 and every
    ``snapshot_every`` steps thereafter.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if n_steps < 0 or snapshot_every < 1:
        raise ValueError("n_steps must be >= 0 and snapshot_every >= 1")
    grid = psi0.grid
    hbar, m = constants.hbar, constants.mass
    V = potential.evaluate(grid, m)
    notes = accuracy_warnings(grid, V, dt, constants)
    if potential.kind == "harmonic" and edge_amplitude(psi0) >= EDGE_TOLERANCE:
        notes.append(f"state reaches the box edge (|psi| = {edge_amplitude(psi0):.2g} of max) in a periodised harmonic well")
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    half_v = np.exp(-0.5j * dt * V / hbar)
    kinetic = np.exp(-0.5j * dt * hbar * grid.k_squared / m)
    psi = psi0.values.copy()
    t0 = psi0.time
    snaps = [WaveFunction(grid, psi.copy(), t0)]
    n0 = psi0.norm()
    e0 = energy(psi0, V, constants)
    norm_drift = 0.0
    energy_drift = 0.0
    for step in range(1, n_steps + 1):
        psi = half_v * psi
        psi = np.fft.ifftn(kinetic * np.fft.fftn(psi))
        psi = half_v * psi
        if not np.all(np.isfinite(psi)):
            raise SolverAbort("NaN in wave function", step, t0 + step * dt)
        if step % snapshot_every == 0:
            snap = WaveFunction(grid, psi.copy(), t0 + step * dt)
            snaps.append(snap)
            norm_drift = max(norm_drift, abs(snap.norm() - n0))
            energy_drift = max(energy_drift, abs(energy(snap, V, constants) - e0) / max(abs(e0), 1e-300))
    return EvolutionResult(grid, "schrodinger", snaps, norm_drift, energy_drift, notes)


def stationary_state(grid, potential: Potential, n: int = 0, constants: Constants = Constants()) -> WaveFunction:
    """Analytic harmonic eigenstate ``n`` in {0, 1}."""
    if potential.kind != "harmonic":
        raise StateError("stationary states are provided for harmonic potentials only")
    center = potential.params.get("center", 0.0)
    return states.oscillator_state(grid, potential.omega, n, center=center, constants=constants)
