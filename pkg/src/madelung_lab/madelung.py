"""Direct integration of the hydrodynamic (continuity + Hamilton-Jacobi-Bohm) pair.

The state is evolved as amplitude ``R = sqrt(P)`` and action ``S`` with
classical RK4 and spectral space derivatives::

    dR/dt = -(grad R . grad S)/m - R lap S / 2m  = -div(R^2 grad S) / (2 m R)
    dS/dt = -|grad S|^2 / 2m - V - Q,     Q = -(hbar^2/2m) lap R / R

Both right-hand sides are evaluated together from one spectral Laplacian of
``R exp(iS/hbar)``; evaluating the terms one by one with separate spectral
products is violently stiff wherever ``R`` is small.

Only node-free states are supported; the run aborts as soon as ``P`` drops
below ``1e-9 max P`` anywhere.
"""
from __future__ import annotations

import numpy as np

from .evolution import EvolutionResult, SolverAbort
from .fields import Constants, MadelungPair, to_wavefunction
from .potentials import Potential
from .schrodinger import energy

NODE_FRACTION = 1e-9
RENORM_TOLERANCE = 1e-9
STABILITY_FACTOR = 0.25


class NodeFormation(SolverAbort):
    pass


def max_stable_dt(grid, constants: Constants = Constants()) -> float:
    """Step limit ``0.25 m h^2 / hbar`` (smallest spacing)."""
    return STABILITY_FACTOR * constants.mass * min(grid.spacing) ** 2 / constants.hbar


def _check_nodes(R, step, t):
    P = R * R
    if np.any(P < NODE_FRACTION * P.max()):
        raise NodeFormation("node formation", step, t)


def madelung_evolve(
    pair0: MadelungPair,
    potential: Potential,
    dt: float,
    n_steps: int,
    snapshot_every: int = 1,
    constants: Constants = Constants(),
) -> EvolutionResult:
    grid = pair0.grid
    hbar, m = constants.hbar, constants.mass
    if not dt > 0:
        raise ValueError("dt must be positive")
    limit = max_stable_dt(grid, constants)
    if dt >= limit:
        raise ValueError(f"dt = {dt:.3g} violates the stability limit 0.25 m h^2 / hbar = {limit:.3g}")
    R = np.sqrt(pair0.P)
    S = pair0.S.astype(float).copy()
    t0 = pair0.time
    _check_nodes(R, 0, t0)
    V = potential.evaluate(grid, m)
    k2 = grid.k_squared

    def rhs(R, S):
        # Both equations are read off the spectral Laplacian of R exp(iS/hbar):
        #   conj(phi) lap(R phi) = lap R - R |grad S|^2/hbar^2 + i div(R^2 grad S)/(hbar R)
        # which is pointwise identical to the continuity and HJB right-hand
        # sides but keeps the linearised operator spectrally consistent
        # (frequencies up to hbar k_max^2 / 2m, no 1/R amplification).
        phase = np.exp(1j * S / hbar)
        L = np.conj(phase) * np.fft.ifftn(-k2 * np.fft.fftn(R * phase))
        dR = -hbar / (2 * m) * L.imag
        dS = hbar**2 / (2 * m) * L.real / R - V
        return dR, dS

    def snapshot(R, S, t):
        return MadelungPair(grid, R * R, S, t)

    snaps = [snapshot(R, S, t0)]
    corrections = []
    e0 = energy(to_wavefunction(snaps[0], constants), V, constants)
    energy_drift = 0.0
    norm_drift = 0.0
    for step in range(1, n_steps + 1):
        k1R, k1S = rhs(R, S)
        k2R, k2S = rhs(R + 0.5 * dt * k1R, S + 0.5 * dt * k1S)
        k3R, k3S = rhs(R + 0.5 * dt * k2R, S + 0.5 * dt * k2S)
        k4R, k4S = rhs(R + dt * k3R, S + dt * k3S)
        R = R + dt / 6 * (k1R + 2 * k2R + 2 * k3R + k4R)
        S = S + dt / 6 * (k1S + 2 * k2S + 2 * k3S + k4S)
        t = t0 + step * dt
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(S))):
            raise SolverAbort("NaN in Madelung state", step, t)
        _check_nodes(R, step, t)
        mass = grid.integrate(R * R)
        norm_drift = max(norm_drift, abs(mass - 1))
        if abs(mass - 1) > RENORM_TOLERANCE:
            R = R / np.sqrt(mass)
            corrections.append({"step": step, "time": t, "mass_before": float(mass)})
        if step % snapshot_every == 0:
            snap = snapshot(R, S, t)
            snaps.append(snap)
            e = energy(to_wavefunction(snap, constants), V, constants)
            energy_drift = max(energy_drift, abs(e - e0) / max(abs(e0), 1e-300))
    notes = [f"renormalized {len(corrections)} times (|int P - 1| > {RENORM_TOLERANCE:g})"] if corrections else []
    return EvolutionResult(grid, "madelung", snaps, norm_drift, energy_drift, notes, corrections)


def continuity_residual(snapshots, constants: Constants = Constants()):
    """Residual ``(P1 - P0)/dt + div(P v)`` per snapshot interval.

    The flux term is averaged over the interval endpoints (midpoint value to
    second order). Accepts :class:`MadelungPair` or wave-function snapshots.
    Returns ``(fields, max_abs)``.
    """
    from .fields import WaveFunction
    from .fluctuations import continuity_rate

    snaps = list(snapshots.snapshots if isinstance(snapshots, EvolutionResult) else snapshots)
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots")
    psis = [s if isinstance(s, WaveFunction) else to_wavefunction(s, constants) for s in snaps]
    fields = []
    for a, b in zip(psis[:-1], psis[1:]):
        dt = b.time - a.time
        if dt <= 0:
            raise ValueError("snapshot times must increase")
        flux_div = -0.5 * (continuity_rate(a, constants) + continuity_rate(b, constants))
        fields.append((b.density - a.density) / dt + flux_div)
    return fields, float(max(np.max(np.abs(f)) for f in fields))
