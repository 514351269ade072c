"""Bohmian and Nelson particle ensembles driven by solver snapshots.

Both samplers read the velocity field from a time series of wave functions
(or Madelung pairs) and interpolate it multilinearly in space and linearly
in time. Nelson walkers add the osmotic drift ``D grad ln P`` and Gaussian
kicks of variance ``2 D dt``, with ``D = hbar / 2m``.

Random numbers come from counter-based Philox streams: the normals of walker
``w`` at step ``s`` are a pure function of ``(seed, s, w)``, so the ensemble
is bit-identical however the walkers are split across threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionResult
from .fields import Constants, WaveFunction, density_floor, to_wavefunction
from .grid import Grid
from .potentials import FREE, Potential

CHUNK = 1 << 15
NELSON_SUBSTEPS = 10
RESIDUAL_FRACTION = 1e-6
_UINT53 = 2.0**-53


@dataclass(frozen=True)
class DiffusionConstants:
    """Diffusion constant of the Nelson process, derived from ``hbar`` and ``m``."""

    constants: Constants = Constants()

    @property
    def D(self) -> float:
        return self.constants.hbar / (2 * self.constants.mass)


@dataclass
class TrajectoryEnsemble:
    """Walker positions at the recorded times.

    ``positions`` has shape ``(n_walkers, n_times, dims)`` (walker-major) and
    is always wrapped into the periodic box.
    """

    scheme: str
    seed: int
    dt_path: float
    times: np.ndarray
    positions: np.ndarray
    flagged: np.ndarray | None = None
    masked_events: int = 0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.flagged is None:
            self.flagged = np.zeros(self.positions.shape[0], dtype=bool)

    @property
    def n_walkers(self) -> int:
        return self.positions.shape[0]

    @property
    def dims(self) -> int:
        return self.positions.shape[2]

    def at(self, index: int) -> np.ndarray:
        """Positions ``(n_walkers, dims)`` at recorded time ``index``."""
        return self.positions[:, index, :]

    def metadata(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": int(self.seed),
            "dt_path": self.dt_path,
            "n_walkers": self.n_walkers,
            "dims": self.dims,
            "times": [float(t) for t in self.times],
            "flagged_walkers": int(np.count_nonzero(self.flagged)),
            "masked_events": int(self.masked_events),
            "warnings": list(self.warnings),
        }


# ----------------------------------------------------------------------------
# interpolation


def interpolate(grid: Grid, f, X) -> np.ndarray:
    """Periodic multilinear interpolation of ``f`` at positions ``X``.

    ``f`` is a scalar field (``grid.shape``) or a stack of them
    (``(c, *grid.shape)``). ``X`` has shape ``(n, dims)``. Returns ``(n,)`` or
    ``(c, n)``.
    """
    f = np.asarray(f)
    stacked = f.ndim == grid.dims + 1
    if not stacked:
        f = f[None]
    X = np.asarray(X, dtype=float).reshape(-1, grid.dims)
    base, frac = [], []
    for a in range(grid.dims):
        w = (X[:, a] + grid.lengths[a] / 2) / grid.spacing[a]
        i0 = np.floor(w)
        frac.append(w - i0)
        base.append(i0.astype(np.int64) % grid.points[a])
    out = np.zeros((f.shape[0], X.shape[0]))
    for corner in range(1 << grid.dims):
        idx, weight = [], np.ones(X.shape[0])
        for a in range(grid.dims):
            up = (corner >> a) & 1
            idx.append((base[a] + up) % grid.points[a])
            weight = weight * (frac[a] if up else 1 - frac[a])
        out += weight * f[(slice(None), *idx)]
    return out if stacked else out[0]


class _FieldSeries:
    """Per-snapshot drift fields with linear interpolation in time."""

    def __init__(self, snapshots, constants: Constants, osmotic: bool):
        snaps = list(snapshots.snapshots if isinstance(snapshots, EvolutionResult) else snapshots)
        if len(snaps) < 2:
            raise ValueError("need at least two snapshots")
        psis = [s if isinstance(s, WaveFunction) else to_wavefunction(s, constants) for s in snaps]
        self.grid = psis[0].grid
        self.times = np.array([p.time for p in psis], dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must increase")
        self.stack, self.floor = [], []
        hb_m = constants.hbar / constants.mass
        D = DiffusionConstants(constants).D
        for psi in psis:
            P = psi.density
            floor = density_floor(P)
            safe = np.maximum(P, floor)
            dpsi = self.grid.gradient(psi.values)
            cross = np.conj(psi.values)[None] * dpsi
            v = hb_m * cross.imag / safe
            v[:, P <= floor] = 0.0
            if osmotic:
                # grad ln P from the floored density: bounded in empty regions
                v = v + D * 2 * cross.real / safe
            self.stack.append(np.concatenate([v, P[None]]))
            self.floor.append(floor)
        self.dims = self.grid.dims
        # one periodic node appended per axis so interpolation needs no wrap
        pad = [(0, 0)] + [(0, 1)] * self.dims
        self.padded = [np.pad(f, pad, mode="wrap").reshape(f.shape[0], -1) for f in self.stack]

    def locate(self, t: float):
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return k, float(np.clip(w, 0.0, 1.0))

    def sample(self, X, t):
        """Drift ``(n, dims)`` and below-floor flags ``(n,)`` at positions ``X``."""
        k, w = self.locate(t)
        grid = self.grid
        strides = np.cumprod([1] + [n + 1 for n in grid.points[::-1]])[:-1][::-1]
        flat0 = np.zeros(X.shape[0], dtype=np.int64)
        frac = []
        for a in range(self.dims):
            u = (X[:, a] + grid.lengths[a] / 2) / grid.spacing[a]
            i0 = np.minimum(u.astype(np.int64), grid.points[a] - 1)
            frac.append(u - i0)
            flat0 += i0 * strides[a]
        both = (self.padded[k], self.padded[k + 1]) if w > 0.0 else (self.padded[k],)
        f = 0.0
        for corner in range(1 << self.dims):
            flat, weight = flat0, 1.0
            for a in range(self.dims):
                if (corner >> a) & 1:
                    flat = flat + strides[a]
                    weight = weight * frac[a]
                else:
                    weight = weight * (1 - frac[a])
            f = f + weight * (np.take(both[0], flat, axis=1) if w == 0.0 else
                              (1 - w) * np.take(both[0], flat, axis=1) + w * np.take(both[1], flat, axis=1))
        floor = (1 - w) * self.floor[k] + w * self.floor[k + 1]
        return f[: self.dims].T, f[self.dims] <= floor

    def drift_at(self, X, t):
        return self.sample(X, t)[0]

    def masked_at(self, X, t):
        return self.sample(X, t)[1]


def _substeps(interval: float, dt_path: float) -> int:
    return max(1, int(np.ceil(interval / dt_path - 1e-9)))


def _threads() -> int:
    raw = os.environ.get("MADELUNG_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"MADELUNG_LAB_THREADS must be an integer, got {raw!r}") from None


def _map_chunks(fn, n: int):
    """Apply ``fn(start, stop)`` over walker chunks; results merged in order."""
    bounds = [(a, min(a + CHUNK, n)) for a in range(0, n, CHUNK)]
    workers = min(_threads(), len(bounds))
    if workers <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


# ----------------------------------------------------------------------------
# random numbers


def _raw_block(seed: int, step: int, start: int, stop: int) -> np.ndarray:
    bg = np.random.Philox(key=np.array([seed, step], dtype=np.uint64))
    bg.advance(start)
    return bg.random_raw(4 * (stop - start)).reshape(-1, 4)


def _to_unit(raw) -> np.ndarray:
    return ((raw >> np.uint64(11)).astype(float) + 1.0) * _UINT53


def uniforms(seed: int, step: int, start: int, stop: int) -> np.ndarray:
    """Four uniforms in ``(0, 1]`` per walker in ``[start, stop)``, shape ``(n, 4)``.

    Walker ``w`` at step ``s`` uses Philox block ``w`` under key ``(seed, s)``.
    """
    return _to_unit(_raw_block(seed, step, start, stop))


def normals(seed: int, step: int, start: int, stop: int, dims: int) -> np.ndarray:
    """Standard normals ``(n, dims)`` by Box-Muller from :func:`uniforms`.

    Uniforms ``(u0, u1)`` give normals 0 and 1, ``(u2, u3)`` normals 2 and 3.
    """
    raw = _raw_block(seed, step, start, stop)
    out = np.empty((raw.shape[0], dims))
    for pair in range((dims + 1) // 2):
        r = np.sqrt(-2 * np.log(_to_unit(raw[:, 2 * pair])))
        theta = 2 * np.pi * _to_unit(raw[:, 2 * pair + 1])
        out[:, 2 * pair] = r * np.cos(theta)
        if 2 * pair + 1 < dims:
            out[:, 2 * pair + 1] = r * np.sin(theta)
    return out


# ----------------------------------------------------------------------------
# sampling and distances


def _cell_cdf(p: np.ndarray, h: float):
    """Cell masses of the periodic piecewise-linear interpolant of ``p`` (last axis)."""
    nxt = np.roll(p, -1, axis=-1)
    mass = 0.5 * h * (p + nxt)
    cdf = np.concatenate([np.zeros(p.shape[:-1] + (1,)), np.cumsum(mass, axis=-1)], axis=-1)
    total = cdf[..., -1:]
    return nxt, cdf / total, total[..., 0]


def _invert_cells(p: np.ndarray, x0: float, h: float, r: np.ndarray) -> np.ndarray:
    """Inverse CDF of the piecewise-linear density through nodes ``p``.

    ``p`` is one line ``(N,)`` shared by all ``r``, or one line per draw ``(n, N)``.
    """
    nxt, cdf, total = _cell_cdf(p, h)
    N = p.shape[-1]
    if p.ndim == 1:
        j = np.searchsorted(cdf, r, side="right") - 1
    else:
        j = np.count_nonzero(cdf <= r[:, None], axis=1) - 1
    j = np.clip(j, 0, N - 1)
    take = (lambda a: a[j]) if p.ndim == 1 else (lambda a: np.take_along_axis(a, j[:, None], 1)[:, 0])
    m = (r - take(cdf)) * total / h
    a, b = take(p), take(nxt) - take(p)
    # root of b s^2 / 2 + a s - m = 0 in [0, 1], written without cancellation
    disc = np.sqrt(np.maximum(a * a + 2 * b * m, 0.0))
    denom = a + disc
    s = np.where(denom > 0, 2 * m / np.where(denom > 0, denom, 1.0), 0.5)
    return x0 + (j + np.clip(s, 0.0, 1.0)) * h


def sample_density(grid: Grid, P, seed: int, n: int) -> np.ndarray:
    """Draw ``n`` positions from ``P`` by inverse CDF, one axis at a time.

    Axis 0 is drawn from the marginal; each further axis from the conditional
    density on the grid line nearest to the coordinates already drawn. Within
    a cell the density is the linear interpolant of its nodes.
    """
    P = grid.check_scalar(P, "P")
    if np.any(P < 0) or P.max() <= 0:
        raise ValueError("density must be non-negative with positive mass")

    def chunk(start, stop):
        u = uniforms(seed, 0, start, stop)
        X = np.empty((stop - start, grid.dims))
        idx = []
        for a in range(grid.dims):
            x0, h = -grid.lengths[a] / 2, grid.spacing[a]
            sub = P[tuple(idx)] if idx else P
            if a == 0:
                line = sub.sum(axis=tuple(range(1, sub.ndim))) if sub.ndim > 1 else sub
                X[:, 0] = _invert_cells(line, x0, h, u[:, 0])
            else:
                # one conditional line per walker: shape (n, N_a)
                lines = sub.sum(axis=tuple(range(2, sub.ndim))) if sub.ndim > 2 else sub
                X[:, a] = _invert_cells(lines, x0, h, u[:, a])
            j = np.rint((X[:, a] - x0) / h).astype(np.int64) % grid.points[a]
            idx.append(j)
        return grid.wrap(X)

    return np.concatenate(_map_chunks(chunk, n))


def density_cdf(grid: Grid, P, x, axis: int = 0) -> np.ndarray:
    """CDF of the marginal of ``P`` along ``axis`` (piecewise-linear density)."""
    p = grid.marginal(P, axis)
    h, x0 = grid.spacing[axis], -grid.lengths[axis] / 2
    nxt, cdf, total = _cell_cdf(p, h)
    w = (np.asarray(x, dtype=float) - x0) / h
    j = np.clip(np.floor(w).astype(np.int64), 0, len(p) - 1)
    s = np.clip(w - j, 0.0, 1.0)
    return cdf[j] + h * (p[j] * s + 0.5 * (nxt[j] - p[j]) * s * s) / total


def ks_distance(grid: Grid, P, samples, axis: int = 0) -> float:
    """Kolmogorov-Smirnov distance between samples and the marginal of ``P``."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    F = density_cdf(grid, P, x, axis)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def histogram(grid: Grid, samples, axis: int = 0):
    """Walker counts per grid cell along ``axis`` (cells centred on nodes).

    Returns ``(centres, density)`` with the density normalised to unit mass.
    """
    h, x0 = grid.spacing[axis], -grid.lengths[axis] / 2
    edges = x0 - h / 2 + h * np.arange(grid.points[axis] + 1)
    x = np.asarray(samples, dtype=float).reshape(-1)
    x = np.where(x >= edges[-1], x - grid.lengths[axis], x)
    counts, _ = np.histogram(x, bins=edges)
    return grid.axes[axis], counts / (x.size * h)


# ----------------------------------------------------------------------------
# ensembles


def _as_positions(grid: Grid, x0) -> np.ndarray:
    X = np.asarray(x0, dtype=float)
    if X.ndim == 1 and grid.dims == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != grid.dims:
        raise ValueError(f"positions must have shape (n, {grid.dims})")
    if not np.all(np.isfinite(X)):
        raise ValueError("positions must be finite")
    return grid.wrap(X)


def bohm_trajectories(snapshots, x0, dt_path: float, constants: Constants = Constants()) -> TrajectoryEnsemble:
    """Integrate ``dX/dt = v(X, t)`` by RK4 through the snapshot series.

    Positions are recorded at the snapshot times; each snapshot interval is
    split into ``ceil(interval / dt_path)`` equal steps. A walker that lands
    where the density is below the floor is flagged and carried on with the
    velocity it had when it was flagged.
    """
    if not dt_path > 0:
        raise ValueError("dt_path must be positive")
    series = _FieldSeries(snapshots, constants, osmotic=False)
    grid = series.grid
    X = _as_positions(grid, x0)
    n = X.shape[0]
    times = series.times
    out = np.empty((n, len(times), grid.dims))
    out[:, 0] = X
    flagged = np.zeros(n, dtype=bool)
    frozen = np.zeros_like(X)
    vel = series.drift_at
    events = 0
    t = times[0]
    for k in range(len(times) - 1):
        m = _substeps(times[k + 1] - times[k], dt_path)
        dt = (times[k + 1] - times[k]) / m
        for i in range(m):
            t = times[k] + i * dt
            newly = series.masked_at(X, t) & ~flagged
            if np.any(newly):
                events += int(np.count_nonzero(newly))
                frozen[newly] = vel(X[newly], t)
                flagged |= newly
            k1 = vel(X, t)
            k2 = vel(X + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = vel(X + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = vel(X + dt * k3, t + dt)
            step = dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            step[flagged] = dt * frozen[flagged]
            X = grid.wrap(X + step)
        out[:, k + 1] = X
    notes = [f"{int(flagged.sum())} walkers entered the density floor and were frozen"] if flagged.any() else []
    return TrajectoryEnsemble("bohm", 0, dt_path, times.copy(), out, flagged, events, notes)


def nelson_ensemble(
    snapshots,
    n_walkers: int,
    seed: int,
    dt_path: float,
    constants: Constants = Constants(),
) -> TrajectoryEnsemble:
    """Euler-Maruyama walkers of the forward Nelson process.

    ``dX = [v + D grad ln P] dt + sqrt(2 D dt) xi`` with initial positions
    drawn from the first snapshot's density. Each snapshot interval must hold
    at least ten path steps. Walkers found where ``P`` is below the floor
    use the bounded drift of the floored density; such events are counted.
    """
    if n_walkers < 1:
        raise ValueError("n_walkers must be positive")
    if not dt_path > 0:
        raise ValueError("dt_path must be positive")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    series = _FieldSeries(snapshots, constants, osmotic=True)
    grid = series.grid
    times = series.times
    intervals = np.diff(times)
    if np.any(dt_path > intervals / NELSON_SUBSTEPS * (1 + 1e-9)):
        raise ValueError(f"dt_path must be at most 1/{NELSON_SUBSTEPS} of the snapshot spacing")
    D = DiffusionConstants(constants).D
    plan = []
    for k, interval in enumerate(intervals):
        m = _substeps(interval, dt_path)
        plan.append((k, m, interval / m))
    X0 = sample_density(grid, series.stack[0][grid.dims], seed, n_walkers)

    def run(start, stop):
        X = X0[start:stop].copy()
        out = np.empty((stop - start, len(times), grid.dims))
        out[:, 0] = X
        events = 0
        step = 0
        for k, m, dt in plan:
            for i in range(m):
                step += 1
                t = times[k] + i * dt
                drift, masked = series.sample(X, t)
                events += int(np.count_nonzero(masked))
                kick = normals(seed, step, start, stop, grid.dims)
                X = grid.wrap(X + drift * dt + np.sqrt(2 * D * dt) * kick)
            out[:, k + 1] = X
        return out, events

    parts = _map_chunks(run, n_walkers)
    positions = np.concatenate([p for p, _ in parts])
    events = sum(e for _, e in parts)
    notes = [f"{events} walker-steps used the floored osmotic drift"] if events else []
    return TrajectoryEnsemble("nelson", seed, dt_path, times.copy(), positions, None, events, notes)


# ----------------------------------------------------------------------------
# Nelson's coupled equations


def nelson_pde_residual(snapshots, potential: Potential = FREE, constants: Constants = Constants()):
    """Max-norm residuals of the two coupled Nelson equations.

    With ``ut = D grad ln P`` and the current velocity ``v``::

        d ut/dt = -D lap v - grad(ut . v)
        d v/dt  = -grad V/m - (v . grad) v + (ut . grad) ut + D lap ut

    Time derivatives are central differences over neighbouring snapshots
    (uniform spacing assumed). ``ut`` and ``v`` are not periodic, so their
    space derivatives use fourth-order differences, evaluated only where the
    stencil stays inside ``P >= 1e-6 max P``. Returns ``(residual_u, residual_v)``.
    """
    snaps = list(snapshots.snapshots if isinstance(snapshots, EvolutionResult) else snapshots)
    if len(snaps) < 3:
        raise ValueError("need at least three snapshots")
    psis = [s if isinstance(s, WaveFunction) else to_wavefunction(s, constants) for s in snaps]
    grid = psis[0].grid
    D = DiffusionConstants(constants).D
    hb_m = constants.hbar / constants.mass
    accel = -grid.fd_gradient(potential.evaluate(grid, constants.mass)) / constants.mass
    ut, v, masks = [], [], []
    for psi in psis:
        P = psi.density
        safe = np.maximum(P, density_floor(P))
        cross = np.conj(psi.values)[None] * grid.gradient(psi.values)
        ut.append(D * 2 * cross.real / safe)
        v.append(hb_m * cross.imag / safe)
        masks.append(grid.stencil_interior(P >= RESIDUAL_FRACTION * P.max()))
    res_u = res_v = 0.0
    for k in range(1, len(psis) - 1):
        span = psis[k + 1].time - psis[k - 1].time
        dut = (ut[k + 1] - ut[k - 1]) / span
        dv = (v[k + 1] - v[k - 1]) / span
        u_k, v_k = ut[k], v[k]
        lap_v = np.stack([grid.fd_laplacian(c) for c in v_k])
        lap_u = np.stack([grid.fd_laplacian(c) for c in u_k])
        r_u = dut + D * lap_v + grid.fd_gradient(np.sum(u_k * v_k, axis=0))
        adv_v = np.stack([sum(v_k[b] * grid.fd_derivative(v_k[a], b) for b in range(grid.dims)) for a in range(grid.dims)])
        adv_u = np.stack([sum(u_k[b] * grid.fd_derivative(u_k[a], b) for b in range(grid.dims)) for a in range(grid.dims)])
        r_v = dv - (accel - adv_v + adv_u + D * lap_u)
        inner = masks[k - 1] & masks[k] & masks[k + 1]
        if not inner.any():
            raise ValueError("no interior points above the residual threshold")
        res_u = max(res_u, float(np.max(np.abs(r_u[:, inner]))))
        res_v = max(res_v, float(np.max(np.abs(r_v[:, inner]))))
    return res_u, res_v
