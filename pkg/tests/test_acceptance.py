"""Acceptance criteria 1-10.

Each test records its measured numbers through the ``criterion`` fixture;
the terminal summary prints one PASS/FAIL line per criterion. Tolerances
are the published ones and are not relaxed here.
"""
import subprocess
import sys
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_fisher, gaussian_density
from madelung_lab import states
from madelung_lab.fields import Constants, WaveFunction, from_wavefunction
from madelung_lab.fluctuations import (
    continuity_rate,
    fluctuation_magnitude,
    flow_report,
    momentum_fluctuation,
    osmotic_velocity,
    quantum_potential,
    quantum_potential_bracket,
    rms_momentum_fluctuation,
    unbiasedness_integrals,
)
from madelung_lab.grid import Grid
from madelung_lab.kleingordon import KGState, effective_mass, kg_evolve, positive_frequency_rate
from madelung_lab.madelung import madelung_evolve, max_stable_dt
from madelung_lab.potentials import FREE, harmonic
from madelung_lab.run import initial_state, simulate
from madelung_lab.scenario import bundled, load
from madelung_lab.schrodinger import split_step_evolve
from madelung_lab.trajectories import bohm_trajectories, ks_distance, nelson_ensemble, nelson_pde_residual
from madelung_lab.uncertainty import FisherUndefined, exact_uncertainty, heisenberg_report

G = Grid((1024,), (40.0,))
X = G.axes[0]
C2 = Constants(hbar=0.7, mass=1.3)


def quiet(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return split_step_evolve(*args, **kw)


def scenario(name):
    return load(next(p for p in bundled() if p.stem == name))


def rel_l2(grid, a, b):
    return float(np.sqrt(grid.integrate((a - b) ** 2) / grid.integrate(b**2)))


def image_sum_gaussian(x, t, length, sigma0=1.0):
    """Free Gaussian on the circle, summed over periodic images of the line solution."""
    out = np.zeros_like(x, dtype=complex)
    for n in range(-3, 4):
        z = x - n * length
        a = 1 + 1j * t / (2 * sigma0**2)
        out += (2 * np.pi * sigma0**2) ** -0.25 / np.sqrt(a) * np.exp(-(z**2) / (4 * sigma0**2 * a))
    return out


def static_series(psi, energy, times):
    return [WaveFunction(psi.grid, psi.values * np.exp(-1j * energy * t), t) for t in times]


def position_std(psi):
    P = psi.density
    x = psi.grid.axes[0]
    mean = psi.grid.integrate(x * P)
    return float(np.sqrt(psi.grid.integrate((x - mean) ** 2 * P)))


def library_states():
    """Named states outside the scenario files: the families of the exact-uncertainty check."""
    boost = 2 * np.pi * 12 / 40.0
    return {
        "gaussian": states.gaussian(G, sigma=0.8),
        "boosted gaussian": states.gaussian(G, sigma=0.8, center=1.0, momentum=boost),
        "oscillator n=0": states.oscillator_state(G, 1.3, 0),
        "oscillator n=1": states.oscillator_state(G, 1.3, 1),
        "mixture": states.mixture(G, separation=5.0, sigma=0.8, weights=(0.3, 0.7)),
    }


def scenario_states():
    for path in bundled():
        sc = load(path)
        yield path.stem, initial_state(sc), sc


# ---------------------------------------------------------------------------


def test_c1_exact_uncertainty(criterion):
    checks, details = {}, {}
    worst = 0.0
    for name, psi in library_states().items():
        ex = exact_uncertainty(G, psi.density)
        err = abs(ex.product - 0.5) / 0.5
        worst = max(worst, err)
        checks[name] = err < 1e-6
    # independent oracle for one factor: Fisher information by dense Simpson quadrature
    fisher = dense_fisher(lambda x: gaussian_density(x, 0.8), lambda x: -x / 0.64 * gaussian_density(x, 0.8), -20, 20)
    dx = exact_uncertainty(G, library_states()["gaussian"].density).delta_x
    checks["fisher_length_vs_dense_quadrature"] = abs(dx - fisher**-0.5) < 1e-6
    details["max_rel_error"] = worst
    details["densities"] = len(library_states())
    criterion(1, "delta_x * delta_p0 = hbar/2", checks, details)


def test_c2_heisenberg_suite(criterion):
    pool = [(name, psi, Constants()) for name, psi in library_states().items()]
    pool += [(name, psi, sc.constants) for name, psi, sc in scenario_states()]
    bound, cramer, mom, real_eq = [], [], [], []
    evaluated = 0
    for name, psi, c in pool:
        for axis in range(psi.grid.dims):
            try:
                rep = heisenberg_report(psi, axis, c)
            except FisherUndefined:
                continue  # the uniform plane wave has no Fisher length
            evaluated += 1
            half = c.hbar / 2
            if rep.heisenberg_lhs < half * (1 - 1e-9):
                bound.append((name, rep.heisenberg_lhs / half - 1))
            # 1e-12 absorbs round-off where the bound is an equality (real states)
            if rep.Delta_x < rep.delta_x * (1 - 1e-12):
                cramer.append(name)
            if rep.Delta_p < rep.delta_p0 * (1 - 1e-12):
                mom.append(name)
            v = psi.values
            if np.max(np.abs(v.imag)) <= 1e-14 * np.max(np.abs(v)):
                if abs(rep.Delta_p - rep.delta_p0) > 1e-6 * rep.delta_p0:
                    real_eq.append(name)
    gauss = heisenberg_report(library_states()["gaussian"])
    checks = {
        "heisenberg_on_full_library": not bound,
        "minimum_uncertainty_gaussian": abs(gauss.heisenberg_lhs - 0.5) < 0.5e-6,
        "Delta_x_ge_delta_x": not cramer,
        "Delta_p_ge_delta_p0": not mom,
        "real_states_Delta_p_eq_delta_p0": not real_eq,
    }
    details = {"evaluated": evaluated, "heisenberg_violations": [n for n, _ in bound],
               "worst_relative_deficit": min((d for _, d in bound), default=0.0),
               "cramer_rao_violations": cramer, "momentum_bound_violations": mom}
    criterion(2, "uncertainty bounds", checks, details)


def test_c3_quantum_potential_stationarity(criterion):
    omega = 1.0
    P = states.oscillator_state(G, omega).density
    region = P > 1e-8 * P.max()
    Q = quantum_potential(G, P)
    B = quantum_potential_bracket(G, P)
    dev = float(np.max(np.abs(Q + 0.5 * omega**2 * X**2 - 0.5 * omega)[region]))
    forms = float(np.max(np.abs(Q - B)[region]))
    bulk = P > 1e-4 * P.max()
    checks = {"Q_plus_V_is_zero_point": dev < 1e-6, "bracket_eq_sqrtP_form": forms < 1e-8}
    details = {"max_dev": dev, "forms_max_diff": forms,
               "forms_max_diff_P_gt_1e-4": float(np.max(np.abs(Q - B)[bulk]))}
    criterion(3, "Q + V = hbar omega / 2", checks, details)


# ---------------------------------------------------------------------------


def test_c4_equivalence(criterion):
    errs = {}
    for name in ("free-gaussian-small", "harmonic-coherent"):
        sc = scenario(name + "-madelung")
        psi0 = initial_state(sc)
        res = madelung_evolve(from_wavefunction(psi0), sc.potential, sc.dt, sc.steps, sc.snapshot_every)
        ref = quiet(psi0, sc.potential, sc.dt, sc.steps, sc.snapshot_every)
        errs[name] = (max(rel_l2(sc.grid, a.P, b.density) for a, b in zip(res.snapshots, ref.snapshots)),
                      res.snapshots[-1].time)
    omega = scenario("harmonic-coherent-madelung").potential.params["omega"]
    checks = {
        "free_L2_lt_1e-3": errs["free-gaussian-small"][0] < 1e-3,
        "free_runs_until_sigma_doubles": errs["free-gaussian-small"][1] >= 2 * np.sqrt(3) - 1e-12,
        "harmonic_L2_lt_1e-3": errs["harmonic-coherent"][0] < 1e-3,
        "harmonic_runs_two_periods": errs["harmonic-coherent"][1] >= 4 * np.pi / omega - 1e-9,
    }
    details = {"free_max_L2": errs["free-gaussian-small"][0], "harmonic_max_L2": errs["harmonic-coherent"][0]}
    criterion(4, "Madelung vs oracle distance", checks, details)


def test_c4_refinement(criterion):
    T = 2 * np.sqrt(3)
    # dt: RK4 against the exact free propagator (the free split step has no splitting error)
    g = Grid((32,), (12.0,))
    psi0 = WaveFunction(g, image_sum_gaussian(g.axes[0], 0.0, 12.0)).normalized()
    dt_errs = []
    for dt in (0.03, 0.015, 0.0075):
        n = int(round(T / dt))
        a = madelung_evolve(from_wavefunction(psi0), FREE, T / n, n, n).snapshots[-1]
        b = quiet(psi0, FREE, T / n, n, n).snapshots[-1]
        dt_errs.append(rel_l2(g, a.P, b.density))
    dt_order = float(np.log2(dt_errs[0] / dt_errs[2]) / 2)
    # h: spectral convergence against the closed-form circle solution
    h_errs = []
    for N in (32, 64):
        g = Grid((N,), (12.0,))
        x = g.axes[0]
        psi0 = WaveFunction(g, image_sum_gaussian(x, 0.0, 12.0)).normalized()
        dt = 0.5 * max_stable_dt(g)
        n = int(np.ceil(T / dt))
        a = madelung_evolve(from_wavefunction(psi0), FREE, T / n, n, n).snapshots[-1]
        exact = np.abs(image_sum_gaussian(x, T, 12.0)) ** 2
        h_errs.append(rel_l2(g, a.P, exact / g.integrate(exact)))
    # in the well: the oracle's Strang splitting sets the gap, second order in dt
    sc = scenario("harmonic-coherent-madelung")
    psi0 = initial_state(sc)
    well = []
    for f in (1, 2, 4):
        dt, n = sc.dt / f, sc.steps * f
        a = madelung_evolve(from_wavefunction(psi0), sc.potential, dt, n, n // 10)
        b = quiet(psi0, sc.potential, dt, n, n // 10)
        well.append(max(rel_l2(sc.grid, s.P, r.density) for s, r in zip(a.snapshots, b.snapshots)))
    well_order = float(np.log2(well[0] / well[2]) / 2)
    checks = {
        "dt_order_4_rk4": 3.5 < dt_order < 4.5,
        "h_spectral": h_errs[0] / h_errs[1] > 100,
        "well_gap_order_2": 1.7 < well_order < 2.3,
        "well_gap_decreases": well[0] > well[1] > well[2],
    }
    details = {"dt_order": dt_order, "h_ratio": h_errs[0] / h_errs[1], "well_order": well_order}
    criterion(4, "refinement orders", checks, details)


# ---------------------------------------------------------------------------


def test_c5_classification(criterion):
    g = Grid((256, 256), (24.0, 24.0))
    ring = states.ring(g, width=1.5)
    rep = flow_report(ring, continuity_rate(ring))
    t = 0.8
    spread = states.gaussian(G, sigma=1.0, time=t)
    srep = flow_report(spread, continuity_rate(spread))
    rate = states.free_gaussian_rate(t, 1.0)
    checks = {
        "ring_hamiltonian": rep.classification == "hamiltonian",
        "ring_orth_below_scale": rep.max_orth < 1e-6 * rep.rate_scale,
        "spreading_quantum": srep.classification == "quantum",
        # spreading moves probability outward, so I_div = +sigma_dot/sigma and I_cross is its negative
        "I_cross_eq_minus_rate": abs(srep.I_cross + rate) < 1e-6,
        "I_div_eq_rate": abs(srep.I_div - rate) < 1e-6,
    }
    details = {"ring_max_orth": rep.max_orth, "scale": rep.rate_scale,
               "I_cross_err": abs(srep.I_cross + rate), "I_div_err": abs(srep.I_div - rate)}
    criterion(5, "ring and spreading Gaussian", checks, details)


def test_c5_integration_by_parts(criterion):
    worst = [0.0]
    cases = [0]
    g1 = Grid((128,), (20.0,))
    g2 = Grid((32, 32), (10.0, 12.0))

    def smooth(grid, amp, phase, mode):
        out_a = np.zeros(grid.shape)
        out_s = np.zeros(grid.shape)
        for ax in range(grid.dims):
            x = grid.mesh[ax]
            L = grid.lengths[ax]
            out_a += sum(c * np.cos(2 * np.pi * (j + 1) * x / L + 0.3 * j + ax) for j, c in enumerate(amp))
            out_s += sum(c * np.sin(2 * np.pi * (j + 1) * x / L + 0.7 * j - ax) for j, c in enumerate(phase))
            out_s += 2 * np.pi * mode * x / L
        return WaveFunction(grid, np.exp(out_a + 1j * out_s)).normalized()

    @settings(max_examples=120, database=None)
    @given(
        st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4),
        st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=4),
        st.integers(-3, 3),
        st.booleans(),
    )
    def identity(amp, phase, mode, two_d):
        ints = unbiasedness_integrals(smooth(g2 if two_d else g1, amp, phase, mode))
        worst[0] = max(worst[0], abs(ints["I_cross"] + ints["I_div"]))
        cases[0] += 1

    identity()
    for _, psi, sc in scenario_states():
        ints = unbiasedness_integrals(psi, constants=sc.constants)
        worst[0] = max(worst[0], abs(ints["I_cross"] + ints["I_div"]))
        cases[0] += 1
    checks = {"at_least_100_cases": cases[0] >= 100, "I_cross_plus_I_div_lt_1e-8": worst[0] < 1e-8}
    criterion(5, "integration by parts", checks, {"cases": cases[0], "max_abs_sum": worst[0]})


# ---------------------------------------------------------------------------


def test_c6_fluctuation_magnitudes(criterion):
    s = 0.9
    P = gaussian_density(X, s, 0.0)
    inner = (np.abs(X) < 3 * s) & (X != 0)
    u_exact = C2.hbar * X / (2 * C2.mass * s**2)
    u = osmotic_velocity(G, P, C2)[0]
    u_err = float(np.max(np.abs(u - u_exact)[inner] / np.abs(u_exact[inner])))
    dp_exact = C2.hbar * np.abs(X) / (2 * s**2)
    mag = fluctuation_magnitude(G, P, C2)
    dp_err = float(np.max(np.abs(mag - dp_exact)[inner] / dp_exact[inner]))
    rms = rms_momentum_fluctuation(G, P, C2)
    rms_err = abs(rms - C2.hbar / (2 * s)) / (C2.hbar / (2 * s))

    lam = 2.0
    P_lam = gaussian_density(X / lam, s) / lam
    mag_lam = fluctuation_magnitude(G, P_lam, C2)
    # |dp|_lam(x) = |dp|(x / lam) / lam; grid point 512 + 2j pairs with 512 + j
    j = np.arange(-120, 121)
    a, b = mag_lam[512 + 2 * j], mag[512 + j] / lam
    keep = j != 0
    scale_err = float(np.max(np.abs(a - b)[keep] / b[keep]))
    rms_scale = abs(rms_momentum_fluctuation(G, P_lam, C2) - rms / lam) / (rms / lam)
    ref = momentum_fluctuation(G, P, C2)
    bulk = P > 1e-8 * P.max()
    renorm = float(np.max(np.abs(momentum_fluctuation(G, lam * P, C2) - ref)[:, bulk]) / np.max(np.abs(ref)))
    checks = {
        "osmotic_velocity": u_err < 1e-6,
        "delta_p_magnitude": dp_err < 1e-6,
        "rms": rms_err < 1e-6,
        "scaling_lambda_2": scale_err < 1e-6 and rms_scale < 1e-6,
        "renormalization_lambda_2": renorm < 1e-6,
    }
    details = {"u_rel": u_err, "dp_rel": dp_err, "rms_rel": rms_err, "scaling_rel": scale_err,
               "renorm_rel": renorm}
    criterion(6, "Gaussian fluctuation fields", checks, details)


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def free_run():
    sc = scenario("free-gaussian")
    return sc, quiet(initial_state(sc), sc.potential, sc.dt, sc.steps, sc.snapshot_every, sc.constants)


def test_c7_nelson_ks(criterion, free_run):
    sc, res = free_run
    ens = nelson_ensemble(res, 100_000, sc.seed, 0.0175 * 0.5, sc.constants)
    ks = {}
    for i in (5, 10, 20):
        ks[f"t={res.snapshots[i].time:.3g}"] = ks_distance(sc.grid, res.snapshots[i].density, ens.at(i)[:, 0])
    checks = {k: v < 0.01 for k, v in ks.items()}
    criterion(7, "Nelson KS at N=1e5", checks, {**ks, "seed": sc.seed})


def test_c7_stationary_variance(criterion):
    g = Grid((512,), (20.0,))
    omega = 1.0
    psi = states.oscillator_state(g, omega)
    snaps = static_series(psi, 0.5 * omega, np.linspace(0, 3 * 2 * np.pi / omega, 13))
    ens = nelson_ensemble(snaps, 100_000, 4242, 0.02)
    target = 0.5 / omega
    devs = [abs(np.var(ens.at(i)[:, 0]) / target - 1) for i in range(len(snaps))]
    criterion(7, "stationary variance", {"within_3_percent": max(devs) < 0.03},
              {"max_rel_dev": float(max(devs)), "N": 100_000})


def test_c7_bohm_scaling(criterion, free_run):
    sc, res = free_run
    x0 = np.array([-2.5, -1.0, -0.3, 0.4, 1.2, 2.0])
    ens = bohm_trajectories(res, x0, 0.002, sc.constants)
    worst = 0.0
    for i, t in enumerate(ens.times):
        sigma = states.free_gaussian_sigma(t, 1.0, sc.constants)
        worst = max(worst, float(np.max(np.abs(ens.at(i)[:, 0] / (x0 * sigma) - 1))))
    criterion(7, "Bohm scaling law", {"within_1_percent": worst < 0.01, "reaches_sigma_doubling":
                                      ens.times[-1] >= 2 * np.sqrt(3)}, {"max_rel_dev": worst})


def test_c7_residual_order(criterion):
    g = Grid((512,), (40.0,))
    peaks = []
    for every in (40, 20, 10):
        res = quiet(states.gaussian(g, time=1.0), FREE, 0.001, 2 * every, every)
        peaks.append(nelson_pde_residual(res))
    orders = [float(np.log2(peaks[0][j] / peaks[2][j]) / 2) for j in (0, 1)]
    checks = {"osmotic_eq_order_2": 1.8 < orders[0] < 2.2, "current_eq_order_2": 1.8 < orders[1] < 2.2}
    criterion(7, "residual decay", checks, {"order_u": orders[0], "order_v": orders[1]})


# ---------------------------------------------------------------------------


def test_c8_dispersion_and_charge(criterion):
    ring = Grid((64,), (2 * np.pi,))
    c1 = Constants(c=1.0)
    errs = {}
    for mode in (1, 3, 7):
        x = ring.axes[0]
        omega = np.sqrt(mode**2 + 1.0)
        Psi = np.exp(1j * mode * x)
        res = kg_evolve(KGState(ring, Psi, -1j * omega * Psi), 0.01, 2000, 10, c1)
        phase = np.unwrap([np.angle(np.vdot(Psi, s.Psi)) for s in res])
        errs[f"mode{mode}"] = float(abs(-np.polyfit(res.times, phase, 1)[0] / omega - 1))
    c = Constants(c=10.0)
    g = Grid((256,), (40.0,))
    psi = states.gaussian(g, momentum=1.0).values
    res = kg_evolve(KGState(g, psi, positive_frequency_rate(g, psi, c)), 2e-4, 10_000, 1000, c)
    checks = {k: v < 1e-3 for k, v in errs.items()}
    checks["charge_drift_lt_1e-8"] = res.charge_drift < 1e-8
    criterion(8, "dispersion and charge", checks, {**errs, "charge_drift": res.charge_drift})


def test_c8_envelope_and_mass(criterion):
    sc = scenario("kg-packet")
    c = sc.constants
    psi0 = initial_state(sc)
    res = kg_evolve(KGState(sc.grid, psi0.values, positive_frequency_rate(sc.grid, psi0.values, c)),
                    sc.dt, sc.steps, sc.snapshot_every, c)
    ref = quiet(psi0, FREE, sc.dt * sc.snapshot_every, len(res) - 1, 1, c)
    rest = c.mass * c.c**2 / c.hbar
    env = max(float(np.sqrt(sc.grid.integrate(np.abs(k.Psi * np.exp(1j * rest * k.time) - s.values) ** 2)))
              for k, s in zip(res, ref.snapshots))
    spec = np.abs(sc.grid.fourier_forward(psi0.values)) ** 2
    k_rms = float(np.sqrt(np.sum(sc.grid.k_squared * spec) / np.sum(spec)))
    # M = m on plane waves: exact samples A exp(i(kx - omega t)) at three instants
    ring = Grid((64,), (2 * np.pi,))
    cm = Constants(mass=1.7, c=3.0)
    k, dt = 3.0, 1e-3
    omega = np.sqrt(cm.c**2 * k**2 + (cm.mass * cm.c**2 / cm.hbar) ** 2)
    P = [np.abs(np.exp(1j * (k * ring.axes[0] - omega * t)) / np.sqrt(2 * np.pi)) ** 2 for t in (0, dt, 2 * dt)]
    M = effective_mass(ring, *P, dt, cm)
    mass_err = float(np.max(np.abs(M - cm.mass)) / cm.mass)
    checks = {
        # a tenfold separation of scales; the qualitative "much less" is not given a number
        "non_relativistic_regime": k_rms * c.hbar / (c.mass * c.c) < 0.2,
        "envelope_within_1_percent": env < 1e-2,
        "M_eq_m_on_plane_wave": mass_err < 1e-10 and not np.any(M.mask),
    }
    criterion(8, "NR envelope and effective mass", checks, {"envelope_L2": env, "k_hbar_over_mc": k_rms * c.hbar / (c.mass * c.c),
                                                       "mass_rel": mass_err})


# ---------------------------------------------------------------------------


def test_c9_oracle_hygiene(criterion):
    g = Grid((512,), (40.0,))
    drift = quiet(states.gaussian(g, sigma=1.0, momentum=0.5), FREE, 0.001, 10_000, 500).norm_drift
    spread = quiet(states.gaussian(g, sigma=1.0), FREE, 0.01, 800, 100)
    worst = max(abs(position_std(s) / states.free_gaussian_sigma(s.time, 1.0) - 1) for s in spread.snapshots)
    # the free split step is exact in time, so the dt order is measured in a well
    g2 = Grid((256,), (20.0,))
    x = g2.axes[0]
    psi0 = states.gaussian(g2, center=2.0, sigma=np.sqrt(0.5))
    errors = []
    for dt in (0.04, 0.02, 0.01):
        n = int(round(2 * np.pi / dt))
        last = quiet(psi0, harmonic(1.0), dt, n, n).snapshots[-1]
        exact = gaussian_density(x, np.sqrt(0.5), 2.0 * np.cos(last.time))
        errors.append(float(np.max(np.abs(last.density - exact))))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    checks = {
        "norm_drift_lt_1e-10": drift < 1e-10,
        "spreading_within_0.1_percent": worst < 1e-3,
        "dt_order_2": all(3.5 < r < 4.5 for r in ratios),
    }
    criterion(9, "split-step oracle", checks, {"norm_drift": drift, "spread_rel": worst,
                                              "ratio_1": ratios[0], "ratio_2": ratios[1]})


# ---------------------------------------------------------------------------


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "madelung_lab", *args], capture_output=True, text=True)


def test_c10_bit_identical(criterion, tmp_path):
    sc = scenario("free-gaussian")
    digests = []
    for name in ("a", "b"):
        digests.append(simulate(sc, tmp_path / name).digests)
    blobs = []
    for name in ("a", "b"):
        r = _cli("trajectories", str(tmp_path / "a"), "--scheme", "nelson", "-n", "2000",
                 "--seed", str(sc.seed), "-o", str(tmp_path / f"t{name}"))
        assert r.returncode == 0, r.stderr
        blobs.append((tmp_path / f"t{name}" / "ensemble.bin").read_bytes())
    files = [p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file() and p.name != "run.json"]
    same_files = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    checks = {"run_digests_equal": digests[0] == digests[1] and bool(digests[0]),
              "run_files_equal": same_files and len(files) > 20,
              "ensemble_bytes_equal": blobs[0] == blobs[1]}
    criterion(10, "bit-identical repeats", checks, {"files": len(files), "digests": len(digests[0])})


def test_c10_bundled_scenarios_via_cli(criterion, tmp_path):
    codes = {}
    for path in bundled():
        r = _cli("simulate", str(path), "-o", str(tmp_path / path.stem))
        codes[path.stem] = r.returncode
    failed = [k for k, v in codes.items() if v != 0]
    criterion(10, "bundled scenarios exit 0", {"all_exit_0": not failed, "library_nonempty": len(codes) >= 10},
              {"scenarios": len(codes), "failed": failed})
