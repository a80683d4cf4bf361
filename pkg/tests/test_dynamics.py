"""Time evolution: dispersion, conservation, reversibility, orbit tracking."""
import math

import numpy as np
import pytest

from conftest import get_profile
from qgplab.dynamics import (HydroState, chi_minus_perturbation, default_dt,
                             dispersion_omega, evolve, lyapunov,
                             orbital_distance, product_norm,
                             random_smooth_perturbation, rhs,
                             stability_experiment, step_rk4)
from qgplab.errors import FrameError, ValidationError
from qgplab.grid import Grid, GridFunction, derivative, shift


def make_state(grid, eta, v, kappa, t=0.0):
    return HydroState(t, GridFunction(grid, eta), GridFunction(grid, v), kappa)


def profile_state(prof, t=0.0):
    return make_state(prof.grid, prof.eta.values.copy(), prof.v.values.copy(),
                      prof.kappa, t)


def test_state_validation():
    g = Grid(10.0, 128)
    zeros = np.zeros(g.n)
    with pytest.raises(FrameError):
        make_state(g, np.full(g.n, 1.5), zeros, 0.0)
    with pytest.raises(ValidationError):
        make_state(g, zeros, zeros, 0.7)
    # positive kappa shrinks the admissible depth range from below
    with pytest.raises(FrameError):
        make_state(g, np.full(g.n, -3.0), zeros, 0.4)
    st = make_state(g, zeros, zeros, 0.4)
    assert st.grid == g


def test_vacuum_fixed_point():
    g = Grid(10.0, 128)
    st = make_state(g, np.zeros(g.n), np.zeros(g.n), -1.0)
    de, dv = rhs(st)
    assert np.all(de.values == 0.0) and np.all(dv.values == 0.0)
    after = step_rk4(st, 0.01)
    assert np.all(after.eta.values == 0.0) and np.all(after.v.values == 0.0)
    assert after.t == pytest.approx(0.01)


def test_traveling_wave_identity():
    for c, kap in ((0.8, 0.0), (0.6, -3.0)):
        prof = get_profile(c, kap)
        de, dv = rhs(profile_state(prof))
        ex = derivative(prof.eta, 1).values
        vx = derivative(prof.v, 1).values
        r_eta = np.max(np.abs(de.values + c * ex)) / max(1.0, np.max(np.abs(ex)))
        r_v = np.max(np.abs(dv.values + c * vx)) / max(1.0, np.max(np.abs(vx)))
        assert r_eta <= 1e-7 and r_v <= 1e-7, (c, kap)


def test_linear_mode_frequency():
    from qgplab.dynamics import _Scheme

    g = Grid(40.0, 256)
    kap = -1.0
    j = 8
    k = g.k[j]
    om = dispersion_omega(k, kap)
    assert om == pytest.approx(math.sqrt(2 * k * k + 3 * k ** 4))
    eps = 1e-8
    eta = eps * np.cos(k * g.x)
    v = (om / (2.0 * k)) * eps * np.cos(k * g.x)  # left-moving eigenmode
    period = 2.0 * math.pi / om
    steps = 400
    dt = period / steps
    sch = _Scheme(g, kap, 0.5)
    eh, vh = sch.project(eta), sch.project(v)
    e0 = eh.copy()
    coeff = []
    for _ in range(steps):
        eh, vh = sch.step(eh, vh, dt)
        coeff.append(eh[j])
    ret = np.sqrt(np.sum(np.abs(eh - e0) ** 2) / np.sum(np.abs(e0) ** 2))
    assert ret <= 1e-3  # one-period return accurate to 0.1%
    phases = np.unwrap(np.angle(np.array(coeff)))
    om_measured = (phases[-1] - phases[0]) / ((steps - 1) * dt)
    assert abs(abs(om_measured) - om) / om <= 1e-4


def test_soliton_advected():
    prof = get_profile(0.8, 0.0)
    st = profile_state(prof)
    dt = default_dt(prof.grid, 0.0)
    steps = int(math.ceil(1.0 / dt))
    dt = 1.0 / steps
    for _ in range(steps):
        st = step_rk4(st, dt)
    d, s = orbital_distance(st, prof)
    assert d <= 1e-6
    assert s == pytest.approx(0.8, abs=1e-4)
    # shift-matched L2 error of the depth field alone
    err = prof.grid.norm_l2(st.eta.values - shift(prof.eta, s).values)
    assert err <= 1e-6


def test_time_reversibility():
    from qgplab.dynamics import _Scheme

    prof = get_profile(0.7, -2.0)
    sch = _Scheme(prof.grid, -2.0)
    dt = default_dt(prof.grid, -2.0)
    eh = sch.project(prof.eta.values)
    vh = sch.project(prof.v.values)
    e0, v0 = eh.copy(), vh.copy()
    for _ in range(40):
        eh, vh = sch.step(eh, vh, dt)
    # reverse the velocity field and step the same number of times
    vh = -vh
    for _ in range(40):
        eh, vh = sch.step(eh, vh, dt)
    n = prof.grid.n
    r = np.max(np.abs(np.fft.irfft(eh, n=n) - np.fft.irfft(e0, n=n)))
    r += np.max(np.abs(np.fft.irfft(-vh, n=n) - np.fft.irfft(v0, n=n)))
    assert r <= 1e-8


def test_rk4_convergence_order():
    # self-convergence on smooth data cancels the fixed spatial error,
    # leaving the pure time-stepping order
    g = Grid(20.0, 256)
    kap = -1.0
    eta0 = 0.3 * np.exp(-((g.x / 2.0) ** 2))
    dt0 = default_dt(g, kap)

    def advance(dt, steps):
        st = make_state(g, eta0, np.zeros(g.n), kap)
        for _ in range(steps):
            st = step_rk4(st, dt)
        return st.eta.values

    u1 = advance(dt0, 16)
    u2 = advance(dt0 / 2, 32)
    u3 = advance(dt0 / 4, 64)
    e1 = np.max(np.abs(u1 - u2))
    e2 = np.max(np.abs(u2 - u3))
    order = math.log2(e1 / e2)
    assert 3.5 <= order <= 4.5


def test_evolve_report_structure():
    prof = get_profile(0.8, 0.0)
    rep = evolve(profile_state(prof), T=0.5, sample_every=0.1, reference=prof)
    m = len(rep.times)
    assert rep.times[0] == 0.0 and rep.times[-1] == pytest.approx(0.5)
    for series in (rep.energy_drift, rep.momentum_drift, rep.particles_drift,
                   rep.twist_drift, rep.orbital_distance, rep.shifts,
                   rep.lyapunov):
        assert len(series) == m
    assert rep.validity == "ok" and rep.violation_time is None
    assert rep.energy_drift[0] == 0.0
    assert max(abs(x) for x in rep.energy_drift) <= 1e-10
    assert max(abs(x) for x in rep.momentum_drift) <= 1e-10
    assert max(abs(x) for x in rep.particles_drift) <= 1e-10
    assert max(abs(x) for x in rep.twist_drift) <= 1e-10
    assert rep.initial_state is not None and rep.final_state is not None
    assert rep.final_state.t == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        evolve(profile_state(prof), T=-1.0)


def test_evolve_without_reference_fills_none():
    prof = get_profile(0.8, 0.0)
    rep = evolve(profile_state(prof), T=0.1, sample_every=0.05)
    assert all(d is None for d in rep.orbital_distance)
    assert all(s is None for s in rep.shifts)
    assert all(v is None for v in rep.lyapunov)


def test_orbital_distance():
    prof = get_profile(0.8, 0.0)
    d, s = orbital_distance(profile_state(prof), prof)
    assert d <= 1e-12 and abs(s) <= 1e-8

    moved = make_state(prof.grid, shift(prof.eta, 0.37).values,
                       shift(prof.v, 0.37).values, 0.0)
    d, s = orbital_distance(moved, prof)
    assert d <= 1e-10
    assert s == pytest.approx(0.37, abs=1e-8)

    eps = 1e-3
    de, dv = chi_minus_perturbation(prof, eps)
    bumped = make_state(prof.grid, prof.eta.values + de, prof.v.values + dv, 0.0)
    d, _ = orbital_distance(bumped, prof)
    assert 0.01 * eps <= d <= eps  # transverse direction: comparable to eps


def test_lyapunov_values():
    prof = get_profile(0.8, 0.0)
    assert lyapunov(profile_state(prof), prof) == pytest.approx(0.0, abs=1e-13)
    de, dv = random_smooth_perturbation(prof, 1e-2, seed=3)
    st = make_state(prof.grid, prof.eta.values + de, prof.v.values + dv, 0.0)
    rep = evolve(st, T=2.0, sample_every=0.25, reference=prof)
    vals = [v for v in rep.lyapunov if v is not None]
    assert vals[0] > 0.0
    spread = max(vals) - min(vals)
    assert spread <= 1e-8 * max(abs(v) for v in vals)
    # coercivity fit: V bounds the squared orbital distance from below
    alphas = [v / d ** 2 for v, d in zip(vals, rep.orbital_distance) if d > 0]
    assert min(alphas) > 0.0
    with pytest.raises(ValidationError):
        lyapunov(make_state(prof.grid, np.zeros(prof.grid.n),
                            np.zeros(prof.grid.n), -1.0), prof)


def test_perturbation_builders():
    prof = get_profile(0.8, 0.0)
    de, dv = chi_minus_perturbation(prof, 1e-2)
    assert product_norm(prof.grid, de, dv) == pytest.approx(1e-2, rel=1e-12)
    core = int(np.argmax(prof.eta.values))
    assert de[core] < 0.0  # oriented away from the frame boundary

    d1 = random_smooth_perturbation(prof, 1e-2, seed=5)
    d2 = random_smooth_perturbation(prof, 1e-2, seed=5)
    assert np.array_equal(d1[0], d2[0]) and np.array_equal(d1[1], d2[1])
    d3 = random_smooth_perturbation(prof, 1e-2, seed=6)
    assert not np.array_equal(d1[0], d3[0])
    # band limit: no energy above a quarter of the grid band
    g = prof.grid
    fh = np.fft.rfft(d1[0])
    k_cut = 0.25 * math.pi / g.dx
    assert np.max(np.abs(fh[g.k > k_cut * 1.001])) <= 1e-12 * np.max(np.abs(fh))
    assert (prof.eta.values + d1[0]).max() < 1.0


def test_frame_violation_reported_not_raised():
    g = Grid(30.0, 256)
    # depth a hair under the frame bound: the quasipressure gradient kicks
    # the fields across eta = 1 within the first step, while still finite
    eta = (1.0 - 1e-9) * np.exp(-((g.x / 6.0) ** 2))
    st = make_state(g, eta, np.zeros(g.n), 0.0)
    rep = evolve(st, T=8.0, sample_every=0.25)
    assert rep.validity == "frame_violation"
    assert rep.violation_time is not None and 0.0 <= rep.violation_time <= 8.0
    assert len(rep.times) == len(rep.energy_drift)
    assert rep.final_state is not None  # last valid sample is kept


def test_stability_experiment_plumbing():
    with pytest.raises(ValidationError):
        stability_experiment(0.8, 0.0, {"mode": "bogus"}, T=1.0)
    with pytest.raises(ValidationError):
        stability_experiment(0.8, 0.0, {"mode": "none", "extra": 1}, T=1.0)
    prof = get_profile(0.8, 0.0)
    rep, verdict = stability_experiment(0.8, 0.0, {"mode": "none"}, T=0.5,
                                        grid=prof.grid, sample_every=0.25)
    assert verdict == "bounded"
    assert rep.validity == "ok"


def test_stability_experiment_psi_q_mode():
    prof = get_profile(0.8, 0.0)
    rep, verdict = stability_experiment(
        0.8, 0.0, {"mode": "psi_q", "amplitude": 5e-3}, T=0.5,
        grid=prof.grid, sample_every=0.25)
    assert verdict in ("bounded", "inconclusive")
    dists = [d for d in rep.orbital_distance if d is not None]
    assert dists[0] > 0.0


def test_default_dt_respects_band():
    g = Grid(20.0, 512)
    for kap, cf in ((0.0, 0.25), (-10.0, 0.5)):
        dt = default_dt(g, kap, cf)
        om = dispersion_omega(cf * math.pi / g.dx, kap)
        assert dt * om == pytest.approx(0.5 * 2.8)
