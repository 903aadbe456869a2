"""Time evolution: RK4 stepping, fits, blow-up-time tuning, Duhamel check,
physical-space cross-validation."""

import math

import numpy as np
import pytest

from blowlab import evolve as ev
from blowlab import model as md
from blowlab import spectral as sp
from blowlab.errors import (AmplitudeAbort, DegenerateFitError, DomainError,
                            StepSizeError)
from conftest import cached_grid, cached_ops, cached_params, cached_projection


def _setup(p=3.0, n=48):
    return (cached_params(p), cached_grid(n), cached_ops(p, n),
            cached_projection(p, n))


def test_rhs_zero_state():
    params, grid, ops, _ = _setup()
    st = md.State(phi1=np.zeros(48), phi2=np.zeros(48), tau=0.0)
    out = ev.rhs(st, ops, grid, params)
    assert sp.state_norm(grid, out.stacked()) <= 1e-13


def test_rhs_linear_on_symmetry_mode():
    params, grid, ops, _ = _setup()
    gsym = sp.symmetry_mode(grid, params)
    out = ev.rhs(gsym, ops, grid, params, nonlinear=False)
    assert sp.state_norm(grid, out.stacked() - gsym.stacked()) <= 1e-10


def test_rhs_nonlinear_extra_term():
    # A(phi2) = 1 on the symmetry mode, so the extra term is rho N(1)
    params, grid, ops, _ = _setup()
    gsym = sp.symmetry_mode(grid, params)
    lin = ev.rhs(gsym, ops, grid, params, nonlinear=False)
    nl = ev.rhs(gsym, ops, grid, params, nonlinear=True)
    extra = nl.stacked() - lin.stacked()
    expect = np.concatenate([grid.nodes * (3.0 * math.sqrt(2.0) + 1.0),
                             np.zeros(48)])
    expect[0] = 0.0
    assert np.abs(extra - expect).max() <= 1e-12


def test_integrate_symmetry_mode_grows_exponentially():
    params, grid, ops, proj = _setup()
    gsym = sp.symmetry_mode(grid, params)
    traj = ev.integrate(gsym, 2.0, ops, grid, params, nonlinear=False,
                        dtau=1e-3, projection=proj)
    gvec = gsym.stacked()
    for tau, st, _, a in traj.samples:
        err = sp.state_norm(grid, st.stacked() - math.exp(tau) * gvec)
        assert err / math.exp(tau) <= 1e-6
        assert a == pytest.approx(math.exp(tau), rel=1e-6)


def test_integrate_step_size_guard():
    params, grid, ops, proj = _setup(n=96)
    gsym = sp.symmetry_mode(grid, params)
    with pytest.raises(StepSizeError):
        ev.integrate(gsym, 1.0, ops, grid, params, nonlinear=False,
                     dtau=5e-3, projection=proj)


def test_integrate_superposition_linear():
    params, grid, ops, proj = _setup()
    rng = np.random.default_rng(2)
    ua = md.random_polynomial_state(grid, rng, amplitude=0.3)
    ub = md.random_polynomial_state(grid, rng, amplitude=0.3)
    combo = md.State(phi1=1.5 * ua.phi1 - 0.25 * ub.phi1,
                     phi2=1.5 * ua.phi2 - 0.25 * ub.phi2, tau=0.0)
    kw = dict(nonlinear=False, dtau=1e-3, projection=proj)
    ta = ev.integrate(ua, 1.5, ops, grid, params, **kw)
    tb = ev.integrate(ub, 1.5, ops, grid, params, **kw)
    tc = ev.integrate(combo, 1.5, ops, grid, params, **kw)
    lin = 1.5 * ta.states[-1].stacked() - 0.25 * tb.states[-1].stacked()
    assert sp.state_norm(grid, tc.states[-1].stacked() - lin) <= 1e-9


def test_integrate_richardson_fourth_order():
    params = cached_params(3.0)
    g32 = cached_grid(32)
    ops = cached_ops(3.0, 32)
    proj = cached_projection(3.0, 32)
    gsym = sp.symmetry_mode(g32, params)
    amp = 0.2 / sp.state_norm(g32, gsym.stacked())
    smooth = md.State(phi1=amp * gsym.phi1, phi2=amp * gsym.phi2, tau=0.0)
    kw = dict(nonlinear=True, projection=proj)
    ref = ev.integrate(smooth, 1.0, ops, g32, params, dtau=2.5e-4, **kw)
    errs = []
    for dt in (4e-3, 2e-3):
        tr = ev.integrate(smooth, 1.0, ops, g32, params, dtau=dt, **kw)
        errs.append(sp.state_norm(
            g32, tr.states[-1].stacked() - ref.states[-1].stacked()))
    assert 12.0 <= errs[0] / errs[1] <= 20.0


def test_amplitude_guard_carries_partial_trajectory():
    params, grid, ops, proj = _setup()
    gsym = sp.symmetry_mode(grid, params)
    big = md.State(phi1=0.3 * gsym.phi1, phi2=0.3 * gsym.phi2, tau=0.0)
    with pytest.raises(AmplitudeAbort) as info:
        ev.integrate(big, 6.0, ops, grid, params, nonlinear=True,
                     dtau=1e-3, projection=proj)
    traj = info.value.trajectory
    assert traj is not None and traj.norms[-1] > 1.0
    assert traj.taus[-1] < 6.0


def test_unstable_coefficient_projections():
    params, grid, ops, proj = _setup()
    gsym = sp.symmetry_mode(grid, params)
    assert ev.unstable_coefficient(gsym, proj, grid) == pytest.approx(1.0,
                                                                      abs=1e-10)
    rng = np.random.default_rng(8)
    u = md.random_polynomial_state(grid, rng, amplitude=0.5)
    stable_part = u.stacked() - proj.P @ u.stacked()
    st = md.State.from_stacked(stable_part, 0.0)
    assert abs(ev.unstable_coefficient(st, proj, grid)) <= 1e-8


def test_unstable_coefficient_grows_at_unit_rate():
    params, grid, ops, proj = _setup()
    rng = np.random.default_rng(15)
    u = md.random_polynomial_state(grid, rng, amplitude=1e-3)
    a0 = ev.unstable_coefficient(u, proj, grid)
    traj = ev.integrate(u, 4.0, ops, grid, params, nonlinear=False,
                        dtau=1e-3, projection=proj)
    assert np.abs(traj.unstable_coeffs / (a0 * np.exp(traj.taus)) - 1.0
                  ).max() <= 1e-6


def test_decay_fit_exact_synthetic():
    taus = np.arange(0.0, 5.01, 0.1)
    traj = ev.Trajectory(taus=taus, states=[None] * taus.size,
                         norms=3.0 * np.exp(-0.5 * taus),
                         unstable_coeffs=np.zeros(taus.size),
                         params=None, grid_n=0)
    rate, amp = ev.decay_fit(traj, (0.0, 5.0))
    assert rate == pytest.approx(0.5, abs=1e-12)
    assert amp == pytest.approx(3.0, rel=1e-12)


def test_decay_fit_with_multiplicative_noise():
    rng = np.random.default_rng(77)
    taus = np.arange(0.0, 8.01, 0.1)
    norms = 2.0 * np.exp(-0.7 * taus) * (1.0 + 0.01 * rng.standard_normal(taus.size))
    traj = ev.Trajectory(taus=taus, states=[None] * taus.size, norms=norms,
                         unstable_coeffs=np.zeros(taus.size),
                         params=None, grid_n=0)
    rate, _ = ev.decay_fit(traj, (0.0, 8.0))
    assert rate == pytest.approx(0.7, abs=0.02)


def test_decay_fit_degenerate_inputs():
    taus = np.arange(0.0, 5.01, 0.1)
    traj = ev.Trajectory(taus=taus, states=[None] * taus.size,
                         norms=np.full(taus.size, 1e-16),
                         unstable_coeffs=np.zeros(taus.size),
                         params=None, grid_n=0)
    with pytest.raises(DegenerateFitError):
        ev.decay_fit(traj, (0.0, 5.0))
    with pytest.raises(DegenerateFitError):
        ev.decay_fit(traj, (0.0, 0.3))


def test_linear_decay_on_stable_subspace():
    params, grid, ops, proj = _setup()
    rng = np.random.default_rng(23)
    u = md.random_polynomial_state(grid, rng, amplitude=1e-2)
    stable = md.State.from_stacked(u.stacked() - proj.P @ u.stacked(), 0.0)
    traj = ev.integrate(stable, 8.0, ops, grid, params, nonlinear=False,
                        dtau=1.5e-3, projection=proj)
    rate, _ = ev.decay_fit(traj, (2.0, 8.0))
    assert rate >= abs(params.omega) - 0.15


def test_tune_T_zero_data_returns_one():
    params, grid, ops, proj = _setup()
    gdata = cached_grid(48, 1.5)
    zero = md.DataPair(v1=np.zeros(48), v2=np.zeros(48), grid=gdata)
    t_star, traj = ev.tune_T(zero, params, 5.0, grid, ops, projection=proj,
                             dtau=1.5e-3)
    assert abs(t_star - 1.0) <= 1e-9
    assert traj.norms.max() <= 1e-9


def test_tune_T_small_perturbation_decays():
    params, grid, ops, proj = _setup()
    gdata = cached_grid(48, 1.5)
    rng = np.random.default_rng(42)
    fg = md.random_polynomial_data(gdata, rng, params, amplitude=1e-3)
    v = md.data_to_v(fg, params)
    t_star, traj = ev.tune_T(v, params, 8.0, grid, ops, projection=proj,
                             dtau=1.5e-3)
    assert 0.5 < t_star < 1.5
    assert traj.norms[-1] < traj.norms[0]
    resid = ev.correction_residual(traj, grid, params, proj)
    assert resid <= 1e-4


def test_tune_T_derivative_sign_at_one():
    params, grid, ops, proj = _setup()
    gdata = cached_grid(48, 1.5)
    zero = md.DataPair(v1=np.zeros(48), v2=np.zeros(48), grid=gdata)

    def a_probe(T):
        pT = md.params_new(params.p, T=T, eps=params.eps)
        init = md.U_map(zero, T, pT, grid)
        tr = ev.integrate(init, 3.0, ops, grid, pT, nonlinear=True,
                          dtau=1.5e-3, projection=proj)
        return tr.unstable_coeffs[-1]

    h = 1e-6
    slope = (a_probe(1.0 + h) - a_probe(1.0 - h)) / (2.0 * h)
    assert slope > 0.0


def test_duhamel_residual_zero_and_linear():
    params = cached_params(3.0)
    grid = cached_grid(64)
    ops = cached_ops(3.0, 64)
    proj = cached_projection(3.0, 64)
    zero = md.State(phi1=np.zeros(64), phi2=np.zeros(64), tau=0.0)
    trz = ev.integrate(zero, 3.0, ops, grid, params, nonlinear=True,
                       dtau=1e-3, projection=proj)
    assert ev.duhamel_residual(trz, ops, grid, params) <= 1e-14
    rng = np.random.default_rng(11)
    u = md.random_polynomial_state(grid, rng, amplitude=1e-3)
    trl = ev.integrate(u, 3.0, ops, grid, params, nonlinear=False,
                       dtau=1e-3, projection=proj)
    assert ev.duhamel_residual(trl, ops, grid, params) <= 1e-6


def test_duhamel_residual_nonlinear_small():
    params = cached_params(3.0)
    grid = cached_grid(64)
    ops = cached_ops(3.0, 64)
    proj = cached_projection(3.0, 64)
    rng = np.random.default_rng(11)
    u = md.random_polynomial_state(grid, rng, amplitude=1e-3)
    tr = ev.integrate(u, 3.0, ops, grid, params, nonlinear=True,
                      dtau=1e-3, projection=proj)
    assert ev.duhamel_residual(tr, ops, grid, params) <= 1e-4


def test_physical_oracle_reproduces_background():
    params = cached_params(3.0)
    gd = cached_grid(96, 1.0)
    fg = md.RadialPair(f=np.full(96, md.psi_T(params, 0.0)),
                       g=np.full(96, md.psi_T_t(params, 0.0)), grid=gd)
    s = ev.physical_oracle(fg, params, 0.3, nr=4096)
    assert s.t == pytest.approx(0.3, abs=1e-12)
    assert np.abs(s.psi - md.psi_T(params, s.t)).max() <= 1e-6
    assert np.abs(s.psi_t - md.psi_T_t(params, s.t)).max() <= 1e-5


def test_physical_oracle_zero_data():
    params = cached_params(3.0)
    gd = cached_grid(48, 1.0)
    fg = md.RadialPair(f=np.zeros(48), g=np.zeros(48), grid=gd)
    s = ev.physical_oracle(fg, params, 0.4, nr=512)
    assert np.abs(s.psi).max() == 0.0
    assert np.abs(s.psi_t).max() == 0.0


def test_physical_oracle_guards():
    params = cached_params(3.0)
    gd = cached_grid(48, 1.0)
    fg = md.RadialPair(f=np.zeros(48), g=np.zeros(48), grid=gd)
    with pytest.raises(DomainError):
        ev.physical_oracle(fg, params, 0.97)
    with pytest.raises(StepSizeError):
        ev.physical_oracle(fg, params, 0.3, cfl=1.2)


def test_rhs_overflow_guard():
    from blowlab.errors import OverflowAbort

    params, grid, ops, _ = _setup()
    st = md.State(phi1=np.zeros(48), phi2=np.full(48, 1e11), tau=0.0)
    with pytest.raises(OverflowAbort):
        ev.rhs(st, ops, grid, params)


def test_field_csv_format(tmp_path):
    params, grid, _, _ = _setup()
    st = md.State(phi1=np.zeros(48), phi2=np.zeros(48), tau=0.2)
    rec = md.reconstruct_field(st, 0.2, params, grid)
    t = 1.0 - math.exp(-0.2)
    path = tmp_path / "field.csv"
    md.field_to_csv(rec, t, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,r,psi,psi_t"
    assert len(lines) == 49
    row = lines[1].split(",")
    assert float(row[1]) == 0.0
    assert float(row[2]) == pytest.approx(md.psi_T(params, t), rel=1e-12)


def test_trajectory_csv_format(tmp_path):
    params, grid, ops, proj = _setup()
    rng = np.random.default_rng(5)
    u = md.random_polynomial_state(grid, rng, amplitude=1e-4)
    tr = ev.integrate(u, 1.0, ops, grid, params, nonlinear=True,
                      dtau=1.5e-3, projection=proj)
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "tau,norm,unstable_coeff"
    assert len(lines) == tr.taus.size + 1
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) > 0.0
