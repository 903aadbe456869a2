"""Invariant suites behind the `validate` subcommand.

Each check returns a CheckResult with the measured value and its bound;
the CLI prints one line per check and exits nonzero if any fail.  The
suites are grouped so that a fault in one ingredient (say, a sign error in
the nonlinearity) shows up in the groups that depend on it.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import evolve as ev
from . import model as md
from . import spectral as sp
from .grid import build_grid
from .specfun import hyp2f1, ln_gamma, rgamma
from .specfun import _connection_regular, _series


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    bound: float
    ok: bool

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"{status} {self.suite}/{self.name}: "
                f"value={self.value:.6g} bound={self.bound:.6g}")


def _upper(suite, name, value, bound):
    return CheckResult(suite, name, float(value), float(bound),
                       bool(value <= bound))


def _interval(suite, name, value, lo, hi):
    return CheckResult(suite, name, float(value), float(hi),
                       bool(lo <= value <= hi))


def suite_specfun(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    xs = np.linspace(0.1, 30.0, 733)
    ident = max(abs(rgamma(x) * math.exp(ln_gamma(x)) - 1.0) for x in xs)
    out.append(_upper("specfun", "rgamma_lngamma_identity", ident, 1e-12))

    # Gauss relation c [F(a,b;c) - F(a+1,b;c)] + b z F(a+1,b+1;c+1) = 0
    worst = 0.0
    count = 0
    while count < 100:
        a = rng.uniform(-4.0, 4.0)
        b = rng.uniform(-4.0, 4.0)
        c = rng.uniform(0.3, 4.0)
        z = rng.uniform(0.05, 0.95)
        d = c - a - b
        if abs(d - round(d)) < 1e-3:
            continue
        f0 = hyp2f1(a, b, c, z)
        f1 = hyp2f1(a + 1.0, b, c, z)
        f2 = hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)
        resid = c * (f0 - f1) + b * z * f2
        scale = max(abs(c * f0), abs(c * f1), abs(b * z * f2), 1.0)
        worst = max(worst, abs(resid) / scale)
        count += 1
    out.append(_upper("specfun", "contiguous_relation", worst, 1e-9))

    sym = 0.0
    for _ in range(50):
        a = rng.uniform(-5.0, 5.0)
        b = rng.uniform(-5.0, 5.0)
        c = rng.uniform(0.3, 4.0)
        z = rng.uniform(0.0, 0.95)
        sym = max(sym, abs(hyp2f1(a, b, c, z) - hyp2f1(b, a, c, z)))
    out.append(_upper("specfun", "argument_symmetry_exact", sym, 0.0))

    overlap = 0.0
    for _ in range(50):
        a = rng.uniform(-3.0, 3.0)
        b = rng.uniform(-3.0, 3.0)
        c = rng.uniform(0.3, 4.0)
        d = c - a - b
        if min(abs(d - round(d)), 1.0) < 1e-3:
            continue
        z = rng.uniform(0.3, 0.5)
        direct = _series(a, b, c, z)
        conn = _connection_regular(a, b, c, z)
        overlap = max(overlap, abs(direct - conn) / max(abs(direct), 1.0))
    out.append(_upper("specfun", "series_connection_overlap", overlap, 1e-9))
    return out


def _operator_nonlin(params, grid, u):
    """rho * N(A u), the L2 form of the nonlinearity."""
    return grid.nodes * md.nonlin_N(params, md.avg_A(grid, u))


def suite_lipschitz(params, grid, seed=0, npairs=200):
    """Nonlinearity estimates: vanishing at zero, quadratic bound, and the
    sampled Lipschitz property with a single fitted constant."""
    rng = np.random.default_rng(seed)
    out = []
    out.append(_upper("lipschitz", "nonlin_N_at_zero",
                      abs(md.nonlin_N(params, 0.0)), 1e-12))
    xs = np.linspace(-1.0, 1.0, 401)
    xs = xs[np.abs(xs) > 1e-3]
    quad = float(np.max(np.abs(md.nonlin_N(params, xs)) / xs**2))
    out.append(_upper("lipschitz", "quadratic_bound_constant", quad, 100.0))

    def sample(amplitude):
        st = md.random_polynomial_state(grid, rng, amplitude=amplitude)
        return st.phi2

    lip = 0.0
    c1 = 0.0
    norm = lambda u: math.sqrt(grid.integrate(u**2))
    for _ in range(npairs):
        amp_u = 10.0 ** rng.uniform(-1.7, 0.0)
        amp_v = 10.0 ** rng.uniform(-1.7, 0.0)
        u, v = sample(amp_u), sample(amp_v)
        nu, nv = _operator_nonlin(params, grid, u), _operator_nonlin(params, grid, v)
        c1 = max(c1, norm(nu) / norm(u) ** 2)
        diff = norm(u - v)
        if diff > 1e-12:
            lip = max(lip, norm(nu - nv) / ((norm(u) + norm(v)) * diff))
    out.append(_upper("lipschitz", "quadratic_smallness_constant", c1, 100.0))
    out.append(_upper("lipschitz", "lipschitz_constant", lip, 100.0))
    return out


def suite_model(params, n=96, seed=0, nfuncs=200):
    rng = np.random.default_rng(seed)
    out = []
    unit = build_grid(n)
    linfty = 0.0
    hardy = 0.0
    for _ in range(nfuncs):
        u = md.random_polynomial_state(unit, rng, amplitude=1.0).phi2
        unorm = math.sqrt(unit.integrate(u**2))
        iu = unit.V @ u
        linfty = max(linfty, float(np.max(
            np.abs(iu[1:]) / np.sqrt(unit.nodes[1:])) - unorm))
        au = md.avg_A(unit, u)
        hardy = max(hardy, math.sqrt(unit.integrate(au**2)) / unorm)
    out.append(_upper("model", "linfty_bound_violation", linfty, 1e-10))
    out.append(_upper("model", "hardy_constant", hardy, 2.0))

    cone = build_grid(n, 1.5)
    homog = 0.0
    triangle = 0.0
    for _ in range(20):
        fa = md.random_polynomial_data(cone, rng, params, amplitude=1.0)
        fb = md.random_polynomial_data(cone, rng, params, amplitude=1.0)
        na, nb = md.energy_norm(fa), md.energy_norm(fb)
        lam = rng.uniform(-3.0, 3.0)
        scaled = md.RadialPair(f=lam * fa.f, g=lam * fa.g, grid=cone)
        homog = max(homog, abs(md.energy_norm(scaled) - abs(lam) * na))
        summed = md.RadialPair(f=fa.f + fb.f, g=fa.g + fb.g, grid=cone)
        triangle = max(triangle, md.energy_norm(summed) - (na + nb))
    out.append(_upper("model", "energy_homogeneity", homog, 1e-9))
    out.append(_upper("model", "energy_triangle_violation", triangle, 1e-10))

    # psi_tt = psi^p pointwise, 4th-order finite-difference accuracy
    t0 = 0.3
    exact = params.kappa0 ** (params.p / (params.p - 1.0)) \
        * (params.T - t0) ** (-2.0 * params.p / (params.p - 1.0))
    errs = []
    for h in (0.02, 0.01):
        vals = [md.psi_T(params, t0 + k * h) for k in (-2, -1, 0, 1, 2)]
        fd = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3]
              - vals[4]) / (12 * h * h)
        errs.append(abs(fd - exact))
    out.append(_interval("model", "psi_T_ode_fd_order", errs[0] / errs[1],
                         12.0, 20.0))
    return out


def suite_spectral(params, n_coarse=64, n_fine=96, seed=0):
    out = []
    gc, gf = build_grid(n_coarse), build_grid(n_fine)
    rho = gf.nodes
    out.append(_upper("spectral", "grid_diff_rho2",
                      float(np.abs(gf.D @ rho**2 - 2 * rho).max()), 1e-10))
    out.append(_upper("spectral", "grid_volterra_const",
                      float(np.abs(gf.V @ np.ones(n_fine) - rho).max()), 1e-10))
    out.append(_upper("spectral", "grid_volterra_quadrature",
                      float(np.abs(gf.V[-1, :] - gf.w).max()), 1e-10))

    ops_f = sp.assemble_L(gf, params)
    ops_c = sp.assemble_L(gc, params)
    gvec = sp.symmetry_mode(gf, params).stacked()
    out.append(_upper("spectral", "symmetry_mode_residual",
                      sp.state_norm(gf, ops_f.L @ gvec - gvec), 1e-10))
    lp_block = np.abs(ops_f.Lp[:n_fine, n_fine:]
                      - params.p * params.kappa0 * gf.V).max()
    lp_rest = abs(np.abs(ops_f.Lp).sum()
                  - np.abs(ops_f.Lp[:n_fine, n_fine:]).sum())
    out.append(_upper("spectral", "volterra_block_structure",
                      float(max(lp_block, lp_rest)), 1e-12))

    proj = sp.riesz_projection(ops_f)
    out.append(_upper("spectral", "projection_idempotency",
                      proj.idempotency_defect, 1e-8))
    out.append(_interval("spectral", "projection_rank", proj.rank, 1, 1))
    out.append(_upper("spectral", "projection_g_residual",
                      proj.g_residual, 1e-8))
    out.append(_upper("spectral", "projection_commutator",
                      float(np.linalg.norm(proj.P @ ops_f.L
                                           - ops_f.L @ proj.P, 2)), 1e-8))

    report = sp.discrete_eigenvalues(ops_c, (gc, gf))
    agree = 0.0
    for lam in report.stable_eigenvalues():
        agree = max(agree, min(abs(lam - a) for a in report.analytic))
    out.append(_upper("spectral", "quantization_agreement", agree, 1e-5))

    # Wronskian of the fundamental pair of the eigenvalue-1 equation
    q = (params.p + 1.0) / (params.p - 1.0)
    expo = 2.0 / (params.p - 1.0)
    a1, b1, c1 = 1.0, 0.5 - q, 0.5
    worst = 0.0
    for r in np.linspace(0.12, 0.93, 24):
        z = r * r
        h1t = hyp2f1(a1, b1, c1, z)
        dh1t = 2.0 * r * (a1 * b1 / c1) * hyp2f1(a1 + 1, b1 + 1, c1 + 1, z)
        h1 = (1 - z) ** (-expo) * h1t
        dh1 = 2.0 * expo * r * (1 - z) ** (-expo - 1) * h1t \
            + (1 - z) ** (-expo) * dh1t
        wron = r * dh1 - h1
        worst = max(worst, abs(wron * (1 - z) ** (q) + 1.0))
    out.append(_upper("spectral", "wronskian_identity", worst, 1e-6))

    rng = np.random.default_rng(seed)
    diss = -np.inf
    for _ in range(100):
        st = md.random_polynomial_state(gf, rng, amplitude=1.0)
        u = st.stacked()
        lhs = sp.state_inner(gf, ops_f.L0 @ u, u)
        diss = max(diss, lhs - params.omega_tilde
                   * sp.state_inner(gf, u, u))
    out.append(_upper("spectral", "free_part_dissipativity", diss, 1e-8))
    return out


def suite_rhs(params, grid, ops, projection, seed=0):
    """Right-hand-side identities, checked against inline re-derivations."""
    out = []
    n = grid.n
    zero = md.State(phi1=np.zeros(n), phi2=np.zeros(n), tau=0.0)
    d0 = ev.rhs(zero, ops, grid, params)
    out.append(_upper("rhs", "vanishes_at_zero",
                      sp.state_norm(grid, d0.stacked()), 1e-12))
    gsym = sp.symmetry_mode(grid, params)
    dlin = ev.rhs(gsym, ops, grid, params, nonlinear=False)
    out.append(_upper("rhs", "linear_symmetry_mode",
                      sp.state_norm(grid, dlin.stacked() - gsym.stacked()),
                      1e-10))
    # nonlinear extra term against an inline sign-explicit evaluation
    dnl = ev.rhs(gsym, ops, grid, params, nonlinear=True)
    extra = dnl.stacked() - ops.L @ gsym.stacked()
    k = params.kappa_root
    y = k + 1.0
    n_of_one = math.copysign(abs(y) ** params.p, y) \
        - params.kappa0 ** (params.p / (params.p - 1.0)) - params.p * params.kappa0
    oracle = np.concatenate([grid.nodes * n_of_one, np.zeros(n)])
    oracle[0] = 0.0
    out.append(_upper("rhs", "nonlinear_term_oracle",
                      float(np.abs(extra - oracle).max()), 1e-10))

    rng = np.random.default_rng(seed)
    ua = md.random_polynomial_state(grid, rng, amplitude=0.3)
    ub = md.random_polynomial_state(grid, rng, amplitude=0.3)
    combo = md.State(phi1=2.0 * ua.phi1 - 0.5 * ub.phi1,
                     phi2=2.0 * ua.phi2 - 0.5 * ub.phi2, tau=0.0)
    dt = ev.stable_dtau(ops)
    kw = dict(nonlinear=False, dtau=dt, projection=projection)
    ta = ev.integrate(ua, 1.0, ops, grid, params, **kw)
    tb = ev.integrate(ub, 1.0, ops, grid, params, **kw)
    tc = ev.integrate(combo, 1.0, ops, grid, params, **kw)
    target = 2.0 * ta.states[-1].stacked() - 0.5 * tb.states[-1].stacked()
    out.append(_upper("rhs", "linear_superposition",
                      sp.state_norm(grid, tc.states[-1].stacked() - target),
                      1e-9))
    return out


def suite_evolve(params, seed=0, tau_end=8.0):
    out = []
    n = 48
    grid = build_grid(n)
    gdata = build_grid(n, 1.5)
    ops = sp.assemble_L(grid, params)
    proj = sp.riesz_projection(ops)
    dt = ev.stable_dtau(ops)
    rng = np.random.default_rng(seed)

    # untuned symmetry-mode growth at rate 1
    st = md.random_polynomial_state(grid, rng, amplitude=1e-3)
    traj = ev.integrate(st, 6.0, ops, grid, params, nonlinear=False,
                        dtau=dt, projection=proj)
    grate = ev.growth_fit(traj.taus, traj.unstable_coeffs, (1.0, 5.0))
    out.append(_interval("evolve", "unstable_coefficient_growth_rate",
                         grate, 0.95, 1.05))

    # linear decay on the stable subspace
    u = st.stacked()
    stp = md.State.from_stacked(u - proj.P @ u, 0.0)
    trajd = ev.integrate(stp, tau_end, ops, grid, params, nonlinear=False,
                         dtau=dt, projection=proj)
    rate, _ = ev.decay_fit(trajd, (2.0, tau_end))
    out.append(CheckResult("evolve", "stable_subspace_decay_rate", rate,
                           abs(params.omega) - 0.15,
                           rate >= abs(params.omega) - 0.15))

    # Richardson self-convergence on a junk-free smooth run; fixed at p=3
    # where the nonlinear error signal sits well above rounding
    p3 = md.params_new(3.0)
    g32 = build_grid(32)
    ops32 = sp.assemble_L(g32, p3)
    proj32 = sp.riesz_projection(ops32)
    gsym = sp.symmetry_mode(g32, p3)
    amp = 0.2 / sp.state_norm(g32, gsym.stacked())
    smooth = md.State(phi1=amp * gsym.phi1, phi2=amp * gsym.phi2, tau=0.0)
    kw = dict(nonlinear=True, projection=proj32)
    ref = ev.integrate(smooth, 1.0, ops32, g32, p3, dtau=2.5e-4, **kw)
    e_coarse = sp.state_norm(g32, ev.integrate(
        smooth, 1.0, ops32, g32, p3, dtau=4e-3, **kw).states[-1].stacked()
        - ref.states[-1].stacked())
    e_fine = sp.state_norm(g32, ev.integrate(
        smooth, 1.0, ops32, g32, p3, dtau=2e-3, **kw).states[-1].stacked()
        - ref.states[-1].stacked())
    out.append(_interval("evolve", "rk4_richardson_ratio",
                         e_coarse / e_fine, 12.0, 20.0))

    # tuned run: weighted boundedness, early attainment, zero-correction
    fg = md.random_polynomial_data(gdata, rng, params, amplitude=1e-3)
    v = md.data_to_v(fg, params)
    t_star, tuned = ev.tune_T(v, params, tau_end, grid, ops,
                              projection=proj, dtau=dt)
    out.append(_interval("evolve", "tuned_T_star", t_star, 0.5, 1.5))
    weighted = np.exp(params.mu * (tuned.taus - tuned.taus[0])) * tuned.norms
    out.append(_upper("evolve", "xnorm_attained_at_small_tau",
                      float(tuned.taus[int(np.argmax(weighted))]), 1.0))
    out.append(_upper("evolve", "xnorm_over_initial",
                      float(weighted.max() / tuned.norms[0]), 10.0))
    out.append(_upper("evolve", "zero_correction_identity",
                      ev.correction_residual(tuned, grid, params, proj), 1e-4))

    # duhamel residual, linear flavor
    g64 = build_grid(64)
    ops64 = sp.assemble_L(g64, params)
    proj64 = sp.riesz_projection(ops64)
    u64 = md.random_polynomial_state(g64, rng, amplitude=1e-3)
    trl = ev.integrate(u64, 3.0, ops64, g64, params, nonlinear=False,
                       dtau=1e-3, projection=proj64)
    out.append(_upper("evolve", "duhamel_linear_residual",
                      ev.duhamel_residual(trl, ops64, g64, params), 1e-6))

    # decay-fit rate stability under grid refinement
    n2 = 72
    grid2 = build_grid(n2)
    ops2 = sp.assemble_L(grid2, params)
    proj2 = sp.riesz_projection(ops2)
    t_star2, tuned2 = ev.tune_T(v, params, tau_end, grid2, ops2,
                                projection=proj2, dtau=ev.stable_dtau(ops2))
    r1, _ = ev.decay_fit(tuned, (2.0, tau_end - 1.0))
    r2, _ = ev.decay_fit(tuned2, (2.0, tau_end - 1.0))
    out.append(_upper("evolve", "refinement_rate_drift", abs(r1 - r2), 0.02))
    return out


def run_all(p=3.0, n=96, eps=0.1, seed=0):
    params = md.params_new(p, eps=eps)
    grid = build_grid(n)
    ops = sp.assemble_L(grid, params)
    proj = sp.riesz_projection(ops)
    results = []
    results += suite_specfun(seed)
    results += suite_lipschitz(params, grid, seed)
    results += suite_model(params, n, seed)
    results += suite_spectral(params, 64, n if n >= 96 else 96, seed)
    results += suite_rhs(params, grid, ops, proj, seed)
    results += suite_evolve(params, seed)
    return results
