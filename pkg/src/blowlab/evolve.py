"""Time evolution in similarity coordinates and its verification oracles.

The nonlinear system d/dtau Phi = L Phi + (rho N(A phi2), 0) is stepped
with classical fixed-step RK4, sampling every 0.1 in tau; phi1(0) = 0 is
re-imposed after every stage.  The default step follows the conservative
rule dtau = 0.5 * (min node spacing) / 2 (characteristic speed 2); an
explicitly requested step is instead validated against the actual RK4
stability region of the assembled operator, which admits substantially
larger steps on Chebyshev grids.

Also here: decay-rate fitting, the unstable-mode coefficient, blow-up-time
tuning by bisection, a Duhamel-identity residual check against the matrix
exponential, and an independent physical-space leapfrog solver used for
cross-validation.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .errors import (AmplitudeAbort, DegenerateFitError, DomainError,
                     NoSignChangeError, OverflowAbort, StepSizeError)
from .grid import bary_interp
from .model import State, avg_A, nonlin_N
from .spectral import riesz_projection, state_norm

_SAMPLE_DTAU = 0.1
_OVERFLOW_LIMIT = 1e12
_AMPLITUDE_LIMIT = 1.0


def default_dtau(grid):
    """Conservative step bound 0.5 * (min node spacing) / 2."""
    return 0.5 * grid.min_spacing / 2.0


def _operator_eigenvalues(ops):
    cached = getattr(ops, "_eig_cache", None)
    if cached is None:
        cached = np.linalg.eigvals(ops.L)
        object.__setattr__(ops, "_eig_cache", cached)
    return cached


def _rk4_amplification(ops, dtau):
    """Max RK4 amplification over the decaying part of the spectrum."""
    ev = _operator_eigenvalues(ops)
    z = dtau * ev[ev.real <= 0.0]
    r = 1.0 + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    return float(np.abs(r).max())


def stable_dtau(ops, safety=0.8):
    """Largest RK4-stable step for this operator, times a safety factor."""
    lo, hi = 1e-6, 0.5
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _rk4_amplification(ops, mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return safety * lo


def rhs(state, ops, grid, params, nonlinear=True):
    """Right-hand side L*Phi (+ nonlinear term) as a State derivative."""
    out = _rhs_vec(state.stacked(), ops, grid, params, nonlinear)
    return State.from_stacked(out, state.tau)


def _rhs_vec(u, ops, grid, params, nonlinear):
    out = ops.L @ u
    if nonlinear:
        n = grid.n
        avg = avg_A(grid, u[n:])
        out[:n] += grid.nodes * nonlin_N(params, avg)
    out[0] = 0.0
    if not np.all(np.isfinite(out)) or np.abs(out).max() > _OVERFLOW_LIMIT:
        raise OverflowAbort(
            "rhs overflow: perturbation exceeded 1e12 (blow-up of the "
            "perturbation itself)")
    return out


@dataclass
class Trajectory:
    """Sampled evolution: (tau, State, L2 norm, unstable coefficient)."""

    taus: np.ndarray
    states: list
    norms: np.ndarray
    unstable_coeffs: np.ndarray
    params: object
    grid_n: int
    nonlinear: bool = True

    @property
    def samples(self):
        return list(zip(self.taus, self.states, self.norms,
                        self.unstable_coeffs))

    def xnorm(self, mu):
        """Weighted sup-norm sup_tau exp(mu tau) ||Phi(tau)||."""
        return float(np.max(np.exp(mu * (self.taus - self.taus[0]))
                            * self.norms))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("tau,norm,unstable_coeff\n")
            for tau, nrm, a in zip(self.taus, self.norms, self.unstable_coeffs):
                fh.write(f"{tau:.10g},{nrm:.17g},{a:.17g}\n")


def unstable_coefficient(state, projection, grid):
    """Coefficient a with P Phi = a g, via <P Phi, g> / <g, g>."""
    if projection.rank != 1:
        raise DomainError(
            f"projection rank {projection.rank} out of range: need rank 1")
    g = projection.g_vector
    pu = projection.P @ state.stacked()
    n = grid.n
    num = float(grid.w @ (pu[:n] * g[:n] + pu[n:] * g[n:]))
    den = float(grid.w @ (g[:n] ** 2 + g[n:] ** 2))
    return num / den


def integrate(initial, tau_end, ops, grid, params, nonlinear=True,
              dtau=None, projection=None):
    """Fixed-step RK4 trajectory from `initial` to tau_end, sampled every 0.1.

    With dtau=None the conservative spacing rule is used; an explicit dtau
    is checked against the RK4 stability region of the assembled operator
    and adjusted downward so that an integer number of steps spans each
    0.1-sample interval.  Nonlinear runs abort (AmplitudeAbort, carrying
    the partial trajectory) once the perturbation norm exceeds 1, the
    boundary of the smallness regime.
    """
    if tau_end <= initial.tau:
        raise DomainError(
            f"tau_end={tau_end} out of range: need tau_end > tau0={initial.tau}")
    if dtau is None:
        dtau = default_dtau(grid)
    else:
        if dtau <= 0.0:
            raise StepSizeError(f"dtau={dtau} out of range: need dtau > 0")
        amp = _rk4_amplification(ops, dtau)
        if amp > 1.0 + 1e-9:
            raise StepSizeError(
                f"dtau={dtau} violates the RK4 stability bound "
                f"(amplification {amp:.3g} > 1); largest stable step is "
                f"{stable_dtau(ops):.3g}")
    if projection is None:
        projection = riesz_projection(ops)
    nsub = max(1, math.ceil(_SAMPLE_DTAU / dtau - 1e-12))
    h = _SAMPLE_DTAU / nsub
    nsamples = int(math.floor((tau_end - initial.tau) / _SAMPLE_DTAU + 1e-9))

    n = grid.n
    u = initial.stacked().astype(float)
    u[0] = 0.0
    tau0 = initial.tau
    taus, states, norms, coeffs = [], [], [], []

    def record(k, vec):
        tau = tau0 + _SAMPLE_DTAU * k
        st = State.from_stacked(vec, tau)
        taus.append(tau)
        states.append(st)
        norms.append(state_norm(grid, vec))
        coeffs.append(unstable_coefficient(st, projection, grid))

    def partial_trajectory():
        return Trajectory(taus=np.array(taus), states=states,
                          norms=np.array(norms),
                          unstable_coeffs=np.array(coeffs),
                          params=params, grid_n=grid.n, nonlinear=nonlinear)

    record(0, u)
    L = ops.L
    rho = grid.nodes
    Vmat = grid.V
    for k in range(1, nsamples + 1):
        for _ in range(nsub):
            k1 = _step_rhs(u, L, Vmat, rho, n, params, nonlinear)
            k2 = _step_rhs(u + 0.5 * h * k1, L, Vmat, rho, n, params, nonlinear)
            k3 = _step_rhs(u + 0.5 * h * k2, L, Vmat, rho, n, params, nonlinear)
            k4 = _step_rhs(u + h * k3, L, Vmat, rho, n, params, nonlinear)
            u = u + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            u[0] = 0.0
            m = np.abs(u).max()
            if not np.isfinite(m) or m > _OVERFLOW_LIMIT:
                raise OverflowAbort(
                    "state overflow during integration: perturbation "
                    "exceeded 1e12")
        record(k, u)
        if nonlinear and norms[-1] > _AMPLITUDE_LIMIT:
            raise AmplitudeAbort(
                f"perturbation norm {norms[-1]:.3g} left the smallness "
                f"regime (> 1) at tau={taus[-1]:.2f}",
                trajectory=partial_trajectory())
    return partial_trajectory()


def _step_rhs(u, L, Vmat, rho, n, params, nonlinear):
    out = L @ u
    if nonlinear:
        avg = Vmat @ u[n:]
        avg[1:] /= rho[1:]
        avg[0] = u[n]
        out[:n] += rho * nonlin_N(params, avg)
    out[0] = 0.0
    return out


def decay_fit(traj, tau_window):
    """Least-squares fit of log||Phi|| vs tau; returns (rate, amplitude).

    rate is the negated slope, amplitude the intercept at the window's
    reference tau = 0.
    """
    t1, t2 = tau_window
    mask = (traj.taus >= t1 - 1e-9) & (traj.taus <= t2 + 1e-9)
    if mask.sum() < 10:
        raise DegenerateFitError(
            f"decay_fit: only {int(mask.sum())} samples in window, need >= 10")
    nrms = traj.norms[mask]
    if nrms.min() <= 1e-14:
        raise DegenerateFitError("decay_fit: norms underflow below 1e-14")
    slope, intercept = np.polyfit(traj.taus[mask], np.log(nrms), 1)
    return -float(slope), float(np.exp(intercept))


def growth_fit(taus, values, tau_window):
    """Fitted exponential rate of |values| over the window (helper)."""
    taus = np.asarray(taus)
    values = np.abs(np.asarray(values))
    mask = (taus >= tau_window[0] - 1e-9) & (taus <= tau_window[1] + 1e-9)
    if mask.sum() < 10 or values[mask].min() <= 1e-14:
        raise DegenerateFitError("growth_fit: degenerate samples")
    return float(np.polyfit(taus[mask], np.log(values[mask]), 1)[0])


def tune_T(v, params, tau_end, grid, ops, projection=None, dtau=None,
           bracket=(0.8, 1.2), ttol=1e-10):
    """Suppress the unstable mode by bisecting the blow-up time T.

    For each candidate T the nonlinear system is evolved from U(v, T) and
    the sign of the unstable coefficient is read at tau_end - 1, or at the
    abort time for runs that leave the smallness regime (their sign is
    already decided by the dominant mode).  The bracket widens once to
    (1/2, 3/2) if the initial one does not straddle a sign change.

    Returns (T_star, trajectory of the tuned run).
    """
    from .model import U_map, params_new

    if projection is None:
        projection = riesz_projection(ops)
    tau_probe = tau_end - 1.0

    def sign_target(T):
        pT = params_new(params.p, T=T, eps=params.eps)
        init = U_map(v, T, pT, grid)
        try:
            traj = integrate(init, tau_end, ops, grid, pT,
                             nonlinear=True, dtau=dtau, projection=projection)
        except AmplitudeAbort as abort:
            traj = abort.trajectory
            return traj.unstable_coeffs[-1]
        idx = int(np.argmin(np.abs(traj.taus - tau_probe)))
        return traj.unstable_coeffs[idx]

    lo, hi = bracket
    s_lo, s_hi = sign_target(lo), sign_target(hi)
    if s_lo == 0.0:
        lo = hi = lo
    elif s_hi == 0.0:
        lo = hi = hi
    elif s_lo * s_hi > 0.0:
        lo, hi = 0.5 + 1e-9, 1.5 - 1e-9
        s_lo, s_hi = sign_target(lo), sign_target(hi)
        if s_lo * s_hi > 0.0:
            raise NoSignChangeError(
                "tune_T: unstable-mode coefficient does not change sign over "
                "T in (1/2, 3/2); perturbation too large")
    while hi - lo > ttol:
        mid = 0.5 * (lo + hi)
        s_mid = sign_target(mid)
        if s_mid == 0.0:
            lo = hi = mid
            break
        if s_lo * s_mid < 0.0:
            hi, s_hi = mid, s_mid
        else:
            lo, s_lo = mid, s_mid
    if lo < hi and s_hi != s_lo:
        # one secant step on the final bracket; the target is smooth in T,
        # so this removes almost all of the leftover unstable residual
        T_star = min(max(lo - s_lo * (hi - lo) / (s_hi - s_lo), lo), hi)
    else:
        T_star = 0.5 * (lo + hi)
    p_star = params_new(params.p, T=T_star, eps=params.eps)
    traj = integrate(U_map(v, T_star, p_star, grid), tau_end, ops, grid,
                     p_star, nonlinear=True, dtau=dtau, projection=projection)
    return T_star, traj


def duhamel_residual(traj, ops, grid, params, tau_max=3.0):
    """Max defect of Phi(tau) = e^{tau L} Phi(0) + int_0^tau e^{(tau-s)L} N(Phi(s)) ds
    over the stored samples with tau - tau0 <= tau_max.

    The semigroup is realized by the matrix exponential of the discretized
    generator at the sample spacing; the Duhamel integral uses trapezoid
    quadrature over the samples.  For a linear trajectory the integral
    term is absent and the residual is the raw stepping-versus-matrix-
    exponential discrepancy.
    """
    taus = traj.taus
    if taus.size < 2:
        return 0.0
    spacing = np.diff(taus)
    if np.abs(spacing - spacing[0]).max() > 1e-9 or spacing[0] > _SAMPLE_DTAU + 1e-12:
        raise DomainError("duhamel_residual: samples must be uniform with "
                          "spacing <= 0.1")
    ds = float(spacing[0])
    E = expm(ds * ops.L)
    kmax = int(min(taus.size - 1, math.floor(tau_max / ds + 1e-9)))
    n = grid.n

    def nl_term(st):
        out = np.zeros(2 * n)
        if traj.nonlinear:
            avg = avg_A(grid, st.phi2)
            out[:n] = grid.nodes * nonlin_N(params, avg)
        return out

    nl = [nl_term(traj.states[j]) for j in range(kmax + 1)]
    # propagated[j] = E^(k-j) applied incrementally as k advances
    u0 = traj.states[0].stacked()
    prop0 = u0.copy()
    prop_nl = [v.copy() for v in nl]
    worst = 0.0
    for k in range(1, kmax + 1):
        prop0 = E @ prop0
        for j in range(k):
            prop_nl[j] = E @ prop_nl[j]
        integral = 0.5 * (prop_nl[0] + nl[k])
        for j in range(1, k):
            integral = integral + prop_nl[j]
        defect = traj.states[k].stacked() - prop0 - ds * integral
        worst = max(worst, state_norm(grid, defect))
    return worst


def correction_residual(traj, grid, params, projection):
    """Discrete zero-correction identity of a tuned run.

    On a trajectory with the unstable mode suppressed, the initial
    coefficient cancels the weighted tail of the projected nonlinearity:
    a(0) + int_0^inf e^{-s} <P N(Phi(s)), g>/<g, g> ds = 0.  Returns the
    magnitude of the left side with the integral truncated at the last
    sample (trapezoid rule).
    """
    n = grid.n
    g = projection.g_vector
    den = float(grid.w @ (g[:n] ** 2 + g[n:] ** 2))
    taus = traj.taus - traj.taus[0]
    vals = np.empty(taus.size)
    for j, st in enumerate(traj.states):
        nl = np.zeros(2 * n)
        nl[:n] = grid.nodes * nonlin_N(params, avg_A(grid, st.phi2))
        pnl = projection.P @ nl
        coeff = float(grid.w @ (pnl[:n] * g[:n] + pnl[n:] * g[n:])) / den
        vals[j] = np.exp(-taus[j]) * coeff
    integral = float(np.trapezoid(vals, taus))
    return abs(traj.unstable_coeffs[0] + integral)


class OracleSample(NamedTuple):
    """Physical-space snapshot on a uniform radial grid."""

    t: float
    r: np.ndarray
    psi: np.ndarray
    psi_t: np.ndarray


def physical_oracle(fg, params, t_end, nr=4096, cfl=1.0):
    """Independent (t, r)-solver for the radial wave equation.

    Works on psi_tilde = r psi, for which the equation becomes the 1+1
    wave equation psi_tilde_tt = psi_tilde_rr + r |psi_tilde/r|^(p-1)
    (psi_tilde/r), integrated by leapfrog on a uniform grid over [0, T]
    with psi_tilde(t, 0) = 0.  The active region shrinks by one node per
    step, which at unit Courant number tracks the backward lightcone
    exactly; no outer boundary condition is ever used.  The step is
    dt = t_end / steps with the smallest step count satisfying
    dt <= cfl * dr, so the returned snapshot sits exactly at t_end.
    """
    T = params.T
    if t_end >= T - 0.05:
        raise DomainError(
            f"t_end={t_end} out of range: need t_end < T - 0.05 (blow-up "
            f"proximity)")
    if cfl > 1.0:
        raise StepSizeError(f"cfl={cfl} out of range: leapfrog needs cfl <= 1")
    dr = T / nr
    r = np.linspace(0.0, T, nr + 1)
    f = bary_interp(fg.grid, fg.f, r)
    g = bary_interp(fg.grid, fg.g, r)
    p = params.p
    if t_end <= 0.0:
        return OracleSample(t=0.0, r=r, psi=f.copy(), psi_t=g.copy())
    steps = int(math.ceil(t_end / (cfl * dr) - 1e-12))
    dt = t_end / steps
    if steps > nr - 4:
        raise DomainError(
            f"physical_oracle: {steps} steps exhaust the {nr}-node grid "
            f"(one node is lost per step); increase nr or cfl")

    def source(w):
        out = np.zeros_like(w)
        out[1:] = np.sign(w[1:]) * np.abs(w[1:]) ** p / r[1:] ** (p - 1.0)
        return out

    def second_diff(w):
        out = np.zeros_like(w)
        out[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / dr**2
        return out

    w_prev = r * f
    wt0 = r * g
    accel = second_diff(w_prev) + source(w_prev)
    jerk = second_diff(wt0)
    jerk[1:] += p * np.abs(w_prev[1:] / r[1:]) ** (p - 1.0) * wt0[1:]
    w_cur = w_prev + dt * wt0 + 0.5 * dt**2 * accel + dt**3 / 6.0 * jerk
    w_cur[0] = 0.0
    # run one step past t_end so psi_t comes out of a central difference;
    # the active index range loses one node per step (numerical lightcone)
    w_old = None
    valid = nr - 1
    for _ in range(steps):
        w_next = np.empty_like(w_cur)
        w_next[1:valid] = (2.0 * w_cur[1:valid] - w_prev[1:valid]
                           + dt**2 * ((w_cur[2:valid + 1]
                                       - 2.0 * w_cur[1:valid]
                                       + w_cur[:valid - 1]) / dr**2
                                      + source(w_cur)[1:valid]))
        w_next[0] = 0.0
        w_next[valid:] = w_cur[valid:]
        w_old, w_prev, w_cur = w_prev, w_cur, w_next
        valid -= 1
    # levels: w_old at (steps-1) dt, w_prev at steps dt, w_cur at (steps+1) dt
    jmax = nr - steps - 1
    rr = r[:jmax + 1]
    w_mid = w_prev[:jmax + 1]
    wt = (w_cur[:jmax + 1] - w_old[:jmax + 1]) / (2.0 * dt)
    psi = np.empty(jmax + 1)
    psi_t = np.empty(jmax + 1)
    psi[1:] = w_mid[1:] / rr[1:]
    psi_t[1:] = wt[1:] / rr[1:]
    psi[0] = (4.0 * w_mid[1] - w_mid[2]) / (2.0 * dr)
    psi_t[0] = (4.0 * wt[1] - wt[2]) / (2.0 * dr)
    return OracleSample(t=steps * dt, r=rr, psi=psi, psi_t=psi_t)
