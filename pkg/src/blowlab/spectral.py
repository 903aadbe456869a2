"""Spectral analysis of the linearized similarity-coordinate generator.

The generator splits as L = L0 + L' with

    L0 u = (u2' - rho u1' - (2/(p-1)) u1,  u1' - rho u2' - (2/(p-1)) u2)
    L' u = (p kappa0 int_0^rho u2,  0)

discretized by Chebyshev collocation.  The rho = 0 boundary condition
u1(0) = 0 is enforced by replacing the first row of L with a penalty row
-eta * e0; this pins a single artificial eigenvalue at -eta, far left of
every reported spectral window, and leaves all admissible eigenvectors and
the Riesz projection untouched.

Raw eigenvalues of the discretization are untrusted: the continuous part
of the spectrum produces resolution-dependent values, so only eigenvalues
that move by < 1e-6 between two grids are flagged refinement-stable, and
only the half-plane Re(lam) > omega_tilde + 0.1 is reported.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SolverError
from .grid import Grid
from .model import Params, State
from .specfun import HypParams, hyp2f1, rgamma

_BOUNDARY_PENALTY = 50.0
_STABILITY_TOL = 1e-6


def state_inner(grid, u, v):
    """Quadrature L2 x L2 inner product of stacked states."""
    n = grid.n
    return float(grid.w @ (u[:n] * v[:n] + u[n:] * v[n:]))


def state_norm(grid, u):
    return float(np.sqrt(max(state_inner(grid, u, u), 0.0)))


@dataclass(frozen=True)
class OperatorMatrices:
    """Dense collocation matrices of the linearized generator."""

    L0: np.ndarray    # free transport part, no boundary condition
    Lp: np.ndarray    # compact Volterra coupling p*kappa0*int phi2
    L: np.ndarray     # L0 + Lp with the rho=0 penalty row
    grid: Grid
    params: Params
    eta: float = _BOUNDARY_PENALTY


def assemble_L(grid, params):
    """Assemble L0, L' and the boundary-corrected sum on a grid."""
    n = grid.n
    rho = np.diag(grid.nodes)
    c = 2.0 / (params.p - 1.0)
    advect = -rho @ grid.D - c * np.eye(n)
    L0 = np.block([[advect, grid.D], [grid.D, advect]])
    Lp = np.zeros((2 * n, 2 * n))
    Lp[:n, n:] = params.p * params.kappa0 * grid.V
    L = L0 + Lp
    L[0, :] = 0.0
    L[0, 0] = -_BOUNDARY_PENALTY
    for a in (L0, Lp, L):
        a.setflags(write=False)
    return OperatorMatrices(L0=L0, Lp=Lp, L=L, grid=grid, params=params)


def symmetry_mode(grid, params):
    """Eigenvector of L at eigenvalue 1: g = ((p+1)/(p-1) rho, 1)."""
    q = (params.p + 1.0) / (params.p - 1.0)
    return State(phi1=q * grid.nodes.copy(), phi2=np.ones(grid.n), tau=0.0)


def quantization_Q(lam, params):
    """Pole-safe connection-coefficient quantization.

    Q(lam) = rgamma(a + 1 - c) * rgamma(b + 1 - c) with the eigenvalue
    parameter map a = (lam-2)/2, b = (lam + (p+3)/(p-1))/2, c = 1/2.
    Q vanishes exactly at lam = 1 - 2k and lam = -2k - 2(p+1)/(p-1).
    """
    if lam <= params.omega_tilde:
        raise DomainError(
            f"lam={lam} out of range: need lam > omega_tilde={params.omega_tilde}")
    hp = HypParams.for_eigenvalue(lam, params.p)
    return rgamma(hp.a + 1.0 - hp.c) * rgamma(hp.b + 1.0 - hp.c)


def analytic_eigenvalues(params, re_min):
    """Both quantization families intersected with (re_min, inf), sorted."""
    if re_min <= params.omega_tilde:
        raise DomainError(
            f"re_min={re_min} out of range: need re_min > omega_tilde="
            f"{params.omega_tilde}")
    vals = []
    k = 0
    while 1.0 - 2.0 * k > re_min:
        vals.append(1.0 - 2.0 * k)
        k += 1
    offset = 2.0 * (params.p + 1.0) / (params.p - 1.0)
    k = 0
    while -2.0 * k - offset > re_min:
        vals.append(-2.0 * k - offset)
        k += 1
    return sorted(vals)


@dataclass(frozen=True)
class ProjectionResult:
    """Riesz projection matrix with its diagnostics."""

    P: np.ndarray
    idempotency_defect: float
    rank: int
    g_residual: float
    g_vector: np.ndarray   # stacked symmetry mode on the projection grid
    grid: Grid


def riesz_projection(ops, center=1.0, radius=1.0, m=32):
    """Contour-quadrature Riesz projection (2 pi i)^-1 oint R_L(lam) dlam.

    The circle |lam - center| = radius must separate 1 from the rest of
    the spectrum; with the defaults the gap to Re(lam) = -1/2 is 1/2 for
    every admissible p.  Trapezoid quadrature on the circle converges
    exponentially in m.
    """
    L = ops.L
    dim = L.shape[0]
    eye = np.eye(dim)
    acc = np.zeros((dim, dim), dtype=complex)
    for k in range(m):
        theta = 2.0 * np.pi * k / m
        lam = center + radius * np.exp(1j * theta)
        try:
            res = np.linalg.solve(lam * eye - L, eye)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"resolvent solve failed at contour point {lam}: {exc}") from exc
        acc += radius * np.exp(1j * theta) * res
    P = (acc / m).real
    gvec = symmetry_mode(ops.grid, ops.params).stacked()
    defect = float(np.linalg.norm(P @ P - P, 2))
    svals = np.linalg.svd(P, compute_uv=False)
    rank = int(np.sum(svals > 1e-6))
    g_res = state_norm(ops.grid, P @ gvec - gvec)
    P.setflags(write=False)
    return ProjectionResult(P=P, idempotency_defect=defect, rank=rank,
                            g_residual=g_res, g_vector=gvec, grid=ops.grid)


@dataclass
class SpectrumReport:
    """Analytic and refinement-filtered discrete spectra with diagnostics."""

    p: float
    n_coarse: int
    n_fine: int
    analytic: list
    discrete: list = field(default_factory=list)  # dicts {re, im, stable}
    projection_rank: int = 0
    projection_defect: float = 0.0

    def stable_eigenvalues(self):
        return [complex(d["re"], d["im"]) for d in self.discrete if d["stable"]]

    def to_json(self):
        return json.dumps({
            "p": self.p,
            "n_coarse": self.n_coarse,
            "n_fine": self.n_fine,
            "analytic": self.analytic,
            "discrete": self.discrete,
            "projection_rank": self.projection_rank,
            "projection_defect": self.projection_defect,
        }, indent=2)


def _eigvals(matrix):
    try:
        return np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense eigenvalue solve failed: {exc}") from exc


def discrete_eigenvalues(ops, grids, halfplane=None):
    """Collocation eigenvalues of L filtered by refinement stability.

    `grids` is a (coarse, fine) pair whose sizes differ by a factor of at
    least 1.5.  Eigenvalues of the fine discretization with real part above
    omega_tilde + 0.1 (or `halfplane` if given) are reported; each is
    flagged stable when a coarse-grid eigenvalue lies within 1e-6.
    """
    coarse, fine = grids
    if fine.n < coarse.n:
        coarse, fine = fine, coarse
    if fine.n < 1.5 * coarse.n:
        raise DomainError(
            f"refinement pair n={coarse.n}/{fine.n} out of range: need a factor >= 1.5")
    params = ops.params
    ops_c = ops if ops.grid.n == coarse.n else assemble_L(coarse, params)
    ops_f = ops if ops.grid.n == fine.n else assemble_L(fine, params)
    ev_c = _eigvals(ops_c.L)
    ev_f = _eigvals(ops_f.L)
    window = params.omega_tilde + 0.1 if halfplane is None else halfplane
    report = SpectrumReport(p=params.p, n_coarse=coarse.n, n_fine=fine.n,
                            analytic=analytic_eigenvalues(params, window))
    candidates = ev_f[ev_f.real > window]
    order = np.lexsort((candidates.imag, -candidates.real))
    for lam in candidates[order]:
        dist = np.abs(ev_c - lam).min() if ev_c.size else np.inf
        report.discrete.append({
            "re": float(lam.real),
            "im": float(lam.imag),
            "stable": bool(dist < _STABILITY_TOL),
        })
    proj = riesz_projection(ops_f)
    report.projection_rank = proj.rank
    report.projection_defect = proj.idempotency_defect
    return report


def eigenvalue_eigenvector(ops, target=1.0):
    """Discrete eigenpair closest to `target` (helper for diagnostics)."""
    try:
        vals, vecs = np.linalg.eig(ops.L)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense eigenvalue solve failed: {exc}") from exc
    idx = int(np.argmin(np.abs(vals - target)))
    return vals[idx], vecs[:, idx]


def eigenfunction_analytic(lam, params, grid):
    """Admissible eigenfunction u(rho) = int_0^rho u2 at an analytic eigenvalue.

    Evaluated through the boundary-vanishing hypergeometric branch
    u(rho) = rho * 2F1(a + 1/2, b + 1/2; 3/2; rho^2), which coincides with
    the interior-regular solution exactly when the quantization vanishes;
    at lam = 1 the series collapses and u is proportional to rho.
    """
    families = analytic_eigenvalues(params, params.omega_tilde + 1e-9)
    if not any(abs(lam - v) < 1e-9 for v in families):
        if abs(lam - (1.0 - 2.0 / (params.p - 1.0))) < 1e-9:
            raise DomainError(
                f"lam={lam} is the logarithmically degenerate point 1 - 2/(p-1)")
        raise DomainError(f"lam={lam} is not an analytic eigenvalue")
    hp = HypParams.for_eigenvalue(lam, params.p)
    rho = grid.nodes
    out = np.empty(grid.n)
    out[0] = 0.0
    for i in range(1, grid.n):
        z = min(rho[i] ** 2, 1.0 - 1e-14)
        out[i] = rho[i] * hyp2f1(hp.a + 0.5, hp.b + 0.5, 1.5, z)
    return out
