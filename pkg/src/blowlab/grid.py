"""Chebyshev-Gauss-Lobatto collocation grid on [0, L].

Nodes are stored ascending with rho[0] = 0 and rho[-1] = L.  The grid
carries the spectral differentiation matrix D, a Volterra integration
matrix V realizing u -> int_0^rho u, Clenshaw-Curtis quadrature weights w,
and barycentric weights for off-grid interpolation.

V is built by integrating the Chebyshev interpolant coefficient-wise with
the antiderivative pinned to zero at rho = 0; this is exact for polynomials
up to degree n-1 and its last row coincides with the Clenshaw-Curtis
weights to rounding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _cheb_nodes_and_diff(N):
    """Differentiation matrix on cos(j*pi/N), j = 0..N (Trefethen)."""
    if N == 0:
        return np.ones(1), np.zeros((1, 1))
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _clencurt(N):
    """Clenshaw-Curtis weights for nodes cos(j*pi/N) on [-1, 1]."""
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    ii = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1)
        v -= np.cos(N * theta[ii]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1)
    w[ii] = 2.0 * v / N
    return w


def _volterra(N, length):
    """Integration matrix u |-> int_0^rho u on the mapped CGL grid.

    Works in Chebyshev coefficient space: values -> coefficients ->
    integrated coefficients (degree N+1) -> values, with the constant fixed
    so the antiderivative vanishes at rho = 0 (x = +1).
    """
    j = np.arange(N + 1)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    # values-to-coefficients (DCT-I normalization for CGL nodes)
    A = (2.0 / N) * np.cos(np.pi * np.outer(j, j) / N) / np.outer(c, c)
    # coefficient integration: b = S a with int T_0 = T_1,
    # int T_1 = T_2/4, int T_k = T_{k+1}/(2(k+1)) - T_{k-1}/(2(k-1))
    S = np.zeros((N + 2, N + 1))
    S[1, 0] = 1.0
    S[2, 1] = 0.25
    for k in range(2, N + 1):
        S[k + 1, k] = 0.5 / (k + 1)
        S[k - 1, k] -= 0.5 / (k - 1)
    # evaluate T_0..T_{N+1} at the nodes x_j = cos(j pi / N)
    E = np.cos(np.pi * np.outer(j, np.arange(N + 2)) / N)
    SA = S @ A
    G = E @ SA          # antiderivative in x, up to a constant
    G1 = SA.sum(axis=0)  # value at x = 1, i.e. rho = 0
    # int_0^rho u drho' = (L/2) * (G(1) - G(x))
    return (length / 2.0) * (G1[None, :] - G)


@dataclass(frozen=True)
class Grid:
    """Collocation grid: nodes, differentiation, integration, quadrature."""

    n: int
    length: float
    nodes: np.ndarray   # ascending, nodes[0] = 0, nodes[-1] = length
    D: np.ndarray       # spectral differentiation, (n, n)
    V: np.ndarray       # Volterra integration u -> int_0^rho u, (n, n)
    w: np.ndarray       # quadrature weights, (n,)
    bary: np.ndarray    # barycentric interpolation weights, (n,)

    @property
    def min_spacing(self):
        return float(np.min(np.diff(self.nodes)))

    def integrate(self, u):
        """Quadrature integral of a grid function over [0, length]."""
        return float(self.w @ np.asarray(u))


def build_grid(n, length=1.0):
    """Build an n-node Chebyshev-Gauss-Lobatto grid on [0, length].

    Raises DomainError for n < 16; coarser grids cannot resolve the
    operators this package assembles.
    """
    if n < 16:
        raise DomainError(f"grid size n={n} out of range: need n >= 16")
    if length <= 0:
        raise DomainError(f"grid length {length} out of range: need length > 0")
    N = n - 1
    x, Dx = _cheb_nodes_and_diff(N)
    # rho = (1 - x)/2 * length maps x (descending) to ascending rho in [0, L]
    nodes = (1.0 - x) / 2.0 * length
    nodes[0] = 0.0
    nodes[-1] = length
    D = Dx * (-2.0 / length)
    w = _clencurt(N) * (length / 2.0)
    V = _volterra(N, length)
    bary = (-1.0) ** np.arange(n) * np.ones(n)
    bary[0] *= 0.5
    bary[-1] *= 0.5
    for a in (nodes, D, V, w, bary):
        a.setflags(write=False)
    return Grid(n=n, length=float(length), nodes=nodes, D=D, V=V, w=w, bary=bary)


def bary_interp(grid, values, targets):
    """Barycentric interpolation of nodal values to target points.

    Exact on grid nodes; spectrally accurate for smooth data.  Targets must
    lie within [0, length].
    """
    values = np.asarray(values, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if targets.min() < -1e-12 or targets.max() > grid.length + 1e-12:
        raise DomainError(
            f"interpolation target outside [0, {grid.length}]")
    diff = targets[:, None] - grid.nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-300)
    diff[exact] = 1.0
    weights = grid.bary[None, :] / diff
    out = (weights @ values) / weights.sum(axis=1)
    hit_rows, hit_cols = np.nonzero(exact)
    out[hit_rows] = values[hit_cols]
    return out
