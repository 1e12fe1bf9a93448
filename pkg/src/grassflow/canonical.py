"""Base/Riccati machinery on finite-dimensional surrogates.

The canonical linear system

    Qdot = A Q + B P,     Pdot = C Q + D P,     P = G Q

is integrated here at matrix scale, together with the additive-kernel
Fredholm solver used by the KdV/NLS pipelines and a numerical check of the
product rule for serial compositions of additive operators.
"""

from dataclasses import dataclass

import numpy as np

from .core import (DenseSystem, Grid1D, QuadratureRule, det_plain, det_reg,
                   solve_dense, weighted_kernel)
from .errors import (ChartBreakdown, ConfigError, IntegrationBlowup,
                     SingularSystem, TraceRangeError)

CHART_DET_THRESHOLD = 1e-10


@dataclass(frozen=True)
class CanonicalCoefficients:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        shapes = {np.asarray(m).shape for m in (self.A, self.B, self.C, self.D)}
        if len(shapes) != 1:
            raise ConfigError("coefficient blocks must share one shape")
        for m in (self.A, self.B, self.C, self.D):
            if not np.all(np.isfinite(np.asarray(m, dtype=complex))):
                raise ConfigError("coefficient blocks must be finite")


@dataclass
class BaseState:
    Q: np.ndarray
    P: np.ndarray
    t: float = 0.0


def _rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_base(coeffs: CanonicalCoefficients, initial: BaseState,
                   t: float, steps: int) -> BaseState:
    """Advance (Q, P) with classical fixed-step RK4."""
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    A, B = np.asarray(coeffs.A), np.asarray(coeffs.B)
    C, D = np.asarray(coeffs.C), np.asarray(coeffs.D)
    n = A.shape[0]
    y = np.concatenate([np.atleast_2d(initial.Q), np.atleast_2d(initial.P)], axis=0)

    def rhs(state):
        q, p = state[:n], state[n:]
        return np.concatenate([A @ q + B @ p, C @ q + D @ p], axis=0)

    dt = (t - initial.t) / steps
    for _ in range(steps):
        y = _rk4_step(rhs, y, dt)
        if not np.all(np.isfinite(y)):
            raise IntegrationBlowup("base state became non-finite")
    return BaseState(Q=y[:n], P=y[n:], t=t)


def integrate_base_exact(coeffs: CanonicalCoefficients, initial: BaseState,
                         t: float) -> BaseState:
    """Matrix-exponential solution for constant coefficients (oracle)."""
    from scipy.linalg import expm

    A, B = np.asarray(coeffs.A), np.asarray(coeffs.B)
    C, D = np.asarray(coeffs.C), np.asarray(coeffs.D)
    block = np.block([[A, B], [C, D]])
    n = A.shape[0]
    y0 = np.concatenate([np.atleast_2d(initial.Q), np.atleast_2d(initial.P)], axis=0)
    y = expm((t - initial.t) * block) @ y0
    return BaseState(Q=y[:n], P=y[n:], t=t)


def riccati_project(state: BaseState) -> np.ndarray:
    """G = P Q^{-1}; raises ChartBreakdown when |det Q| crosses the floor."""
    q = np.atleast_2d(state.Q)
    p = np.atleast_2d(state.P)
    detq = np.linalg.det(q)
    if abs(detq) < CHART_DET_THRESHOLD:
        raise ChartBreakdown(
            f"|det Q| = {abs(detq):.3e} below {CHART_DET_THRESHOLD}",
            det_value=detq, location=state.t)
    # solve G Q = P as Q^T G^T = P^T
    gt = solve_dense(DenseSystem(q.T, p.T))
    return gt.T


def riccati_residual(coeffs: CanonicalCoefficients, g_samples, dt: float) -> float:
    """Sup-norm defect of Gdot = C + D G - G (A + B G), central differences."""
    gs = [np.atleast_2d(g) for g in g_samples]
    if len(gs) < 3:
        raise ConfigError("need at least 3 equispaced G samples")
    A, B = np.asarray(coeffs.A), np.asarray(coeffs.B)
    C, D = np.asarray(coeffs.C), np.asarray(coeffs.D)
    worst = 0.0
    for k in range(1, len(gs) - 1):
        gdot = (gs[k + 1] - gs[k - 1]) / (2.0 * dt)
        g = gs[k]
        defect = gdot - C - D @ g + g @ (A + B @ g)
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst


# ---------------------------------------------------------------------------
# additive (Hankel) kernel traces


@dataclass
class AdditiveKernelTrace:
    """Samples of a one-argument kernel r(.) inducing an additive operator.

    The action is (R psi)(y; x) = int r(y + z + x) psi(z) dz over the
    truncated half-line.  Arguments outside the sampled interval evaluate
    to zero unless ``zero_extension`` is disabled.
    """

    grid: Grid1D
    values: np.ndarray
    zero_extension: bool = True

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        h = self.grid.spacing
        idx = (pts - self.grid.lower) / h
        near = np.rint(idx)
        on_node = np.abs(idx - near) < 1e-9
        out = np.zeros(pts.shape, dtype=complex)
        inside = (near >= 0) & (near <= self.grid.n - 1)
        if not self.zero_extension and not np.all(inside):
            raise TraceRangeError("trace queried outside sampled interval")
        vals = np.asarray(self.values)
        # node hits dominate; off-node interior points interpolate linearly
        take = inside & on_node
        out[take] = vals[near[take].astype(int)]
        off = inside & ~on_node
        if np.any(off):
            lo = np.clip(np.floor(idx[off]).astype(int), 0, self.grid.n - 2)
            frac = idx[off] - lo
            out[off] = (1 - frac) * vals[lo] + frac * vals[lo + 1]
        return out


def solve_additive_fredholm(p_trace, qhat, zgrid: Grid1D, x: float,
                            quadrature: str = "riemann-left",
                            full_kernel: bool = False):
    """Solve  p(z + x) = g(0, z) + int g(0, xi) qhat(xi, z) w(xi) dxi.

    ``p_trace`` is callable at shifted nodes; ``qhat`` is a callable
    (xi, z) -> value, vectorised over its arguments (for the KdV case it is
    the additive evaluation qhat(xi + z + x)).  Returns (g_row, det_track)
    where det_track is the plain determinant det(I + Qhat_w) of the
    assembled discrete operator.  With ``full_kernel`` the whole matrix
    g(y, z) is solved instead of just the y = 0 row.
    """
    rule = QuadratureRule.for_scheme(zgrid, quadrature)
    nodes, w = rule.nodes, rule.weights
    kmat = np.asarray(qhat(nodes[:, None], nodes[None, :]), dtype=complex)
    # row i is the equation at z_i; column j weights the unknown g(0, xi_j)
    a = np.eye(zgrid.n, dtype=complex) + w[None, :] * kmat.T
    det_track = det_plain(weighted_kernel(kmat, w))
    if full_kernel:
        rhs = np.asarray(p_trace(nodes[:, None] + nodes[None, :] + x),
                         dtype=complex)
        try:
            g = solve_dense(DenseSystem(a, rhs.T)).T
        except SingularSystem as exc:
            raise ChartBreakdown(str(exc), det_value=det_track, location=x) from exc
        return g, det_track
    rhs = np.asarray(p_trace(nodes + x), dtype=complex)
    try:
        g_row = solve_dense(DenseSystem(a, rhs))
    except SingularSystem as exc:
        raise ChartBreakdown(str(exc), det_value=det_track, location=x) from exc
    return g_row, det_track


def fredholm_residual(p_trace, qhat, zgrid: Grid1D, x: float, g_row,
                      quadrature: str = "riemann-left") -> float:
    """Discrete residual of the solved Fredholm equation (should be ~1e-10)."""
    rule = QuadratureRule.for_scheme(zgrid, quadrature)
    nodes, w = rule.nodes, rule.weights
    kmat = np.asarray(qhat(nodes[:, None], nodes[None, :]), dtype=complex)
    lhs = np.asarray(p_trace(nodes + x), dtype=complex)
    rhs = g_row + (w[None, :] * kmat.T) @ g_row
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# product rule check


def compose(f: np.ndarray, g: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Operator composition by quadrature: (F G)(y,z) = sum f(y,xi) g(xi,z) w."""
    return f @ (weights[:, None] * g)


def delta_kernel(weights: np.ndarray) -> np.ndarray:
    """Kernel whose quadrature composition acts as the identity."""
    if np.any(weights == 0):
        raise ConfigError("delta discretisation needs strictly positive weights")
    return np.diag(1.0 / weights)


def product_rule_check(f_kernel, r_trace: AdditiveKernelTrace,
                       rp_trace: AdditiveKernelTrace, fp_kernel,
                       zgrid: Grid1D, x: float, dx: float,
                       quadrature: str = "trapezoid") -> float:
    """|<F d/dx (R R') F'> - <F R><R' F'>| at parameter x.

    d/dx is a central difference with step dx; all compositions use the
    grid quadrature.  Vanishes at second order in (grid spacing, dx).
    """
    rule = QuadratureRule.for_scheme(zgrid, quadrature)
    nodes, w = rule.nodes, rule.weights
    for trace in (r_trace, rp_trace):
        if not (trace.grid.lower <= x - dx and x + dx <= trace.grid.upper):
            raise TraceRangeError("x stencil leaves the sampled trace range")

    def rr(at):
        rm = r_trace(nodes[:, None] + nodes[None, :] + at)
        rpm = rp_trace(nodes[:, None] + nodes[None, :] + at)
        return compose(rm, rpm, w)

    d_rr = (rr(x + dx) - rr(x - dx)) / (2.0 * dx)
    lhs_kernel = compose(compose(f_kernel, d_rr, w), fp_kernel, w)
    # observation functional reads the kernel at (0, 0): the grid's last node
    i0 = zgrid.n - 1
    lhs = lhs_kernel[i0, i0]

    fr = compose(f_kernel, r_trace(nodes[:, None] + nodes[None, :] + x), w)
    rpfp = compose(rp_trace(nodes[:, None] + nodes[None, :] + x), fp_kernel, w)
    rhs = fr[i0, i0] * rpfp[i0, i0]
    return float(abs(lhs - rhs))
