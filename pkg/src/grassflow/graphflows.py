"""Nonlinear graph flows.

Inviscid Burgers and its generalisations are solved by inverting the
characteristic map q(a, t) = a + t * pi0(a) (Newton, with a bisection
fallback in one dimension) and reading the momentum off the initial
profile.  The module also carries the linear Riccati subflow, the
alternate coordinate patch of the graph manifold, a first-order upwind
oracle, and the decaying-Burgers bridge used by the coagulation solvers.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (BlowupAtTime, ConfigError, NewtonDivergence,
                     ShockProximity)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
JACOBIAN_FLOOR = 1e-8
FD_STEP = 1e-6


@dataclass
class FlowMapSample:
    """One particle of the characteristic flow: label, position, momentum."""

    a: np.ndarray
    q: np.ndarray
    p: np.ndarray
    t: float


@dataclass
class InitialProfile:
    """Initial momentum profile a -> pi0(a) with an optional analytic Jacobian.

    Without one, the gradient falls back to central finite differences with
    step 1e-6 scaled by the argument magnitude.
    """

    evaluator: callable
    jacobian: callable = None

    def __call__(self, a):
        return np.asarray(self.evaluator(a), dtype=float)

    def grad(self, a):
        if self.jacobian is not None:
            return np.atleast_2d(np.asarray(self.jacobian(a), dtype=float))
        return _fd_jacobian(self, a)


def _fd_jacobian(func, a):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.size
    jac = np.empty((n, n))
    for j in range(n):
        step = FD_STEP * max(1.0, abs(a[j]))
        ap, am = a.copy(), a.copy()
        ap[j] += step
        am[j] -= step
        jac[:, j] = (np.atleast_1d(func(ap)) - np.atleast_1d(func(am))) / (2 * step)
    return jac


def _modified_profile(profile: InitialProfile, modifier):
    """pi-tilde = f(|pi0|^2) pi0; its Jacobian is finite-differenced."""
    if modifier is None:
        return profile

    def tilde(a):
        p = np.atleast_1d(profile(a))
        return modifier(float(np.dot(p, p))) * p

    return InitialProfile(evaluator=tilde)


def invert_characteristic(x, t: float, profile: InitialProfile,
                          modifier=None):
    """Solve a + t * pi-tilde(a) = x for the characteristic label a.

    Newton iteration to a sup-norm residual of 1e-12 within 50 steps; the
    scalar case retries with bisection over an expanded bracket before
    giving up.  A Jacobian determinant at or below 1e-8 along the path
    raises ShockProximity.
    """
    tilde = _modified_profile(profile, modifier)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size

    def residual(a):
        return a + t * np.atleast_1d(tilde(a)) - x

    a = x.copy()
    for _ in range(NEWTON_MAX_ITER):
        f = residual(a)
        jac = np.eye(n) + t * tilde.grad(a)
        det = float(np.linalg.det(jac))
        # the shock test covers the accepted point as well as the path
        if det <= JACOBIAN_FLOOR:
            raise ShockProximity(
                f"Jacobian determinant {det:.3e} at label {a}",
                jacobian_det=det, point=a.copy())
        if np.max(np.abs(f)) <= NEWTON_TOL:
            return a if n > 1 else float(a[0])
        a = a - np.linalg.solve(jac, f)
    if n == 1:
        return _bisect_scalar(residual, float(x[0]), t)
    raise NewtonDivergence(f"no convergence inverting x = {x}")


def _bisect_scalar(residual, x, t):
    span = max(1.0, abs(t), abs(x))
    lo, hi = x - span, x + span
    flo = float(residual(np.array([lo]))[0])
    fhi = float(residual(np.array([hi]))[0])
    for _ in range(60):
        if flo * fhi <= 0:
            break
        span *= 2.0
        lo, hi = x - span, x + span
        flo = float(residual(np.array([lo]))[0])
        fhi = float(residual(np.array([hi]))[0])
    else:
        raise NewtonDivergence("bisection bracket never changed sign")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(residual(np.array([mid]))[0])
        if abs(fm) <= NEWTON_TOL or hi - lo <= NEWTON_TOL:
            return mid
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    raise NewtonDivergence("bisection failed to reach tolerance")


@dataclass
class GraphField:
    """Momentum samples on an x-grid; flagged nodes hit a near-shock."""

    x_nodes: np.ndarray
    values: np.ndarray
    flagged: list = field(default_factory=list)
    t: float = 0.0


def inviscid_burgers_eval(x_nodes, t: float, profile: InitialProfile,
                          modifier=None) -> GraphField:
    """pi(x, t) = pi0((id + t pi-tilde)^{-1}(x)) node by node.

    Nodes where the inversion hits ShockProximity are flagged and left NaN
    rather than aborting the whole field.
    """
    x_nodes = np.asarray(x_nodes, dtype=float)
    values = np.full(x_nodes.shape, np.nan)
    flagged = []
    for i, x in enumerate(x_nodes):
        try:
            a = invert_characteristic(x, t, profile, modifier=modifier)
        except ShockProximity as exc:
            flagged.append((i, float(x), exc.jacobian_det))
            continue
        values[i] = float(np.atleast_1d(profile(np.atleast_1d(a)))[0])
    return GraphField(x_nodes=x_nodes, values=values, flagged=flagged, t=t)


def shock_time(profile: InitialProfile, sample_points) -> float:
    """1 / max(-pi0') over the sampled labels; inf for non-compressive data."""
    worst = 0.0
    for a in np.asarray(sample_points, dtype=float):
        slope = float(profile.grad(np.atleast_1d(a))[0, 0])
        worst = max(worst, -slope)
    return np.inf if worst <= 0 else 1.0 / worst


# ---------------------------------------------------------------------------
# generalised first-order models


def _rk4_step(f, y, s, ds):
    k1 = f(s, y)
    k2 = f(s + 0.5 * ds, y + 0.5 * ds * k1)
    k3 = f(s + 0.5 * ds, y + 0.5 * ds * k2)
    k4 = f(s + ds, y + ds * k3)
    return y + (ds / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _as_coeff(c, n):
    if c is None:
        return lambda s: np.zeros((n, n))
    if callable(c):
        return lambda s: np.atleast_2d(np.asarray(c(s), dtype=float))
    cmat = np.atleast_2d(np.asarray(c, dtype=float))
    return lambda s: cmat


def fundamental_matrix(coeffs, t: float, n: int, steps: int = 256) -> np.ndarray:
    """Phi(t) of d/ds [q; p] = [[A, B], [C, D]] [q; p], classical RK4."""
    A, B, C, D = (_as_coeff(c, n) for c in coeffs)

    def rhs(s, y):
        block = np.block([[A(s), B(s)], [C(s), D(s)]])
        return block @ y

    y = np.eye(2 * n)
    ds = t / steps
    for m in range(steps):
        y = _rk4_step(rhs, y, m * ds, ds)
    return y


def generalized_flow_eval(x_nodes, t: float, profile: InitialProfile,
                          coeffs=None, modifier=None,
                          steps: int = 256) -> GraphField:
    """Graph flow under q' = Aq + Bp, p' = Cq + Dp (or the f(|p|^2) model).

    The linear base pair is reduced to its fundamental matrix, so
    q(a, t) and p(a, t) are affine in (a, pi0(a)) and the inversion is a
    Newton solve with Jacobian Phi_qq + Phi_qp grad pi0.
    """
    if coeffs is None:
        return inviscid_burgers_eval(x_nodes, t, profile, modifier=modifier)
    x_nodes = np.asarray(x_nodes, dtype=float)
    n = 1
    phi = fundamental_matrix(coeffs, t, n, steps=steps)
    qq, qp = phi[:n, :n], phi[:n, n:]
    pq, pp = phi[n:, :n], phi[n:, n:]
    values = np.full(x_nodes.shape, np.nan)
    flagged = []
    for i, x in enumerate(x_nodes):
        try:
            a = _invert_affine(x, profile, qq, qp)
        except ShockProximity as exc:
            flagged.append((i, float(x), exc.jacobian_det))
            continue
        p0 = np.atleast_1d(profile(a))
        values[i] = float((pq @ a + pp @ p0)[0])
    return GraphField(x_nodes=x_nodes, values=values, flagged=flagged, t=t)


def _invert_affine(x, profile, qq, qp):
    a = np.atleast_1d(np.asarray(x, dtype=float))
    for _ in range(NEWTON_MAX_ITER):
        f = qq @ a + qp @ np.atleast_1d(profile(a)) - x
        if np.max(np.abs(f)) <= NEWTON_TOL:
            return a
        jac = qq + qp @ profile.grad(a)
        det = float(np.linalg.det(jac))
        if abs(det) <= JACOBIAN_FLOOR:
            raise ShockProximity(f"Jacobian determinant {det:.3e}",
                                 jacobian_det=det, point=a.copy())
        a = a - np.linalg.solve(jac, f)
    raise NewtonDivergence(f"no convergence inverting x = {x}")


# ---------------------------------------------------------------------------
# Riccati subflow and the alternate chart


def riccati_subflow(pi0: np.ndarray, t: float) -> np.ndarray:
    """pi(t) = pi0 (I + t pi0)^{-1}, the matrix solution of pi' = -pi^2."""
    pi0 = np.atleast_2d(np.asarray(pi0, dtype=float))
    n = pi0.shape[0]
    m = np.eye(n) + t * pi0
    if abs(np.linalg.det(m)) < 1e-12:
        raise BlowupAtTime(f"I + t pi0 singular at t = {t}")
    # pi = pi0 m^{-1}  <=>  m^T pi^T = pi0^T
    return np.linalg.solve(m.T, pi0.T).T


def chart_swap_eval(y_nodes, t: float, inverse_profile) -> np.ndarray:
    """Alternate-patch solution pi'_t(y) = pi'_0(y) + t y (exact, affine in t)."""
    y = np.asarray(y_nodes, dtype=float)
    return np.asarray(inverse_profile(y), dtype=float) + t * y


# ---------------------------------------------------------------------------
# direct oracle and residuals


def upwind_oracle(pi0_samples: np.ndarray, h: float, t: float,
                  cfl: float = 0.4) -> np.ndarray:
    """First-order upwind integration of pi_t + pi pi_x = 0, periodic."""
    u = np.asarray(pi0_samples, dtype=float).copy()
    elapsed = 0.0
    while elapsed < t:
        speed = np.max(np.abs(u))
        dt = min(cfl * h / max(speed, 1e-12), t - elapsed)
        back = (u - np.roll(u, 1)) / h
        fwd = (np.roll(u, -1) - u) / h
        u = u - dt * u * np.where(u > 0, back, fwd)
        elapsed += dt
    return u


def inviscid_residual(profile: InitialProfile, x_nodes, t: float,
                      dt: float) -> float:
    """Central-difference defect of pi_t + pi pi_x = 0 on interior nodes."""
    x = np.asarray(x_nodes, dtype=float)
    h = x[1] - x[0]
    fields = [inviscid_burgers_eval(x, s, profile).values
              for s in (t - dt, t, t + dt)]
    pt = (fields[2] - fields[0]) / (2 * dt)
    px = (np.roll(fields[1], -1) - np.roll(fields[1], 1)) / (2 * h)
    res = pt + fields[1] * px
    return float(np.max(np.abs(res[1:-1])))


def generalized_residual(profile: InitialProfile, coeffs, x_nodes, t: float,
                         dt: float) -> float:
    """Defect of pi_t + pi_x (A x + B pi) - (C x + D pi) on interior nodes."""
    x = np.asarray(x_nodes, dtype=float)
    h = x[1] - x[0]
    fields = [generalized_flow_eval(x, s, profile, coeffs=coeffs).values
              for s in (t - dt, t, t + dt)]
    pt = (fields[2] - fields[0]) / (2 * dt)
    px = (np.roll(fields[1], -1) - np.roll(fields[1], 1)) / (2 * h)
    A, B, C, D = (float(np.atleast_2d(_as_coeff(c, 1)(t))[0, 0])
                  for c in coeffs)
    res = pt + px * (A * x + B * fields[1]) - (C * x + D * fields[1])
    return float(np.max(np.abs(res[1:-1])))


# ---------------------------------------------------------------------------
# coagulation bridge: Burgers flow with linear decay


def decaying_burgers_eval(s_nodes, t: float, profile: InitialProfile) -> GraphField:
    """Solve pi_t + pi pi_s = -pi through the exact integrating factor.

    Substituting pi = e^{-t} sigma and tau = 1 - e^{-t} reduces the decaying
    flow to plain inviscid Burgers in the rescaled time tau.
    """
    tau = 1.0 - np.exp(-t)
    base = inviscid_burgers_eval(s_nodes, tau, profile)
    return GraphField(x_nodes=base.x_nodes,
                      values=np.exp(-t) * base.values,
                      flagged=base.flagged, t=t)
