"""Coagulation solvers.

Constant-kernel coagulation is solved through its scalar Laplace-space base
flow; the general Smoluchowski-type equation through mass-space linear base
PDEs followed by a Volterra projection p = g * q (forward substitution, the
delta part of q handled analytically as the identity).  A direct
integro-differential RK4 integrator provides the cross-validation oracle.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .core import Grid1D, QuadratureRule
from .errors import BlowupAtTime, ConfigError, DomainError, IntegrationBlowup


@dataclass
class MassDensity:
    """Cluster-density samples on a truncated uniform mass grid [0, X]."""

    grid: Grid1D
    values: np.ndarray
    t: float = 0.0
    # set when the data is an exponential profile A exp(-beta x); enables the
    # analytic Laplace inversion in constant_kernel_solve
    exponential: tuple | None = None

    @property
    def m0(self) -> float:
        return float(np.trapezoid(self.values, dx=self.grid.spacing))

    @property
    def m1(self) -> float:
        return float(np.trapezoid(self.grid.nodes * self.values,
                              dx=self.grid.spacing))

    @property
    def tail_mass(self) -> float:
        """Quadrature mass of the last 5% of the grid (truncation diagnostic)."""
        k = max(2, self.grid.n // 20)
        return float(np.trapezoid(self.grid.nodes[-k:] * self.values[-k:],
                              dx=self.grid.spacing))


def exponential_density(grid: Grid1D, amplitude: float, rate: float) -> MassDensity:
    vals = amplitude * np.exp(-rate * grid.nodes)
    return MassDensity(grid=grid, values=vals, exponential=(amplitude, rate))


# ---------------------------------------------------------------------------
# constant kernel K = 1


def m0_constant_kernel(m00: float, t: float) -> float:
    """m0(t) = m0(0) / (1 + t m0(0)/2)."""
    if m00 < 0:
        raise DomainError("m0(0) must be non-negative")
    denom = 1.0 + 0.5 * t * m00
    if denom <= 0:
        raise DomainError("closed-form m0 denominator non-positive")
    return m00 / denom


def constant_kernel_scalars(mu: float, t: float):
    """(c, lam) with p(t) = c g0 and qhat(t) = lam g0 in mass space."""
    denom = 1.0 + 0.5 * t * mu
    if denom <= 0:
        raise BlowupAtTime("base flow denominator crossed zero")
    return 1.0 / denom ** 2, -0.5 * t / denom


def constant_kernel_solve(g0: MassDensity, t: float) -> MassDensity:
    """Project the Laplace-space base flow back to mass space.

    Exponential data A exp(-beta x) inverts analytically:
    g(x, t) = c A exp(-(beta + lam A) x).  General sampled data goes through
    the discrete Volterra projection (first-order in the grid spacing).
    """
    mu = g0.m0
    c, lam = constant_kernel_scalars(mu, t)
    if g0.exponential is not None:
        amp, rate = g0.exponential
        mu_exact = amp / rate
        c, lam = constant_kernel_scalars(mu_exact, t)
        new_rate = rate + lam * amp
        if new_rate <= 0:
            raise BlowupAtTime("inverted exponential no longer decays")
        return MassDensity(grid=g0.grid, t=t,
                           values=c * amp * np.exp(-new_rate * g0.grid.nodes),
                           exponential=(c * amp, new_rate))
    p = c * g0.values
    qhat = lam * g0.values
    g = volterra_project(p, qhat, g0.grid)
    return MassDensity(grid=g0.grid, values=g, t=t)


# ---------------------------------------------------------------------------
# discrete Volterra convolution machinery (uniform grids, left Riemann)


def _check_uniform(grid: Grid1D):
    if grid.kind != "closed" or grid.lower != 0.0:
        raise ConfigError("mass grids are closed and start at 0")


def volterra_assemble(g: np.ndarray, qhat: np.ndarray, grid: Grid1D) -> np.ndarray:
    """p = g + g * qhat with (g * qhat)(x_i) = h sum_{j<i} g_j qhat_{i-j}."""
    _check_uniform(grid)
    h = grid.spacing
    conv = fftconvolve(g, qhat)[:len(g)]
    # the left-Riemann sum runs j = 0..i-1, i.e. drops the j = i term
    conv = conv - g * qhat[0]
    return g + h * conv


def volterra_project(p: np.ndarray, qhat: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Invert p = g + g * qhat by forward substitution (unit lower triangle)."""
    _check_uniform(grid)
    h = grid.spacing
    n = len(p)
    g = np.zeros(n, dtype=np.result_type(p, qhat, float))
    g[0] = p[0]
    for i in range(1, n):
        g[i] = p[i] - h * np.dot(g[:i], qhat[i:0:-1])
    return g


def volterra_residual(p, qhat, g, grid: Grid1D) -> float:
    return float(np.max(np.abs(volterra_assemble(g, qhat, grid) - p)))


def deconvolve(p: np.ndarray, q: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Solve p = g * q for g when q has no delta part.

    With the left-Riemann sum p_i = h sum_{j<i} g_j q_{i-j}, the unknown
    g_{i-1} sits against q_1, so q(h) must be nonzero.  Only n-1 components
    of g are determined; the last node is linearly extrapolated.
    """
    _check_uniform(grid)
    h = grid.spacing
    n = len(p)
    if q[1] == 0:
        raise ConfigError("deconvolution needs q nonzero at the first node")
    g = np.zeros(n, dtype=np.result_type(p, q, float))
    for i in range(1, n):
        acc = np.dot(g[:i - 1], q[i:1:-1]) if i > 1 else 0.0
        g[i - 1] = (p[i] / h - acc) / q[1]
    g[n - 1] = 2 * g[n - 2] - g[n - 3]
    return g


# ---------------------------------------------------------------------------
# general Smoluchowski-type equation


@dataclass
class SmolCoefficients:
    """Coefficients of the general equation

        dg/dt = d(dx) g + g*(b(dx) g) - g*a - g*b0*g

    ``d_poly`` and ``b_poly`` are ascending polynomial coefficients with
    deg b < deg d enforced; ``a`` and ``b0`` are sampled functions on the
    mass grid; ``b0_delta`` adds a Dirac component to b0 (the constant
    kernel's gain term is b0 = -1/2 delta).  ``include_loss`` switches on
    the loss term -g m0(t), absorbed into d's zero-degree coefficient via
    the preprocessing Riccati for m0.
    """

    d_poly: tuple = (0.0,)
    b_poly: tuple = (0.0,)
    a: np.ndarray | None = None
    b0: np.ndarray | None = None
    b0_delta: float = 0.0
    include_loss: bool = False

    def __post_init__(self):
        if self._degree(self.b_poly) >= self._degree(self.d_poly) and \
                self._degree(self.b_poly) > 0:
            raise ConfigError("deg b must be strictly less than deg d")

    @staticmethod
    def _degree(poly):
        nz = [i for i, c in enumerate(poly) if c != 0]
        return max(nz) if nz else 0


def _derivative_matrix(grid: Grid1D) -> np.ndarray:
    """Second-order first-derivative matrix, one-sided at the endpoints."""
    n, h = grid.n, grid.spacing
    d = np.zeros((n, n))
    for i in range(1, n - 1):
        d[i, i - 1], d[i, i + 1] = -0.5 / h, 0.5 / h
    d[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
    d[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    return d


def _poly_of_matrix(poly, mat):
    n = mat.shape[0]
    out = poly[0] * np.eye(n)
    power = np.eye(n)
    for c in poly[1:]:
        power = power @ mat
        out = out + c * power
    return out


def integrate_m0_riccati(coeffs: SmolCoefficients, m00: float, t: float,
                         grid: Grid1D, steps: int = 1024) -> np.ndarray:
    """RK4 track of m0' = (D0 - abar) m0 + (B0 - b0bar - 1) m0^2.

    abar / b0bar are the [0, X] integrals of a and b0 (plus the delta
    coefficient).  Returns m0 at the steps+1 equispaced times in [0, t].
    """
    rule = QuadratureRule.trapezoid(grid)
    abar = float(rule.integrate(coeffs.a)) if coeffs.a is not None else 0.0
    b0bar = coeffs.b0_delta
    if coeffs.b0 is not None:
        b0bar += float(rule.integrate(coeffs.b0))
    d0, b0c = coeffs.d_poly[0], coeffs.b_poly[0]
    lin, quad = d0 - abar, b0c - b0bar - 1.0
    dt = t / steps
    track = np.empty(steps + 1)
    track[0] = m00
    m = m00
    for i in range(steps):
        f = lambda y: lin * y + quad * y * y
        k1 = f(m)
        k2 = f(m + 0.5 * dt * k1)
        k3 = f(m + 0.5 * dt * k2)
        k4 = f(m + dt * k3)
        m = m + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        track[i + 1] = m
    if not np.all(np.isfinite(track)):
        raise BlowupAtTime("m0 preprocessing Riccati blew up")
    return track


def general_smol_solve(coeffs: SmolCoefficients, g0: MassDensity, t: float,
                       steps: int = 512) -> MassDensity:
    """Integrate the linear base pair in mass space, then Volterra-project.

        dp/dt = d(dx) p [- m0(t) p],    dqhat/dt = a + a*qhat + b0*p
                                                   + b0_delta p - b(dx) p,
        p = g * (delta + qhat).
    """
    grid = g0.grid
    _check_uniform(grid)
    h = grid.spacing
    dx = _derivative_matrix(grid)
    dmat = _poly_of_matrix(coeffs.d_poly, dx)
    bmat = _poly_of_matrix(coeffs.b_poly, dx)
    a = coeffs.a if coeffs.a is not None else None
    b0 = coeffs.b0

    if coeffs.include_loss:
        m0_track = integrate_m0_riccati(coeffs, g0.m0, t, grid, steps=2 * steps)

    def m0_at(frac):
        if not coeffs.include_loss:
            return 0.0
        pos = frac * (len(m0_track) - 1)
        i = int(round(pos))
        return m0_track[min(i, len(m0_track) - 1)]

    def conv(u, v):
        c = fftconvolve(u, v)[:grid.n]
        return h * (c - u * v[0])

    def rhs(state, frac):
        p, qhat = state
        dp = dmat @ p - m0_at(frac) * p
        dq = coeffs.b0_delta * p - bmat @ p
        if a is not None:
            dq = dq + a + conv(a, qhat)
        if b0 is not None:
            dq = dq + conv(b0, p)
        return np.array([dp, dq])

    state = np.array([g0.values.astype(float), np.zeros(grid.n)])
    dt = t / steps
    for m in range(steps):
        frac0 = m / steps
        k1 = rhs(state, frac0)
        k2 = rhs(state + 0.5 * dt * k1, frac0 + 0.5 / steps)
        k3 = rhs(state + 0.5 * dt * k2, frac0 + 0.5 / steps)
        k4 = rhs(state + dt * k3, frac0 + 1.0 / steps)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationBlowup("base pair became non-finite")
    p, qhat = state
    g = volterra_project(p, qhat, grid)
    return MassDensity(grid=grid, values=g, t=t)


def general_smol_residual(coeffs: SmolCoefficients, g0: MassDensity, t: float,
                          dt: float, steps: int = 512) -> float:
    """Finite-difference defect of the target equation at time t.

    The loss term uses the solved density's own m0 so the residual is of the
    full equation including -g m0 when include_loss is set.
    """
    grid = g0.grid
    h = grid.spacing
    sols = [general_smol_solve(coeffs, g0, s, steps=steps)
            for s in (t - dt, t, t + dt)]
    g = sols[1].values
    gt = (sols[2].values - sols[0].values) / (2 * dt)
    dx = _derivative_matrix(grid)
    res = gt - _poly_of_matrix(coeffs.d_poly, dx) @ g

    def conv(u, v):
        c = fftconvolve(u, v)[:grid.n]
        return h * (c - u * v[0])

    res = res - conv(g, _poly_of_matrix(coeffs.b_poly, dx) @ g)
    if coeffs.a is not None:
        res = res + conv(g, coeffs.a)
    if coeffs.b0 is not None:
        res = res + conv(g, conv(coeffs.b0, g))
    res = res + coeffs.b0_delta * conv(g, g)
    if coeffs.include_loss:
        res = res + g * sols[1].m0
    # skip the one-sided boundary stencils
    return float(np.max(np.abs(res[2:-2])))


# ---------------------------------------------------------------------------
# direct integro-differential oracle


def direct_smol_oracle(g0: MassDensity, t: float, dt: float,
                       kernel: str = "constant", alpha: float = 0.0,
                       gain_only: bool = False, track_moments: bool = False):
    """RK4 integration of the coagulation equation on the truncated grid.

    kernel "constant" is K = 1; kernel "exp" is the gain-only family
    K(y, x - y) = exp(-2 alpha y (x - y)) (gain_only forced).
    """
    grid = g0.grid
    _check_uniform(grid)
    h = grid.spacing
    x = grid.nodes
    n = grid.n
    if kernel == "exp":
        gain_only = True
        kmat = np.zeros((n, n))
        for i in range(n):
            y = x[:i]
            kmat[i, :i] = np.exp(-2.0 * alpha * y * (x[i] - y))
    elif kernel != "constant":
        raise ConfigError(f"unknown kernel {kernel!r}")

    def rhs(g):
        if kernel == "constant":
            conv = fftconvolve(g, g)[:n]
            gain = 0.5 * h * (conv - g * g[0])
        else:
            gain = np.zeros(n)
            for i in range(1, n):
                gain[i] = 0.5 * h * np.dot(kmat[i, :i] * g[:i], g[i - 1::-1])
        if gain_only:
            return gain
        m0 = np.trapezoid(g, dx=h)
        return gain - g * m0

    steps = max(1, int(round(t / dt)))
    dt = t / steps
    g = g0.values.astype(float).copy()
    times, m0s, m1s = [0.0], [np.trapezoid(g, dx=h)], [np.trapezoid(x * g, dx=h)]
    for m in range(steps):
        k1 = rhs(g)
        k2 = rhs(g + 0.5 * dt * k1)
        k3 = rhs(g + 0.5 * dt * k2)
        k4 = rhs(g + dt * k3)
        g = g + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(g)):
            raise IntegrationBlowup("direct oracle blew up")
        if track_moments:
            times.append((m + 1) * dt)
            m0s.append(np.trapezoid(g, dx=h))
            m1s.append(np.trapezoid(x * g, dx=h))
    out = MassDensity(grid=grid, values=g, t=t)
    if track_moments:
        return out, np.array(times), np.array(m0s), np.array(m1s)
    return out


# ---------------------------------------------------------------------------
# pre-Laplace Burgers


def pre_laplace_burgers_solve(q0: np.ndarray, grid: Grid1D, nu: float,
                              t: float):
    """Base flow q(x,t) = q0 exp(nu x^2 t), p = 2 nu x q, then deconvolve.

    Returns (g, g0) where g0 is the density the Volterra relation forces at
    t = 0 for the supplied q0.
    """
    if nu <= 0:
        raise ConfigError("nu must be positive")
    _check_uniform(grid)
    x = grid.nodes
    qt = q0 * np.exp(nu * x ** 2 * t)
    pt = 2.0 * nu * x * qt
    g = deconvolve(pt, qt, grid)
    g0 = deconvolve(2.0 * nu * x * q0, q0, grid)
    return g, g0


def pre_laplace_burgers_residual(q0, grid: Grid1D, nu: float, t: float,
                                 dt: float) -> float:
    """FD defect of dg/dt = nu x^2 g + (x/2) int_0^x g(y) g(x-y) dy."""
    h = grid.spacing
    x = grid.nodes
    gm, _ = pre_laplace_burgers_solve(q0, grid, nu, t - dt)
    g, _ = pre_laplace_burgers_solve(q0, grid, nu, t)
    gp, _ = pre_laplace_burgers_solve(q0, grid, nu, t + dt)
    gt = (gp - gm) / (2 * dt)
    conv = fftconvolve(g, g)[:grid.n]
    conv = h * (conv - g * g[0])
    res = gt - nu * x ** 2 * g - 0.5 * x * conv
    return float(np.max(np.abs(res[1:-2])))


# ---------------------------------------------------------------------------
# exponential-kernel rescaling


def exp_kernel_rescale(g: MassDensity, alpha: float,
                       inverse: bool = False) -> MassDensity:
    """Map between the exp-kernel and constant-kernel gain-only flows.

    If g solves the gain-only equation with K(y, x-y) = exp(-2 alpha y(x-y)),
    then u = g exp(alpha x^2) solves the constant-kernel gain-only equation:
    the kernel exactly absorbs the cross term of (y + (x-y))^2.  ``inverse``
    maps a constant-kernel solution back.
    """
    expo = alpha * g.grid.nodes ** 2
    if inverse:
        expo = -expo
    if np.max(expo) > 700:
        raise DomainError("rescaling factor overflows")
    return MassDensity(grid=g.grid, values=g.values * np.exp(expo), t=g.t)
