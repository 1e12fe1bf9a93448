"""Quotient-solution PDE family and the one-dimensional elliptic construction.

The anisotropic family  dg/dt = D_x g - g b(y) gbar,  gbar(y) = g(y, y),
admits explicit solutions: p evolves by the linear symbol in x alone, q is
a scalar weight per y-node accumulated from p, and g = p / q.  The
odd-degree variant replaces the q equation by a purely imaginary phase
flow, so |q| = 1 along the run.  The elliptic construction integrates the
first-order linear pair q' = aq + bp, p' = cq + dp and projects g = p / q.
"""

from dataclasses import dataclass

import numpy as np

from .core import Grid1D, dft_frequencies
from .errors import (BlowupAtTime, ChartBreakdown, ConfigError,
                     IntegrationBlowup, SymbolError)

SERIES_CUTOFF = 1e-6


@dataclass
class QuotientCoefficients:
    """Scalar-scale coefficients of the quotient family.

    ``dispersion`` maps 2 pi |k| to d(2 pi |k|) (Re d <= 0 enforced when
    ``decaying``); ``b`` is callable b(y); ``f_coeffs`` are the alpha_m of
    F(u) = i sum alpha_m u^m for the odd-degree variant (real alpha_m so F
    stays purely imaginary).
    """

    dispersion: callable
    b: callable = None
    f_coeffs: tuple = ()
    decaying: bool = True

    def symbol(self, k):
        d = np.asarray(self.dispersion(2.0 * np.pi * np.abs(np.asarray(k))),
                       dtype=complex)
        if self.decaying and np.any(d.real > 1e-12):
            raise SymbolError("dispersion has growing modes")
        return d

    def f_value(self, u):
        if np.max(np.abs(np.asarray(u).imag)) > 1e-12:
            raise ConfigError("F argument |p|^2 must be real")
        acc = 0.0
        for m, alpha in enumerate(self.f_coeffs):
            acc = acc + alpha * np.real(u) ** m
        return 1j * acc


def _growth_factor(d: np.ndarray, t: float) -> np.ndarray:
    """(e^{dt} - 1)/d with the d -> 0 limit t filled in by series."""
    z = d * t
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF
    out[small] = t * (1.0 + 0.5 * z[small])
    out[~small] = np.expm1(z[~small]) / d[~small]
    return out


@dataclass
class QuotientField:
    grid: Grid1D
    values: np.ndarray  # g[i, j] = g(x_i, y_j)
    q: np.ndarray       # per-y weight
    t: float

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values)


def quotient_solve(g0: np.ndarray, grid: Grid1D,
                   coeffs: QuotientCoefficients, t: float) -> QuotientField:
    """g(x, y; t) = p(x, y; t) / q(y; t) with

    p(., y; t) the linear evolution of g0(., y) under the x symbol and
    q(y; t) = 1 + b(y) * sum_k ((e^{dt} - 1)/d) p0_hat(k, y) e^{2 pi i k y}.
    """
    if grid.kind != "periodic":
        raise ConfigError("quotient solver works on a periodic grid")
    g0 = np.asarray(g0, dtype=complex)
    if g0.shape != (grid.n, grid.n):
        raise ConfigError("initial data must be square on the grid")
    k = dft_frequencies(grid)
    d = coeffs.symbol(k)
    h = grid.spacing
    y = grid.nodes
    # per-column transforms in x: p0_hat[k, j] = sum_i g0[i, j] e^{+2pi i k x_i} h
    phase = np.exp(2j * np.pi * k * grid.lower)
    p0_hat = grid.n * np.fft.ifft(g0, axis=0) * h * phase[:, None]
    p_hat = np.exp(d * t)[:, None] * p0_hat
    p = np.fft.fft(p_hat * np.conj(phase)[:, None], axis=0) / grid.length
    if coeffs.b is None:
        q = np.ones(grid.n, dtype=complex)
    else:
        growth = _growth_factor(d, t)
        # time-integrated p, inverse-transformed and read on the diagonal
        # x = y, so that dq/dt = b(y) p(y, y; t) holds exactly
        integrated = np.fft.fft(growth[:, None] * p0_hat
                                * np.conj(phase)[:, None], axis=0) / grid.length
        integral = np.diag(integrated)
        q = 1.0 + np.asarray(coeffs.b(y), dtype=complex) * integral
    if np.min(np.abs(q)) < 1e-10:
        raise BlowupAtTime(f"quotient weight q vanished at t = {t}")
    return QuotientField(grid=grid, values=p / q[None, :], q=q, t=t)


def quotient_odd_degree_solve(g0: np.ndarray, grid: Grid1D,
                              coeffs: QuotientCoefficients, t: float,
                              steps: int = 256) -> QuotientField:
    """Odd-degree variant: q(y; t) = exp(i int_0^t Im F(|pbar|^2) ds).

    F is purely imaginary, so q is an exact unit-modulus phase; the time
    integral of the phase rate uses a trapezoid over the exact pbar path.
    """
    if not coeffs.f_coeffs:
        return quotient_solve(g0, grid,
                              QuotientCoefficients(coeffs.dispersion,
                                                   decaying=coeffs.decaying), t)
    if grid.kind != "periodic":
        raise ConfigError("quotient solver works on a periodic grid")
    g0 = np.asarray(g0, dtype=complex)
    k = dft_frequencies(grid)
    d = coeffs.symbol(k)
    h = grid.spacing
    phase = np.exp(2j * np.pi * k * grid.lower)
    p0_hat = grid.n * np.fft.ifft(g0, axis=0) * h * phase[:, None]

    def p_at(s):
        p_hat = np.exp(d * s)[:, None] * p0_hat
        return np.fft.fft(p_hat * np.conj(phase)[:, None], axis=0) / grid.length

    # accumulate the purely imaginary exponent of q per y-node
    exponent = np.zeros(grid.n, dtype=complex)
    ds = t / steps
    prev = None
    for m in range(steps + 1):
        p = p_at(m * ds)
        pbar = np.diag(p)
        rate = coeffs.f_value(np.abs(pbar) ** 2)
        w = 0.5 * ds if m in (0, steps) else ds
        exponent += w * rate
        prev = p
    if np.max(np.abs(exponent.real)) > 1e-6:
        raise IntegrationBlowup("unit-modulus weight drifted off the circle")
    q = np.exp(exponent)
    return QuotientField(grid=grid, values=prev / q[None, :], q=q, t=t)


def quotient_residual(g0, grid: Grid1D, coeffs: QuotientCoefficients,
                      t: float, dt: float, odd_degree: bool = False) -> float:
    """Central-difference defect of dg/dt = D_x g - g b(y) gbar.

    For the odd-degree variant the nonlinearity is g F(gbar gbar*) instead.
    """
    solver = quotient_odd_degree_solve if odd_degree else quotient_solve
    fields = [solver(g0, grid, coeffs, s) for s in (t - dt, t, t + dt)]
    gt = (fields[2].values - fields[0].values) / (2 * dt)
    g = fields[1].values
    k = dft_frequencies(grid)
    d = coeffs.symbol(k)
    phase = np.exp(2j * np.pi * k * grid.lower)
    g_hat = grid.n * np.fft.ifft(g, axis=0) * grid.spacing * phase[:, None]
    dxg = np.fft.fft(d[:, None] * g_hat * np.conj(phase)[:, None],
                     axis=0) / grid.length
    gbar = np.diag(g)
    if odd_degree:
        nonlin = g * coeffs.f_value(np.abs(gbar) ** 2)[None, :]
    else:
        b = coeffs.b(grid.nodes) if coeffs.b is not None else np.zeros(grid.n)
        nonlin = g * (np.asarray(b) * gbar)[None, :]
    return float(np.max(np.abs(gt - dxg + nonlin)))


# ---------------------------------------------------------------------------
# elliptic construction


@dataclass
class EllipticCoefficients:
    """Samples of a, b, c, d on a closed grid; b bounded away from zero."""

    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n,):
                raise ConfigError(f"coefficient {name} shape mismatch")
            setattr(self, name, arr)
        if np.min(np.abs(self.b)) < 1e-12:
            raise ConfigError("b must be bounded away from zero")

    def at(self, x):
        """Linear interpolation of all four coefficients at x."""
        xs = self.grid.nodes
        return tuple(np.interp(x, xs, arr)
                     for arr in (self.a, self.b, self.c, self.d))


@dataclass
class EllipticSolution:
    grid: Grid1D
    g: np.ndarray
    q: np.ndarray
    p: np.ndarray
    residual: float


def elliptic_quotient_solve(coeffs: EllipticCoefficients, q0: float,
                            p0: float) -> EllipticSolution:
    """Integrate q' = aq + bp, p' = cq + dp by RK4 and project g = p/q.

    The reported residual is the interior sup-norm defect of the projected
    Riccati equation g' = c + dg - ga - gbg under central differences.
    """
    grid = coeffs.grid
    h = grid.spacing
    n = grid.n
    q = np.empty(n)
    p = np.empty(n)
    q[0], p[0] = q0, p0
    state = np.array([q0, p0], dtype=float)
    for i in range(n - 1):
        x = grid.nodes[i]

        def rhs(xx, y):
            a, b, c, d = coeffs.at(xx)
            return np.array([a * y[0] + b * y[1], c * y[0] + d * y[1]])

        k1 = rhs(x, state)
        k2 = rhs(x + 0.5 * h, state + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h, state + 0.5 * h * k2)
        k4 = rhs(x + h, state + h * k3)
        state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        q[i + 1], p[i + 1] = state
    crossings = np.nonzero(q[:-1] * q[1:] <= 0)[0]
    if crossings.size or np.min(np.abs(q)) < 1e-10:
        idx = int(crossings[0]) if crossings.size \
            else int(np.argmin(np.abs(q)))
        raise ChartBreakdown(f"q vanished near x = {grid.nodes[idx]}",
                             det_value=q[idx], location=grid.nodes[idx])
    g = p / q
    gp = (g[2:] - g[:-2]) / (2 * h)
    a, b, c, d = coeffs.a, coeffs.b, coeffs.c, coeffs.d
    inner = slice(1, -1)
    defect = gp - (c[inner] + d[inner] * g[inner] - g[inner] * a[inner]
                   - g[inner] * b[inner] * g[inner])
    residual = float(np.max(np.abs(defect)))
    return EllipticSolution(grid=grid, g=g, q=q, p=p, residual=residual)
