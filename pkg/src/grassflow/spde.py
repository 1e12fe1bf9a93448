"""Stochastic heat flow with a nonlocal quadratic nonlinearity on [0, 2pi]^2.

Two schemes share one realised noise path: a direct exponential-integrator
time stepper, and an exact-propagation scheme that evolves the base kernel
in closed form (an exponential martingale per mode), accumulates the
auxiliary kernel by quadrature, and finishes with one dense mode-space
solve.  All nonlinear products are composition products of operator
kernels evaluated in mode space.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import RandomStream, gaussian_increments
from .errors import ConfigError, IntegrationBlowup, SingularSystem

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpdeParams:
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 10.0
    epsilon: float = 1000.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")


def mode_numbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT ordering for the 2 pi period."""
    if n < 2 or (n & (n - 1)) != 0:
        raise ConfigError(f"mode count {n} is not a power of two")
    return np.fft.fftfreq(n, d=1.0 / n)


@dataclass
class Field2D:
    """Mode matrix f(k, kappa) of a biperiodic kernel on [0, 2pi]^2.

    ``modes[j, l]`` multiplies e^{i k_j x} e^{i kappa_l y}; physical samples
    live on the n x n tensor grid of left-endpoint nodes.
    """

    modes: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.modes.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return np.fft.ifft2(self.modes) * self.modes.size

    @staticmethod
    def from_samples(samples: np.ndarray, t: float = 0.0) -> "Field2D":
        samples = np.asarray(samples, dtype=complex)
        return Field2D(modes=np.fft.fft2(samples) / samples.size, t=t)


def composition_product(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Mode matrix of (f o g)(x, y) = int f(x, z) g(z, y) dz.

    Integrating e^{i m z} e^{i m' z} over the period picks out m' = -m with
    a 2 pi factor, so the product is 2 pi * F @ G with G's rows negated in
    index.
    """
    n = f.shape[0]
    neg = (-np.arange(n)) % n
    return TWO_PI * f @ g[neg, :]


def composition_identity(n: int) -> np.ndarray:
    """Mode matrix of the Dirac kernel delta(x - y)."""
    neg = (-np.arange(n)) % n
    ident = np.zeros((n, n), dtype=complex)
    ident[np.arange(n), neg] = 1.0 / TWO_PI
    return ident


# ---------------------------------------------------------------------------
# noise path


@dataclass
class BrownianSheetModes:
    """Per-mode Brownian increments, drawn once and shared by both schemes.

    ``increments[m, j]`` is the increment of mode k_j over the m-th of
    ``resolution`` equal slices of [0, t_final]; each is a real Gaussian of
    variance dt (the real compensator -(t/2) c^2 of the exact exponential
    martingale matches the direct scheme's per-step geometric update only
    for real per-mode noise).  Coarser schemes aggregate contiguous slices
    so every consumer sees the same underlying path.
    """

    seed: int
    n_modes: int
    t_final: float
    resolution: int
    increments: np.ndarray = field(repr=False, default=None)

    @staticmethod
    def generate(seed: int, n_modes: int, t_final: float,
                 resolution: int) -> "BrownianSheetModes":
        if resolution < 1:
            raise ConfigError("resolution must be >= 1")
        dt = t_final / resolution
        stream = RandomStream(seed, stream_id=1)
        flat = gaussian_increments(stream, resolution * n_modes, dt,
                                   complex_valued=False)
        return BrownianSheetModes(seed=seed, n_modes=n_modes,
                                  t_final=t_final, resolution=resolution,
                                  increments=flat.reshape(resolution, n_modes))

    def aggregated(self, steps: int) -> np.ndarray:
        """Increments over ``steps`` equal intervals (resolution multiple)."""
        if self.resolution % steps != 0:
            raise ConfigError("steps must divide the sheet resolution")
        g = self.resolution // steps
        return self.increments.reshape(steps, g, self.n_modes).sum(axis=1)

    def cumulative(self) -> np.ndarray:
        """W at the resolution+1 slice boundaries (row 0 is zero)."""
        out = np.zeros((self.resolution + 1, self.n_modes), dtype=complex)
        out[1:] = np.cumsum(self.increments, axis=0)
        return out

    def at_time(self, s: float) -> np.ndarray:
        pos = s / self.t_final * self.resolution
        idx = int(round(pos))
        if abs(pos - idx) > 1e-9:
            raise ConfigError("requested time is not a slice boundary")
        return self.cumulative()[idx]


# ---------------------------------------------------------------------------
# shared multipliers


def k0_mode_policy(params: SpdeParams, k: np.ndarray):
    """Noise couplings per mode; the K^{-1} and K^{-2} terms vanish at k = 0.

    Returns (noise_coef, ito_coef): gamma sqrt(pi) / k and pi gamma^2 / 2k^2
    with both set to zero at the k = 0 mode, identically in both schemes.
    """
    k = np.asarray(k, dtype=float)
    noise = np.zeros_like(k)
    ito = np.zeros_like(k)
    nz = k != 0
    noise[nz] = params.gamma * np.sqrt(np.pi) / k[nz]
    ito[nz] = 0.5 * np.pi * params.gamma ** 2 / k[nz] ** 2
    return noise, ito


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z with the removable singularity filled by series."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    out[small] = 1.0 + 0.5 * z[small]
    out[~small] = np.expm1(z[~small]) / z[~small]
    return out


# ---------------------------------------------------------------------------
# schemes


def spde_direct_run(g0: Field2D, params: SpdeParams,
                    sheet: BrownianSheetModes, steps: int,
                    checkpoints=None):
    """Exponential-integrator time stepping in mode space.

    u <- exp(-dt L)(u + noise_coef dW u) - eps dt phi1(-dt L) (u o u),
    with L = alpha k^2 + beta kappa^2 acting diagonally and the noise
    coupling applied row-wise (it multiplies along the first argument).
    """
    n = g0.n
    k = mode_numbers(n)
    dt = sheet.t_final / steps
    lam = -dt * (params.alpha * k[:, None] ** 2 + params.beta * k[None, :] ** 2)
    lin = np.exp(lam)
    phi = _phi1(lam)
    noise_coef, _ = k0_mode_policy(params, k)
    dws = sheet.aggregated(steps)
    u = g0.modes.copy()
    wanted = set(checkpoints) if checkpoints is not None else None
    out = {0: Field2D(u.copy(), t=0.0)} if wanted and 0 in wanted else {}
    for m in range(steps):
        stoch = u + (noise_coef * dws[m])[:, None] * u
        u = lin * stoch - params.epsilon * dt * phi * composition_product(u, u)
        if not np.all(np.isfinite(u.real) & np.isfinite(u.imag)):
            raise IntegrationBlowup(f"direct scheme blew up at step {m + 1}")
        if wanted is not None and (m + 1) in wanted:
            out[m + 1] = Field2D(u.copy(), t=(m + 1) * dt)
    if wanted is not None:
        return out
    return Field2D(modes=u, t=sheet.t_final)


def exact_base_modes(g0: Field2D, params: SpdeParams,
                     sheet: BrownianSheetModes, s: float) -> np.ndarray:
    """Closed-form base kernel p(s): per-row exponential martingale.

    p_hat(k, :; s) = exp(-s alpha k^2 + noise_coef W_s(k)
                         - s ito_coef(k)) g0_hat(k, :).
    """
    k = mode_numbers(g0.n)
    noise_coef, ito_coef = k0_mode_policy(params, k)
    w = sheet.at_time(s)
    expo = -s * params.alpha * k ** 2 + noise_coef * w - s * ito_coef
    return np.exp(expo)[:, None] * g0.modes


@dataclass
class PoppeResult:
    """Projected field plus the diagnostics of the final dense solve."""

    g: Field2D
    p: Field2D
    det_track: np.ndarray
    solve_residual: float


def spde_poppe_run(g0: Field2D, params: SpdeParams,
                   sheet: BrownianSheetModes, panels: int = 256) -> PoppeResult:
    """Exact propagation of p, trapezoid accumulation of qhat, dense solve.

    qhat(T) = eps int_0^T e^{beta k^2 (T - s)} p(s) ds over ``panels``
    trapezoid panels, then g solves p = g o (delta + qhat); the absolute
    determinant of the system matrix is tracked panel by panel.
    """
    n = g0.n
    k = mode_numbers(n)
    tf = sheet.t_final
    times = np.linspace(0.0, tf, panels + 1)
    weights = np.full(panels + 1, tf / panels)
    weights[0] = weights[-1] = 0.5 * tf / panels
    qhat = np.zeros((n, n), dtype=complex)
    dets = np.empty(panels + 1)
    p_final = None
    neg = (-np.arange(n)) % n
    for j, s in enumerate(times):
        p_s = exact_base_modes(g0, params, sheet, s)
        decay = np.exp(params.beta * k ** 2 * (tf - s))
        qhat += weights[j] * params.epsilon * decay[:, None] * p_s
        dets[j] = abs(np.linalg.det(np.eye(n) + TWO_PI * qhat[neg, :]))
        if j == panels:
            p_final = p_s
    # p = g o (delta + qhat)  =>  P = G (I + 2 pi J Qhat) in mode matrices
    system = np.eye(n, dtype=complex) + TWO_PI * qhat[neg, :]
    try:
        g = np.linalg.solve(system.T, p_final.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I + qhat solve failed: {exc}") from exc
    residual = float(np.max(np.abs(g @ system - p_final)))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(p_final)))):
        raise SingularSystem(f"I + qhat solve residual {residual:.3e}")
    return PoppeResult(g=Field2D(modes=g, t=tf), p=Field2D(modes=p_final, t=tf),
                       det_track=dets, solve_residual=residual)


# ---------------------------------------------------------------------------
# initial data


def sech_ridge_initial(n: int, noise_factor: float, seed: int) -> Field2D:
    """sech(10(x + y - 2pi)) sech(10(y - pi)) plus per-mode Gaussian noise."""
    x = TWO_PI * np.arange(n) / n
    xx, yy = np.meshgrid(x, x, indexing="ij")
    samples = 1.0 / np.cosh(10.0 * (xx + yy - TWO_PI)) \
        / np.cosh(10.0 * (yy - np.pi))
    fld = Field2D.from_samples(samples)
    if noise_factor:
        stream = RandomStream(seed, stream_id=2)
        noise = gaussian_increments(stream, n * n, 1.0, complex_valued=True)
        fld.modes = fld.modes + noise_factor * noise.reshape(n, n)
    return fld
