"""Grids, quadrature, dense solves, DFT contract, determinants and RNG streams.

Everything here is deterministic and pure given its inputs; RandomStream is
the one stateful object and is reproducible from (seed, stream_id) alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularSystem


# ---------------------------------------------------------------------------
# grids and quadrature


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid.

    ``closed`` grids include both endpoints (spacing (upper-lower)/(n-1));
    ``periodic`` grids include the lower endpoint only
    (spacing (upper-lower)/n).
    """

    lower: float
    upper: float
    n: int
    kind: str = "closed"  # "closed" | "periodic"

    def __post_init__(self):
        if self.kind not in ("closed", "periodic"):
            raise ConfigError(f"unknown grid kind {self.kind!r}")
        if self.n < 2:
            raise ConfigError("grid needs at least 2 nodes")
        if not self.upper > self.lower:
            raise ConfigError("grid needs lower < upper")

    @property
    def spacing(self) -> float:
        width = self.upper - self.lower
        return width / (self.n - 1) if self.kind == "closed" else width / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.lower + self.spacing * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integration over a closed interval."""

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str

    @staticmethod
    def riemann_left(grid: Grid1D) -> "QuadratureRule":
        # left-endpoint Riemann sum; the final node carries zero weight so a
        # solution value at the right endpoint can sit on the same grid.
        h = grid.spacing
        w = np.full(grid.n, h, dtype=float)
        if grid.kind == "closed":
            w[-1] = 0.0
        return QuadratureRule(grid.nodes, w, "riemann-left")

    @staticmethod
    def trapezoid(grid: Grid1D) -> "QuadratureRule":
        if grid.kind != "closed":
            raise ConfigError("trapezoid rule expects a closed grid")
        h = grid.spacing
        w = np.full(grid.n, h, dtype=float)
        w[0] = w[-1] = 0.5 * h
        return QuadratureRule(grid.nodes, w, "trapezoid")

    @staticmethod
    def for_scheme(grid: Grid1D, scheme: str) -> "QuadratureRule":
        if scheme == "riemann-left":
            return QuadratureRule.riemann_left(grid)
        if scheme == "trapezoid":
            return QuadratureRule.trapezoid(grid)
        raise ConfigError(f"unknown quadrature scheme {scheme!r}")

    def integrate(self, values: np.ndarray):
        return np.sum(self.weights * values, axis=-1)


# ---------------------------------------------------------------------------
# dense linear algebra

PIVOT_FLOOR = 1e-14


@dataclass
class DenseSystem:
    coefficients: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coefficients)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("coefficient matrix must be square")
        if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
            raise ConfigError("coefficient matrix has non-finite entries")


def solve_dense(system: DenseSystem) -> np.ndarray:
    """LU solve with a relative pivot floor of 1e-14 * ||A||_inf."""
    import scipy.linalg as sla

    a = np.asarray(system.coefficients)
    b = np.asarray(system.rhs)
    norm_a = np.max(np.sum(np.abs(a), axis=1))
    lu, piv = sla.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm_a == 0.0 or np.min(pivots) < PIVOT_FLOOR * norm_a:
        raise SingularSystem(
            f"pivot {np.min(pivots):.3e} below floor {PIVOT_FLOOR * norm_a:.3e}"
        )
    return sla.lu_solve((lu, piv), b, check_finite=False)


# ---------------------------------------------------------------------------
# discrete Fourier transform contract
#
# Forward convention  f~(k) = integral f(x) e^{+2 pi i k x} dx, frequencies
# k = j/L for j in {0,..,n/2-1, -n/2,..,-1}; the inverse carries e^{-2 pi i k x}
# and a 1/L factor.  A constant c on [lo, lo+L) therefore maps to c*L in mode
# zero, and Parseval reads  sum |f|^2 h = sum |f~|^2 / L.


def _require_power_of_two(n: int):
    if n < 2 or (n & (n - 1)) != 0:
        raise ConfigError(f"mode count {n} is not a power of two")


def dft_frequencies(grid: Grid1D) -> np.ndarray:
    """Frequencies k (cycles per unit length) in FFT ordering."""
    return np.fft.fftfreq(grid.n, d=grid.spacing)


@dataclass
class SpectralField:
    """Fourier modes of a periodic field together with its grid.

    ``modes[j]`` is f~(k_j) under the package transform convention, FFT
    ordering.  Physical samples are recovered with :func:`dft_inverse`.
    """

    modes: np.ndarray
    grid: Grid1D
    t: float = 0.0

    @property
    def samples(self) -> np.ndarray:
        return dft_inverse(self)


def _grid_phase(grid: Grid1D) -> np.ndarray:
    # e^{2 pi i k x_j} factorises as e^{2 pi i k lo} * e^{2 pi i m j / n};
    # this is the per-mode offset factor for the grid origin.
    k = dft_frequencies(grid)
    return np.exp(2j * np.pi * k * grid.lower)


def dft_forward(samples: np.ndarray, grid: Grid1D) -> SpectralField:
    if grid.kind != "periodic":
        raise ConfigError("dft_forward needs a periodic grid")
    _require_power_of_two(grid.n)
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[-1] != grid.n:
        raise ConfigError("sample count does not match grid")
    # numpy ifft carries e^{+2 pi i jm/n} and a 1/n factor
    modes = grid.n * np.fft.ifft(samples) * grid.spacing * _grid_phase(grid)
    return SpectralField(modes=modes, grid=grid)


def dft_inverse(field: SpectralField) -> np.ndarray:
    grid = field.grid
    modes = np.asarray(field.modes, dtype=complex)
    return np.fft.fft(modes * np.conj(_grid_phase(grid))) / grid.length


# ---------------------------------------------------------------------------
# determinants


def det_plain(qhat_weighted: np.ndarray) -> complex:
    """det(I + A) of the weight-scaled kernel matrix A."""
    a = np.asarray(qhat_weighted)
    return complex(np.linalg.det(np.eye(a.shape[0]) + a))


def det_reg(qhat_weighted: np.ndarray) -> complex:
    """Regularised determinant det2(I + A) = det(I + A) * exp(-tr A)."""
    a = np.asarray(qhat_weighted)
    return det_plain(a) * complex(np.exp(-np.trace(a)))


def weighted_kernel(entries: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Scale kernel columns by quadrature weights: A[i,j] = k(y_i,z_j) w_j."""
    return np.asarray(entries) * np.asarray(weights)[None, :]


# ---------------------------------------------------------------------------
# random streams


class RandomStream:
    """Deterministic normal-variate stream keyed by (seed, stream_id).

    Identical keys give identical sequences regardless of thread schedule;
    each logical stream must be owned by a single consumer.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._rng = np.random.Generator(np.random.Philox(ss))

    def standard_normal(self, size) -> np.ndarray:
        return self._rng.standard_normal(size)


def gaussian_increments(stream: RandomStream, count: int, variance: float,
                        complex_valued: bool = True) -> np.ndarray:
    """i.i.d. Gaussians with the stated per-component variance."""
    if variance < 0:
        raise ConfigError("variance must be non-negative")
    sd = np.sqrt(variance)
    if complex_valued:
        z = stream.standard_normal((2, count))
        return sd * (z[0] + 1j * z[1])
    return sd * stream.standard_normal(count)
