"""Grids, quadrature, dense solves, the DFT contract, determinants, RNG."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grassflow.core import (Grid1D, QuadratureRule, DenseSystem, RandomStream,
                            SpectralField, det_plain, det_reg, dft_forward,
                            dft_frequencies, dft_inverse, gaussian_increments,
                            solve_dense, weighted_kernel)
from grassflow.errors import ConfigError, SingularSystem


# ---------------------------------------------------------------------------
# grids and quadrature


def test_closed_grid_includes_both_endpoints():
    g = Grid1D(-1.0, 1.0, 5, kind="closed")
    assert g.spacing == pytest.approx(0.5)
    assert np.allclose(g.nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_periodic_grid_excludes_upper_endpoint():
    g = Grid1D(0.0, 1.0, 4, kind="periodic")
    assert g.spacing == pytest.approx(0.25)
    assert np.allclose(g.nodes, [0.0, 0.25, 0.5, 0.75])


@pytest.mark.parametrize("kwargs", [
    dict(lower=0.0, upper=1.0, n=1),
    dict(lower=1.0, upper=0.0, n=4),
    dict(lower=0.0, upper=1.0, n=4, kind="open"),
])
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ConfigError):
        Grid1D(**kwargs)


def test_riemann_left_integrates_constants_exactly():
    g = Grid1D(0.0, 2.0, 9, kind="closed")
    rule = QuadratureRule.riemann_left(g)
    assert rule.integrate(np.ones(9)) == pytest.approx(2.0)
    # the right endpoint carries zero weight so its value cannot matter
    vals = np.ones(9)
    vals[-1] = 1e6
    assert rule.integrate(vals) == pytest.approx(2.0)


def test_trapezoid_is_exact_for_linear_functions():
    g = Grid1D(0.0, 1.0, 17, kind="closed")
    rule = QuadratureRule.trapezoid(g)
    assert rule.integrate(g.nodes) == pytest.approx(0.5)


def test_trapezoid_second_order_on_smooth_integrand():
    errs = []
    for n in (33, 65):
        g = Grid1D(0.0, 1.0, n, kind="closed")
        rule = QuadratureRule.trapezoid(g)
        errs.append(abs(rule.integrate(np.exp(g.nodes)) - (np.e - 1.0)))
    assert errs[0] / errs[1] > 3.5


def test_unknown_quadrature_scheme_rejected():
    g = Grid1D(0.0, 1.0, 8, kind="closed")
    with pytest.raises(ConfigError):
        QuadratureRule.for_scheme(g, "simpson")


# ---------------------------------------------------------------------------
# dense solves


def test_solve_dense_matches_hand_inverse():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, 2.0])
    x = solve_dense(DenseSystem(a, b))
    assert np.allclose(a @ x, b, atol=1e-14)


def test_solve_dense_raises_on_singular_matrix():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularSystem):
        solve_dense(DenseSystem(a, np.array([1.0, 1.0])))


def test_dense_system_validates_shape_and_finiteness():
    with pytest.raises(ConfigError):
        DenseSystem(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ConfigError):
        DenseSystem(np.array([[1.0, np.nan], [0.0, 1.0]]), np.ones(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(0, 2 ** 31))
def test_solve_dense_residual_small(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + n * np.eye(n)
    b = rng.standard_normal(n)
    x = solve_dense(DenseSystem(a, b))
    assert np.max(np.abs(a @ x - b)) < 1e-10 * max(1.0, np.max(np.abs(b)))


# ---------------------------------------------------------------------------
# DFT contract


def test_dft_requires_periodic_power_of_two():
    with pytest.raises(ConfigError):
        dft_forward(np.zeros(8), Grid1D(0.0, 1.0, 8, kind="closed"))
    with pytest.raises(ConfigError):
        dft_forward(np.zeros(12), Grid1D(0.0, 1.0, 12, kind="periodic"))


def test_constant_maps_to_mode_zero_times_length():
    g = Grid1D(-3.0, 5.0, 16, kind="periodic")
    fld = dft_forward(np.full(16, 2.5), g)
    assert fld.modes[0] == pytest.approx(2.5 * g.length)
    assert np.max(np.abs(fld.modes[1:])) < 1e-12


def test_single_harmonic_lands_in_one_mode():
    g = Grid1D(0.0, 2.0, 32, kind="periodic")
    k1 = 1.0 / g.length
    # forward kernel is e^{+2 pi i k x}, so e^{-2 pi i k1 x} fills mode +k1
    fld = dft_forward(np.exp(-2j * np.pi * k1 * g.nodes), g)
    k = dft_frequencies(g)
    idx = int(np.argmin(np.abs(k - k1)))
    assert abs(fld.modes[idx] - g.length) < 1e-10
    mask = np.ones(32, dtype=bool)
    mask[idx] = False
    assert np.max(np.abs(fld.modes[mask])) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([8, 16, 64]))
def test_dft_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    g = Grid1D(-2.0, 2.0, n, kind="periodic")
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    back = dft_inverse(dft_forward(f, g))
    assert np.max(np.abs(back - f)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([8, 32]))
def test_parseval_identity(seed, n):
    rng = np.random.default_rng(seed)
    g = Grid1D(0.0, 3.0, n, kind="periodic")
    f = rng.standard_normal(n)
    fld = dft_forward(f, g)
    lhs = np.sum(np.abs(f) ** 2) * g.spacing
    rhs = np.sum(np.abs(fld.modes) ** 2) / g.length
    assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# determinants


def test_rank_one_determinants_match_hand_formula():
    rng = np.random.default_rng(7)
    u = rng.standard_normal(5)
    v = rng.standard_normal(5)
    a = np.outer(u, v)
    dot = float(v @ u)
    assert det_plain(a) == pytest.approx(1.0 + dot)
    assert det_reg(a) == pytest.approx((1.0 + dot) * np.exp(-dot))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(min_value=2, max_value=5))
def test_regularised_determinant_multiplicativity(seed, n):
    rng = np.random.default_rng(seed)
    a = 0.3 * rng.standard_normal((n, n))
    b = 0.3 * rng.standard_normal((n, n))
    # (I+A)(I+B) = I + (A + B + AB)
    lhs = det_reg(a + b + a @ b)
    rhs = det_reg(a) * det_reg(b) * np.exp(-np.trace(a @ b))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_weighted_kernel_scales_columns():
    k = np.ones((3, 3))
    w = np.array([1.0, 2.0, 3.0])
    assert np.allclose(weighted_kernel(k, w), np.tile(w, (3, 1)))


# ---------------------------------------------------------------------------
# random streams


def test_random_stream_reproducible_and_stream_separated():
    a = RandomStream(123, 0).standard_normal(10)
    b = RandomStream(123, 0).standard_normal(10)
    c = RandomStream(123, 1).standard_normal(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_gaussian_increments_variance():
    stream = RandomStream(5)
    z = gaussian_increments(stream, 200000, 0.25, complex_valued=True)
    assert np.var(z.real) == pytest.approx(0.25, rel=0.05)
    assert np.var(z.imag) == pytest.approx(0.25, rel=0.05)


def test_gaussian_increments_rejects_negative_variance():
    with pytest.raises(ConfigError):
        gaussian_increments(RandomStream(0), 4, -1.0)
