"""KdV / NLS pipelines and their split-step oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grassflow.core import Grid1D, dft_forward
from grassflow.errors import ConfigError, SymbolError
from grassflow.integrable import (DispersionSymbol, additive_trace,
                                  cubic_kdv_symbol, half_line_grid,
                                  kdv_fredholm_solve, kdv_pde_residual,
                                  nls_assemble_qhat, nls_fredholm_solve,
                                  nls_pde_residual, propagate_dispersive,
                                  schrodinger_symbol, split_step_kdv,
                                  split_step_nls)


def periodic_grid(lo, hi, n):
    return Grid1D(lo, hi, n, kind="periodic")


# ---------------------------------------------------------------------------
# propagation


def test_symbols_are_skew():
    for sym in (cubic_kdv_symbol(), schrodinger_symbol()):
        vals = sym(np.linspace(-4, 4, 33))
        assert np.max(np.abs(vals.real)) < 1e-12 * max(1, np.max(np.abs(vals)))


def test_propagation_rejects_growing_symbol():
    g = periodic_grid(-1, 1, 16)
    fld = dft_forward(np.ones(16), g)
    heat = DispersionSymbol("heat", lambda k: -(2 * np.pi * k) ** 2 + 0j)
    with pytest.raises(SymbolError):
        propagate_dispersive(fld, heat, 0.1)


def test_single_harmonic_propagates_by_phase():
    # the harmonic e^{+2 pi i k x} picks up the phase exp(t (2 pi i k)^3)
    g = periodic_grid(0.0, 2.0, 32)
    k1 = 1.0 / g.length
    f = np.exp(2j * np.pi * k1 * g.nodes)
    fld = dft_forward(f, g)
    out = propagate_dispersive(fld, cubic_kdv_symbol(), 0.3)
    expected = f * np.exp(0.3 * (2j * np.pi * k1) ** 3)
    assert np.max(np.abs(out.samples - expected)) < 1e-12


def test_additive_trace_is_periodic_extension():
    g = periodic_grid(-2.0, 2.0, 16)
    samples = np.sin(np.pi * g.nodes)
    trace = additive_trace(dft_forward(samples, g))
    # one period to the left reproduces the same values
    assert np.max(np.abs(trace(g.nodes - g.length) - samples)) < 1e-12
    # beyond the doubled window the trace is zero
    assert trace(np.array([g.lower - g.length - 0.5]))[0] == 0.0


def test_half_line_grid_ends_at_zero():
    g = periodic_grid(-5.0, 5.0, 64)
    z = half_line_grid(g)
    assert z.lower == -5.0 and z.upper == 0.0 and z.n == 33
    assert z.spacing == pytest.approx(g.spacing)


# ---------------------------------------------------------------------------
# Fredholm pipelines


def test_kdv_zero_data_gives_zero_field():
    g = periodic_grid(-5.0, 5.0, 32)
    res = kdv_fredholm_solve(np.zeros(32), g, 1.0)
    assert np.max(np.abs(res.values)) == 0.0
    assert np.allclose(res.det_track, 1.0)


def test_kdv_small_amplitude_linear_limit():
    # for data of size eps the projected field equals the trace to O(eps^2)
    g = periodic_grid(-5.0, 5.0, 64)
    eps = 1e-6
    p0 = eps * np.exp(-g.nodes ** 2)
    res = kdv_fredholm_solve(p0, g, 0.0)
    assert np.max(np.abs(np.real(res.values) - p0)) < 10 * eps ** 2


def test_kdv_matches_split_step_on_coarse_run():
    g = periodic_grid(-5.0, 5.0, 64)
    p0 = -0.5 * np.cosh(g.nodes / 20.0)
    u0 = np.real(kdv_fredholm_solve(p0, g, 0.0).values)
    t = 0.5
    direct = split_step_kdv(u0, g, 1e-4, 5000)
    proj = np.real(kdv_fredholm_solve(p0, g, t).values)
    assert np.max(np.abs(proj - direct)) < 1e-2


def test_kdv_threads_do_not_change_output():
    g = periodic_grid(-5.0, 5.0, 32)
    p0 = -0.5 * np.cosh(g.nodes / 20.0)
    serial = kdv_fredholm_solve(p0, g, 0.3)
    parallel = kdv_fredholm_solve(p0, g, 0.3, threads=4)
    assert np.array_equal(serial.values, parallel.values)
    assert np.array_equal(serial.det_track, parallel.det_track)


def test_kdv_pde_residual_shrinks_with_stencil():
    g = periodic_grid(-5.0, 5.0, 64)
    p0 = -0.05 * np.cosh(g.nodes / 20.0)
    coarse = kdv_pde_residual(p0, g, 0.2, 2e-3)
    fine = kdv_pde_residual(p0, g, 0.2, 1e-3)
    assert fine <= coarse


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_nls_kernel_is_hermitian_psd(seed):
    rng = np.random.default_rng(seed)
    g = periodic_grid(-4.0, 4.0, 32)
    p0 = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    trace = additive_trace(dft_forward(p0, g))
    z = half_line_grid(g)
    qm = nls_assemble_qhat(trace, z, 0.5)
    assert np.max(np.abs(qm - np.conj(qm).T)) < 1e-10
    eig = np.linalg.eigvalsh(qm)
    assert eig.min() > -1e-10


def test_nls_determinant_at_least_one():
    g = periodic_grid(-20.0, 20.0, 64)
    p0 = 0.5 * np.cosh(g.nodes / 40.0)
    for t in (0.0, 1.0):
        res = nls_fredholm_solve(p0, g, t)
        assert np.min(np.abs(res.det_track)) >= 1.0 - 1e-6


def test_nls_matches_split_step_on_coarse_run():
    g = periodic_grid(-20.0, 20.0, 64)
    p0 = 0.5 * np.cosh(g.nodes / 40.0)
    u0 = nls_fredholm_solve(p0, g, 0.0).values
    t = 1.0
    direct = split_step_nls(u0, g, 0.01, 100)
    proj = nls_fredholm_solve(p0, g, t).values
    assert np.max(np.abs(proj - direct)) < 5e-3


def test_nls_pde_residual_moderate():
    g = periodic_grid(-20.0, 20.0, 64)
    p0 = 0.05 * np.cosh(g.nodes / 40.0)
    assert nls_pde_residual(p0, g, 0.5, 1e-3) < 1e-2


# ---------------------------------------------------------------------------
# split-step oracles


def test_split_step_kdv_linear_limit_matches_exact_propagation():
    # tiny amplitude: the nonlinear update is O(eps^2), so the scheme
    # reduces to exact dispersive propagation
    g = periodic_grid(-5.0, 5.0, 64)
    eps = 1e-8
    u0 = eps * np.sin(2 * np.pi * g.nodes / g.length)
    out = split_step_kdv(u0, g, 1e-3, 100)
    fld = propagate_dispersive(dft_forward(u0, g), cubic_kdv_symbol(), 0.1)
    assert np.max(np.abs(out - np.real(fld.samples))) < 1e-3 * eps


def test_split_step_nls_conserves_mass_approximately():
    g = periodic_grid(-10.0, 10.0, 128)
    u0 = 0.5 / np.cosh(g.nodes)
    out = split_step_nls(u0, g, 1e-3, 1000)
    m0 = np.sum(np.abs(u0) ** 2) * g.spacing
    m1 = np.sum(np.abs(out) ** 2) * g.spacing
    assert m1 == pytest.approx(m0, rel=1e-2)


def test_split_step_checkpoints_and_dt_validation():
    g = periodic_grid(-5.0, 5.0, 32)
    u0 = np.sin(2 * np.pi * g.nodes / g.length)
    out = split_step_kdv(u0, g, 1e-3, 10, checkpoints=[0, 5, 10])
    assert set(out) == {0, 5, 10}
    assert np.allclose(out[0], u0)
    with pytest.raises(ConfigError):
        split_step_kdv(u0, g, -1e-3, 10)
