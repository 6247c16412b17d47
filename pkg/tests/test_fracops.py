import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksqueue.errors import ParameterError
from ksqueue.fracops import (
    MeshSpec,
    SampledFunction,
    caputo_l1,
    caputo_l1_all,
    graded_mesh,
    relaxation_residual,
    stretched_apply,
)
from ksqueue.specfun import KSParams


def test_sampled_function_validation():
    with pytest.raises(ParameterError):
        SampledFunction([0.0, 1.0], [1.0])
    with pytest.raises(ParameterError):
        SampledFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ParameterError):
        SampledFunction([-1.0, 1.0], [1.0, 2.0])


@given(st.floats(0.05, 0.95), st.integers(4, 60))
def test_l1_exact_on_linear_functions(alpha, n):
    # Caputo derivative of t is t^(1-alpha) / Gamma(2-alpha); L1 is exact for piecewise-linear data
    grid = np.linspace(0, 3, n + 1)
    f = SampledFunction(grid, 2.0 * grid + 1.0)
    got = caputo_l1(f, alpha, n)
    assert got == pytest.approx(2.0 * 3.0 ** (1 - alpha) / math.gamma(2 - alpha), rel=1e-10)


def test_l1_converges_on_quadratic():
    alpha, T = 0.6, 1.0
    exact = 2 * T ** (2 - alpha) / math.gamma(3 - alpha)
    errs = []
    for n in (64, 128, 256, 512):
        grid = np.linspace(0, T, n + 1)
        errs.append(abs(caputo_l1(SampledFunction(grid, grid**2), alpha, n) - exact))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    # L1 is O(h^(2 - alpha)) for smooth data
    assert np.all(rates > 2 - alpha - 0.1)


def test_caputo_of_constant_is_zero():
    grid = np.linspace(0, 2, 50)
    out = caputo_l1_all(SampledFunction(grid, np.full(50, 3.0)), 0.4)
    assert np.isnan(out[0])
    assert np.allclose(out[1:], 0.0)


def test_caputo_all_matches_pointwise():
    grid = np.linspace(0, 2, 30) ** 1.5
    f = SampledFunction(grid, np.sin(grid))
    out = caputo_l1_all(f, 0.3)
    for i in (1, 7, 29):
        assert out[i] == pytest.approx(caputo_l1(f, 0.3, i), rel=1e-13)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
def test_caputo_order_range(alpha):
    f = SampledFunction([0.0, 1.0, 2.0], [0.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        caputo_l1(f, alpha, 2)


def test_stretched_operator():
    grid = np.linspace(0, 2, 21)
    f = SampledFunction(grid, grid)
    p = KSParams(0.6, 0.2)
    i = 20
    expect = 2.0 ** (-0.2) * 2.0**0.4 / math.gamma(1.4)
    assert stretched_apply(f, p, i) == pytest.approx(expect, rel=1e-12)
    # alpha = 1: backward difference
    g = SampledFunction(grid, grid**2)
    assert stretched_apply(g, KSParams(1.0, 0.0), 5) == pytest.approx((grid[5] ** 2 - grid[4] ** 2) / 0.1)


def test_stretched_operator_index_checks():
    f = SampledFunction([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ParameterError):
        stretched_apply(f, KSParams(0.5, 0.1), 0)


def test_graded_mesh():
    p = KSParams(0.6, 0.2)
    g = graded_mesh(p, MeshSpec(0.1, 10.0, 16))
    assert g[0] == 0.0 and g[-1] == pytest.approx(10.0)
    assert np.all(np.diff(g) > 0)
    # default grading exponent 2/beta = 2.5
    assert g[1] == pytest.approx(10.0 * (1 / 16) ** 2.5)


def test_mesh_validation():
    with pytest.raises(ParameterError):
        MeshSpec(0.0, 1.0, 16)
    with pytest.raises(ParameterError):
        MeshSpec(0.1, 1.0, 4)
    with pytest.raises(ParameterError):
        MeshSpec(0.1, 1.0, 16, grading_exponent=0.5)


@pytest.mark.parametrize("params", [KSParams(0.8, 0.2), KSParams(1.0, 0.0)])
def test_relaxation_residual_decreases(params):
    r = [relaxation_residual(params, 0.2, MeshSpec(0.1, 10.0, n)).max_residual for n in (256, 512)]
    assert r[1] < r[0] / 1.5
    res = relaxation_residual(params, 0.2, MeshSpec(0.1, 10.0, 256))
    assert res.residual_curve.grid[0] >= 0.1


def test_relaxation_residual_zero_rate():
    # theta = 0: the eigenfunction is constant, residual vanishes
    res = relaxation_residual(KSParams(0.6, 0.2), 0.0, MeshSpec(0.1, 5.0, 64))
    assert res.max_residual == 0.0
