import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsvylab.field import (GridSpec, SampledField, dilate, make_catalog_function, multi_indices,
                           sample)


# ---------------------------------------------------------------- GridSpec


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_cell_volumes_sum_to_box(dim):
    g = GridSpec(dim, 1.5, 16)
    assert g.cell_volume == pytest.approx((3.0 / 16) ** dim)
    assert g.cell_volume * g.size == pytest.approx(3.0**dim)


@pytest.mark.parametrize("args", [(4, 1.0, 16), (1, 1.0, 4), (1, 0.0, 16), (2, -1.0, 16)])
def test_grid_rejects_invalid(args):
    with pytest.raises(ValueError):
        GridSpec(*args)


def test_sampled_field_checks_length_and_finiteness():
    g = GridSpec(1, 1.0, 8)
    with pytest.raises(ValueError):
        SampledField(g, np.zeros(7))
    with pytest.raises(ValueError):
        SampledField(g, np.r_[np.zeros(7), np.nan])


# ---------------------------------------------------------------- catalog


def test_polynomial_x_squared():
    # TRIVIAL: polynomial arithmetic
    f = make_catalog_function("polynomial", {"dim": 1, "coeffs": [0, 0, 1]})
    assert f(0.5) == pytest.approx(0.25, abs=1e-15)
    x = np.linspace(-3, 3, 11)
    assert np.all(f.derivative((2,), x) == 2.0)
    assert np.all(f.derivative((3,), x) == 0.0)


def test_polynomial_derivatives_vanish_above_degree():
    f = make_catalog_function("polynomial", {"dim": 2, "coeffs": {"1,1": 1.0, "2,0": -0.5}})
    x = np.random.default_rng(0).normal(size=(20, 2))
    for a in multi_indices(2, 3):
        assert np.all(f.derivative(a, x) == 0.0)


def test_mollified_indicator_plateau_and_support():
    # PAPER: 1_{B(0,1/2)} <= f <= 1_{B(0,3/2)}
    f = make_catalog_function("mollified_indicator", {"dim": 2})
    rng = np.random.default_rng(1)
    d = rng.normal(size=(200, 2))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    inner = d * rng.uniform(0, 0.5, (200, 1))
    outer = d * rng.uniform(1.5, 4.0, (200, 1))
    assert np.all(f(inner) == 1.0)
    assert np.all(f(outer) == 0.0)
    mid = d * rng.uniform(0.5, 1.5, (200, 1))
    v = f(mid)
    assert np.all((v >= 0) & (v <= 1))
    assert not f.exact_derivatives


def test_gaussian_derivative_against_finite_differences():
    # DERIVED: centred finite differences, step 1e-4
    f = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0})
    x = np.linspace(-2.5, 2.5, 41)
    x = x[np.abs(x) > 0.05]
    exact = -2 * x * np.exp(-x**2)
    assert np.allclose(f.derivative((1,), x), exact, rtol=1e-14, atol=0)
    t = 1e-4
    fd = (f(x + t) - f(x - t)) / (2 * t)
    assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6


SMOOTH = [
    ("gaussian_bump", {"dim": 1, "sigma": 0.7}),
    ("gaussian_bump", {"dim": 2, "sigma": 1.0, "monomial": [1, 0]}),
    ("windowed_sinusoid", {"dim": 1, "omega": 3.0, "window": 4.0}),
    ("windowed_sinusoid", {"dim": 2, "omega": [2.0, 1.0], "window": 4.0}),
    ("gaussian_bump", {"dim": 3, "sigma": 1.0}),
]


@pytest.mark.parametrize("cid,params", SMOOTH)
def test_derivatives_second_order_consistent(cid, params):
    """(d^a f(x+te_i) - d^a f(x-te_i))/2t -> d^{a+e_i} f(x) with O(t^2) error at 100 points."""
    f = make_catalog_function(cid, params)
    n = f.dim
    x = np.random.default_rng(2).uniform(-1.5, 1.5, (100, n))
    for order in range(f.max_derivative_order):
        for a in multi_indices(n, order):
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                b = tuple(ai + (j == i) for j, ai in enumerate(a))
                exact = f.derivative(b, x)
                errs = []
                for t in (2e-2, 1e-2):
                    fd = (f.derivative(a, x + t * e) - f.derivative(a, x - t * e)) / (2 * t)
                    errs.append(np.max(np.abs(fd - exact)))
                scale = 1.0 + np.max(np.abs(exact))
                # halving t cuts the error by ~4 unless it is already at roundoff
                assert errs[1] <= errs[0] / 3.0 or errs[1] < 1e-9 * scale


@pytest.mark.parametrize("cid,params", [
    ("windowed_sinusoid", {"dim": 2, "omega": 2.0, "window": 4.0}),
    ("gaussian_bump", {"dim": 1, "window": 6.0}),
    ("mollified_indicator", {"dim": 3}),
])
def test_compact_support_exact(cid, params):
    f = make_catalog_function(cid, params)
    R = f.support_radius
    assert math.isfinite(R)
    rng = np.random.default_rng(3)
    d = rng.normal(size=(300, f.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = d * rng.uniform(R * (1 + 1e-9), 3 * R, (300, 1))
    assert np.all(f(x) == 0.0)


@pytest.mark.parametrize("cid,params", [
    ("polynomial", {"coeffs": [1]}),
    ("gaussian_bump", {"sigma": -1.0}),
    ("gaussian_bump", {"dim": 2, "monomial": [1]}),
    ("windowed_sinusoid", {"window": 0.0}),
    ("bessel", {}),
    ("gaussian_bump", {"dim": 4}),
])
def test_catalog_errors(cid, params):
    if cid == "polynomial":
        params = {"dim": 2, "coeffs": [1.0, 2.0]}
    with pytest.raises(ValueError):
        make_catalog_function(cid, params)


@given(st.floats(0.2, 5.0), st.floats(-2.0, 2.0))
def test_dilation_chain_rule(a, x):
    f = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0})
    g = dilate(f, a)
    assert g(x) == pytest.approx(float(f(a * x)), abs=1e-15)
    assert g.derivative((2,), x) == pytest.approx(a**2 * float(f.derivative((2,), a * x)),
                                                  rel=1e-12, abs=1e-14)
    assert g.support_radius == math.inf


# ---------------------------------------------------------------- sampling


def test_sample_constant_and_centres():
    g = GridSpec(2, 3.0, 8)
    one = sample(lambda x: np.ones(x.shape[:-1]), g)
    assert np.all(one.values == 1.0)
    lin = sample(make_catalog_function("polynomial", {"dim": 1, "coeffs": [0, 1]}), GridSpec(1, 1.0, 8))
    assert lin.values.size == 8
    # the L=1, N=4 centres; N >= 8 is enforced, so read them off L=2, N=8
    with pytest.raises(ValueError):
        GridSpec(1, 1.0, 4)
    eight = sample(lambda x: x[..., 0], GridSpec(1, 2.0, 8))
    assert np.array_equal(eight.values[2:6], [-0.75, -0.25, 0.25, 0.75])


def test_sample_dimension_mismatch():
    f = make_catalog_function("gaussian_bump", {"dim": 2})
    with pytest.raises(ValueError):
        sample(f, GridSpec(1, 1.0, 8))


def test_gaussian_integral_closed_form():
    # DERIVED: int exp(-x^2/s^2) = sqrt(pi) s
    for sigma in (0.5, 1.0, 2.0):
        f = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": sigma})
        s = sample(f, GridSpec(1, 12.0 * sigma, 2**10))
        assert abs(s.integral() - math.sqrt(math.pi) * sigma) < 1e-3 * math.sqrt(math.pi) * sigma


def test_gaussian_integral_dim2_and_monomial():
    f = make_catalog_function("gaussian_bump", {"dim": 2, "monomial": [2, 0]})
    s = sample(f, GridSpec(2, 8.0, 256))
    # int x^2 e^{-x^2} dx * int e^{-y^2} dy = (sqrt(pi)/2) sqrt(pi)
    assert s.integral() == pytest.approx(math.pi / 2, rel=1e-3)


def test_mollified_indicator_one_dimensional_profile():
    # DERIVED: 1_{[-1,1]} * eta_2 is monotone on [1/2, 3/2] and equals 1/2 at |x| = 1 by symmetry
    f = make_catalog_function("mollified_indicator", {"dim": 1})
    x = np.linspace(0.0, 2.0, 4001)
    v = f(x)
    assert f(1.0) == pytest.approx(0.5, abs=1e-9)
    assert np.all(np.diff(v) <= 1e-15)
    fd = np.gradient(v, x)
    assert np.max(np.abs(fd - f.derivative((1,), x))) < 1e-3
