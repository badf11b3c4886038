import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bsvylab.calculus import (DEFAULT_WEIGHTING, SeminormQuadrature, SplineKernel, binomial_row,
                              directional_derivative, directional_symbol, forward_difference,
                              gradient_magnitude, limit_symbol_oracle, sphere_rule,
                              spline_identity_residual, strong_seminorm, symmetric_difference)
from bsvylab.field import make_catalog_function


def poly1(*coeffs):
    return make_catalog_function("polynomial", {"dim": 1, "coeffs": list(coeffs)})


def poly2(coeffs):
    return make_catalog_function("polynomial", {"dim": 2, "coeffs": coeffs})


SMOOTH = [
    make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 0.8}),
    make_catalog_function("gaussian_bump", {"dim": 2, "monomial": [1, 0]}),
    make_catalog_function("windowed_sinusoid", {"dim": 1, "omega": 2.0, "window": 4.0}),
    make_catalog_function("windowed_sinusoid", {"dim": 2, "omega": [1.0, 2.0], "window": 4.0}),
]


# ---------------------------------------------------------------- differences


def test_binomial_row_exact_and_guard():
    assert binomial_row(3) == [-1, 3, -3, 1]
    assert sum(binomial_row(62)) == 0
    assert isinstance(binomial_row(62)[31], int)
    with pytest.raises(ValueError):
        binomial_row(63)
    with pytest.raises(ValueError):
        forward_difference(poly1(0, 1), 0.0, 0.1, 63)


def test_forward_difference_examples():
    # TRIVIAL: first difference of the identity, second difference of x^2
    assert float(forward_difference(poly1(0, 1), 1.7, 0.3, 1)) == pytest.approx(0.3, abs=1e-15)
    for x, h in [(0.0, 0.5), (2.0, -0.25), (-3.0, 1.5)]:
        assert float(forward_difference(poly1(0, 0, 1), x, h, 2)) == pytest.approx(2 * h * h, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_forward_difference_annihilates_low_degree(k, rng):
    f = poly1(*rng.normal(size=k))  # degree k-1
    x, h = rng.uniform(-2, 2, 50), rng.uniform(-1, 1, 50)
    scale = max(1.0, float(np.max(np.abs(f(x)))))
    assert np.max(np.abs(forward_difference(f, x, h, k))) < 1e-12 * scale * 2**k


def test_symmetric_difference_examples(rng):
    f = SMOOTH[1]
    x = rng.normal(size=(20, 2))
    y = rng.normal(size=(20, 2))
    assert np.all(symmetric_difference(f, x, x, 3) == 0.0)
    assert np.allclose(symmetric_difference(f, x, y, 1), f(y) - f(x), rtol=0, atol=1e-15)


def test_symmetric_matches_forward_on_random_draws(rng):
    # DERIVED: Delta^k_{x,y} f = Delta^k_{(y-x)/k} f(x), checked from the two definitions
    for _ in range(100):
        f = SMOOTH[rng.integers(len(SMOOTH))]
        k = int(rng.integers(1, 5))
        x, y = rng.uniform(-2, 2, f.dim), rng.uniform(-2, 2, f.dim)
        a = float(symmetric_difference(f, x, y, k))
        b = float(forward_difference(f, x, (y - x) / k, k))
        assert abs(a - b) < 1e-12


def test_cocycle(rng):
    for _ in range(100):
        f = SMOOTH[rng.integers(len(SMOOTH))]
        k = int(rng.integers(2, 5))
        x, h = rng.uniform(-2, 2, f.dim), rng.uniform(-1, 1, f.dim)
        lower = lambda z: forward_difference(f, z, h, k - 1)
        stepped = float(lower(x + h) - lower(x))
        full = float(forward_difference(f, x, h, k))
        scale = 2**k * max(1.0, f.sup())
        assert abs(full - stepped) < 1e-12 * scale


def test_translation_covariance_and_linearity(rng):
    f, g = SMOOTH[0], SMOOTH[2]
    a = 0.625
    shifted = poly1(a, 1)  # x -> x + a
    x, h = rng.uniform(-2, 2, 30), rng.uniform(-1, 1, 30)
    fa = make_catalog_function("polynomial", {"dim": 1, "coeffs": [0, 0, 1]})
    # Delta^k_h (f o shift)(x) = Delta^k_h f(x + a), exact for a polynomial in shifted coordinates
    lhs = forward_difference(fa, shifted(x), h, 3)
    rhs = forward_difference(fa, x + a, h, 3)
    assert np.array_equal(lhs, rhs)
    lin = forward_difference(f, x, h, 2) * 2.5 - 0.5 * forward_difference(g, x, h, 2)
    direct = sum(c * (2.5 * f(x + j * h) - 0.5 * g(x + j * h)) for j, c in enumerate(binomial_row(2)))
    assert np.allclose(lin, direct, rtol=0, atol=1e-14)


# ---------------------------------------------------------------- gradients and symbols


def test_gradient_magnitude_examples(rng):
    x = rng.normal(size=(25, 2))
    assert np.allclose(gradient_magnitude(poly2({"1,0": 1.0}), x, 1), 1.0)
    assert np.allclose(gradient_magnitude(poly2({"1,1": 1.0}), x, 2), 1.0)
    half_sq = poly2({"2,0": 0.5, "0,2": 0.5})
    assert np.allclose(gradient_magnitude(half_sq, x, 1), np.linalg.norm(x, axis=1), rtol=1e-14)
    assert np.allclose(gradient_magnitude(SMOOTH[0], x[:, 0], 0), np.abs(SMOOTH[0](x[:, 0])))
    with pytest.raises(ValueError):
        gradient_magnitude(make_catalog_function("mollified_indicator", {"dim": 1}), 0.0, 5)


def test_symbol_examples():
    # DERIVED: expansion of the two sums for x1 x2
    f = poly2({"1,1": 1.0})
    e1 = np.array([1.0, 0.0])
    d = np.array([1.0, 1.0]) / math.sqrt(2)
    x = np.array([0.3, -0.2])
    assert float(directional_symbol(f, x, e1, 2, "plain")) == 0.0
    assert float(directional_symbol(f, x, e1, 2, "multinomial")) == 0.0
    assert float(directional_symbol(f, x, d, 2, "plain")) == pytest.approx(0.5, rel=1e-15)
    assert float(directional_symbol(f, x, d, 2, "multinomial")) == pytest.approx(1.0, rel=1e-15)


def test_symbol_k1_and_dim1_weightings_agree(rng):
    f2 = SMOOTH[1]
    x = rng.normal(size=(10, 2))
    xi = np.array([0.6, 0.8])
    grad = np.stack([f2.derivative((1, 0), x), f2.derivative((0, 1), x)], axis=-1)
    for w in ("plain", "multinomial"):
        assert np.allclose(directional_symbol(f2, x, xi, 1, w), grad @ xi, rtol=1e-14)
    f1 = SMOOTH[0]
    for k in (1, 2, 3):
        p = directional_symbol(f1, 0.4, [-1.0], k, "plain")
        m = directional_symbol(f1, 0.4, [-1.0], k, "multinomial")
        assert float(p) == float(m) == pytest.approx((-1) ** k * float(f1.derivative((k,), 0.4)))


def test_symbol_errors():
    f = SMOOTH[1]
    with pytest.raises(ValueError):
        directional_symbol(f, [0, 0], [1.0, 1.0], 2)
    with pytest.raises(ValueError):
        directional_symbol(f, [0, 0], [1.0, 0.0], 2, "weird")


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi), st.integers(1, 3))
def test_multinomial_symbol_is_derivative_along_line(x1, x2, th, k):
    # DERIVED: d^k/dt^k f(x + t xi) at t=0 by a 5-point stencil on the restriction
    f = SMOOTH[1]
    x = np.array([x1, x2])
    xi = np.array([math.cos(th), math.sin(th)])
    sym = float(directional_symbol(f, x, xi, k, "multinomial"))
    assert sym == pytest.approx(float(directional_derivative(f, x, xi, k)), rel=1e-12, abs=1e-12)
    t = 1e-2
    line = lambda s: float(f(x + s * xi))
    if k == 1:
        fd = (-line(2 * t) + 8 * line(t) - 8 * line(-t) + line(-2 * t)) / (12 * t)
    elif k == 2:
        fd = (-line(2 * t) + 16 * line(t) - 30 * line(0) + 16 * line(-t) - line(-2 * t)) / (12 * t * t)
    else:
        fd = (line(2 * t) - 2 * line(t) + 2 * line(-t) - line(-2 * t)) / (2 * t**3)
    assert sym == pytest.approx(fd, abs=2e-3)


# ---------------------------------------------------------------- oracle


def test_oracle_cubic():
    # DERIVED: ((1+2r)^3 - 2(1+r)^3 + 1)/r^2 = 6 + 6r
    res = limit_symbol_oracle(poly1(0, 0, 0, 1), 1.0, [1.0], 2)
    assert res.limit == pytest.approx(6.0, rel=1e-9)
    assert res.status == "converged"
    assert res.candidates["plain"] == res.candidates["multinomial"] == pytest.approx(6.0)
    r = res.r_sequence
    assert np.allclose(res.ratios, 6 + 6 * r, rtol=1e-9)


def test_oracle_low_degree_is_zero():
    res = limit_symbol_oracle(poly2({"1,0": 2.0, "0,1": -1.0, "0,0": 3.0}), [0.2, 0.1], [0.6, 0.8], 2)
    # roundoff floor: eps * |f| / r_min^2 is about 4e-9 here
    assert abs(res.limit) < 1e-7
    assert res.convergence_slope == math.inf
    assert res.candidates["plain"] == res.candidates["multinomial"] == 0.0


@pytest.mark.parametrize("f,x", [
    (poly2({"1,1": 1.0}), [0.3, -0.2]),
    (make_catalog_function("gaussian_bump", {"dim": 2, "monomial": [1, 0]}), [0.4, 0.7]),
    (make_catalog_function("gaussian_bump", {"dim": 2}), [0.5, -0.3]),
])
def test_oracle_selects_default_weighting(f, x):
    xi = np.array([1.0, 1.0]) / math.sqrt(2)
    res = limit_symbol_oracle(f, x, xi, 2)
    assert res.selected == DEFAULT_WEIGHTING == "multinomial"
    assert res.residual_slopes["multinomial"] >= 1.0
    assert res.residual_slopes["plain"] < 0.5
    # one Richardson step leaves an O(r_min^2) remainder
    assert res.limit == pytest.approx(res.candidates["multinomial"], rel=1e-5, abs=1e-9)


def test_oracle_errors():
    f = SMOOTH[0]
    with pytest.raises(ValueError):
        limit_symbol_oracle(f, 0.0, [1.0], 2, r_sequence=[0.1, 0.05, 0.025])
    with pytest.raises(ValueError):
        limit_symbol_oracle(f, 0.0, [1.0], 2, r_sequence=[0.1, 0.05, 0.03, 0.01, 0.005, 0.001])
    with pytest.raises(ValueError):
        limit_symbol_oracle(f, 0.0, [1.0], 2, r_sequence=0.1 * 2.0 ** np.arange(8))


# ---------------------------------------------------------------- spline identity


def test_spline_kernel_properties():
    m1 = SplineKernel(1)
    assert np.array_equal(m1(np.array([-0.1, 0.0, 0.5, 0.999, 1.0])), [0, 1, 1, 1, 0])
    for k in (1, 2, 3, 4, 5):
        m = SplineKernel(k)
        t, w = m.nodes(1000)
        assert float(np.sum(w * m(t))) == pytest.approx(1.0, abs=1e-12)
        grid = np.linspace(-1, k + 1, 2001)
        v = m(grid)
        assert np.all(v >= 0)
        assert np.all(v[(grid < 0) | (grid >= k)] == 0)
    with pytest.raises(ValueError):
        SplineKernel(0)


def test_spline_residual_examples():
    cubic = poly1(0, 0, 0, 1)
    for h in (0.1, -0.5, 1.0):
        assert spline_identity_residual(cubic, 0.7, h, 2) < 1e-8
    assert spline_identity_residual(poly1(1.0, -2.0), 0.3, 0.8, 2) < 1e-12
    for f in SMOOTH:
        x, h = np.full(f.dim, 0.2), np.full(f.dim, 0.9 / math.sqrt(f.dim))
        assert spline_identity_residual(f, x, h, 1) < 1e-8


def test_spline_residual_midpoint_rule():
    # the plain 10^3-node midpoint rule, for comparison with the default panel rule
    f = SMOOTH[0]
    assert spline_identity_residual(f, 0.1, 0.5, 2, rule="midpoint") < 1e-6


def test_spline_residual_across_catalog(rng):
    for f in SMOOTH:
        for k in range(1, 5):
            for _ in range(5):
                x = rng.uniform(-1.5, 1.5, f.dim)
                h = rng.normal(size=f.dim)
                h *= rng.uniform(0.05, 1.0) / np.linalg.norm(h)
                assert spline_identity_residual(f, x, h, k) < 1e-6


# ---------------------------------------------------------------- sphere and seminorm


@pytest.mark.parametrize("dim,mass", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
def test_sphere_rule_mass_and_moments(dim, mass):
    pts, w = sphere_rule(dim, 64)
    assert w.sum() == pytest.approx(mass, rel=1e-12)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert np.allclose(w @ pts, 0.0, atol=1e-12)
    # int xi_1^2 dsigma = |S^{n-1}| / n
    assert float(w @ pts[:, 0] ** 2) == pytest.approx(mass / dim, rel=1e-12)
    with pytest.raises(ValueError):
        sphere_rule(4)


FAST = SeminormQuadrature(h_max=4.0, x_max=6.0, points_per_axis=256, radial_per_decade=24)


def test_seminorm_polynomial_and_errors():
    f = poly1(1.0, 3.0)
    for eps in (1e-1, 1e-3):
        assert strong_seminorm(f, 2, 1.0, 2.0, eps, FAST) == 0.0
    g = SMOOTH[0]
    with pytest.raises(ValueError):
        strong_seminorm(g, 1, 0.5, 2.0, 0.0, FAST)
    with pytest.raises(ValueError):
        strong_seminorm(g, 1, 0.5, 2.0, 4.0, FAST)


def test_seminorm_stabilises_below_order():
    # DERIVED: dominated convergence, s < k
    f = make_catalog_function("gaussian_bump", {"dim": 1, "window": 5.0})
    vals = [strong_seminorm(f, 1, 0.5, 2.0, eps, FAST) for eps in (4e-3, 2e-3, 1e-3)]
    assert abs(vals[1] - vals[0]) / vals[1] < 0.01
    assert abs(vals[2] - vals[1]) / vals[2] < 0.01


def test_seminorm_at_order_grows_logarithmically():
    # DERIVED: near h = 0 the integrand ~ |h|^{-n}, so value^2 is affine in log(1/eps)
    f = make_catalog_function("gaussian_bump", {"dim": 1})
    eps = np.geomspace(1e-2, 1e-4, 5)
    v2 = np.array([strong_seminorm(f, 1, 1.0, 2.0, e, FAST) ** 2 for e in eps])
    x = np.log(1 / eps)
    slope, icpt = np.polyfit(x, v2, 1)
    r2 = 1 - np.sum((v2 - (slope * x + icpt)) ** 2) / np.sum((v2 - v2.mean()) ** 2)
    assert slope > 0 and r2 > 0.99
    # the slope is |S^0| * ||f'||_2^2 = 2 * sqrt(pi/2)
    assert slope == pytest.approx(2 * math.sqrt(math.pi / 2), rel=0.02)


def test_seminorm_against_nested_quad():
    # DERIVED: independent adaptive quadrature of the same truncated double integral
    f = make_catalog_function("gaussian_bump", {"dim": 1})
    g = lambda z: math.exp(-z * z)
    eps, H, s, q = 0.05, 4.0, 0.5, 2.0

    def inner(x):
        fx = g(x)
        kern = lambda h: ((g(x + h) - fx) ** 2 + (g(x - h) - fx) ** 2) * h ** (-1 - s * q)
        return integrate.quad(kern, eps, H, limit=200, epsabs=1e-13)[0]

    ref = math.sqrt(integrate.quad(inner, -6.0, 6.0, limit=200, epsabs=1e-12)[0])
    quad = SeminormQuadrature(h_max=H, x_max=6.0, points_per_axis=512, radial_per_decade=96)
    assert strong_seminorm(f, 1, s, q, eps, quad) == pytest.approx(ref, rel=2e-3)
