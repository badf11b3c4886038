import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsvylab.bsvy import (BoundaryArgmaxError, FunctionalConfig, HQuadrature, LambdaGrid,
                          bsvy_curve, bsvy_limit, bsvy_sup, bsvy_value, defect_experiment,
                          gamma_valid, gn_check, inner_integral, inner_table, level_set_indicator,
                          limit_prediction, sharpness_experiment, weighted_upper_check)
from bsvylab.calculus import SeminormQuadrature
from bsvylab.field import dilate, make_catalog_function
from bsvylab.spaces import Lebesgue, Morrey, WeightedLebesgue
from bsvylab.weights import WeightSpec

GAUSS = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0})
LINEAR = make_catalog_function("polynomial", {"dim": 1, "coeffs": [0, 1]})
AFFINE = make_catalog_function("polynomial", {"dim": 1, "coeffs": [1, 2]})
CATALOG_1D = [
    GAUSS,
    make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 0.6, "monomial": [1]}),
    make_catalog_function("windowed_sinusoid", {"dim": 1, "omega": 2.0, "window": 4.0}),
    make_catalog_function("mollified_indicator", {"dim": 1}),
    make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.5, "window": 6.0}),
]
SMALL = dict(k=1, q=2.0, gamma=1.0, space=Lebesgue(2.0), points_per_axis=256,
             lam=LambdaGrid(1e-3, 1e4, 8))


def small(**kw):
    return FunctionalConfig(**{**SMALL, **kw})


# ---------------------------------------------------------------- gamma and config


def test_gamma_valid_examples():
    assert not gamma_valid(1.0, 1.0, -0.5)
    assert gamma_valid(2.0, 1.0, -0.5)
    assert gamma_valid(1.0, 1.0, -1.5)
    assert gamma_valid(1.0, 3.0, 0.1)
    for p, q in [(1.0, 1.0), (2.0, 0.5), (1.0, 7.0)]:
        assert not gamma_valid(p, q, 0.0)
    with pytest.raises(ValueError):
        gamma_valid(0.5, 1.0, 1.0)


@pytest.mark.parametrize("kw", [
    {"k": 0},
    {"ell": 3, "k": 2},
    {"q": 0.0},
    {"gamma": 0.0},
    {"gamma": -0.5, "space": Lebesgue(1.0), "q": 1.0},
])
def test_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        FunctionalConfig(**kw)


def test_config_gamma_message_and_opt_out():
    with pytest.raises(ValueError, match="Gamma_"):
        FunctionalConfig(gamma=-0.5, q=1.0, space=Lebesgue(1.0))
    cfg = FunctionalConfig(gamma=-0.5, q=1.0, space=Lebesgue(1.0), claims_main=False)
    assert cfg.b == -0.5 and cfg.exponent == 0.5
    with pytest.raises(ValueError):
        bsvy_sup(GAUSS, cfg)


def test_grid_and_quadrature_validation():
    with pytest.raises(ValueError):
        LambdaGrid(1.0, 0.5)
    with pytest.raises(ValueError):
        HQuadrature(r_min=1.0, r_max=0.5)
    v = LambdaGrid(1e-2, 1e2, 4).values()
    assert v.size == 17 and np.all(np.diff(v) > 0)
    scaled = small().scaled(2.0)
    assert scaled.hquad.directions == 64 and scaled.resolution == 2.0


# ---------------------------------------------------------------- inner integral


def test_inner_integral_linear_closed_form():
    # DERIVED: |h| > lam |h|^2 iff |h| < 1/lam, so the integral is 2/lam
    cfg = FunctionalConfig(k=1, q=1.0, gamma=1.0)
    lams = np.array([0.05, 0.5, 1.0, 3.0, 40.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        got = inner_integral(LINEAR, 0.3, lams, cfg)
    assert np.allclose(got, 2.0 / lams, rtol=1e-12)


@pytest.mark.parametrize("k,f", [(1, make_catalog_function("polynomial", {"dim": 1, "coeffs": [2.5]})),
                                 (2, AFFINE)])
def test_inner_integral_vanishes_on_low_degree(k, f):
    cfg = FunctionalConfig(k=k, q=2.0, gamma=1.0)
    x = np.linspace(-2, 2, 9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert np.all(inner_integral(f, x, np.geomspace(1e-3, 1e3, 7), cfg) == 0.0)
    assert bsvy_value(f, 0.7, cfg) == 0.0


@pytest.mark.parametrize("f", CATALOG_1D)
def test_inner_integral_nonincreasing_in_lambda(f):
    lams = np.geomspace(1e-3, 1e3, 30)
    x = np.linspace(-1.3, 1.7, 7)
    tab = inner_integral(f, x, lams, small())
    assert np.all(tab >= 0)
    assert np.all(np.diff(tab, axis=1) <= 1e-12 * (1 + tab[:, :-1]))


def test_ell_equal_k_is_bit_identical():
    x = np.linspace(-2, 2, 11)
    lams = np.geomspace(1e-2, 1e2, 9)
    for k in (1, 2):
        a = inner_integral(GAUSS, x, lams, small(k=k))
        b = inner_integral(GAUSS, x, lams, small(k=k, ell=k))
        assert np.array_equal(a, b)
    h = np.linspace(-1, 1, 21)
    assert np.array_equal(level_set_indicator(GAUSS, 0.2, h, 0.5, 0.5, 2),
                          level_set_indicator(GAUSS, 0.2, h, 0.5, 0.5, 2, ell=2))


def test_inner_integral_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        inner_integral(GAUSS, 0.0, 0.0, small())
    with pytest.raises(ValueError):
        bsvy_value(GAUSS, -1.0, small())


# ---------------------------------------------------------------- value, sup


def test_dilation_covariance():
    # DERIVED: change of variables, Phi_{f(a.)}(lam) = a^{k-n/p} Phi_f(lam a^{-k-gamma/q})
    rng = np.random.default_rng(0)
    for k, q, gamma, p in [(1, 2.0, 1.0, 2.0), (2, 1.0, 1.5, 1.0)]:
        cfg = small(k=k, q=q, gamma=gamma, space=Lebesgue(p), box_half_width=8.0)
        for _ in range(5):
            a, lam = rng.uniform(0.5, 2.0), 10 ** rng.uniform(-1, 1)
            lhs = bsvy_value(dilate(GAUSS, a), lam, cfg)
            rhs = a ** (k - 1 / p) * bsvy_value(GAUSS, lam * a ** (-k - gamma / q), cfg)
            assert lhs == pytest.approx(rhs, rel=2e-2)


def test_value_decays_to_plateau_for_large_lambda():
    lams = np.geomspace(1e2, 1e6, 5)
    vals = bsvy_curve(GAUSS, lams, small())
    steps = np.abs(np.diff(vals)) / vals[-1]
    assert steps[-1] < 1e-3 and np.all(steps[1:] <= steps[:-1] + 1e-6)


def test_sup_zero_for_low_degree():
    r = bsvy_sup(AFFINE, small(k=2))
    assert r.sup == 0.0 and r.rhs == 0.0 and np.all(r.values == 0)
    lim = bsvy_limit(AFFINE, small(k=2))
    assert lim.limit == 0.0 and lim.predicted == 0.0


def test_sup_result_invariants():
    r = bsvy_sup(GAUSS, small())
    assert r.sup == np.max(r.values) and np.all(r.values >= 0)
    assert not r.boundary and r.lambdas[0] < r.argmax < r.lambdas[-1]
    assert r.ratio == pytest.approx(r.sup / r.rhs)
    assert set(r.to_dict()) >= {"argmax", "sup", "rhs", "ratio", "boundary"}


def test_equivalence_window_across_catalog_and_dilations():
    ratios = []
    for f in CATALOG_1D:
        for a in (0.25, 1.0, 4.0):
            r = bsvy_sup(dilate(f, a), small())
            assert math.isfinite(r.sup) and r.sup > 0
            ratios.append(r.ratio)
    assert max(ratios) / min(ratios) <= 4.0


def test_boundary_argmax_warns_and_strict_raises():
    narrow = LambdaGrid(1e-12, 1e-11, 8)  # Phi still rising after widening
    grid = small(lam=narrow)
    with pytest.warns(RuntimeWarning, match="endpoint"):
        r = bsvy_sup(GAUSS, grid)
    assert r.boundary and r.warnings
    with pytest.raises(BoundaryArgmaxError):
        bsvy_sup(GAUSS, small(lam=narrow, strict=True))


def test_other_space_runs():
    r = bsvy_sup(GAUSS, small(space=Morrey(3.0, 2.0), p=2.0))
    assert 0 < r.ratio < math.inf


# ---------------------------------------------------------------- limit


@pytest.mark.parametrize("k,q,gamma", [(1, 2.0, 1.0), (2, 1.0, -0.5), (1, 3.0, 2.0)])
def test_limit_prediction_one_dimensional(k, q, gamma):
    # DERIVED: two-point sphere sum gives (2/|gamma|)^{1/q} ||f^(k)||_X
    cfg = small(k=k, q=q, gamma=gamma)
    got = limit_prediction(GAUSS, cfg)
    from bsvylab.bsvy import outer_grid
    from bsvylab.field import sample
    from bsvylab.spaces import space_norm
    grid = outer_grid(GAUSS, cfg)
    deriv = sample(lambda x: np.abs(GAUSS.derivative((k,), x[..., 0])), grid)
    assert got == pytest.approx((2 / abs(gamma)) ** (1 / q) * space_norm(cfg.space, deriv), rel=1e-9)


def test_limit_matches_prediction_on_full_grid():
    cfg = FunctionalConfig(k=1, q=2.0, gamma=1.0, space=Lebesgue(2.0))
    lim = bsvy_limit(GAUSS, cfg)
    assert lim.direction == "infinity" and lim.monotone
    assert lim.relative_error < 0.05


def test_limit_direction_and_bound_by_sup():
    for gamma in (1.0, -0.5):
        cfg = small(gamma=gamma)
        lim = bsvy_limit(GAUSS, cfg)
        assert lim.direction == ("infinity" if gamma > 0 else "zero")
        assert np.all(np.diff(lim.lambdas) * gamma > 0)
        assert lim.limit <= (1 + 1e-2) * bsvy_sup(GAUSS, cfg).sup
    with pytest.raises(ValueError):
        bsvy_limit(GAUSS, small(space=Morrey(3.0, 2.0), p=2.0))


def test_limit_weighted_space_allowed():
    cfg = small(space=WeightedLebesgue(2.0, WeightSpec.constant()))
    assert bsvy_limit(GAUSS, cfg).relative_error < 0.05


# ---------------------------------------------------------------- Gagliardo-Nirenberg


def test_gn_endpoint_recovers_sup():
    # DERIVED: s -> 1 forces q -> 1 and b -> gamma; X^1 = X
    s = 1 - 1e-6
    q = 1 / ((1 - s) / 1.0 + s)
    rep = gn_check(GAUSS, small(q=q), s, 1.0, "interpolation-ss")
    assert rep.lhs == pytest.approx(bsvy_sup(GAUSS, small(q=1.0)).sup, rel=1e-2)


def test_gn_ratio_dilation_stable():
    for mode, q0, q in [("endpoint-inf", math.inf, 2.0), ("interpolation-ss", 2.0, 4 / 3)]:
        ratios = [gn_check(dilate(GAUSS, a), small(q=q), 0.5, q0, mode).ratio for a in (0.25, 1.0, 4.0)]
        assert all(0 < r < math.inf for r in ratios)
        assert max(ratios) / min(ratios) <= 2.0


def test_gn_two_parameter_mode():
    eta, s0, q0 = 0.5, 0.2, 4.0
    s, q = (1 - eta) * s0 + eta, 1 / ((1 - eta) / q0 + eta)
    rep = gn_check(GAUSS, small(q=q), s, q0, "two-parameter", eta=eta, s0=s0)
    assert 0 < rep.ratio < math.inf
    assert rep.to_dict()["mode"] == "two-parameter"


def test_gn_zero_and_errors():
    assert gn_check(AFFINE, small(k=2, q=2.0), 0.5, math.inf, "endpoint-inf").lhs == 0.0
    with pytest.raises(ValueError, match="exponent relation"):
        gn_check(GAUSS, small(q=2.0), 0.3, math.inf, "endpoint-inf")
    with pytest.raises(ValueError, match="exponent relation"):
        gn_check(GAUSS, small(q=2.0), 0.5, 3.0, "interpolation-ss")
    with pytest.raises(ValueError):
        gn_check(GAUSS, small(q=2.0), 0.5, 2.0, "endpoint-inf")
    with pytest.raises(ValueError):
        gn_check(GAUSS, small(q=2.0), 0.5, 2.0, "bogus")
    with pytest.raises(ValueError):
        gn_check(GAUSS, small(q=1.6), 0.7, 4.0, "two-parameter")


# ---------------------------------------------------------------- sharpness


def test_sharpness_argument_checks():
    with pytest.raises(ValueError):
        sharpness_experiment(1, 2, 1, 1, [4.0, 8.0])
    with pytest.raises(ValueError):
        sharpness_experiment(1, 2, 1, 2, [8.0])


def test_sharpness_lambda_above_one_is_local():
    # DERIVED: 0 <= f <= 1 gives |Delta_h f| <= 1, so k=1 at lam > 1 sees nothing
    t = sharpness_experiment(1, 2, 1, 1, [6.0, 8.0, 16.0], lam=1.2, directions=128)
    assert np.all(t.values == 0.0)


def test_sharpness_witness_is_radial():
    # DERIVED: the ray reduction assumes I(x, lam) depends on |x| only; compare off-axis points
    f = make_catalog_function("mollified_indicator", {"dim": 2})
    hq = HQuadrature(directions=512, radial_per_decade=32)
    for t in (0.5, 2.0, 5.0):
        pts = np.array([[t, 0.0], [t * math.cos(0.7), t * math.sin(0.7)], [0.0, -t]])
        vals = inner_table(f, pts, [0.75], k=1, e=-1.0, gamma=-2.0, hquad=hq)[:, 0]
        assert vals[0] > 0
        assert np.max(np.abs(vals - vals[0])) <= 0.02 * vals[0]


def test_sharpness_failing_regime_grows():
    t = sharpness_experiment(1, 2, 1, 1, [6.0, 8.0, 16.0, 32.0], directions=256)
    assert t.regime == "failing" and t.monotone
    inc = np.diff(t.values)
    assert np.all(inc > 0)
    assert [r["R"] for r in t.rows()] == [6.0, 8.0, 16.0, 32.0]


# ---------------------------------------------------------------- defect


QUAD = SeminormQuadrature(h_max=4, x_max=6, points_per_axis=128, directions=8, radial_per_decade=24)


def test_defect_polynomial_is_zero():
    rep = defect_experiment(AFFINE, 2, 2.0, [1e-1, 1e-2, 1e-3], QUAD)
    assert rep.zero and rep.passed and np.all(rep.values == 0.0)


@pytest.mark.parametrize("f,k,q", [
    (GAUSS, 1, 2.0),
    (make_catalog_function("windowed_sinusoid", {"dim": 1, "omega": 2.0, "window": 4.0}), 2, 1.0),
])
def test_defect_log_divergence(f, k, q):
    rep = defect_experiment(f, k, q, [10.0 ** -j for j in range(1, 7)], QUAD)
    assert rep.passed and rep.slope > 0 and rep.r2 > 0.99
    assert len(rep.rows()) == 6


# ---------------------------------------------------------------- weighted


def test_weighted_constant_matches_sup_power():
    # DERIVED: two code paths for one quantity
    cfg = small()
    w = weighted_upper_check(GAUSS, WeightSpec.constant(), 2.0, 2.0, 1.0, 1, cfg=cfg)
    assert w.ratio == pytest.approx(bsvy_sup(GAUSS, cfg).ratio ** 2, rel=1e-2)
    assert w.a1_constant == 1.0


def test_weighted_power_stable_under_dilation():
    ratios = [weighted_upper_check(dilate(GAUSS, a), WeightSpec.power(-0.5), 1.0, 2.0, 1.0, 1,
                                   cfg=small()).ratio for a in (0.25, 1.0, 4.0)]
    assert all(0 < r < math.inf for r in ratios)
    assert max(ratios) / min(ratios) <= 3.0


def test_weighted_zero_and_errors():
    assert weighted_upper_check(AFFINE, WeightSpec.constant(), 2.0, 2.0, 1.0, 2, cfg=small()).sup == 0.0
    with pytest.raises(ValueError):
        weighted_upper_check(GAUSS, WeightSpec.constant(), 1.0, 1.0, -0.5, 1)
    f2 = make_catalog_function("gaussian_bump", {"dim": 2})
    with pytest.raises(ValueError):
        weighted_upper_check(f2, WeightSpec.constant(), 1.0, 4.0, 1.0, 1)
    with pytest.raises(ValueError):
        weighted_upper_check(GAUSS, WeightSpec.power(1.5), 1.0, 2.0, 1.0, 1)


# ---------------------------------------------------------------- properties


@given(st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
def test_phi_nonnegative_and_zero_on_constants(lam, shift):
    c = make_catalog_function("polynomial", {"dim": 1, "coeffs": [shift]})
    assert bsvy_value(c, lam, small()) == 0.0
    assert bsvy_value(GAUSS, lam, small()) >= 0.0
