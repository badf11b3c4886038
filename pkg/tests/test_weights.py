import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bsvylab.field import GridSpec
from bsvylab.weights import (Cube, CubeFamily, WeightSpec, ap_constant, ap_quotient, critical_index,
                             default_family, doubling_check)

R_GRID = np.arange(1.0, 4.0001, 0.25)


def test_constant_weight_has_unit_constant():
    # TRIVIAL: Jensen equality case
    for c in (1.0, 0.3, 7.0):
        w = WeightSpec.constant(c)
        for p in (1.0, 1.5, 2.0, 4.0):
            for dim in (1, 2):
                assert ap_constant(w, p, default_family(dim, depth=10)) == pytest.approx(1.0, rel=1e-12)


def test_a1_power_weight_stabilises():
    # DERIVED: on [0, e] the A_1 quotient of |x|^{-1/2} is 2, and the family approaches it
    w = WeightSpec.power(-0.5)
    ests = [ap_constant(w, 1.0, default_family(1, depth=d)) for d in (40, 80, 160)]
    assert all(1.0 <= e <= 2.0 * (1 + 1e-9) for e in ests)
    assert ests[-1] == pytest.approx(2.0, rel=1e-3)
    assert abs(ests[2] - ests[1]) <= 0.05 * ests[1]


def test_ap_power_weight_above_threshold_diverges():
    # DERIVED: |x|^{1.5} fails A_2; shrinking cubes toward 0 drive the estimate up
    w = WeightSpec.power(1.5)
    ests = [ap_constant(w, 2.0, default_family(1, depth=d)) for d in (20, 40, 80, 160)]
    assert all(b > 1.5 * a for a, b in zip(ests[:-1], ests[1:]))


def test_doubling_examples():
    # DERIVED: w(Q) = 2(sqrt 2 - 1) on [1,2], w(S) = 4 on [0,4] for |x|^{-1/2}
    w = WeightSpec.power(-0.5)
    Q, S = Cube((1.0,), 1.0), Cube((0.0,), 4.0)
    assert w.mass(Q) == pytest.approx(2 * (math.sqrt(2) - 1), rel=1e-14)
    assert w.mass(S) == pytest.approx(4.0, rel=1e-14)
    for p in (1.0, 2.0):
        est = ap_constant(w, p, default_family(1, depth=80))
        assert doubling_check(w, p, Q, S, est)
        assert doubling_check(w, p, Q, Q, est)
    one = WeightSpec.constant()
    assert doubling_check(one, 1.0, Q, S, 1.0)
    with pytest.raises(ValueError):
        doubling_check(w, 1.0, S, Q, 2.0)


def test_critical_indices():
    assert critical_index(WeightSpec.constant(), R_GRID).index == 1.0
    assert critical_index(WeightSpec.power(-0.5), R_GRID).index == 1.0
    # |x|^a in A_r iff a < r - 1: a = 1/2 gives 3/2
    got = critical_index(WeightSpec.power(0.5), R_GRID).index
    assert abs(got - 1.5) <= 0.25 + 1e-12
    with pytest.raises(ValueError):
        critical_index(WeightSpec.constant(), [1.0, 2.0, 3.0])


def test_family_inclusion_is_monotone():
    w = WeightSpec.power(0.7)
    small, big = default_family(1, depth=10), default_family(1, depth=30)
    both = small.union(big)
    for p in (1.5, 2.0, 3.0):
        assert ap_constant(w, p, both) >= max(ap_constant(w, p, small), ap_constant(w, p, big))
    assert len(both) >= len(big)


@given(st.floats(-0.9, 2.5), st.floats(1.0, 4.0), st.floats(0.0, 2.0))
def test_constant_at_least_one_and_monotone_in_p(a, p, dq):
    w = WeightSpec.power(a)
    fam = default_family(1, depth=12, levels=range(-4, 3))
    lo = ap_constant(w, p, fam)
    assert lo >= 1 - 1e-12
    q = p + dq
    if math.isfinite(lo):
        assert ap_constant(w, q, fam) <= lo * (1 + 1e-9)


@given(st.floats(-0.9, 3.0), st.floats(-3.0, 3.0), st.floats(0.01, 4.0))
def test_power_mass_matches_quadrature(a, lo, e):
    # DERIVED: adaptive quadrature, split at the singular point
    w = WeightSpec.power(a)
    hi = lo + e
    pts = [0.0] if lo < 0 < hi else None
    ref = integrate.quad(lambda x: abs(x) ** a, lo, hi, points=pts, limit=200, epsrel=1e-11)[0]
    assert w.mass(Cube((lo,), e)) == pytest.approx(ref, rel=1e-7)


def test_power_mass_dim2_against_dblquad():
    w = WeightSpec.power(0.5)
    cube = Cube((0.5, -0.25), 0.5)
    ref = integrate.dblquad(lambda y, x: (x * x + y * y) ** 0.25, 0.5, 1.0, -0.25, 0.25)[0]
    assert w.mass(cube) == pytest.approx(ref, rel=1e-4)


def test_cube_masses_vectorised_and_cells():
    w = WeightSpec.power(-0.5)
    corners = np.array([[-1.0], [0.0], [0.25], [2.0]])
    edges = np.array([2.0, 1.0, 0.5, 3.0])
    vec = w.cube_masses(corners, edges)
    single = [w.mass(Cube(tuple(c), e)) for c, e in zip(corners, edges)]
    assert np.allclose(vec, single, rtol=1e-13)
    g = GridSpec(1, 2.0, 16)
    assert w.cell_masses(g).sum() == pytest.approx(2 * 2 * math.sqrt(2.0), rel=1e-12)


def test_shifted_power_and_ess_inf():
    w = WeightSpec.shifted_power(-0.5, (1.0,))
    assert w.mass(Cube((1.0,), 1.0)) == pytest.approx(2.0)
    assert w.ess_inf(Cube((1.0,), 4.0)) == pytest.approx(0.5)
    assert WeightSpec.power(0.5).ess_inf(Cube((1.0,), 3.0)) == pytest.approx(1.0)
    fam = default_family(1, singular_point=(1.0,), depth=40)
    assert ap_constant(w, 1.0, fam) == pytest.approx(ap_constant(WeightSpec.power(-0.5), 1.0,
                                                                  default_family(1, depth=40)), rel=1e-9)


def test_errors_and_serialization():
    with pytest.raises(ValueError):
        WeightSpec("gaussian")
    with pytest.raises(ValueError):
        WeightSpec.constant(0.0)
    with pytest.raises(ValueError):
        WeightSpec.power(0.5).dual(1.0)
    with pytest.raises(ValueError):
        ap_quotient(WeightSpec.constant(), 0.5, Cube((0.0,), 1.0))
    with pytest.raises(ValueError):
        CubeFamily(())
    with pytest.raises(ValueError):
        Cube((0.0,), 0.0)
    for w in (WeightSpec.constant(2.0), WeightSpec.power(-0.5), WeightSpec.shifted_power(0.3, (1.0, 2.0))):
        assert WeightSpec.from_dict(w.to_dict()) == w
