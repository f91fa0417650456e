import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warpspec.metric import WarpParams, arclength, build_profile
from warpspec.reduction import (
    Kind, assemble_type3, closed_form_coupling, closed_form_potential, coupling_v3, potential_spec,
    potential_type1_general, potential_type2_general, r_potential, reduced_operator, to_arclength,
)


def amap_for(N=3, a=-1.0, b=-1.0):
    return arclength(build_profile(WarpParams(N, a, b)))


def flat_profile(N=3, b=-1.0):
    return build_profile(WarpParams(N, -1.0, b))


def test_type1_general_euclidean_examples():
    prof = flat_profile(3)
    assert potential_type1_general(prof, 3, 0, 0.0)(np.array([0.5]))[0] == pytest.approx(0.0, abs=1e-14)
    prof5 = flat_profile(5)
    # ((N-2p-1)/2)((N-2p-3)/2)/r^2 = 2 at r = 1 (t = 1 sits on the junction)
    assert potential_type1_general(prof5, 5, 0, 0.0)(np.array([1.0 - 1e-15]))[0] == pytest.approx(2.0, rel=1e-12)


def test_type1_general_exponential_is_b_squared():
    b = -1.3
    prof = flat_profile(3, b)
    t = np.array([2.5, 4.0, 9.0])
    np.testing.assert_allclose(potential_type1_general(prof, 3, 0, 0.0)(t), b * b, rtol=1e-13)


def test_type2_general_examples():
    prof = flat_profile(3)
    assert potential_type2_general(prof, 3, 1, 0.0)(np.array([0.999999999]))[0] == pytest.approx(2.0, rel=1e-8)
    b = 0.8
    prof = flat_profile(3, b)
    np.testing.assert_allclose(potential_type2_general(prof, 3, 1, 0.0)(np.array([3.0, 6.0])), b * b, rtol=1e-13)


@pytest.mark.parametrize("N", range(2, 9))
def test_type2_is_type1_in_dual_degree(N):
    prof = build_profile(WarpParams(N, -2.0, 0.6))
    t = np.linspace(0.05, 6.0, 301)
    for p in range(1, N + 1):
        v2 = potential_type2_general(prof, N, p, 2.0)(t)
        v1 = potential_type1_general(prof, N, N - p, 2.0)(t)
        np.testing.assert_array_equal(v2, v1)


def test_coupling_examples():
    prof = flat_profile(3, 1.0)
    assert coupling_v3(prof)(np.array([0.5]))[0] == pytest.approx(8.0, rel=1e-14)
    # -2b e^{bt}
    assert coupling_v3(prof)(np.array([3.0]))[0] == pytest.approx(-2.0 * math.exp(3.0), rel=1e-13)
    prof_m = flat_profile(3, -1.0)
    assert coupling_v3(prof_m)(np.array([3.0]))[0] == pytest.approx(2.0 * math.exp(-3.0), rel=1e-13)


def test_coupling_a_lt_minus1_power_law():
    amap = amap_for(3, -2.0, 1.0)
    r = amap.cbar + np.array([1.0, 5.0, 20.0])
    x = r - amap.c1
    np.testing.assert_allclose(reduced_operator("III", amap, 3, 1, 2.0).W(r) / math.sqrt(2.0), -2.0 * x**0.0, rtol=1e-12)
    amap = amap_for(3, -3.0, -1.0)
    A = 2.0
    r = amap.cbar + np.array([1.0, 5.0, 20.0])
    x = r - amap.c1
    expected = (2.0 / A) * A ** (-1.0 / A) * x ** (-1.0 / A - 1.0)
    np.testing.assert_allclose(closed_form_coupling(amap)(r), expected, rtol=1e-13)
    np.testing.assert_allclose(coupling_v3(amap.profile)(amap.t(r)), expected, rtol=1e-11)


def test_arclength_examples():
    amap = amap_for(3, -1.0, -1.0)
    r = np.array([amap.cbar + 2.0])
    V = r_potential("I", amap, 3, 0, 2.0)(r)[0]
    assert V == pytest.approx(1.0 + 2.0 * math.exp(-2.0 * r[0]), rel=1e-13)
    inner = np.array([0.3])
    assert r_potential("I", amap, 3, 0, 0.0)(inner)[0] == pytest.approx(0.0, abs=1e-12)
    assert r_potential("I", amap, 5, 1, 6.0)(inner)[0] == pytest.approx((1.0 * 0.0 + 6.0) / 0.09, rel=1e-13)


def test_k1_arithmetic_and_fast_decay():
    amap = amap_for(3, -2.0, -1.0)
    spec = potential_spec("I", amap, 3, 0, 0.0)
    assert spec.K1 == 0.0
    r = amap.cbar + np.array([10.0, 100.0])
    V = r_potential("I", amap, 3, 0, 0.0)(r)
    assert np.all(np.abs(V) < 1e-12)


def test_k2_sign():
    amap = amap_for(4, -3.0, 0.5)
    spec = potential_spec("II", amap, 4, 1, 0.0)
    m = 0.5 / 2.0
    assert spec.K2 == pytest.approx((3 / 2) ** 2 * m * m - (3 / 2) * m)
    r = amap.cbar + np.array([3.0, 30.0])
    np.testing.assert_allclose(r_potential("II", amap, 4, 1, 0.0)(r), spec.K2 / (r - amap.c1) ** 2, rtol=1e-10)


@pytest.mark.parametrize("path", ["r", "t"])
def test_two_paths_agree_on_bridge(path):
    amap = amap_for(5, -2.5, 0.7)
    r = np.linspace(0.9 * amap.profile.epsilon, amap.cbar + 0.1, 400)
    for kind, p in (("I", 1), ("II", 2)):
        ref = r_potential(kind, amap, 5, p, 6.0, path="r")(r)
        other = r_potential(kind, amap, 5, p, 6.0, path=path)(r)
        np.testing.assert_allclose(other, ref, rtol=1e-9, atol=1e-9)


def test_to_arclength_custom_potential_matches():
    amap = amap_for(4, -2.0, -0.5)
    prof = amap.profile
    op = to_arclength(potential_type1_general(prof, 4, 1, 6.0), amap, prof, "I", 4, 1, 6.0)
    r = np.linspace(0.05, 20.0, 200)
    np.testing.assert_allclose(op.V(r), r_potential("I", amap, 4, 1, 6.0)(r), rtol=1e-9, atol=1e-10)


def test_small_r_inverse_square():
    amap = amap_for(6, -1.0, -1.0)
    N, p, lam = 6, 1, 12.0
    r = np.logspace(-4, -2, 30)
    V = r_potential("I", amap, N, p, lam)(r)
    slope = np.polyfit(np.log(r), np.log(V), 1)[0]
    assert slope == pytest.approx(-2.0, abs=1e-3)
    C = ((N - 2 * p - 1) / 2) * ((N - 2 * p - 3) / 2) + lam
    np.testing.assert_allclose(V * r * r, C, rtol=1e-12)


def test_type3_structure():
    amap = amap_for(3, -1.0, -1.0)
    op = assemble_type3(amap.profile, amap, 3, 1, 2.0)
    assert op.coupled
    assert op.W(np.array([0.5]))[0] == pytest.approx(8.0 * math.sqrt(2.0), rel=1e-13)
    r = amap.cbar + np.array([1.0, 4.0])
    np.testing.assert_allclose(op.V(r), 0.0 + 2.0 * np.exp(-2.0 * r), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(op.V2(r), 1.0 + 2.0 * np.exp(-2.0 * r), rtol=1e-12)


def test_type3_rejects_zero_eigenvalue():
    amap = amap_for()
    with pytest.raises(ValueError):
        assemble_type3(amap.profile, amap, 3, 1, 0.0)


@pytest.mark.parametrize("kind,p", [("I", 3), ("II", 0), ("III", 0), ("III", 3)])
def test_degree_ranges(kind, p):
    with pytest.raises(ValueError):
        reduced_operator(kind, amap_for(), 3, p, 2.0)


def test_rejects_nonpositive_r():
    op = reduced_operator("I", amap_for(), 3, 0, 0.0)
    with pytest.raises(ValueError):
        op.V(np.array([0.0]))


@settings(max_examples=30, deadline=None)
@given(
    N=st.integers(2, 8),
    a=st.sampled_from([-1.0, -1.5, -3.0]),
    b=st.floats(-1.5, 1.5),
    lam=st.floats(0.0, 30.0),
    data=st.data(),
)
def test_duality_pointwise_property(N, a, b, lam, data):
    p = data.draw(st.integers(1, N))
    amap = arclength(build_profile(WarpParams(N, a, b)))
    r = np.linspace(0.01, amap.cbar + 10.0, 97)
    v2 = r_potential("II", amap, N, p, lam)(r)
    v1 = r_potential("I", amap, N, N - p, lam)(r)
    np.testing.assert_array_equal(v2, v1)


@settings(max_examples=30, deadline=None)
@given(
    N=st.integers(2, 8),
    a=st.sampled_from([-1.0, -2.0, -3.5]),
    b=st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0]),
    lam=st.sampled_from([0.0, 2.0, 6.0]),
    data=st.data(),
)
def test_region_consistency_property(N, a, b, lam, data):
    kind = data.draw(st.sampled_from([Kind.TYPE_I, Kind.TYPE_II]))
    p = data.draw(st.integers(0, N - 1) if kind is Kind.TYPE_I else st.integers(1, N))
    amap = arclength(build_profile(WarpParams(N, a, b)))
    r = np.concatenate([np.linspace(0.01, 0.99, 25), amap.cbar + np.linspace(1e-3, 20.0, 25)])
    ref = closed_form_potential(kind, amap, N, p, lam)(r)
    for path in ("r", "t"):
        got = r_potential(kind, amap, N, p, lam, path=path)(r)
        assert np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-8
