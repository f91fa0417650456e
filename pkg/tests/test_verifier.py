import json

import numpy as np
import pytest

from warpspec.metric import WarpParams, build_profile
from warpspec import verifier
from warpspec.verifier import (
    TestProfile, check_type1_reduction, check_type2_reduction, check_type3_reduction, convergence_study,
    weighted_norms,
)


@pytest.fixture(scope="module")
def flat():
    return build_profile(WarpParams(3, -1.0, -1.0))


@pytest.fixture(scope="module")
def steep():
    return build_profile(WarpParams(4, -2.0, 0.5))


def test_bump_derivatives_match_numerics():
    h = TestProfile(0.2, 0.9)
    t = np.linspace(0.25, 0.85, 7)
    step = 1e-5
    v, d1, d2 = h.derivs(t)
    num1 = (h.derivs(t + step)[0] - h.derivs(t - step)[0]) / (2 * step)
    num2 = (h.derivs(t + step)[1] - h.derivs(t - step)[1]) / (2 * step)
    np.testing.assert_allclose(d1, num1, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(d2, num2, rtol=1e-6, atol=1e-6)
    out = h.derivs(np.array([0.1, 0.2, 0.9, 1.0]))
    assert all(np.all(x == 0) for x in out)


def test_flat_type1_small_residual(flat):
    res = check_type1_reduction(flat, 3, 0, 0.0, TestProfile(0.1, 0.5), 1e-3)
    assert res < 1e-6


def test_weighted_norm_preserved(steep):
    h = TestProfile(1.2, 2.7)
    for kind, p in (("I", 1), ("II", 2)):
        lhs, rhs = weighted_norms(steep, 4, p, h, kind)
        assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("check", ["type1", "type2", "type3"])
@pytest.mark.parametrize("support", verifier.SUPPORTS)
def test_fourth_order(check, support):
    st = convergence_study(check, WarpParams(5, -2.0, -0.7), 5, 2, 6.0, support)
    assert st.passed, st.orders
    assert len(st.residuals) == 4


@pytest.mark.parametrize("check", ["type2", "type3"])
def test_mutation_detected(check):
    st = convergence_study(check, WarpParams(4, -2.0, 0.5), 4, 2, 6.0, (1.1, 1.9),
                           mutation=verifier.mutation_for(check, True))
    assert not st.passed
    assert min(st.residuals) > 1e-3


def test_type1_mutation_needs_varying_f():
    on_flat = convergence_study("type1", WarpParams(4, -1.0, 0.5), 4, 1, 6.0, (1.1, 1.9), mutation="flip_cross_term")
    on_steep = convergence_study("type1", WarpParams(4, -2.0, 0.5), 4, 1, 6.0, (1.1, 1.9), mutation="flip_cross_term")
    assert on_flat.passed and not on_steep.passed


def test_type2_pipeline_matches_dual_type1(steep):
    # the reduced operators coincide, so both residuals converge alike
    h = TestProfile(2.5, 3.5)
    r2 = check_type2_reduction(steep, 4, 1, 6.0, h, 1 / 128)
    r1 = check_type1_reduction(steep, 4, 3, 6.0, h, 1 / 128)
    assert r2 < 1e-6 and r1 < 1e-6


def test_residual_scale_invariant(steep):
    h1, h2 = TestProfile(1.1, 1.9), TestProfile(1.1, 1.9, scale=37.0)
    a = check_type3_reduction(steep, 4, 2, 6.0, h1, TestProfile(1.2, 1.9, power=9), 1 / 64)
    b = check_type3_reduction(steep, 4, 2, 6.0, h2, TestProfile(1.2, 1.9, power=9, scale=37.0), 1 / 64)
    assert a == pytest.approx(b, rel=1e-10)
    assert check_type1_reduction(steep, 4, 1, 2.0, h1, 1 / 64) == pytest.approx(
        check_type1_reduction(steep, 4, 1, 2.0, h2, 1 / 64), rel=1e-10)


def test_coarse_grid_rejected(flat):
    with pytest.raises(ValueError, match="too coarse"):
        check_type1_reduction(flat, 3, 0, 0.0, TestProfile(0.1, 0.5), 0.05)


def test_type3_needs_positive_lambda(flat):
    with pytest.raises(ValueError):
        check_type3_reduction(flat, 3, 1, 0.0, TestProfile(0.1, 0.5), TestProfile(0.1, 0.5), 1e-3)


def test_jsonl_round_trip():
    st = convergence_study("type1", WarpParams(3, -1.0, -1.0), 3, 0, 2.0, (0.1, 0.5))
    text = verifier.to_jsonl([st])
    rows = [json.loads(line) for line in text.splitlines()]
    assert [r["step"] for r in rows] == list(st.steps)
    assert [r["residual"] for r in rows] == list(st.residuals)
    assert all(set(r) == {"check", "params", "step", "residual"} for r in rows)
