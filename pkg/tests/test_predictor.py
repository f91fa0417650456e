import math

import pytest
from hypothesis import given, strategies as st

from warpspec.eigensolver import LadderLevel, SpectrumEstimate
from warpspec.predictor import (
    EMPTY, Band, aggregate_modes, classify_regime, predict, predict_mode,
)
import numpy as np


def test_half_dimension_carries_isolated_zero():
    pr = predict(4, 2, -1.0, -1.0)
    assert str(pr.sigma_ess) == "{0} U [0.25, inf)"
    assert pr.sigma_ess.with_zero and pr.sigma_ess.threshold == 0.25
    assert pr.sigma_ac == Band(0.25)


def test_b_positive_edge_degree():
    assert predict(3, 1, -1.0, 2.0).sigma_ac == Band(4.0)


def test_b_positive_interior_degree_empty():
    pr = predict(5, 2, -2.0, 1.0)
    assert pr.sigma_ac.empty and pr.sigma_ess.empty
    assert predict(5, 2, -2.0, 1.0).sigma_ess is EMPTY


def test_min_formula_type_mix():
    # N=3, p=1: type I threshold 0, type II threshold 1
    assert predict(3, 1, -1.0, -1.0).sigma_ac == Band(0.0)
    assert predict(3, 0, -1.0, -1.0).sigma_ac == Band(1.0)


def test_b_zero_uses_lambda_bar():
    assert [predict(5, p, -1.0, 0.0).sigma_ess.threshold for p in range(6)] == [0, 0, 4, 4, 0, 0]
    assert [predict(5, p, -3.0, 0.0).sigma_ac.threshold for p in range(6)] == [0, 0, 4, 4, 0, 0]


def test_a_lt_minus1_b_negative_full_line():
    for p in range(4):
        assert predict(3, p, -2.0, -0.3).sigma_ess == Band(0.0)


def test_sc_status():
    assert predict(4, 0, -1.0, -1.0).sc_status == "empty"
    assert predict(4, 4, -1.0, -1.0).sc_status == "empty"
    assert predict(4, 2, -1.0, -1.0).sc_status == "reduces_to_M3_open"


@pytest.mark.parametrize("args", [(1, 0, -1.0, 0.0), (3, 4, -1.0, 0.0), (3, -1, -1.0, 0.0), (3, 0, -0.5, 0.0)])
def test_rejects_out_of_range(args):
    with pytest.raises(ValueError):
        predict(*args)


@given(
    N=st.integers(2, 12),
    a=st.sampled_from([-1.0, -1.5, -4.0]),
    b=st.floats(-3, 3, allow_nan=False),
    data=st.data(),
)
def test_duality(N, a, b, data):
    p = data.draw(st.integers(0, N))
    x, y = predict(N, p, a, b), predict(N, N - p, a, b)
    assert x.sigma_ess == y.sigma_ess and x.sigma_ac == y.sigma_ac


@given(
    N=st.integers(2, 12),
    a=st.sampled_from([-1.0, -2.5]),
    b=st.floats(-3, 3, allow_nan=False),
    data=st.data(),
)
def test_ac_inside_ess(N, a, b, data):
    p = data.draw(st.integers(0, N))
    pr = predict(N, p, a, b)
    if pr.sigma_ac.empty:
        return
    assert not pr.sigma_ess.empty
    assert pr.sigma_ess.contains(pr.sigma_ac.threshold)
    assert pr.sigma_ess.bottom <= pr.sigma_ac.threshold


def test_classify_examples():
    assert classify_regime(3, 0, -1.0, -1.0, 2.0).mechanism == "AgmonKatoKuroda"
    lav = classify_regime(3, 0, -2.0, -0.4, 2.0)
    assert lav.mechanism == "Lavine" and lav.decay_exponent == pytest.approx(0.8)
    assert classify_regime(3, 0, -2.0, 1.0, 2.0).mechanism == "EmptyEssential"
    akk = classify_regime(3, 0, -2.0, -1.0, 2.0)
    assert akk.mechanism == "AgmonKatoKuroda" and akk.decay_exponent == 2.0
    assert classify_regime(3, 0, -1.0, -1.0, 2.0).decay_exponent == math.inf


@given(
    N=st.integers(2, 9), a=st.floats(-5, -1), b=st.floats(-3, 3), lam=st.floats(0, 50), data=st.data()
)
def test_lavine_only_in_its_regime(N, a, b, lam, data):
    p = data.draw(st.integers(0, N - 1))
    rc = classify_regime(N, p, a, b, lam)
    if rc.mechanism == "Lavine":
        assert a < -1 and b < 0 and abs(b) <= abs(a + 1) / 2


def test_predict_mode_table():
    assert predict_mode("I", 3, 0, -1.0, -1.0, 0.0) == Band(1.0)
    assert predict_mode("I", 3, 0, -1.0, 0.0, 6.0) == Band(6.0)
    assert predict_mode("I", 5, 2, -1.0, 1.0, 6.0).empty
    assert predict_mode("I", 3, 0, -1.0, 1.0, 0.0) == Band(1.0)
    assert predict_mode("I", 3, 0, -2.0, 1.0, 0.0) == Band(0.0)
    assert predict_mode("II", 3, 1, -1.0, -1.0, 2.0) == Band(1.0)
    assert predict_mode("III", 3, 1, -1.0, -1.0, 2.0) == Band(0.0)


def fake_estimate(bottom, verdict="band", cutoff=50.0):
    lv = LadderLevel(160.0, np.array([]), 0, np.array([]), np.array([]), (), bottom)
    return SpectrumEstimate(cutoff, (lv, lv, lv), bottom, 0.0, verdict != "band", verdict)


def test_aggregate_b_zero_tower():
    ests = [fake_estimate(0.01), fake_estimate(2.03), fake_estimate(5.9)]
    preds = [Band(0.0), Band(2.0), Band(6.0)]
    rep = aggregate_modes(ests, preds)
    assert rep.ok and rep.numeric_bottom == 0.01 and rep.predicted == Band(0.0)
    assert rep.modes[2].deviation == pytest.approx(0.1 / 6.0)


def test_aggregate_flags_mismatch_and_empty():
    rep = aggregate_modes([fake_estimate(1.3)], [Band(1.0)])
    assert not rep.ok
    rep = aggregate_modes([fake_estimate(None, "ess empty")], [EMPTY])
    assert rep.ok and rep.numeric_bottom is None
    # a band above the cutoff looks empty numerically
    rep = aggregate_modes([fake_estimate(None, "ess empty", cutoff=50.0)], [Band(80.0)])
    assert rep.ok
    with pytest.raises(ValueError):
        aggregate_modes([], [])


def test_nested_half_lines_union():
    rep = aggregate_modes([fake_estimate(3.0), fake_estimate(1.0)], [Band(3.0), Band(1.0)])
    assert rep.predicted == Band(1.0) and rep.numeric_bottom == 1.0
