import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dashrl.data import build_profile
from dashrl.stats import (
    FEATURE_CLIP,
    FEATURE_NAMES,
    N_FEATURES,
    compute_column_features,
    feature_slot,
)


def feats(values):
    return compute_column_features(build_profile("c", values))


def test_vector_length_and_names():
    assert N_FEATURES == 20
    assert len(set(FEATURE_NAMES)) == 20
    assert feats([1, 2, 3]).shape == (20,)


def test_constant_column_degeneracy():
    v = feats([5, 5, 5, 5])
    assert v[feature_slot("std")] == 0.0
    assert v[feature_slot("skewness")] == 0.0
    assert v[feature_slot("gini_impurity")] == 0.0
    # cardinality 1 under the log1p scaling used for count-like slots
    assert v[feature_slot("cardinality")] == pytest.approx(np.log1p(1))
    assert v[feature_slot("monotonic")] == 1.0


def test_two_equal_categories_gini():
    # Oracle: 1 - sum(p^2) = 1 - 2 * 0.25 = 0.5
    v = feats(["a", "a", "b", "b"])
    assert v[feature_slot("gini_impurity")] == pytest.approx(0.5)
    assert v[feature_slot("entropy")] == pytest.approx(1.0)


def test_uniform_ramp_monotonic_and_symmetric():
    values = list(range(1, 101))
    # Brute-force population moment oracle
    arr = np.array(values, float)
    z = (arr - arr.mean()) / arr.std()
    assert abs((z**3).mean()) < 1e-9
    v = feats(values)
    assert v[feature_slot("monotonic")] == 1.0
    assert abs(v[feature_slot("skewness")]) < 1e-9
    assert v[feature_slot("sortedness")] == 1.0


def test_magnitude_slots_are_sign_log_scaled():
    v = feats([-100.0, -100.0, -100.0])
    assert v[feature_slot("minimum")] == pytest.approx(-np.log1p(100.0))
    assert v[feature_slot("mean")] == pytest.approx(-np.log1p(100.0))


def test_quantitative_type_onehot():
    v = feats([1.0, 2.0])
    assert v[feature_slot("type_q")] == 1.0
    assert v[feature_slot("type_n")] == 0.0
    v = feats(["x", "y"])
    assert v[feature_slot("type_n")] == 1.0


def test_temporal_min_max_use_epoch_seconds():
    v = feats(["2020-01-01", "2020-06-01", "2020-01-01"])
    assert v[feature_slot("type_t")] == 1.0
    # epochs are huge, so the sign-log scaled min/max hit the clip bound
    assert v[feature_slot("minimum")] == FEATURE_CLIP
    assert v[feature_slot("maximum")] == FEATURE_CLIP
    # moments run over the two category counts (2, 1)
    assert v[feature_slot("std")] == pytest.approx(np.log1p(0.5))


def test_nominal_moments_over_frequency_counts():
    # counts are (3, 1): population std = sqrt(1) = 1 -> log1p(1)
    v = feats(["a", "a", "a", "b"])
    assert v[feature_slot("std")] == pytest.approx(np.log1p(1.0))
    assert v[feature_slot("minimum")] == pytest.approx(np.log1p(1.0))
    assert v[feature_slot("maximum")] == pytest.approx(np.log1p(3.0))


def test_outlier_ratio_iqr_oracle():
    values = [10.0] * 99 + [1000.0]
    arr = np.array(values)
    q1, q3 = np.percentile(arr, [25, 75])
    expected = float(((arr < q1 - 1.5 * (q3 - q1)) | (arr > q3 + 1.5 * (q3 - q1))).mean())
    assert feats(values)[feature_slot("outlier_ratio")] == pytest.approx(expected)


def test_trend_slope_matches_polyfit():
    values = [3.0 * i + 1 for i in range(50)]
    expected = np.polyfit(np.arange(50), np.array(values), 1)[0]
    assert feats(values)[feature_slot("trend_slope")] == pytest.approx(expected)


def test_all_missing_column_is_finite():
    v = feats([None, "", "nan"])
    assert np.all(np.isfinite(v))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.one_of(
            st.floats(allow_nan=False, allow_infinity=False, width=32),
            st.none(),
        ),
        min_size=1,
        max_size=60,
    )
)
def test_features_always_finite_and_clipped(values):
    v = feats(values)
    assert v.shape == (N_FEATURES,)
    assert np.all(np.isfinite(v))
    assert np.all(np.abs(v) <= FEATURE_CLIP)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.text(max_size=8), min_size=1, max_size=40))
def test_nominal_features_finite(values):
    v = feats(values)
    assert np.all(np.isfinite(v))
    assert np.all(np.abs(v) <= FEATURE_CLIP)


def test_determinism():
    values = [1.5, 2.5, None, 9.0, 2.5]
    a, b = feats(values), feats(values)
    assert np.array_equal(a, b)
