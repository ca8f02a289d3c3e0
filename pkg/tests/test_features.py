import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hywban.features import (
    BinaryFeatures, FeatureVector, SemanticLabel, Thresholds, ValidationError, binarize, binarize_array,
    classify_semantics, enumerate_rule_table, label_features, rule_table_counts,
)

MEANS = dict(snr_db=23.6, input_power_mw=0.07, acceleration_ms2=0.0, heart_rate_bpm=60.0, body_temp_c=36.0)


def at_means(**kw):
    return FeatureVector(**{**MEANS, **kw})


def oracle_label(snr, lpw, acc, hr, tmp):
    """Independent re-reading of the label table as an ordered list of predicates."""
    rows = [
        ("Full", snr and lpw),
        ("Wide", snr and not lpw),
        ("Motion", (snr or lpw) and acc),
        ("Critical", (hr or tmp) and not lpw),
        ("Unstable", (not snr) or (not lpw)),
    ]
    for name, hit in rows:
        if hit:
            return name
    return "Reduced"


def test_label_ordinals_fixed():
    assert [label.title for label in SemanticLabel] == ["Full", "Wide", "Motion", "Critical", "Unstable", "Reduced"]
    assert [int(label) for label in SemanticLabel] == list(range(6))


def test_binarize_examples():
    assert binarize(at_means(snr_db=23.6)).high_snr
    assert not binarize(at_means(input_power_mw=0.02)).high_lpw
    assert binarize(at_means(heart_rate_bpm=55)).abn_hr
    assert not binarize(at_means(body_temp_c=37.0)).high_tmp


def test_boundaries():
    t = Thresholds()
    assert binarize(at_means(snr_db=19.0), t).high_snr
    assert binarize(at_means(input_power_mw=0.05), t).high_lpw
    assert binarize(at_means(acceleration_ms2=-0.1), t).high_acc
    assert not binarize(at_means(heart_rate_bpm=60.0), t).abn_hr
    assert not binarize(at_means(heart_rate_bpm=110.0), t).abn_hr
    assert binarize(at_means(heart_rate_bpm=110.5), t).abn_hr
    assert binarize(at_means(body_temp_c=37.01), t).high_tmp


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_binarize_rejects_non_finite(bad):
    with pytest.raises(ValidationError):
        binarize(at_means(snr_db=bad))
    with pytest.raises(ValidationError):
        binarize_array(np.array([[bad, 0.07, 0, 60, 36]]))


def test_thresholds_validated():
    with pytest.raises(ValidationError):
        Thresholds(hr_low_bpm=110, hr_high_bpm=60)
    with pytest.raises(ValidationError):
        Thresholds(snr_db=math.nan)


@pytest.mark.parametrize("flags,label", [
    ((1, 1, 0, 0, 0), SemanticLabel.FULL),
    ((0, 0, 0, 0, 0), SemanticLabel.UNSTABLE),
    ((0, 1, 1, 0, 0), SemanticLabel.MOTION),
    ((0, 0, 0, 1, 0), SemanticLabel.CRITICAL),
    ((1, 0, 1, 1, 1), SemanticLabel.WIDE),
])
def test_classify_examples(flags, label):
    assert classify_semantics(BinaryFeatures(*map(bool, flags))) is label


def test_rule_table_matches_oracle():
    table = enumerate_rule_table()
    assert len(table) == 32
    for combo in itertools.product((False, True), repeat=5):
        assert table[BinaryFeatures(*combo)].title == oracle_label(*combo)


def test_rule_table_counts():
    counts = rule_table_counts()
    assert sum(counts.values()) == 32
    # brute-force recount with the independent oracle
    expected = {}
    for combo in itertools.product((False, True), repeat=5):
        name = oracle_label(*combo)
        expected[name] = expected.get(name, 0) + 1
    assert {k.title: v for k, v in counts.items() if v} == expected
    assert expected == {"Full": 8, "Wide": 8, "Motion": 4, "Critical": 6, "Unstable": 6}
    assert counts[SemanticLabel.REDUCED] == 0


def test_reduced_unreachable():
    assert SemanticLabel.REDUCED not in set(enumerate_rule_table().values())


finite = dict(allow_nan=False, allow_infinity=False)
feature_vectors = st.builds(
    FeatureVector,
    st.floats(0, 40, **finite), st.floats(0, 0.2, **finite), st.floats(-1, 1, **finite),
    st.floats(30, 150, **finite), st.floats(30, 45, **finite),
)


@given(feature_vectors)
def test_vectorized_matches_scalar(f):
    x = f.as_array()[None, :]
    assert tuple(binarize_array(x)[0]) == tuple(bool(v) for v in binarize(f).as_tuple())
    assert label_features(x)[0] == classify_semantics(binarize(f))


@given(feature_vectors, st.floats(-1e-3, 1e-3, **finite))
def test_label_stable_under_small_perturbation(f, eps):
    t = Thresholds()
    g = FeatureVector(f.snr_db + eps, f.input_power_mw, f.acceleration_ms2, f.heart_rate_bpm + eps,
                      f.body_temp_c + eps)
    if binarize(f, t) == binarize(g, t):
        assert classify_semantics(binarize(f, t)) == classify_semantics(binarize(g, t))
