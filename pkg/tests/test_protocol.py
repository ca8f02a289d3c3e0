import itertools
import math

import numpy as np
import pytest

from hywban import pipeline
from hywban.config import Config
from hywban.features import FeatureVector, SemanticLabel, ValidationError
from hywban.phychannel import ChannelParams
from hywban.protocol import (
    CampaignConfig, KeyTable, SessionSeeds, decode_concept, encode_concept, enroll, exchange, run_campaign,
    run_session,
)
from hywban.synthgen import Dataset

INF = math.inf


def test_enroll_deterministic_and_distinct():
    a, b = enroll(7), enroll(7)
    assert a == b
    assert len(a.secrets) == 6
    assert len(set(a.secrets.values())) == 6
    assert all(len(s) == 16 for s in a.secrets.values())
    assert enroll(8).secrets != a.secrets


def test_keytable_round_trip():
    t = enroll(3)
    assert KeyTable.from_json(t.to_json()) == t


def test_keytable_rejects_duplicates():
    with pytest.raises(ValidationError):
        KeyTable({label: b"\0" * 16 for label in SemanticLabel}, 0)


def test_encode_examples():
    assert list(encode_concept(SemanticLabel.FULL, 8)) == [0] * 8
    assert list(encode_concept(SemanticLabel.UNSTABLE, 8)) == [1, 0, 0, 0, 0, 0, 0, 0]
    c16 = encode_concept(SemanticLabel.CRITICAL, 16)
    assert list(c16[:8]) == list(c16[8:]) == [0, 1, 1, 0, 0, 0, 0, 0]


@pytest.mark.parametrize("width", [8, 16])
def test_round_trip_all_labels(width):
    for label in SemanticLabel:
        assert decode_concept(encode_concept(label, width), width) is label


def test_width_validation():
    with pytest.raises(ValidationError):
        encode_concept(SemanticLabel.FULL, 12)
    with pytest.raises(ValidationError):
        decode_concept([0] * 8, 16)


def test_exhaustive_8bit_decode_rate():
    valid = sum(decode_concept(bits, 8) is not None for bits in itertools.product((0, 1), repeat=8))
    assert valid == 6
    assert valid / 256 == pytest.approx(0.0234, abs=1e-4)


def test_decode_soundness_16bit():
    valid_words = {tuple(encode_concept(label, 16)) for label in SemanticLabel}
    rng = np.random.default_rng(0)
    for word in valid_words:
        for k in range(16):
            flipped = list(word)
            flipped[k] ^= 1
            assert decode_concept(flipped, 16) is None
    for _ in range(5000):
        word = tuple(int(b) for b in rng.integers(0, 2, 16))
        got = decode_concept(word, 16)
        assert (got is not None) == (word in valid_words)


def test_ordinals_above_five_rejected():
    assert decode_concept([1, 1, 0, 0, 0, 0, 0, 0], 8) is None
    assert decode_concept([1, 1, 1, 0, 0, 0, 0, 0], 8) is None


def test_security_off_noise_free():
    keys = enroll(1)
    for i, label in enumerate(SemanticLabel):
        out = exchange(label, keys, ChannelParams(INF, INF, 0.0), SessionSeeds(i, i))
        assert out.bob_key_match and out.eve_key_match
        assert out.jam_bits == 0


def test_jammed_noise_free_sessions():
    keys = enroll(1)
    eve_hits = 0
    n = 2000
    for i in range(n):
        label = SemanticLabel(i % 6)
        out = exchange(label, keys, ChannelParams(INF, INF, 4.0), SessionSeeds.derive(5, i), width=8)
        assert out.bob_key_match and out.bob_label is label
        assert out.eve_key_match == (out.eve_label == label)
        eve_hits += out.eve_key_match
    assert eve_hits / n < 0.05


def test_run_session_uses_model(model):
    keys = enroll(2)
    f = FeatureVector(30.0, 0.085, 0.0, 75.0, 36.0)
    out = run_session(f, model, keys, ChannelParams(), SessionSeeds(1, 2))
    assert out.alice_label is SemanticLabel.FULL
    assert out.bob_label is SemanticLabel.FULL and out.bob_key_match
    assert out.bits_sent == 16 and out.jam_bits == 16


def test_bob_correct_at_min_snr(model, dataset):
    keys = enroll(4)
    params = ChannelParams(17.57, 17.57, 4.0)
    for i in range(2000):
        out = exchange(SemanticLabel(i % 6), keys, params, SessionSeeds.derive(9, i), width=16)
        assert out.bob_label == out.alice_label


def test_campaign_defaults(model, dataset, golden):
    result = pipeline.simulate(Config(), model, dataset)
    assert result["n_sessions"] == 10_000
    assert result["bob"]["concept_recovery"]["rate"] == 1.0
    assert result["eve"]["concept_recovery"]["rate"] <= 0.25
    assert result["eve"]["concept_recovery"]["rate"] == golden["campaign_eve_recovery"]
    assert sum(result["eve"]["label_histogram"].values()) == 10_000
    assert result["energy"]["mean_per_session_uj"] == pytest.approx(4.8)


def test_campaign_jam_off_equal(model, dataset):
    cfg = CampaignConfig(params=ChannelParams(jam_power_ratio=0.0), master_seed=3)
    result = run_campaign(2000, dataset, model, enroll(1), cfg)
    assert result["bob"]["concept_recovery"] == result["eve"]["concept_recovery"]
    assert result["energy"]["jam_bits_total"] == 0


def test_campaign_deterministic(model, dataset):
    cfg = CampaignConfig(params=ChannelParams(snr_db_radio=2.0, snr_db_optical=2.0, jam_power_ratio=1.0),
                         width=8, master_seed=11)
    a = run_campaign(500, dataset, model, enroll(1), cfg)
    b = run_campaign(500, dataset, model, enroll(1), cfg)
    assert a == b


def test_campaign_quantized_model(qmodel, dataset):
    result = run_campaign(200, dataset, qmodel, enroll(1))
    assert result["bob"]["concept_recovery"]["rate"] == 1.0


def test_campaign_validation(model, dataset):
    with pytest.raises(ValidationError):
        run_campaign(0, dataset, model, enroll(1))
    with pytest.raises(ValidationError):
        run_campaign(5, Dataset(np.zeros((0, 5)), []), model, enroll(1))
