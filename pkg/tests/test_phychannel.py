import math

import numpy as np
import pytest
from scipy import integrate

from hywban.features import ValidationError
from hywban.phychannel import (
    GRID, ChannelParams, Mode, ProtocolError, Role, assign_channels, ber_for_sinr, cancel_jamming, demodulate,
    eve_sinr, make_jam_pattern, simulate_ber, transmit,
)
from hywban.protocol import SemanticLabel, encode_concept
from hywban.seeding import make_rng

INF = math.inf


def q_by_quadrature(x):
    return integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), x, INF, epsabs=1e-15)[0]


def test_jam_pattern_reproducible():
    a, b = make_jam_pattern(3, 16), make_jam_pattern(3, 16)
    assert np.array_equal(a.symbols, b.symbols) and np.array_equal(a.active, b.active)
    assert set(np.unique(a.symbols)) <= {-1.0, 1.0}
    assert a.active.all()


def test_jam_pattern_seed_collisions():
    patterns = {tuple(make_jam_pattern(s, 128).symbols) for s in range(500)}
    assert len(patterns) == 500


def test_jam_pattern_rejects_empty():
    with pytest.raises(ValidationError):
        make_jam_pattern(1, 0)


def test_jam_pattern_partial_activation():
    p = make_jam_pattern(9, 10_000, active_fraction=0.25)
    assert abs(p.active.mean() - 0.25) < 0.02


def test_ber_examples():
    assert ber_for_sinr(0.0) == 0.5
    assert ber_for_sinr(INF) == 0.0
    assert ber_for_sinr(1e6) < 1e-300 or ber_for_sinr(1e6) == 0.0
    assert ber_for_sinr(4.0) == pytest.approx(0.00234, abs=1e-5)
    for s in (0.5, 1.0, 4.0, 9.0):
        assert ber_for_sinr(s) == pytest.approx(q_by_quadrature(math.sqrt(2 * s)), rel=1e-8)
    with pytest.raises(ValidationError):
        ber_for_sinr(-0.1)


def test_ber_strictly_decreasing():
    grid = np.linspace(0, 12, 200)
    vals = [ber_for_sinr(s) for s in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_channel_assignment():
    hybrid = assign_channels(8, Mode.HYBRID)
    assert list(hybrid) == [0, 1] * 4
    assert (hybrid == 0).sum() == 4
    assert set(assign_channels(16, Mode.ALL_OPTICAL)) == {1}
    assert set(assign_channels(16, Mode.ALL_RADIO)) == {0}


def test_noise_free_no_jam_is_clean():
    bits = np.array([0, 1, 1, 0, 1, 0, 0, 1], dtype=np.uint8)
    t = transmit(bits, ChannelParams(INF, INF, 0.0), make_jam_pattern(1, 8), make_rng(0))
    assert np.array_equal(t.soft_values, 1.0 - 2.0 * bits)
    assert t.jam_bits == 0


def test_transmit_rejects_length():
    with pytest.raises(ValidationError):
        transmit(np.zeros(12, dtype=np.uint8), ChannelParams(), make_jam_pattern(1, 16), make_rng(0))


def test_soft_value_fixture(golden):
    t = transmit(encode_concept(SemanticLabel.MOTION, 16), ChannelParams(), make_jam_pattern(7, 16), make_rng(7))
    assert [float(v) for v in t.soft_values] == golden["soft_values_seed7"]


@pytest.mark.parametrize("ratio", [0.0, 0.5, 4.0, 8.0])
@pytest.mark.parametrize("snr_db", [-10.0, 0.0, 17.57, 23.6])
def test_cancellation_bit_exact(ratio, snr_db):
    rng = make_rng(int(ratio * 10 + snr_db + 100))
    for i in range(50):
        bits = rng.integers(0, 2, 16).astype(np.uint8)
        jam = make_jam_pattern(i, 16)
        params = ChannelParams(snr_db, snr_db - 3, ratio)
        t = transmit(bits, params, jam, make_rng(i))
        unjammed = transmit(bits, ChannelParams(snr_db, snr_db - 3, 0.0), jam, make_rng(i))
        assert np.array_equal(cancel_jamming(t, jam), unjammed.soft_values)
        assert np.array_equal(unjammed.soft_values, t.clean_values)
        assert np.all(np.abs(t.soft_values / GRID - np.rint(t.soft_values / GRID)) == 0)


def test_noise_free_bob_exact_any_power():
    for ratio in (0.1, 1.0, 4.0, 100.0):
        for seed in range(20):
            bits = make_rng(seed).integers(0, 2, 8).astype(np.uint8)
            jam = make_jam_pattern(seed, 8)
            t = transmit(bits, ChannelParams(INF, INF, ratio), jam, make_rng(seed))
            assert np.array_equal(demodulate(t, Role.BOB, jam), bits)


def test_role_rules():
    jam = make_jam_pattern(1, 8)
    t = transmit(np.zeros(8, dtype=np.uint8), ChannelParams(), jam, make_rng(0))
    with pytest.raises(ProtocolError):
        demodulate(t, Role.BOB)
    with pytest.raises(ProtocolError):
        demodulate(t, Role.EVE, jam)


def _campaign_bits(params, n_frames, seed):
    """Bob and Eve bit errors over ``n_frames`` 16-bit frames."""
    rng = make_rng(seed)
    bob = eve = jammed_eve = jammed = 0
    for i in range(n_frames):
        bits = rng.integers(0, 2, 16).astype(np.uint8)
        jam = make_jam_pattern(seed * 1_000_003 + i, 16)
        t = transmit(bits, params, jam, rng)
        b = demodulate(t, Role.BOB, jam) != bits
        e = demodulate(t, Role.EVE) != bits
        bob += b.sum()
        eve += e.sum()
        mask = t.jam_amplitude > 0
        jammed_eve += e[mask].sum()
        jammed += mask.sum()
    return bob, eve, jammed_eve, jammed


def test_noise_free_eve_near_half():
    n_frames = 6250  # 10^5 bits
    bob, eve, jammed_eve, jammed = _campaign_bits(ChannelParams(INF, INF, 4.0), n_frames, 1)
    assert bob == 0
    p = jammed_eve / jammed
    assert abs(p - 0.5) < 5 * math.sqrt(0.25 / jammed)


def test_eve_dominates_bob():
    params = ChannelParams(3.0, 3.0, 1.0)
    bob, eve, _, _ = _campaign_bits(params, 6250, 2)
    n = 6250 * 16
    p_bob = ber_for_sinr(10 ** 0.3)
    assert abs(bob / n - p_bob) < 3 * math.sqrt(p_bob * (1 - p_bob) / n)
    assert eve / n > bob / n + 10 * math.sqrt(p_bob / n)


def test_jam_off_roles_identical():
    bob, eve, _, _ = _campaign_bits(ChannelParams(3.0, 3.0, 0.0), 2000, 3)
    assert bob == eve


def test_eve_ber_non_decreasing_in_jam():
    rates = []
    for ratio in (0.0, 0.25, 1.0, 2.0, 4.0, 8.0):
        _, eve, _, _ = _campaign_bits(ChannelParams(6.0, 6.0, ratio), 2000, 4)
        rates.append(eve / (2000 * 16))
    slack = 2 * math.sqrt(0.25 / (2000 * 16))
    assert all(b >= a - slack for a, b in zip(rates, rates[1:]))
    assert rates[-1] > rates[0]


@pytest.mark.parametrize("sinr", [0.0, 1.0, 4.0, 9.0])
def test_monte_carlo_ber_matches_q(sinr):
    n = 400_000
    p = ber_for_sinr(sinr)
    emp = simulate_ber(sinr, n, make_rng(int(sinr) + 1))
    se = math.sqrt(max(p * (1 - p), 1e-12) / n)
    assert abs(emp - p) <= 3 * se


def test_eve_sinr():
    assert eve_sinr(INF, 0.0) == INF
    assert eve_sinr(INF, 4.0) == 0.25
    assert eve_sinr(100.0, 0.0) == pytest.approx(100.0)
    assert eve_sinr(100.0, 4.0) < 0.25
