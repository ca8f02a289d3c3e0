"""Bit-level hybrid radio/optical link with a receiver-generated jamming signal.

Symbols are antipodal (bit 0 -> +1, bit 1 -> -1) with unit energy. A slot on
a channel with linear SNR ``s`` gets Gaussian noise of variance ``1 / (2 s)``,
which makes the clean-channel bit error rate ``Q(sqrt(2 s))``. Jammed slots add
``sqrt(jam_power_ratio) * j`` with ``j`` in {-1, +1} drawn from the jam seed.

The optical channel reuses the same abstraction with its own SNR parameter.

Soft values live on a fixed-point grid of 2**-40 (an ideal ADC). With
magnitudes below 2**12 every sum and difference of grid values is exact in
float64, so subtracting a known jam waveform restores the unjammed
observation bit for bit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .features import ValidationError
from .seeding import make_rng

PAYLOAD_WIDTHS = (8, 16)
GRID = 2.0 ** -40


def to_grid(x) -> np.ndarray:
    return np.rint(np.asarray(x, dtype=np.float64) / GRID) * GRID


class ProtocolError(RuntimeError):
    pass


class Mode(enum.Enum):
    ALL_RADIO = "AllRadio"
    ALL_OPTICAL = "AllOptical"
    HYBRID = "Hybrid"


class Channel(enum.IntEnum):
    RADIO = 0
    OPTICAL = 1


class Role(enum.Enum):
    BOB = "Bob"
    EVE = "Eve"


@dataclass(frozen=True)
class ChannelParams:
    snr_db_radio: float = 23.6
    snr_db_optical: float = 23.6
    jam_power_ratio: float = 4.0
    mode: Mode = Mode.HYBRID
    jam_radio: bool = True
    jam_optical: bool = True

    def __post_init__(self):
        if not self.jam_power_ratio >= 0 or not math.isfinite(self.jam_power_ratio):
            raise ValidationError("jam_power_ratio must be finite and >= 0")
        for v in (self.snr_db_radio, self.snr_db_optical):
            if math.isnan(v) or v == -math.inf:
                raise ValidationError("SNR must be a number (use +inf for a noise-free channel)")
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))

    def snr_linear(self, channel: Channel) -> float:
        db = self.snr_db_radio if channel == Channel.RADIO else self.snr_db_optical
        return math.inf if db == math.inf else 10.0 ** (db / 10.0)

    def jam_enabled(self, channel: Channel) -> bool:
        return self.jam_radio if channel == Channel.RADIO else self.jam_optical


@dataclass(frozen=True)
class JamPattern:
    seed: int
    active: np.ndarray   # bool per slot
    symbols: np.ndarray  # +1/-1 per slot

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class Transmission:
    payload_bits: np.ndarray        # uint8 0/1
    channel_assignment: np.ndarray  # Channel ordinal per bit
    clean_values: np.ndarray        # symbols + noise, before jamming
    soft_values: np.ndarray         # what is observed on the medium
    jam_amplitude: np.ndarray       # per-bit amplitude applied to the jam symbol (0 where unjammed)

    @property
    def jam_bits(self) -> int:
        return int(np.count_nonzero(self.jam_amplitude))


def make_jam_pattern(seed: int, n_bits: int, active_fraction: float = 1.0) -> JamPattern:
    """Expand ``seed`` into ``n_bits`` jam slots with a PCG64 stream.

    The first ``n_bits`` uniform integers in {0, 1} give the symbols
    (0 -> +1); if ``active_fraction < 1`` a second draw of ``n_bits``
    uniforms marks slots active where the uniform is below the fraction.
    """
    if n_bits < 1:
        raise ValidationError("n_bits must be >= 1")
    if not 0.0 <= active_fraction <= 1.0:
        raise ValidationError("active_fraction must be in [0, 1]")
    rng = make_rng(seed)
    symbols = 1.0 - 2.0 * rng.integers(0, 2, size=n_bits)
    if active_fraction >= 1.0:
        active = np.ones(n_bits, dtype=bool)
    else:
        active = rng.random(n_bits) < active_fraction
    return JamPattern(int(seed), active, symbols)


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def ber_for_sinr(sinr_linear: float) -> float:
    """Antipodal-signaling bit error probability ``Q(sqrt(2 * sinr))``."""
    if not sinr_linear >= 0:
        raise ValidationError(f"sinr must be >= 0, got {sinr_linear}")
    if sinr_linear == math.inf:
        return 0.0
    return 0.5 * math.erfc(math.sqrt(sinr_linear))


def eve_sinr(snr_linear: float, jam_power_ratio: float) -> float:
    """Signal over noise-plus-jam power as seen without the jam pattern."""
    if snr_linear == math.inf:
        return math.inf if jam_power_ratio == 0 else 1.0 / jam_power_ratio
    return 1.0 / (1.0 / snr_linear + jam_power_ratio)


def simulate_ber(sinr_linear: float, n_bits: int, rng: np.random.Generator) -> float:
    """Monte-Carlo BER for antipodal symbols in AWGN at the given SINR."""
    if not sinr_linear >= 0:
        raise ValidationError("sinr must be >= 0")
    bits = rng.integers(0, 2, size=n_bits)
    amp = math.sqrt(2.0 * sinr_linear)
    received = amp * (1.0 - 2.0 * bits) + rng.standard_normal(n_bits)
    return float(np.mean((received < 0) != bits.astype(bool)))


def assign_channels(n_bits: int, mode: Mode) -> np.ndarray:
    if mode == Mode.ALL_RADIO:
        return np.full(n_bits, Channel.RADIO, dtype=np.int64)
    if mode == Mode.ALL_OPTICAL:
        return np.full(n_bits, Channel.OPTICAL, dtype=np.int64)
    # even index -> radio, odd -> optical
    return np.arange(n_bits, dtype=np.int64) % 2


def _noise_std(params: ChannelParams, assignment: np.ndarray) -> np.ndarray:
    out = np.empty(len(assignment))
    for ch in Channel:
        snr = params.snr_linear(ch)
        out[assignment == ch] = 0.0 if snr == math.inf else math.sqrt(1.0 / (2.0 * snr))
    return out


def transmit(bits, params: ChannelParams, jam: JamPattern, rng: np.random.Generator) -> Transmission:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1 or len(bits) not in PAYLOAD_WIDTHS:
        raise ValidationError(f"payload must be 8 or 16 bits, got {bits.shape}")
    if len(jam) < len(bits):
        raise ValidationError("jam pattern shorter than payload")
    assignment = assign_channels(len(bits), params.mode)
    symbols = 1.0 - 2.0 * bits
    clean = to_grid(symbols + _noise_std(params, assignment) * rng.standard_normal(len(bits)))
    enabled = np.array([params.jam_enabled(Channel(c)) for c in assignment])
    amp = to_grid(math.sqrt(params.jam_power_ratio) * (jam.active[:len(bits)] & enabled))
    soft = clean + amp * jam.symbols[:len(bits)]
    return Transmission(bits, assignment, clean, soft, amp)


def cancel_jamming(t: Transmission, jam: JamPattern) -> np.ndarray:
    """Subtract the known jam waveform from the observed soft values."""
    return t.soft_values - t.jam_amplitude * jam.symbols[:len(t.soft_values)]


def demodulate(t: Transmission, role: Role, jam: JamPattern | None = None) -> np.ndarray:
    role = Role(role)
    if role == Role.BOB:
        if jam is None:
            raise ProtocolError("Bob needs the jam pattern to demodulate")
        values = cancel_jamming(t, jam)
    else:
        if jam is not None:
            raise ProtocolError("Eve does not hold the jam pattern")
        values = t.soft_values
    return (values < 0).astype(np.uint8)
