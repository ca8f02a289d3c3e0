"""Enrollment and the jammed semantic-concept exchange between Alice, Bob and Eve."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import neural
from .energy import EnergyParams, energy_semantic
from .features import FeatureVector, SemanticLabel, ValidationError
from .phychannel import PAYLOAD_WIDTHS, ChannelParams, Role, demodulate, make_jam_pattern, transmit
from .seeding import derive_seed, make_rng

SECRET_BYTES = 16
PADDING = (0, 0, 0, 0, 0)
ORDINAL_BITS = 3


@dataclass(frozen=True)
class KeyTable:
    secrets: dict[SemanticLabel, bytes]
    enrollment_seed: int

    def __post_init__(self):
        if set(self.secrets) != set(SemanticLabel):
            raise ValidationError("key table needs exactly one secret per label")
        if len(set(self.secrets.values())) != len(self.secrets):
            raise ValidationError("secrets must be pairwise distinct")

    def lookup(self, label: SemanticLabel | None) -> bytes | None:
        return None if label is None else self.secrets[label]

    def to_json(self) -> str:
        body = {"enrollment_seed": self.enrollment_seed,
                "secrets": {label.title: self.secrets[label].hex() for label in SemanticLabel}}
        return json.dumps(body, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "KeyTable":
        body = json.loads(text)
        secrets = {SemanticLabel[name.upper()]: bytes.fromhex(h) for name, h in body["secrets"].items()}
        return cls(secrets, int(body["enrollment_seed"]))


def enroll(seed: int) -> KeyTable:
    """Bind each label to a fresh 128-bit secret drawn from the enrollment stream."""
    rng = make_rng(derive_seed(seed, "enroll"))
    while True:
        raw = rng.bytes(SECRET_BYTES * len(SemanticLabel))
        chunks = [raw[i * SECRET_BYTES:(i + 1) * SECRET_BYTES] for i in range(len(SemanticLabel))]
        if len(set(chunks)) == len(chunks):
            return KeyTable(dict(zip(SemanticLabel, chunks)), seed)


def encode_concept(label: SemanticLabel, width: int = 8) -> np.ndarray:
    """3-bit ordinal (MSB first) + 5 zero padding bits; width 16 repeats that byte."""
    if width not in PAYLOAD_WIDTHS:
        raise ValidationError(f"width must be 8 or 16, got {width}")
    ordinal = int(SemanticLabel(label))
    byte = [(ordinal >> k) & 1 for k in range(ORDINAL_BITS - 1, -1, -1)] + list(PADDING)
    return np.array(byte * (width // 8), dtype=np.uint8)


def decode_concept(bits, width: int = 8) -> SemanticLabel | None:
    """Inverse of :func:`encode_concept`; ``None`` means decode failure."""
    if width not in PAYLOAD_WIDTHS:
        raise ValidationError(f"width must be 8 or 16, got {width}")
    bits = [int(b) for b in bits]
    if len(bits) != width:
        raise ValidationError(f"expected {width} bits, got {len(bits)}")
    first = bits[:8]
    if width == 16 and bits[8:] != first:
        return None
    if tuple(first[ORDINAL_BITS:]) != PADDING:
        return None
    ordinal = int("".join(map(str, first[:ORDINAL_BITS])), 2)
    return SemanticLabel(ordinal) if ordinal < len(SemanticLabel) else None


@dataclass(frozen=True)
class SessionSeeds:
    jam_seed: int
    noise_seed: int

    @classmethod
    def derive(cls, master: int, index: int) -> "SessionSeeds":
        s = derive_seed(master, f"session:{index}")
        return cls(derive_seed(s, "jam"), derive_seed(s, "noise"))


@dataclass(frozen=True)
class SessionOutcome:
    alice_label: SemanticLabel
    bob_label: SemanticLabel | None   # None: decode failure
    eve_label: SemanticLabel | None
    bob_key_match: bool
    eve_key_match: bool
    bits_sent: int
    jam_bits: int
    bob_bit_errors: int = 0
    eve_bit_errors: int = 0


def alice_label(model, features: FeatureVector) -> SemanticLabel:
    if isinstance(model, neural.QuantizedModel):
        return neural.classify_quantized(model, features)[0]
    return neural.classify(model, features)[0]


def exchange(label: SemanticLabel, keytable: KeyTable, params: ChannelParams, seeds: SessionSeeds,
             width: int = 16) -> SessionOutcome:
    """Send an already-classified concept under jamming and score both receivers."""
    bits = encode_concept(label, width)
    jam = make_jam_pattern(seeds.jam_seed, width)
    t = transmit(bits, params, jam, make_rng(seeds.noise_seed))
    bob_bits = demodulate(t, Role.BOB, jam)
    eve_bits = demodulate(t, Role.EVE)
    bob = decode_concept(bob_bits, width)
    eve = decode_concept(eve_bits, width)
    key = keytable.lookup(label)
    return SessionOutcome(
        alice_label=SemanticLabel(label), bob_label=bob, eve_label=eve,
        bob_key_match=keytable.lookup(bob) == key, eve_key_match=keytable.lookup(eve) == key,
        bits_sent=width, jam_bits=t.jam_bits,
        bob_bit_errors=int(np.sum(bob_bits != bits)), eve_bit_errors=int(np.sum(eve_bits != bits)),
    )


def run_session(features: FeatureVector, model, keytable: KeyTable, params: ChannelParams,
                seeds: SessionSeeds, width: int = 16) -> SessionOutcome:
    """Alice classifies ``features`` and sends the concept; Bob cancels the jam, Eve cannot."""
    return exchange(alice_label(model, features), keytable, params, seeds, width)


@dataclass
class CampaignConfig:
    params: ChannelParams = field(default_factory=ChannelParams)
    width: int = 16
    master_seed: int = 42
    energy: EnergyParams = field(default_factory=EnergyParams)


def _rate(k: int, n: int) -> dict:
    p = k / n
    return {"count": k, "rate": p, "stderr": math.sqrt(p * (1 - p) / n)}


def run_campaign(n_sessions: int, dataset, model, keytable: KeyTable,
                 config: CampaignConfig = CampaignConfig()) -> dict:
    """Run ``n_sessions`` independent sessions on dataset rows picked by the master seed.

    Counters are order-independent sums, so sessions could be sharded and merged.
    """
    if n_sessions < 1:
        raise ValidationError("n_sessions must be >= 1")
    if len(dataset) == 0:
        raise ValidationError("dataset is empty")
    if isinstance(model, neural.QuantizedModel):
        labels = neural.predict_quantized(model, dataset.features)
    else:
        labels = neural.predict(model, dataset.features)
    rows = make_rng(derive_seed(config.master_seed, "campaign-rows")).integers(0, len(dataset), n_sessions)

    bob_ok = eve_ok = bob_fail = eve_fail = 0
    bob_bit_err = eve_bit_err = jam_total = 0
    eve_hist = {label.title: 0 for label in SemanticLabel} | {"decode_failure": 0}
    energy_total = 0.0
    for i, row in enumerate(rows):
        out = exchange(SemanticLabel(int(labels[row])), keytable, config.params,
                       SessionSeeds.derive(config.master_seed, i), config.width)
        bob_ok += out.bob_label == out.alice_label
        eve_ok += out.eve_label == out.alice_label
        bob_fail += out.bob_label is None
        eve_fail += out.eve_label is None
        eve_hist["decode_failure" if out.eve_label is None else out.eve_label.title] += 1
        bob_bit_err += out.bob_bit_errors
        eve_bit_err += out.eve_bit_errors
        jam_total += out.jam_bits
        energy_total += energy_semantic(out.bits_sent, out.jam_bits, config.energy)

    n_bits = n_sessions * config.width
    p = config.params
    return {
        "n_sessions": n_sessions,
        "bob": {"concept_recovery": _rate(bob_ok, n_sessions), "decode_failure": _rate(bob_fail, n_sessions),
                "bit_error_rate": bob_bit_err / n_bits},
        "eve": {"concept_recovery": _rate(eve_ok, n_sessions), "decode_failure": _rate(eve_fail, n_sessions),
                "bit_error_rate": eve_bit_err / n_bits, "label_histogram": eve_hist},
        "energy": {"total_uj": energy_total, "mean_per_session_uj": energy_total / n_sessions,
                   "jam_bits_total": jam_total, "bits_total": n_bits},
        "config": {"width": config.width, "master_seed": config.master_seed,
                   "channel": {"snr_db_radio": p.snr_db_radio, "snr_db_optical": p.snr_db_optical,
                               "jam_power_ratio": p.jam_power_ratio, "mode": p.mode.value,
                               "jam_radio": p.jam_radio, "jam_optical": p.jam_optical},
                   "energy": asdict(config.energy)},
    }
