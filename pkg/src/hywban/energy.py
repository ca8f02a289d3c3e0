"""Transmission-energy accounting: semantic concepts with jamming vs. ECDH key exchange.

Only radiated bits are counted. ECDH computation energy is not modeled.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

from .features import ValidationError

REPORT_COLUMNS = ("scheme", "bits", "jam_bits", "energy_uj", "ratio_vs_ecdh160")


@dataclass(frozen=True)
class EnergyParams:
    e_bit_uj: float = 0.1
    e_jam_uj: float = 0.2
    ecdh_messages: int = 1

    def __post_init__(self):
        if self.e_bit_uj < 0 or self.e_jam_uj < 0 or self.ecdh_messages < 0:
            raise ValidationError("energy parameters must be non-negative")


def energy_semantic(n_bits: int, jam_bits: int, p: EnergyParams = EnergyParams()) -> float:
    if n_bits < 0 or jam_bits < 0:
        raise ValidationError("bit counts must be non-negative")
    if jam_bits > n_bits:
        raise ValidationError("cannot jam more bits than are sent")
    return n_bits * p.e_bit_uj + jam_bits * p.e_jam_uj


def energy_ecdh(key_bits: int, p: EnergyParams = EnergyParams()) -> float:
    if key_bits < 1:
        raise ValidationError("key_bits must be >= 1")
    return p.ecdh_messages * key_bits * p.e_bit_uj


@dataclass(frozen=True)
class Scheme:
    """One bar of the comparison: ``kind`` is ``"sc"`` or ``"ecdh"``."""
    kind: str
    bits: int
    jam_bits: int = 0

    @property
    def name(self) -> str:
        if self.kind == "ecdh":
            return f"ECDH-{self.bits}"
        return f"SC{self.bits}" + (f"+jam{self.jam_bits}" if self.jam_bits else "")


DEFAULT_SCHEMES = (
    Scheme("sc", 8), Scheme("sc", 16), Scheme("sc", 8, 8), Scheme("sc", 16, 16),
    Scheme("ecdh", 160), Scheme("ecdh", 256),
)


@dataclass(frozen=True)
class ReportRow:
    scheme: str
    bits: int
    jam_bits: int
    energy_uj: float
    ratio_vs_ecdh160: float | None


def _energy(s: Scheme, p: EnergyParams) -> float:
    if s.kind == "ecdh":
        return energy_ecdh(s.bits, p)
    if s.kind == "sc":
        return energy_semantic(s.bits, s.jam_bits, p)
    raise ValidationError(f"unknown scheme kind {s.kind!r}")


def compare_report(configs=DEFAULT_SCHEMES, p: EnergyParams = EnergyParams(), digits: int = 9) -> list[ReportRow]:
    """Energy per scheme, sorted ascending (ties by name).

    Values are rounded to ``digits`` decimals so that e.g. 8*0.1 + 8*0.2
    reports as 2.4. The ratio is ``None`` when ECDH-160 costs nothing.
    """
    ref = round(energy_ecdh(160, p), digits)
    rows = []
    for s in configs:
        e = round(_energy(s, p), digits)
        ratio = round(e / ref, digits) if ref > 0 else None
        rows.append(ReportRow(s.name, s.bits, s.jam_bits, e, ratio))
    return sorted(rows, key=lambda r: (r.energy_uj, r.scheme))


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.scheme, r.bits, r.jam_bits, repr(r.energy_uj),
                    "" if r.ratio_vs_ecdh160 is None else repr(r.ratio_vs_ecdh160)])
    return buf.getvalue()


def report_json(rows) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
