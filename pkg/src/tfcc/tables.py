"""Bundled partitions and rule bases for both inference stages."""
from __future__ import annotations

from typing import Any, Mapping

from .fuzzy import FuzzyError, FuzzyPartition, RuleTable, build_partition

# crisp ranges per axis: (label, lo, hi)
TRANSMISSION_RANGES = [("VL", 0.0, 0.45), ("L", 0.4, 0.6), ("M", 0.55, 0.75), ("H", 0.7, 1.0)]
LATENCY_RANGES = [("VLD", 0.0, 0.45), ("LD", 0.4, 0.6), ("AD", 0.55, 1.0), ("HD", 1.0, float("inf"))]
ENERGY_RANGES = [("VLE", 0.0, 0.45), ("LE", 0.4, 0.6), ("ME", 0.55, 0.75), ("HE", 0.7, 1.0)]
TRUST_RANGES = [("VLT", 0.0, 0.45), ("LT", 0.4, 0.6), ("MT", 0.55, 0.75), ("HT", 0.7, 1.0)]
CONGESTION_RANGES = [("VLC", 0.0, 0.3), ("LC", 0.25, 0.55), ("MC", 0.5, 0.75), ("HC", 0.7, 1.0)]
SIGMA_RANGES = [("VL", 0.0, 0.2), ("L", 0.15, 0.5), ("M", 0.45, 0.8), ("H", 0.75, 1.0)]

TRANSMISSION = build_partition("transmission_ratio", TRANSMISSION_RANGES)
LATENCY = build_partition("latency_ratio", LATENCY_RANGES, unbounded_top=True)
ENERGY = build_partition("energy_ratio", ENERGY_RANGES)
TRUST = build_partition("trust", TRUST_RANGES)
# trust classes admitted to the congestion stage
BENEVOLENT_TRUST = build_partition("benevolent_trust", TRUST_RANGES[2:])
CONGESTION = build_partition("congestion_index", CONGESTION_RANGES)
SIGMA_CT = build_partition("sigma_ct", SIGMA_RANGES)

ALL_ALPHA = ("VL", "L", "M", "H")
ALL_TAU = ("VLD", "LD", "AD", "HD")

TRUST_ROWS = [
    ((ALL_ALPHA, ALL_TAU, ("VLE", "LE")), "VLT"),
    ((("VL", "L"), ("VLD", "HD"), ("ME",)), "VLT"),
    ((("VL", "L"), ("VLD", "HD"), ("HE",)), "VLT"),
    ((("VL", "L"), ("AD", "LD"), ("ME",)), "MT"),
    ((("VL", "L"), ("AD", "LD"), ("HE",)), "MT"),
    ((("M", "H"), ("AD", "LD"), ("ME",)), "HT"),
    ((("M", "H"), ("AD", "LD"), ("HE",)), "HT"),
    ((("M", "H"), ("VLD", "HD"), ("ME",)), "LT"),
    ((("M", "H"), ("VLD", "HD"), ("HE",)), "LT"),
]

SIGMA_ROWS = [
    ((("VLC",), ("MT", "HT")), "VL"),
    ((("LC",), ("MT", "HT")), "L"),
    ((("MC",), ("MT",)), "M"),
    ((("HC",), ("MT",)), "H"),
    ((("MC",), ("HT",)), "M"),
    ((("HC",), ("HT",)), "H"),
]

TRUST_RULES = RuleTable.from_rows((TRANSMISSION, LATENCY, ENERGY), TRUST, TRUST_ROWS)
SIGMA_RULES = RuleTable.from_rows((CONGESTION, BENEVOLENT_TRUST), SIGMA_CT, SIGMA_ROWS)

# accumulation used by both inference stages; see fuzzy.infer
STAGE_ACCUMULATION = "bsum"

ALL_PARTITIONS = (TRANSMISSION, LATENCY, ENERGY, TRUST, BENEVOLENT_TRUST, CONGESTION, SIGMA_CT)


def load_partition(spec: Mapping[str, Any]) -> FuzzyPartition:
    """Build a partition from a config mapping.

    Expected keys: ``axis`` and ``ranges`` (list of ``[label, lo, hi]``),
    optionally ``unbounded_top``.
    """
    try:
        ranges = [(str(r[0]), float(r[1]), float(r[2])) for r in spec["ranges"]]
        return build_partition(str(spec["axis"]), ranges, bool(spec.get("unbounded_top", False)))
    except (KeyError, IndexError, TypeError) as exc:
        raise FuzzyError(f"malformed partition definition: {exc}") from exc


def load_rule_table(inputs, output, rows) -> RuleTable:
    """Build a rule table from config rows of the form ``[[labels...], ..., out]``."""
    parsed = []
    for row in rows:
        *antecedents, consequent = row
        parsed.append(([tuple(a) if isinstance(a, (list, tuple)) else (a,) for a in antecedents],
                       consequent))
    return RuleTable.from_rows(inputs, output, parsed)
