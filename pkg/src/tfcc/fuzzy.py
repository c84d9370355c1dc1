"""Single-output Mamdani fuzzy machinery.

Partitions are families of trapezoids whose memberships sum to one over the
axis. Inference is min-implication / max-aggregation and defuzzification is
the centroid of the clipped, max-aggregated output set.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

CENTROID_GRID_POINTS = 2001
# plateau of an unbounded top label is truncated here for integration
UNBOUNDED_TRUNCATION = 3.0


class FuzzyError(ValueError):
    """Malformed partition, rule table or inference input."""


@dataclass(frozen=True)
class Trapezoid:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise FuzzyError(f"trapezoid breakpoints out of order: {self}")

    def __call__(self, x: float) -> float:
        if x < self.a or x > self.d:
            return 0.0
        if x < self.b:
            return (x - self.a) / (self.b - self.a)
        if x <= self.c:
            return 1.0
        return (self.d - x) / (self.d - self.c)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        out[(xs >= self.b) & (xs <= self.c)] = 1.0
        if self.b > self.a:
            m = (xs >= self.a) & (xs < self.b)
            out[m] = (xs[m] - self.a) / (self.b - self.a)
        if self.d > self.c:
            m = (xs > self.c) & (xs <= self.d)
            out[m] = (self.d - xs[m]) / (self.d - self.c)
        return out


@dataclass(frozen=True)
class FuzzyPartition:
    axis_name: str
    labels: tuple[str, ...]
    breakpoints: tuple[Trapezoid, ...]
    domain_min: float
    domain_max: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.domain_max)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise FuzzyError(f"{self.axis_name!r} has no label {label!r}") from None

    def trapezoid(self, label: str) -> Trapezoid:
        return self.breakpoints[self.index(label)]

    def support(self, label: str) -> tuple[float, float]:
        t = self.trapezoid(label)
        return t.a, t.d

    def integration_upper(self) -> float:
        return self.domain_max if self.bounded else UNBOUNDED_TRUNCATION


@dataclass(frozen=True)
class MembershipVector:
    partition: FuzzyPartition
    degrees: tuple[float, ...]

    def __getitem__(self, label: str) -> float:
        return self.degrees[self.partition.index(label)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.partition.labels, self.degrees))

    @classmethod
    def from_mapping(cls, partition: FuzzyPartition, degrees: Mapping[str, float]):
        unknown = set(degrees) - set(partition.labels)
        if unknown:
            raise FuzzyError(f"labels {sorted(unknown)} not in {partition.axis_name!r}")
        return cls(partition, tuple(float(degrees.get(lab, 0.0)) for lab in partition.labels))


def build_partition(axis_name: str, label_ranges: Sequence[tuple[str, float, float]],
                    unbounded_top: bool = False) -> FuzzyPartition:
    """Turn ordered, overlapping crisp ranges into a Ruspini trapezoid partition.

    The overlap ``[lo_{k+1}, hi_k]`` of neighbouring ranges becomes a linear
    crossover. Ranges that merely abut get a synthetic crossover centred on
    the shared endpoint, 10% as wide as that endpoint's distance from the
    start of the axis. With
    ``unbounded_top`` the last label's upper bound is ignored and its plateau
    extends to +inf.
    """
    if not label_ranges:
        raise FuzzyError("partition needs at least one label")
    labels = [r[0] for r in label_ranges]
    if len(set(labels)) != len(labels):
        raise FuzzyError(f"duplicate labels in {axis_name!r}")
    lo = [float(r[1]) for r in label_ranges]
    hi = [float(r[2]) for r in label_ranges]
    if unbounded_top:
        hi[-1] = math.inf
    n = len(labels)
    for k in range(n):
        if not lo[k] < hi[k]:
            raise FuzzyError(f"{axis_name}: empty range for {labels[k]!r}")
    # crossover interval between label k and k+1
    cross = []
    for k in range(n - 1):
        if lo[k + 1] < lo[k] or hi[k + 1] < hi[k]:
            raise FuzzyError(f"{axis_name}: ranges not monotone at {labels[k + 1]!r}")
        if lo[k + 1] < hi[k]:
            cross.append((lo[k + 1], hi[k]))
        elif lo[k + 1] == hi[k]:
            half = 0.05 * (hi[k] - lo[0])
            cross.append((hi[k] - half, hi[k] + half))
        else:
            raise FuzzyError(f"{axis_name}: gap between {labels[k]!r} and {labels[k + 1]!r}")
    for k in range(len(cross) - 1):
        if cross[k][1] > cross[k + 1][0]:
            raise FuzzyError(f"{axis_name}: more than two labels overlap near {labels[k + 1]!r}")

    traps = []
    for k in range(n):
        a, b = (lo[0], lo[0]) if k == 0 else cross[k - 1]
        c, d = (hi[-1], hi[-1]) if k == n - 1 else cross[k]
        traps.append(Trapezoid(a, b, c, d))
    return FuzzyPartition(axis_name, tuple(labels), tuple(traps), lo[0], hi[-1])


def fuzzify(partition: FuzzyPartition, x: float) -> MembershipVector:
    if math.isnan(x):
        raise FuzzyError(f"NaN input on axis {partition.axis_name!r}")
    x = max(x, partition.domain_min)
    if partition.bounded:
        x = min(x, partition.domain_max)
    degrees = []
    for k, t in enumerate(partition.breakpoints):
        if math.isinf(x):
            degrees.append(1.0 if k == len(partition.labels) - 1 else 0.0)
        else:
            degrees.append(t(x))
    return MembershipVector(partition, tuple(degrees))


@dataclass(frozen=True)
class RuleTable:
    """Complete rule table: one output label per combination of input labels."""

    inputs: tuple[FuzzyPartition, ...]
    output: FuzzyPartition
    rules: Mapping[tuple[str, ...], str] = field(hash=False, compare=False)

    def __post_init__(self):
        if not 1 <= len(self.inputs) <= 3:
            raise FuzzyError("rule tables take one to three inputs")
        expected = set(itertools.product(*(p.labels for p in self.inputs)))
        got = set(self.rules)
        if got != expected:
            missing = sorted(expected - got)[:5]
            extra = sorted(got - expected)[:5]
            raise FuzzyError(f"rule table coverage broken; missing {missing}, unexpected {extra}")
        for antecedent, consequent in self.rules.items():
            if consequent not in self.output.labels:
                raise FuzzyError(f"rule {antecedent} concludes unknown label {consequent!r}")

    def __len__(self):
        return len(self.rules)

    @classmethod
    def from_rows(cls, inputs: Sequence[FuzzyPartition], output: FuzzyPartition,
                  rows: Iterable[tuple[Sequence[Sequence[str]], str]]) -> "RuleTable":
        """Expand aggregated rows (a set of labels per input) into single rules.

        Raises if two rows claim the same input-label tuple.
        """
        rules: dict[tuple[str, ...], str] = {}
        for antecedents, consequent in rows:
            if len(antecedents) != len(inputs):
                raise FuzzyError("row arity does not match the inputs")
            for combo in itertools.product(*antecedents):
                if combo in rules:
                    raise FuzzyError(f"input tuple {combo} appears in more than one row")
                rules[combo] = consequent
        return cls(tuple(inputs), output, rules)


ACCUMULATIONS = ("max", "bsum")


def infer(rules: RuleTable, inputs: Sequence[MembershipVector],
          accumulation: str = "max") -> MembershipVector:
    """Min firing strength per rule, combined per output label.

    ``accumulation="max"`` keeps the strongest rule for each label. ``"bsum"``
    adds the strengths of rules sharing a label and caps the total at 1, so
    mass passing between two input labels with the same conclusion is not
    lost in their crossover.
    """
    if accumulation not in ACCUMULATIONS:
        raise FuzzyError(f"accumulation must be one of {ACCUMULATIONS}, got {accumulation!r}")
    if len(inputs) != len(rules.inputs):
        raise FuzzyError(f"expected {len(rules.inputs)} inputs, got {len(inputs)}")
    for vec, part in zip(inputs, rules.inputs):
        if vec.partition.labels != part.labels or vec.partition.axis_name != part.axis_name:
            raise FuzzyError(f"input on {vec.partition.axis_name!r} does not match {part.axis_name!r}")
    out = dict.fromkeys(rules.output.labels, 0.0)
    lookups = [vec.as_dict() for vec in inputs]
    for antecedent, consequent in rules.rules.items():
        strength = min(lk[label] for lk, label in zip(lookups, antecedent))
        if accumulation == "bsum":
            out[consequent] += strength
        elif strength > out[consequent]:
            out[consequent] = strength
    if accumulation == "bsum":
        out = {k: min(v, 1.0) for k, v in out.items()}
    return MembershipVector.from_mapping(rules.output, out)


@lru_cache(maxsize=64)
def _grid(partition: FuzzyPartition) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(partition.domain_min, partition.integration_upper(), CENTROID_GRID_POINTS)
    mu = np.vstack([t.evaluate(xs) for t in partition.breakpoints])
    return xs, mu


def defuzzify_centroid(output_partition: FuzzyPartition, degrees: MembershipVector) -> float:
    if degrees.partition.labels != output_partition.labels:
        raise FuzzyError("degree vector belongs to another partition")
    w = np.asarray(degrees.degrees, dtype=float)
    if not np.any(w > 0):
        raise FuzzyError("all output degrees are zero; rule table does not cover the input")
    xs, mu = _grid(output_partition)
    agg = np.minimum(mu, w[:, None]).max(axis=0)
    area = np.trapezoid(agg, xs)
    return float(np.trapezoid(xs * agg, xs) / area)
