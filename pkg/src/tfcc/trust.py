"""Per-link trust: behavioural ratios, stage-1 inference and malicious-node tests.

Trust is directed. ``TrustRecord(evaluator=j, subject=i)`` holds the trust that
node ``j`` places in node ``i``, measured from the packets ``j`` sends to ``i``.
Forwarding ``j -> i`` is allowed only while that record is trusted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from . import tables
from .fuzzy import defuzzify_centroid, fuzzify, infer

DEFAULT_THRESHOLD = 0.5
# prior for links without evidence; lowest value that is fully MT
INITIAL_TRUST = 0.6
# latency ratio ceiling; also used when the subject acknowledged nothing
LATENCY_RATIO_CAP = 3.0


class DormantLink(Exception):
    """No packets were sent on the link during the window; trust is left unchanged."""


class UnknownNode(KeyError):
    pass


@dataclass(frozen=True)
class LinkStatsWindow:
    evaluator: int
    subject: int
    sent: int
    acked: int
    subject_latency: float | None  # mean ack latency of the subject, None without acks
    peer_latency: float | None  # mean latency of the evaluator's other neighbours
    window_start: float
    window_end: float

    def __post_init__(self):
        if self.sent < 0 or self.acked < 0:
            raise ValueError("packet counts must be non-negative")
        for lat in (self.subject_latency, self.peer_latency):
            if lat is not None and lat < 0:
                raise ValueError("latencies must be non-negative")
        if not self.window_end > self.window_start:
            raise ValueError("window must have positive length")


@dataclass(frozen=True)
class TrustMetrics:
    transmission_ratio: float
    latency_ratio: float
    energy_ratio: float
    overflow: bool = False

    @property
    def fuzzifier_transmission(self) -> float:
        """Transmission ratio as fed to the fuzzifier; more acks than packets counts as zero."""
        return 0.0 if self.overflow else min(self.transmission_ratio, 1.0)


@dataclass(frozen=True)
class TrustRecord:
    evaluator: int
    subject: int
    value: float
    trusted: bool
    last_update: float | None = None  # None while the value is still the prior

    @property
    def has_evidence(self) -> bool:
        return self.last_update is not None


def compute_trust_metrics(window: LinkStatsWindow, battery_now: float,
                          battery_full: float) -> TrustMetrics:
    if battery_full <= 0:
        raise ValueError("full battery level must be positive")
    if window.sent == 0:
        raise DormantLink(f"no traffic from {window.evaluator} to {window.subject}")
    alpha = window.acked / window.sent
    if window.acked == 0 or window.subject_latency is None:
        tau = LATENCY_RATIO_CAP
    elif not window.peer_latency:
        tau = 1.0
    else:
        tau = min(window.subject_latency / window.peer_latency, LATENCY_RATIO_CAP)
    beta = min(max(battery_now / battery_full, 0.0), 1.0)
    return TrustMetrics(alpha, tau, beta, overflow=window.acked > window.sent)


def evaluate_trust(metrics: TrustMetrics) -> float:
    vectors = [
        fuzzify(tables.TRANSMISSION, metrics.fuzzifier_transmission),
        fuzzify(tables.LATENCY, min(metrics.latency_ratio, LATENCY_RATIO_CAP)),
        fuzzify(tables.ENERGY, metrics.energy_ratio),
    ]
    return defuzzify_centroid(tables.TRUST, infer(tables.TRUST_RULES, vectors,
                                                     tables.STAGE_ACCUMULATION))


def classify_links(records: Iterable[TrustRecord], threshold: float = DEFAULT_THRESHOLD):
    trusted, untrusted = [], []
    for rec in records:
        (trusted if rec.value >= threshold else untrusted).append(rec)
    return trusted, untrusted


class TrustTable:
    """Trust records for every directed one-hop pair of a topology."""

    def __init__(self, neighbors: Mapping[int, Iterable[int]], threshold: float = DEFAULT_THRESHOLD,
                 initial: float = INITIAL_TRUST, exempt: Iterable[int] = ()):
        self.threshold = threshold
        self.initial = initial
        self.neighbors = {n: tuple(sorted(nb)) for n, nb in neighbors.items()}
        # nodes that are never evaluated (the sink)
        self.exempt = frozenset(exempt)
        self._records: dict[tuple[int, int], TrustRecord] = {}
        for j, nbs in self.neighbors.items():
            for i in nbs:
                value = 1.0 if i in self.exempt else initial
                self._records[(j, i)] = TrustRecord(j, i, value, value >= threshold)

    def __iter__(self):
        return iter(self._records.values())

    def __len__(self):
        return len(self._records)

    def record(self, evaluator: int, subject: int) -> TrustRecord:
        return self._records[(evaluator, subject)]

    def trust(self, evaluator: int, subject: int) -> float:
        return self._records[(evaluator, subject)].value

    def is_trusted(self, evaluator: int, subject: int) -> bool:
        return self._records[(evaluator, subject)].trusted

    def update(self, evaluator: int, subject: int, value: float, time: float) -> TrustRecord:
        if (evaluator, subject) not in self._records:
            raise UnknownNode((evaluator, subject))
        if subject in self.exempt:
            return self._records[(evaluator, subject)]
        rec = TrustRecord(evaluator, subject, value, value >= self.threshold, time)
        self._records[(evaluator, subject)] = rec
        return rec

    def about(self, subject: int) -> list[TrustRecord]:
        if subject not in self.neighbors:
            raise UnknownNode(subject)
        return [self._records[(j, subject)] for j in self.neighbors[subject]]

    def classify(self):
        return classify_links(self, self.threshold)

    def find_malicious(self, node: int) -> bool:
        return find_malicious(node, self)

    def node_trust(self, node: int) -> float:
        """Mean trust other nodes place in ``node``, from evidence only; the prior otherwise."""
        if node in self.exempt:
            return 1.0
        values = [r.value for r in self.about(node) if r.has_evidence]
        return sum(values) / len(values) if values else self.initial

    def parent_view(self, parent: int, child: int) -> float:
        """Trust of ``child`` as seen by ``parent``, falling back to the child's node trust."""
        rec = self._records.get((parent, child))
        if rec is not None and rec.has_evidence:
            return rec.value
        return self.node_trust(child)


def find_malicious(node: int, table: TrustTable) -> bool:
    """A node is malicious when none of its one-hop links trusts it.

    Links still holding the untested prior stop counting once any neighbour has
    evidence about the node. A node with no neighbours is malicious.
    """
    if node in table.exempt:
        return False
    records = table.about(node)
    evidenced = [r for r in records if r.has_evidence]
    considered = evidenced or records
    return not any(r.trusted for r in considered)
