"""Queue-based congestion index and the stage-2 congestion/trust metric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from . import tables
from .fuzzy import MembershipVector, defuzzify_centroid, fuzzify, infer

DEFAULT_EPSILON = 0.05
LOCAL = "local"


class NotBenevolent(ValueError):
    """Trust input carries no MT/HT mass, so the node has no congestion/trust metric."""


@dataclass(frozen=True)
class QueueState:
    owner: int
    source: Hashable  # child node id or LOCAL
    occupancy: int
    capacity: int
    c_min: float
    c_max: float

    def __post_init__(self):
        if not 0 <= self.occupancy <= self.capacity:
            raise ValueError(f"occupancy {self.occupancy} outside [0, {self.capacity}]")
        if not 0 <= self.c_min <= self.c_max <= self.capacity:
            raise ValueError("thresholds must satisfy 0 <= c_min <= c_max <= capacity")


@dataclass(frozen=True)
class CongestionState:
    node: int
    per_queue: tuple[float, ...]
    complementary: float
    index: float
    sigma_ct: float


def queue_congestion(q: QueueState, epsilon: float = DEFAULT_EPSILON) -> float:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if q.c_max == q.c_min:
        raise ValueError("c_max equals c_min; the linear region is empty")
    if q.occupancy <= q.c_min:
        return epsilon
    if q.occupancy > q.c_max:
        return 1.0
    return (1 - epsilon) * (q.occupancy - q.c_min) / (q.c_max - q.c_min) + epsilon


def node_cci(per_queue: Sequence[float]) -> tuple[float, float]:
    """Geometric mean of the per-queue complements; returns ``(cci, 1 - cci)``."""
    if not per_queue:
        raise ValueError("a node owns at least its local queue")
    prod = 1.0
    for ik in per_queue:
        if not 0 < ik <= 1:
            raise ValueError(f"per-queue congestion {ik} outside (0, 1]")
        prod *= 1.0 - ik
    cci = prod ** (1.0 / len(per_queue)) if prod > 0 else 0.0
    return cci, 1.0 - cci


def compute_sigma_ct(congestion: float, trust: MembershipVector) -> float:
    """Congestion/trust metric for a benevolent node.

    ``trust`` is a membership vector on the trust partition; VLT/LT mass is
    discarded and the MT/HT remainder renormalised.
    """
    mt, ht = trust["MT"], trust["HT"]
    if mt + ht <= 0:
        raise NotBenevolent("no MT/HT trust mass")
    benevolent = MembershipVector(tables.BENEVOLENT_TRUST, (mt / (mt + ht), ht / (mt + ht)))
    index = fuzzify(tables.CONGESTION, congestion)
    mv = infer(tables.SIGMA_RULES, [index, benevolent], tables.STAGE_ACCUMULATION)
    return defuzzify_centroid(tables.SIGMA_CT, mv)


def congestion_state(node: int, queues: Sequence[QueueState], trust: MembershipVector,
                     epsilon: float = DEFAULT_EPSILON) -> CongestionState:
    per_queue = tuple(queue_congestion(q, epsilon) for q in queues)
    cci, index = node_cci(per_queue)
    return CongestionState(node, per_queue, cci, index, compute_sigma_ct(index, trust))

