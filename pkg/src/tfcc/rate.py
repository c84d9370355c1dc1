"""Traffic rate controller: trust-ordered queue priorities and per-queue rates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

from .congestion import LOCAL, QueueState

MAX_CHILD_WEIGHT = 0.99
MIN_CAPACITY_FRACTION = 0.1
DECREASE_FACTOR = 0.5
INCREASE_STEP = 1.0


class UntrustedChild(ValueError):
    pass


@dataclass(frozen=True)
class PriorityAssignment:
    parent: int
    entries: tuple[tuple[Hashable, float], ...]  # (queue source, weight), highest first

    @property
    def weights(self) -> dict[Hashable, float]:
        return dict(self.entries)


@dataclass(frozen=True)
class RateAllocation:
    rates: dict
    capacity: float

    def __getitem__(self, source):
        return self.rates[source]


def assign_priorities(parent: int, children_trust: Iterable[tuple[int, float]],
                      threshold: float | None = None, include_local: bool = True) -> PriorityAssignment:
    """Local traffic first with weight 1, then children by descending trust (ties: lower id)."""
    children = []
    for child, t in children_trust:
        if threshold is not None and t < threshold:
            raise UntrustedChild(f"child {child} of {parent} has trust {t} below {threshold}")
        children.append((child, min(t, MAX_CHILD_WEIGHT)))
    children.sort(key=lambda e: (-e[1], e[0]))
    head = [(LOCAL, 1.0)] if include_local else []
    return PriorityAssignment(parent, tuple(head + children))


def allocate_rates(assignment: PriorityAssignment, capacity: float, sigma_ct: float) -> RateAllocation:
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    effective = capacity * min(max(1.0 - sigma_ct, MIN_CAPACITY_FRACTION), 1.0)
    total = sum(w for _, w in assignment.entries)
    rates = {src: effective * w / total for src, w in assignment.entries} if total else {}
    return RateAllocation(rates, capacity)


def adjust_on_queue(current_rate: float, q: QueueState, grant: float) -> float:
    """One control-interval correction of a sender's rate from the receiving queue."""
    if q.occupancy > q.c_max:
        return current_rate * DECREASE_FACTOR
    if q.occupancy <= q.c_min:
        return min(current_rate + INCREASE_STEP, grant)
    return current_rate
