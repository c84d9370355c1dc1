"""Deterministic discrete-event simulator for the trust-based congestion controller.

One transmitter per node, unit-disk radio, no MAC contention. Every control
tick the loop closes trust windows, blocks malicious nodes, recomputes routes
over the trusted graph, derives congestion metrics and resets sending rates.

Acknowledgement model: a receiver acknowledges a packet when it accepts it into
a buffer. Full buffers refuse (no ack), droppers discard silently, flooders
answer with ``dup_factor`` acknowledgements and forward as many copies, and
delayers accept only after holding the packet for ``extra_delay_s``.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import heapq
import io
import json
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import tables
from .config import ScenarioConfig
from .congestion import LOCAL, NotBenevolent, QueueState, node_cci, queue_congestion, compute_sigma_ct
from .fuzzy import MembershipVector, fuzzify
from .rate import (DECREASE_FACTOR, INCREASE_STEP, PriorityAssignment, RateAllocation, adjust_on_queue,
                   allocate_rates, assign_priorities)
from .routing import RoutingTable, build_trusted_graph, compute_routes
from .trust import (DormantLink, LinkStatsWindow, TrustTable, compute_trust_metrics, evaluate_trust)

SINK = 0
MIN_RATE = 0.1  # packets/s floor for throttled forwarders
MIN_SOURCE_RATE = 0.01

METRIC_COLUMNS = ("time_s", "generated", "delivered", "dropped_overflow", "dropped_malicious",
                  "dropped_noroute", "in_flight", "mean_latency_s", "energy_units",
                  "normalized_throughput")

_STREAMS = ("placement", "behavior", "traffic", "coins")


class Behavior(str, enum.Enum):
    BENEVOLENT = "BENEVOLENT"
    DROPPER = "DROPPER"
    FLOODER = "FLOODER"
    DELAYER = "DELAYER"


@dataclass(frozen=True)
class BehaviorProfile:
    kind: Behavior = Behavior.BENEVOLENT
    drop_probability: float = 0.0
    dup_factor: int = 1
    extra_delay: float = 0.0

    @property
    def malicious(self) -> bool:
        return self.kind is not Behavior.BENEVOLENT

    @classmethod
    def dropper(cls, p: float = 1.0):
        return cls(Behavior.DROPPER, drop_probability=p)

    @classmethod
    def flooder(cls, dup: int = 3):
        return cls(Behavior.FLOODER, dup_factor=dup)

    @classmethod
    def delayer(cls, extra: float = 0.5):
        return cls(Behavior.DELAYER, extra_delay=extra)


BENEVOLENT = BehaviorProfile()


@dataclass
class Packet:
    id: int
    origin: int
    created_at: float
    holder: int
    hops: list = field(default_factory=list)  # (node, time) per accepted hop
    duplicate: bool = False
    size: float = 1.0

    def copy(self) -> "Packet":
        return Packet(self.id, self.origin, self.created_at, self.holder, list(self.hops), True, self.size)


@dataclass
class NodeState:
    id: int
    position: tuple[float, float]
    battery_full: float
    battery: float
    behavior: BehaviorProfile
    queues: dict = field(default_factory=dict)  # source -> deque[Packet]
    blocked: bool = False
    busy: bool = False
    next_allowed: float = 0.0
    wake_pending: bool = False
    send_rate: float = math.inf  # toward the current next hop
    source_rate: float = 0.0  # local generation rate
    weights: dict = field(default_factory=dict)  # queue source -> scheduling weight
    wrr_credit: dict = field(default_factory=dict)

    def queue(self, source: Hashable) -> deque:
        q = self.queues.get(source)
        if q is None:
            q = self.queues[source] = deque()
        return q

    def queued(self) -> int:
        return sum(len(q) for q in self.queues.values())


@dataclass
class _Window:
    start: float
    sent: int = 0
    acked: int = 0
    latency_sum: float = 0.0
    latency_n: int = 0


@dataclass(frozen=True)
class MetricsRow:
    time_s: float
    generated: int
    delivered: int
    dropped_overflow: int
    dropped_malicious: int
    dropped_noroute: int
    in_flight: int
    mean_latency_s: float
    energy_units: float
    normalized_throughput: float

    @property
    def dropped(self) -> int:
        return self.dropped_overflow + self.dropped_malicious + self.dropped_noroute


class MetricsTimeline(list):
    """Cumulative per-sample counters (list of :class:`MetricsRow`)."""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        for r in self:
            w.writerow([_fmt(getattr(r, c)) for c in METRIC_COLUMNS])
        return buf.getvalue()

    def steady_state_throughput(self, warmup_s: float) -> float:
        """Delivered / generated over the samples after ``warmup_s``."""
        if not self:
            return 0.0
        start = next((r for r in self if r.time_s >= warmup_s), self[-1])
        end = self[-1]
        gen = end.generated - start.generated
        return (end.delivered - start.delivered) / gen if gen else 0.0


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


class SimState:
    """Complete simulation state; build it with :func:`init_scenario`."""

    def __init__(self, config: ScenarioConfig, seed: int, nodes: list[NodeState],
                 trace: bool = False):
        self.config = config
        self.seed = seed
        self.nodes = nodes
        seq = np.random.SeedSequence(seed)
        self.rng = {name: np.random.Generator(np.random.Philox(s))
                    for name, s in zip(_STREAMS, seq.spawn(len(_STREAMS)))}
        self.positions = {n.id: n.position for n in nodes}
        self.neighbors = _neighbors(self.positions, config.radio_range_m)
        self.trust = TrustTable(self.neighbors, config.trust_threshold, config.initial_trust,
                                exempt=(SINK,))
        self.windows: dict[tuple[int, int], _Window] = {}
        self.routes: RoutingTable | None = None
        self.now = 0.0
        self._events: list = []
        self._seq = 0
        self._next_packet = 0
        self.generated = 0
        self.delivered = 0
        self.dropped = {"overflow": 0, "malicious": 0, "noroute": 0}
        self.transmissions = 0
        self.receptions = 0
        self.energy_used = 0.0
        self._latency_sum = 0.0
        self._latency_n = 0
        self.timeline = MetricsTimeline()
        # per sample: ids of benevolent nodes with some queue above c_max
        self.over_threshold: list[tuple[float, frozenset]] = []
        self.blocked_at: dict[int, float] = {}
        self.first_window_at: dict[tuple[int, int], float] = {}
        self.trace_enabled = trace
        self.trace: list[dict] = []
        self.trust_log: list[tuple] = []
        self.route_log: list[tuple] = []
        self.rate_log: list[tuple] = []
        self.congestion_log: list[tuple] = []
        self._started = False
        if config.protocol.uses_rate_control:
            for n in nodes:
                n.send_rate = config.link_rate
                n.source_rate = config.traffic_rate
        else:
            for n in nodes:
                n.send_rate = math.inf
                n.source_rate = config.traffic_rate

    # --- event plumbing -------------------------------------------------
    def schedule(self, time: float, kind: str, *data) -> None:
        heapq.heappush(self._events, (time, self._seq, kind, data))
        self._seq += 1

    def _log(self, kind: str, **data) -> None:
        if self.trace_enabled:
            self.trace.append({"t": self.now, "event": kind, **data})

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.trace)

    @property
    def sink(self) -> NodeState:
        return self.nodes[SINK]

    def benevolent_ids(self) -> list[int]:
        return [n.id for n in self.nodes if not n.behavior.malicious]

    def in_flight(self) -> int:
        return self.generated - self.delivered - sum(self.dropped.values())


def _neighbors(positions, radio_range):
    ids = sorted(positions)
    pts = np.array([positions[i] for i in ids], dtype=float)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    within = d2 <= radio_range * radio_range
    return {i: [ids[j] for j in np.flatnonzero(within[a]) if ids[j] != i] for a, i in enumerate(ids)}


def init_scenario(config: ScenarioConfig, seed: int, *,
                  positions: Sequence[tuple[float, float]] | None = None,
                  behaviors: Sequence[BehaviorProfile] | None = None,
                  trace: bool = False) -> SimState:
    """Place nodes and assign behaviours from the seeded streams.

    Node 0 is the sink at the field centre. ``positions`` / ``behaviors``
    (one entry per node, sink included) override the random draws for
    hand-built topologies.
    """
    n = config.node_count
    seq = np.random.SeedSequence(seed)
    streams = {name: np.random.Generator(np.random.Philox(s))
               for name, s in zip(_STREAMS, seq.spawn(len(_STREAMS)))}
    if positions is None:
        xy = streams["placement"].uniform((0.0, 0.0), (config.field_width_m, config.field_height_m),
                                          size=(n, 2))
        pos = [(config.field_width_m / 2, config.field_height_m / 2)]
        pos += [(float(x), float(y)) for x, y in xy[1:]]
    else:
        if len(positions) != n:
            raise ValueError(f"expected {n} positions, got {len(positions)}")
        pos = [(float(x), float(y)) for x, y in positions]
    if behaviors is None:
        profiles = _draw_behaviors(config, streams["behavior"])
    else:
        if len(behaviors) != n:
            raise ValueError(f"expected {n} behaviours, got {len(behaviors)}")
        profiles = list(behaviors)
        if profiles[SINK].malicious:
            raise ValueError("the sink must be benevolent")
    nodes = [NodeState(i, pos[i], config.battery_full, config.battery_full, profiles[i])
             for i in range(n)]
    state = SimState(config, seed, nodes, trace=trace)
    if not state.neighbors[SINK]:
        warnings.warn("no node lies within radio range of the sink; throughput will be zero",
                      RuntimeWarning, stacklevel=2)
    return state


def _draw_behaviors(config: ScenarioConfig, rng: np.random.Generator) -> list[BehaviorProfile]:
    n = config.node_count
    if config.exact_malicious_count:
        count = round(config.malicious_fraction * (n - 1))
        chosen = set(int(i) + 1 for i in rng.choice(n - 1, size=count, replace=False))
        malicious = [i in chosen for i in range(n)]
    else:
        malicious = [False] + list(rng.random(n - 1) < config.malicious_fraction)
    weights = np.array([config.dropper_weight, config.flooder_weight, config.delayer_weight])
    kinds = rng.choice(3, size=n, p=weights / weights.sum()) if weights.sum() > 0 else [0] * n
    out = []
    for i in range(n):
        if not malicious[i]:
            out.append(BENEVOLENT)
        elif kinds[i] == 0:
            out.append(BehaviorProfile.dropper(config.drop_probability))
        elif kinds[i] == 1:
            out.append(BehaviorProfile.flooder(config.dup_factor))
        else:
            out.append(BehaviorProfile.delayer(config.extra_delay_s))
    return out


# --- run loop -----------------------------------------------------------

def run(state: SimState, duration: float | None = None) -> MetricsTimeline:
    """Advance the simulation to ``duration`` seconds and return the timeline."""
    cfg = state.config
    duration = cfg.duration_s if duration is None else duration
    if not state._started:
        state._started = True
        state.schedule(0.0, "control")
        state.schedule(cfg.sample_interval_s, "sample")
        for node in state.nodes:
            if node.id != SINK and not node.behavior.malicious:
                state.schedule(_exp(state, cfg.traffic_rate), "generate", node.id)
    handlers = {
        "generate": _on_generate,
        "tx_done": _on_tx_done,
        "accept": _on_accept,
        "wake": _on_wake,
        "control": _on_control,
        "sample": _on_sample,
    }
    while state._events and state._events[0][0] <= duration + 1e-9:
        time, _, kind, data = heapq.heappop(state._events)
        state.now = time
        handlers[kind](state, *data)
    state.now = duration
    return state.timeline


def _exp(state: SimState, rate: float) -> float:
    return state.now + float(state.rng["traffic"].exponential(1.0 / rate))


def _on_generate(state: SimState, node_id: int) -> None:
    cfg = state.config
    node = state.nodes[node_id]
    state.schedule(_exp(state, cfg.traffic_rate), "generate", node_id)
    # thinning: candidate arrivals at the nominal rate, kept at source_rate / traffic_rate
    u = float(state.rng["traffic"].random())
    if node.blocked or state.routes is None:
        return
    if u * cfg.traffic_rate >= node.source_rate:
        return
    routed = state.routes.next_hop(node_id) is not None
    pkt = Packet(state._next_packet, node_id, state.now, node_id, [(node_id, state.now)],
                 size=cfg.packet_size)
    state._next_packet += 1
    state.generated += 1
    if not routed:
        _drop(state, pkt, "noroute", node_id)
        return
    q = node.queue(LOCAL)
    if len(q) >= cfg.queue_capacity:
        _drop(state, pkt, "overflow", node_id)
    else:
        q.append(pkt)
    _try_send(state, node)


def _drop(state: SimState, pkt: Packet, cause: str, where: int) -> None:
    if not pkt.duplicate:
        state.dropped[cause] += 1
    state._log("drop", node=where, packet=pkt.id, cause=cause, duplicate=pkt.duplicate)


def _on_wake(state: SimState, node_id: int) -> None:
    node = state.nodes[node_id]
    node.wake_pending = False
    _try_send(state, node)


def _pick_queue(node: NodeState):
    """Smooth weighted round robin over non-empty queues."""
    active = [s for s, q in node.queues.items() if q]
    if not active:
        return None
    active.sort(key=_source_key)
    total = 0.0
    best = None
    for s in active:
        w = node.weights.get(s, 1.0)
        node.wrr_credit[s] = node.wrr_credit.get(s, 0.0) + w
        total += w
        if best is None or node.wrr_credit[s] > node.wrr_credit[best]:
            best = s
    node.wrr_credit[best] -= total
    return best


def _source_key(s):
    return (-1, 0) if s == LOCAL else (0, s)


def _try_send(state: SimState, node: NodeState) -> None:
    cfg = state.config
    if node.busy or node.blocked or not node.queued():
        return
    is_sink = node.id == SINK
    if not is_sink and node.battery < cfg.e_tx:
        return
    if state.now < node.next_allowed - 1e-12:
        if not node.wake_pending:
            node.wake_pending = True
            state.schedule(node.next_allowed, "wake", node.id)
        return
    nxt = None if is_sink else state.routes.next_hop(node.id)
    if not is_sink and nxt is None:
        for q in node.queues.values():
            while q:
                _drop(state, q.popleft(), "noroute", node.id)
        return
    source = _pick_queue(node)
    pkt = node.queues[source].popleft()
    node.busy = True
    tx_time = pkt.size / cfg.link_rate
    rate = cfg.link_rate if is_sink else node.send_rate
    node.next_allowed = state.now + max(tx_time, 1.0 / rate if rate > 0 else math.inf)
    if not is_sink:
        node.battery -= cfg.e_tx
        state.energy_used += cfg.e_tx
        state.transmissions += 1
        state._log("transmit", node=node.id, to=nxt, packet=pkt.id, duplicate=pkt.duplicate)
    state.schedule(state.now + tx_time, "tx_done", node.id, nxt, pkt)


def _on_tx_done(state: SimState, sender_id: int, receiver_id, pkt: Packet) -> None:
    cfg = state.config
    sender = state.nodes[sender_id]
    sender.busy = False
    if receiver_id is None:  # sink handing the packet to the application
        if not pkt.duplicate:
            state.delivered += 1
            lat = state.now - pkt.created_at
            state._latency_sum += lat
            state._latency_n += 1
        state._log("deliver", packet=pkt.id, duplicate=pkt.duplicate)
        _try_send(state, sender)
        return
    sent_at = state.now - pkt.size / cfg.link_rate
    win = _window(state, sender_id, receiver_id)
    win.sent += 1
    receiver = state.nodes[receiver_id]
    if receiver.battery < cfg.e_rx and receiver_id != SINK:
        _drop(state, pkt, "noroute", receiver_id)
    else:
        if receiver_id != SINK:
            receiver.battery -= cfg.e_rx
        state.energy_used += cfg.e_rx
        state.receptions += 1
        beh = receiver.behavior
        if receiver.blocked:
            _drop(state, pkt, "malicious", receiver_id)
        elif beh.kind is Behavior.DROPPER and state.rng["coins"].random() < beh.drop_probability:
            _drop(state, pkt, "malicious", receiver_id)
        elif beh.kind is Behavior.DELAYER:
            state.schedule(state.now + beh.extra_delay, "accept", sender_id, receiver_id, pkt, sent_at)
        else:
            _accept(state, sender_id, receiver_id, pkt, sent_at)
    _try_send(state, sender)


def _on_accept(state: SimState, sender_id: int, receiver_id: int, pkt: Packet, sent_at: float) -> None:
    if state.nodes[receiver_id].blocked:
        _drop(state, pkt, "malicious", receiver_id)
        return
    _accept(state, sender_id, receiver_id, pkt, sent_at)


def _accept(state: SimState, sender_id: int, receiver_id: int, pkt: Packet, sent_at: float) -> None:
    cfg = state.config
    receiver = state.nodes[receiver_id]
    q = receiver.queue(sender_id)
    if len(q) >= cfg.queue_capacity:
        _drop(state, pkt, "overflow", receiver_id)
        return
    pkt.holder = receiver_id
    pkt.hops.append((receiver_id, state.now))
    q.append(pkt)
    copies = 1
    if receiver.behavior.kind is Behavior.FLOODER:
        copies = receiver.behavior.dup_factor
        for _ in range(copies - 1):
            if len(q) < cfg.queue_capacity:
                q.append(pkt.copy())
    win = _window(state, sender_id, receiver_id)
    win.acked += copies
    win.latency_sum += copies * (state.now - sent_at)
    win.latency_n += copies
    _try_send(state, receiver)


def _window(state: SimState, evaluator: int, subject: int) -> _Window:
    key = (evaluator, subject)
    win = state.windows.get(key)
    if win is None:
        win = state.windows[key] = _Window(state.now)
    return win


# --- control loop -------------------------------------------------------

def _on_control(state: SimState) -> None:
    cfg = state.config
    if cfg.protocol.uses_trust:
        _update_trust(state)
        _block_malicious(state)
    _recompute_routes(state)
    if cfg.protocol.uses_rate_control:
        _control_rates(state)
    else:
        _default_weights(state)
    for node in state.nodes:
        _try_send(state, node)
    state.schedule(state.now + cfg.control_interval_s, "control")


def _update_trust(state: SimState) -> None:
    cfg = state.config
    due = []
    for key, win in state.windows.items():
        age = state.now - win.start
        if win.sent >= cfg.trust_window_packets or (age >= cfg.trust_window_s - 1e-9):
            due.append(key)
    if not due:
        return
    # peer latency from every open window of the evaluator, before any reset
    lat_by_eval: dict[int, list[tuple[int, float, int]]] = {}
    for (ev, subj), win in state.windows.items():
        if win.latency_n:
            lat_by_eval.setdefault(ev, []).append((subj, win.latency_sum, win.latency_n))
    for key in sorted(due):
        ev, subj = key
        win = state.windows[key]
        if state.now <= win.start:
            continue
        others = [(s, n) for subj2, s, n in lat_by_eval.get(ev, []) if subj2 != subj]
        peer = sum(s for s, _ in others) / sum(n for _, n in others) if others else None
        subject_lat = win.latency_sum / win.latency_n if win.latency_n else None
        subject = state.nodes[subj]
        window = LinkStatsWindow(ev, subj, win.sent, win.acked, subject_lat, peer, win.start, state.now)
        state.windows[key] = _Window(state.now)
        try:
            metrics = compute_trust_metrics(window, subject.battery, subject.battery_full)
        except DormantLink:
            continue
        value = evaluate_trust(metrics)
        rec = state.trust.update(ev, subj, value, state.now)
        state.first_window_at.setdefault(key, state.now)
        state.trust_log.append((state.now, ev, subj, value, rec.trusted))
        state._log("trust", evaluator=ev, subject=subj, value=value, trusted=rec.trusted)


def _block_malicious(state: SimState) -> None:
    for node in state.nodes:
        if node.id == SINK or node.blocked:
            continue
        if state.trust.find_malicious(node.id):
            node.blocked = True
            state.blocked_at[node.id] = state.now
            state._log("block", node=node.id)
            for q in node.queues.values():
                while q:
                    _drop(state, q.popleft(), "malicious", node.id)


def _recompute_routes(state: SimState) -> None:
    cfg = state.config
    blocked = [n.id for n in state.nodes if n.blocked]
    if cfg.protocol.uses_trust:
        trust = state.trust.trust
    else:
        def trust(u, v):
            return 1.0
    graph = build_trusted_graph(state.positions, trust, cfg.radio_range_m, cfg.trust_threshold, blocked)
    old = state.routes
    state.routes = compute_routes(graph, SINK)
    for node in state.nodes:
        route = state.routes[node.id]
        if old is None or old[node.id] != route:
            state.route_log.append((state.now, node.id, route.next_hop, route.hop_count))
        if node.id != SINK and route.next_hop is None and node.queued():
            for q in node.queues.values():
                while q:
                    _drop(state, q.popleft(), "noroute", node.id)


def _children(state: SimState) -> dict[int, list[int]]:
    kids: dict[int, list[int]] = {n.id: [] for n in state.nodes}
    for node in state.nodes:
        nxt = state.routes.next_hop(node.id) if not node.blocked else None
        if nxt is not None:
            kids[nxt].append(node.id)
    return kids


def _default_weights(state: SimState) -> None:
    for node in state.nodes:
        node.weights = {}


def _trust_membership(state: SimState, node_id: int) -> MembershipVector:
    value = state.trust.node_trust(node_id) if state.config.protocol.uses_trust else 1.0
    return fuzzify(tables.TRUST, value)


def _sigma_ct(state: SimState, node_id: int, index: float) -> float:
    try:
        return compute_sigma_ct(index, _trust_membership(state, node_id))
    except NotBenevolent:
        # trusted by threshold but only LT by membership: weakest benevolent class
        return compute_sigma_ct(index, MembershipVector(tables.TRUST, (0.0, 0.0, 1.0, 0.0)))


def _queue_state(state: SimState, node: NodeState, source) -> QueueState:
    cfg = state.config
    return QueueState(node.id, source, len(node.queues.get(source, ())), cfg.queue_capacity,
                      cfg.c_min, cfg.c_max)


def _control_rates(state: SimState) -> None:
    cfg = state.config
    kids = _children(state)
    subtree = _subtree_sources(state, kids)
    for node in state.nodes:
        if node.blocked:
            continue
        is_sink = node.id == SINK
        if not is_sink and state.routes.next_hop(node.id) is None:
            # no parent, no grant: back the source off as if its queue overflowed
            node.source_rate = max(node.source_rate * DECREASE_FACTOR, MIN_SOURCE_RATE)
            state.rate_log.append((state.now, node.id, LOCAL, node.source_rate))
            continue
        children = kids[node.id]
        sources = ([] if is_sink else [LOCAL]) + children
        if not sources:
            continue
        qstates = {s: _queue_state(state, node, s) for s in sources}
        per_queue = [queue_congestion(q, cfg.epsilon) for q in qstates.values()]
        cci, index = node_cci(per_queue)
        sigma = _sigma_ct(state, node.id, index)
        state.congestion_log.append((state.now, node.id, index, sigma))
        if cfg.protocol.uses_trust:
            view = state.trust.parent_view
        else:
            def view(p, k):
                return 1.0
        assignment = assign_priorities(node.id, [(k, view(node.id, k)) for k in children],
                                       include_local=not is_sink)
        # a node hands out what it can forward itself; the sink what it can deliver
        capacity = cfg.link_rate if is_sink else min(node.send_rate, cfg.link_rate)
        demand = {k: subtree[k] * cfg.traffic_rate + INCREASE_STEP for k in children}
        demand[LOCAL] = cfg.traffic_rate
        alloc = _water_fill(assignment, allocate_rates(assignment, capacity, sigma), demand)
        node.weights = assignment.weights
        for k in children:
            child = state.nodes[k]
            grant = alloc[k]
            rate = adjust_on_queue(min(child.send_rate, grant), qstates[k], grant)
            child.send_rate = max(min(rate, grant), MIN_RATE)
            state.rate_log.append((state.now, node.id, k, child.send_rate))
        if not is_sink:
            grant = min(alloc[LOCAL], cfg.traffic_rate)
            rate = adjust_on_queue(min(node.source_rate, grant), qstates[LOCAL], grant)
            node.source_rate = max(min(rate, grant), MIN_SOURCE_RATE)
            state.rate_log.append((state.now, node.id, LOCAL, node.source_rate))


def _subtree_sources(state: SimState, kids: dict[int, list[int]]) -> dict[int, int]:
    """Number of active traffic sources routed through each node (itself included)."""
    counts: dict[int, int] = {}

    def visit(n: int) -> int:
        node = state.nodes[n]
        own = int(n != SINK and not node.blocked and not node.behavior.malicious)
        counts[n] = own + sum(visit(k) for k in kids[n])
        return counts[n]

    visit(SINK)
    return counts


def _water_fill(assignment: PriorityAssignment, full: RateAllocation, demand) -> RateAllocation:
    """Weighted max-min split of ``full``'s total.

    Queues asking for less than their share get their demand and the rest is
    re-split by weight; a surplus left once everyone is satisfied is spread by
    weight as well, so the grants always add up to ``full``'s total.
    """
    remaining = sum(full.rates.values())
    rates = {}
    active = list(assignment.entries)
    while active:
        share = allocate_rates(PriorityAssignment(assignment.parent, tuple(active)), remaining, 0.0) \
            if remaining > 0 else RateAllocation({s: 0.0 for s, _ in active}, 0.0)
        capped = [(s, w) for s, w in active if demand.get(s, math.inf) < share[s]]
        if not capped:
            rates.update(share.rates)
            remaining = 0.0
            break
        for s, w in capped:
            rates[s] = demand[s]
            remaining -= demand[s]
        active = [e for e in active if e not in capped]
    if remaining > 0:
        # everyone is satisfied; hand the surplus out by weight
        extra = allocate_rates(assignment, remaining, 0.0)
        rates = {s: r + extra[s] for s, r in rates.items()}
    return RateAllocation(rates, full.capacity)


def _on_sample(state: SimState) -> None:
    cfg = state.config
    state.timeline.append(sample_metrics(state))
    over = frozenset(n.id for n in state.nodes
                     if not n.behavior.malicious and not n.blocked
                     and any(len(q) > cfg.c_max for q in n.queues.values()))
    state.over_threshold.append((state.now, over))
    state.schedule(state.now + cfg.sample_interval_s, "sample")


def sample_metrics(state: SimState) -> MetricsRow:
    lat = state._latency_sum / state._latency_n if state._latency_n else 0.0
    state._latency_sum = 0.0
    state._latency_n = 0
    gen = state.generated
    return MetricsRow(
        time_s=round(state.now, 9),
        generated=gen,
        delivered=state.delivered,
        dropped_overflow=state.dropped["overflow"],
        dropped_malicious=state.dropped["malicious"],
        dropped_noroute=state.dropped["noroute"],
        in_flight=state.in_flight(),
        mean_latency_s=lat,
        energy_units=state.energy_used,
        normalized_throughput=state.delivered / gen if gen else 0.0,
    )


def overload_fraction(state: SimState, after: float) -> dict[int, float]:
    """Fraction of samples after ``after`` with some queue of the node above c_max."""
    samples = [over for t, over in state.over_threshold if t > after]
    if not samples:
        return {}
    ids = [i for i in state.benevolent_ids()]
    return {i: sum(i in s for s in samples) / len(samples) for i in ids}


def write_tables(state: SimState, directory) -> None:
    """Dump trust, route, rate and congestion logs as CSV files into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    specs = {
        "trust.csv": (("time", "evaluator", "subject", "T_ij", "trusted"), state.trust_log),
        "routes.csv": (("time", "node", "next_hop", "hop_count"), state.route_log),
        "rates.csv": (("time", "parent", "queue_source", "granted_rate"), state.rate_log),
        "congestion.csv": (("time", "node", "I_total", "sigma_ct"), state.congestion_log),
    }
    for name, (header, rows) in specs.items():
        with open(d / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) if v is not None else "" for v in row])
