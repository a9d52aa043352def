"""
Discrete-event simulator of one infrastructure WLAN.

U uplink stations send bulk TCP data to a wired server and D downlink
stations receive bulk TCP data from it.  Everything the AP forwards onto the
wireless side, downlink data and the ACKs of uplink data alike, waits in one
drop-tail FIFO of capacity B.

The MAC is reduced to a single rule: whenever the channel goes idle, one
backlogged contender (the AP, or an uplink station with a segment it may
send) wins uniformly at random and holds the channel for
``frame_bytes * 8 / wireless_rate`` seconds.  ACKs from downlink stations
return over a contention-free reverse path (ACK airtime plus wired delay).
The wired side has infinite bandwidth and a fixed one-way delay.

TCP is classic Reno without SACK or delayed ACKs: slow start, congestion
avoidance, fast retransmit on the third duplicate ACK, and a retransmission
timeout of ``max(min_rto, 4 * srtt)`` that restarts from cwnd = 1 with
go-back-N.

Runs are fully deterministic: randomness comes from a seeded xorshift64*
generator and events at equal timestamps run in insertion order.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

from src.analytic_model import ScenarioParams
from src.config import (
    ACK_FRAME_BYTES,
    DATA_FRAME_BYTES,
    MIN_RTO_S,
    SIM_DURATION,
    SIM_WARMUP,
    WIRED_DELAY_S,
    WIRELESS_RATE_BPS,
)
from src.errors import SimulationError
from src.metrics import jain_index, throughput_ratio

logger = logging.getLogger(__name__)

AP_STATION = -1
DATA = "data"
ACK = "ack"
SRTT_GAIN = 0.125
RTO_SRTT_FACTOR = 4.0
DUPACK_THRESHOLD = 3

_MASK64 = (1 << 64) - 1

# Event kinds
_TX_END = 0        # a wireless transmission finished
_SERVER_RX = 1     # uplink data reached the wired server
_AP_ARRIVAL = 2    # a frame from the wired side reached the AP buffer
_SERVER_ACK = 3    # a downlink ACK reached the wired server
_RTO = 4           # retransmission timer check


class Direction(str, Enum):
    UP = "up"
    DOWN = "down"


class EnqueueOutcome(str, Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


class TcpEvent(str, Enum):
    ACK = "ack"
    DUPACK = "dupack"
    TIMEOUT = "timeout"


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class XorShift64Star:
    """
    xorshift64* generator (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D).

    The 64-bit seed is passed through one splitmix64 step so that small or
    similar seeds start from unrelated states.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= _MASK64:
            raise SimulationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self._state = _splitmix64(seed) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by multiply-shift."""
        if n <= 0:
            raise SimulationError("randbelow needs n >= 1")
        return (self.next_u64() * n) >> 64


def mac_grant(contenders: Sequence[int], rng: XorShift64Star) -> int:
    """Pick the next channel holder uniformly among the backlogged contenders."""
    if not contenders:
        raise SimulationError("channel granted with no contenders")
    if len(contenders) == 1:
        return contenders[0]
    return contenders[rng.randbelow(len(contenders))]


# ---------------------------------------------------------------------------
# AP buffer
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class Frame:
    kind: str          # DATA or ACK
    flow_id: int
    seq: int           # data sequence number, or cumulative ACK number


@dataclass
class ApBuffer:
    """Drop-tail FIFO shared by downlink data and uplink ACKs."""

    capacity: int
    queue: deque = field(default_factory=deque)
    drop_count: dict[str, int] = field(default_factory=lambda: {DATA: 0, ACK: 0})
    max_occupancy: int = 0

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise SimulationError(f"AP buffer capacity must be >= 1, got {self.capacity}")

    def __len__(self) -> int:
        return len(self.queue)


def ap_enqueue(buf: ApBuffer, frame: Frame) -> EnqueueOutcome:
    """Append ``frame`` unless the buffer is full, in which case it is discarded."""
    if len(buf.queue) >= buf.capacity:
        buf.drop_count[frame.kind] += 1
        return EnqueueOutcome.DROPPED
    buf.queue.append(frame)
    if len(buf.queue) > buf.max_occupancy:
        buf.max_occupancy = len(buf.queue)
    return EnqueueOutcome.ACCEPTED


# ---------------------------------------------------------------------------
# TCP
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class TcpFlowState:
    """
    Sender side of one TCP flow.  Sequence numbers start at 1;
    ``highest_acked`` is the cumulative ACK, ``max_sent`` the highest
    sequence ever transmitted.
    """

    flow_id: int
    direction: Direction
    max_window: int
    cwnd: float = 1.0
    ssthresh: float = 0.0
    next_seq: int = 1
    highest_acked: int = 0
    max_sent: int = 0
    dupack_count: int = 0
    rto_deadline: float | None = None
    srtt: float | None = None
    pending_retransmit: int | None = None
    sent: int = 0
    retransmissions: int = 0
    timeouts: int = 0
    fast_retransmits: int = 0

    def __post_init__(self) -> None:
        if self.ssthresh <= 0:
            self.ssthresh = float(self.max_window)

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.highest_acked - 1

    @property
    def outstanding(self) -> bool:
        return self.max_sent > self.highest_acked

    def has_work(self) -> bool:
        """A retransmission is pending or the window admits another segment."""
        return self.pending_retransmit is not None or self.in_flight < int(self.cwnd)


class SendPermission(NamedTuple):
    retransmit: int | None
    new_segments: int


def tcp_on_event(
    flow: TcpFlowState,
    event: TcpEvent | str,
    ack_seq: int | None = None,
) -> SendPermission:
    """
    Apply one ACK, duplicate ACK or timeout to the sender state.

    Returns what the sender may transmit next: a pending retransmission, if
    any, and how many further segments the window admits.

    Raises
    ------
    SimulationError
        The event contradicts the flow state (e.g. an ACK for data never
        sent or an ACK that does not advance).
    """
    event = TcpEvent(event)
    if event is TcpEvent.ACK:
        if ack_seq is None or ack_seq <= flow.highest_acked or ack_seq > flow.max_sent:
            raise SimulationError(
                f"flow {flow.flow_id}: ack {ack_seq} outside ({flow.highest_acked}, {flow.max_sent}]"
            )
        flow.highest_acked = ack_seq
        flow.dupack_count = 0
        if flow.next_seq <= ack_seq:
            flow.next_seq = ack_seq + 1
        if flow.pending_retransmit is not None and flow.pending_retransmit <= ack_seq:
            flow.pending_retransmit = None
        if flow.cwnd < flow.ssthresh:
            flow.cwnd += 1.0
        else:
            flow.cwnd += 1.0 / flow.cwnd
    elif event is TcpEvent.DUPACK:
        if not flow.outstanding:
            raise SimulationError(f"flow {flow.flow_id}: duplicate ack with nothing outstanding")
        flow.dupack_count += 1
        if flow.dupack_count == DUPACK_THRESHOLD:
            flow.ssthresh = max(flow.cwnd / 2.0, 2.0)
            flow.cwnd = flow.ssthresh
            flow.pending_retransmit = flow.highest_acked + 1
            flow.fast_retransmits += 1
    else:
        flow.ssthresh = max(flow.cwnd / 2.0, 2.0)
        flow.cwnd = 1.0
        flow.next_seq = flow.highest_acked + 1
        flow.dupack_count = 0
        flow.pending_retransmit = None
        flow.timeouts += 1

    flow.cwnd = max(1.0, min(flow.cwnd, float(flow.max_window)))
    return SendPermission(flow.pending_retransmit, max(0, int(flow.cwnd) - flow.in_flight))


@dataclass(slots=True)
class TcpReceiver:
    """Cumulative-ACK receiver; one ACK per data segment."""

    expected: int = 1
    out_of_order: set[int] = field(default_factory=set)

    def accept(self, seq: int) -> tuple[int, int]:
        """Returns (cumulative ack, segments newly delivered in order)."""
        delivered = 0
        if seq == self.expected:
            self.expected += 1
            delivered = 1
            while self.expected in self.out_of_order:
                self.out_of_order.remove(self.expected)
                self.expected += 1
                delivered += 1
        elif seq > self.expected:
            self.out_of_order.add(seq)
        return self.expected - 1, delivered


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioParams
    seed: int = 1
    duration: float = SIM_DURATION
    warmup: float = SIM_WARMUP
    wireless_rate: float = WIRELESS_RATE_BPS
    wired_delay: float = WIRED_DELAY_S
    data_frame: int = DATA_FRAME_BYTES
    ack_frame: int = ACK_FRAME_BYTES
    min_rto: float = MIN_RTO_S

    def validate(self) -> None:
        if not isinstance(self.scenario, ScenarioParams):
            raise SimulationError("scenario must be a ScenarioParams")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= _MASK64:
            raise SimulationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not (math.isfinite(self.duration) and math.isfinite(self.warmup)):
            raise SimulationError("duration and warmup must be finite")
        if not self.duration > self.warmup >= 0:
            raise SimulationError(
                f"need duration > warmup >= 0, got duration={self.duration} warmup={self.warmup}"
            )
        for name in ("wireless_rate", "data_frame", "ack_frame", "min_rto"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SimulationError(f"{name} must be positive, got {value}")
        if not (math.isfinite(self.wired_delay) and self.wired_delay >= 0):
            raise SimulationError(f"wired_delay must be >= 0, got {self.wired_delay}")


@dataclass(frozen=True)
class FlowStats:
    flow_id: int
    direction: str
    sent: int
    delivered: int
    throughput: float
    retransmissions: int
    timeouts: int
    ap_drops: int


@dataclass(frozen=True)
class SimResult:
    per_flow: tuple[FlowStats, ...]
    up_total: float
    down_total: float
    ratio_up_down: float
    jain_index: float
    ap_drops: dict[str, int]
    max_ap_occupancy: int
    events: int


@dataclass(slots=True)
class _FlowCounters:
    delivered_raw: int = 0       # data frames that reached the receiver, duplicates included
    dropped: int = 0
    goodput_total: int = 0
    goodput_window: int = 0


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------


class WlanSimulator:
    """One single-threaded run; create a fresh instance per configuration."""

    def __init__(self, cfg: SimConfig) -> None:
        cfg.validate()
        self.cfg = cfg
        p = cfg.scenario
        self._rng = XorShift64Star(cfg.seed)
        self._now = 0.0
        self._events: list[tuple] = []
        self._event_seq = 0
        self._processed = 0
        self._ap = ApBuffer(capacity=p.buffer_size)
        self._flows = [
            TcpFlowState(i, Direction.UP, p.max_window) for i in range(p.up_stations)
        ] + [
            TcpFlowState(p.up_stations + j, Direction.DOWN, p.max_window)
            for j in range(p.down_stations)
        ]
        self._up_flows = self._flows[: p.up_stations]
        self._receivers = [TcpReceiver() for _ in self._flows]
        self._counters = [_FlowCounters() for _ in self._flows]
        self._send_times: list[dict[int, float]] = [{} for _ in self._flows]
        self._timer_at: list[float | None] = [None] * len(self._flows)
        self._channel_busy = False
        self._data_airtime = cfg.data_frame * 8.0 / cfg.wireless_rate
        self._ack_airtime = cfg.ack_frame * 8.0 / cfg.wireless_rate

    # -- event queue ---------------------------------------------------------

    def _schedule(self, at: float, kind: int, a: int, b=None) -> None:
        heapq.heappush(self._events, (at, self._event_seq, kind, a, b))
        self._event_seq += 1

    def run(self) -> SimResult:
        for flow in self._flows:
            if flow.direction is Direction.DOWN:
                self._server_send(flow)
        self._kick_channel()

        events = self._events
        duration = self.cfg.duration
        while events and events[0][0] <= duration:
            at, _, kind, a, b = heapq.heappop(events)
            self._now = at
            self._processed += 1
            if kind == _TX_END:
                self._on_tx_end(a, b)
            elif kind == _SERVER_RX:
                self._on_server_rx(a, b)
            elif kind == _AP_ARRIVAL:
                self._on_ap_arrival(a, b)
            elif kind == _SERVER_ACK:
                self._on_ack(self._flows[a], b)
                self._server_send(self._flows[a])
            else:
                self._on_rto(a)
        self._now = duration
        self._check_conservation()
        result = self._collect()
        logger.info(
            "Simulated U=%d D=%d B=%d seed=%d: %d events, up/down=%.4g",
            self.cfg.scenario.up_stations,
            self.cfg.scenario.down_stations,
            self.cfg.scenario.buffer_size,
            self.cfg.seed,
            self._processed,
            result.ratio_up_down,
        )
        return result

    # -- channel -------------------------------------------------------------

    def _kick_channel(self) -> None:
        if self._channel_busy:
            return
        contenders = [AP_STATION] if self._ap.queue else []
        contenders += [f.flow_id for f in self._up_flows if f.has_work()]
        if not contenders:
            return
        winner = mac_grant(contenders, self._rng)
        if winner == AP_STATION:
            frame = self._ap.queue.popleft()
        else:
            frame = self._take_segment(self._flows[winner])
        airtime = self._data_airtime if frame.kind == DATA else self._ack_airtime
        self._channel_busy = True
        self._schedule(self._now + airtime, _TX_END, winner, frame)

    def _on_tx_end(self, sender: int, frame: Frame) -> None:
        self._channel_busy = False
        if sender != AP_STATION:
            self._schedule(self._now + self.cfg.wired_delay, _SERVER_RX, frame.flow_id, frame)
        elif frame.kind == ACK:
            self._on_ack(self._flows[frame.flow_id], frame.seq)
        else:
            ack_no = self._receive(frame.flow_id, frame.seq)
            self._schedule(
                self._now + self._ack_airtime + self.cfg.wired_delay,
                _SERVER_ACK,
                frame.flow_id,
                ack_no,
            )
        self._kick_channel()

    def _on_server_rx(self, flow_id: int, frame: Frame) -> None:
        ack_no = self._receive(flow_id, frame.seq)
        self._schedule(
            self._now + self.cfg.wired_delay, _AP_ARRIVAL, flow_id, Frame(ACK, flow_id, ack_no)
        )

    def _on_ap_arrival(self, flow_id: int, frame: Frame) -> None:
        if ap_enqueue(self._ap, frame) is EnqueueOutcome.DROPPED and frame.kind == DATA:
            self._counters[flow_id].dropped += 1
        self._kick_channel()

    # -- senders -------------------------------------------------------------

    def _take_segment(self, flow: TcpFlowState) -> Frame:
        if flow.pending_retransmit is not None:
            seq = flow.pending_retransmit
            flow.pending_retransmit = None
        else:
            seq = flow.next_seq
            flow.next_seq += 1
        times = self._send_times[flow.flow_id]
        if seq <= flow.max_sent:
            flow.retransmissions += 1
            times.pop(seq, None)   # Karn: no RTT sample from a retransmitted segment
        else:
            flow.max_sent = seq
            times[seq] = self._now
        flow.sent += 1
        if flow.rto_deadline is None:
            self._set_timer(flow, self._now + self._rto(flow))
        return Frame(DATA, flow.flow_id, seq)

    def _server_send(self, flow: TcpFlowState) -> None:
        while flow.has_work():
            frame = self._take_segment(flow)
            self._schedule(self._now + self.cfg.wired_delay, _AP_ARRIVAL, flow.flow_id, frame)

    def _on_ack(self, flow: TcpFlowState, ack_no: int) -> None:
        if ack_no > flow.highest_acked:
            times = self._send_times[flow.flow_id]
            sent_at = times.get(ack_no)
            if sent_at is not None:
                sample = self._now - sent_at
                flow.srtt = sample if flow.srtt is None else flow.srtt + SRTT_GAIN * (sample - flow.srtt)
            for seq in range(flow.highest_acked + 1, ack_no + 1):
                times.pop(seq, None)
            tcp_on_event(flow, TcpEvent.ACK, ack_no)
            if flow.outstanding:
                self._set_timer(flow, self._now + self._rto(flow))
            else:
                flow.rto_deadline = None
        elif ack_no == flow.highest_acked:
            if flow.outstanding:
                tcp_on_event(flow, TcpEvent.DUPACK)
        else:
            raise SimulationError(
                f"flow {flow.flow_id}: ack {ack_no} went backwards from {flow.highest_acked}"
            )

    # -- retransmission timer ------------------------------------------------

    def _rto(self, flow: TcpFlowState) -> float:
        if flow.srtt is None:
            return self.cfg.min_rto
        return max(self.cfg.min_rto, RTO_SRTT_FACTOR * flow.srtt)

    def _set_timer(self, flow: TcpFlowState, deadline: float) -> None:
        # At most one live timer event per flow; a later deadline is picked up
        # when the pending event fires, an earlier one needs a fresh event.
        flow.rto_deadline = deadline
        scheduled = self._timer_at[flow.flow_id]
        if scheduled is None or deadline < scheduled:
            self._timer_at[flow.flow_id] = deadline
            self._schedule(deadline, _RTO, flow.flow_id)

    def _on_rto(self, flow_id: int) -> None:
        if self._timer_at[flow_id] != self._now:
            return   # superseded by an earlier re-arm
        self._timer_at[flow_id] = None
        flow = self._flows[flow_id]
        if flow.rto_deadline is None:
            return
        if self._now < flow.rto_deadline:
            self._set_timer(flow, flow.rto_deadline)
            return
        flow.rto_deadline = None
        tcp_on_event(flow, TcpEvent.TIMEOUT)
        if flow.direction is Direction.DOWN:
            self._server_send(flow)
        else:
            self._kick_channel()

    # -- receivers and accounting --------------------------------------------

    def _receive(self, flow_id: int, seq: int) -> int:
        ack_no, delivered = self._receivers[flow_id].accept(seq)
        counters = self._counters[flow_id]
        counters.delivered_raw += 1
        if delivered:
            counters.goodput_total += delivered
            if self._now > self.cfg.warmup:
                counters.goodput_window += delivered
        return ack_no

    def _check_conservation(self) -> None:
        """sent == reached receiver + dropped at the AP + still in the network."""
        in_network = [0] * len(self._flows)
        for frame in self._ap.queue:
            if frame.kind == DATA:
                in_network[frame.flow_id] += 1
        for _, _, kind, _, payload in self._events:
            if kind in (_TX_END, _SERVER_RX, _AP_ARRIVAL) and payload.kind == DATA:
                in_network[payload.flow_id] += 1
        for flow, counters, pending in zip(self._flows, self._counters, in_network):
            accounted = counters.delivered_raw + counters.dropped + pending
            if accounted != flow.sent:
                raise SimulationError(
                    f"flow {flow.flow_id}: sent {flow.sent} but accounted for {accounted}"
                )
            if counters.goodput_window > flow.sent:
                raise SimulationError(f"flow {flow.flow_id}: delivered more than sent")

    def _collect(self) -> SimResult:
        window = self.cfg.duration - self.cfg.warmup
        per_flow = tuple(
            FlowStats(
                flow_id=flow.flow_id,
                direction=flow.direction.value,
                sent=flow.sent,
                delivered=counters.goodput_window,
                throughput=counters.goodput_window / window,
                retransmissions=flow.retransmissions,
                timeouts=flow.timeouts,
                ap_drops=counters.dropped,
            )
            for flow, counters in zip(self._flows, self._counters)
        )
        up_total = sum(f.throughput for f in per_flow if f.direction == Direction.UP.value)
        down_total = sum(f.throughput for f in per_flow if f.direction == Direction.DOWN.value)
        rates = [f.throughput for f in per_flow]
        fairness = jain_index(rates) if any(r > 0 for r in rates) else math.nan
        return SimResult(
            per_flow=per_flow,
            up_total=up_total,
            down_total=down_total,
            ratio_up_down=throughput_ratio(up_total, down_total),
            jain_index=fairness,
            ap_drops=dict(self._ap.drop_count),
            max_ap_occupancy=self._ap.max_occupancy,
            events=self._processed,
        )


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------


def run_simulation(cfg: SimConfig) -> SimResult:
    """
    Run one configuration to ``cfg.duration`` and aggregate the outcome.

    Identical configurations (seed included) give identical results.

    Raises
    ------
    SimulationError
        Invalid configuration (before any event runs) or a broken
        end-of-run packet conservation check.
    """
    return WlanSimulator(cfg).run()


def simulate_many(configs: Sequence[SimConfig], workers: int = 1) -> list[SimResult]:
    """Run independent configurations, optionally in a process pool; results keep input order."""
    configs = list(configs)
    for cfg in configs:
        cfg.validate()
    if workers <= 1 or len(configs) <= 1:
        return [run_simulation(cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_simulation, configs))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    demo = run_simulation(SimConfig(ScenarioParams(1, 1, 20), duration=20.0))
    print(f"up={demo.up_total:.1f} pkt/s  down={demo.down_total:.1f} pkt/s  "
          f"ratio={demo.ratio_up_down:.3f}  jain={demo.jain_index:.3f}")
