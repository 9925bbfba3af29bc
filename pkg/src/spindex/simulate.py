"""Batch-update / Poisson-query throughput model.

A single server absorbs one update batch at the start of every period and
serves queries FIFO in between.  Multi-stage engines publish query stages
progressively while a batch is absorbed, so queries dispatched mid-batch use
the freshest published stage.  Two clock modes: wall (every index call is
really executed and timed) and virtual (durations come from a recorded
calibration table, giving bit-identical traces for fixed seeds).
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field

from .graphs import SplitMix64, generate_update_batch


@dataclass
class WorkloadConfig:
    interval: float = 120.0        # period length (seconds)
    volume: int = 1000             # updates per batch
    qos: float = 1.0               # average response time bound (seconds)
    arrival: float = 1.0           # query arrival rate (per second)
    horizon: int = 10              # number of periods
    seed: int = 1
    clock: str = "wall"            # "wall" or "virtual"
    max_queries: int = 200_000     # truncate a probe after this many arrivals
    trace_limit: int = 100_000     # per-query records kept (stats use all)

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        if self.qos <= 0:
            raise ValueError("qos must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.clock not in ("wall", "virtual"):
            raise ValueError(f"unknown clock mode {self.clock!r}")


@dataclass
class QueryRecord:
    arrival: float
    start: float
    completion: float
    stage: str
    answer: object = None


@dataclass
class BatchRecord:
    period: int
    start: float
    blocking_until: float
    publications: dict          # stage -> absolute publication time
    total_duration: float


@dataclass
class SimulationTrace:
    """Per-query records (up to trace_limit) plus running aggregates.

    Statistics always cover every simulated query, even the ones whose
    individual records were dropped to bound memory.
    """

    queries: list[QueryRecord] = field(default_factory=list)
    batches: list[BatchRecord] = field(default_factory=list)
    n_queries: int = 0
    _sum_service: float = 0.0
    _sum_service_sq: float = 0.0
    _sum_response: float = 0.0
    truncated: bool = False

    def record_query(self, rec, limit):
        service = rec.completion - rec.start
        self.n_queries += 1
        self._sum_service += service
        self._sum_service_sq += service * service
        self._sum_response += rec.completion - rec.arrival
        if len(self.queries) < limit:
            self.queries.append(rec)

    @property
    def t_q(self):
        return self._sum_service / self.n_queries if self.n_queries else 0.0

    @property
    def V_q(self):
        if self.n_queries < 2:
            return 0.0
        mean = self._sum_service / self.n_queries
        return max(0.0, self._sum_service_sq / self.n_queries - mean * mean)

    @property
    def t_u(self):
        if not self.batches:
            return 0.0
        return sum(b.total_duration for b in self.batches) / len(self.batches)

    @property
    def R_q(self):
        return self._sum_response / self.n_queries if self.n_queries else 0.0


@dataclass
class ThroughputReport:
    rate: float                    # measured maximum arrival rate
    analytic: float
    qos_violated: bool
    overload: bool
    probes: list = field(default_factory=list)

    def as_dict(self):
        return {"rate": self.rate, "analytic": self.analytic,
                "qos_violated": self.qos_violated, "overload": self.overload,
                "probes": self.probes}


def analytic_bound(t_q, V_q, t_u, interval, qos):
    """Largest sustainable arrival rate for an M/G/1 server with periodic
    update work, from the Pollaczek-Khinchine mean-waiting formula.

    Negative intermediate values clamp to zero; an unattainable bound
    (qos <= t_q) or a saturating update (t_u >= interval) gives zero.
    """
    if t_q <= 0:
        raise ValueError("t_q must be positive")
    if qos <= t_q:
        return 0.0
    denom = V_q + 2 * qos * t_q - t_q * t_q
    first = 2 * (qos - t_q) / denom if denom > 0 else math.inf
    second = (interval - t_u) / (t_q * interval)
    return max(0.0, min(first, second))


class Calibration:
    """Recorded per-stage durations for virtual-clock runs."""

    def __init__(self, service, update_offsets, blocking, total_update):
        self.service = dict(service)            # stage -> mean seconds
        self.update_offsets = dict(update_offsets)  # stage -> publish offset
        self.blocking = blocking                # server-held duration
        self.total_update = total_update

    def as_dict(self):
        return {"service": self.service, "update_offsets": self.update_offsets,
                "blocking": self.blocking, "total_update": self.total_update}


def calibrate_engine(engine, net, cfg, samples=200, batches=2):
    """Measure per-stage query service means and a typical batch timeline.

    The engine really absorbs `batches` generated batches and answers
    `samples` random queries per stage, so the table reflects the current
    graph and index state.
    """
    rng = SplitMix64(cfg.seed ^ 0xCA11B)
    offsets = {}
    blocking = 0.0
    total = 0.0
    for b in range(batches):
        batch = generate_update_batch(net, min(cfg.volume, net.m), rng.next_u64(),
                                      batch_id=b)
        t0 = time.perf_counter()
        pub = engine.apply_batch(batch)
        for stage, off in pub.items():
            offsets[stage] = offsets.get(stage, 0.0) + off / batches
        total += (time.perf_counter() - t0) / batches
    blocking = offsets.get(engine.stages[0], 0.0)
    service = {}
    pairs = [(rng.randrange(net.n), rng.randrange(net.n)) for _ in range(samples)]
    for stage in engine.stages:
        t0 = time.perf_counter()
        for s, t in pairs:
            engine.query(s, t, stage)
        service[stage] = (time.perf_counter() - t0) / samples
    if not offsets:
        offsets = {engine.stages[-1]: 0.0}
    return Calibration(service, offsets, blocking, total)


def simulate(engine, net, cfg, calibration=None, collect_answers=False):
    """Run the event loop over horizon*interval virtual seconds.

    Updates are due at each period start and take server priority; queries
    queue FIFO and start only once the period's blocking stage is done.
    Wall mode executes every call; virtual mode replays `calibration`.
    """
    virtual = cfg.clock == "virtual"
    if virtual and calibration is None:
        raise ValueError("virtual clock requires a calibration table")
    rng = SplitMix64(cfg.seed)
    arr_rng = SplitMix64(cfg.seed ^ 0xA881)
    horizon_end = cfg.horizon * cfg.interval

    trace = SimulationTrace()
    stage_pubs = []                 # (time, stage) in publication order
    pub_ptr = 0
    current_stage = engine.stages[-1]   # before the first batch: fully built
    server_free = 0.0
    period = 0
    produced = 0
    next_arr = math.inf
    arr_clock = 0.0
    if cfg.arrival > 0:
        arr_clock = -math.log(1.0 - arr_rng.random()) / cfg.arrival
        next_arr = arr_clock if arr_clock < horizon_end else math.inf
    srv_rng = SplitMix64(cfg.seed ^ 0x5EC7)

    def run_update(start, p):
        if virtual:
            offsets = dict(calibration.update_offsets)
            blocking = calibration.blocking
            total = calibration.total_update
        else:
            batch = generate_update_batch(net, min(cfg.volume, net.m),
                                          rng.next_u64(), batch_id=p)
            t0 = time.perf_counter()
            offsets = engine.apply_batch(batch)
            total = time.perf_counter() - t0
            blocking = offsets.get(engine.stages[0], total)
        # stages an older batch would have published after this batch begins
        # are superseded: the graph they describe is already stale
        while stage_pubs and stage_pubs[-1][0] > start:
            t, st = stage_pubs.pop()
            for old in reversed(trace.batches):
                if old.publications.get(st) == t:
                    del old.publications[st]
                    break
        pubs = {st: start + off for st, off in offsets.items()}
        for st in engine.stages:
            if st in pubs:
                stage_pubs.append((pubs[st], st))
        trace.batches.append(BatchRecord(p, start, start + blocking, pubs, total))
        return start + blocking

    def advance_arrival():
        nonlocal next_arr, arr_clock, produced
        produced += 1
        if produced >= cfg.max_queries:
            trace.truncated = True
            next_arr = math.inf
            return
        arr_clock += -math.log(1.0 - arr_rng.random()) / cfg.arrival
        next_arr = arr_clock if arr_clock < horizon_end else math.inf

    while period < cfg.horizon or next_arr < math.inf:
        next_upd = period * cfg.interval if period < cfg.horizon else math.inf
        if trace.truncated and next_arr == math.inf:
            break               # probe cap reached; stats are settled
        if next_upd <= next_arr:
            server_free = max(server_free, run_update(max(server_free, next_upd),
                                                      period))
            period += 1
            continue
        start = max(server_free, next_arr)
        if next_upd <= start:
            server_free = max(server_free, run_update(max(server_free, next_upd),
                                                      period))
            period += 1
            continue
        while pub_ptr < len(stage_pubs) and stage_pubs[pub_ptr][0] <= start:
            current_stage = stage_pubs[pub_ptr][1]
            pub_ptr += 1
        stage = current_stage
        if virtual:
            service = engine.sample_service(stage, calibration, srv_rng)
            answer = None
        else:
            s, t = rng.randrange(net.n), rng.randrange(net.n)
            t0 = time.perf_counter()
            answer = engine.query(s, t, stage)
            service = time.perf_counter() - t0
        completion = start + service
        trace.record_query(QueryRecord(next_arr, start, completion, stage,
                                       answer if collect_answers else None),
                           cfg.trace_limit)
        server_free = completion
        advance_arrival()
    return trace


ESCALATION_START = 1.0
ESCALATION_CAP = 1e7
BISECTION_PRECISION = 0.05


def measure_max_throughput(engine, net, cfg, calibration=None):
    """Escalate the arrival rate by doubling, then bisect to 5% precision.

    A probe fails when mean response time exceeds the bound or the update
    work saturates the period.  Immediate failure at the starting rate
    reports zero with the overload flag when updates are the cause.
    """
    probes = []

    def probe(rate):
        c = WorkloadConfig(interval=cfg.interval, volume=cfg.volume,
                           qos=cfg.qos, arrival=rate, horizon=cfg.horizon,
                           seed=cfg.seed, clock=cfg.clock,
                           max_queries=cfg.max_queries, trace_limit=0)
        trace = simulate(engine, net, c, calibration)
        overload = trace.t_u >= cfg.interval
        # One processor serves queries and absorbs updates; past this load
        # there is no steady state even if a truncated run looked healthy.
        unstable = trace.n_queries > 0 and \
            rate * trace.t_q + trace.t_u / cfg.interval >= 1.0
        ok = not overload and not unstable and trace.R_q <= cfg.qos
        probes.append({"rate": rate, "ok": ok, "R_q": trace.R_q,
                       "t_q": trace.t_q, "V_q": trace.V_q, "t_u": trace.t_u,
                       "overload": overload, "unstable": unstable})
        return ok, trace

    rate = ESCALATION_START
    ok, trace = probe(rate)
    if not ok:
        overload = probes[-1]["overload"]
        return ThroughputReport(0.0, 0.0, not overload, overload, probes)
    last_pass, last_trace = rate, trace
    while rate < ESCALATION_CAP:
        rate = min(rate * 2, ESCALATION_CAP)
        ok, trace = probe(rate)
        if not ok:
            break
        last_pass, last_trace = rate, trace
    else:
        ok = True
    if ok:        # never failed up to the cap
        bound = _bound_from(last_trace, cfg)
        return ThroughputReport(last_pass, bound, False, False, probes)
    lo, hi = last_pass, rate
    while (hi - lo) / lo > BISECTION_PRECISION:
        mid = (lo + hi) / 2
        ok, trace = probe(mid)
        if ok:
            lo, last_trace = mid, trace
        else:
            hi = mid
    bound = _bound_from(last_trace, cfg)
    return ThroughputReport(lo, bound, False, False, probes)


def _bound_from(trace, cfg):
    if trace.t_q <= 0:
        return math.inf
    return analytic_bound(trace.t_q, trace.V_q, trace.t_u, cfg.interval, cfg.qos)


class SyntheticEngine:
    """Fixed-distribution engine for validating the queueing model itself."""

    def __init__(self, mean_service, distribution="exponential",
                 update_blocking=0.0, update_total=0.0):
        self.stages = ["Q1"]
        self.mean_service = mean_service
        self.distribution = distribution
        self.update_blocking = update_blocking
        self.update_total = update_total

    def apply_batch(self, batch):
        return {"Q1": self.update_blocking}

    def query(self, s, t, stage):
        return 0

    def sample_service(self, stage, calibration, rng):
        if self.distribution == "exponential":
            return -self.mean_service * math.log(1.0 - rng.random())
        return self.mean_service

    def calibration(self):
        return Calibration({"Q1": self.mean_service}, {"Q1": self.update_blocking},
                           self.update_blocking, self.update_total)
