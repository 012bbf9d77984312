"""Multi-queue block layer: merging, four schedulers, dispatch into device slots, Q2D/D2C/Q2C."""

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional

SECTOR = 512
MAX_MERGE_BYTES = 128 * 1024


class DoubleCompletion(RuntimeError):
    pass


@dataclass(eq=False)
class BlockRequest:
    op: str  # "R" or "W"
    sector: int
    size: int
    issuer: int
    cpu: int = 0
    id: int = -1
    arrival: int = -1
    t_queued: int = -1
    t_dispatched: int = -1
    t_completed: int = -1
    host: Optional["BlockRequest"] = None
    members: List["BlockRequest"] = field(default_factory=list)
    on_complete: Optional[Callable] = None
    dispatched: bool = False
    requested: int = 0  # size at submission, before any merge grew it

    @property
    def sectors(self) -> int:
        return self.size // SECTOR

    @property
    def end(self) -> int:
        return self.sector + self.sectors

    @property
    def q2d(self) -> int:
        return self.t_dispatched - self.t_queued

    @property
    def d2c(self) -> int:
        return self.t_completed - self.t_dispatched

    @property
    def q2c(self) -> int:
        return self.t_completed - self.t_queued


# -------------------------------------------------------------- schedulers


class NoneScheduler:
    """FIFO across the per-CPU software queues; never reorders."""

    name = "none"

    def __init__(self, cpus: int = 2):
        self.queues = [deque() for _ in range(cpus)]
        self.count = 0

    def __len__(self):
        return self.count

    def add(self, req, now):
        self.queues[req.cpu % len(self.queues)].append(req)
        self.count += 1

    def resized(self, req, old_sector):
        pass

    def dispatch(self, now):
        best = None
        for q in self.queues:
            if q and (best is None or q[0].arrival < best[0].arrival):
                best = q
        if best is None:
            return None
        self.count -= 1
        return best.popleft(), 0


class KyberScheduler:
    """Reads first, unless the oldest write has waited at least the write target."""

    name = "kyber"

    def __init__(self, write_target_us: int = 10_000):
        self.write_target = write_target_us
        self.reads = deque()
        self.writes = deque()

    def __len__(self):
        return len(self.reads) + len(self.writes)

    def add(self, req, now):
        (self.reads if req.op == "R" else self.writes).append(req)

    def resized(self, req, old_sector):
        pass

    def dispatch(self, now):
        if self.writes and (not self.reads or now - self.writes[0].t_queued >= self.write_target):
            return self.writes.popleft(), 0
        if self.reads:
            return self.reads.popleft(), 0
        return None


class MqDeadlineScheduler:
    """Lowest sector first, except that the most overdue expired request jumps the line."""

    name = "mq-deadline"

    def __init__(self, read_deadline_us: int = 500_000, write_deadline_us: int = 5_000_000):
        self.deadline = {"R": read_deadline_us, "W": write_deadline_us}
        self.fifo = {"R": deque(), "W": deque()}
        self.sorted = []  # (sector, arrival, req)
        self.count = 0

    def __len__(self):
        return self.count

    def add(self, req, now):
        self.fifo[req.op].append(req)
        bisect.insort(self.sorted, (req.sector, req.arrival, req))
        self.count += 1

    def resized(self, req, old_sector):
        if old_sector != req.sector:
            i = bisect.bisect_left(self.sorted, (old_sector, req.arrival))
            while self.sorted[i][2] is not req:
                i += 1
            del self.sorted[i]
            bisect.insort(self.sorted, (req.sector, req.arrival, req))

    def _head(self, op):
        q = self.fifo[op]
        while q and q[0].dispatched:
            q.popleft()
        return q[0] if q else None

    def _take(self, req):
        req.dispatched = True
        self.count -= 1
        i = bisect.bisect_left(self.sorted, (req.sector, req.arrival))
        while self.sorted[i][2] is not req:
            i += 1
        del self.sorted[i]
        return req, 0

    def dispatch(self, now):
        if not self.count:
            return None
        best, best_over = None, 0
        for op in ("R", "W"):
            h = self._head(op)
            if h is not None:
                over = now - h.t_queued - self.deadline[op]
                if over > best_over:
                    best, best_over = h, over
        if best is not None:
            return self._take(best)
        return self._take(self.sorted[0][2])


@dataclass
class BfqParams:
    base_budget: int = 2048  # sectors
    min_budget: int = 256
    max_budget: int = 16384
    decision_overhead_us: int = 20


@dataclass
class ProcessIoStats:
    requests: int = 0
    sequential: int = 0
    window_sectors: int = 0
    last_end: int = -1

    def note(self, req):
        if self.requests and req.sector == self.last_end:
            self.sequential += 1
        self.requests += 1
        self.window_sectors += req.sectors
        self.last_end = req.end


def bfq_assign_budget(stats: ProcessIoStats, params: BfqParams = BfqParams()) -> int:
    """clamp(base * sequentiality * activity, min, max); no history gives the base budget."""
    if stats.requests == 0:
        return params.base_budget
    seq_score = 0.25 + 1.75 * stats.sequential / stats.requests
    activity = min(8.0, max(0.25, stats.window_sectors / params.base_budget))
    b = int(params.base_budget * seq_score * activity)
    return max(params.min_budget, min(params.max_budget, b))


class BfqQueue:
    def __init__(self, pid):
        self.pid = pid
        self.reqs = deque()
        self.stats = ProcessIoStats()
        self.budget = 0
        self.served = 0
        self.start = 0.0
        self.finish = 0.0
        self.total_served = 0


class BfqScheduler:
    """Per-process queues served exclusively within a sector budget, picked by smallest
    virtual finish time among eligible queues (WF2Q+ flavour). Every new queue selection
    costs a fixed decision overhead before the request reaches the device."""

    name = "bfq"

    def __init__(self, params: Optional[BfqParams] = None):
        self.p = params or BfqParams()
        self.queues = {}
        self.in_service: Optional[BfqQueue] = None
        self.vtime = 0.0
        self.count = 0
        self.selections = 0

    def __len__(self):
        return self.count

    def _activate(self, q):
        q.budget = bfq_assign_budget(q.stats, self.p)
        q.stats.window_sectors = 0
        q.start = max(self.vtime, q.finish)
        q.finish = q.start + q.budget

    def add(self, req, now):
        q = self.queues.get(req.issuer)
        if q is None:
            q = self.queues[req.issuer] = BfqQueue(req.issuer)
        q.stats.note(req)
        was_idle = not q.reqs
        q.reqs.append(req)
        self.count += 1
        if was_idle and q is not self.in_service:
            self._activate(q)

    def resized(self, req, old_sector):
        pass

    def _expire(self, q):
        q.finish = q.start + q.served
        backlog = [b for b in self.queues.values() if b.reqs and b is not q]
        self.vtime += q.served / max(1, len(backlog) + (1 if q.reqs else 0))
        if q.reqs:
            self._activate(q)
        self.in_service = None

    def dispatch(self, now):
        q = self.in_service
        if q is not None:
            if q.reqs and q.served + q.reqs[0].sectors <= q.budget:
                return self._pop(q), 0
            self._expire(q)
        backlogged = [b for b in self.queues.values() if b.reqs]
        if not backlogged:
            return None
        min_start = min(b.start for b in backlogged)
        if min_start > self.vtime:
            self.vtime = min_start
        eligible = [b for b in backlogged if b.start <= self.vtime]
        q = min(eligible, key=lambda b: (b.finish, b.pid))
        q.served = 0
        self.in_service = q
        self.selections += 1
        return self._pop(q), self.p.decision_overhead_us

    def _pop(self, q):
        req = q.reqs.popleft()
        q.served += req.sectors
        q.total_served += req.sectors
        self.count -= 1
        return req


def make_scheduler(kind: str, cpus: int = 2, **params):
    kind = kind.lower().replace("_", "-")
    if kind == "none":
        return NoneScheduler(cpus)
    if kind == "kyber":
        return KyberScheduler(**params)
    if kind in ("mq-deadline", "mqdeadline", "deadline"):
        return MqDeadlineScheduler(**params)
    if kind == "bfq":
        return BfqScheduler(BfqParams(**params))
    raise ValueError(f"unknown scheduler {kind!r}")


# ------------------------------------------------------------- block layer


class BlockLayer:
    """Takes requests from processes, merges adjacent ones, and feeds the device.

    Emits trace records (timestamp_us, event, request_id, op, sector, size_bytes, issuer)
    with event in Q (queued), M (merged into a queued request), D (dispatched), C (completed).
    """

    def __init__(self, sim, device, scheduler, cpus: int = 2, max_merge_bytes: int = MAX_MERGE_BYTES):
        self.sim = sim
        self.device = device
        self.sched = scheduler
        self.cpus = cpus
        self.max_merge = max_merge_bytes
        self.trace = []
        self.completed: List[BlockRequest] = []
        self._next_id = 0
        self._back = {}  # (issuer, op, end_sector) -> host
        self._front = {}  # (issuer, op, start_sector) -> host
        self._deciding = False
        self.merges = 0
        self.observers = []  # called with each completed dispatch unit

    def _emit(self, ev, req, size=None):
        self.trace.append((self.sim.now, ev, req.id, req.op, req.sector, req.size if size is None else size, req.issuer))

    def submit(self, req: BlockRequest) -> int:
        if req.size <= 0 or req.size % SECTOR or req.sector < 0:
            raise ValueError(f"bad request geometry sector={req.sector} size={req.size}")
        req.id = req.arrival = self._next_id
        self._next_id += 1
        req.t_queued = self.sim.now
        req.requested = req.size
        self._emit("Q", req)
        host = self._try_merge(req)
        if host is None:
            self._back[(req.issuer, req.op, req.end)] = req
            self._front[(req.issuer, req.op, req.sector)] = req
            self.sched.add(req, self.sim.now)
            self.pump()
        return req.id

    def _try_merge(self, req):
        host = self._back.get((req.issuer, req.op, req.sector))
        if host is not None and host.size + req.size <= self.max_merge:
            del self._back[(host.issuer, host.op, host.end)]
            host.size += req.size
            self._back[(host.issuer, host.op, host.end)] = host
        else:
            host = self._front.get((req.issuer, req.op, req.end))
            if host is None or host.size + req.size > self.max_merge:
                return None
            del self._front[(host.issuer, host.op, host.sector)]
            old = host.sector
            host.sector = req.sector
            host.size += req.size
            self._front[(host.issuer, host.op, host.sector)] = host
            self.sched.resized(host, old)
        req.host = host
        host.members.append(req)
        self.merges += 1
        self._emit("M", req)
        return host

    def _unindex(self, req):
        self._back.pop((req.issuer, req.op, req.end), None)
        self._front.pop((req.issuer, req.op, req.sector), None)

    def idle(self) -> bool:
        """Nothing queued, nothing awaiting a dispatch decision, nothing on the device."""
        return not self._deciding and len(self.sched) == 0 and self.device.in_flight == 0

    def pump(self):
        if self._deciding:
            return
        while self.device.free_slots() > 0:
            got = self.sched.dispatch(self.sim.now)
            if got is None:
                return
            req, overhead = got
            self._unindex(req)
            req.dispatched = True
            if overhead > 0:
                self._deciding = True
                self.sim.after(overhead, self._decided, req, kind="bfq-decision")
                return
            self._dispatch(req)

    def _decided(self, req):
        self._deciding = False
        self._dispatch(req)
        self.pump()

    def _dispatch(self, req):
        req.t_dispatched = self.sim.now
        self._emit("D", req)
        self.device.service(req, self._complete)

    def _complete(self, req):
        if req.t_completed >= 0:
            raise DoubleCompletion(f"request {req.id} completed twice")
        now = self.sim.now
        req.t_completed = now
        self._emit("C", req)
        for fn in self.observers:
            fn(req)
        self.completed.append(req)
        for m in req.members:
            m.t_dispatched = req.t_dispatched
            m.t_completed = now
            self.completed.append(m)
        if req.on_complete is not None:
            req.on_complete(req)
        for m in req.members:
            if m.on_complete is not None:
                m.on_complete(m)
        self.pump()
