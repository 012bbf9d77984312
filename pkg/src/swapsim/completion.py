"""I/O completion mechanisms and the CPU occupancy model that makes them differ.

Processes are generators that yield commands:

    ("cpu", us, bucket)   run on a core for ``us`` (bucket "user" or "kernel")
    ("io", request)       submit a block request and wait per the completion policy
    ("sleep", us)         give up the core for ``us``
    ("wait", signal)      give up the core until ``signal.fire()``

The value sent back into the generator after "io" is the observed latency.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class Mode(str, Enum):
    IRQ = "irq"
    POLLING = "polling"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class CompletionPolicy:
    mode: Mode = Mode.IRQ
    t: int = 0  # hybrid sleep; 0 means adaptive

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.t < 0:
            raise ValueError("hybrid sleep must be >= 0")

    @property
    def adaptive(self) -> bool:
        return self.mode == Mode.HYBRID and self.t == 0


# ---- closed-form latencies for a request whose completion arrives after `device` us


def wait_irq(device, ctx_switch=5):
    return device + ctx_switch


def wait_polling(device):
    return device


def wait_hybrid(device, t, ctx_switch=5):
    """Sleep min(t, completion); a completion strictly inside the sleep pays a context
    switch, otherwise the process polls from t onward."""
    return device + ctx_switch if device < t else device


def hybrid_core_busy(device, t, ctx_switch=5):
    return ctx_switch if device < t else device - t


class CompletionEstimator:
    """Exact running mean of completion times per op type."""

    def __init__(self):
        self.sums = {}
        self.counts = {}

    def record(self, op, sample):
        self.sums[op] = self.sums.get(op, 0) + sample
        self.counts[op] = self.counts.get(op, 0) + 1

    def mean(self, op) -> Fraction:
        n = self.counts.get(op, 0)
        return Fraction(self.sums[op], n) if n else Fraction(0)

    def half_mean(self, op) -> Fraction:
        return self.mean(op) / 2

    def adaptive_sleep_estimate(self, op) -> int:
        """Half the mean completion time in whole microseconds (0 with no samples)."""
        n = self.counts.get(op, 0)
        if not n:
            return 0
        return self.sums[op] // (2 * n)


# ------------------------------------------------------------------ CPU


class Signal:
    def __init__(self, cpu):
        self.cpu = cpu
        self.waiters = []

    def fire(self):
        waiters, self.waiters = self.waiters, []
        for p in waiters:
            self.cpu.make_runnable(p)


class CpuModel:
    """Cores, a FIFO run queue, and user/kernel/iowait/idle time buckets.

    Idle cores count as iowait while at least that many processes are blocked on I/O.
    """

    def __init__(self, sim, cores=2, context_switch_us=5):
        self.sim = sim
        self.cores = cores
        self.ctx = context_switch_us
        self.free = cores
        self.runq = deque()
        self.n_user = 0
        self.n_kernel = 0
        self.n_io_blocked = 0
        self.user = self.kernel = self.iowait = self.idle = 0
        self.start = sim.now
        self.last = sim.now
        self.context_switches = 0

    def _advance(self):
        now = self.sim.now
        dt = now - self.last
        if dt:
            self.user += self.n_user * dt
            self.kernel += self.n_kernel * dt
            idle_cores = self.cores - self.n_user - self.n_kernel
            io = min(idle_cores, self.n_io_blocked)
            self.iowait += io * dt
            self.idle += (idle_cores - io) * dt
            self.last = now

    def buckets(self):
        self._advance()
        return {"user": self.user, "kernel": self.kernel, "iowait": self.iowait, "idle": self.idle}

    def elapsed(self):
        return self.sim.now - self.start

    def set_busy(self, bucket, delta):
        self._advance()
        if bucket == "user":
            self.n_user += delta
        else:
            self.n_kernel += delta

    def set_io_blocked(self, delta):
        self._advance()
        self.n_io_blocked += delta

    def make_runnable(self, proc):
        if self.free > 0:
            self.free -= 1
            proc.on_core = True
            self.sim.after(0, proc._resume_running, kind="wake")
        else:
            self.runq.append(proc)

    def release(self, proc):
        proc.on_core = False
        if self.runq:
            nxt = self.runq.popleft()
            nxt.on_core = True
            self.sim.after(0, nxt._resume_running, kind="wake")
        else:
            self.free += 1


class Process:
    def __init__(self, kernel, name, pid, body, policy: CompletionPolicy = CompletionPolicy()):
        self.k = kernel
        self.cpu = kernel.cpu
        self.sim = kernel.sim
        self.name = name
        self.pid = pid
        self.gen = body
        self.policy = policy
        self.on_core = False
        self.done = False
        self._pending = None
        self.home_cpu = pid % max(1, self.cpu.cores)

    def start(self):
        self._pending = ("start", None)
        self.cpu.make_runnable(self)

    # --- core held: run generator until it blocks or needs timed work
    def _resume_running(self):
        kind, value = self._pending
        self._pending = None
        if kind == "ctx":
            self.cpu.context_switches += 1
            self.cpu.set_busy("kernel", +1)
            self.sim.after(self.cpu.ctx, self._ctx_end, value, kind="ctx-switch")
        elif kind == "poll":
            self._poll(*value)
        else:
            self._advance(value)

    def _ctx_end(self, t0):
        self.cpu.set_busy("kernel", -1)
        self._advance(self.sim.now - t0)

    def _advance(self, value):
        while True:
            try:
                cmd = self.gen.send(value)
            except StopIteration:
                self.done = True
                self.cpu.release(self)
                return
            op = cmd[0]
            if op == "cpu":
                us = int(cmd[1])
                if us <= 0:
                    value = None
                    continue
                self.cpu.set_busy(cmd[2], +1)
                self.sim.after(us, self._burst_end, cmd[2], kind="burst")
            elif op == "io":
                self._io(cmd[1])
            elif op == "sleep":
                self.cpu.release(self)
                self.sim.after(int(cmd[1]), self._wake, None)
            elif op == "wait":
                self.cpu.release(self)
                cmd[1].waiters.append(self)
                self._pending = ("send", None)
            else:
                raise ValueError(f"unknown command {cmd!r}")
            return

    def _wake(self, value):
        self._pending = ("send", value)
        self.cpu.make_runnable(self)

    def _burst_end(self, bucket):
        self.cpu.set_busy(bucket, -1)
        self._advance(None)

    # --- I/O waits
    def _io(self, req):
        t0 = self.sim.now
        pol = self.policy
        state = {"done": False, "cb": None}
        self._io_state = state

        def completed(r):
            self.k.estimator.record(r.op, self.sim.now - t0)
            state["done"] = True
            if state["cb"] is not None:
                state["cb"]()

        req.on_complete = completed
        sleep = pol.t
        if pol.adaptive:
            sleep = self.k.estimator.adaptive_sleep_estimate(req.op)
        polling = pol.mode == Mode.POLLING or (pol.mode == Mode.HYBRID and sleep == 0)
        timer = None
        if pol.mode == Mode.HYBRID and not polling:
            # armed before submission so a completion landing exactly at the timer
            # is picked up by polling, not by an interrupt
            timer = self.sim.after(sleep, self._hybrid_timer, req, t0, state, kind="hybrid-timer")
        self.k.blk.submit(req)

        if polling:
            self._poll(req, t0)
            return
        self.cpu.release(self)
        self.cpu.set_io_blocked(+1)

        def interrupt():
            if timer is not None:
                self.sim.cancel(timer)
            self.cpu.set_io_blocked(-1)
            self._pending = ("ctx", t0)
            self.cpu.make_runnable(self)

        state["cb"] = interrupt

    def _hybrid_timer(self, req, t0, state):
        if state["done"]:
            return
        state["cb"] = None
        self.cpu.set_io_blocked(-1)
        self._pending = ("poll", (req, t0))
        self.cpu.make_runnable(self)

    def _poll(self, req, t0):
        state = self._io_state
        if state["done"]:
            self._advance(self.sim.now - t0)
            return
        self.cpu.set_busy("kernel", +1)

        def polled():
            self.cpu.set_busy("kernel", -1)
            self._advance(self.sim.now - t0)

        state["cb"] = polled
