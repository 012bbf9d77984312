"""Swap-backend devices: latency samplers, internal queue slots, energy and wear."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize, stats

PAGE_SIZE = 4096
BITS_PER_BYTE = 8
SECONDS_PER_YEAR = 365 * 24 * 3600

# Log-space half-width of the fitted distribution: min and max sit at roughly
# the one-in-a-million quantiles.
TAIL_Z = 4.753


def clamped_lognormal_mean(mu: float, sigma: float, lo: float, hi: float) -> float:
    """Mean of exp(N(mu, sigma^2)) after clamping into [lo, hi]."""
    if sigma == 0:
        return min(max(math.exp(mu), lo), hi)
    a = (math.log(lo) - mu) / sigma
    b = (math.log(hi) - mu) / sigma
    norm = stats.norm
    body = math.exp(mu + sigma * sigma / 2) * (norm.cdf(b - sigma) - norm.cdf(a - sigma))
    return lo * norm.cdf(a) + body + hi * norm.sf(b)


class LatencySampler:
    """Log-normal fitted to a (mean, min, max) summary, then clamped.

    sigma is taken from the log-range so that min and max land near the
    extreme quantiles; mu is solved so the *clamped* mean equals ``mean``.
    """

    def __init__(self, mean: float, lo: float, hi: float, sigma: Optional[float] = None):
        if not (0 < lo <= mean <= hi):
            raise ValueError(f"need 0 < min <= mean <= max, got {lo}, {mean}, {hi}")
        self.mean, self.lo, self.hi = float(mean), float(lo), float(hi)
        if sigma is None:
            sigma = math.log(hi / lo) / (2 * TAIL_Z)
        self.sigma = float(sigma)
        if lo == hi or self.sigma == 0:
            self.mu = math.log(mean)
        else:
            f = lambda m: clamped_lognormal_mean(m, self.sigma, lo, hi) - mean
            self.mu = optimize.brentq(f, math.log(lo) - 10, math.log(hi) + 10, xtol=1e-12)

    def sample(self, rng: np.random.Generator, size=None):
        x = rng.lognormal(self.mu, self.sigma, size)
        return np.clip(x, self.lo, self.hi)

    def stream(self, rng: np.random.Generator, chunk: int = 1024) -> "SampleStream":
        return SampleStream(self, rng, chunk)

    def scaled(self, factor: float) -> "LatencySampler":
        return LatencySampler(self.mean * factor, self.lo * factor, self.hi * factor, self.sigma)


class SampleStream:
    """Scalar draws from a sampler, generated in vectorised chunks for speed."""

    def __init__(self, sampler: LatencySampler, rng: np.random.Generator, chunk: int = 1024):
        self.sampler = sampler
        self.rng = rng
        self.chunk = chunk
        self._buf = []

    def __call__(self) -> float:
        if not self._buf:
            self._buf = self.sampler.sample(self.rng, self.chunk).tolist()
            self._buf.reverse()
        return self._buf.pop()


class DeviceKind(str, Enum):
    OPTANE = "optane"
    NAND = "nand"


OPTANE_READ = (22.4, 9.0, 5380.0)
NAND_READ_FACTOR = 6.0
NAND_WRITE_FACTOR = 10.0


def default_samplers(kind: DeviceKind, read=OPTANE_READ, write=None):
    """Read/write samplers for a backend; writes default to the Optane read fit."""
    optane_read = LatencySampler(*read)
    optane_write = LatencySampler(*(write or read))
    if kind == DeviceKind.OPTANE:
        return optane_read, optane_write
    return optane_read.scaled(NAND_READ_FACTOR), optane_write.scaled(NAND_WRITE_FACTOR)


# ---------------------------------------------------------------- energy


class Target(str, Enum):
    DRAM = "dram"
    NVM = "nvm"


class Op(str, Enum):
    READ = "R"
    WRITE = "W"


@dataclass
class EnergyMeter:
    dram_read_pj_per_bit: float = 4.4
    dram_write_pj_per_bit: float = 5.5
    nvm_read_pj_per_bit: float = 2.47
    nvm_write_set_pj_per_bit: float = 14.03
    nvm_write_reset_pj_per_bit: float = 19.73
    set_fraction: float = 0.5

    def __post_init__(self):
        self.bits = {(t, o): 0 for t in Target for o in Op}
        self._rate = {(t, o): self.per_bit(t, o) for t in Target for o in Op}

    def per_bit(self, target: Target, op: Op) -> float:
        if target == Target.DRAM:
            return self.dram_read_pj_per_bit if op == Op.READ else self.dram_write_pj_per_bit
        if op == Op.READ:
            return self.nvm_read_pj_per_bit
        f = self.set_fraction
        return f * self.nvm_write_set_pj_per_bit + (1 - f) * self.nvm_write_reset_pj_per_bit

    def account_energy(self, target: Target, op: Op, bits: int) -> float:
        if bits < 0:
            raise ValueError("bits must be non-negative")
        key = (target, op) if type(target) is Target and type(op) is Op else (Target(target), Op(op))
        self.bits[key] += bits
        return bits * self._rate[key]

    def account_bytes(self, target: Target, op: Op, nbytes: int) -> float:
        return self.account_energy(target, op, nbytes * BITS_PER_BYTE)

    def by_category(self) -> dict:
        """Picojoules per (target, op); recomputed from bit counters so totals stay linear."""
        return {f"{t.value}_{o.value}": n * self.per_bit(t, o) for (t, o), n in self.bits.items()}

    def total_pj(self) -> float:
        return sum(self.by_category().values())


def account_energy(target, op, bits, meter: Optional[EnergyMeter] = None) -> float:
    """Picojoules for moving ``bits`` with default constants (50/50 set/reset mix)."""
    return (meter or EnergyMeter()).account_energy(target, op, bits)


# --------------------------------------------------------------- lifetime

UNBOUNDED = math.inf


def estimate_lifetime(capacity: float, endurance: float, mean_write_rate: float, efficiency: float = 1.0) -> float:
    """Seconds until the cells wear out; infinite when nothing is written."""
    if not (0 < efficiency <= 1):
        raise ValueError("efficiency must be in (0, 1]")
    if mean_write_rate < 0:
        raise ValueError("write rate must be non-negative")
    if mean_write_rate == 0:
        return UNBOUNDED
    return efficiency * capacity * endurance / mean_write_rate


OPTIMISTIC_EFFICIENCY = 1.0
REALISTIC_EFFICIENCY = 0.53


def lifetime_report(bytes_written: int, elapsed_us: int, capacity: int, endurance: float = 1e6) -> dict:
    """Optimistic and realistic lifetime in years from one run's wear counter."""
    if elapsed_us <= 0 or bytes_written == 0:
        return {"optimistic_years": UNBOUNDED, "realistic_years": UNBOUNDED, "write_rate": 0.0}
    rate = bytes_written / (elapsed_us / 1e6)
    opt = estimate_lifetime(capacity, endurance, rate, OPTIMISTIC_EFFICIENCY)
    real = estimate_lifetime(capacity, endurance, rate, REALISTIC_EFFICIENCY)
    return {"optimistic_years": opt / SECONDS_PER_YEAR, "realistic_years": real / SECONDS_PER_YEAR, "write_rate": rate}


# ----------------------------------------------------------------- device


class DeviceModel:
    """An SSD with ``queue_depth`` internal slots serving requests in parallel.

    Service time is one latency sample per request plus a per-page transfer
    term for merged requests larger than a page.
    """

    def __init__(self, sim, rng: np.random.Generator, kind: DeviceKind = DeviceKind.OPTANE,
                 capacity: int = 16 << 30, queue_depth: int = 8,
                 read_sampler: Optional[LatencySampler] = None,
                 write_sampler: Optional[LatencySampler] = None,
                 transfer_us_per_page: float = 2.0):
        self.sim = sim
        self.rng = rng
        self.kind = DeviceKind(kind)
        self.capacity = capacity
        self.queue_depth = queue_depth
        r, w = default_samplers(self.kind)
        self.read_sampler = read_sampler or r
        self.write_sampler = write_sampler or w
        self.transfer_us_per_page = transfer_us_per_page
        self.in_flight = 0
        self.wear_bytes_written = 0
        self.bytes_read = 0
        self.max_in_flight = 0
        self._draw = {"R": self.read_sampler.stream(rng), "W": self.write_sampler.stream(rng)}

    def free_slots(self) -> int:
        return self.queue_depth - self.in_flight

    def service_time(self, op: str, size: int) -> int:
        t = self._draw[op]()
        extra_pages = max(0, -(-size // PAGE_SIZE) - 1)
        t += extra_pages * self.transfer_us_per_page
        return max(1, int(round(t)))

    def service(self, req, on_done) -> int:
        """Occupy a slot for ``req``; ``on_done(req)`` fires at the returned completion time."""
        if self.in_flight >= self.queue_depth:
            raise RuntimeError("device has no free slot")
        self.in_flight += 1
        self.max_in_flight = max(self.max_in_flight, self.in_flight)
        done = self.sim.now + self.service_time(req.op, req.size)
        if req.op == "W":
            self.wear_bytes_written += req.size
        else:
            self.bytes_read += req.size
        self.sim.at(done, self._finish, req, on_done, kind="device")
        return done

    def _finish(self, req, on_done):
        self.in_flight -= 1
        on_done(req)
