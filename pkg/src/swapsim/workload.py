"""Tab workload: memory-fill arithmetic, discard policy and the three-phase pressure test."""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy import stats

from .device import PAGE_SIZE
from .vmm import PageState, TabState

MIB = 1 << 20


class ConfigError(ValueError):
    """A scenario or workload parameter is out of range; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# ---------------------------------------------------------------- formulas


def compute_fill(mem_free, mem_total, swap_free, swap_total, weight):
    """Fraction of weighted memory in use, clamped to [0, 1].

    Integer (or Fraction) inputs give an exact Fraction; floats give a float.
    """
    if mem_total <= 0:
        raise ConfigError("mem_total", "must be positive")
    if swap_total < 0:
        raise ConfigError("swap_total", "must be non-negative")
    if weight < 1:
        raise ConfigError("weight", "must be >= 1")
    if not (0 <= mem_free <= mem_total):
        raise ConfigError("mem_free", "must lie within [0, mem_total]")
    if not (0 <= swap_free <= swap_total):
        raise ConfigError("swap_free", "must lie within [0, swap_total]")
    exact = all(isinstance(v, (int, Fraction)) for v in (mem_free, mem_total, swap_free, swap_total, weight))
    if exact:
        free = Fraction(mem_free) + Fraction(swap_free, 1) / weight
        total = Fraction(mem_total) + Fraction(swap_total, 1) / weight
    else:
        free = mem_free + swap_free / weight
        total = mem_total + swap_total / weight
    fill = 1 - free / total
    return min(max(fill, 0), 1)


class PressureLevel(str, Enum):
    NONE = "none"
    MODERATE = "moderate"
    CRITICAL = "critical"


MODERATE_FILL = Fraction(60, 100)
CRITICAL_FILL = Fraction(95, 100)


def classify_pressure(fill) -> PressureLevel:
    # floats compare against the float literals so that 0.60 itself is moderate
    crit, mod = (0.95, 0.60) if isinstance(fill, float) else (CRITICAL_FILL, MODERATE_FILL)
    if fill >= crit:
        return PressureLevel.CRITICAL
    if fill >= mod:
        return PressureLevel.MODERATE
    return PressureLevel.NONE


def available_mem(available_ram: int, free_swap_slots: int, weight: int) -> int:
    if weight < 1:
        raise ConfigError("weight", "must be >= 1")
    return available_ram + free_swap_slots // weight


def should_discard(avail_pages: int, threshold_pages: int) -> bool:
    return avail_pages < threshold_pages


def bucket_of(tab_count: int, width: int = 20) -> int:
    """Lower edge of the 1-based bucket holding ``tab_count``: 1-20 -> 1, 21-40 -> 21, ..."""
    return ((tab_count - 1) // width) * width + 1


# ------------------------------------------------------------------ config


@dataclass
class WorkloadConfig:
    footprint_mean_mib: float = 150.0
    footprint_spread_mib: float = 50.0
    footprint_trunc_sd: float = 2.0  # truncation at mean +- this many spreads
    locality_fraction: float = 0.6
    write_fraction: float = 0.4
    switch_render_cost_us: int = 40_000
    tolerable_latency_us: int = 250_000
    ram_vs_swap_weight: int = 4
    discard_threshold_mib: Optional[float] = None  # default: one mean footprint
    open_cost_us_per_page: float = 10.0
    max_tabs: int = 400
    switches_per_open: int = 0
    cold_switches: int = 10
    heavy_switches: int = 6000
    hot_tabs: int = 52  # about 4.6 GiB hot set at full scale
    hot_probability: float = 0.99
    bucket_width: int = 20

    def validate(self):
        if not (0 < self.locality_fraction <= 1):
            raise ConfigError("workload.locality_fraction", "must be in (0, 1]")
        if not (0 <= self.write_fraction <= 1):
            raise ConfigError("workload.write_fraction", "must be in [0, 1]")
        if self.ram_vs_swap_weight < 1 or int(self.ram_vs_swap_weight) != self.ram_vs_swap_weight:
            raise ConfigError("workload.ram_vs_swap_weight", "must be an integer >= 1")
        if self.footprint_mean_mib <= 0 or self.footprint_spread_mib < 0:
            raise ConfigError("workload.footprint_mean_mib", "footprint must be positive")
        if self.max_tabs < 1:
            raise ConfigError("workload.max_tabs", "must be >= 1")
        if not (0 <= self.hot_probability <= 1):
            raise ConfigError("workload.hot_probability", "must be in [0, 1]")
        for name in ("cold_switches", "heavy_switches", "hot_tabs", "switches_per_open",
                     "switch_render_cost_us", "tolerable_latency_us", "bucket_width"):
            if getattr(self, name) < 0:
                raise ConfigError(f"workload.{name}", "must be non-negative")
        if self.bucket_width < 1:
            raise ConfigError("workload.bucket_width", "must be >= 1")


def sample_footprint(rng: np.random.Generator, cfg: WorkloadConfig, scale: int = 1) -> int:
    """Pages in a new tab: truncated normal in MiB, shrunk by ``scale``."""
    mean = cfg.footprint_mean_mib * MIB / PAGE_SIZE / scale
    sd = cfg.footprint_spread_mib * MIB / PAGE_SIZE / scale
    if sd == 0:
        return max(1, round(mean))
    k = cfg.footprint_trunc_sd
    lo = max(-k, (1 - mean) / sd)
    x = stats.truncnorm.rvs(lo, k, loc=mean, scale=sd, random_state=rng)
    return max(1, int(round(float(x))))


# ----------------------------------------------------------------- records


@dataclass
class SwitchRecord:
    switch_id: int
    tab_id: int
    tab_count: int
    phase: int
    start_us: int
    latency_us: int
    faults: int
    major: int
    minor: int


@dataclass
class PhaseReport:
    tabs_opened: int = 0
    tabs_before_discard: Optional[int] = None
    discards: int = 0
    oom_discards: int = 0
    switches: List[SwitchRecord] = field(default_factory=list)
    phase_end_us: List[int] = field(default_factory=list)

    def tab_accounting(self, tabs) -> dict:
        counts = {s: 0 for s in TabState}
        for t in tabs:
            counts[t.state] += 1
        return {s.name.lower(): n for s, n in counts.items()}


# ------------------------------------------------------------------ driver


class PressureTest:
    """The browser: opens tabs, switches between them and discards under pressure.

    ``run()`` is a process body for completion.Process.
    """

    def __init__(self, kernel, cfg: WorkloadConfig, rng: np.random.Generator, scale: int = 1):
        self.k = kernel
        self.vmm = kernel.vmm
        self.sim = kernel.sim
        self.cfg = cfg
        self.rng = rng
        self.scale = scale
        self.render_us = max(1, round(cfg.switch_render_cost_us / scale)) if cfg.switch_render_cost_us else 0
        thr_mib = cfg.discard_threshold_mib if cfg.discard_threshold_mib is not None else cfg.footprint_mean_mib
        self.threshold = max(1, int(thr_mib * MIB / PAGE_SIZE / scale))
        self.report = PhaseReport()
        self.touch_sets = {}
        self.phase = 0

    # ---- policy
    def alive(self):
        return [t for t in self.vmm.tabs if t.state != TabState.DISCARDED]

    def available(self) -> int:
        v = self.vmm
        return available_mem(v.available_ram(), v.free_swap_slots(), self.cfg.ram_vs_swap_weight)

    def fill(self):
        v = self.vmm
        free = min(v.dram_total, max(0, v.free_frames()))
        return compute_fill(free, v.dram_total, v.free_swap_slots(), v.swap_total_slots(), self.cfg.ram_vs_swap_weight)

    def should_discard(self) -> bool:
        return should_discard(self.available(), self.threshold)

    def discard_lru(self, reason="pressure") -> bool:
        cands = [t for t in self.vmm.tabs if t.state == TabState.INACTIVE]
        if not cands:
            return False
        victim = min(cands, key=lambda t: (t.last_used, t.id))
        self.vmm.discard_tab(victim)
        self.touch_sets.pop(victim.id, None)
        self.report.discards += 1
        if reason == "oom":
            self.report.oom_discards += 1
        self.k.log_event("DC", victim.id, len(self.alive()))
        return True

    # ---- operations
    def _frame(self):
        """Reserve a frame, discarding tabs if memory is truly exhausted."""
        while True:
            ok = yield from self.vmm.get_frame()
            if ok:
                return True
            if not self.discard_lru("oom"):
                return False

    def open_tab(self):
        cfg, vmm = self.cfg, self.vmm
        tab = vmm.new_tab(sample_footprint(self.rng, cfg, self.scale))
        vmm.set_active(tab)
        n_touch = max(1, math.ceil(cfg.locality_fraction * tab.footprint))
        picks = self.rng.choice(tab.footprint, size=n_touch, replace=False)
        self.touch_sets[tab.id] = np.sort(picks).astype(np.int64) + tab.base
        self.report.tabs_opened += 1
        self.k.log_event("OT", tab.id, tab.footprint)
        chunk = 32
        cost = cfg.open_cost_us_per_page * chunk
        for i, vpn in enumerate(tab.working_set):
            ok = yield from self._frame()
            if not ok:
                break
            vmm.install(vpn, dirty=True)
            vmm.watermark_check()
            if i % chunk == chunk - 1:
                yield ("cpu", math.ceil(cost), "user")
        return tab

    def switch_tab(self, tab):
        if tab.state == TabState.DISCARDED:
            raise ValueError(f"switch to discarded tab {tab.id}")
        vmm = self.vmm
        t0 = self.sim.now
        tab_count = len(self.alive())
        vmm.set_active(tab)
        touched = self.touch_sets[tab.id]
        writes = self.rng.random(len(touched)) < self.cfg.write_fraction
        major = minor = 0
        for vpn, w in zip(touched.tolist(), writes.tolist()):
            kind, _ = yield from vmm.access_page(vpn, w)
            if kind == "major":
                major += 1
            elif kind == "minor":
                minor += 1
            elif kind == "oom":
                if not self.discard_lru("oom"):
                    break
                kind, _ = yield from vmm.access_page(vpn, w)
        if self.render_us:
            yield ("cpu", self.render_us, "user")
        tab.last_used = self.sim.now
        rec = SwitchRecord(len(self.report.switches), tab.id, tab_count, self.phase, t0,
                           self.sim.now - t0, major + minor, major, minor)
        self.report.switches.append(rec)
        self.k.log_event("SW", tab.id, rec.latency_us, rec.faults, tab_count, major, minor)
        return rec

    def _pick_random(self):
        alive = [t for t in self.alive() if t is not self.vmm.active] or self.alive()
        if not alive:
            return None
        if self.cfg.hot_tabs and self.rng.random() < self.cfg.hot_probability:
            recent = sorted(alive, key=lambda t: (-t.last_used, t.id))[: self.cfg.hot_tabs]
            return recent[int(self.rng.integers(len(recent)))]
        return alive[int(self.rng.integers(len(alive)))]

    def run(self):
        cfg, rep = self.cfg, self.report
        # phase 1: open tabs until the first discard
        self.phase = 1
        while rep.tabs_opened < cfg.max_tabs:
            if self.should_discard():
                rep.tabs_before_discard = len(self.alive())
                self.discard_lru()
                break
            yield from self.open_tab()
            if rep.discards and rep.tabs_before_discard is None:
                rep.tabs_before_discard = len(self.alive()) + rep.discards
                break
            for _ in range(cfg.switches_per_open):
                t = self._pick_random()
                if t is not None and t is not self.vmm.active:
                    yield from self.switch_tab(t)
        if rep.tabs_before_discard is None:
            rep.tabs_before_discard = rep.tabs_opened
        rep.phase_end_us.append(self.sim.now)
        # phase 2: revisit the coldest tabs
        self.phase = 2
        for _ in range(cfg.cold_switches):
            cands = [t for t in self.alive() if t is not self.vmm.active]
            if not cands:
                break
            if self.should_discard():
                self.discard_lru()
                continue
            yield from self.switch_tab(min(cands, key=lambda t: (t.last_used, t.id)))
        rep.phase_end_us.append(self.sim.now)
        # phase 3: random switching under load
        self.phase = 3
        for _ in range(cfg.heavy_switches):
            if self.should_discard():
                self.discard_lru()
            t = self._pick_random()
            if t is None or t is self.vmm.active:
                continue
            yield from self.switch_tab(t)
        rep.phase_end_us.append(self.sim.now)
        self.k.workload_done()
