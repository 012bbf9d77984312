"""Assembles one simulated machine from a ScenarioConfig, runs the pressure test and
collects a RunReport; also the side-by-side comparison of several scenarios."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .blkio import BlockLayer, make_scheduler
from .completion import CompletionEstimator, CpuModel, Process, Signal
from .config import GIB, ScenarioConfig, to_dict
from .device import DeviceKind, DeviceModel, EnergyMeter, LatencySampler, default_samplers
from .engine import RandomSource, Simulator
from .metrics import build_summary, charge, event_energy_terms, io_energy_terms, write_outputs
from .swapcache import CompressionModel, ZramDevice, ZswapPool
from .vmm import InvariantViolation, Vmm
from .workload import ConfigError, PressureTest

KSWAPD_PID = 1
TAB_PID_BASE = 100


class Machine:
    """The simulated device: CPU, memory manager, swap backend and the browser workload."""

    KSWAPD_PID = KSWAPD_PID

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.sim = Simulator()
        self.rand = RandomSource(cfg.seed)
        self.cpu = CpuModel(self.sim, cfg.cores, cfg.context_switch_us)
        self.estimator = CompletionEstimator()
        self.meter = EnergyMeter()
        self.events = []
        self.finished = False

        comp = CompressionModel(self.rand.stream("compression"), cfg.compression)
        pool = zram = None
        self.device = self.blk = None
        if cfg.backend == "zram":
            zram = ZramDevice(comp, int(cfg.zram_physical_gib * GIB) // cfg.scale,
                              int(cfg.swap_gib * GIB) // cfg.scale)
            swap_pages = 0
            self.device_capacity = 0
        else:
            kind = DeviceKind.OPTANE if cfg.backend == "optane" else DeviceKind.NAND
            read, write = default_samplers(kind, tuple(cfg.read_latency_us),
                                           tuple(cfg.write_latency_us) if cfg.write_latency_us else None)
            self.device_capacity = int(cfg.swap_gib * GIB) // cfg.scale
            self.device = DeviceModel(self.sim, self.rand.stream("device"), kind, self.device_capacity,
                                      cfg.queue_depth, read, write, cfg.transfer_us_per_page)
            sched = make_scheduler(cfg.scheduler, cfg.hw_queues, **cfg.scheduler_params)
            self.blk = BlockLayer(self.sim, self.device, sched, cfg.hw_queues)
            self.blk.observers.append(lambda req: charge(self.meter, io_energy_terms(req.op, req.size)))
            swap_pages = self.device_capacity // 4096
            if cfg.zswap:
                pool_bytes = int(cfg.dram_gib * GIB * cfg.zswap_pool_fraction) // cfg.scale
                pool = ZswapPool(comp, pool_bytes, enabled=True)

        self.vmm = Vmm(self, cfg.page_count(cfg.dram_gib), "zram" if zram else "device", swap_pages,
                       pool=pool, zram=zram, low_frac=cfg.watermark_low, high_frac=cfg.watermark_high,
                       copy_cost_us=cfg.copy_cost_us, reclaim_cost_us=cfg.reclaim_cost_us,
                       max_writeback=cfg.max_writeback_pages)
        self.vmm.frames_freed = Signal(self.cpu)
        self.vmm.writeback_done = Signal(self.cpu)
        self.vmm.kswapd_wake = Signal(self.cpu)
        self.workload = PressureTest(self, cfg.workload, self.rand.stream("workload"), cfg.scale)
        policy = cfg.policy()
        self.kswapd = Process(self, "kswapd", KSWAPD_PID, self.vmm.kswapd(), policy)
        self.browser = Process(self, "browser", TAB_PID_BASE, self.workload.run(), policy)
        self.checks = 0
        if cfg.check_invariants:
            self.sim.post_event = self.check_invariants

    # hooks used by the memory manager and the workload
    def pid_of(self, tab) -> int:
        return TAB_PID_BASE + tab.id

    def log_event(self, kind, *fields):
        self.events.append((self.sim.now, kind) + fields)
        if kind in ("ZS", "ZB", "ZE", "ZH", "RW", "RR"):
            charge(self.meter, event_energy_terms(kind, fields[1]))

    def workload_done(self):
        self.finished = True

    def io_idle(self) -> bool:
        if self.blk is None:
            return True
        return not self.vmm.kswapd_running and self.blk.idle()

    def check_invariants(self):
        self.checks += 1
        self.vmm.check_ledger()
        self.vmm.check_conservation(full=self.checks % 4096 == 0)
        b = self.cpu.buckets()
        if sum(b.values()) != self.cpu.cores * self.cpu.elapsed():
            raise InvariantViolation("CPU time buckets do not add up to cores x elapsed")

    def run(self):
        self.kswapd.start()
        self.browser.start()
        # after the last switch, let queued writeback drain so every request completes
        self.sim.run(stop=lambda: self.finished and self.io_idle())
        if not self.finished:
            raise InvariantViolation("event queue drained before the workload finished")
        self.vmm.check_ledger()
        self.vmm.check_conservation(full=True)


@dataclass
class RunReport:
    config: ScenarioConfig
    summary: Dict[str, str]
    meta: dict
    config_dict: dict
    trace: list
    events: list
    requests: list
    switch_records: list
    machine: Optional[Machine] = field(default=None, repr=False)

    def value(self, key):
        """Summary field parsed back to a number where possible."""
        v = self.summary[key]
        if v == "":
            return None
        try:
            return int(v)
        except ValueError:
            try:
                return float(v)
            except ValueError:
                return v

    @property
    def tabs_before_discard(self) -> int:
        return self.value("tabs_before_discard")

    def switch_latencies(self, phase=None) -> List[int]:
        return [r.latency_us for r in self.switch_records if phase is None or r.phase == phase]

    def write(self, out_dir: str):
        return write_outputs(out_dir, self)


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[str] = None, keep_machine: bool = False) -> RunReport:
    cfg.validate()
    m = Machine(cfg)
    m.run()
    rep = m.workload.report
    b = m.cpu.buckets()
    elapsed = m.sim.now
    m.log_event("END", elapsed, b["user"], b["kernel"], b["iowait"], b["idle"])

    requests = sorted(m.blk.completed, key=lambda r: r.id) if m.blk else []
    pool, zram = m.vmm.pool, m.vmm.zram
    counts = dict(
        tabs_opened=rep.tabs_opened, tabs_before_discard=rep.tabs_before_discard, discards=rep.discards,
        zswap_stores=pool.stores if pool else 0, zswap_bypasses=pool.bypasses if pool else 0,
        zswap_writebacks=pool.evictions if pool else 0,
        zswap_hits=pool.hits if pool else 0, zswap_misses=pool.misses if pool else 0,
        zram_writes=zram.writes if zram else 0, zram_reads=zram.reads if zram else 0,
        merged=m.blk.merges if m.blk else 0,
    )
    wl = cfg.workload
    meta = dict(name=cfg.name, seed=cfg.seed, backend=cfg.backend, zswap=cfg.zswap,
                scheduler=cfg.scheduler if m.blk else "", completion=cfg.completion, scale=cfg.scale,
                cores=cfg.cores, endurance=cfg.endurance, device_capacity_bytes=m.device_capacity,
                tolerable_latency_us=max(1, math.ceil(wl.tolerable_latency_us / cfg.scale)),
                bucket_width=wl.bucket_width)
    switches = [(r.tab_count, r.latency_us, r.faults, r.major, r.minor) for r in rep.switches]
    reqs = [(r.op, r.requested, r.q2d, r.d2c, r.q2c) for r in requests]
    summary = build_summary(meta, switches, reqs, counts, m.meter, b, elapsed)
    report = RunReport(cfg, summary, meta, to_dict(cfg), m.blk.trace if m.blk else [], m.events,
                       requests, rep.switches, m if keep_machine else None)
    if out_dir is not None:
        report.write(out_dir)
    return report


COMPARE_FIELDS = ["tabs_before_discard", "switch_mean_us", "switch_p50_us", "switch_p90_us", "switch_p99_us",
                  "faults_major", "faults_minor", "swapin_device_bytes", "swapout_device_bytes",
                  "q2d_mean_us", "d2c_mean_us", "q2c_mean_us", "zswap_hit_rate",
                  "energy_total_pj", "lifetime_optimistic_years", "cpu_kernel_us"]


def compare(configs: List[ScenarioConfig], seed: Optional[int] = None):
    """Run every config on one shared seed; returns (reports, rows) where each row is
    (field, values, ratios against the first config)."""
    if len(configs) < 2:
        raise ConfigError("configs", "compare needs at least two scenarios")
    if seed is not None:
        for c in configs:
            c.seed = seed
    seeds = {c.seed for c in configs}
    if len(seeds) != 1:
        raise ConfigError("seed", f"scenarios must share one seed, got {sorted(seeds)}")
    reports = [run_scenario(c) for c in configs]
    rows = []
    for f in COMPARE_FIELDS:
        vals = [r.value(f) for r in reports]
        base = vals[0]
        ratios = []
        for v in vals:
            if isinstance(v, (int, float)) and isinstance(base, (int, float)) and base != 0 and math.isfinite(base):
                ratios.append(v / base)
            else:
                ratios.append(None)
        rows.append((f, vals, ratios))
    return reports, rows
