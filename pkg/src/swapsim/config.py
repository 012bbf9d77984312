"""Scenario configuration: named presets, JSON loading and field-level overrides."""

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

from .blkio import BfqParams
from .completion import CompletionPolicy, Mode
from .swapcache import CompressionConfig
from .workload import ConfigError, WorkloadConfig

GIB = 1 << 30
BACKENDS = ("zram", "optane", "nand")
SCHEDULERS = ("none", "kyber", "mq-deadline", "bfq")


@dataclass
class ScenarioConfig:
    name: str = "custom"
    seed: int = 1
    # Every capacity (DRAM, swap, pools, tab footprints, discard threshold) and the
    # per-switch render cost are divided by ``scale`` so a run finishes in seconds.
    scale: int = 256
    dram_gib: float = 4.0
    backend: str = "optane"
    swap_gib: float = 16.0  # device capacity, or ZRAM logical capacity
    zram_physical_gib: float = 4.0
    zswap: bool = False
    zswap_pool_fraction: float = 0.2
    scheduler: str = "bfq"
    scheduler_params: dict = field(default_factory=dict)
    completion: str = "irq"
    hybrid_sleep_us: int = 0
    cores: int = 2
    context_switch_us: int = 5
    hw_queues: int = 2
    queue_depth: int = 8
    read_latency_us: tuple = (22.4, 9.0, 5380.0)
    write_latency_us: Optional[tuple] = None
    transfer_us_per_page: float = 2.0
    watermark_low: float = 0.02
    watermark_high: float = 0.05
    copy_cost_us: float = 0.5
    reclaim_cost_us: float = 1.0
    max_writeback_pages: int = 256
    endurance: float = 1e6
    compression: CompressionConfig = field(default_factory=CompressionConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    check_invariants: bool = False  # run ledger checks after every event (slow)

    # ---- derived
    def page_count(self, gib: float) -> int:
        return int(gib * GIB) // 4096 // self.scale

    def policy(self) -> CompletionPolicy:
        return CompletionPolicy(Mode(self.completion), self.hybrid_sleep_us)

    def validate(self) -> "ScenarioConfig":
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if not isinstance(self.scale, int) or self.scale < 1:
            raise ConfigError("scale", "must be an integer >= 1")
        if self.dram_gib <= 0:
            raise ConfigError("dram_gib", "must be positive")
        if self.backend not in BACKENDS:
            raise ConfigError("backend", f"must be one of {BACKENDS}")
        if self.swap_gib <= 0:
            raise ConfigError("swap_gib", "must be positive")
        if self.backend == "zram" and self.zswap:
            raise ConfigError("zswap", "needs a block-device backend, not zram")
        if self.backend == "zram" and not (0 < self.zram_physical_gib < self.dram_gib):
            raise ConfigError("zram_physical_gib", "must be positive and below dram_gib")
        if not (0 < self.zswap_pool_fraction < 1):
            raise ConfigError("zswap_pool_fraction", "must be in (0, 1)")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError("scheduler", f"must be one of {SCHEDULERS}")
        allowed = {
            "none": set(),
            "kyber": {"write_target_us"},
            "mq-deadline": {"read_deadline_us", "write_deadline_us"},
            "bfq": {f.name for f in dataclasses.fields(BfqParams)},
        }[self.scheduler]
        for k in self.scheduler_params:
            if k not in allowed:
                raise ConfigError(f"scheduler_params.{k}", f"not a {self.scheduler} parameter")
        try:
            self.policy()
        except ValueError as e:
            raise ConfigError("completion", str(e)) from None
        for name in ("cores", "hw_queues", "queue_depth", "max_writeback_pages"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.context_switch_us < 0:
            raise ConfigError("context_switch_us", "must be non-negative")
        if not (0 < self.watermark_low < self.watermark_high < 1):
            raise ConfigError("watermark_low", "need 0 < low < high < 1")
        for name in ("read_latency_us", "write_latency_us"):
            v = getattr(self, name)
            if v is None:
                continue
            if len(v) != 3 or not (0 < v[1] <= v[0] <= v[2]):
                raise ConfigError(name, "expected [mean, min, max] with min <= mean <= max")
        c = self.compression
        if not (0 < c.ratio_min <= c.ratio_mean <= c.ratio_max):
            raise ConfigError("compression.ratio_mean", "need min <= mean <= max")
        if self.endurance <= 0:
            raise ConfigError("endurance", "must be positive")
        self.workload.validate()
        if self.page_count(self.dram_gib) < 64:
            raise ConfigError("scale", "leaves fewer than 64 DRAM pages")
        return self


def _table1(name, **kw) -> ScenarioConfig:
    cfg = ScenarioConfig(name=name, **{k: v for k, v in kw.items() if k != "weight"})
    cfg.workload.ram_vs_swap_weight = kw["weight"]
    return cfg


PRESETS = {
    "baseline": lambda: _table1("baseline", dram_gib=8.0, backend="zram", swap_gib=12.0, zram_physical_gib=4.0, weight=4),
    "optane": lambda: _table1("optane", dram_gib=4.0, backend="optane", swap_gib=16.0, weight=1),
    "nandflash": lambda: _table1("nandflash", dram_gib=4.0, backend="nand", swap_gib=16.0, weight=4),
    "optane-zswap": lambda: _table1("optane-zswap", dram_gib=4.0, backend="optane", swap_gib=16.0, zswap=True, weight=1),
}


def preset(name: str) -> ScenarioConfig:
    key = name.lower().replace("_", "-").replace("+", "-")
    if key not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[key]()


_NESTED = {"workload": WorkloadConfig, "compression": CompressionConfig}


def apply_overrides(cfg: ScenarioConfig, overrides: dict, prefix: str = "") -> ScenarioConfig:
    names = {f.name: f for f in dataclasses.fields(cfg)}
    for key, value in overrides.items():
        path = prefix + key
        if key not in names:
            raise ConfigError(path, "unknown field")
        current = getattr(cfg, key)
        if key in _NESTED and dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
            apply_overrides(current, value, path + ".")
            continue
        if isinstance(value, list) and (isinstance(current, tuple) or current is None):
            value = tuple(value)
        if isinstance(current, bool) and not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        if isinstance(current, (int, float)) and not isinstance(current, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(path, "expected a number")
            if isinstance(current, int):
                if isinstance(value, float) and not value.is_integer():
                    raise ConfigError(path, "expected an integer")
                value = int(value)
        if isinstance(current, str) and not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        setattr(cfg, key, value)
    return cfg


def from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    doc = copy.deepcopy(doc)
    base = preset(doc.pop("preset")) if "preset" in doc else ScenarioConfig()
    overrides = doc.pop("overrides", {})
    apply_overrides(base, doc)
    apply_overrides(base, overrides)
    return base.validate()


def load_config(path: str) -> ScenarioConfig:
    """Read a JSON scenario: {"preset": name, ...fields..., "overrides": {...}}.

    A bare preset name (e.g. ``optane``) is accepted in place of a file path.
    """
    key = str(path).lower().replace("_", "-").replace("+", "-")
    if key in PRESETS:
        return preset(key).validate()
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise ConfigError("<file>", f"no such config file or preset: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from None
    return from_dict(doc)


def to_dict(cfg: ScenarioConfig) -> dict:
    d = dataclasses.asdict(cfg)
    return json.loads(json.dumps(d))
