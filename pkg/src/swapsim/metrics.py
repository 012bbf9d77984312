"""Statistics, output files, and the replay that re-derives every aggregate from them."""

import csv
import json
import math
import os
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

from .device import PAGE_SIZE, EnergyMeter, Op, Target, lifetime_report
from .workload import bucket_of

SUMMARY_VERSION = 1


def percentile(samples: Sequence, p: float):
    """Nearest-rank percentile; None for an empty sample set."""
    if not (0 <= p <= 100):
        raise ValueError("p must be in [0, 100]")
    n = len(samples)
    if n == 0:
        return None
    s = sorted(samples)
    rank = math.ceil(p * n / 100)
    return s[max(rank, 1) - 1]


def high_latency_fraction(samples: Iterable, threshold: int, width: int = 20) -> Dict[int, float]:
    """Per tab-count bucket (keyed by lower edge 1, 21, 41, ...), the share of switches
    whose latency is at or above ``threshold``. ``samples`` are (tab_count, latency)."""
    hits = defaultdict(int)
    total = defaultdict(int)
    for tab_count, lat in samples:
        b = bucket_of(tab_count, width)
        total[b] += 1
        if lat >= threshold:
            hits[b] += 1
    return {b: hits[b] / total[b] for b in sorted(total)}


def mean(xs) -> Optional[float]:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else None


# --------------------------------------------------------------- energy

# Energy is charged for traffic that reaches the swap medium: the compressed
# pool or ZRAM (DRAM) or the swap device (NVM). The uncompressed page on the
# other side of each move lives in DRAM in every configuration and is left out.
def event_energy_terms(kind: str, size: int):
    """(target, op, nbytes) terms for a logged swap-cache event; ``size`` is the
    compressed size."""
    if kind in ("ZS", "RW"):  # compressed copy written into DRAM
        return ((Target.DRAM, Op.WRITE, size),)
    if kind in ("ZH", "RR", "ZE"):  # compressed copy read back out
        return ((Target.DRAM, Op.READ, size),)
    return ()


def io_energy_terms(op: str, size: int):
    return ((Target.NVM, Op.WRITE if op == "W" else Op.READ, size),)


def charge(meter: EnergyMeter, terms):
    for target, op, nbytes in terms:
        meter.account_bytes(target, op, nbytes)


# -------------------------------------------------------------- summary

SUMMARY_FIELDS = [
    "version", "name", "seed", "backend", "zswap", "scheduler", "completion", "scale",
    "tabs_opened", "tabs_before_discard", "discards",
    "switches", "switch_mean_us", "switch_p50_us", "switch_p90_us", "switch_p99_us", "switch_max_us",
    "high_latency_buckets",
    "faults_major", "faults_minor",
    "read_requests", "write_requests", "swapin_device_bytes", "swapout_device_bytes",
    "merged_requests",
    "q2d_mean_us", "d2c_mean_us", "q2c_mean_us", "q2d_p99_us", "d2c_p99_us", "q2c_p99_us",
    "zswap_stores", "zswap_bypasses", "zswap_writebacks", "zswap_hits", "zswap_misses", "zswap_hit_rate",
    "zram_writes", "zram_reads", "swapout_pages_total", "swapin_pages_total",
    "energy_dram_read_pj", "energy_dram_write_pj", "energy_nvm_read_pj", "energy_nvm_write_pj", "energy_total_pj",
    "write_rate_bps", "lifetime_optimistic_years", "lifetime_realistic_years",
    "elapsed_us", "cpu_user_us", "cpu_kernel_us", "cpu_iowait_us", "cpu_idle_us",
]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def build_summary(meta: dict, switches: List[tuple], requests: List[tuple], counts: dict,
                  meter: EnergyMeter, cpu: dict, elapsed: int) -> Dict[str, str]:
    """One summary row.

    switches: (tab_count, latency_us, faults, major, minor)
    requests: (op, size, q2d, d2c, q2c) per queued request, merged ones included
    counts: event tallies (tabs_opened, tabs_before_discard, discards, zswap_*, zram_*, merged)
    """
    lat = [s[1] for s in switches]
    thr = meta["tolerable_latency_us"]
    hl = high_latency_fraction(((s[0], s[1]) for s in switches), thr, meta["bucket_width"])
    q2d = [r[2] for r in requests]
    d2c = [r[3] for r in requests]
    q2c = [r[4] for r in requests]
    reads = [r for r in requests if r[0] == "R"]
    writes = [r for r in requests if r[0] == "W"]
    swapin = sum(r[1] for r in reads)
    swapout = sum(r[1] for r in writes)
    hits, misses = counts["zswap_hits"], counts["zswap_misses"]
    energy = meter.by_category()
    life = lifetime_report(swapout, elapsed, meta["device_capacity_bytes"], meta["endurance"])
    row = {
        "version": SUMMARY_VERSION,
        "name": meta["name"], "seed": meta["seed"], "backend": meta["backend"], "zswap": meta["zswap"],
        "scheduler": meta["scheduler"], "completion": meta["completion"], "scale": meta["scale"],
        "tabs_opened": counts["tabs_opened"],
        "tabs_before_discard": counts["tabs_before_discard"],
        "discards": counts["discards"],
        "switches": len(switches),
        "switch_mean_us": mean(lat),
        "switch_p50_us": percentile(lat, 50), "switch_p90_us": percentile(lat, 90),
        "switch_p99_us": percentile(lat, 99), "switch_max_us": percentile(lat, 100),
        "high_latency_buckets": ";".join(f"{b}:{f!r}" for b, f in hl.items()),
        "faults_major": sum(s[3] for s in switches), "faults_minor": sum(s[4] for s in switches),
        "read_requests": len(reads), "write_requests": len(writes),
        "swapin_device_bytes": swapin, "swapout_device_bytes": swapout,
        "merged_requests": counts["merged"],
        "q2d_mean_us": mean(q2d), "d2c_mean_us": mean(d2c), "q2c_mean_us": mean(q2c),
        "q2d_p99_us": percentile(q2d, 99), "d2c_p99_us": percentile(d2c, 99), "q2c_p99_us": percentile(q2c, 99),
        "zswap_stores": counts["zswap_stores"], "zswap_bypasses": counts["zswap_bypasses"],
        "zswap_writebacks": counts["zswap_writebacks"],
        "zswap_hits": hits, "zswap_misses": misses,
        "zswap_hit_rate": hits / (hits + misses) if hits + misses else None,
        "zram_writes": counts["zram_writes"], "zram_reads": counts["zram_reads"],
        "swapout_pages_total": len(writes) - counts["zswap_writebacks"] + counts["zswap_stores"] + counts["zram_writes"],
        "swapin_pages_total": len(reads) + hits + counts["zram_reads"],
        "energy_dram_read_pj": energy["dram_R"], "energy_dram_write_pj": energy["dram_W"],
        "energy_nvm_read_pj": energy["nvm_R"], "energy_nvm_write_pj": energy["nvm_W"],
        "energy_total_pj": meter.total_pj(),
        "write_rate_bps": life["write_rate"],
        "lifetime_optimistic_years": life["optimistic_years"],
        "lifetime_realistic_years": life["realistic_years"],
        "elapsed_us": elapsed,
        "cpu_user_us": cpu["user"], "cpu_kernel_us": cpu["kernel"],
        "cpu_iowait_us": cpu["iowait"], "cpu_idle_us": cpu["idle"],
    }
    return {k: fmt(row[k]) for k in SUMMARY_FIELDS}


# --------------------------------------------------------------- files

TRACE_FILE = "trace.tsv"
EVENTS_FILE = "events.tsv"
SWITCHES_FILE = "switches.csv"
BLKIO_FILE = "blkio.csv"
SUMMARY_FILE = "summary.csv"
RUN_FILE = "run.json"

BLKIO_FIELDS = ["id", "op", "sector", "size", "dispatched_size", "issuer", "merged_into",
                "t_queued", "t_dispatched", "t_completed", "q2d", "d2c", "q2c"]


def write_tsv(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerows(rows)


def write_outputs(out_dir: str, run) -> Dict[str, str]:
    """Write every artifact of a finished run; returns {name: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {n: os.path.join(out_dir, n) for n in
             (TRACE_FILE, EVENTS_FILE, SWITCHES_FILE, BLKIO_FILE, SUMMARY_FILE, RUN_FILE)}
    write_tsv(paths[TRACE_FILE], run.trace)
    write_tsv(paths[EVENTS_FILE], run.events)
    with open(paths[SWITCHES_FILE], "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["switch_id", "tab_count", "latency_us", "faults"])
        for r in run.switch_records:
            w.writerow([r.switch_id, r.tab_count, r.latency_us, r.faults])
    with open(paths[BLKIO_FILE], "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(BLKIO_FIELDS)
        for r in sorted(run.requests, key=lambda r: r.id):
            w.writerow([r.id, r.op, r.sector, r.requested, r.size if r.host is None else 0, r.issuer,
                        r.host.id if r.host is not None else "",
                        r.t_queued, r.t_dispatched, r.t_completed, r.q2d, r.d2c, r.q2c])
    with open(paths[SUMMARY_FILE], "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(run.summary)
    with open(paths[RUN_FILE], "w") as f:
        json.dump({"meta": run.meta, "config": run.config_dict}, f, indent=2, sort_keys=True)
        f.write("\n")
    return paths


# --------------------------------------------------------------- replay


class ReplayMismatch(AssertionError):
    pass


def _read_tsv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f, delimiter="\t"))


def replay(trace_path: str) -> Dict[str, str]:
    """Recompute the summary row from trace.tsv and events.tsv alone (plus run.json
    for static parameters such as capacity)."""
    d = os.path.dirname(os.path.abspath(trace_path))
    with open(os.path.join(d, RUN_FILE)) as f:
        meta = json.load(f)["meta"]
    meter = EnergyMeter()

    # block requests: Q opens a request, M folds it into a host, D/C stamp the host
    queued = {}
    host_of = {}
    disp, comp = {}, {}
    merged = 0
    for ts, ev, rid, op, sector, size, issuer in _read_tsv(trace_path):
        ts, rid, size = int(ts), int(rid), int(size)
        if ev == "Q":
            queued[rid] = (ts, op, size)
        elif ev == "M":
            merged += 1
            host_of[rid] = None  # resolved from blkio.csv below
        elif ev == "D":
            if rid in disp:
                raise ReplayMismatch(f"request {rid} dispatched twice")
            disp[rid] = ts
        elif ev == "C":
            if rid in comp:
                raise ReplayMismatch(f"request {rid} completed twice")
            comp[rid] = ts
            charge(meter, io_energy_terms(op, size))
        else:
            raise ReplayMismatch(f"unknown trace event {ev!r}")

    # merge hosts are not in the trace; recover them from blkio.csv
    with open(os.path.join(d, BLKIO_FILE), newline="") as f:
        for row in csv.DictReader(f):
            if row["merged_into"]:
                host_of[int(row["id"])] = int(row["merged_into"])
    requests = []
    for rid in sorted(queued):
        tq, op, size = queued[rid]
        h = host_of.get(rid, rid)
        if h is None:
            raise ReplayMismatch(f"merged request {rid} has no host")
        if h not in disp or h not in comp:
            raise ReplayMismatch(f"request {rid} never completed")
        td, tc = disp[h], comp[h]
        q2d, d2c, q2c = td - tq, tc - td, tc - tq
        if q2c != q2d + d2c:
            raise ReplayMismatch(f"request {rid}: Q2C != Q2D + D2C")
        requests.append((op, size, q2d, d2c, q2c))

    counts = dict(tabs_opened=0, tabs_before_discard=None, discards=0, zswap_stores=0, zswap_bypasses=0,
                  zswap_writebacks=0, zswap_hits=0, zswap_misses=0, zram_writes=0, zram_reads=0, merged=merged)
    tally = {"ZS": "zswap_stores", "ZB": "zswap_bypasses", "ZE": "zswap_writebacks",
             "ZH": "zswap_hits", "ZM": "zswap_misses", "RW": "zram_writes", "RR": "zram_reads"}
    switches = []
    cpu = None
    elapsed = None
    for rec in _read_tsv(os.path.join(d, EVENTS_FILE)):
        kind = rec[1]
        if kind in tally:
            counts[tally[kind]] += 1
            charge(meter, event_energy_terms(kind, int(rec[3])))
        elif kind == "OT":
            counts["tabs_opened"] += 1
        elif kind == "DC":
            if counts["discards"] == 0:
                counts["tabs_before_discard"] = counts["tabs_opened"]
            counts["discards"] += 1
        elif kind == "SW":
            _, _, tab, latency, faults, tab_count, major, minor = rec
            switches.append((int(tab_count), int(latency), int(faults), int(major), int(minor)))
        elif kind == "END":
            elapsed = int(rec[2])
            cpu = dict(user=int(rec[3]), kernel=int(rec[4]), iowait=int(rec[5]), idle=int(rec[6]))
        elif kind == "P1":
            pass
        else:
            raise ReplayMismatch(f"unknown event kind {kind!r}")
    if counts["tabs_before_discard"] is None:
        counts["tabs_before_discard"] = counts["tabs_opened"]
    if cpu is None:
        raise ReplayMismatch("events file has no END record")
    if sum(cpu.values()) != meta["cores"] * elapsed:
        raise ReplayMismatch("CPU time buckets do not add up to cores x elapsed")
    return build_summary(meta, switches, requests, counts, meter, cpu, elapsed)


def replay_check(trace_path: str) -> List[str]:
    """Differences between the stored summary and a replayed one (empty when equal)."""
    d = os.path.dirname(os.path.abspath(trace_path))
    with open(os.path.join(d, SUMMARY_FILE), newline="") as f:
        stored = next(csv.DictReader(f))
    again = replay(trace_path)
    diffs = []
    for k in SUMMARY_FIELDS:
        if stored.get(k) != again[k]:
            diffs.append(f"{k}: stored {stored.get(k)!r} != replayed {again[k]!r}")
    return diffs
