"""Page residency, the fault path, LRU cold-page selection and the kswapd reclaim loop."""

import heapq
import math
from enum import IntEnum
from itertools import islice
from typing import List, Optional

from .blkio import BlockRequest
from .device import PAGE_SIZE
from .swapcache import BYPASSED, SwapFull

SECTORS_PER_PAGE = PAGE_SIZE // 512
NO_SLOT = -1
RECLAIM_BATCH = 32


class PageState(IntEnum):
    RESIDENT = 0
    IN_ZSWAP = 1
    IN_ZRAM = 2
    IN_SWAP_DEVICE = 3
    GONE = 4  # owner discarded


class TabState(IntEnum):
    ACTIVE = 0
    INACTIVE = 1
    DISCARDED = 2


class InvariantViolation(AssertionError):
    pass


class SlotAllocator:
    """Swap slots handed out next-fit so that a reclaim batch lands on adjacent sectors."""

    def __init__(self, total: int):
        self.total = total
        self.used = bytearray(total)
        self.cursor = 0
        self.n_free = total

    def alloc(self) -> int:
        if self.n_free == 0:
            return NO_SLOT
        i = self.used.find(0, self.cursor)
        if i < 0:
            i = self.used.find(0, 0)
        self.used[i] = 1
        self.n_free -= 1
        self.cursor = i + 1
        return i

    def free(self, slot: int):
        if not self.used[slot]:
            raise InvariantViolation(f"slot {slot} freed twice")
        self.used[slot] = 0
        self.n_free += 1


class Tab:
    __slots__ = ("id", "base", "footprint", "state", "last_used", "lru", "counts", "opened_at")

    def __init__(self, tid, base, footprint, now):
        self.id = tid
        self.base = base
        self.footprint = footprint
        self.state = TabState.ACTIVE
        self.last_used = now
        self.opened_at = now
        self.lru = {}  # resident vpn -> access tick, in ascending tick order
        self.counts = [0, 0, 0, 0, 0]  # pages per PageState

    @property
    def working_set(self):
        return range(self.base, self.base + self.footprint)


class Vmm:
    """Memory manager for one simulated machine.

    ``backend`` is "device" (an SSD behind the block layer, optionally fronted by
    Zswap) or "zram".
    """

    def __init__(self, kernel, dram_pages: int, backend: str, swap_pages: int = 0,
                 pool=None, zram=None, low_frac=0.02, high_frac=0.05,
                 copy_cost_us=0.5, reclaim_cost_us=1.0, max_writeback=256):
        self.k = kernel
        self.sim = kernel.sim
        self.dram_total = dram_pages
        self.backend = backend
        self.pool = pool
        self.zram = zram
        self.slots = SlotAllocator(swap_pages) if backend == "device" else None
        self.low = max(1, int(dram_pages * low_frac))
        self.high = max(self.low + 1, int(dram_pages * high_frac))
        self.copy_cost = copy_cost_us
        self.reclaim_cost = reclaim_cost_us
        self.max_writeback = max_writeback

        self.state = bytearray()
        self.dirty = bytearray()
        self.owner: List[int] = []
        self.slot: List[int] = []
        self.last_access: List[int] = []
        self.tabs: List[Tab] = []
        self.active: Optional[Tab] = None
        self.working_used = 0  # resident pages plus frames reserved for reads in flight
        self.reserved = 0
        self.tick = 0

        self.writeback_in_flight = 0
        self.frames_freed = None  # Signal, set by the kernel
        self.writeback_done = None
        self.kswapd_wake = None
        self.kswapd_running = False
        self.swap_exhausted = False

        self.stats = dict(hits=0, minor=0, major=0, evicted=0, dropped_clean=0,
                          device_writes=0, device_reads=0, zram_writes=0, zram_reads=0,
                          zswap_stores=0, zswap_bypass=0, zswap_writebacks=0, reclaim_wakeups=0)

    # ------------------------------------------------------------ ledger

    def pool_bytes(self) -> int:
        return self.pool.used_bytes if self.pool is not None else 0

    def zram_bytes(self) -> int:
        return self.zram.used_physical if self.zram is not None else 0

    def free_frames(self) -> int:
        return (self.dram_total - self.working_used
                - -(-self.pool_bytes() // PAGE_SIZE) - -(-self.zram_bytes() // PAGE_SIZE))

    def free_swap_slots(self) -> int:
        if self.backend == "zram":
            return self.zram.free_slots()
        return self.slots.n_free

    def swap_total_slots(self) -> int:
        if self.backend == "zram":
            return self.zram.total_slots
        return self.slots.total

    def available_ram(self) -> int:
        """Free frames above the low watermark; the reserve below it is not handed out."""
        return max(0, self.free_frames() - self.low)

    def check_ledger(self):
        used = (self.working_used + -(-self.pool_bytes() // PAGE_SIZE) + -(-self.zram_bytes() // PAGE_SIZE))
        if used > self.dram_total:
            raise InvariantViolation(f"DRAM overcommit: {used} > {self.dram_total}")
        if self.pool is not None and self.pool.used_bytes > self.pool.max_pool_bytes:
            raise InvariantViolation("zswap pool above its limit")

    def check_conservation(self, full: bool = False):
        resident = 0
        for tab in self.tabs:
            c = tab.counts
            if tab.state == TabState.DISCARDED:
                if any(c[:4]):
                    raise InvariantViolation(f"discarded tab {tab.id} still owns pages")
                continue
            if sum(c) != tab.footprint:
                raise InvariantViolation(f"tab {tab.id}: {c} does not add up to {tab.footprint}")
            if c[PageState.GONE] and tab is not self.active:
                raise InvariantViolation(f"tab {tab.id} has unallocated pages but is not being opened")
            if c[PageState.RESIDENT] != len(tab.lru):
                raise InvariantViolation(f"tab {tab.id}: LRU out of step with resident count")
            resident += c[PageState.RESIDENT]
        if resident + self.reserved != self.working_used:
            raise InvariantViolation(
                f"resident {resident} + reserved {self.reserved} != working ledger {self.working_used}")
        if full:
            for tab in self.tabs:
                counts = [0] * 5
                for v in tab.working_set:
                    counts[self.state[v]] += 1
                if counts != tab.counts:
                    raise InvariantViolation(f"tab {tab.id}: recount {counts} != {tab.counts}")
                for v in tab.working_set:
                    st = self.state[v]
                    if st == PageState.IN_SWAP_DEVICE and self.slot[v] == NO_SLOT:
                        raise InvariantViolation(f"page {v} on device without a slot")

    # ------------------------------------------------------------- tabs

    def new_tab(self, footprint: int) -> Tab:
        base = len(self.state)
        tab = Tab(len(self.tabs), base, footprint, self.sim.now)
        self.tabs.append(tab)
        self.state.extend(bytes([PageState.GONE]) * footprint)
        self.dirty.extend(bytes(footprint))
        self.owner.extend([tab.id] * footprint)
        self.slot.extend([NO_SLOT] * footprint)
        self.last_access.extend([0] * footprint)
        tab.counts[PageState.GONE] = footprint
        return tab

    def set_active(self, tab: Tab):
        if self.active is not None and self.active is not tab and self.active.state == TabState.ACTIVE:
            self.active.state = TabState.INACTIVE
        tab.state = TabState.ACTIVE
        tab.last_used = self.sim.now
        self.active = tab

    def _set_state(self, vpn, tab, new):
        old = self.state[vpn]
        tab.counts[old] -= 1
        tab.counts[new] += 1
        self.state[vpn] = new

    def _touch_lru(self, vpn, tab):
        self.tick += 1
        lru = tab.lru
        lru.pop(vpn, None)
        lru[vpn] = self.tick
        self.last_access[vpn] = self.sim.now

    def install(self, vpn: int, dirty: bool):
        """Map a page into a frame the caller already reserved."""
        tab = self.tabs[self.owner[vpn]]
        self._set_state(vpn, tab, PageState.RESIDENT)
        self.working_used += 1
        self.dirty[vpn] = 1 if dirty else 0
        self._touch_lru(vpn, tab)
        self.swap_exhausted = False

    def mark_written(self, vpn):
        self.dirty[vpn] = 1
        s = self.slot[vpn]
        if s != NO_SLOT and self.state[vpn] == PageState.RESIDENT:
            # the swap copy is stale now
            self.slots.free(s)
            self.slot[vpn] = NO_SLOT

    def discard_tab(self, tab: Tab) -> int:
        """Release everything the tab owns. Returns the number of frames freed."""
        freed = 0
        for v in tab.working_set:
            st = self.state[v]
            if st == PageState.RESIDENT:
                self.working_used -= 1
                freed += 1
            elif st == PageState.IN_ZSWAP:
                self.pool.invalidate(v)
            elif st == PageState.IN_ZRAM:
                self.zram.discard(v)
            s = self.slot[v]
            if s != NO_SLOT:
                self.slots.free(s)
                self.slot[v] = NO_SLOT
            self.state[v] = PageState.GONE
        tab.counts = [0, 0, 0, 0, tab.footprint]
        tab.lru.clear()
        tab.state = TabState.DISCARDED
        self.swap_exhausted = False
        if self.active is tab:
            self.active = None
        if freed and self.frames_freed is not None:
            self.frames_freed.fire()
        return freed

    # ------------------------------------------------------- LRU / reclaim

    def lru_select(self, n: int) -> List[int]:
        """Up to n resident pages of inactive tabs, coldest first; the active tab's pages
        are offered only when no other tab has any."""
        if n <= 0:
            return []
        sources = [t.lru.items() for t in self.tabs if t.state == TabState.INACTIVE and t.lru]
        if not sources and self.active is not None and self.active.lru:
            sources = [self.active.lru.items()]
        merged = heapq.merge(*sources, key=lambda kv: kv[1])
        return [vpn for vpn, _ in islice(merged, n)]

    def watermark_check(self) -> Optional[int]:
        """Reclaim target when free frames dipped under the low watermark (and wake kswapd)."""
        free = self.free_frames()
        if free >= self.low:
            return None
        if self.kswapd_wake is not None and not self.kswapd_running and not self.swap_exhausted:
            self.kswapd_running = True
            self.stats["reclaim_wakeups"] += 1
            self.kswapd_wake.fire()
        return self.high - free

    def _write_to_device(self, vpn, slot, tab_owner):
        self.stats["device_writes"] += 1
        self.writeback_in_flight += 1
        req = BlockRequest("W", slot * SECTORS_PER_PAGE, PAGE_SIZE, issuer=self.k.KSWAPD_PID, cpu=1)
        req.on_complete = self._writeback_complete
        self.k.blk.submit(req)

    def _writeback_complete(self, req):
        self.writeback_in_flight -= 1
        if self.writeback_done is not None:
            self.writeback_done.fire()

    def evict(self, vpn: int) -> float:
        """Move one resident page out of DRAM. Returns CPU time spent (us), or -1 when
        nowhere is left to put it."""
        tab = self.tabs[self.owner[vpn]]
        now = self.sim.now
        log = self.k.log_event
        if not self.dirty[vpn] and self.slot[vpn] != NO_SLOT:
            cost = self.reclaim_cost
            self._set_state(vpn, tab, PageState.IN_SWAP_DEVICE)
            self.stats["dropped_clean"] += 1
        elif self.backend == "zram":
            try:
                lat, size = self.zram.zram_write(vpn)
            except SwapFull:
                self.swap_exhausted = True
                return -1
            cost = lat
            self._set_state(vpn, tab, PageState.IN_ZRAM)
            self.stats["zram_writes"] += 1
            log("RW", vpn, size)
        else:
            slot = self.slot[vpn]
            if slot == NO_SLOT:
                slot = self.slots.alloc()
                if slot == NO_SLOT:
                    self.swap_exhausted = True
                    return -1
                self.slot[vpn] = slot
            if self.pool is not None and self.pool.enabled:
                out = self.pool.zswap_store(vpn, now)
                cost = out.latency
                if out.kind == BYPASSED:
                    self.stats["zswap_bypass"] += 1
                    log("ZB", vpn, out.size)
                    self._set_state(vpn, tab, PageState.IN_SWAP_DEVICE)
                    self._write_to_device(vpn, slot, tab)
                else:
                    self.stats["zswap_stores"] += 1
                    for victim, vsize in zip(out.victims, out.victim_sizes):
                        vtab = self.tabs[self.owner[victim]]
                        self._set_state(victim, vtab, PageState.IN_SWAP_DEVICE)
                        self.stats["zswap_writebacks"] += 1
                        log("ZE", victim, vsize)
                        self._write_to_device(victim, self.slot[victim], vtab)
                    self._set_state(vpn, tab, PageState.IN_ZSWAP)
                    log("ZS", vpn, out.size)
            else:
                cost = self.reclaim_cost
                self._set_state(vpn, tab, PageState.IN_SWAP_DEVICE)
                self._write_to_device(vpn, slot, tab)
        del tab.lru[vpn]
        self.working_used -= 1
        self.dirty[vpn] = 0
        self.stats["evicted"] += 1
        return cost

    def reclaim(self, target: int) -> int:
        """Evict up to ``target`` cold pages right away (no CPU time modelled)."""
        evicted = 0
        while evicted < target:
            batch = self.lru_select(min(RECLAIM_BATCH, target - evicted))
            if not batch:
                break
            for vpn in batch:
                if self.evict(vpn) < 0:
                    return evicted
                evicted += 1
        return evicted

    def kswapd(self):
        """Background reclaim: sleeps until woken, then evicts until free >= high."""
        while True:
            self.kswapd_running = False
            yield ("wait", self.kswapd_wake)
            self.kswapd_running = True
            while self.free_frames() < self.high:
                batch = self.lru_select(RECLAIM_BATCH)
                if not batch:
                    self.swap_exhausted = True
                    break
                stuck = False
                for vpn in batch:
                    if self.state[vpn] != PageState.RESIDENT or vpn not in self.tabs[self.owner[vpn]].lru:
                        continue  # touched or discarded while we were busy
                    while self.writeback_in_flight >= self.max_writeback:
                        yield ("wait", self.writeback_done)
                    if self.state[vpn] != PageState.RESIDENT:
                        continue
                    tab = self.tabs[self.owner[vpn]]
                    if tab.state == TabState.ACTIVE and any(
                            t.state == TabState.INACTIVE and t.lru for t in self.tabs):
                        continue
                    cost = self.evict(vpn)
                    if cost < 0:
                        stuck = True
                        break
                    self.frames_freed.fire()
                    yield ("cpu", math.ceil(cost), "kernel")
                if stuck:
                    break
            self.frames_freed.fire()

    # ------------------------------------------------------------ faults

    def get_frame(self):
        """Generator: wait until a frame is free. Returns False when memory is exhausted
        (kswapd found nothing it could evict)."""
        while self.free_frames() <= 0:
            self.watermark_check()
            if not self.kswapd_running:
                return False
            yield ("wait", self.frames_freed)
        return True

    def access_page(self, vpn: int, is_write: bool):
        """Generator run by the faulting process; returns (kind, latency_us) where kind
        is "hit", "minor" or "major"."""
        st = self.state[vpn]
        tab = self.tabs[self.owner[vpn]]
        if tab.state == TabState.DISCARDED:
            raise InvariantViolation(f"access to page {vpn} of discarded tab {tab.id}")
        if st == PageState.RESIDENT:
            self._touch_lru(vpn, tab)
            if is_write:
                self.mark_written(vpn)
            self.stats["hits"] += 1
            return ("hit", 0)
        t0 = self.sim.now
        ok = yield from self.get_frame()
        if not ok:
            return ("oom", self.sim.now - t0)
        st = self.state[vpn]  # may have changed while we waited
        if st == PageState.RESIDENT:
            self._touch_lru(vpn, tab)
            return ("hit", self.sim.now - t0)
        log = self.k.log_event
        if st == PageState.IN_ZSWAP:
            size = self.pool.entries[vpn].size
            lat = self.pool.zswap_load(vpn)
            log("ZH", vpn, size)
            self.slots.free(self.slot[vpn])
            self.slot[vpn] = NO_SLOT
            self.install(vpn, dirty=True)
            self.stats["minor"] += 1
            yield ("cpu", math.ceil(lat + self.copy_cost), "kernel")
            kind = "minor"
        elif st == PageState.IN_ZRAM:
            lat, size = self.zram.zram_read(vpn)
            log("RR", vpn, size)
            self.install(vpn, dirty=True)
            self.stats["minor"] += 1
            self.stats["zram_reads"] += 1
            yield ("cpu", math.ceil(lat + self.copy_cost), "kernel")
            kind = "minor"
        else:
            if self.pool is not None and self.pool.enabled:
                self.pool.zswap_load(vpn)  # counts the miss
                log("ZM", vpn, 0)
            slot = self.slot[vpn]
            # the frame is ours from here on; map it once the read lands
            self.working_used += 1
            self.reserved += 1
            req = BlockRequest("R", slot * SECTORS_PER_PAGE, PAGE_SIZE, issuer=self.k.pid_of(tab), cpu=0)
            self.stats["major"] += 1
            self.stats["device_reads"] += 1
            yield ("io", req)
            self.working_used -= 1
            self.reserved -= 1
            if self.state[vpn] == PageState.IN_SWAP_DEVICE:
                self.install(vpn, dirty=False)
            yield ("cpu", math.ceil(self.copy_cost), "kernel")
            kind = "major"
        if is_write:
            self.mark_written(vpn)
        self.watermark_check()
        return (kind, self.sim.now - t0)
