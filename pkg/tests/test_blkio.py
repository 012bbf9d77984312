import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapsim.blkio import (
    BfqParams, BfqScheduler, BlockRequest, DoubleCompletion, KyberScheduler, MqDeadlineScheduler,
    NoneScheduler, ProcessIoStats, bfq_assign_budget,
)

from sched_props import CHECKERS


def req(op, sector, size=4096, issuer=100, t=0, rid=0, cpu=0):
    r = BlockRequest(op, sector, size, issuer, cpu=cpu)
    r.id = r.arrival = rid
    r.t_queued = t
    return r


# ----------------------------------------------------------- examples

def test_none_does_not_reorder_write_before_read():
    s = NoneScheduler()
    s.add(req("W", 8, rid=1), 0)
    s.add(req("R", 0, rid=2, cpu=1), 0)
    assert s.dispatch(0)[0].op == "W"


def test_none_empty():
    assert NoneScheduler().dispatch(0) is None


def test_none_fifo_over_fifty_requests():
    rng = np.random.default_rng(0)
    s = NoneScheduler(2)
    for i in range(50):
        s.add(req("RW"[i % 2], int(rng.integers(0, 1000)) * 8, rid=i, cpu=int(rng.integers(0, 2))), 0)
    assert [s.dispatch(0)[0].id for _ in range(50)] == list(range(50))


@pytest.mark.parametrize("age_ms,expect", [(5, "R"), (12, "W")])
def test_kyber_write_timeout(age_ms, expect):
    s = KyberScheduler()
    s.add(req("W", 0, t=0, rid=0), 0)
    now = age_ms * 1000
    s.add(req("R", 80, t=now, rid=1), now)
    assert s.dispatch(now)[0].op == expect


def test_kyber_only_writes_oldest_first():
    s = KyberScheduler()
    s.add(req("W", 50, t=0, rid=0), 0)
    s.add(req("W", 10, t=1, rid=1), 1)
    assert s.dispatch(2)[0].id == 0


def test_mq_deadline_lowest_sector():
    s = MqDeadlineScheduler()
    for i, sec in enumerate((70, 10, 40)):
        s.add(req("R", sec, rid=i), 0)
    assert s.dispatch(0)[0].sector == 10


def test_mq_deadline_expired_read_wins():
    s = MqDeadlineScheduler()
    s.add(req("W", 5, t=550_000, rid=0), 550_000)
    s.add(req("R", 900, t=0, rid=1), 0)
    assert s.dispatch(600_000)[0].sector == 900


def test_mq_deadline_empty():
    assert MqDeadlineScheduler().dispatch(0) is None


def test_bfq_single_process_is_fifo():
    s = BfqScheduler(BfqParams(decision_overhead_us=0))
    for i in range(30):
        s.add(req("R", (i * 37 % 11) * 8, rid=i), 0)
    assert [s.dispatch(0)[0].id for _ in range(30)] == list(range(30))


def test_bfq_charges_overhead_per_queue_selection():
    s = BfqScheduler()
    s.add(req("R", 0, issuer=1, rid=0), 0)
    s.add(req("R", 8, issuer=1, rid=1), 0)
    assert s.dispatch(0)[1] == 20
    assert s.dispatch(0)[1] == 0  # same queue, still within budget


def test_budget_rules():
    p = BfqParams()
    assert bfq_assign_budget(ProcessIoStats(), p) == p.base_budget
    seq = ProcessIoStats()
    sector = 0
    for _ in range(200):
        r = req("R", sector, 131072)
        seq.note(r)
        sector = r.end
    assert bfq_assign_budget(seq, p) == p.max_budget
    sporadic = ProcessIoStats()
    for s in (800, 16, 4000):
        sporadic.note(req("R", s))
    assert bfq_assign_budget(sporadic, p) == p.min_budget


@given(st.lists(st.tuples(st.integers(0, 1 << 20), st.integers(1, 32), st.booleans()), max_size=100))
def test_budget_always_within_bounds(history):
    p = BfqParams()
    stats = ProcessIoStats()
    for sector, pages, _ in history:
        stats.note(req("R", sector * 8, pages * 4096))
    assert p.min_budget <= bfq_assign_budget(stats, p) <= p.max_budget


# ---------------------------------------------------- block layer

def test_single_request_traced_once(mini_kernel):
    k = mini_kernel("none", device_us=20)
    k.blk.submit(BlockRequest("R", 0, 4096, 100))
    k.sim.run()
    assert [r[1] for r in k.blk.trace] == ["Q", "D", "C"]


def test_block_layer_not_idle_while_a_dispatch_decision_is_pending(mini_kernel):
    k = mini_kernel("bfq", device_us=20)
    k.blk.submit(BlockRequest("W", 0, 4096, 1))
    # the request has left the scheduler but is not yet on the device
    assert len(k.blk.sched) == 0 and k.device.in_flight == 0
    assert not k.blk.idle()
    k.sim.run()
    assert k.blk.idle()
    assert [r[1] for r in k.blk.trace] == ["Q", "D", "C"]


def test_adjacent_same_op_requests_merge(mini_kernel):
    k = mini_kernel("none", device_us=20, queue_depth=1)
    k.blk.submit(BlockRequest("W", 800, 4096, 1))  # occupies the device
    k.blk.submit(BlockRequest("W", 0, 4096, 1))
    k.blk.submit(BlockRequest("W", 8, 4096, 1))
    k.sim.run()
    dispatched = [r for r in k.blk.trace if r[1] == "D"]
    assert len(dispatched) == 2
    assert dispatched[1][5] == 8192
    assert k.blk.merges == 1
    assert sum(r.requested for r in k.blk.completed) == 3 * 4096


def test_read_and_write_do_not_merge(mini_kernel):
    k = mini_kernel("none", device_us=20, queue_depth=1)
    k.blk.submit(BlockRequest("W", 800, 4096, 1))
    k.blk.submit(BlockRequest("W", 0, 4096, 1))
    k.blk.submit(BlockRequest("R", 8, 4096, 1))
    k.sim.run()
    assert k.blk.merges == 0


def test_bad_geometry_rejected(mini_kernel):
    k = mini_kernel()
    with pytest.raises(ValueError):
        k.blk.submit(BlockRequest("R", 0, 100, 1))


def test_q2c_arithmetic():
    r = req("R", 0)
    r.t_queued, r.t_dispatched, r.t_completed = 0, 30, 52
    assert (r.q2d, r.d2c, r.q2c) == (30, 22, 52)


def test_queue_depth_one_serialises(mini_kernel):
    k = mini_kernel("none", device_us=40, queue_depth=1)
    a = BlockRequest("R", 0, 4096, 1)
    b = BlockRequest("R", 800, 4096, 2)
    k.blk.submit(a)
    k.blk.submit(b)
    k.sim.run()
    assert b.t_dispatched == a.t_completed
    assert b.q2c == a.d2c + b.d2c


def test_double_completion_is_fatal(mini_kernel):
    k = mini_kernel("none", device_us=5)
    r = BlockRequest("R", 0, 4096, 1)
    k.blk.submit(r)
    k.sim.run()
    with pytest.raises(DoubleCompletion):
        k.blk._complete(r)


def _random_load(k, seed, n=400):
    rng = np.random.default_rng(seed)
    t = 0
    for i in range(n):
        t += int(rng.integers(0, 15))
        op = "R" if rng.random() < 0.7 else "W"
        k.sim.at(t, k.blk.submit, BlockRequest(op, int(rng.integers(0, 1 << 16)) * 8, 4096,
                                               int(rng.choice([1, 100, 101, 102])), cpu=i % 2))
    k.sim.run()


@pytest.mark.parametrize("sched", ["none", "kyber", "mq-deadline", "bfq"])
def test_q2c_identity_for_every_request(mini_kernel, sched):
    k = mini_kernel(sched)
    _random_load(k, 3)
    assert len(k.blk.completed) == 400
    for r in k.blk.completed:
        assert r.t_queued <= r.t_dispatched <= r.t_completed
        assert r.q2c == r.q2d + r.d2c


def test_bfq_mean_q2d_exceeds_none_on_identical_streams(mini_kernel):
    means = {}
    for sched in ("none", "bfq"):
        k = mini_kernel(sched)
        _random_load(k, 11)
        means[sched] = sum(r.q2d for r in k.blk.completed) / len(k.blk.completed)
    assert means["bfq"] > means["none"]


def test_saturated_tail_far_above_mean(mini_kernel):
    k = mini_kernel("bfq", queue_depth=2)
    _random_load(k, 5, n=2000)
    q2c = sorted(r.q2c for r in k.blk.completed)
    assert q2c[int(0.99 * len(q2c))] > 2 * (sum(q2c) / len(q2c))


# ----------------------------------------------- conformance properties

@pytest.mark.parametrize("kind", sorted(CHECKERS))
@settings(max_examples=300)
@given(seed=st.integers(0, 2**63 - 1))
def test_scheduler_conformance(kind, seed):
    CHECKERS[kind](seed)
