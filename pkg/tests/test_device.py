from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swapsim import preset, run_scenario
from swapsim.device import (
    SECONDS_PER_YEAR, DeviceKind, EnergyMeter, LatencySampler, Op, Target, account_energy, default_samplers,
    estimate_lifetime, lifetime_report,
)

GIB = 1 << 30


def test_optane_read_mean_over_many_draws():
    read, _ = default_samplers(DeviceKind.OPTANE)
    xs = read.sample(np.random.default_rng(1), 100_000)
    assert abs(xs.mean() - 22.4) / 22.4 < 0.05
    assert xs.min() >= 9.0 and xs.max() <= 5380.0


def test_nand_read_mean_is_six_times_optane():
    read, write = default_samplers(DeviceKind.NAND)
    xs = read.sample(np.random.default_rng(2), 100_000)
    assert abs(xs.mean() - 134.4) / 134.4 < 0.05
    assert write.mean == pytest.approx(10 * 22.4)


def test_optane_writes_default_to_read_fit():
    read, write = default_samplers(DeviceKind.OPTANE)
    assert (write.mu, write.sigma, write.lo, write.hi) == (read.mu, read.sigma, read.lo, read.hi)


@given(st.floats(1, 1000), st.floats(1.01, 50), st.floats(1.01, 500), st.integers(0, 2**32 - 1))
def test_samples_respect_clamps(lo, mean_mult, hi_mult, seed):
    mean = lo * mean_mult
    hi = mean * hi_mult
    s = LatencySampler(mean, lo, hi)
    xs = s.sample(np.random.default_rng(seed), 2000)
    assert xs.min() >= lo and xs.max() <= hi


def test_degenerate_sampler_is_constant():
    s = LatencySampler(22.0, 22.0, 22.0)
    assert set(s.sample(np.random.default_rng(0), 100).tolist()) == {22.0}


# -------------------------------------------------------------- energy

def test_energy_examples():
    assert account_energy(Target.DRAM, Op.READ, 1) == pytest.approx(4.4, rel=1e-12)
    assert account_energy(Target.NVM, Op.WRITE, 32768) == pytest.approx(553_123.84, rel=1e-12)
    assert account_energy(Target.NVM, Op.READ, 0) == 0


def test_nvm_write_rate_is_the_even_mix():
    assert EnergyMeter().per_bit(Target.NVM, Op.WRITE) == pytest.approx(16.88, rel=1e-12)


@given(st.lists(st.tuples(st.sampled_from(list(Target)), st.sampled_from(list(Op)), st.integers(0, 10**9)),
                max_size=50))
def test_energy_is_additive_and_linear(moves):
    m = EnergyMeter()
    total = sum(m.account_energy(t, o, b) for t, o, b in moves)
    assert m.total_pj() == pytest.approx(total, rel=1e-9, abs=1e-9)
    # same bits in one lump per category give the same energy
    lump = EnergyMeter()
    for (t, o), bits in m.bits.items():
        lump.account_energy(t, o, bits)
    assert lump.by_category() == m.by_category()
    assert all(v >= 0 for v in m.by_category().values())


def test_negative_bits_rejected():
    with pytest.raises(ValueError):
        EnergyMeter().account_energy(Target.DRAM, Op.READ, -1)


# ------------------------------------------------------------ lifetime

def test_lifetime_examples():
    assert estimate_lifetime(GIB, 1e6, GIB, 1.0) == 1e6
    assert estimate_lifetime(GIB, 1e6, GIB, 0.53) == pytest.approx(5.3e5, rel=1e-12)
    assert estimate_lifetime(GIB, 1e6, 0, 1.0) == float("inf")


def test_lifetime_anchor_rate():
    # solving for 4.5 years on a 16 GB device with 10^6 endurance gives ~112.7 MB/s
    years = estimate_lifetime(16e9, 1e6, 112.7e6, 1.0) / SECONDS_PER_YEAR
    assert years == pytest.approx(4.5, rel=0.002)


positive = st.fractions(min_value=Fraction(1, 10**6), max_value=10**12)


@given(positive, positive, positive, st.fractions(min_value=Fraction(1, 1000), max_value=1), st.integers(2, 64))
def test_lifetime_proportionality_exact(cap, endurance, rate, eff, k):
    base = estimate_lifetime(cap, endurance, rate, eff)
    assert estimate_lifetime(cap, endurance, rate / k, eff) == base * k
    assert estimate_lifetime(cap * k, endurance, rate, eff) == base * k
    assert estimate_lifetime(cap, endurance * k, rate, eff) == base * k
    assert estimate_lifetime(cap, endurance, rate, eff / k) == base / k


@given(st.integers(1, 10**12), st.integers(1, 10**12), st.integers(1, 1 << 40))
def test_halving_writes_doubles_lifetime(written, elapsed, cap):
    a = lifetime_report(2 * written, elapsed, cap)
    b = lifetime_report(written, elapsed, cap)
    assert b["optimistic_years"] == 2 * a["optimistic_years"]
    assert b["realistic_years"] == pytest.approx(0.53 * b["optimistic_years"], rel=1e-15)


def test_zero_writes_unbounded():
    r = lifetime_report(0, 10**6, GIB)
    assert r["optimistic_years"] == r["realistic_years"] == float("inf")


@pytest.mark.parametrize("field", ["efficiency"])
def test_efficiency_bounds(field):
    with pytest.raises(ValueError):
        estimate_lifetime(1, 1, 1, 0)
    with pytest.raises(ValueError):
        estimate_lifetime(1, 1, 1, 1.5)


# ------------------------------------------------------------- service

def test_queue_depth_never_exceeded_in_a_run():
    cfg = preset("optane")
    cfg.scale = 1024
    cfg.queue_depth = 3
    cfg.workload.heavy_switches = 400
    rep = run_scenario(cfg, keep_machine=True)
    dev = rep.machine.device
    assert 1 <= dev.max_in_flight <= 3
    assert dev.in_flight == 0
    written = sum(r.requested for r in rep.requests if r.op == "W")
    assert dev.wear_bytes_written == written == rep.value("swapout_device_bytes")
