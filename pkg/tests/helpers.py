"""Shared test scaffolding."""

from swapsim.blkio import BlockLayer, make_scheduler
from swapsim.completion import CompletionEstimator, CpuModel, Process
from swapsim.device import DeviceKind, DeviceModel, LatencySampler
from swapsim.engine import RandomSource, Simulator


class MiniKernel:
    """Just enough of a machine to drive processes against one device."""

    KSWAPD_PID = 1

    def __init__(self, scheduler="none", cores=2, ctx=5, device_us=None, queue_depth=8, seed=1, **sched_params):
        self.sim = Simulator()
        self.cpu = CpuModel(self.sim, cores, ctx)
        self.estimator = CompletionEstimator()
        rng = RandomSource(seed).stream("device")
        read = write = None
        if device_us is not None:
            read = write = LatencySampler(device_us, device_us, device_us)
        self.device = DeviceModel(self.sim, rng, DeviceKind.OPTANE, 1 << 30, queue_depth, read, write,
                                  transfer_us_per_page=0)
        self.blk = BlockLayer(self.sim, self.device, make_scheduler(scheduler, cores, **sched_params), cores)

    def spawn(self, body, policy, pid=100):
        p = Process(self, f"p{pid}", pid, body, policy)
        p.start()
        return p
