"""Run the read-heavy scenario under every scheduler and print switch-latency
percentiles normalised to BFQ."""

import argparse
import os

from swapsim import load_config, run_scenario
from swapsim.metrics import percentile

HERE = os.path.dirname(os.path.abspath(__file__))
SCHEDULERS = ("none", "kyber", "mq-deadline", "bfq")
PERCENTILES = (50, 90, 99, 99.9)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    lat, q2d = {}, {}
    for s in SCHEDULERS:
        cfg = load_config(os.path.join(HERE, "configs", f"read-heavy-{s}.json"))
        cfg.seed = args.seed
        rep = run_scenario(cfg)
        lat[s] = [r.latency_us for r in rep.switch_records if 41 <= r.tab_count <= 50]
        q2d[s] = rep.value("q2d_mean_us")
    ref = {p: percentile(lat["bfq"], p) for p in PERCENTILES}
    print("scheduler".ljust(12) + "".join(f"p{p}".rjust(10) for p in PERCENTILES) + "mean Q2D".rjust(12))
    for s in SCHEDULERS:
        row = "".join(f"{percentile(lat[s], p) / ref[p]:10.3f}" for p in PERCENTILES)
        print(s.ljust(12) + row + f"{q2d[s]:12.2f}")


if __name__ == "__main__":
    main()
