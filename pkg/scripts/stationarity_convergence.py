"""Max relative error of empirical visit frequencies vs the stationary law, by walk length.

Shows the ~1/sqrt(steps) decay for RW, MHRW and FS on a small random graph.

    python scripts/stationarity_convergence.py --steps 1e5,1e6,1e7
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

from contentsampling.samplers import SamplerConfig, sample, stationary

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import random_connected_graph  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.08)
    ap.add_argument("--steps", default="1e5,1e6,1e7")
    ap.add_argument("--walkers", type=int, default=10)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    g = random_connected_graph(args.n, args.p, seed=1)
    print("sampler,steps,max_rel_err,seconds")
    for sid in ("RW", "MHRW", "FS"):
        pi = stationary(sid, g)
        for n in (int(float(s)) for s in args.steps.split(",")):
            t0 = time.perf_counter()
            tr = sample(sid, g, SamplerConfig(walkers=args.walkers, max_steps=n), seed=args.seed)
            err = np.abs(np.bincount(tr.vertices, minlength=args.n) / len(tr) / pi - 1).max()
            print(f"{sid},{n},{err:.4f},{time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main()
