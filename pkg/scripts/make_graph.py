"""Write a synthetic directed follower graph (preferential attachment on in-degree).

    python scripts/make_graph.py --n 2000 --m 4 --out data/synth2000.txt
"""
import argparse

import numpy as np


def follower_graph(n, m, seed):
    rng = np.random.default_rng(seed)
    edges = []
    indeg = np.ones(n)
    for v in range(m + 1, n):
        w = indeg[:v] / indeg[:v].sum()
        for u in rng.choice(v, size=m, replace=False, p=w):
            edges.append((v, int(u)))          # v follows u
            indeg[u] += 1
            if rng.random() < 0.3:             # some follows are reciprocated
                edges.append((int(u), v))
    for v in range(m + 1):
        edges.append((v, (v + 1) % (m + 1)))
    return edges


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="data/synth2000.txt")
    args = ap.parse_args()
    with open(args.out, "w") as fh:
        fh.write(f"# synthetic follower graph n={args.n} m={args.m} seed={args.seed}\n")
        for u, v in follower_graph(args.n, args.m, args.seed):
            fh.write(f"{u} {v}\n")
