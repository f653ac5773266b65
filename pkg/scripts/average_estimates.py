"""Mean estimate per copy-count bin for DCE, MLE, SCE and WCE under UNI on CDS I.

Desk-scale version of the averaged-estimate comparison: the WCE and SCE means
sit on the truth, DCE over-weights highly replicated content, MLE needs a
large budget.

    python scripts/average_estimates.py --graph data/synth2000.txt --W 20 --out average_estimates.csv
"""
import argparse
import csv

import numpy as np

from contentsampling.graph import load_edge_list
from contentsampling.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--graph", required=True)
    ap.add_argument("--W", type=int, default=20)
    ap.add_argument("--n-content", type=int, default=10_000)
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--mle-budgets", default="0.01,0.1,0.5")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="average_estimates.csv")
    args = ap.parse_args()

    g = load_edge_list(args.graph, directed=True)
    base = ExperimentConfig(scheme="CDS1", n_content=args.n_content, W=args.W, sampler="UNI",
                            runs=args.runs, base_seed=args.seed, directed=True)
    columns = {}
    for est in ("DCE", "SCE", "WCE"):
        columns[est] = run_experiment(base.replace(estimator=est), graph=g, jobs=args.jobs)
    for bf in map(float, args.mle_budgets.split(",")):
        columns[f"MLE@{bf:g}"] = run_experiment(base.replace(estimator="MLE", budget_fraction=bf),
                                                graph=g, jobs=args.jobs)
    ref = columns["WCE"]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "true_omega", *columns])
        for i in np.flatnonzero(ref.covered):
            k = ref.labels[i]
            row = [int(k), ref.true_omega[i]]
            for r in columns.values():
                j = np.searchsorted(r.labels, k)
                row.append(r.mean_estimate[j])
            w.writerow(row)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
