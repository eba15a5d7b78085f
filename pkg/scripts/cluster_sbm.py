"""Relative k-means error of coarse spectral clustering vs. ratio, with and without refinement."""
import argparse

from _common import write_rows
from spectral_coarsen.experiments import cluster_sweep
from spectral_coarsen.graph import SBM, generate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=50)
ap.add_argument("--ratios", default="0.1,0.2,0.3")
ap.add_argument("--steps", default="0,1,2,5,10")
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out")
args = ap.parse_args()

g = generate(SBM(300, 5, 0.3, 0.01), 3)
sweep = cluster_sweep(g, 5, [float(r) for r in args.ratios.split(",")], [int(t) for t in args.steps.split(",")],
                      trials=args.trials, base_seed=500, jobs=args.jobs)
write_rows(sweep.rows(), args.out)
