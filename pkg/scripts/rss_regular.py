"""Measured RSS distortion vs. the probabilistic bound on a 20-regular graph (N=400)."""
import argparse

from _common import write_rows
from spectral_coarsen.experiments import CoarseningPlan, rss_sweep
from spectral_coarsen.graph import Regular, generate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=50)
ap.add_argument("--ratio", type=float, default=0.4)
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out")
args = ap.parse_args()

g = generate(Regular(400, 20), 1)
sweep = rss_sweep(g, range(2, 201), CoarseningPlan(pot="heavy", ratio=args.ratio),
                  trials=args.trials, base_seed=100, jobs=args.jobs)
write_rows(sweep.rows(), args.out)
