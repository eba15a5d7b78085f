"""Eigenspace alignment per k on a 10-block SBM, with bound and random-subspace baseline."""
import argparse

from _common import write_rows
from spectral_coarsen.experiments import CoarseningPlan, sintheta_sweep
from spectral_coarsen.graph import SBM, generate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=10)
ap.add_argument("--ratio", type=float, default=0.4)
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out")
args = ap.parse_args()

g = generate(SBM(300, 10, 0.5, 0.02), 7)
sweep = sintheta_sweep(g, range(1, 21), CoarseningPlan(pot="heavy", ratio=args.ratio),
                       trials=args.trials, base_seed=200, jobs=args.jobs)
write_rows(sweep.rows(), args.out)
