"""A small Monte Carlo comparison in the style of the simulation study.

Runs 30 replications at n=100, p=500 for two correlation levels and three
sparsity levels, then prints the mean squared error of sigma_hat / sigma
for each method. Takes a few minutes; pass a number to change the
replication count.

    python demos/03_benchmark.py [reps]
"""

from __future__ import annotations

import sys

from varsigma.simulation import SimulationSpec, run_benchmark

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 30
methods = ["naive", "reid", "natural", "organic", "sqrt", "oracle"]

for rho in (0.3, 0.9):
    print(f"\nrho = {rho}   (MSE of sigma_hat/sigma, {reps} reps)")
    print(f"{'alpha':>6} " + " ".join(f"{m:>8}" for m in methods))
    for alpha in (0.1, 0.5, 0.9):
        rep = run_benchmark(SimulationSpec(100, 500, rho, alpha, 1.0, seed=11), methods, reps)
        cells = []
        for s in rep.summaries:
            mark = "*" if s.n_failed else " "
            cells.append(f"{s.mse:7.4f}{mark}")
        print(f"{alpha:6.1f} " + " ".join(cells) + f"   [{rep.wall_time:.0f}s]")
print("\n* some replications failed for that method (e.g. Reid with s >= n) and were excluded")
