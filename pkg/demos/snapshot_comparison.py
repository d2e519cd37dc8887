"""Compare DIRECT with multi-started L-BFGS on one frozen EI surface.

Fits a Matern-5/2 GP to 10 seeded Branin observations, then maximizes
expected improvement with DIRECT and with 1, 10 and 100 local starts.
Prints the acquisition value reached, the Branin value at the chosen
point and the wall time of each optimizer.

    python3 demos/snapshot_comparison.py [seed]
"""

import sys

import numpy as np

from acqregret import (Acquisition, AcquisitionSpec, Domain, direct_maximize, fit_gp,
                       get_benchmark, multi_start_maximize)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
bench = get_benchmark("branin")
unit = Domain.unit(bench.dim)
rng = np.random.default_rng(seed)

U = rng.random((10, bench.dim))
y = bench.evaluate(bench.domain.from_unit(U))
y = (y - y.mean()) / y.std()
model = fit_gp(U, y, "matern52", seed=seed)
acq = Acquisition(AcquisitionSpec.for_targets("ei", y), model)

# first calls compile the numba kernels; keep that out of the timings
direct_maximize(acq, unit)
multi_start_maximize(acq, unit, 1, seed=seed)

runs = {"DIRECT": direct_maximize(acq, unit)}
for n in (1, 10, 100):
    runs[f"local({n})"] = multi_start_maximize(acq, unit, n, seed=seed)

print(f"{'optimizer':<11} {'EI':>12} {'f(x)':>10} {'evals':>7} {'ms':>8}")
for name, r in runs.items():
    f = bench.evaluate(bench.domain.from_unit(r.x_star))
    print(f"{name:<11} {r.value:12.6g} {f:10.4f} {r.n_evals:7d} {r.wall_time * 1e3:8.2f}")
