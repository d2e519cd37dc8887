"""Miss rate of multi-start local search on a two-peak acquisition.

A single local search misses the global peak with probability p, which is
roughly the share of the box draining into the other basin. N independent
uniform starts all miss with probability p**N. The script estimates both
sides by simulation.

    python3 demos/miss_rate.py [trials]
"""

import sys

import numpy as np

from acqregret import (Acquisition, AcquisitionSpec, DirectConfig, Domain, Kernel,
                       direct_maximize, make_gp, multi_start_maximize)

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 300
X = np.array([[0.0], [0.5], [1.0]])
y = np.array([-1.0, 1.0, -0.8])
model = make_gp(X, y, Kernel("matern52", 1.0, [0.2]), 1e-3)
acq = Acquisition(AcquisitionSpec.for_targets("ei", y), model)
dom = Domain([0.01], [1.0])

x_glob = direct_maximize(acq, dom, DirectConfig(max_evals=20_000)).x_star
tol = 1e-3 * dom.diameter


def miss(n, t):
    r = multi_start_maximize(acq, dom, n, seed=1000 * n + t)
    return np.linalg.norm(r.x_star - x_glob) > tol


p1 = np.mean([miss(1, t) for t in range(trials)])
print(f"global maximizer x = {x_glob[0]:.4f}, single-start miss rate {p1:.3f}")
for n in (2, 4, 8):
    pn = np.mean([miss(n, t) for t in range(trials)])
    print(f"N={n}: observed {pn:.3f}   p1**N = {p1 ** n:.3f}")
