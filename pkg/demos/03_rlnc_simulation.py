"""
Random linear network coding at the cut-set bound
=================================================

Random combinations over GF(2^16) store files up to the min-cut and fail
deterministically beyond it.
"""
import numpy as np

from mrgrc import (ResourceProfile, SystemParams, adversarial_trace, build_ifg,
                   init_storage, max_flow, monte_carlo, run_trace)

params = SystemParams(n=3, k=2, d=2, m=3, ell=0, t=2)
profile = ResourceProfile(2, 2)
trace = adversarial_trace(params)

print(" B  success")
for rep in monte_carlo(params, profile, range(8, 13), trace, trials=200, seed=0):
    print(f"{rep.file_size:2d}  {rep.success_rate:.3f}")

# one run in detail: rank seen by each collector pair after the repairs
rng = np.random.default_rng(1)
state = run_trace(init_storage(params, profile, 12, rng), trace, rng)
for pair in [(1, 2), (1, 3), (2, 3)]:
    flow = max_flow(build_ifg(params, profile, trace, pair))
    print(f"collectors {pair}: rank {state.rank(pair)}, min-cut {flow}")

# a small field loses a little
small = monte_carlo(params, profile, 10, trace, trials=200, field="gf256", seed=0)
print("GF(2^8) success at B=10:", small.success_rate)
