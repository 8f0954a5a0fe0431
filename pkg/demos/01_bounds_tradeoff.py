"""
File-size bounds and the storage/bandwidth trade-off
=====================================================

Two upper bounds on the file size of a clustered code with batch repair:
one for functional repair and a smaller one for exact repair.  They agree
when the batch size divides the number of non-local nodes.
"""
from fractions import Fraction

from mrgrc import (EXACT, FUNCTIONAL, ResourceProfile, SystemParams, classify,
                   local_help_profile, tradeoff_curve)

# three clusters of three nodes, any two clusters decode, two nodes fail at once
params = SystemParams(n=3, k=2, d=2, m=3, ell=0, t=2)
rep = classify(params, ResourceProfile(2, 2))
print(f"B_F = {rep.functional}, B_E = {rep.exact}  ({rep.case.value}, a={rep.decomposition.a}, b={rep.decomposition.b})")

# with one local helper the two non-local nodes form exactly one batch
rep = classify(params.replace(ell=1), ResourceProfile(2, 2))
print(f"ell=1: B_F = {rep.functional}, B_E = {rep.exact}  ({rep.case.value})")

# minimal beta for a unit file along the alpha axis, both repair modes
big = SystemParams(n=5, k=4, d=4, m=3, ell=0, t=2)
for mode in (FUNCTIONAL, EXACT):
    print(f"\n{mode} repair")
    print(f"{'alpha':>10} {'beta':>10}")
    for p in tradeoff_curve(big, 1, mode, grid=6):
        print(f"{float(p.alpha):10.4f} {float(p.beta):10.4f}")

# local help only pays off after the plateau
prof = local_help_profile(7, 4, 5, 17, 5, ResourceProfile(1, 1))
print("\nell  B_F")
for ell, value in prof.values:
    print(f"{ell:3d}  {value}")
print("plateau:", prof.observed_plateau, "predicted:", prof.predicted_plateau)
