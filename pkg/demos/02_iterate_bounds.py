"""
Iterate bounds and permanence
=============================

B_j shrinks towards M / K by a factor 1 - K per step. The permanence index
says how many steps it takes before every pair that started within R stays
within M / K + eps for good.
"""
import numpy as np

from quasicontract import (
    ContractionParams,
    Metric,
    PermanenceQuery,
    bound_closed_form,
    bound_recurrence,
    empirical_entry_index,
    iterate_pair,
    make_compliant_test_map,
    permanence_index,
)

p = ContractionParams(K=0.3, M=0.6)
R = 10.0
print("j   closed form        recurrence")
for j in (0, 1, 2, 5, 10, 20, 50):
    print(f"{j:<3} {bound_closed_form(j, R, p):<18.15g} {bound_recurrence(j, R, p):.15g}")

for eps in (0.25, 0.05, 1e-3):
    j0 = permanence_index(PermanenceQuery(R, eps, p))
    print(f"eps={eps:<6} j0={j0}")

# A compliant map in the plane and one orbit pair started at distance R.
T = make_compliant_test_map(p, dim=2, seed=3)
metric = Metric.norm(2)
x0 = np.array([1.0, -2.0])
y0 = x0 + np.array([R, 0.0])
rec = iterate_pair(T, x0, y0, 60, metric)
j0 = permanence_index(PermanenceQuery(R, 0.25, p))
emp = empirical_entry_index(rec, p.M / p.K + 0.25)
print(f"\norbit enters the M/K + 0.25 band at step {emp}; guaranteed by step {j0}")
print("first distances:", np.round(rec.distances[:8], 4))
