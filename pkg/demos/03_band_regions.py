"""
Band regions
============

If the image distance is also squeezed into K1 d <= dT <= K2 d, the pair
constraints only hold on certain distance ranges. A brute-force grid over dT
should agree with the closed-form intervals.
"""
import numpy as np

from quasicontract import BandParams, corollary_verdict, region_report
from quasicontract.regions import oracle_mismatches

bands = [
    BandParams(0.5, 1.0, 0.7, 1.0),
    BandParams(0.5, 1.0, 0.6, 0.9),
    BandParams(0.5, 1.0, 0.4, 1.5, relaxed=True),
    BandParams(0.5, 1.0, 1.1, 1.3),
    BandParams(0.5, 1.0, 1.0, 1.2),
]
for b in bands:
    print(f"K1={b.K1:<4} K2={b.K2:<4} -> {corollary_verdict(b).name}")

b = BandParams(K=0.4, M=1.0, K1=0.8, K2=1.6)
rep = region_report(b)
print()
for field, value in vars(rep).items():
    print(f"{field:<15} {value}")

ds = np.linspace(0, 10, 5000)
bad = oracle_mismatches(b, ds, grid_size=1000)
print("oracle disagreements beyond one grid cell:", {k: int(np.size(v)) for k, v in bad.items()})
