"""
Slices of S^3 x T^2
===================

Factor slices are totally geodesic, ``F`` vanishes on them and the
certificate cannot decide. The trace matrix ``A`` identifies which
configuration each slice realises.
"""

from minstab.pipeline import run_analysis
from minstab.scenarios import scenario

for name in ("slice-m1", "slice-m2", "product-geodesic"):
    s = run_analysis(scenario(name)).report.stability
    cls = s["classification"]
    print(f"{name:17s} integral F = {s['integral_F']:.2e}  {s['verdict']:13s} A-form {cls['case']}")
    for case, d in sorted(cls["distances"].items()):
        print(f"    distance to {case:9s} {d:.2e}")
