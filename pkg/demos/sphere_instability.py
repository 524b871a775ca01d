"""
Great spheres are unstable
==========================

A totally geodesic ``S^n`` in the unit ``S^m`` has ``F = n(m - n)`` at every
point, so its integral is positive and some test section decreases volume.
"""

import numpy as np

from minstab.config import AnalysisConfig
from minstab.pipeline import run_analysis
from minstab.scenarios import great_sphere_toml

area = {1: 2 * np.pi, 2: 4 * np.pi}

for m, n in [(3, 1), (3, 2), (4, 2)]:
    rep = run_analysis(AnalysisConfig.from_toml(great_sphere_toml(m, n))).report
    s = rep.stability
    print(f"S^{n} in S^{m}: F in [{s['F_min']:.12f}, {s['F_max']:.12f}]")
    print(f"  integral F = {s['integral_F']:.10f}  (closed form {n * (m - n) * area[n]:.10f})")
    print(f"  verdict {s['verdict']}, worst test section E_{s['destabilizing_section']}")

###############################################################################
# The per-basis second variations sum to minus the integral of F.

Q = np.array(s["per_basis_Q"])
print("Q(N_E_A):", np.round(Q, 10))
print("sum Q + integral F =", Q.sum() + s["integral_F"])
