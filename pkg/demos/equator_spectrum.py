"""
Second variation of the equator
===============================

For the equator of the unit 2-sphere and the normal field ``f(t) nu`` the
second variation reduces to ``int (f'^2 - f^2) dt``. The first three Fourier
modes give ``-2 pi``, ``0`` and ``3 pi``.
"""

import numpy as np

from minstab.scenarios import scenario
from minstab.stability import NormalField, finite_difference_field, quadratic_form_Q

sigma = scenario("equator-circle").build()[2]
mesh = sigma.mesh(512)
nodes = sigma.evaluate(mesh.nodes)
t = mesh.nodes[:, 0]
nu = np.array([g.frame.normal[0] for g in nodes])

# the chart runs at unit speed, so d/dt is the derivative along the frame
for k in range(4):
    f, df = np.cos(k * t), -k * np.sin(k * t)
    eta = NormalField(f[:, None] * nu, df[:, None, None] * nu[:, None, :])
    print(f"mode {k}: Q = {quadratic_form_Q(eta, nodes, mesh): .10f}   expected {np.pi * (k * k - 1) * (2 if k == 0 else 1): .10f}")

###############################################################################
# Any normal field works through central differences in the chart.

coarse = sigma.mesh(64)
coarse_nodes = sigma.evaluate(coarse.nodes)
eta = finite_difference_field(lambda g: np.cos(2 * g.u[0]) * g.frame.normal[0], sigma, coarse_nodes)
print("mode 2 by differences, 64 nodes:", quadratic_form_Q(eta, coarse_nodes, coarse))
