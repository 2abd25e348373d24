"""
Reading off a Bell inequality
=============================

The LP dual is a linear functional on correlation tables that no LHV model
pushes above 1. Here it turns out to be a CHSH form on two of the three
settings per side: the middle setting on each side adds nothing.
"""

import itertools

import numpy as np

from bellvis import LpProblem, SettingsSpec, build_prediction_matrix, solve
from bellvis.scans import chsh_value

spec = SettingsSpec.from_degrees([0, 60, 120], [30, 90, 150])
q = build_prediction_matrix(spec).values
result = solve(LpProblem(q))
w = result.witness
print(f"V* = {result.critical_v:.9f}")
print("witness coefficients:\n", np.round(w.coefficients, 4))
print(f"quantum value {w.quantum_value:.6f} = 1/V*")

###############################################################################
# CHSH sub-grids alone
# --------------------
# The best 2 x 2 sub-grid certifies V < 2/S_max, which already equals V*.

best = max(chsh_value(q[np.ix_(r, c)])
           for r in itertools.combinations(range(3), 2)
           for c in itertools.combinations(range(3), 2))
print(f"best CHSH sub-grid: S = {best:.6f}, bound V < {2 / best:.6f}")
