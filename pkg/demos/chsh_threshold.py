"""
The CHSH threshold
==================

Two settings per side at the standard angles give the largest quantum
violation of the CHSH inequality. The LP finds the visibility at which an
LHV model first exists, and the dual hands back the CHSH inequality itself.
"""

import math

import numpy as np

from bellvis import LpProblem, SettingsSpec, build_prediction_matrix, solve, verify_witness

# settings in degrees; correlations are -cos(alpha - beta)
spec = SettingsSpec.from_degrees([0, 90], [45, 135])
q = build_prediction_matrix(spec).values
print("Q =\n", np.round(q, 6))

result = solve(LpProblem(q))
print(f"V* = {result.critical_v:.12f}   (1/sqrt(2) = {1 / math.sqrt(2):.12f})")

###############################################################################
# The LHV model at V*
# -------------------
# A mixture of deterministic strategy pairs reproduces V* Q exactly.

for pair, p in result.model.support:
    print(f"  p = {p:.4f}   {pair}")
print("reconstruction error:", np.max(np.abs(result.model.correlations() - result.critical_v * q)))

###############################################################################
# The Bell witness
# ----------------
# Rescaled so the best deterministic strategy scores 1, the witness
# coefficients are a CHSH form. The quantum value is sqrt(2).

w = result.witness
print("witness coefficients (x2):\n", np.round(2 * w.coefficients, 6))
report = verify_witness(w, q, result.critical_v)
print(f"LHV bound {report.lhv_bound:.9f}, quantum value {report.quantum_value:.9f}")
