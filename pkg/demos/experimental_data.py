"""
Critical visibility of measured correlations
============================================

Measured correlation tables can be fed to the solver directly. Two tables
from photon Bell experiments ship with the package.
"""

from bellvis import LpProblem, load_fixture, solve, verify_model, verify_witness
from bellvis.formats import render_text

for name in ("weinfurter-michler", "long-distance"):
    q = load_fixture(name).values
    result = solve(LpProblem(q))
    print(f"== {name} ({q.shape[0]} x {q.shape[1]})")
    print(render_text(result))

    ###########################################################################
    # Both certificates are checked independently of the solver.
    print("model check:", verify_model(result.model, q))
    print("witness check:", verify_witness(result.witness, q, result.critical_v))
    print()
