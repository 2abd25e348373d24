"""
Random settings
===============

Draw random 5 x 5 settings and record the smallest critical visibility.
Pass a trial count on the command line to run a bigger campaign.
"""

import sys

from bellvis.scans import INV_SQRT2, RANDOM_COPLANAR, RANDOM_VECTOR, ScanConfig, run_random_scan

count = int(sys.argv[1]) if len(sys.argv) > 1 else 200

for kind in (RANDOM_COPLANAR, RANDOM_VECTOR):
    report = run_random_scan(ScanConfig(kind, n=5, m=5, count=count, seed=1), workers=4)
    s = report.summary
    print(f"{kind}: {s['solved']} solved, min V* = {s['min_v']:.9f}, mean V* = {s['mean_v']:.6f}")
    print(f"  below 1/sqrt(2): {s['below_threshold']}, "
          f"with a CHSH sub-grid: {sum(r.chsh_subset is not None for r in report.records)}")

###############################################################################
# The smallest value found is never below 1/sqrt(2).

print("1/sqrt(2) =", INV_SQRT2)
