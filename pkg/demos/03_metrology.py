"""
Phase estimation: quantum Fisher information against the noncontextual ceiling
=============================================================================

Rotate |+> by exp(-i eta Z/2) and read it out in the X basis.  The Fisher
information is 1 for every eta.  A noncontextual model of a tiny rotation by
delta can carry at most 4 K^2 delta^2 sum 1/p, which vanishes as delta -> 0.
"""

import numpy as np

from ctxresponse import metrology, numkit

plus = np.full((2, 2), 0.5)
minus = np.eye(2) - plus
h = numkit.PAULI_Z / 2

for eta in (np.pi / 6, np.pi / 3, 2 * np.pi / 3):
    s = metrology.EstimationScheme(plus, h, [plus, minus], eta)
    print(f"eta = {eta:.4f}  p = {np.round(metrology.outcome_probabilities(s), 6)}  "
          f"F = {metrology.fisher_information(s):.9f}")

print("4 Var(H) =", metrology.qfi_benchmark(plus, h))

s = metrology.EstimationScheme(plus, h, [plus, minus], np.pi / 3)
report = metrology.fisher_report(s, np.logspace(-3, -1, 5))
print("K =", report.pd_constant)
for d, u in zip(report.delta_grid, report.nc_upper):
    print(f"delta = {d:.1e}   NC ceiling = {u:.3e}")
