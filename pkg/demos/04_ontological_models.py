"""
Brute force: random noncontextual models never beat 4 p_d o_max
===============================================================

Each model is built so that the fair mixture of T and T* equals
(1 - p_d) identity + p_d T'.  The response it predicts is then compared with
the bound.  The Zeno curves at the end show survival under N measurements.
"""

import numpy as np

from ctxresponse import ontomodel

om = ontomodel.sample_nc_model(seed=1, n_lambda=4, n_outcomes=3, p_d=0.1)
print("T =\n", np.round(om.transition("T"), 4))
print("statistics after T  ", ontomodel.om_statistics(om, "T"))
print("statistics after id ", ontomodel.om_statistics(om, "T_id"))
print("response", ontomodel.om_delta_o(om), " bound", 4 * 0.1 * om.o_max)

res = ontomodel.theorem_oracle(seed=0, n_samples=20000)
print(f"{res.n_samples} models, {res.violations} violations, largest ratio {res.max_ratio:.3f} (limit 4)")

# %%
print(f"{'N':>6} {'NC survival':>14} {'quantum':>14}")
for n in (1, 10, 100, 1000):
    print(f"{n:6d} {ontomodel.zeno_nc_survival(1.0, 1.0, n):14.10f} "
          f"{ontomodel.zeno_quantum_survival(np.pi, 1.0, n):14.10f}")
