"""
A qubit engine that beats every noncontextual model
====================================================

H0 = diag(0, 1), a half-sine Pauli-y pulse, and rho(0) = |+><+|.
The extracted work grows linearly in g while the noncontextual ceiling
4 E_max p_d grows as g^2, so at small coupling the quantum engine is out of
reach for any noncontextual account.
"""

import numpy as np

from ctxresponse import dynamics, engine, numkit

sys = dynamics.DrivenSystem(
    h0=np.diag([0.0, 1.0]),
    v=dynamics.half_sine_pulse(numkit.PAULI_Y, tau=1.0),
    g=0.0,
    tau=1.0,
    cyclic=True,
)
spec = engine.EngineSpec(sys, engine.qubit_state(1, 0, 0))

g_grid = np.logspace(-3, -1, 12)
sweep = engine.engine_gap(spec, g_grid)

print(f"{'g':>10} {'W exact':>14} {'W linear':>14} {'W_NC':>12}  gap")
for g, w, wl, b, flag in zip(sweep.g_grid, sweep.w_exact, sweep.w_linear, sweep.w_nc_bound, sweep.gap_flags):
    print(f"{g:10.3e} {w:14.6e} {wl:14.6e} {b:12.4e}  {'yes' if flag else 'no'}")

rep = sweep.report
print()
print("work slope  ", round(rep.response_slope, 4))
print("bound slope ", round(rep.bound_slope, 4))
print("crossing g* ", rep.g_star)
print("verdict     ", rep.verdict)

# The same first-order work, split over the two energy levels.  The
# Kirkwood-Dirac terms carry the imaginary parts that make W nonzero.
wv = engine.weak_value_decomposition(spec.with_g(0.01))
for term in wv.kd_terms:
    print(f"E = {term.E_i:.1f}: Im KD = {term.im_kd:+.6f}")
print("W from KD terms   ", wv.w_from_kd)
print("W from correlation", wv.w_correlation)

# Depolarising noise puts a floor 4 s E_max under the bound.  Small noise
# only trims the window; heavy noise closes it.
for s in (1e-4, 1e-2, 0.5):
    r = engine.engine_gap(spec, g_grid, s=s).report
    print(f"s = {s:g}: {r.verdict}, gap on [{r.g_gap_min}, {r.g_gap_max}]")
