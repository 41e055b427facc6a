"""Two-stroke engine: work over a unitary cycle and its noncontextual bound.

Stroke 1 (bath contact) is not simulated; the state ``rho0`` it leaves behind
is an input.  Work is reported signed, ``W = Tr[rho0 H0] - Tr[U rho0 U^dag H0]``
(positive means work extracted); power is ``W / tau``.
"""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import certify, channels, dynamics, numkit
from .dynamics import DEFAULT_PANELS, DEFAULT_STEPS, DrivenSystem
from .errors import BadInputRange, NotCyclic, NumericalError
from .numkit import DEFAULT_TOL, dagger


def qubit_state(x: float, y: float, z: float) -> np.ndarray:
    """Density matrix ``(1 + x X + y Y + z Z) / 2`` from a Bloch vector."""
    if x * x + y * y + z * z > 1 + 1e-12:
        raise BadInputRange("Bloch vector must have length <= 1")
    return 0.5 * (np.eye(2) + x * numkit.PAULI_X + y * numkit.PAULI_Y + z * numkit.PAULI_Z)


@dataclass(frozen=True)
class EngineSpec:
    sys: DrivenSystem
    rho0: np.ndarray
    e_max: float = field(init=False)
    e_shift: float = field(init=False)

    def __post_init__(self):
        if not self.sys.cyclic:
            raise NotCyclic("engine protocols need a cyclic DrivenSystem (v(0) = v(tau) = 0)")
        rho = dynamics.check_density_matrix(self.rho0, name="rho0")
        object.__setattr__(self, "rho0", rho)
        _, shift, e_max = dynamics.shift_observable(self.sys.h0)
        object.__setattr__(self, "e_max", e_max)
        object.__setattr__(self, "e_shift", shift)

    def with_g(self, g: float) -> "EngineSpec":
        return EngineSpec(self.sys.with_g(g), self.rho0)


@dataclass(frozen=True)
class WeakValueTerm:
    E_i: float
    prob: float
    im_weak_value: float | None  # None when the level is unpopulated


@dataclass(frozen=True)
class KDTerm:
    E_i: float
    im_kd: float


@dataclass(frozen=True)
class WorkResult:
    w_exact: float | None
    w_linear: float
    w_nc_bound: float | None
    weak_value_terms: list
    kd_terms: list
    w_from_weak_values: float
    w_from_kd: float
    w_correlation: float
    p_d: float | None = None


def work_exact(spec: EngineSpec, n_steps: int = DEFAULT_STEPS, tol: float = DEFAULT_TOL) -> float:
    sys, rho, h0 = spec.sys, spec.rho0, spec.sys.h0
    u = dynamics.propagate_exact(sys, sys.tau, n_steps)
    w = np.trace(rho @ h0) - np.trace(u @ rho @ dagger(u) @ h0)
    # same quantity through the interaction-picture propagator
    u_i = numkit.expm_i_hermitian(h0, -sys.tau) @ u
    w_i = np.trace(rho @ h0) - np.trace(u_i @ rho @ dagger(u_i) @ h0)
    if abs(w - w_i) > 10 * tol * max(1.0, numkit.opnorm(h0)):
        raise NumericalError(f"Schrodinger and interaction pictures disagree: {w.real} vs {w_i.real}")
    return float(w.real)


def work_linear(spec: EngineSpec, n_panels: int = DEFAULT_PANELS) -> float:
    """First-order work ``2 g tau Im Tr[rho0 X H0]``."""
    sys = spec.sys
    x = dynamics.time_averaged_perturbation(sys, n_panels)
    return float(2 * sys.g * sys.tau * np.trace(spec.rho0 @ x @ sys.h0).imag)


def work_correlation(spec: EngineSpec, n_panels: int = DEFAULT_PANELS) -> float:
    """First-order work from the two-point function of H_I(t) = H0 + g V_I(t).

    ``W = (1/i) int_0^tau Tr([H_I(t), H_I(0)] rho0) dt``; ``H_I(0) = H0``
    because the protocol is cyclic.  The integrand is a scalar integrated on
    its own, independently of ``X``.
    """
    sys, rho, h0 = spec.sys, spec.rho0, spec.sys.h0
    h_i0 = h0 + sys.g * sys.v(0.0)

    def integrand(t):
        h_it = h0 + sys.g * sys.v_interaction(t)
        return np.array([[np.trace((h_it @ h_i0 - h_i0 @ h_it) @ rho)]])

    val = numkit.simpson_integrate(integrand, 0.0, sys.tau, n_panels)[0, 0] / 1j
    return float(val.real)


def nc_work_bound(spec: EngineSpec, p_d: float) -> float:
    """``4 E_max p_d`` with ``E_max`` taken after shifting H0 to start at 0."""
    if not 0.0 <= p_d <= 1.0:
        raise BadInputRange(f"p_d must lie in [0, 1], got {p_d}")
    return 4.0 * spec.e_max * p_d


def weak_value_decomposition(
    spec: EngineSpec,
    n_panels: int = DEFAULT_PANELS,
    n_steps: int | None = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
) -> WorkResult:
    """Split the first-order work over the energy levels of H0.

    Per level ``E_i`` with projector ``P_i``: the Kirkwood-Dirac term
    ``Im Tr[P_i X rho0]`` and the generalized weak value
    ``Im Tr[P_i X rho0] / Tr[P_i rho0]``.  With ``Tr[P X rho] = conj Tr[rho X P]``
    the first-order work is ``-2 g tau sum_i E_i Im Tr[P_i X rho0]``.
    Pass ``n_steps=None`` to skip the exact propagation.
    """
    sys, rho = spec.sys, spec.rho0
    x = dynamics.time_averaged_perturbation(sys, n_panels)
    levels = numkit.hermitian_eig(sys.h0, tol).projectors(tol)

    wv_terms, kd_terms = [], []
    for e_i, proj in levels:
        kd = complex(np.trace(proj @ x @ rho))
        prob = float(np.trace(proj @ rho).real)
        wv = kd.imag / prob if prob > tol else None
        wv_terms.append(WeakValueTerm(e_i, prob, wv))
        kd_terms.append(KDTerm(e_i, kd.imag))

    pref = -2 * sys.g * sys.tau
    w_wv = pref * sum(t.E_i * t.prob * t.im_weak_value for t in wv_terms if t.im_weak_value is not None)
    w_kd = pref * sum(t.E_i * t.im_kd for t in kd_terms)
    w_lin = work_linear(spec, n_panels)
    scale = 10 * tol * max(1.0, abs(w_lin))
    if abs(w_kd - w_lin) > scale or abs(w_wv - w_lin) > scale:
        raise NumericalError(
            f"weak-value/KD reconstruction failed: linear={w_lin}, kd={w_kd}, wv={w_wv}"
        )

    w_ex = p_d = bound = None
    if n_steps is not None:
        w_ex = work_exact(spec, n_steps)
        u_i = dynamics.propagate_interaction(sys, sys.tau, n_steps)
        p_d = channels.minimal_pd(u_i).p_d
        bound = nc_work_bound(spec, p_d)
    return WorkResult(
        w_ex, w_lin, bound, wv_terms, kd_terms, float(w_wv), float(w_kd),
        work_correlation(spec, n_panels), p_d,
    )


@dataclass(frozen=True)
class EngineSweep:
    g_grid: list
    w_exact: list
    w_linear: list
    power: list
    p_d: list
    w_nc_bound: list
    gap_flags: list
    report: certify.CertificationReport


def engine_gap(
    spec: EngineSpec,
    g_grid: Sequence[float],
    n_steps: int = DEFAULT_STEPS,
    n_panels: int = DEFAULT_PANELS,
    s: float = 0.0,
    threads: int | None = None,
) -> EngineSweep:
    """Work versus g against ``W_NC = 4 E_max p_d``.

    Work is minus the response of ``O = H0`` at ``t = tau``, so this is
    :func:`certify.certify_gap` with the Hamiltonian as the observable.
    """
    rep = certify.certify_gap(
        spec.sys.with_g, spec.rho0, spec.sys.h0, spec.sys.tau, g_grid,
        n_steps=n_steps, n_panels=n_panels, s=s, threads=threads,
    )
    w_ex = [-r for r in rep.quantum_response]
    w_lin = [-r for r in rep.linear_response]
    tau = spec.sys.tau
    return EngineSweep(
        rep.g_grid, w_ex, w_lin, [w / tau for w in w_ex], rep.p_d,
        [nc_work_bound(spec, p) for p in rep.p_d], rep.gap_flags, rep,
    )
