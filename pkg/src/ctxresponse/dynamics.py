"""Driven finite-dimensional systems, H(t) = H0 + g V(t), with hbar = 1.

Exact propagation is midpoint exponential stepping; the first-order pieces
(Dyson truncation, linear response, time-averaged perturbation) are Simpson
integrals of the interaction-picture perturbation.
"""
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import numkit
from .errors import (
    ImaginaryResidue,
    InputError,
    NotCyclic,
    NotDensityMatrix,
    StepCountTooSmall,
)
from .numkit import DEFAULT_TOL, dagger

DEFAULT_STEPS = 1024
DEFAULT_PANELS = 512

Pulse = Callable[[float], np.ndarray]


def constant_pulse(m) -> Pulse:
    m = numkit.check_hermitian(m, name="pulse amplitude")
    return lambda t: m


def half_sine_pulse(m, tau: float) -> Pulse:
    """``sin(pi t / tau) M``; vanishes at both ends of ``[0, tau]``."""
    m = numkit.check_hermitian(m, name="pulse amplitude")
    return lambda t: np.sin(np.pi * t / tau) * m


@dataclass(frozen=True)
class DrivenSystem:
    h0: np.ndarray
    v: Pulse
    g: float
    tau: float
    cyclic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "h0", numkit.check_hermitian(self.h0, name="h0"))
        if self.g < 0:
            raise InputError("coupling g must be >= 0")
        if not self.tau > 0:
            raise InputError("tau must be > 0")
        v0 = numkit.as_matrix(self.v(0.0))
        if v0.shape != self.h0.shape:
            raise InputError(f"v(t) has shape {v0.shape}, h0 has {self.h0.shape}")
        numkit.check_hermitian(v0, name="v(0)")
        if self.cyclic:
            for t in (0.0, self.tau):
                if numkit.opnorm(self.v(t)) > DEFAULT_TOL:
                    raise NotCyclic(f"cyclic protocol needs v({t}) = 0")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    def with_g(self, g: float) -> "DrivenSystem":
        return replace(self, g=g)

    def v_interaction(self, t: float) -> np.ndarray:
        eig = self.__dict__.get("_h0_eig")
        if eig is None:
            eig = numkit.hermitian_eig(self.h0)
            object.__setattr__(self, "_h0_eig", eig)
        w = eig.eigenvectors
        phase = np.exp(1j * t * eig.eigenvalues)
        # exp(i H0 t) V exp(-i H0 t) in the eigenbasis of H0
        return (w * phase) @ (dagger(w) @ numkit.as_matrix(self.v(t)) @ w) @ (dagger(w) * phase.conj()[:, None])


@dataclass(frozen=True)
class ResponseResult:
    delta_o: float
    order_used: str  # "exact" or "first_order"
    t: float
    o_shift: float = 0.0
    o_max: float = 0.0


def _product_of_steps(sys: DrivenSystem, t: float, n: int) -> np.ndarray:
    dt = t / n
    mids = (np.arange(n) + 0.5) * dt
    hs = np.array([sys.h0 + sys.g * sys.v(tm) for tm in mids])
    steps = numkit.expm_i_hermitian_batch(hs, dt)
    u = np.eye(sys.dim, dtype=complex)
    for step in steps:
        u = step @ u
    return u


def propagate_exact(
    sys: DrivenSystem, t: float, n_steps: int = DEFAULT_STEPS, check_tol: float | None = 1e-6
) -> np.ndarray:
    """Schrodinger-picture propagator U(t), time-ordered midpoint product.

    The result with ``n_steps`` is compared against ``2 n_steps``; if the
    Richardson error estimate ``||U_n - U_2n|| * 4/3`` exceeds ``check_tol``
    a ``StepCountTooSmall`` is raised.  ``check_tol=None`` skips the check.
    """
    if not 0 <= t <= sys.tau * (1 + 1e-12):
        raise InputError(f"t={t} outside [0, tau={sys.tau}]")
    if n_steps < 1:
        raise StepCountTooSmall("n_steps must be >= 1")
    if t == 0:
        return np.eye(sys.dim, dtype=complex)
    u = _product_of_steps(sys, t, n_steps)
    if check_tol is not None:
        u2 = _product_of_steps(sys, t, 2 * n_steps)
        err = numkit.opnorm(u - u2) * 4.0 / 3.0
        if err > check_tol:
            raise StepCountTooSmall(
                f"estimated propagation error {err:.2e} > {check_tol:.1e} with n_steps={n_steps}"
            )
    return u


def interaction_picture(op, h0, t: float) -> np.ndarray:
    """``exp(i H0 t) op exp(-i H0 t)``."""
    op = numkit.as_matrix(op)
    w = numkit.expm_i_hermitian(h0, -t)
    return w @ op @ dagger(w)


def propagate_interaction(sys: DrivenSystem, t: float, n_steps: int = DEFAULT_STEPS, **kw) -> np.ndarray:
    """U_I(t) = exp(i H0 t) U(t)."""
    return numkit.expm_i_hermitian(sys.h0, -t) @ propagate_exact(sys, t, n_steps, **kw)


def integrated_perturbation(sys: DrivenSystem, t: float, n_panels: int = DEFAULT_PANELS) -> np.ndarray:
    """``int_0^t V_I(t') dt'``, Hermitian by construction."""
    a = numkit.simpson_integrate(sys.v_interaction, 0.0, t, n_panels)
    return 0.5 * (a + dagger(a))


def dyson_first_order(sys: DrivenSystem, t: float, n_panels: int = DEFAULT_PANELS) -> np.ndarray:
    """First-order Dyson truncation ``1 - i g int V_I``; not unitary."""
    return np.eye(sys.dim, dtype=complex) - 1j * sys.g * integrated_perturbation(sys, t, n_panels)


def check_density_matrix(rho, tol: float = DEFAULT_TOL, name: str = "state") -> np.ndarray:
    rho = numkit.as_matrix(rho)
    if not numkit.is_hermitian(rho, tol):
        raise NotDensityMatrix(f"{name} is not Hermitian")
    rho = 0.5 * (rho + dagger(rho))
    if abs(np.trace(rho) - 1) > tol:
        raise NotDensityMatrix(f"{name} has trace {np.trace(rho).real:.6g}")
    if numkit.min_eigenvalue(rho) < -tol:
        raise NotDensityMatrix(f"{name} has a negative eigenvalue")
    return rho


def shift_observable(o, tol: float = DEFAULT_TOL):
    """Shift ``O`` so its spectrum starts at 0.  Returns ``(O', shift, o_max)``."""
    o = numkit.check_hermitian(o, tol, name="observable")
    vals = np.linalg.eigvalsh(o)
    shift = -float(vals[0])
    return o + shift * np.eye(o.shape[0]), shift, float(vals[-1] + shift)


def _expectation(rho, o) -> complex:
    return np.trace(rho @ o)


def delta_o_exact(sys: DrivenSystem, psi0, o, t: float, n_steps: int = DEFAULT_STEPS, **kw) -> ResponseResult:
    return response_from_propagator(propagate_interaction(sys, t, n_steps, **kw), sys, psi0, o, t)


def response_from_propagator(u_i, sys: DrivenSystem, psi0, o, t: float) -> ResponseResult:
    """Exact response given an already computed ``U_I(t)``."""
    rho = check_density_matrix(psi0, name="psi0")
    o, shift, o_max = shift_observable(o)
    o_i = interaction_picture(o, sys.h0, t)
    evolved = u_i @ rho @ dagger(u_i)
    d = (_expectation(evolved, o_i) - _expectation(rho, o_i)).real
    return ResponseResult(float(d), "exact", t, shift, o_max)


def delta_o_linear(
    sys: DrivenSystem, psi0, o, t: float, n_panels: int = DEFAULT_PANELS, tol: float = DEFAULT_TOL
) -> ResponseResult:
    """Kubo linear response ``i g Tr[rho [int V_I, O_I(t)]]``."""
    rho = check_density_matrix(psi0, name="psi0")
    o, shift, o_max = shift_observable(o)
    o_i = interaction_picture(o, sys.h0, t)
    a = integrated_perturbation(sys, t, n_panels)
    val = 1j * sys.g * np.trace(rho @ (a @ o_i - o_i @ a))
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e3 * tol * scale:
        raise ImaginaryResidue(f"linear response has imaginary part {val.imag:.3e}")
    return ResponseResult(float(val.real), "first_order", t, shift, o_max)


def time_averaged_perturbation(sys: DrivenSystem, n_panels: int = DEFAULT_PANELS) -> np.ndarray:
    """``X = (1/tau) int_0^tau V_I(t) dt``."""
    return integrated_perturbation(sys, sys.tau, n_panels) / sys.tau
