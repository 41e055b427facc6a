"""Phase estimation with U_eta = exp(-i H eta): Fisher information and its
noncontextual ceiling."""
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels, numkit
from .dynamics import check_density_matrix
from .errors import BadPOVM, DegenerateProbability, DeltaTooLarge, NotPure, UnstableLimit
from .numkit import DEFAULT_TOL, dagger

PROB_FLOOR = 1e-12
DEFAULT_D_ETA = 1e-4
PD_DELTA = 1e-3
PD_DELTA_CHECK = 5e-4


@dataclass(frozen=True)
class EstimationScheme:
    psi0: np.ndarray
    h: np.ndarray
    povm: tuple
    eta: float

    def __post_init__(self):
        rho = check_density_matrix(self.psi0, name="psi0")
        purity = float(np.trace(rho @ rho).real)
        if abs(purity - 1) > 1e-8:
            raise NotPure(f"psi0 must be pure, Tr[rho^2] = {purity:.10f}")
        object.__setattr__(self, "psi0", rho)
        object.__setattr__(self, "h", numkit.check_hermitian(self.h, name="h"))
        povm = tuple(numkit.as_matrix(m) for m in self.povm)
        d = rho.shape[0]
        if not povm:
            raise BadPOVM("POVM must have at least one element")
        for k, m in enumerate(povm):
            if m.shape != (d, d) or not numkit.is_psd(m, 1e-9):
                raise BadPOVM(f"POVM element {k} is not a PSD {d}x{d} matrix")
        if numkit.opnorm(sum(povm) - np.eye(d)) > 1e-9:
            raise BadPOVM("POVM elements do not sum to the identity")
        object.__setattr__(self, "povm", povm)

    def at(self, eta: float) -> "EstimationScheme":
        return EstimationScheme(self.psi0, self.h, self.povm, eta)


@dataclass(frozen=True)
class FisherReport:
    probabilities: list
    fisher: float
    qfi_benchmark: float
    nc_upper: list
    delta_grid: list
    excluded: list
    pd_constant: float


def _probs(s: EstimationScheme, eta: float) -> np.ndarray:
    u = numkit.expm_i_hermitian(s.h, eta)
    rho = u @ s.psi0 @ dagger(u)
    return np.array([np.trace(m @ rho).real for m in s.povm])


def outcome_probabilities(s: EstimationScheme) -> list:
    """``p(x|eta) = Tr[M_x U rho U^dag]``."""
    return [float(p) for p in _probs(s, s.eta)]


def fisher_information(s: EstimationScheme, d_eta: float = DEFAULT_D_ETA) -> float:
    """Classical Fisher information of the outcome statistics at ``s.eta``.

    Derivatives are central differences with one Richardson level.  Outcomes
    with ``p <= 1e-12`` are dropped with a warning.
    """
    p0 = _probs(s, s.eta)
    keep = p0 > PROB_FLOOR
    excluded = [int(k) for k in np.flatnonzero(~keep)]
    if excluded:
        warnings.warn(f"outcomes {excluded} have p <= {PROB_FLOOR} and are excluded", stacklevel=2)

    def central(h):
        return (_probs(s, s.eta + h) - _probs(s, s.eta - h)) / (2 * h)

    stencil = [_probs(s, s.eta + k * d_eta / 2) for k in (-2, -1, 1, 2)]
    if any(np.any(p[keep] <= PROB_FLOOR) for p in stencil):
        raise DegenerateProbability("a retained outcome probability reaches the floor inside the stencil")
    dp = (4 * central(d_eta / 2) - central(d_eta)) / 3
    return float(np.sum(dp[keep] ** 2 / p0[keep]))


def qfi_benchmark(psi0, h) -> float:
    """``4 Var(H)`` in the pure state ``psi0``."""
    rho = check_density_matrix(psi0, name="psi0")
    if abs(np.trace(rho @ rho).real - 1) > 1e-8:
        raise NotPure("qfi_benchmark needs a pure state")
    h = numkit.check_hermitian(h, name="h")
    mean = np.trace(rho @ h).real
    second = np.trace(rho @ h @ h).real
    return float(4 * (second - mean**2))


def nc_fisher_upper(probabilities: Sequence[float], K: float, delta_grid: Sequence[float]) -> list:
    """Leading-order noncontextual Fisher bound ``4 K^2 delta^2 sum_x 1/p(x)``.

    ``K`` is the constant in ``p_d = K delta^2``.  Each ``delta`` must satisfy
    ``2 K delta^2 < min p`` for the expansion to apply; the O(p_d^3) remainder
    is not included.
    """
    p = np.asarray(probabilities, dtype=float)
    if np.any(p <= PROB_FLOOR):
        raise DegenerateProbability("all probabilities must exceed the floor")
    if K < 0:
        raise ValueError("K must be >= 0")
    inv = float(np.sum(1.0 / p))
    out = []
    for delta in delta_grid:
        if delta <= 0:
            raise DeltaTooLarge(f"delta must be > 0, got {delta}")
        if 2 * K * delta**2 >= p.min():
            raise DeltaTooLarge(f"2 K delta^2 = {2 * K * delta**2:.3g} >= min p = {p.min():.3g}")
        out.append(4 * K**2 * delta**2 * inv)
    return out


def nc_pd_constant(h, tol: float = DEFAULT_TOL) -> float:
    """``K = lim p_d(exp(-i H delta)) / delta^2``, read off at delta = 1e-3.

    A second estimate at delta = 5e-4 must agree to 1%.
    """
    h = numkit.check_hermitian(h, tol, name="h")
    ks = []
    for delta in (PD_DELTA, PD_DELTA_CHECK):
        p = channels.minimal_pd(numkit.expm_i_hermitian(h, delta)).p_d
        ks.append(p / delta**2)
    k, k_check = ks
    if k == 0 and k_check == 0:
        return 0.0
    if abs(k - k_check) > 0.01 * max(abs(k), abs(k_check)):
        raise UnstableLimit(f"p_d / delta^2 not converged: {k:.6g} vs {k_check:.6g}")
    return float(k)


def fisher_report(s: EstimationScheme, delta_grid: Sequence[float], d_eta: float = DEFAULT_D_ETA) -> FisherReport:
    probs = outcome_probabilities(s)
    excluded = [i for i, p in enumerate(probs) if p <= PROB_FLOOR]
    kept = [p for p in probs if p > PROB_FLOOR]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = fisher_information(s, d_eta)
    k = nc_pd_constant(s.h)
    return FisherReport(
        probs, f, qfi_benchmark(s.psi0, s.h), nc_fisher_upper(kept, k, delta_grid),
        [float(d) for d in delta_grid], excluded, k,
    )
