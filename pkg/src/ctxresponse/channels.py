"""Choi-matrix channels and the stochastic-reversibility probability p_d.

Choi convention: ``J = (Phi x id)(|phi+><phi+|)`` with the normalised maximally
entangled vector, so ``Tr J = 1``; the first tensor factor is the output.
For a unitary ``U`` the question answered here is: what is the smallest
``p`` for which

    1/2 U(.)U^dag + 1/2 U^dag(.)U = (1 - p) id + p C

holds with ``C`` a channel?
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import numkit
from .errors import (
    BadMixingParameter,
    BadWeights,
    BranchAmbiguity,
    DimMismatch,
    Infeasible,
    NumericalError,
)
from .numkit import DEFAULT_TOL, dagger

BISECTION_ITERS = 60
CROSS_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class QuantumChannel:
    dim: int
    choi: np.ndarray

    def __post_init__(self):
        if self.choi.shape != (self.dim**2, self.dim**2):
            raise DimMismatch(f"Choi matrix of a dim-{self.dim} channel must be {self.dim**2}x{self.dim**2}")

    def apply(self, rho) -> np.ndarray:
        d = self.dim
        j = self.choi.reshape(d, d, d, d)
        # Phi(rho)_{ab} = d * sum_{kl} J_{(a,k),(b,l)} rho_{kl}
        return d * np.einsum("akbl,kl->ab", j, np.asarray(rho, dtype=complex))

    def partial_trace_output(self) -> np.ndarray:
        d = self.dim
        return np.einsum("akal->kl", self.choi.reshape(d, d, d, d))


def choi_from_map(phi: Callable[[np.ndarray], np.ndarray], dim: int) -> QuantumChannel:
    j = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in range(dim):
        for l in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[k, l] = 1.0
            j += np.kron(phi(e), e)
    return QuantumChannel(dim, j / dim)


def choi_from_unitary(u, tol: float = DEFAULT_TOL) -> QuantumChannel:
    u = numkit.check_unitary(u, tol, name="U")
    d = u.shape[0]
    psi = u.reshape(-1) / np.sqrt(d)
    return QuantumChannel(d, np.outer(psi, psi.conj()))


def identity_channel(dim: int) -> QuantumChannel:
    return choi_from_unitary(np.eye(dim))


def depolarising_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(dim, np.eye(dim * dim, dtype=complex) / dim**2)


@dataclass(frozen=True)
class CPTPVerdict:
    psd_ok: bool
    tp_ok: bool
    min_eigenvalue: float
    tp_residual: float

    @property
    def ok(self) -> bool:
        return self.psd_ok and self.tp_ok


def is_cptp(ch: QuantumChannel, tol: float = DEFAULT_TOL) -> CPTPVerdict:
    lam = numkit.min_eigenvalue(ch.choi)
    tp = numkit.opnorm(ch.partial_trace_output() - np.eye(ch.dim) / ch.dim)
    return CPTPVerdict(lam >= -tol, tp <= tol, lam, tp)


def mixture(channels: Sequence[QuantumChannel], weights: Sequence[float], tol: float = DEFAULT_TOL) -> QuantumChannel:
    if len(channels) != len(weights) or not channels:
        raise BadWeights("need one weight per channel")
    w = np.asarray(weights, dtype=float)
    if np.any(w < -tol) or abs(w.sum() - 1) > tol:
        raise BadWeights(f"weights must be nonnegative and sum to 1, got {list(w)}")
    dim = channels[0].dim
    if any(c.dim != dim for c in channels):
        raise DimMismatch("channels in a mixture must share a dimension")
    return QuantumChannel(dim, sum(wi * c.choi for wi, c in zip(w, channels)))


@dataclass(frozen=True)
class ReversibilityCertificate:
    """``target = (1 - p_d) id + p_d residual`` with ``residual`` CPTP."""

    p_d: float
    residual_channel: QuantumChannel
    min_choi_eigenvalue: float
    method: str
    target: QuantumChannel
    p_tilde: float
    noise: float = 0.0
    closed_form_pd: float | None = None
    reconstruction_error: float = field(default=0.0, compare=False)


def _reconstruction_error(target, p, residual) -> float:
    ident = identity_channel(target.dim).choi
    return numkit.opnorm(target.choi - (1 - p) * ident - p * residual.choi)


def _clean_residual(ch: QuantumChannel, tol: float) -> QuantumChannel:
    """Undo the rounding that dividing by a small p amplifies.

    Bisection leaves ``M - (1-p) id`` PSD only up to an absolute slack, which
    becomes ``slack / p`` in the residual.  First ``1/d (x) Delta`` is
    subtracted so the partial trace is exact, then just enough of the
    completely depolarising channel is mixed in to lift the spectrum back
    to ``>= -tol/2``.  The reconstruction moves by about ``p mu (1 + d^2)``,
    with ``p mu`` bounded by the slack.
    """
    d = ch.dim
    delta = ch.partial_trace_output() - np.eye(d) / d
    choi = ch.choi - np.kron(np.eye(d) / d, 0.5 * (delta + dagger(delta)))
    mu = max(0.0, -numkit.min_eigenvalue(choi) - 0.5 * tol)
    if mu > 0:
        choi = (choi + mu * np.eye(d * d)) / (1 + mu * d * d)
    return QuantumChannel(d, choi)


def closed_form_pd(u, tol: float = DEFAULT_TOL) -> float:
    """p_d from the cosine structure of the Choi matrix in the eigenbasis of log U.

    In that basis ``(U + U^dag)/2`` has Choi entries ``cos(E_k - E_j)/d`` on the
    ``|kk><jj|`` block and zero elsewhere, so feasibility reduces to
    ``Cos - (1 - p) e e^T >= 0`` with ``e`` the all-ones vector.  That holds iff
    ``e`` lies in the range of ``Cos`` and ``(1 - p) e^T Cos^+ e <= 1``.
    """
    u = numkit.check_unitary(u, tol, name="U")
    try:
        h = numkit.unitary_log(u, tol)
    except BranchAmbiguity:
        # channel is blind to a global phase; rotate the spectrum off the branch cut
        phases = np.sort(np.angle(np.linalg.eigvals(u)))
        gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
        k = int(np.argmax(gaps))
        mid = phases[k] + gaps[k] / 2
        h = numkit.unitary_log(u * np.exp(-1j * (mid - np.pi)), tol)
    energies = numkit.hermitian_eig(h, tol).eigenvalues
    cos = np.cos(energies[:, None] - energies[None, :])
    vals, vecs = np.linalg.eigh(cos)
    e = np.ones(len(energies))
    keep = vals > 1e-12 * len(energies)
    coeff = vecs.T @ e
    outside = np.sum(coeff[~keep] ** 2)
    if outside > 1e-9:
        return 1.0
    quad = float(np.sum(coeff[keep] ** 2 / vals[keep]))
    return float(min(1.0, max(0.0, 1.0 - 1.0 / quad)))


def minimal_pd(u, tol: float = DEFAULT_TOL, cross_check: bool = True) -> ReversibilityCertificate:
    """Smallest p making ``[M - (1-p) id] / p`` a channel, by bisection on ``[0, 1]``.

    Trace preservation of the residual is automatic (both ``M`` and ``id`` are
    trace preserving), so feasibility is ``lambda_min(M - (1-p) J_id) >= -eps/2``
    with ``eps = tol * max(1, ||M||)``.  Feasibility is monotone in ``p``.  The
    residual is cleaned afterwards so it is TP and PSD within ``tol``.
    """
    u = numkit.check_unitary(u, tol, name="U")
    d = u.shape[0]
    target = mixture([choi_from_unitary(u, tol), choi_from_unitary(dagger(u), tol)], [0.5, 0.5])
    j_id = identity_channel(d).choi
    eps = tol * max(1.0, numkit.opnorm(target.choi))

    def feasible(p: float) -> bool:
        if p == 0.0:
            return numkit.opnorm(target.choi - j_id) <= eps
        return numkit.min_eigenvalue(target.choi - (1 - p) * j_id) >= -0.5 * eps

    if not feasible(1.0):
        raise Infeasible("p = 1 must always be feasible")
    if feasible(0.0):
        p = 0.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        p = hi

    if p == 0.0:
        residual = identity_channel(d)
    else:
        residual = _clean_residual(QuantumChannel(d, (target.choi - (1 - p) * j_id) / p), tol)
    lam = numkit.min_eigenvalue(residual.choi)

    cf = None
    if cross_check:
        cf = closed_form_pd(u, tol)
        if abs(cf - p) > CROSS_CHECK_TOL:
            raise NumericalError(f"bisection p_d={p:.10g} disagrees with closed form {cf:.10g}")

    err = _reconstruction_error(target, p, residual)
    if err > 10 * tol:
        raise NumericalError(f"reconstruction residual {err:.2e} too large")
    return ReversibilityCertificate(p, residual, lam, "bisection", target, p, 0.0, cf, err)


def mix_with_depolarising(cert: ReversibilityCertificate, s: float, tol: float = DEFAULT_TOL) -> ReversibilityCertificate:
    """Certificate for ``T = (1 - s) U + s D`` with ``D`` completely depolarising.

    ``p_d = p~ + s (1 - p~)``; the residual becomes
    ``[(1 - s) p~ C + s D] / p_d``.
    """
    if not 0.0 <= s <= 1.0:
        raise BadMixingParameter(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return cert
    d = cert.target.dim
    dep = depolarising_channel(d)
    pt = cert.p_d
    p = pt + s * (1.0 - pt)
    residual = QuantumChannel(d, ((1 - s) * pt * cert.residual_channel.choi + s * dep.choi) / p)
    target = QuantumChannel(d, (1 - s) * cert.target.choi + s * dep.choi)
    err = _reconstruction_error(target, p, residual)
    if err > 10 * tol:
        raise NumericalError(f"reconstruction residual {err:.2e} too large after depolarising")
    return replace(
        cert,
        p_d=p,
        residual_channel=residual,
        min_choi_eigenvalue=numkit.min_eigenvalue(residual.choi),
        target=target,
        noise=s,
        reconstruction_error=err,
    )
