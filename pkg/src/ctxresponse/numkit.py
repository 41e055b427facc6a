"""Dense complex linear algebra and quadrature for small operators.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``; nothing here
wraps them.  All tolerances are relative to ``max(1, ||A||_2)``.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import BadInputRange, BadPanelCount, BranchAmbiguity, NoConvergence, NotHermitian, NotUnitary

DEFAULT_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


def _scale(a: np.ndarray) -> float:
    return max(1.0, opnorm(a))


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return opnorm(a - dagger(a)) <= tol * _scale(a)


def is_unitary(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return opnorm(dagger(a) @ a - np.eye(a.shape[0])) <= tol


def is_psd(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        return False
    return min_eigenvalue(a) >= -tol * _scale(a)


def check_hermitian(a, tol: float = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a)
    err = opnorm(a - dagger(a))
    if err > tol * _scale(a):
        raise NotHermitian(f"{name} is not Hermitian: ||A - A^dag|| = {err:.3e}")
    return 0.5 * (a + dagger(a))


def check_unitary(u, tol: float = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    u = as_matrix(u)
    err = opnorm(dagger(u) @ u - np.eye(u.shape[0]))
    if err > tol:
        raise NotUnitary(f"{name} is not unitary: ||U^dag U - 1|| = {err:.3e}")
    return u


@dataclass(frozen=True)
class HermitianEig:
    """Spectral decomposition with ascending eigenvalues."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)

    def projectors(self, tol: float = DEFAULT_TOL):
        """Group numerically equal eigenvalues and return ``[(value, projector)]``."""
        vals, vecs = self.eigenvalues, self.eigenvectors
        scale = max(1.0, float(np.max(np.abs(vals))))
        groups = []
        start = 0
        for k in range(1, len(vals) + 1):
            if k == len(vals) or vals[k] - vals[k - 1] > tol * scale:
                block = vecs[:, start:k]
                groups.append((float(np.mean(vals[start:k])), block @ dagger(block)))
                start = k
        return groups


def hermitian_eig(a, tol: float = DEFAULT_TOL) -> HermitianEig:
    a = check_hermitian(a, tol)
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return HermitianEig(vals, vecs)


def min_eigenvalue(a) -> float:
    a = as_matrix(a)
    return float(np.linalg.eigvalsh(0.5 * (a + dagger(a)))[0])


def expm_i_hermitian(h, s: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Return ``exp(-i s H)`` for Hermitian ``H``."""
    eig = hermitian_eig(h, tol)
    v = eig.eigenvectors
    return (v * np.exp(-1j * s * eig.eigenvalues)) @ dagger(v)


def expm_i_hermitian_batch(hs: np.ndarray, s: float) -> np.ndarray:
    """Stacked version of :func:`expm_i_hermitian` for ``(n, d, d)`` input.

    No Hermiticity check; callers build ``hs`` from checked operators.
    """
    hs = 0.5 * (hs + dagger(hs))
    vals, vecs = np.linalg.eigh(hs)
    phases = np.exp(-1j * s * vals)
    return (vecs * phases[:, None, :]) @ dagger(vecs)


def unitary_log(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Hermitian ``H`` with ``U = exp(-iH)``, eigenvalues in ``(-pi, pi)``.

    Raises ``BranchAmbiguity`` when an eigenphase sits within ``tol`` of pi,
    where the branch choice would be arbitrary.
    """
    u = check_unitary(u, tol)
    t, z = scipy.linalg.schur(u, output="complex")
    off = t - np.diag(np.diag(t))
    if np.max(np.abs(off), initial=0.0) > 10 * tol:
        raise NoConvergence("Schur form of a unitary is not diagonal")
    angles = -np.angle(np.diag(t))
    if np.any(np.pi - np.abs(angles) <= tol):
        raise BranchAmbiguity("eigenphase within tol of pi; log branch is ambiguous")
    h = (z * angles) @ dagger(z)
    return 0.5 * (h + dagger(h))


def simpson_integrate(
    f: Callable[[float], np.ndarray], t0: float, t1: float, n_panels: int
) -> np.ndarray:
    """Composite Simpson rule applied entrywise to a matrix-valued ``f``."""
    if n_panels < 2 or n_panels % 2:
        raise BadPanelCount(f"n_panels must be even and >= 2, got {n_panels}")
    if t1 < t0:
        raise BadInputRange("simpson_integrate needs t1 >= t0")
    ts = np.linspace(t0, t1, n_panels + 1)
    values = np.array([f(t) for t in ts])
    if t1 == t0:
        return np.zeros_like(values[0])
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = (t1 - t0) / n_panels
    return np.tensordot(w, values, axes=1) * (h / 3.0)
