"""Finite ontological models and a brute-force check of the noncontextual bound.

Matrices are column-stochastic: ``T[l2, l1]`` is the probability of moving
from hidden state ``l1`` to ``l2``; ``xi[k, l]`` is the probability of outcome
``k`` in hidden state ``l``.
"""
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import numkit
from .errors import BadInputRange, BadParameters, NumericalError, UnknownLabel

STOCH_TOL = 1e-12
LABELS = ("T", "T_star", "T_prime", "T_id")


@dataclass(frozen=True)
class NCConstraint:
    p_d: float
    verified_residual: float


@dataclass(frozen=True)
class FiniteOM:
    mu: np.ndarray
    transitions: Mapping[str, np.ndarray]
    response: np.ndarray
    outcome_values: np.ndarray
    constraint: NCConstraint | None = field(default=None, compare=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        n = mu.size
        if np.any(mu < -STOCH_TOL) or abs(mu.sum() - 1) > STOCH_TOL:
            raise BadInputRange("mu must be a probability vector")
        trans = {k: np.asarray(v, dtype=float) for k, v in self.transitions.items()}
        trans.setdefault("T_id", np.eye(n))
        if not np.array_equal(trans["T_id"], np.eye(n)):
            raise BadInputRange("T_id must be exactly the identity")
        if any(t.shape != (n, n) for t in trans.values()):
            raise BadInputRange(f"transition matrices must be {n}x{n}")
        stack = np.stack(list(trans.values()))
        bad = (stack < -STOCH_TOL).any(axis=(1, 2)) | (np.abs(stack.sum(axis=1) - 1) > STOCH_TOL).any(axis=1)
        if bad.any():
            name = list(trans)[int(np.argmax(bad))]
            raise BadInputRange(f"transition {name!r} is not column-stochastic")
        xi = np.asarray(self.response, dtype=float)
        if xi.ndim != 2 or xi.shape[1] != n or np.any(xi < -STOCH_TOL) or np.any(xi > 1 + STOCH_TOL):
            raise BadInputRange("response must be an (outcomes, n_lambda) matrix with entries in [0, 1]")
        if np.any(np.abs(xi.sum(axis=0) - 1) > STOCH_TOL):
            raise BadInputRange("response columns must sum to 1")
        o = np.asarray(self.outcome_values, dtype=float)
        if o.shape != (xi.shape[0],) or np.any(o < 0):
            raise BadInputRange("outcome values must be nonnegative, one per outcome")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "response", xi)
        object.__setattr__(self, "outcome_values", o)

    @property
    def n_lambda(self) -> int:
        return self.mu.size

    @property
    def o_max(self) -> float:
        return float(self.outcome_values.max())

    def transition(self, label: str) -> np.ndarray:
        try:
            return self.transitions[label]
        except KeyError:
            raise UnknownLabel(f"no transformation labelled {label!r}") from None


def om_statistics(om: FiniteOM, label: str) -> np.ndarray:
    """``p(k) = sum_{l, l'} mu(l) T(l'|l) xi(k|l')``.

    Each product ``(mu T) xi`` is formed once and summed with ``math.fsum``,
    so the result is correctly rounded and independent of summation order.
    """
    terms = (om.mu[None, None, :] * om.transition(label)[None, :, :]) * om.response[:, :, None]
    return np.array([math.fsum(row) for row in terms.reshape(terms.shape[0], -1)])


def om_delta_o(om: FiniteOM, label: str = "T") -> float:
    """``sum_k o_k [p(k|T) - p(k|T_id)]``."""
    diff = om_statistics(om, label) - om_statistics(om, "T_id")
    return float(om.outcome_values @ diff)


def nc_residual(om: FiniteOM, p_d: float) -> float:
    """Max-norm violation of ``T/2 + T*/2 = (1 - p_d) 1 + p_d T'``."""
    t, ts, tp = om.transition("T"), om.transition("T_star"), om.transition("T_prime")
    lhs = 0.5 * t + 0.5 * ts
    rhs = (1 - p_d) * np.eye(om.n_lambda) + p_d * tp
    return float(np.max(np.abs(lhs - rhs)))


def _column_stochastic(rng, n):
    return rng.dirichlet(np.ones(n), size=n).T


def sample_nc_model(seed, n_lambda: int, n_outcomes: int, p_d: float, o_max: float = 1.0) -> FiniteOM:
    """Random finite model satisfying the reversibility constraint exactly.

    ``T = B + A`` and ``T* = B - A`` around ``B = (1 - p_d) 1 + p_d T'``, with
    ``A`` column-sum-free and scaled so both stay entrywise nonnegative.  The
    same ``seed`` always yields the same model.
    """
    if not 0 <= p_d <= 1:
        raise BadInputRange(f"p_d must lie in [0, 1], got {p_d}")
    if n_lambda < 1 or n_outcomes < 1:
        raise BadInputRange("n_lambda and n_outcomes must be >= 1")
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(n_lambda))
    xi = rng.dirichlet(np.ones(n_outcomes), size=n_lambda).T
    o = rng.uniform(0.0, o_max, size=n_outcomes)
    t_prime = _column_stochastic(rng, n_lambda)
    base = (1 - p_d) * np.eye(n_lambda) + p_d * t_prime

    a = rng.normal(size=(n_lambda, n_lambda))
    a -= a.mean(axis=0)
    mag = np.abs(a)
    nz = mag > 0
    scale = float(np.min(base[nz] / mag[nz])) if nz.any() else 0.0
    a *= scale * rng.uniform()

    t = np.clip(base + a, 0.0, None)
    ts = np.clip(base - a, 0.0, None)
    res = float(np.max(np.abs(0.5 * t + 0.5 * ts - base)))
    if res > STOCH_TOL:
        raise NumericalError(f"sampled model violates the constraint by {res:.2e}")
    return FiniteOM(mu, {"T": t, "T_star": ts, "T_prime": t_prime}, xi, o, NCConstraint(p_d, res))


@dataclass(frozen=True)
class OracleResult:
    n_samples: int
    violations: int
    max_ratio: float
    chain_violations: int
    symmetric_violations: int
    rows: list


def theorem_oracle(
    seed: int,
    n_samples: int,
    n_lambda_max: int = 6,
    n_outcomes_max: int = 4,
    pd_max: float = 0.2,
    keep_rows: bool = False,
) -> OracleResult:
    """Sample constrained models and count violations of ``|dO| <= 4 p_d o_max``.

    Also checks the one-sided chain ``T(l'|l) <= 2 p_d T'(l'|l)`` for
    ``l != l'`` and the bound with ``T`` and ``T*`` exchanged.  Sample ``i``
    uses seed ``(seed, i)``; its sizes and ``p_d`` come from the same stream.
    """
    violations = chain = sym = 0
    max_ratio = 0.0
    rows = []
    for i in range(n_samples):
        rng = np.random.default_rng((seed, i))
        n_lambda = int(rng.integers(1, n_lambda_max + 1))
        n_out = int(rng.integers(1, n_outcomes_max + 1))
        p_d = float(rng.uniform(0.0, pd_max))
        om = sample_nc_model((seed, i, 1), n_lambda, n_out, p_d)
        bound = 4 * p_d * om.o_max
        d = om_delta_o(om, "T")
        d_star = om_delta_o(om, "T_star")
        if abs(d) > bound + STOCH_TOL:
            violations += 1
        if abs(d_star) > bound + STOCH_TOL:
            sym += 1
        off = ~np.eye(n_lambda, dtype=bool)
        if np.any(om.transition("T")[off] > 2 * p_d * om.transition("T_prime")[off] + STOCH_TOL):
            chain += 1
        denom = p_d * om.o_max
        ratio = abs(d) / denom if denom > 0 else 0.0
        max_ratio = max(max_ratio, ratio)
        if keep_rows:
            rows.append((i, n_lambda, n_out, p_d, om.o_max, d, d_star, ratio))
    return OracleResult(n_samples, violations, max_ratio, chain, sym, rows)


def zeno_nc_survival(c: float, tau: float, N: int) -> float:
    """Survival ``(1 - c tau^2 / N^2)^N`` after N measurements in a model with
    ``p_d(t) = c t^2``."""
    if c < 0 or N < 1 or c * tau**2 / N**2 > 1:
        raise BadParameters(f"need c >= 0, N >= 1 and c tau^2 / N^2 <= 1 (c={c}, tau={tau}, N={N})")
    val = (1.0 - c * tau**2 / N**2) ** N
    if N > 1 and c * tau**2 / (N - 1) ** 2 <= 1:
        prev = (1.0 - c * tau**2 / (N - 1) ** 2) ** (N - 1)
        if val < prev - 1e-15:
            raise NumericalError("NC survival is not monotone in N")
    return float(val)


def zeno_quantum_survival(omega: float, tau: float, N: int) -> float:
    """Survival of |0> under Rabi driving interrupted by N projective measurements.

    Simulated step by step with ``exp(-i omega tau X / (2N))`` and checked
    against ``cos^(2N)(omega tau / (2N))``.
    """
    if N < 1:
        raise BadParameters("N must be >= 1")
    step = numkit.expm_i_hermitian(numkit.PAULI_X, omega * tau / (2 * N))
    psi = np.array([1.0, 0.0], dtype=complex)
    survival = 1.0
    for _ in range(N):
        amp = (step @ psi)[0]
        survival *= abs(amp) ** 2
        psi = np.array([1.0, 0.0], dtype=complex)  # collapse onto |0>
    closed = np.cos(omega * tau / (2 * N)) ** (2 * N)
    if abs(survival - closed) > 1e-10:
        raise NumericalError(f"Zeno simulation {survival} disagrees with closed form {closed}")
    return float(survival)
