"""Operational-condition test, noncontextual bound, and the g-sweep certificate."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import channels, dynamics, numkit
from .dynamics import DEFAULT_PANELS, DEFAULT_STEPS, DrivenSystem
from .errors import BadC, BadInputRange, LemmaFailed, NonPositiveG, TooFewPoints

JTILDE_TOL = 1e-10
C_GRID_DECADES = range(7)  # 10^0 .. 10^6 times max(c_kj)
MIN_GRID_POINTS = 5
RESPONSE_SLOPE_MAX = 1.2
BOUND_SLOPE_MIN = 1.8
RESPONSE_FLOOR = 1e-13


@dataclass(frozen=True)
class JtildeReport:
    alpha: np.ndarray
    c: np.ndarray
    C_used: float
    jtilde: np.ndarray
    jtilde_eigenvalues: np.ndarray
    strictly_positive: bool
    min_eigenvalue_over_C: float
    kernel_dim: int = 0
    verdict: str = ""
    C_grid: tuple = ()


def build_jtilde(alpha: Sequence[float], C: float, tol: float = JTILDE_TOL) -> JtildeReport:
    """``J~_kj = 1 - (alpha_k - alpha_j)^2 / C``."""
    if not C > 0:
        raise BadC(f"C must be > 0, got {C}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size == 0:
        raise BadC("alpha must be nonempty")
    c = (alpha[:, None] - alpha[None, :]) ** 2
    jt = 1.0 - c / C
    vals = np.linalg.eigvalsh(jt)
    kernel = int(np.sum(np.abs(vals) <= tol))
    return JtildeReport(alpha, c, float(C), jt, vals, bool(vals[0] > tol), float(vals[0]), kernel)


def c_grid_for(alpha) -> list[float]:
    alpha = np.asarray(alpha, dtype=float)
    cmax = float(np.max((alpha[:, None] - alpha[None, :]) ** 2))
    base = cmax if cmax > 0 else 1.0
    return [base * 10.0**k for k in C_GRID_DECADES]


def scan_jtilde(alpha, C_grid: Sequence[float] | None = None, tol: float = JTILDE_TOL) -> JtildeReport:
    """Evaluate J~ over a C grid and keep the C with the largest minimal eigenvalue.

    Verdict ``pass`` if some C makes J~ strictly positive, ``marginal`` if the
    best minimal eigenvalue is within ``tol`` of zero, ``fail`` otherwise.
    """
    grid = list(C_grid) if C_grid is not None else c_grid_for(alpha)
    reports = [build_jtilde(alpha, C, tol) for C in grid]
    best = max(reports, key=lambda r: r.min_eigenvalue_over_C)
    lam = best.min_eigenvalue_over_C
    if lam > tol:
        verdict = "pass"
    elif lam >= -tol:
        verdict = "marginal"
    else:
        verdict = "fail"
    return JtildeReport(
        best.alpha, best.c, best.C_used, best.jtilde, best.jtilde_eigenvalues,
        best.strictly_positive, lam, best.kernel_dim, verdict, tuple(grid),
    )


def lemma_test(
    sys: DrivenSystem, t: float, C_grid: Sequence[float] | None = None, n_panels: int = DEFAULT_PANELS
) -> JtildeReport:
    a = dynamics.integrated_perturbation(sys, t, n_panels)
    alpha = numkit.hermitian_eig(a).eigenvalues
    return scan_jtilde(alpha, C_grid)


def nc_response_bound(p_d: float, o_max: float) -> float:
    """Largest response any noncontextual model can give: ``4 p_d o_max``."""
    if not 0.0 <= p_d <= 1.0 or o_max < 0:
        raise BadInputRange(f"need p_d in [0, 1] and o_max >= 0, got {p_d}, {o_max}")
    return 4.0 * p_d * o_max


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def __call__(self, g):
        return np.exp(self.intercept) * np.asarray(g) ** self.slope


def fit_scaling_exponent(g: Sequence[float], y: Sequence[float], tol: float = 1e-10) -> PowerLawFit:
    """Least-squares line through ``(log g, log |y|)``.

    Points with ``|y| <= 10 tol max|y|`` are treated as numerically zero and
    dropped.
    """
    g = np.asarray(g, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(g <= 0):
        raise NonPositiveG("all g must be > 0 for a log-log fit")
    ymax = float(np.max(y, initial=0.0))
    keep = y > 10 * tol * ymax
    if ymax == 0 or keep.sum() < 3:
        raise TooFewPoints(f"only {int(keep.sum())} usable points for the fit")
    x, ly = np.log(g[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2, int(keep.sum()))


@dataclass(frozen=True)
class CertificationReport:
    g_grid: list
    quantum_response: list
    linear_response: list
    p_d: list
    p_tilde: list
    nc_bound: list
    gap_flags: list
    o_max: float
    o_shift: float
    response_slope: float | None
    bound_slope: float | None
    noisy_bound_slope: float | None
    g_star: float | None
    g_gap_min: float | None
    g_gap_max: float | None
    verdict: str
    lemma: JtildeReport
    noise: float = 0.0
    notes: list = field(default_factory=list)


def _sweep_point(sys_family, psi0, o, t, n_steps, n_panels, s, g):
    sys = sys_family(g)
    u_i = dynamics.propagate_interaction(sys, t, n_steps)
    exact = dynamics.response_from_propagator(u_i, sys, psi0, o, t)
    linear = dynamics.delta_o_linear(sys, psi0, o, t, n_panels)
    cert = channels.minimal_pd(u_i)
    noisy = channels.mix_with_depolarising(cert, s) if s > 0 else cert
    return exact, linear, cert.p_d, noisy.p_d


def _gap_run(flags, anchored: bool):
    """Index range ``(i, j)`` of the longest run of flagged grid points.

    With ``anchored`` the run has to start at the smallest g.
    """
    best = None
    i = 0
    while i < len(flags):
        if flags[i]:
            j = i
            while j + 1 < len(flags) and flags[j + 1]:
                j += 1
            if best is None or j - i > best[1] - best[0]:
                best = (i, j)
            i = j + 1
        else:
            i += 1
    if best is not None and anchored and best[0] != 0:
        return None
    return best


def certify_gap(
    sys_family: Callable[[float], DrivenSystem],
    psi0,
    o,
    t: float,
    g_grid: Sequence[float],
    n_steps: int = DEFAULT_STEPS,
    n_panels: int = DEFAULT_PANELS,
    s: float = 0.0,
    threads: int | None = None,
) -> CertificationReport:
    """Sweep g and compare the quantum response with the noncontextual bound.

    The bound uses the realised ``p_d`` (including depolarising noise ``s``);
    the bound slope is fitted on the noiseless ``p~_d`` so that the O(g^2)
    structure of the unitary part is what gets tested.  Verdict
    ``contextual`` needs response slope <= 1.2, bound slope >= 1.8 and a gap
    at every grid point from the smallest g up to ``g_gap_max``.  With noise
    (``s > 0``) the bound saturates at ``4 s o_max`` as g -> 0, so the gap is
    instead required on a contiguous run of at least ``MIN_GRID_POINTS``
    grid points ``[g_gap_min, g_gap_max]``.
    """
    g_grid = [float(g) for g in sorted(g_grid)]
    if any(g <= 0 for g in g_grid):
        raise NonPositiveG("g_grid entries must be > 0")
    lemma = lemma_test(sys_family(g_grid[0]), t, n_panels=n_panels)
    if lemma.verdict == "fail":
        raise LemmaFailed(f"J~ has minimal eigenvalue {lemma.min_eigenvalue_over_C:.3e} for every C")

    work = lambda g: _sweep_point(sys_family, psi0, o, t, n_steps, n_panels, s, g)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            points = list(pool.map(work, g_grid))
    else:
        points = [work(g) for g in g_grid]

    o_max = points[0][0].o_max
    o_shift = points[0][0].o_shift
    resp = [p[0].delta_o for p in points]
    lin = [p[1].delta_o for p in points]
    p_tilde = [p[2] for p in points]
    p_d = [p[3] for p in points]
    bound = [nc_response_bound(p, o_max) for p in p_d]
    flags = [abs(r) > b for r, b in zip(resp, bound)]

    notes = []
    floor = RESPONSE_FLOOR * max(1.0, o_max)
    if lemma.verdict == "marginal":
        notes.append("J~ is only positive semidefinite (marginal lemma verdict)")
    r_fit = b_fit = nb_fit = None
    if max(abs(r) for r in resp) <= floor:
        notes.append("all responses below the numeric floor")
    else:
        try:
            r_fit = fit_scaling_exponent(g_grid, resp)
            b_fit = fit_scaling_exponent(g_grid, [nc_response_bound(p, o_max) for p in p_tilde])
            nb_fit = fit_scaling_exponent(g_grid, bound)
        except TooFewPoints as exc:
            notes.append(f"fit failed: {exc}")

    run = _gap_run(flags, anchored=(s == 0))
    if run is not None and s > 0 and run[1] - run[0] + 1 < MIN_GRID_POINTS:
        run = None
    g_gap_min = g_grid[run[0]] if run else None
    g_gap_max = g_grid[run[1]] if run else None
    g_star = None
    if r_fit is not None and nb_fit is not None and nb_fit.slope != r_fit.slope:
        # crossing of the fitted power laws |response| = bound
        log_g = (r_fit.intercept - nb_fit.intercept) / (nb_fit.slope - r_fit.slope)
        if math.isfinite(log_g) and abs(log_g) < 700:
            g_star = math.exp(log_g)

    if r_fit is None or b_fit is None or len(g_grid) < MIN_GRID_POINTS:
        verdict = "inconclusive"
    elif r_fit.slope <= RESPONSE_SLOPE_MAX and b_fit.slope >= BOUND_SLOPE_MIN and g_gap_max is not None:
        verdict = "contextual"
    else:
        verdict = "not_contextual"

    return CertificationReport(
        g_grid, resp, lin, p_d, p_tilde, bound, flags, o_max, o_shift,
        r_fit.slope if r_fit else None,
        b_fit.slope if b_fit else None,
        nb_fit.slope if nb_fit else None,
        g_star, g_gap_min, g_gap_max, verdict, lemma, s, notes,
    )
