"""Curvature extraction, theoretical rate pairs and empirical decay estimation.

The asymptotic behavior of a surrogate-minimization scheme near a fixed point
theta* is governed by two matrices: the second derivative of the surrogate in
its minimization slot (A*) and the negated mixed derivative (-d12 Q = B*),
both reduced to the direction space of the feasible set.  The extreme absolute
generalized Rayleigh quotients of the reduced pencil bound the geometric decay
of the iterates from above and below, coincide with it when the upper rate
squared does not exceed the lower rate, and transform in closed form under the
extragradient and alpha-EM variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg
from .domains import ConvexDomain
from .linalg import NotPositiveDefinite, RatePair
from .rng import CounterRNG
from .surrogate import SurrogateProblem, Trace

DEFAULT_BURN_IN = 0.3
MIN_WINDOW_POINTS = 10
DEFAULT_RATE_TOL = 0.02
H4_AUDIT_SAMPLES = 10_000


class RatesError(Exception):
    pass


class H4Violated(RatesError):
    """The reduced curvature matrix A is not positive-definite."""


class WindowTooShort(RatesError):
    pass


class SingularAcceleration(RatesError):
    pass


class InfeasiblePerturbation(RatesError):
    pass


@dataclass(frozen=True)
class FDSpec:
    """Central finite differences with an optional Richardson refinement."""

    step: float = 1e-4  # relative to 1 + |theta*|
    richardson: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")


@dataclass(frozen=True)
class CurvatureFrame:
    """Curvature pair at a point, with its direction-space reduction.

    a_star/b_star live in the ambient space; a_tilde/b_tilde are the
    congruence reductions through the orthonormal basis columns.  When the
    derivatives were only probed along the direction space, the ambient
    matrices are the lifted reductions.
    """

    a_star: np.ndarray
    b_star: np.ndarray
    basis: np.ndarray
    a_tilde: np.ndarray
    b_tilde: np.ndarray
    asymmetry_diag: float
    h4_pass: bool
    point: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[1]


def direction_basis(domain: ConvexDomain, theta_star) -> np.ndarray:
    """Orthonormal basis of the feasible-difference span, as q x d columns."""
    point = np.atleast_1d(np.asarray(theta_star, dtype=float))
    if not domain.contains(point, tol=1e-9):
        raise RatesError(f"reference point {point} is outside the domain")
    return domain.direction_basis()


def _directional(gfun: Callable, base: np.ndarray, direction: np.ndarray, h: float, richardson: bool):
    def probe(hh):
        try:
            plus = np.asarray(gfun(base + hh * direction), dtype=float)
            minus = np.asarray(gfun(base - hh * direction), dtype=float)
        except Exception as exc:  # noqa: BLE001 - surfaced with context
            raise InfeasiblePerturbation(
                f"surrogate evaluation failed at offset {hh:g} along {direction}: {exc}"
            ) from exc
        out = (plus - minus) / (2.0 * hh)
        if not np.all(np.isfinite(out)):
            raise InfeasiblePerturbation(f"non-finite derivative probe at offset {hh:g}")
        return out

    coarse = probe(h)
    if not richardson:
        return coarse
    fine = probe(0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def curvature_at(
    problem: SurrogateProblem,
    theta_star,
    fd: FDSpec = FDSpec(),
    prefer_analytic: bool = True,
) -> CurvatureFrame:
    """Curvature frame of the surrogate at a (near-)fixed point.

    Uses the problem's analytic second derivatives when present, otherwise
    central differences of grad2 along direction-space columns, so constrained
    problems are only ever probed inside their affine hull.  The mixed block
    is symmetrized and its pre-symmetrization asymmetry retained.
    """
    star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    p = direction_basis(problem.domain, star)
    d = p.shape[1]
    h = fd.step * (1.0 + float(np.linalg.norm(star)))

    if prefer_analytic and problem.hess22 is not None:
        a_star = linalg.symmetrize(problem.hess22(star, star))
        a_tilde = linalg.symmetrize(p.T @ a_star @ p)
    else:
        cols = np.column_stack(
            [
                _directional(lambda u: problem.grad2(star, u), star, p[:, j], h, fd.richardson)
                for j in range(d)
            ]
        )
        a_tilde = linalg.symmetrize(p.T @ cols)
        a_star = p @ a_tilde @ p.T

    if prefer_analytic and problem.hess12 is not None:
        b_raw = -np.asarray(problem.hess12(star, star), dtype=float)
        asym = linalg.asymmetry(b_raw)
        b_star = linalg.symmetrize(b_raw)
        b_tilde = linalg.symmetrize(p.T @ b_star @ p)
    else:
        cols = np.column_stack(
            [
                _directional(lambda t: problem.grad2(t, star), star, p[:, j], h, fd.richardson)
                for j in range(d)
            ]
        )
        b_raw = -(p.T @ cols)
        asym = linalg.asymmetry(b_raw)
        b_tilde = linalg.symmetrize(b_raw)
        b_star = p @ b_tilde @ p.T

    rng = CounterRNG(0xD1ECE)
    u = rng.gaussian(H4_AUDIT_SAMPLES * d).reshape(H4_AUDIT_SAMPLES, d)
    qa = np.einsum("ij,jk,ik->i", u, a_tilde, u)
    qb = np.einsum("ij,jk,ik->i", u, b_tilde, u)
    h4_pass = bool(np.all(qa > np.abs(qb)))

    return CurvatureFrame(
        a_star=a_star,
        b_star=b_star,
        basis=p,
        a_tilde=a_tilde,
        b_tilde=b_tilde,
        asymmetry_diag=float(asym),
        h4_pass=h4_pass,
        point=star.copy(),
    )


def theoretical_rates(frame: CurvatureFrame) -> RatePair:
    """Extreme absolute Rayleigh quotients of the reduced curvature pencil."""
    try:
        return linalg.generalized_rate_pair(frame.a_tilde, frame.b_tilde)
    except NotPositiveDefinite as exc:
        raise H4Violated(str(exc)) from exc


@dataclass(frozen=True)
class DecayEstimate:
    """Windowed log-error decay: least-squares slope and median step ratio."""

    slope: Optional[float]
    successive_ratio: Optional[float]
    rate: float  # exp(slope), or the last contraction factor on short windows
    n_usable: int
    superlinear: bool
    window_empty: bool
    window: tuple[int, int]


def decay_estimate(
    errors: np.ndarray,
    floor: float,
    burn_in: float = DEFAULT_BURN_IN,
    min_points: int = MIN_WINDOW_POINTS,
) -> DecayEstimate:
    """Estimate the geometric decay of a positive error sequence.

    The analysis window drops the burn-in fraction and everything at or below
    the numerical floor.  When fewer than `min_points` samples survive but the
    sequence has clearly collapsed, the estimate degrades gracefully to the
    last observed contraction factor and is flagged superlinear.
    """
    e = np.asarray(errors, dtype=float)
    n = e.size
    start = int(math.floor(burn_in * n))
    usable = [i for i in range(start, n) if e[i] > floor]

    ratios_all = [e[i + 1] / e[i] for i in range(n - 1) if e[i] > floor]
    if len(usable) >= max(min_points, 2):
        idx = np.array(usable)
        usable_set = set(usable)
        slope = float(np.polyfit(idx, np.log(e[idx]), 1)[0])
        pair_ratios = [e[i + 1] / e[i] for i in idx[:-1] if i + 1 in usable_set]
        ratio = float(np.median(pair_ratios)) if pair_ratios else None
        return DecayEstimate(
            slope=slope,
            successive_ratio=ratio,
            rate=float(np.exp(slope)),
            n_usable=len(usable),
            superlinear=False,
            window_empty=False,
            window=(int(idx[0]), int(idx[-1])),
        )

    if not ratios_all:
        return DecayEstimate(None, None, 0.0, len(usable), False, True, (0, 0))

    last = float(ratios_all[-1])
    collapsed = e[-1] <= 10.0 * floor
    shrinking = last <= 0.5 * ratios_all[0] or len(ratios_all) == 1
    return DecayEstimate(
        slope=float(np.log(last)) if last > 0 else None,
        successive_ratio=last,
        rate=last,
        n_usable=len(usable),
        superlinear=bool(collapsed and shrinking),
        window_empty=len(usable) == 0,
        window=(start, n - 1),
    )


def default_floor(theta_star) -> float:
    return 1e-12 * (1.0 + float(np.linalg.norm(np.atleast_1d(theta_star))))


def empirical_rate(
    trace: Trace,
    theta_star,
    burn_in: float = DEFAULT_BURN_IN,
    floor: float | None = None,
) -> tuple[float, float]:
    """Windowed (slope, median successive ratio) of log iterate errors.

    Requires at least MIN_WINDOW_POINTS usable samples; superlinear traces
    that collapse to the floor too quickly raise WindowTooShort (use
    decay_estimate for the graceful variant).
    """
    errors = trace.errors(theta_star)
    lim = floor if floor is not None else default_floor(theta_star)
    est = decay_estimate(errors, lim, burn_in)
    if est.n_usable < MIN_WINDOW_POINTS or est.slope is None:
        raise WindowTooShort(
            f"only {est.n_usable} usable points above the floor (need {MIN_WINDOW_POINTS})"
        )
    ratio = est.successive_ratio if est.successive_ratio is not None else est.rate
    return est.slope, float(ratio)


@dataclass(frozen=True)
class RateReport:
    """Theory vs measurement, with one verdict per asymptotic claim.

    Verdict keys: "upper" (measured decay bounded by the sup rate), "lower"
    (bounded below by the inf rate, interior limits only), "exact" (the two
    coincide when sup^2 <= inf) and "q_gap" (surrogate values converge at
    least as fast as the iterates).
    """

    theory: RatePair
    empirical_slope: Optional[float]
    successive_ratio: Optional[float]
    empirical_rate: float
    q_gap_slope: Optional[float]
    q_gap_rate: Optional[float]
    superlinear: bool
    span_warning: bool
    verdicts: dict[str, str]
    tol_rate: float = DEFAULT_RATE_TOL

    @property
    def passed(self) -> bool:
        return all(v in ("pass", "inapplicable") for v in self.verdicts.values())


def _span_warning(trace: Trace, theta_star, est: DecayEstimate, d: int) -> bool:
    if d <= 1:
        return False
    lo, hi = est.window
    deltas = np.array([t - theta_star for t in trace.iterates[lo : hi + 1]])
    if deltas.shape[0] < d:
        return True
    sv = np.linalg.svd(deltas, compute_uv=False)
    rank = int(np.sum(sv > sv[0] * 1e-8)) if sv.size and sv[0] > 0 else 0
    return rank < d


def verdicts(
    trace: Trace,
    theta_star,
    frame: CurvatureFrame,
    problem: SurrogateProblem | None = None,
    tol_rate: float = DEFAULT_RATE_TOL,
    burn_in: float = DEFAULT_BURN_IN,
    floor: float | None = None,
) -> RateReport:
    """Check the measured decay of a trace against its theoretical rate pair.

    The surrogate-gap check needs the problem to evaluate Q at the fixed
    point; without it that verdict is reported inapplicable.
    """
    star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    theory = theoretical_rates(frame)
    errors = trace.errors(star)
    lim = floor if floor is not None else default_floor(star)
    est = decay_estimate(errors, lim, burn_in)
    rate_emp = est.rate

    domain = problem.domain if problem is not None else None
    interior = bool(domain.is_interior(star)) if domain is not None else False

    out: dict[str, str] = {}
    out["upper"] = "pass" if rate_emp <= theory.rho_sup + tol_rate else "fail"

    if not interior or est.window_empty:
        out["lower"] = "inapplicable"
    else:
        out["lower"] = "pass" if rate_emp >= theory.rho_inf - tol_rate else "fail"

    exact_applicable = theory.rho_sup**2 <= theory.rho_inf + 1e-12 and interior
    if not exact_applicable or est.window_empty:
        out["exact"] = "inapplicable"
    else:
        out["exact"] = "pass" if abs(rate_emp - theory.rho_sup) <= tol_rate else "fail"

    q_gap_slope = None
    q_gap_rate = None
    if problem is not None and trace.q_values:
        q_star = float(problem.eval_q(star, star))
        gaps = np.abs(np.asarray(trace.q_values) - q_star)
        q_floor = 1e-12 * (1.0 + abs(q_star))
        est_q = decay_estimate(gaps, q_floor, burn_in)
        q_gap_slope = est_q.slope
        q_gap_rate = est_q.rate
        out["q_gap"] = "pass" if est_q.rate <= theory.rho_sup + tol_rate else "fail"
    else:
        out["q_gap"] = "inapplicable"

    return RateReport(
        theory=theory,
        empirical_slope=est.slope,
        successive_ratio=est.successive_ratio,
        empirical_rate=rate_emp,
        q_gap_slope=q_gap_slope,
        q_gap_rate=q_gap_rate,
        superlinear=est.superlinear,
        span_warning=_span_warning(trace, star, est, frame.d),
        verdicts=out,
        tol_rate=tol_rate,
    )


@dataclass(frozen=True)
class ProxPrediction:
    """Extragradient rates predicted from the underlying descent spectrum."""

    base_spectrum: np.ndarray
    mapped_spectrum: np.ndarray
    rates: RatePair
    contraction: bool


def mirror_prox_spectrum_map(md_frame: CurvatureFrame) -> ProxPrediction:
    """Push the descent spectrum through x -> x^2 - x + 1.

    The extragradient scheme's reduced pencil equals that polynomial in the
    descent pencil, so its rate pair is read off the mapped spectrum.  Values
    map into [3/4, 1) exactly when the descent spectrum lies in (0, 1);
    anything outside is flagged as a non-contraction.
    """
    try:
        r = linalg.inv_sqrt(md_frame.a_tilde)
    except NotPositiveDefinite as exc:
        raise H4Violated(str(exc)) from exc
    core = linalg.symmetrize(r @ md_frame.b_tilde @ r)
    spectrum = linalg.eigh(core).eigenvalues
    mapped = spectrum**2 - spectrum + 1.0
    abs_mapped = np.abs(mapped)
    rates = RatePair(float(abs_mapped.min()), float(abs_mapped.max()))
    return ProxPrediction(
        base_spectrum=spectrum,
        mapped_spectrum=mapped,
        rates=rates,
        contraction=bool(abs_mapped.max() < 1.0),
    )


def alpha_transform(md_rates: RatePair, alpha: float) -> float:
    """Predicted sup rate of the alpha variant from the plain EM rate pair.

    The alpha spectrum is the affine image x -> (x - alpha)/(1 - alpha) of
    the EM spectrum, so the sup is attained at one of the two endpoints.
    """
    if alpha == 1.0:
        raise RatesError("alpha = 1 is excluded")
    g = lambda x: (x - alpha) / (1.0 - alpha)
    return max(abs(g(md_rates.rho_inf)), abs(g(md_rates.rho_sup)))


def optimal_alpha(md_rates: RatePair) -> tuple[float, float]:
    """Index midway between the EM rate extremes, and the rate it achieves."""
    lo, hi = md_rates.rho_inf, md_rates.rho_sup
    alpha = 0.5 * (lo + hi)
    rho = (hi - lo) / (2.0 - hi - lo)
    return alpha, rho


def accelerate(theta_n, theta_np1, frame: CurvatureFrame) -> np.ndarray:
    """Extrapolate to the fixed point by inverting the local linearization.

    Solves (I - A~^{-1} B~) on the last increment in the direction space;
    exact whenever the iteration map is affine and the frame matches it.
    """
    tn = np.atleast_1d(np.asarray(theta_n, dtype=float))
    tn1 = np.atleast_1d(np.asarray(theta_np1, dtype=float))
    p = frame.basis
    try:
        s = np.linalg.solve(frame.a_tilde, frame.b_tilde)
        g = np.eye(frame.d) - s
        if np.linalg.cond(g) > 1e12:
            raise SingularAcceleration("I - A~^{-1} B~ is numerically singular")
        shift = np.linalg.solve(g, p.T @ (tn1 - tn))
    except np.linalg.LinAlgError as exc:
        raise SingularAcceleration(str(exc)) from exc
    return tn + p @ shift


def reparam_invariance_check(
    problem: SurrogateProblem,
    theta_star,
    psi: Callable,
    psi_inv: Callable,
    dpsi: Callable,
    fd: FDSpec = FDSpec(),
    transformed_domain: ConvexDomain | None = None,
) -> tuple[RatePair, RatePair]:
    """Rate pairs of a problem and of its pullback through a smooth change of variables.

    Both pairs are computed by finite differences.  At interior fixed points
    they agree; at boundary fixed points they need not.
    """
    star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    frame = curvature_at(problem, star, fd, prefer_analytic=False)
    rates_original = theoretical_rates(frame)

    def t_eval(theta, u):
        return problem.eval_q(np.atleast_1d(psi(theta)), np.atleast_1d(psi(u)))

    def t_grad2(theta, u):
        jac = np.atleast_2d(np.asarray(dpsi(u), dtype=float))
        inner = np.atleast_1d(problem.grad2(np.atleast_1d(psi(theta)), np.atleast_1d(psi(u))))
        return jac.T @ inner

    pulled = SurrogateProblem(
        q=problem.q,
        domain=transformed_domain if transformed_domain is not None else problem.domain,
        eval_q=t_eval,
        grad2=t_grad2,
        label=problem.label + "|reparam",
    )
    star_pulled = np.atleast_1d(np.asarray(psi_inv(star), dtype=float))
    frame_pulled = curvature_at(pulled, star_pulled, fd, prefer_analytic=False)
    rates_reparam = theoretical_rates(frame_pulled)
    return rates_original, rates_reparam
