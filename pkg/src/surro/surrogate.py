"""The iteration engine: minimize a bivariate surrogate in its second slot.

A `SurrogateProblem` packages the surrogate Q(theta, theta'), its partial
derivatives in the second argument, the feasible set and optional extras
(closed-form step, Lyapunov diagnostic, auxiliary half-step).  `iterate`
repeatedly applies the inner minimizer and records the full trajectory.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import ConvexDomain

INNER_CAP = 500
INNER_TOL = 1e-12
ARMIJO_C = 1e-4


class SurrogateError(Exception):
    pass


class InfeasibleInput(SurrogateError):
    pass


class SolveFailure(SurrogateError):
    """Generic smooth-minimization failure (iteration cap with large residual)."""


class InnerSolveFailed(SolveFailure):
    def __init__(self, message, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class StopReason(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STALLED = "stalled"


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 10_000
    residual_tol: float = 1e-13
    stall_window: int = 20

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")


@dataclass(frozen=True)
class SurrogateProblem:
    """Bivariate surrogate with derivative access in the second argument.

    eval_q(theta, theta') is the surrogate value, grad2 its gradient in
    theta'.  hess22/hess12 are the (optional) analytic second derivatives
    d2Q/dtheta'^2 and d2Q/(dtheta dtheta'); when absent, consumers fall back
    to finite differences of grad2.
    """

    q: int
    domain: ConvexDomain
    eval_q: Callable[[np.ndarray, np.ndarray], float]
    grad2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hess22: Optional[Callable] = None
    hess12: Optional[Callable] = None
    closed_form_step: Optional[Callable] = None
    lyapunov: Optional[Callable] = None
    aux_step: Optional[Callable] = None
    pull_inside: Optional[Callable] = None  # open-domain safeguard for numeric solves
    label: str = ""

    def check_feasible(self, x) -> np.ndarray:
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if v.shape != (self.q,):
            raise InfeasibleInput(f"expected a vector of length {self.q}, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InfeasibleInput("point has non-finite coordinates")
        if not self.domain.contains(v):
            raise InfeasibleInput(f"point {v} is outside the feasible set")
        return v


@dataclass
class Trace:
    """Iterates theta_n, per-step surrogate values and residuals."""

    iterates: list[np.ndarray]
    q_values: list[float]
    residuals: list[float]
    stop_reason: StopReason
    aux_iterates: Optional[list[np.ndarray]] = None
    lyapunov_values: Optional[list[float]] = None

    def __len__(self):
        return len(self.iterates)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def errors(self, theta_star) -> np.ndarray:
        ref = np.asarray(theta_star, dtype=float)
        return np.array([float(np.linalg.norm(t - ref)) for t in self.iterates])


def _project(domain, pull_inside, x):
    y = domain.project(x)
    return y if pull_inside is None else pull_inside(y)


def minimize_smooth(domain, fun, grad, hess, x0, pull_inside=None, cap=INNER_CAP, tol=INNER_TOL):
    """Projected descent for a smooth convex function over a convex set.

    Tries a damped Newton step when a Hessian is available and falls back to
    projected gradient with Barzilai-Borwein steps.  Steps are accepted either
    by Armijo decrease of the value or, once value differences drop below
    double-precision resolution, by halving of the projected-gradient
    residual; termination is on that residual.
    """

    def residual_at(point, gradient):
        return float(np.linalg.norm(point - _project(domain, pull_inside, point - gradient)))

    def backtrack(x, fx, g, res, direction, halvings):
        t = 1.0
        for _ in range(halvings):
            xn = _project(domain, pull_inside, x + t * direction)
            if not np.all(np.isfinite(xn)) or np.array_equal(xn, x):
                t *= 0.5
                continue
            fn = fun(xn)
            if np.isfinite(fn) and fn <= fx + ARMIJO_C * float(g @ (xn - x)):
                return xn, fn
            # value comparison is resolution-limited near the minimum; fall
            # back to requiring genuine stationarity progress
            if np.isfinite(fn):
                resn = residual_at(xn, grad(xn))
                if resn <= 0.5 * res:
                    return xn, fn
                if fn <= fx + 1e-12 * (1.0 + abs(fx)) and resn <= res * (1.0 - 1e-6):
                    return xn, fn
            t *= 0.5
        return None

    x = _project(domain, pull_inside, np.asarray(x0, dtype=float))
    fx = fun(x)
    from .domains import DegenerateDomain

    try:
        tangent = domain.direction_basis()  # Newton steps respect the affine hull
    except DegenerateDomain:
        tangent = None  # point domain: the gradient path settles it
    prev_x = None
    prev_g = None
    for _ in range(cap):
        g = grad(x)
        residual = residual_at(x, g)
        scale = 1.0 + float(np.max(np.abs(x)))
        if residual <= tol * scale:
            return x

        candidate = None
        if hess is not None and tangent is not None:
            try:
                reduced = tangent.T @ hess(x) @ tangent
                direction = tangent @ np.linalg.solve(reduced, -(tangent.T @ g))
            except np.linalg.LinAlgError:
                direction = None
            if direction is not None and np.all(np.isfinite(direction)):
                candidate = backtrack(x, fx, g, residual, direction, halvings=30)

        if candidate is None:
            if prev_x is not None:
                s = x - prev_x
                y = g - prev_g
                sy = float(s @ y)
                t = float(s @ s) / sy if sy > 0 else 1.0 / (1.0 + float(np.linalg.norm(g)))
                t = min(max(t, 1e-12), 1e12)
            else:
                t = 1.0 / (1.0 + float(np.linalg.norm(g)))
            candidate = backtrack(x, fx, g, residual, -t * g, halvings=60)

        prev_x, prev_g = x, g
        if candidate is None:
            # both line searches stagnated; accept only within noise of the target
            if residual <= 100.0 * tol * scale:
                return x
            raise SolveFailure(f"no descent direction found (residual {residual:.3e})")
        x, fx = candidate

    raise SolveFailure(f"iteration cap {cap} reached (residual {residual:.3e})")


def inner_minimize(problem: SurrogateProblem, theta, use_closed_form: bool = True) -> np.ndarray:
    """One application of the minimization map: argmin of Q(theta, .) over the domain.

    The problem's closed-form step is used when present; otherwise a projected
    Newton/gradient solve on theta' -> Q(theta, theta').
    """
    th = problem.check_feasible(theta)
    if use_closed_form and problem.closed_form_step is not None:
        out = np.atleast_1d(np.asarray(problem.closed_form_step(th), dtype=float))
        return out

    try:
        return minimize_smooth(
            domain=problem.domain,
            fun=lambda x: problem.eval_q(th, x),
            grad=lambda x: np.atleast_1d(np.asarray(problem.grad2(th, x), dtype=float)),
            hess=(lambda x: problem.hess22(th, x)) if problem.hess22 is not None else None,
            x0=th,
            pull_inside=problem.pull_inside,
        )
    except SolveFailure as exc:
        raise InnerSolveFailed(f"inner minimization failed at theta={th}: {exc}") from exc


def fixed_point_residual(problem: SurrogateProblem, theta) -> float:
    """Distance between theta and its image under the minimization map."""
    th = problem.check_feasible(theta)
    return float(np.linalg.norm(inner_minimize(problem, th) - th))


def iterate(problem: SurrogateProblem, theta0, stop: StopRule | None = None) -> Trace:
    """Run theta_{n+1} = argmin Q(theta_n, .) until the stop rule fires.

    Records per-step surrogate values Q(theta_n, theta_{n+1}), residuals,
    optional auxiliary half-steps and optional Lyapunov values.  A start that
    is already an exact fixed point yields a single-point converged trace.
    """
    stop = stop or StopRule()
    th = problem.check_feasible(theta0)
    iterates = [th.copy()]
    q_values: list[float] = []
    residuals: list[float] = []
    aux: Optional[list[np.ndarray]] = [] if problem.aux_step is not None else None
    lyap: Optional[list[float]] = None
    if problem.lyapunov is not None:
        lyap = [float(problem.lyapunov(th))]

    reason = StopReason.MAX_ITERS
    best_residual = np.inf
    stalled_steps = 0
    for n in range(stop.max_iters):
        current = iterates[-1]
        if aux is not None:
            aux.append(np.atleast_1d(np.asarray(problem.aux_step(current), dtype=float)))
        try:
            nxt = inner_minimize(problem, current)
        except InnerSolveFailed as exc:
            raise InnerSolveFailed(str(exc), step_index=n) from exc
        residual = float(np.linalg.norm(nxt - current))

        if residual <= stop.residual_tol and np.array_equal(nxt, current):
            # exact fixed point: do not append a duplicate iterate
            if aux is not None:
                aux.pop()
            reason = StopReason.CONVERGED
            break

        iterates.append(nxt)
        q_values.append(float(problem.eval_q(current, nxt)))
        residuals.append(residual)
        if lyap is not None:
            lyap.append(float(problem.lyapunov(nxt)))

        if residual <= stop.residual_tol:
            reason = StopReason.CONVERGED
            break
        if residual < best_residual:
            best_residual = residual
            stalled_steps = 0
        else:
            stalled_steps += 1
            if stalled_steps >= stop.stall_window:
                reason = StopReason.STALLED
                break

    return Trace(
        iterates=iterates,
        q_values=q_values,
        residuals=residuals,
        stop_reason=reason,
        aux_iterates=aux,
        lyapunov_values=lyap,
    )


def descent_certificate(
    problem: SurrogateProblem, theta, theta_opt, rng, probes: int = 32, t: float = 1e-6
) -> bool:
    """Probe feasible directions around theta_opt for surrogate decrease.

    Returns True when no probe improves Q(theta, .) by more than 1e-10, the
    first-order certificate that theta_opt is a constrained minimizer.
    """
    th = problem.check_feasible(theta)
    base = problem.eval_q(th, theta_opt)
    for _ in range(probes):
        d = rng.gaussian(problem.q)
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            continue
        point = problem.domain.project(theta_opt + t * d / norm)
        if problem.pull_inside is not None:
            point = problem.pull_inside(point)
        if problem.eval_q(th, point) < base - 1e-10:
            return False
    return True
