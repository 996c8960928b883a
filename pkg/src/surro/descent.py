"""Problem builders for mirror descent, mirror prox and Newton's method.

Each builder returns a `SurrogateProblem` whose inner minimization reproduces
the textbook update, together with whatever analytic curvature the scheme
admits at a double fixed point.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import linalg
from .domains import ConvexDomain, FullSpace
from .mirror_maps import MirrorMap, NegEntropyMap, QuadraticMap, bregman
from .objectives import Objective
from .surrogate import SurrogateProblem, inner_minimize


class BuilderError(Exception):
    pass


class IncompatibleDomain(BuilderError):
    pass


class SingularHessian(BuilderError):
    pass


def _check_compat(f: Objective, phi: MirrorMap, eta: float, domain: ConvexDomain):
    if not eta > 0:
        raise BuilderError("step size eta must be positive")
    if not (f.q == phi.q == domain.q):
        raise IncompatibleDomain(
            f"dimension mismatch: objective {f.q}, mirror map {phi.q}, domain {domain.q}"
        )
    anchor = domain.interior_point()
    if not phi.in_closure(anchor):
        raise IncompatibleDomain("the feasible set does not lie in the mirror-map domain closure")
    if not phi.in_domain(phi.pull_inside(anchor)):
        raise IncompatibleDomain("the feasible set does not meet the mirror-map domain")


def _closed_step(phi: MirrorMap, domain: ConvexDomain, eta: float):
    """Closed-form mirror step theta -> argmin eta g'u + D(u, theta), given g."""
    if isinstance(phi, QuadraticMap):
        return lambda theta, g: domain.project(theta - eta * g)
    if isinstance(phi, NegEntropyMap):
        if phi.closed_projection(domain, np.full(phi.q, 1.0 / phi.q)) is None:
            return None

        def step(theta, g):
            # multiplicative weights; the shift leaves the normalization unchanged
            w = theta * np.exp(-eta * (g - np.min(g)))
            return phi.closed_projection(domain, w)

        return step
    return None


def mirror_descent_problem(
    f: Objective, phi: MirrorMap, eta: float, domain: ConvexDomain
) -> SurrogateProblem:
    """Surrogate for one mirror-descent step: eta grad f(theta)' u + D_Phi(u, theta).

    Carries analytic hess22 = Hessian of Phi at u and hess12 = eta Hess f(theta)
    - Hess Phi(theta); closed-form steps exist for the quadratic map (projected
    gradient step) and entropy on the simplex (multiplicative weights).
    """
    _check_compat(f, phi, eta, domain)

    def eval_q(theta, u):
        return eta * float(f.grad(theta) @ u) + bregman(phi, u, theta)

    def grad2(theta, u):
        return eta * f.grad(theta) + phi.grad(u) - phi.grad(theta)

    def hess22(theta, u):
        return phi.hess(u)

    def hess12(theta, u):
        return eta * f.hess(theta) - phi.hess(theta)

    step_with_grad = _closed_step(phi, domain, eta)
    closed = None
    if step_with_grad is not None:
        closed = lambda theta: step_with_grad(theta, f.grad(theta))

    return SurrogateProblem(
        q=f.q,
        domain=domain,
        eval_q=eval_q,
        grad2=grad2,
        hess22=hess22,
        hess12=hess12,
        closed_form_step=closed,
        pull_inside=phi.pull_inside,
        label=f"mirror_descent(eta={eta:g})",
    )


def audit_prox_hypotheses(f: Objective, phi: MirrorMap, eta: float, domain: ConvexDomain):
    """Return (gamma, beta) and warn when eta is not below gamma/beta.

    gamma is the mirror map's strong-convexity constant on the domain and beta
    the objective's smoothness constant; the extragradient scheme is only
    guaranteed to contract for eta < gamma/beta.
    """
    gamma = phi.strong_convexity(domain)
    beta = f.beta
    if beta is None:
        samples = [domain.interior_point()]
        beta = max(linalg.spectral_norm(f.hess(x)) for x in samples)
    if gamma is not None and beta is not None and not eta < gamma / beta:
        warnings.warn(
            f"step size eta={eta:g} is not below gamma/beta={gamma / beta:g}; "
            "global convergence of the extragradient scheme is not guaranteed",
            stacklevel=3,
        )
    return gamma, beta


class _MemoStep:
    """Memoized half-step map; the prox surrogate queries it repeatedly."""

    def __init__(self, problem: SurrogateProblem):
        self.problem = problem
        self.cache: dict[bytes, np.ndarray] = {}

    def __call__(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        key = th.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = inner_minimize(self.problem, th)
        if len(self.cache) > 4096:
            self.cache.clear()
        self.cache[key] = out
        return out


def mirror_prox_problem(
    f: Objective, phi: MirrorMap, eta: float, domain: ConvexDomain
) -> SurrogateProblem:
    """Extragradient surrogate: gradient evaluated at the mirror-descent half-step.

    The half-step zeta = argmin eta grad f(theta)'u + D(u, theta) is recorded
    per iteration through the problem's aux hook.
    """
    _check_compat(f, phi, eta, domain)
    md = mirror_descent_problem(f, phi, eta, domain)
    half_step = _MemoStep(md)
    gamma, beta = audit_prox_hypotheses(f, phi, eta, domain)

    def eval_q(theta, u):
        zeta = half_step(theta)
        return eta * float(f.grad(zeta) @ u) + bregman(phi, u, theta)

    def grad2(theta, u):
        zeta = half_step(theta)
        return eta * f.grad(zeta) + phi.grad(u) - phi.grad(theta)

    def hess22(theta, u):
        return phi.hess(u)

    step_with_grad = _closed_step(phi, domain, eta)
    closed = None
    if step_with_grad is not None:
        closed = lambda theta: step_with_grad(theta, f.grad(half_step(theta)))

    return SurrogateProblem(
        q=f.q,
        domain=domain,
        eval_q=eval_q,
        grad2=grad2,
        hess22=hess22,
        hess12=None,
        closed_form_step=closed,
        aux_step=half_step,
        pull_inside=phi.pull_inside,
        label=f"mirror_prox(eta={eta:g}, gamma={gamma if gamma is not None else 'n/a'}, "
        f"beta={beta if beta is not None else 'n/a'})",
    )


def newton_problem(f: Objective, domain: ConvexDomain | None = None) -> SurrogateProblem:
    """Newton's method as surrogate minimization of half a squared distance.

    Q(theta, u) = |u - theta + Hess f(theta)^{-1} grad f(theta)|^2 / 2, whose
    exact minimizer is the Newton step.
    """
    dom = domain or FullSpace(f.q)

    def step(theta):
        th = np.asarray(theta, dtype=float)
        h = f.hess(th)
        try:
            dx = np.linalg.solve(h, -f.grad(th))
        except np.linalg.LinAlgError as exc:
            raise SingularHessian(f"Hessian is singular at {th}") from exc
        if not np.all(np.isfinite(dx)):
            raise SingularHessian(f"Hessian solve produced non-finite step at {th}")
        return th + dx

    def eval_q(theta, u):
        d = np.asarray(u, dtype=float) - step(theta)
        return 0.5 * float(d @ d)

    def grad2(theta, u):
        return np.asarray(u, dtype=float) - step(theta)

    def hess22(theta, u):
        return np.eye(f.q)

    return SurrogateProblem(
        q=f.q,
        domain=dom,
        eval_q=eval_q,
        grad2=grad2,
        hess22=hess22,
        hess12=None,
        closed_form_step=step,
        label="newton",
    )
