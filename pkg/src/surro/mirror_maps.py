"""Mirror maps and Bregman machinery.

Three maps are shipped: the quadratic map (plain Euclidean geometry), negative
entropy on the positive orthant (simplex geometry) and a barrier-style map on
an open ball whose gradient diverges at the boundary, suitable for globally
convergent extragradient runs on compact sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Box, ConvexDomain, EuclideanBall, Simplex

INTERIOR_MARGIN = 1e-9


class MirrorError(Exception):
    pass


class OutsideMirrorDomain(MirrorError):
    pass


class ProjectionFailed(MirrorError):
    pass


class MirrorMap:
    """Strictly convex map with value/grad/hess callables on an open domain."""

    q: int

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def hess(self, x) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        raise NotImplementedError

    def in_closure(self, x, tol: float = 1e-12) -> bool:
        """Membership in the closure of the map's domain."""
        return self.in_domain(x)

    def pull_inside(self, x) -> np.ndarray:
        """Move x into the open domain by the interior margin if needed."""
        raise NotImplementedError

    def strong_convexity(self, domain: ConvexDomain) -> float | None:
        """Analytic lower bound on the Hessian spectrum over the domain, if known."""
        return None

    def closed_projection(self, domain: ConvexDomain, zeta) -> np.ndarray | None:
        """Closed-form Bregman projection onto the domain, when one exists."""
        return None

    def _require(self, x) -> np.ndarray:
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if v.shape != (self.q,):
            raise MirrorError(f"expected a vector of length {self.q}, got shape {v.shape}")
        if not self.in_domain(v):
            raise OutsideMirrorDomain(f"point {v} is outside the mirror-map domain")
        return v


@dataclass(frozen=True)
class QuadraticMap(MirrorMap):
    """Phi(x) = x'x / 2 on all of R^q; Bregman divergence is half squared distance."""

    q: int

    def value(self, x):
        v = self._require(x)
        return 0.5 * float(v @ v)

    def grad(self, x):
        return self._require(x).copy()

    def hess(self, x):
        self._require(x)
        return np.eye(self.q)

    def in_domain(self, x):
        return bool(np.all(np.isfinite(np.atleast_1d(x))))

    def pull_inside(self, x):
        return np.atleast_1d(np.asarray(x, dtype=float)).copy()

    def strong_convexity(self, domain):
        return 1.0

    def closed_projection(self, domain, zeta):
        return domain.project(zeta)


@dataclass(frozen=True)
class NegEntropyMap(MirrorMap):
    """Phi(x) = sum x_i log x_i on the open positive orthant."""

    q: int
    floor: float = INTERIOR_MARGIN

    def value(self, x):
        v = self._require(x)
        return float(np.sum(v * np.log(v)))

    def grad(self, x):
        v = self._require(x)
        return 1.0 + np.log(v)

    def hess(self, x):
        v = self._require(x)
        return np.diag(1.0 / v)

    def in_domain(self, x):
        v = np.atleast_1d(x)
        return bool(np.all(np.isfinite(v)) and np.all(v > 0.0))

    def in_closure(self, x, tol=1e-12):
        v = np.atleast_1d(x)
        return bool(np.all(np.isfinite(v)) and np.all(v >= -tol))

    def pull_inside(self, x):
        return np.maximum(np.atleast_1d(np.asarray(x, dtype=float)), self.floor)

    def strong_convexity(self, domain):
        if isinstance(domain, Simplex):
            return 1.0  # coordinates are <= 1, so 1/x_i >= 1
        if isinstance(domain, Box) and np.all(domain.lower > 0):
            return float(1.0 / np.max(domain.upper))
        return None

    def closed_projection(self, domain, zeta):
        if isinstance(domain, Simplex):
            z = np.atleast_1d(np.asarray(zeta, dtype=float))
            out = z / float(np.sum(z))  # exact entropy projection of a positive vector
            if np.min(out) < domain.face_eps:
                out = domain.project(out)
            return out
        return None


@dataclass(frozen=True)
class BallMap(MirrorMap):
    """Phi(x) = |x|^2 / (r2 - |x|^2) on the open ball of squared radius r2.

    The gradient norm diverges at the boundary, so Bregman steps can never
    leave the ball regardless of the step size.
    """

    q: int
    r2: float

    def __post_init__(self):
        if not self.r2 > 0:
            raise MirrorError("squared radius must be positive")

    def _s(self, v):
        return float(v @ v)

    def value(self, x):
        v = self._require(x)
        s = self._s(v)
        return s / (self.r2 - s)

    def grad(self, x):
        v = self._require(x)
        s = self._s(v)
        return 2.0 * self.r2 * v / (self.r2 - s) ** 2

    def hess(self, x):
        v = self._require(x)
        s = self._s(v)
        den = self.r2 - s
        return (2.0 * self.r2 / den**2) * np.eye(self.q) + (8.0 * self.r2 / den**3) * np.outer(
            v, v
        )

    def in_domain(self, x):
        v = np.atleast_1d(x)
        return bool(np.all(np.isfinite(v)) and float(v @ v) < self.r2)

    def in_closure(self, x, tol=1e-12):
        v = np.atleast_1d(x)
        return bool(np.all(np.isfinite(v)) and float(v @ v) <= self.r2 * (1.0 + tol))

    def pull_inside(self, x):
        v = np.atleast_1d(np.asarray(x, dtype=float))
        s = float(v @ v)
        cap = self.r2 * (1.0 - INTERIOR_MARGIN)
        if s >= cap:
            v = v * np.sqrt(cap / s)
        return v

    def strong_convexity(self, domain):
        return 2.0 / self.r2  # attained at the origin

    def radius(self) -> float:
        return float(np.sqrt(self.r2))


def bregman(phi: MirrorMap, x, y) -> float:
    """Bregman divergence Phi(x) - Phi(y) - <grad Phi(y), x - y>."""
    xv = phi._require(x)
    yv = phi._require(y)
    return float(phi.value(xv) - phi.value(yv) - phi.grad(yv) @ (xv - yv))


def bregman_project(domain: ConvexDomain, phi: MirrorMap, zeta) -> np.ndarray:
    """Unique Bregman-divergence minimizer over the domain, seen from zeta.

    Uses a closed form when the map provides one (Euclidean projection for the
    quadratic map, normalization for entropy on the simplex) and an interior
    Newton solve otherwise.
    """
    z = phi._require(zeta)
    closed = phi.closed_projection(domain, z)
    if closed is not None:
        return closed

    # minimize Phi(x) - <grad Phi(zeta), x> over the domain
    target = phi.grad(z)
    from .surrogate import SolveFailure, minimize_smooth  # local import avoids a cycle

    try:
        return minimize_smooth(
            domain=domain,
            fun=lambda x: phi.value(x) - float(target @ x),
            grad=lambda x: phi.grad(x) - target,
            hess=phi.hess,
            x0=phi.pull_inside(domain.project(z)),
            pull_inside=phi.pull_inside,
        )
    except SolveFailure as exc:
        raise ProjectionFailed(str(exc)) from exc


def make_mirror_map(kind: str, q: int, **kwargs) -> MirrorMap:
    kind = kind.lower()
    if kind == "quadratic":
        return QuadraticMap(q)
    if kind in ("neg_entropy", "entropy"):
        return NegEntropyMap(q)
    if kind == "ball":
        return BallMap(q, float(kwargs["r2"]))
    raise MirrorError(f"unknown mirror map kind {kind!r}")


def default_ball_domain(phi: BallMap) -> EuclideanBall:
    """The open ball the map lives on, usable directly as a feasible set."""
    return EuclideanBall(np.zeros(phi.q), phi.radius(), open_boundary=True)


__all__ = [
    "BallMap",
    "MirrorError",
    "MirrorMap",
    "NegEntropyMap",
    "OutsideMirrorDomain",
    "ProjectionFailed",
    "QuadraticMap",
    "bregman",
    "bregman_project",
    "default_ball_domain",
    "make_mirror_map",
]
