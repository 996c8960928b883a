"""Convex feasible sets: membership, Euclidean projection and direction spaces.

Every domain knows how to project a point onto itself, test membership with a
1e-12 slack consistent with that projection, and produce an orthonormal basis
of the span of its feasible differences (the direction space of its affine
hull).  Open pieces are handled with a small interior margin so iterates never
touch boundaries where mirror-map gradients diverge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MEMBERSHIP_TOL = 1e-12
INTERIOR_MARGIN = 1e-9


class DomainError(Exception):
    pass


class DegenerateDomain(DomainError):
    """Raised when the direction space of the domain is {0}."""


def _as_vector(x, q: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.shape != (q,):
        raise DomainError(f"expected a vector of length {q}, got shape {v.shape}")
    return v


class ConvexDomain:
    """Interface shared by all feasible-set variants."""

    q: int

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        """Euclidean projection, pulled into the interior of any open part."""
        raise NotImplementedError

    def is_interior(self, x, margin: float = INTERIOR_MARGIN) -> bool:
        """True when x sits in the relative interior with the given margin."""
        raise NotImplementedError

    def interior_point(self) -> np.ndarray:
        raise NotImplementedError

    def direction_basis(self) -> np.ndarray:
        """Orthonormal q x d matrix spanning the feasible-difference space."""
        raise NotImplementedError

    def sample(self, rng) -> np.ndarray:
        """Draw a feasible point; used for randomized starts."""
        raise NotImplementedError


@dataclass(frozen=True)
class FullSpace(ConvexDomain):
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("dimension must be >= 1")

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return bool(np.all(np.isfinite(_as_vector(x, self.q))))

    def project(self, x):
        return _as_vector(x, self.q).copy()

    def is_interior(self, x, margin=INTERIOR_MARGIN):
        return self.contains(x)

    def interior_point(self):
        return np.zeros(self.q)

    def direction_basis(self):
        return np.eye(self.q)

    def sample(self, rng):
        return rng.gaussian(self.q)


@dataclass(frozen=True)
class Box(ConvexDomain):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DomainError("lower/upper must be vectors of equal length")
        if not np.all(lo < hi):
            raise DomainError("box requires lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def q(self):
        return self.lower.shape[0]

    def contains(self, x, tol=MEMBERSHIP_TOL):
        v = _as_vector(x, self.q)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def project(self, x):
        return np.clip(_as_vector(x, self.q), self.lower, self.upper)

    def is_interior(self, x, margin=INTERIOR_MARGIN):
        v = _as_vector(x, self.q)
        pad = margin * (self.upper - self.lower)
        return bool(np.all(v > self.lower + pad) and np.all(v < self.upper - pad))

    def interior_point(self):
        return 0.5 * (self.lower + self.upper)

    def direction_basis(self):
        return np.eye(self.q)

    def sample(self, rng):
        u = rng.uniform(self.q)
        return self.lower + u * (self.upper - self.lower)


@dataclass(frozen=True)
class EuclideanBall(ConvexDomain):
    center: np.ndarray
    radius: float
    open_boundary: bool = False

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise DomainError("center must be a vector")
        if not self.radius > 0:
            raise DomainError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def q(self):
        return self.center.shape[0]

    def _reach(self):
        # open balls are shrunk by a relative margin so projections stay interior
        return self.radius * (1.0 - INTERIOR_MARGIN) if self.open_boundary else self.radius

    def contains(self, x, tol=MEMBERSHIP_TOL):
        v = _as_vector(x, self.q)
        r = float(np.linalg.norm(v - self.center))
        return r < self.radius if self.open_boundary else r <= self.radius + tol

    def project(self, x):
        v = _as_vector(x, self.q)
        d = v - self.center
        r = float(np.linalg.norm(d))
        reach = self._reach()
        if r <= reach:
            return v.copy()
        return self.center + d * (reach / r)

    def is_interior(self, x, margin=INTERIOR_MARGIN):
        v = _as_vector(x, self.q)
        return float(np.linalg.norm(v - self.center)) < self.radius * (1.0 - margin)

    def interior_point(self):
        return self.center.copy()

    def direction_basis(self):
        return np.eye(self.q)

    def sample(self, rng):
        d = rng.gaussian(self.q)
        n = float(np.linalg.norm(d))
        if n == 0.0:
            return self.center.copy()
        u = float(rng.uniform(1)[0])
        return self.center + d / n * self._reach() * u ** (1.0 / self.q)


@dataclass(frozen=True)
class Simplex(ConvexDomain):
    q: int
    face_eps: float = INTERIOR_MARGIN

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("dimension must be >= 1")
        if not 0 <= self.face_eps * self.q < 1:
            raise DomainError("face epsilon too large for this dimension")

    def contains(self, x, tol=MEMBERSHIP_TOL):
        v = _as_vector(x, self.q)
        return bool(
            np.all(v >= self.face_eps - tol) and abs(float(np.sum(v)) - 1.0) <= MEMBERSHIP_TOL
        )

    def project(self, x):
        # shift by the face bound, project onto the shrunk standard simplex, shift back
        v = _as_vector(x, self.q) - self.face_eps
        total = 1.0 - self.q * self.face_eps
        u = np.sort(v)[::-1]
        css = np.cumsum(u) - total
        ks = np.arange(1, self.q + 1)
        cond = u - css / ks > 0
        k = int(ks[cond][-1])
        tau = css[k - 1] / k
        return np.maximum(v - tau, 0.0) + self.face_eps

    def is_interior(self, x, margin=INTERIOR_MARGIN):
        v = _as_vector(x, self.q)
        if abs(float(np.sum(v)) - 1.0) > MEMBERSHIP_TOL:
            return False
        return bool(np.all(v > self.face_eps + margin))

    def interior_point(self):
        return np.full(self.q, 1.0 / self.q)

    def direction_basis(self):
        if self.q < 2:
            raise DegenerateDomain("simplex of dimension 1 has a trivial direction space")
        # Helmert-style orthonormal basis of the zero-sum subspace
        p = np.zeros((self.q, self.q - 1))
        for k in range(1, self.q):
            p[:k, k - 1] = 1.0
            p[k, k - 1] = -k
            p[:, k - 1] /= np.sqrt(k * (k + 1))
        return p

    def sample(self, rng):
        e = -np.log(1.0 - rng.uniform(self.q))
        return self.project(e / float(np.sum(e)))


@dataclass(frozen=True)
class AffineSlice(ConvexDomain):
    """Intersection of an affine subspace {x : Cx = b} with a bounding box."""

    constraints: np.ndarray
    offsets: np.ndarray
    inside: Box
    _null_basis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.constraints, dtype=float))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if c.shape[0] != b.shape[0]:
            raise DomainError("row count of C must match length of b")
        if c.shape[1] != self.inside.q:
            raise DomainError("C column count must match the box dimension")
        rank = np.linalg.matrix_rank(c)
        if rank != c.shape[0]:
            raise DomainError("rows of C must be linearly independent")
        object.__setattr__(self, "constraints", c)
        object.__setattr__(self, "offsets", b)
        _, _, vt = np.linalg.svd(c)
        object.__setattr__(self, "_null_basis", vt[c.shape[0]:].T.copy())

    @property
    def q(self):
        return self.inside.q

    def _project_affine(self, v):
        c, b = self.constraints, self.offsets
        resid = c @ v - b
        return v - c.T @ np.linalg.solve(c @ c.T, resid)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        v = _as_vector(x, self.q)
        scale = 1.0 + float(np.max(np.abs(self.offsets), initial=0.0))
        if float(np.max(np.abs(self.constraints @ v - self.offsets))) > tol * scale:
            return False
        return self.inside.contains(v, tol)

    def project(self, x):
        # Dykstra's alternating projections onto the affine set and the box
        v = _as_vector(x, self.q)
        p = np.zeros_like(v)
        qcorr = np.zeros_like(v)
        y = v.copy()
        for _ in range(200):
            ya = self._project_affine(y + p)
            p = y + p - ya
            yb = self.inside.project(ya + qcorr)
            qcorr = ya + qcorr - yb
            if float(np.linalg.norm(yb - y)) <= 1e-14 * (1.0 + float(np.linalg.norm(y))):
                y = yb
                break
            y = yb
        return self._project_affine(y)

    def is_interior(self, x, margin=INTERIOR_MARGIN):
        v = _as_vector(x, self.q)
        scale = 1.0 + float(np.max(np.abs(self.offsets), initial=0.0))
        if float(np.max(np.abs(self.constraints @ v - self.offsets))) > MEMBERSHIP_TOL * scale:
            return False
        return self.inside.is_interior(v, margin)

    def interior_point(self):
        return self.project(self.inside.interior_point())

    def direction_basis(self):
        if self._null_basis.shape[1] == 0:
            raise DegenerateDomain("constraints pin the slice to a single point")
        return self._null_basis.copy()

    def sample(self, rng):
        return self.project(self.inside.sample(rng))
