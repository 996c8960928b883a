"""Dense symmetric linear algebra for small matrices (dim <= 32).

Everything downstream (curvature reduction, rate computation, spectrum
transforms) funnels into the four operations here: a cyclic-Jacobi
eigensolver, inverse square roots, spectral norms and the generalized
rate pair rho_inf/rho_sup of a pencil (A, B) with A positive-definite.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_DIM = 32

# Cyclic Jacobi: full sweeps until the off-diagonal Frobenius mass drops
# below OFF_TOL * ||S||_F, capped at MAX_SWEEPS.
MAX_SWEEPS = 100
OFF_TOL = 1e-12

# rho_inf is snapped to 0 when B is numerically singular (0/0 = 0 convention).
SINGULAR_TOL = 1e-12


class LinalgError(Exception):
    """Base class for numerical linear-algebra failures."""


class NotPositiveDefinite(LinalgError):
    def __init__(self, min_eigenvalue: float):
        super().__init__(f"matrix is not positive-definite (min eigenvalue {min_eigenvalue:.6e})")
        self.min_eigenvalue = min_eigenvalue


class DimensionMismatch(LinalgError):
    pass


class InternalNumericalFailure(LinalgError):
    pass


class Spectrum(NamedTuple):
    """Eigenvalues in ascending order, with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class RatePair(NamedTuple):
    """inf / sup of |v'Bv| / v'Av over nonzero directions; 0 <= rho_inf <= rho_sup."""

    rho_inf: float
    rho_sup: float


def symmetrize(m) -> np.ndarray:
    """Return (M + M') / 2 as a float array; entry point for every symmetric input."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def asymmetry(m) -> float:
    """Max-norm of M - M', kept as a diagnostic before symmetrization."""
    a = np.asarray(m, dtype=float)
    return float(np.max(np.abs(a - a.T))) if a.size else 0.0


def _check_dim(a: np.ndarray) -> None:
    if a.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")


def eigh(s) -> Spectrum:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Input is symmetrized defensively.  Returns ascending eigenvalues and an
    orthonormal eigenvector matrix whose column i pairs with eigenvalue i.
    """
    a = symmetrize(s)
    _check_dim(a)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return Spectrum(a[0].copy(), v)

    frob = float(np.linalg.norm(a))
    threshold = OFF_TOL * frob
    for _ in range(MAX_SWEEPS):
        off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff  # asymptotic rotation for a negligible pivot
                else:
                    tau = diff / (2.0 * apq)
                    t = np.sign(tau) if tau != 0.0 else 1.0
                    t = t / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                sn = t * c
                # two-sided rotation on the (p, q) plane
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0))
        raise InternalNumericalFailure(
            f"Jacobi sweep cap {MAX_SWEEPS} reached with off-diagonal mass {off:.3e}"
        )

    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    return Spectrum(lam[order], v[:, order])


def spectral_norm(m) -> float:
    """Largest singular value, i.e. sqrt of the top eigenvalue of M'M."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    gram = symmetrize(a.T @ a)
    lam = eigh(gram).eigenvalues
    return float(np.sqrt(max(lam[-1], 0.0)))


def is_positive_definite(s) -> tuple[bool, float]:
    """PD test by eigenvalue threshold; returns (verdict, min eigenvalue)."""
    lam = eigh(s).eigenvalues
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    ok = lam[0] > lam.size * 1e-12 * scale and lam[0] > 0.0
    return bool(ok), float(lam[0])


def inv_sqrt(s) -> np.ndarray:
    """Inverse square root R of a symmetric positive-definite S, with R S R = I."""
    a = symmetrize(s)
    lam, vec = eigh(a)
    scale = float(np.max(np.abs(lam)))
    if not (lam[0] > a.shape[0] * 1e-12 * scale and lam[0] > 0.0):
        raise NotPositiveDefinite(float(lam[0]))
    r = (vec / np.sqrt(lam)) @ vec.T
    return symmetrize(r)


def generalized_rate_pair(a, b) -> RatePair:
    """Extreme absolute generalized Rayleigh quotients of B against SPD A.

    rho_sup is the spectral norm of A^{-1/2} B A^{-1/2}; rho_inf the smallest
    absolute eigenvalue of the same matrix, snapped to 0 when B is singular.
    """
    a = symmetrize(a)
    b = symmetrize(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    r = inv_sqrt(a)
    core = symmetrize(r @ b @ r)
    lam = eigh(core).eigenvalues
    abs_lam = np.abs(lam)
    hi = float(abs_lam.max())
    lo = float(abs_lam.min())
    if lo < SINGULAR_TOL * max(1.0, hi):
        lo = 0.0
    return RatePair(lo, hi)
