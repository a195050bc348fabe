"""John position for symmetric polytopes.

:func:`mvee` computes the minimum-volume origin-centred ellipsoid containing
``conv(+-x_1, ..., +-x_m)`` with Khachiyan's barycentric coordinate ascent
(with Todd-Yildirim away steps, so non-contact weights actually reach zero).
:func:`whiten_decomposition` turns the optimal weights into an exact identity
decomposition ``sum_j c_j x_j x_j^T = I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from resinv.linalg import LinalgError, numerical_rank, psd_power, symmetrize


class JohnError(ValueError):
    pass


@dataclass
class PointSet:
    """Points stored as the columns of an ``n x m`` array."""

    points: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        if P.ndim != 2 or P.size == 0:
            raise JohnError("point set must be a non-empty n x m array")
        if not np.all(np.isfinite(P)):
            raise JohnError("point set has non-finite coordinates")
        if np.any(np.linalg.norm(P, axis=0) == 0):
            raise JohnError("point set contains the origin")
        self.points = P

    @property
    def dim(self):
        return self.points.shape[0]

    @property
    def size(self):
        return self.points.shape[1]


@dataclass
class MVEEResult:
    shape: np.ndarray  # M, ellipsoid {x : x^T M x <= 1}
    weights: np.ndarray
    contact_indices: np.ndarray
    iterations: int
    final_gap: float

    def levels(self, ps):
        P = ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
        return np.einsum("ij,ik,kj->j", P, self.shape, P)


@dataclass
class JohnDecomposition:
    points: np.ndarray  # columns x_j
    weights: np.ndarray  # c_j > 0

    @property
    def dim(self):
        return self.points.shape[0]

    def identity_matrix(self):
        return symmetrize((self.points * self.weights) @ self.points.T)


def _gram_levels(P, u):
    X = symmetrize((P * u) @ P.T)
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError as exc:
        raise JohnError("body not full-dimensional") from exc
    Y = np.linalg.solve(L, P)
    return X, np.sum(Y * Y, axis=0)


def mvee(ps, tol=1e-7, max_iter=100_000) -> MVEEResult:
    if not isinstance(ps, PointSet):
        ps = PointSet(ps)
    P = ps.points
    n, m = P.shape
    if numerical_rank(P) < n:
        raise JohnError("body not full-dimensional")

    u = np.full(m, 1.0 / m)
    gap = math.inf
    for it in range(1, max_iter + 1):
        _, g = _gram_levels(P, u)
        up = int(np.argmax(g))
        support = np.flatnonzero(u > 0)
        down = int(support[np.argmin(g[support])])
        eps_up = g[up] / n - 1
        eps_down = 1 - g[down] / n
        gap = max(eps_up, eps_down)
        if gap <= tol:
            break
        if eps_up >= eps_down:
            j, gj = up, g[up]
            beta = (gj - n) / (n * (gj - 1))
        else:
            j, gj = down, g[down]
            if u[j] >= 1:
                break
            drop = -u[j] / (1 - u[j])
            # for g <= 1 the objective improves all the way to dropping the point
            beta = drop if gj <= 1 else max((gj - n) / (n * (gj - 1)), drop)
        u = (1 - beta) * u
        u[j] += beta
        u[u < 0] = 0.0
        u /= u.sum()
    else:
        raise JohnError(f"MVEE did not converge in {max_iter} iterations (gap {gap:.3e})")

    X, _ = _gram_levels(P, u)
    M = symmetrize(np.linalg.inv(X) / n)
    contact = np.flatnonzero(u > 1e-9 * n / m)
    return MVEEResult(shape=M, weights=u, contact_indices=contact, iterations=it, final_gap=float(gap))


def whiten_decomposition(res: MVEEResult, ps) -> JohnDecomposition:
    """Exact identity decomposition from (near-)optimal MVEE weights.

    Contact points are mapped to John position ``y_j = M^{1/2} x_j`` with weights
    ``n u_j``; the residual second-moment matrix ``S`` is then whitened away so the
    identity holds to rounding and every point is renormalized to the unit sphere.
    """
    P = ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
    n, m = P.shape
    keep = np.flatnonzero(res.weights > 1e-9 * n / m)
    Y = psd_power(res.shape, 0.5) @ P[:, keep]
    c = n * res.weights[keep]
    S = symmetrize((Y * c) @ Y.T)
    try:
        W = psd_power(S, -0.5)
    except LinalgError as exc:
        raise JohnError("second-moment matrix of the contact points is singular") from exc
    Z = W @ Y
    r = np.linalg.norm(Z, axis=0)
    return JohnDecomposition(points=Z / r, weights=c * r**2)


@dataclass
class DecompositionReport:
    identity_residual: float
    trace_residual: float
    norm_deviation: float

    def passes(self, n, identity_tol=None, trace_tol=1e-8, norm_tol=1e-8):
        if identity_tol is None:
            identity_tol = 1e-10 * n
        return (
            self.identity_residual <= identity_tol
            and abs(self.trace_residual) <= trace_tol
            and self.norm_deviation <= norm_tol
        )


def validate_decomposition(d: JohnDecomposition) -> DecompositionReport:
    n = d.dim
    R = d.identity_matrix() - np.eye(n)
    return DecompositionReport(
        identity_residual=float(np.linalg.norm(R)),
        trace_residual=float(np.sum(d.weights) - n),
        norm_deviation=float(np.max(np.abs(np.linalg.norm(d.points, axis=0) - 1))),
    )


def john_decomposition(ps, tol=1e-7, max_iter=100_000) -> JohnDecomposition:
    if not isinstance(ps, PointSet):
        ps = PointSet(ps)
    return whiten_decomposition(mvee(ps, tol, max_iter), ps)


# -- named bodies ---------------------------------------------------------


def cross_polytope_points(n):
    """The 2n points +-e_i as columns."""
    I = np.eye(n)
    return np.hstack([I, -I])


def cross_polytope_decomposition(n):
    return JohnDecomposition(points=cross_polytope_points(n), weights=np.full(2 * n, 0.5))


def simplex_points(n):
    """Vertices of the regular simplex inscribed in the unit sphere of R^n, as columns."""
    E = np.eye(n + 1) - 1.0 / (n + 1)
    # orthonormal basis of the hyperplane sum(x) = 0
    Q, _ = np.linalg.qr(E[:, :n])
    V = Q.T @ E
    return V / np.linalg.norm(V, axis=0)


def simplex_decomposition(n):
    return JohnDecomposition(points=simplex_points(n), weights=np.full(n + 1, n / (n + 1)))


def random_symmetric_polytope(n, m, rng):
    """m Gaussian points in R^n (the body is their symmetric convex hull)."""
    if m < n:
        raise JohnError("need at least n points for a full-dimensional body")
    return rng.standard_normal((n, m))


def random_decomposition(n, m, rng):
    """Random identity decomposition with m unit points, no symmetry or barycenter condition."""
    if m < n:
        raise JohnError("need at least n points")
    Y = rng.standard_normal((n, m))
    Z = psd_power(symmetrize(Y @ Y.T), -0.5) @ Y
    r = np.linalg.norm(Z, axis=0)
    return JohnDecomposition(points=Z / r, weights=r**2)
