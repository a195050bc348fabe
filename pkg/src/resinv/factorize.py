"""Proportional Dvoretzky-Rogers factorizations and the distance-to-the-cube basis.

All three constructions take a :class:`~resinv.john.JohnDecomposition` (contact
points ``x_j`` and weights ``c_j`` with ``sum c_j x_j x_j^T = I``) and reduce to the
lower-barrier selector on ``U = (sqrt(c_j) x_j)_j`` with ``D = diag(sqrt(c_j))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from resinv.barrier import SelectionCertificate, ri_select
from resinv.john import JohnDecomposition, validate_decomposition
from resinv.linalg import (
    numerical_rank,
    orth_complement_basis,
    orthonormal_range,
    smin_restricted,
)

RANK_TOL = 1e-8


class FactorizationError(ValueError):
    pass


def _check_decomposition(decomp: JohnDecomposition):
    if np.any(decomp.weights <= 0):
        raise FactorizationError("decomposition weights must be positive")
    n = decomp.dim
    rep = validate_decomposition(decomp)
    if not rep.passes(n, identity_tol=1e-8 * n, trace_tol=1e-6 * n, norm_tol=1e-6):
        raise FactorizationError(
            f"invalid identity decomposition: |sum c x x^T - I|_HS = {rep.identity_residual:.3e}, "
            f"sum c - n = {rep.trace_residual:.3e}, max ||x|-1| = {rep.norm_deviation:.3e}"
        )


def _john_select(decomp, eps):
    sq = np.sqrt(decomp.weights)
    return ri_select(decomp.points * sq, sq, eps)


@dataclass
class DRSymResult:
    sigma: list
    points: np.ndarray
    epsilon: float
    lower_constant: float
    certificate: SelectionCertificate
    size_floor: int
    report: dict = field(default_factory=dict)


def dr_symmetric(decomp: JohnDecomposition, eps) -> DRSymResult:
    """Select contact points with ``eps |a|_2 <= |sum a_j x_j|_2 <= |a|_1``.

    The right-hand side is the triangle inequality in the body's norm (each contact
    point has unit gauge); only the left-hand side is computed.
    """
    if not 0 < eps < 1:
        raise FactorizationError("eps must lie in (0,1)")
    _check_decomposition(decomp)
    n = decomp.dim
    cert = _john_select(decomp, eps)
    sigma = list(cert.sigma)
    lower = smin_restricted(decomp.points, sigma)
    k = len(sigma)
    return DRSymResult(
        sigma=sigma,
        points=decomp.points[:, sigma],
        epsilon=eps,
        lower_constant=lower,
        certificate=cert,
        size_floor=max(1, math.floor((1 - eps) ** 2 * n * (1 + 1e-10))),
        report={
            "upper_side": "|sum a_j x_j|_X <= |a|_1 (triangle inequality, unit-gauge contact points)",
            "l1_distance_nominal": math.sqrt(n) / eps,
            "l1_distance_certified": math.sqrt(k) / lower,
        },
    )


def partition_groups(indices, eps):
    """Split ``indices`` (in order) into floor(eps*s/2) near-equal groups, each of size >= 2 when possible."""
    s = len(indices)
    g = max(1, math.floor(eps / 2 * s))
    while g > 1 and s // g < 2:
        g -= 1
    q, r = divmod(s, g)
    groups, start = [], 0
    for l in range(g):
        size = q + 1 if l < r else q
        groups.append(list(indices[start : start + size]))
        start += size
    return groups


@dataclass
class DRNonsymResult:
    sigma: list
    sigma1: list
    groups: list
    projection: np.ndarray  # P on R^n (zero off Y)
    rank_P: int
    lower_constant: float  # s_min of (P x_j)_{j in sigma}, measured directly
    chain_constant: float  # product of the two achieved first/second pass constants
    upper_group_bound: int
    epsilon: float
    first_pass: SelectionCertificate
    second_pass: SelectionCertificate
    P_prime: np.ndarray
    P_second: np.ndarray
    report: dict = field(default_factory=dict)


def dr_nonsymmetric(decomp: JohnDecomposition, eps) -> DRNonsymResult:
    """Two selector passes at eps/4 around a projection killing group sums.

    No barycenter condition is imposed on the decomposition.
    """
    if not 0 < eps < 1:
        raise FactorizationError("eps must lie in (0,1)")
    _check_decomposition(decomp)
    n = decomp.dim
    X = decomp.points

    first = _john_select(decomp, eps / 4)
    sigma1 = sorted(first.sigma)
    s = len(sigma1)
    X1 = X[:, sigma1]
    smin1 = smin_restricted(X1, range(s))

    groups = partition_groups(list(range(s)), eps)  # positions within sigma1
    Z = np.column_stack([X1[:, grp].sum(axis=1) for grp in groups])

    Qy = orthonormal_range(X1)
    if Qy.shape[1] != s:
        raise FactorizationError("first-pass contact points are not linearly independent")
    W = orth_complement_basis(list((Qy.T @ Z).T), dim=s)
    if W.shape[1] == 0:
        raise FactorizationError(f"dimension {n} too small: the projection has rank 0")
    Qp = Qy @ W
    P = Qp @ Qp.T

    # T e_j = x_j maps R^s onto Y; P' = T^{-1} P T, P'' = projection onto (ker P')^perp
    T_inv = np.linalg.pinv(X1)
    P1 = T_inv @ P @ X1
    _, sv, Vt = np.linalg.svd(P1)
    r = int(np.sum(sv > RANK_TOL * sv[0]))
    V = Vt[:r].T
    P2 = V @ V.T

    second = ri_select(P2, None, eps / 4)
    sigma = [sigma1[i] for i in second.sigma]
    smin2 = second.achieved
    lower = smin_restricted(P @ X, sigma)
    rank_P = numerical_rank(P, RANK_TOL)
    nominal_size = max(1, math.floor((1 - eps) * n * (1 + 1e-10)))
    full_second_size = math.floor((1 - eps / 4) ** 2 * s * (1 + 1e-10))
    return DRNonsymResult(
        sigma=sigma,
        sigma1=sigma1,
        groups=[[sigma1[i] for i in grp] for grp in groups],
        projection=P,
        rank_P=rank_P,
        lower_constant=lower,
        chain_constant=smin1 * smin2,
        upper_group_bound=max(len(grp) for grp in groups) - 1,
        epsilon=eps,
        first_pass=first,
        second_pass=second,
        P_prime=P1,
        P_second=P2,
        report={
            "first_pass_smin": smin1,
            "second_pass_smin": smin2,
            "nominal_lower": eps**2 / 16,
            "nominal_upper": 4 / eps,
            "group_size_limit": math.floor(4 / eps) + 1,
            "nominal_size": nominal_size,
            "size_meets_nominal": len(sigma) >= nominal_size,
            # the second pass's target uses stable rank rank(P'') rather than |sigma1|
            "second_pass_target": second.target_size,
            "unreachable_second_pass_size": full_second_size,
            "rank_cap_binds": full_second_size > r,
            "projected_l1_distance_nominal": 64 * math.sqrt(n) / eps**3,
        },
    )


def default_cube_eps(n, d=None):
    if d is None:
        d = math.sqrt(n)
    return (math.sqrt(2) * d) ** (-2 / 3)


@dataclass
class CubeBasisResult:
    T: np.ndarray
    k: int
    epsilon: float
    d: float
    c_low: float
    claimed_bound: float
    two_ellipsoid_bound: float
    sigma: list
    s_achieved: float
    dr: DRSymResult

    @property
    def distance_certificate(self):
        """Certified upper bound on the distance to l_1^n (equivalently to the cube)."""
        return 1 / self.c_low

    def holds(self, slack=1e-6):
        return self.distance_certificate <= (1 + slack) * self.claimed_bound


def cube_basis(decomp: JohnDecomposition, eps=None, d=None) -> CubeBasisResult:
    """Basis ``T`` of contact points plus a scaled orthogonal complement.

    ``c_low |a|_1 <= |Ta|_2 <= |Ta|_X`` and ``|Ta|_X <= |a|_1``, so ``1/c_low`` bounds
    the Banach-Mazur distance to l_1^n. ``d`` is the ratio of the inner ellipsoid
    (``B_X`` contains ``(1/d) B_2^n``); John's theorem gives ``d = sqrt(n)``.
    """
    _check_decomposition(decomp)
    n = decomp.dim
    if d is None:
        d = math.sqrt(n)
    elif d < 1:
        raise FactorizationError("d must be >= 1")
    if eps is None:
        eps = default_cube_eps(n, d)
    elif not 0 < eps < 1:
        raise FactorizationError("eps must lie in (0,1)")

    dr = dr_symmetric(decomp, eps)
    k = len(dr.sigma)
    s_ach = dr.lower_constant
    Xs = dr.points
    if k == n:
        T = Xs.copy()
        c_low = s_ach / math.sqrt(n)
    else:
        Yc = orth_complement_basis(list(Xs.T), dim=n) / d
        T = np.hstack([Xs, Yc])
        c_low = min(s_ach / math.sqrt(k), 1 / (d * math.sqrt(n - k))) / math.sqrt(2)
    return CubeBasisResult(
        T=T,
        k=k,
        epsilon=eps,
        d=d,
        c_low=c_low,
        claimed_bound=2 ** (5 / 6) * math.sqrt(n) * d ** (2 / 3),
        two_ellipsoid_bound=2 ** (4 / 3) * math.sqrt(n) * d ** (2 / 3),
        sigma=dr.sigma,
        s_achieved=s_ach,
        dr=dr,
    )


def optimize_eps(n, tol=1e-12):
    """Root in (0,1) of eps/((1-eps) sqrt(n)) = 1/(n sqrt(1-(1-eps)^2)), by bisection."""
    if n < 2:
        raise FactorizationError("n must be at least 2")

    def f(e):
        return e / ((1 - e) * math.sqrt(n)) - 1 / (n * math.sqrt(1 - (1 - e) ** 2))

    lo, hi = 1e-15, 1 - 1e-15
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
