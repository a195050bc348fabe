"""Barrier-potential greedy column selectors.

Two selectors share the same skeleton: grow ``A = sum v v^T`` one column at a time
while a barrier walks away from the spectrum and a trace potential is kept from
increasing.

* :func:`ri_select` -- lower barrier. Picks columns ``U e_j / alpha_j`` so that the
  selected block is well invertible: ``s_min(U_sigma D_sigma^{-1}) > eps ||U||_HS / ||D||_HS``.
* :func:`kt_select` -- upper barrier. Picks a proportion ``lam`` of the columns with a
  small restricted operator norm ``||U_sigma||``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from resinv.linalg import (
    Spectrum,
    as_matrix,
    gram_trace_inverse,
    hs_norm,
    operator_norm,
    shifted_quadratics,
    smin_restricted,
    sym_eigen,
    symmetrize,
)

RI_KIND = "restricted-invertibility"
KT_KIND = "norm-bound"

SIZE_NUDGE = 1e-10
KERNEL_TOL = 1e-10
FEAS_TOL = 1e-9


class SelectionError(ValueError):
    pass


class SelectionBreakdown(RuntimeError):
    """No admissible column exists; only reachable through roundoff."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class DiagonalWeights:
    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float).ravel()
        if not np.all(np.isfinite(self.alphas)):
            raise SelectionError("weights must be finite")
        if self.hs_norm2 <= 0:
            raise SelectionError("weights must not all vanish")

    @classmethod
    def identity(cls, m):
        return cls(np.ones(m))

    @classmethod
    def column_norms(cls, U):
        return cls(np.linalg.norm(as_matrix(U), axis=0))

    @property
    def support(self):
        return np.flatnonzero(self.alphas != 0)

    @property
    def hs_norm2(self):
        return float(np.sum(self.alphas**2))

    def check_kernel(self, U):
        """Raise unless every column outside the support of D is (numerically) zero."""
        U = as_matrix(U)
        if U.shape[1] != self.alphas.shape[0]:
            raise SelectionError(
                f"weights have length {self.alphas.shape[0]}, matrix has {U.shape[1]} columns"
            )
        tol = KERNEL_TOL * max(1.0, hs_norm(U))
        off = np.flatnonzero(self.alphas == 0)
        bad = [int(j) for j in off if np.linalg.norm(U[:, j]) > tol]
        if bad:
            raise SelectionError(f"Ker(D) not contained in Ker(U): nonzero columns {bad} have zero weight")


@dataclass
class StepRecord:
    step: int
    chosen_index: int
    barrier_before: float
    barrier_after: float
    potential_before: float
    potential_after: float
    feasibility_margin: float
    # Extreme eigenvalue of the new partial sum on the barrier's side:
    # smallest of the top `step+1` eigenvalues (lower barrier) or the largest one (upper).
    edge_eigenvalue: float
    aggregate_margin: float | None = None

    def to_dict(self):
        return asdict(self)


@dataclass
class SelectionCertificate:
    kind: str
    sigma: list
    target_size: int
    claimed_bound: float
    achieved: float
    params: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def k(self):
        return self.target_size

    def holds(self, slack=1e-6):
        if len(self.sigma) != self.target_size or len(set(self.sigma)) != len(self.sigma):
            return False
        if self.kind == RI_KIND:
            return self.achieved >= (1 - slack) * self.claimed_bound
        return self.achieved <= (1 + slack) * self.claimed_bound


@dataclass
class LowerBarrierState:
    A: np.ndarray
    b: float
    delta: float
    sigma: list
    step: int
    phi: float


@dataclass
class UpperBarrierState:
    A: np.ndarray
    u: float
    delta: float
    s: float
    sigma: list
    psi: float


def _stable_rank_size(hs2, op2, eps):
    x = (1 - eps) ** 2 * hs2 / op2
    return max(1, math.floor(x * (1 + SIZE_NUDGE)))


def ri_target_size(U, eps):
    """Number of columns the lower-barrier selector extracts: floor((1-eps)^2 * stable rank), at least 1."""
    if not 0 < eps < 1:
        raise SelectionError("eps must lie in (0,1)")
    U = as_matrix(U)
    op = operator_norm(U)
    if op == 0:
        raise SelectionError("matrix is zero")
    k = _stable_rank_size(hs_norm(U) ** 2, op**2, eps)
    return min(k, U.shape[0])


def kt_target_size(m, lam):
    if not 1 / m <= lam < 1:
        raise SelectionError(f"lambda must lie in [1/m, 1) = [{1 / m!r}, 1)")
    return max(1, math.ceil(lam * m * (1 - 1e-12)))


def _rotated_gram_diag(spec: Spectrum, G):
    Q = spec.eigenvectors
    return np.sum(Q * (G @ Q), axis=0)


def phi_potential(U, A, b, G=None):
    """Lower potential Tr(U^T (A - bI)^{-1} U)."""
    U = as_matrix(U)
    spec = A if isinstance(A, Spectrum) else sym_eigen(A)
    if G is None:
        G = U @ U.T
    return gram_trace_inverse(spec, _rotated_gram_diag(spec, G), b)


def psi_potential(U, A, u, G=None):
    """Upper potential Tr(U^T (uI - A)^{-1} U)."""
    return -phi_potential(U, A, u, G)


def _feas_tol(hs2):
    return FEAS_TOL * max(1.0, hs2)


def ri_feasible(state: LowerBarrierState, U, D: DiagonalWeights, j, op2=None):
    """Both sides of the per-column step condition for column ``j`` and their difference.

    Returns ``(lhs, rhs, margin)`` with margin = rhs - lhs; the column is admissible
    when ``margin >= -1e-9 * max(1, ||U||_HS^2)``.
    """
    U = as_matrix(U)
    if D.alphas[j] == 0:
        raise SelectionError(f"column {j} is outside the weight support")
    if op2 is None:
        op2 = operator_norm(U) ** 2
    spec = sym_eigen(state.A)
    G = U @ U.T
    gdiag = _rotated_gram_diag(spec, G)
    b_next = state.b - state.delta
    dphi = gram_trace_inverse(spec, gdiag, state.b) - gram_trace_inverse(spec, gdiag, b_next)
    q1, q2 = shifted_quadratics(spec, b_next, U[:, j])
    rhs = dphi / op2 * (-D.alphas[j] ** 2 - q1)
    return q2, rhs, rhs - q2


def _lower_step_scores(spec, gdiag, U, alphas, cand, b, b_next, op2):
    dphi = gram_trace_inverse(spec, gdiag, b) - gram_trace_inverse(spec, gdiag, b_next)
    q1, q2 = shifted_quadratics(spec, b_next, U[:, cand])
    rhs = dphi / op2 * (-alphas[cand] ** 2 - q1)
    return q1, q2, rhs, dphi


def ri_select(U, D=None, eps=0.5) -> SelectionCertificate:
    """Greedy lower-barrier selection with restricted-invertibility guarantee.

    ``D`` defaults to the identity. When ``(1-eps)^2`` times the stable rank is
    below 1 the barrier schedule cannot take a single step; the selector then
    jumps to the final barrier ``eps^2 ||U||_HS^2 / ||D||_HS^2`` with the column
    that leaves the potential lowest. Only columns with ``|U e_j / alpha_j|^2``
    above that barrier are candidates, so the bound holds automatically.
    """
    U = as_matrix(U)
    n, m = U.shape
    if not 0 < eps < 1:
        raise SelectionError("eps must lie in (0,1)")
    if D is None:
        D = DiagonalWeights.identity(m)
    elif not isinstance(D, DiagonalWeights):
        D = DiagonalWeights(D)
    D.check_kernel(U)

    hs2 = hs_norm(U) ** 2
    op2 = operator_norm(U) ** 2
    if op2 == 0:
        raise SelectionError("matrix is zero")
    d2 = D.hs_norm2
    alphas = D.alphas
    support = D.support
    k = min(_stable_rank_size(hs2, op2, eps), n, support.size)
    single = (1 - eps) ** 2 * hs2 / op2 * (1 + SIZE_NUDGE) < 1

    b0 = eps * hs2 / d2
    delta = eps / (1 - eps) * op2 / d2
    floor_barrier = eps**2 * hs2 / d2
    tau = _feas_tol(hs2)
    G = symmetrize(U @ U.T)

    A = np.zeros((n, n))
    b = b0
    chosen = np.zeros(m, dtype=bool)
    sigma, trace, warnings = [], [], []
    spec = sym_eigen(A)
    phi = -hs2 / b0

    if single:
        return _single_column(U, alphas, support, eps, hs2, op2, d2, G, b0, delta, floor_barrier)

    for step in range(k):
        b_next = b - delta
        gdiag = _rotated_gram_diag(spec, G)
        cand = support[~chosen[support]]
        q1, q2, rhs, dphi = _lower_step_scores(spec, gdiag, U, alphas, cand, b, b_next, op2)
        margin = rhs - q2
        ok = margin >= -tau
        if np.any(ok):
            ratio = np.where(ok & (rhs > 0), margin / np.where(rhs > 0, rhs, 1.0), -np.inf)
            if not np.any(np.isfinite(ratio)):
                ratio = np.where(ok, margin, -np.inf)
            pick = int(np.argmax(ratio))
        else:
            pick = int(np.argmax(margin))
            if not -alphas[cand[pick]] ** 2 - q1[pick] > 0:
                raise SelectionBreakdown(
                    f"numerical breakdown at step {step}: no column adds an eigenvalue beyond the barrier",
                    [r.to_dict() for r in trace],
                )
            warnings.append(
                f"step {step}: no column met the step condition within roundoff slack; "
                f"took least-violating column {int(cand[pick])} (margin {float(margin[pick])!r})"
            )
        j = int(cand[pick])

        # aggregated form over the whole support, diagnostic only
        agg_lhs = float(np.sum(gdiag / (spec.eigenvalues - b_next) ** 2))
        phi_next_same = gram_trace_inverse(spec, gdiag, b_next)
        agg_rhs = dphi / op2 * (-d2 - phi_next_same)

        v = U[:, j] / alphas[j]
        A = symmetrize(A + np.outer(v, v))
        spec = sym_eigen(A)
        new_phi = gram_trace_inverse(spec, _rotated_gram_diag(spec, G), b_next)
        chosen[j] = True
        sigma.append(j)
        trace.append(
            StepRecord(
                step=step,
                chosen_index=j,
                barrier_before=b,
                barrier_after=b_next,
                potential_before=phi,
                potential_after=new_phi,
                feasibility_margin=float(margin[pick]),
                edge_eigenvalue=float(spec.eigenvalues[step]),
                aggregate_margin=float(agg_rhs - agg_lhs),
            )
        )
        b, phi = b_next, new_phi

    achieved = smin_restricted(U, sigma, alphas)
    return SelectionCertificate(
        kind=RI_KIND,
        sigma=sigma,
        target_size=k,
        claimed_bound=eps * math.sqrt(hs2 / d2),
        achieved=achieved,
        params=_ri_params(eps, hs2, op2, d2, b0, delta, b, floor_barrier, "barrier; ties: max margin/rhs, then lowest index"),
        trace=[r.to_dict() for r in trace],
        warnings=warnings,
    )


def _ri_params(eps, hs2, op2, d2, b0, delta, final_barrier, floor_barrier, rule):
    return {
        "eps": eps,
        "hs_norm": math.sqrt(hs2),
        "op_norm": math.sqrt(op2),
        "weights_hs_norm": math.sqrt(d2),
        "b0": b0,
        "delta": delta,
        "final_barrier": final_barrier,
        "barrier_floor": floor_barrier,
        "rule": rule,
    }


def _single_column(U, alphas, support, eps, hs2, op2, d2, G, b0, delta, floor_barrier):
    # One step from A = 0 landing directly on the final barrier b1. For v = U e_j / alpha_j,
    # Sherman-Morrison gives phi(vv^T, b1) = -||U||_HS^2 / b1 + v^T G v / (b1 (|v|^2 - b1)).
    b1 = floor_barrier
    cols = U[:, support] / alphas[support]
    w = np.sum(cols**2, axis=0)
    vGv = np.sum(cols * (G @ cols), axis=0)
    admissible = w > b1 * (1 + 1e-12)
    after = np.where(admissible, -hs2 / b1 + vGv / (b1 * np.where(admissible, w - b1, 1.0)), np.inf)
    pick = int(np.argmin(after))
    j = int(support[pick])
    v = U[:, j] / alphas[j]
    A = symmetrize(np.outer(v, v))
    spec = sym_eigen(A)
    phi_after = gram_trace_inverse(spec, _rotated_gram_diag(spec, G), b1)
    warnings = ["(1-eps)^2 * stable rank < 1: size clamped to 1, single step to the final barrier"]
    if phi_after > -hs2 / b0 + _feas_tol(hs2):
        warnings.append("clamped step raised the potential")
    rec = StepRecord(
        step=0,
        chosen_index=j,
        barrier_before=b0,
        barrier_after=floor_barrier,
        potential_before=-hs2 / b0,
        potential_after=phi_after,
        feasibility_margin=float(-hs2 / b0 - after[pick]),
        edge_eigenvalue=float(spec.eigenvalues[0]),
    )
    return SelectionCertificate(
        kind=RI_KIND,
        sigma=[j],
        target_size=1,
        claimed_bound=eps * math.sqrt(hs2 / d2),
        achieved=smin_restricted(U, [j], alphas),
        params=_ri_params(eps, hs2, op2, d2, b0, delta, floor_barrier, floor_barrier, "single column (size clamped to 1)"),
        trace=[rec.to_dict()],
        warnings=warnings,
    )


def kt_bound(op_norm, hs_norm, m, lam, eta):
    return (math.sqrt(lam + eta) * op_norm + math.sqrt(1 + lam / eta) * hs_norm / math.sqrt(m)) / math.sqrt(1 - lam)


def kt_bound_particular(op_norm, hs_norm, m, lam):
    return math.sqrt(2) / math.sqrt(1 - lam) * (math.sqrt(lam) * op_norm + hs_norm / math.sqrt(m))


def kt_feasible(state: UpperBarrierState, U, j, op2=None):
    """``(F, 1/s)`` for column ``j``; the column is admissible when F <= 1/s (+ slack)."""
    U = as_matrix(U)
    if op2 is None:
        op2 = operator_norm(U) ** 2
    spec = sym_eigen(state.A)
    u_next = state.u + state.delta
    if spec.eigenvalues[0] >= u_next:
        raise SelectionError("barrier collision: upper barrier below the spectrum")
    gdiag = _rotated_gram_diag(spec, symmetrize(U @ U.T))
    dpsi = gram_trace_inverse(spec, gdiag, state.u) - gram_trace_inverse(spec, gdiag, u_next)
    dpsi = -dpsi
    q1, q2 = shifted_quadratics(spec, u_next, U[:, j])
    return q2 * op2 / dpsi - q1, 1.0 / state.s


def kt_select(U, lam, eta=None, *, delta=1.0) -> SelectionCertificate:
    """Greedy upper-barrier selection of ceil(lam*m) columns with small ``||U_sigma||``."""
    U = as_matrix(U)
    n, m = U.shape
    if eta is None:
        eta = lam
    k = kt_target_size(m, lam)
    if not lam <= eta < 1:
        raise SelectionError("eta must satisfy lambda <= eta < 1")
    if not delta > 0:
        raise SelectionError("delta must be positive")

    hs2 = hs_norm(U) ** 2
    op2 = operator_norm(U) ** 2
    if op2 == 0:
        raise SelectionError("matrix is zero")
    u0 = eta * m * delta
    alpha = hs2 / u0
    s = (1 - lam) * m / (alpha + op2 / delta)
    tau = _feas_tol(hs2)
    G = symmetrize(U @ U.T)

    A = np.zeros((n, n))
    u = u0
    chosen = np.zeros(m, dtype=bool)
    sigma, trace, warnings = [], [], []
    spec = sym_eigen(A)
    psi = alpha

    for step in range(k):
        u_next = u + delta
        gdiag = _rotated_gram_diag(spec, G)
        dpsi = gram_trace_inverse(spec, gdiag, u_next) - gram_trace_inverse(spec, gdiag, u)
        cand = np.flatnonzero(~chosen)
        q1, q2 = shifted_quadratics(spec, u_next, U[:, cand])
        F = q2 * op2 / dpsi - q1
        pick = int(np.argmin(F))
        if F[pick] > 1 / s + tau:
            warnings.append(
                f"step {step}: no column met the step condition within roundoff slack; "
                f"took minimizer {int(cand[pick])} (F - 1/s = {float(F[pick] - 1 / s)!r})"
            )
        j = int(cand[pick])
        v = U[:, j]
        A = symmetrize(A + s * np.outer(v, v))
        spec = sym_eigen(A)
        if spec.eigenvalues[0] >= u_next:
            raise SelectionBreakdown(
                f"numerical breakdown at step {step}: spectrum crossed the upper barrier",
                [r.to_dict() for r in trace],
            )
        new_psi = -gram_trace_inverse(spec, _rotated_gram_diag(spec, G), u_next)
        chosen[j] = True
        sigma.append(j)
        trace.append(
            StepRecord(
                step=step,
                chosen_index=j,
                barrier_before=u,
                barrier_after=u_next,
                potential_before=psi,
                potential_after=new_psi,
                feasibility_margin=float(1 / s - F[pick]),
                edge_eigenvalue=float(spec.eigenvalues[0]),
            )
        )
        u, psi = u_next, new_psi

    op_n, hs_n = math.sqrt(op2), math.sqrt(hs2)
    params = {
        "lambda": lam,
        "eta": eta,
        "delta": delta,
        "s": s,
        "u0": u0,
        "initial_potential": alpha,
        "final_barrier": u,
        "barrier_norm_bound": math.sqrt(u / s),
        "hs_norm": hs_n,
        "op_norm": op_n,
        "m": m,
        "tie_break": "min F, then lowest index",
    }
    if eta == lam:
        params["particular_bound"] = kt_bound_particular(op_n, hs_n, m, lam)
    return SelectionCertificate(
        kind=KT_KIND,
        sigma=sigma,
        target_size=k,
        claimed_bound=kt_bound(op_n, hs_n, m, lam, eta),
        achieved=float(np.linalg.norm(U[:, sigma], 2)),
        params=params,
        trace=[r.to_dict() for r in trace],
        warnings=warnings,
    )
