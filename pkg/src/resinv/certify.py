"""Independent re-verification of selection certificates, plus exhaustive oracles.

Nothing here calls into :mod:`resinv.barrier`'s selection code: sizes and bounds
are recomputed from the input matrices with SVDs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from resinv.linalg import as_matrix

RI_SLACK = 1e-6
KT_SLACK = 1e-6
ORACLE_MAX_COLS = 12


class CertificateError(ValueError):
    pass


@dataclass
class VerificationReport:
    kind: str
    clauses: dict = field(default_factory=dict)  # name -> (passed, detail)
    recomputed: dict = field(default_factory=dict)
    slack: float = 0.0
    oracle: dict | None = None

    @property
    def passed(self):
        return all(ok for ok, _ in self.clauses.values())

    def failed(self):
        return [name for name, (ok, _) in self.clauses.items() if not ok]

    def table(self):
        width = max(len(k) for k in self.clauses) if self.clauses else 0
        lines = [f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}" for name, (ok, detail) in self.clauses.items()]
        return "\n".join(lines)


def _svals(M):
    M = np.atleast_2d(M)
    if M.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def _get(cert, name):
    if isinstance(cert, dict):
        if name not in cert:
            raise CertificateError(f"certificate is missing field '{name}'")
        return cert[name]
    return getattr(cert, name)


def _sigma_clause(sigma, m, allowed=None):
    if any(not isinstance(j, (int, np.integer)) for j in sigma):
        return False, "indices must be integers"
    if len(set(sigma)) != len(sigma):
        return False, "repeated indices"
    if any(j < 0 or j >= m for j in sigma):
        return False, f"indices must lie in 0..{m - 1}"
    if allowed is not None and any(j not in allowed for j in sigma):
        return False, "index outside the weight support"
    return True, f"{len(sigma)} distinct indices"


def _rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def verify_ri(U, alphas, cert) -> VerificationReport:
    """Check an RI certificate: size, index validity, bound value, and achieved s_min."""
    U = as_matrix(U)
    n, m = U.shape
    kind = _get(cert, "kind")
    if kind != "restricted-invertibility":
        raise CertificateError(f"expected a restricted-invertibility certificate, got '{kind}'")
    sigma = [int(j) for j in _get(cert, "sigma")]
    eps = float(_get(cert, "params")["eps"])
    alphas = np.ones(m) if alphas is None else np.asarray(alphas, dtype=float).ravel()
    rep = VerificationReport(kind=kind, slack=RI_SLACK)

    sv = _svals(U)
    op2, hs2 = float(sv[0]) ** 2, float(np.sum(U * U))
    d2 = float(np.sum(alphas**2))
    support = set(np.flatnonzero(alphas != 0).tolist())
    x = (1 - eps) ** 2 * hs2 / op2
    size = min(max(1, math.floor(x * (1 + 1e-10))), n, len(support))
    bound = eps * math.sqrt(hs2 / d2)

    rep.clauses["indices"] = _sigma_clause(sigma, m, support)
    rep.clauses["size"] = (len(sigma) == size, f"|sigma| = {len(sigma)}, required {size}")
    claimed = float(_get(cert, "claimed_bound"))
    rep.clauses["claimed_bound"] = (_rel_close(claimed, bound, 1e-9), f"certificate {claimed!r}, recomputed {bound!r}")
    if rep.clauses["indices"][0] and sigma:
        cols = U[:, sigma] / alphas[sigma]
        smin = 0.0 if cols.shape[1] > n else float(_svals(cols)[-1])
    else:
        smin = 0.0
    rep.clauses["bound"] = (smin >= (1 - RI_SLACK) * bound, f"s_min = {smin!r} vs bound {bound!r}")
    achieved = float(_get(cert, "achieved"))
    rep.clauses["achieved"] = (_rel_close(achieved, smin, 1e-8), f"certificate {achieved!r}, recomputed {smin!r}")
    rep.recomputed = {"s_min": smin, "bound": bound, "size": size}
    return rep


def kt_bound_formula(op_norm, hs_norm, m, lam, eta):
    return (math.sqrt(lam + eta) * op_norm + math.sqrt(1 + lam / eta) * hs_norm / math.sqrt(m)) / math.sqrt(1 - lam)


def verify_kt(U, cert) -> VerificationReport:
    U = as_matrix(U)
    n, m = U.shape
    kind = _get(cert, "kind")
    if kind != "norm-bound":
        raise CertificateError(f"expected a norm-bound certificate, got '{kind}'")
    sigma = [int(j) for j in _get(cert, "sigma")]
    params = _get(cert, "params")
    lam, eta = float(params["lambda"]), float(params["eta"])
    rep = VerificationReport(kind=kind, slack=KT_SLACK)

    sv = _svals(U)
    bound = kt_bound_formula(float(sv[0]), math.sqrt(float(np.sum(U * U))), m, lam, eta)
    size = max(1, math.ceil(lam * m * (1 - 1e-12)))

    rep.clauses["parameters"] = (1 / m <= lam <= eta < 1, f"lambda = {lam!r}, eta = {eta!r}")
    rep.clauses["indices"] = _sigma_clause(sigma, m)
    rep.clauses["size"] = (len(sigma) == size, f"|sigma| = {len(sigma)}, required {size}")
    claimed = float(_get(cert, "claimed_bound"))
    rep.clauses["claimed_bound"] = (_rel_close(claimed, bound, 1e-12), f"certificate {claimed!r}, recomputed {bound!r}")
    norm = float(_svals(U[:, sigma])[0]) if rep.clauses["indices"][0] and sigma else math.inf
    rep.clauses["bound"] = (norm <= (1 + KT_SLACK) * bound, f"||U_sigma|| = {norm!r} vs bound {bound!r}")
    achieved = float(_get(cert, "achieved"))
    rep.clauses["achieved"] = (_rel_close(achieved, norm, 1e-8), f"certificate {achieved!r}, recomputed {norm!r}")
    rep.recomputed = {"norm": norm, "bound": bound, "size": size}
    return rep


def _subsets(pool, k, m):
    if m > ORACLE_MAX_COLS:
        raise CertificateError(f"exhaustive oracle refuses m = {m} > {ORACLE_MAX_COLS}")
    if not 1 <= k <= len(pool):
        raise CertificateError(f"subset size {k} out of range 1..{len(pool)}")
    return itertools.combinations(pool, k)


def oracle_best_subset_smin(U, alphas, k):
    """Exact max over |sigma| = k subsets of the weight support of s_min(U_sigma D_sigma^{-1})."""
    U = as_matrix(U)
    n, m = U.shape
    alphas = np.ones(m) if alphas is None else np.asarray(alphas, dtype=float).ravel()
    pool = np.flatnonzero(alphas != 0).tolist()
    best, best_val = None, -math.inf
    for sub in _subsets(pool, k, m):
        cols = U[:, sub] / alphas[list(sub)]
        val = 0.0 if k > n else float(_svals(cols)[-1])
        if val > best_val:
            best, best_val = list(sub), val
    return best, best_val


def oracle_best_subset_norm(U, k):
    """Exact min over |sigma| = k of ||U_sigma||."""
    U = as_matrix(U)
    m = U.shape[1]
    best, best_val = None, math.inf
    for sub in _subsets(list(range(m)), k, m):
        val = float(_svals(U[:, sub])[0])
        if val < best_val:
            best, best_val = list(sub), val
    return best, best_val
