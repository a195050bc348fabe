"""Dense symmetric linear algebra shared by the selectors and factorizations.

Everything here is a thin, validated layer over LAPACK (via numpy). Matrices are
plain ``np.ndarray`` of dtype float64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LinalgError(ValueError):
    pass


class BarrierCollision(LinalgError):
    """A shift sits on (or numerically at) an eigenvalue of the matrix."""


def as_matrix(U, name="matrix"):
    """Validate and return a finite 2-D float64 array with at least one row and column."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[0] < 1 or U.shape[1] < 1:
        raise LinalgError(f"{name} must be a non-empty 2-D array, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise LinalgError(f"{name} has non-finite entries")
    return U


def symmetrize(S):
    """Copy the upper triangle onto the lower one, so symmetry is exact."""
    S = np.asarray(S, dtype=float)
    return np.triu(S) + np.triu(S, 1).T


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eigen(S) -> Spectrum:
    S = as_matrix(S, "symmetric matrix")
    if S.shape[0] != S.shape[1]:
        raise LinalgError(f"symmetric matrix must be square, got shape {S.shape}")
    S = symmetrize(S)
    try:
        w, Q = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"eigendecomposition of {S.shape[0]}x{S.shape[0]} matrix did not converge") from exc
    return Spectrum(w[::-1].copy(), Q[:, ::-1].copy())


def _shift_gaps(spec, t):
    gaps = spec.eigenvalues - t
    scale = max(1.0, float(np.max(np.abs(spec.eigenvalues))) if spec.dim else 1.0, abs(t))
    if np.any(np.abs(gaps) <= 1e-12 * scale):
        raise BarrierCollision(f"barrier collision: shift {t!r} coincides with an eigenvalue")
    return gaps


def shifted_quadratics(spec: Spectrum, t: float, v):
    """Return ``(v^T (A - tI)^{-1} v, v^T (A - tI)^{-2} v)`` for A given by its spectrum.

    ``v`` may also be an ``n x m`` matrix, in which case both quantities are
    returned per column as length-``m`` arrays.
    """
    gaps = _shift_gaps(spec, t)
    v = np.asarray(v, dtype=float)
    w2 = (spec.eigenvectors.T @ v) ** 2
    if w2.ndim == 1:
        return float(np.sum(w2 / gaps)), float(np.sum(w2 / gaps**2))
    return (w2 / gaps[:, None]).sum(axis=0), (w2 / (gaps**2)[:, None]).sum(axis=0)


def gram_trace_inverse(spec: Spectrum, G_rotated_diag, t):
    """Tr((A - tI)^{-1} G) given diag(Q^T G Q) for the spectrum's eigenbasis Q."""
    gaps = _shift_gaps(spec, t)
    return float(np.sum(G_rotated_diag / gaps))


def operator_norm(U) -> float:
    U = as_matrix(U)
    return float(np.linalg.svd(U, compute_uv=False)[0])


def hs_norm(U) -> float:
    U = as_matrix(U)
    return float(np.sqrt(np.sum(U * U)))


def singular_values(U):
    return np.linalg.svd(as_matrix(U), compute_uv=False)


def smin_restricted(U, sigma, alphas=None) -> float:
    """Smallest singular value of the matrix with columns ``U e_j / alpha_j``, j in sigma.

    For a wide result (more columns than rows) this is 0.
    """
    U = as_matrix(U)
    sigma = list(sigma)
    if not sigma:
        raise LinalgError("sigma must be nonempty")
    cols = U[:, sigma]
    if alphas is not None:
        a = np.asarray(alphas, dtype=float)[sigma]
        if np.any(a == 0):
            bad = [j for j, aj in zip(sigma, a) if aj == 0]
            raise LinalgError(f"weight support violation at columns {bad}")
        cols = cols / a
    if cols.shape[1] > cols.shape[0]:
        return 0.0
    return float(np.linalg.svd(cols, compute_uv=False)[-1])


def numerical_rank(M, rel_tol=1e-8) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def orth_complement_basis(vectors, dim=None, rel_tol=1e-10):
    """Orthonormal basis (as columns) of the orthogonal complement of span(vectors) in R^dim."""
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if dim is None:
        if not vecs:
            raise LinalgError("dim is required when no vectors are given")
        dim = vecs[0].shape[0]
    if not vecs:
        return np.eye(dim)
    V = np.column_stack(vecs)
    if V.shape[0] != dim:
        raise LinalgError(f"vectors have length {V.shape[0]}, expected {dim}")
    Q, s, _ = np.linalg.svd(V, full_matrices=True)
    r = int(np.sum(s > rel_tol * max(1.0, s[0] if s.size else 0.0))) if s.size else 0
    return Q[:, r:].copy()


def orthonormal_range(V, rel_tol=1e-10):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    Q, s, _ = np.linalg.svd(V, full_matrices=False)
    r = int(np.sum(s > rel_tol * max(1.0, s[0] if s.size else 0.0))) if s.size else 0
    return Q[:, :r].copy()


def psd_power(S, p):
    """S^p for a symmetric positive definite S."""
    spec = sym_eigen(S)
    if spec.eigenvalues[-1] <= 0:
        raise LinalgError("matrix is not positive definite")
    Q = spec.eigenvectors
    return symmetrize((Q * spec.eigenvalues**p) @ Q.T)
