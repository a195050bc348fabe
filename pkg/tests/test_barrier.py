import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resinv.barrier import (
    DiagonalWeights,
    LowerBarrierState,
    SelectionError,
    UpperBarrierState,
    kt_feasible,
    kt_select,
    kt_target_size,
    phi_potential,
    ri_feasible,
    ri_select,
    ri_target_size,
)
from resinv.linalg import hs_norm, operator_norm, smin_restricted

S2 = 1 / math.sqrt(2)
U23 = np.array([[1.0, 0.0, S2], [0.0, 1.0, S2]])


def inv2(M):
    (a, b), (c, d) = M
    det = a * d - b * c
    return np.array([[d, -b], [-c, a]]) / det


def condition_oracle(A, b, delta, U, alphas, j):
    """Both sides of the per-column lower-barrier condition with explicit 2x2 inverses."""
    G = U @ U.T
    op2 = max(np.linalg.eigvalsh(G))
    R = inv2(A - (b - delta) * np.eye(2))
    R0 = inv2(A - b * np.eye(2))
    v = U[:, j]
    dphi = np.trace(R0 @ G) - np.trace(R @ G)
    lhs = v @ R @ R @ v
    rhs = dphi / op2 * (-alphas[j] ** 2 - v @ R @ v)
    return lhs, rhs


# -- target sizes ---------------------------------------------------------


@pytest.mark.parametrize(
    "U, eps, k",
    [
        (np.eye(4), 0.5, 1),
        (np.eye(4), 0.1, 3),
        (np.array([[1.0, 1, 0, 0], [0, 0, 1, 1]]), 0.25, 1),
    ],
)
def test_ri_target_size(U, eps, k):
    assert ri_target_size(U, eps) == k


def test_ri_target_size_errors():
    with pytest.raises(SelectionError):
        ri_target_size(np.zeros((2, 2)), 0.5)
    with pytest.raises(SelectionError):
        ri_target_size(np.eye(2), 1.0)


@pytest.mark.parametrize("m, lam, k", [(4, 0.5, 2), (10, 0.25, 3), (7, 1 / 7, 1)])
def test_kt_target_size(m, lam, k):
    assert kt_target_size(m, lam) == k


def test_kt_target_size_range():
    with pytest.raises(SelectionError):
        kt_target_size(10, 0.05)
    with pytest.raises(SelectionError):
        kt_target_size(10, 1.0)


# -- potentials -----------------------------------------------------------


def test_phi_at_zero_matrix(rng):
    U = rng.standard_normal((3, 5))
    assert phi_potential(U, np.zeros((3, 3)), 0.7) == pytest.approx(-hs_norm(U) ** 2 / 0.7)


def test_phi_two_by_two():
    assert phi_potential(np.eye(2), np.diag([3.0, 0.0]), 1.0) == pytest.approx(-0.5)


def test_phi_scales_quadratically(rng):
    U = rng.standard_normal((4, 6))
    B = rng.standard_normal((4, 4))
    A = B @ B.T
    base = phi_potential(U, A, -0.3)
    assert phi_potential(2.5 * U, A, -0.3) == pytest.approx(6.25 * base, rel=1e-12)


# -- per-column conditions --------------------------------------------------


def test_ri_feasible_first_step_frozen():
    state = LowerBarrierState(A=np.zeros((2, 2)), b=0.4, delta=4 / 9, sigma=[], step=0, phi=-7.5)
    D = DiagonalWeights.identity(3)
    for j in range(3):
        lhs, rhs, margin = ri_feasible(state, U23, D, j)
        assert lhs == pytest.approx(506.25, rel=1e-12)
        assert rhs == pytest.approx(881.25, rel=1e-12)
        assert margin == pytest.approx(375.0, rel=1e-12)
        olhs, orhs = condition_oracle(state.A, state.b, state.delta, U23, D.alphas, j)
        assert (lhs, rhs) == pytest.approx((olhs, orhs), rel=1e-12)


def test_ri_feasible_after_one_column_frozen():
    A = np.diag([1.0, 0.0])
    state = LowerBarrierState(A=A, b=0.5, delta=0.2, sigma=[0], step=1, phi=0.0)
    D = DiagonalWeights.identity(3)
    lhs, rhs, _ = ri_feasible(state, U23, D, 1)
    assert lhs == pytest.approx(100 / 9, rel=1e-12)
    assert rhs == pytest.approx(10 / 3, rel=1e-12)
    for j in (1, 2):
        got = ri_feasible(state, U23, D, j)[:2]
        assert got == pytest.approx(condition_oracle(A, 0.5, 0.2, U23, D.alphas, j), rel=1e-12)


def test_ri_feasible_identity_symmetric():
    U = np.eye(5)
    state = LowerBarrierState(A=np.zeros((5, 5)), b=0.5, delta=0.25, sigma=[], step=0, phi=-10.0)
    margins = [ri_feasible(state, U, DiagonalWeights.identity(5), j)[2] for j in range(5)]
    assert max(margins) - min(margins) <= 1e-12 * abs(margins[0])
    assert margins[0] > 0


def test_ri_feasible_rejects_unsupported_column():
    state = LowerBarrierState(A=np.zeros((2, 2)), b=0.4, delta=0.1, sigma=[], step=0, phi=0.0)
    U = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(SelectionError):
        ri_feasible(state, U, DiagonalWeights([1.0, 1.0, 0.0]), 2)


def test_kt_feasible_matches_dense_inverse(rng):
    U = rng.standard_normal((3, 6))
    m, lam = 6, 0.5
    op2 = operator_norm(U) ** 2
    hs2 = hs_norm(U) ** 2
    u0 = lam * m
    alpha = hs2 / u0
    s = (1 - lam) * m / (alpha + op2)
    state = UpperBarrierState(A=np.zeros((3, 3)), u=u0, delta=1.0, s=s, sigma=[], psi=alpha)
    R = np.linalg.inv((u0 + 1) * np.eye(3))
    R0 = np.linalg.inv(u0 * np.eye(3))
    G = U @ U.T
    dpsi = np.trace(R0 @ G) - np.trace(R @ G)
    total = 0.0
    for j in range(m):
        v = U[:, j]
        F, thr = kt_feasible(state, U, j)
        expect = v @ R @ R @ v * op2 / dpsi + v @ R @ v
        assert F == pytest.approx(expect, rel=1e-12)
        assert thr == pytest.approx(1 / s)
        total += F
    assert total <= op2 + alpha + 1e-12


def test_kt_averaging_bound_along_a_run(rng):
    U = rng.standard_normal((5, 20))
    cert = kt_select(U, 0.5)
    p = cert.params
    op2 = p["op_norm"] ** 2
    A = np.zeros((5, 5))
    u = p["u0"]
    for step, j in enumerate(cert.sigma):
        state = UpperBarrierState(A=A, u=u, delta=1.0, s=p["s"], sigma=cert.sigma[:step], psi=0.0)
        rest = [i for i in range(20) if i not in state.sigma]
        total = sum(kt_feasible(state, U, i)[0] for i in rest)
        assert total <= (op2 + p["initial_potential"]) * (1 + 1e-9)
        A = A + p["s"] * np.outer(U[:, j], U[:, j])
        u += 1.0


def test_kt_feasible_identity_symmetric():
    U = np.eye(4)
    state = UpperBarrierState(A=np.zeros((4, 4)), u=2.0, delta=1.0, s=0.5, sigma=[], psi=2.0)
    vals = [kt_feasible(state, U, j)[0] for j in range(4)]
    assert max(vals) == pytest.approx(min(vals), rel=1e-14)


# -- selectors ------------------------------------------------------------


def test_ri_select_identity():
    cert = ri_select(np.eye(4), None, 0.5)
    assert len(cert.sigma) == 1
    assert cert.achieved == pytest.approx(1.0)
    assert cert.claimed_bound == pytest.approx(0.5)


def test_ri_select_normalized_columns(rng):
    U = rng.standard_normal((8, 32)) * rng.uniform(0.1, 3, 32)
    cert = ri_select(U, DiagonalWeights.column_norms(U), 0.4)
    assert cert.achieved >= 0.4 * (1 - 1e-6)
    assert cert.claimed_bound == pytest.approx(0.4)


def test_ri_select_gaussian_against_svd(rng):
    U = rng.standard_normal((8, 32))
    cert = ri_select(U, None, 0.3)
    bound = 0.3 * hs_norm(U) / math.sqrt(32)
    assert cert.claimed_bound == pytest.approx(bound, rel=1e-12)
    s = np.linalg.svd(U[:, cert.sigma], compute_uv=False)[-1]
    assert s >= (1 - 1e-6) * bound
    assert cert.achieved == pytest.approx(s, rel=1e-10)
    assert len(cert.sigma) == ri_target_size(U, 0.3)


def test_ri_select_rejects_kernel_violation():
    U = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    with pytest.raises(SelectionError, match=r"\[2\]"):
        ri_select(U, [1.0, 1.0, 0.0], 0.5)


def test_ri_select_ignores_zero_weight_zero_columns(rng):
    U = np.hstack([rng.standard_normal((4, 10)), np.zeros((4, 2))])
    alphas = np.r_[np.ones(10), 0.0, 0.0]
    cert = ri_select(U, alphas, 0.3)
    assert all(j < 10 for j in cert.sigma)
    assert cert.holds()


def test_ri_select_clamped_single_column(rng):
    U = rng.standard_normal((16, 64))
    cert = ri_select(U, None, 0.8)
    if (0.2**2) * hs_norm(U) ** 2 / operator_norm(U) ** 2 < 1:
        assert len(cert.sigma) == 1 and cert.warnings
    assert cert.holds()


def test_ri_select_is_deterministic(rng):
    U = rng.standard_normal((6, 20))
    a, b = ri_select(U, None, 0.3), ri_select(U.copy(), None, 0.3)
    assert a == b


def test_kt_select_identity():
    cert = kt_select(np.eye(4), 0.5)
    assert len(cert.sigma) == 2
    assert cert.achieved == pytest.approx(1.0)
    assert cert.claimed_bound == pytest.approx(2 * (math.sqrt(0.5) + 1), rel=1e-12)
    assert cert.claimed_bound == pytest.approx(3.41421, abs=1e-5)


def test_kt_claimed_bound_formula():
    # ||U|| = 1 and ||U||_HS / sqrt(m) = 1: the identity in R^4 with m = 4 columns
    cert = kt_select(np.eye(4), 0.25)
    assert cert.claimed_bound == pytest.approx((math.sqrt(0.5) + math.sqrt(2)) / math.sqrt(0.75), rel=1e-12)
    assert cert.claimed_bound == pytest.approx(2.44949, abs=1e-5)
    assert cert.params["particular_bound"] == pytest.approx(cert.claimed_bound, rel=1e-12)


def test_kt_select_gaussian_delta_invariance(rng):
    U = rng.standard_normal((6, 24))
    certs = [kt_select(U, 0.25, delta=d) for d in (0.5, 1.0, 2.0)]
    assert certs[0].sigma == certs[1].sigma == certs[2].sigma
    norm = np.linalg.norm(U[:, certs[1].sigma], 2)
    assert norm <= certs[1].claimed_bound


def test_kt_select_parameter_errors():
    with pytest.raises(SelectionError):
        kt_select(np.eye(3), 0.5, 0.4)
    with pytest.raises(SelectionError):
        kt_select(np.eye(3), 0.5, delta=0.0)
    with pytest.raises(SelectionError):
        kt_select(np.zeros((3, 3)), 0.5)


# -- properties ------------------------------------------------------------

matrix_seeds = st.integers(0, 2**32 - 1)


@given(matrix_seeds, st.integers(2, 8), st.integers(2, 24), st.sampled_from([0.2, 0.35, 0.5, 0.65, 0.8]),
       st.sampled_from(["identity", "norms", "random"]))
def test_ri_invariants(seed, n, m, eps, weights):
    r = np.random.default_rng(seed)
    U = r.standard_normal((n, m))
    D = {
        "identity": None,
        "norms": DiagonalWeights.column_norms(U),
        "random": DiagonalWeights(r.uniform(0.2, 2.0, m)),
    }[weights]
    cert = ri_select(U, D, eps)
    alphas = np.ones(m) if D is None else D.alphas
    hs2 = hs_norm(U) ** 2
    k = min(max(1, math.floor((1 - eps) ** 2 * hs2 / operator_norm(U) ** 2 * (1 + 1e-10))), n)
    assert len(cert.sigma) == k == len(set(cert.sigma))
    smin = smin_restricted(U, cert.sigma, alphas)
    assert smin > 0
    assert smin >= (1 - 1e-6) * eps * math.sqrt(hs2 / np.sum(alphas**2))
    tol = 1e-9 * max(1.0, hs2)
    for rec in cert.trace:
        assert rec["barrier_after"] >= (1 - 1e-9) * cert.params["barrier_floor"]
        if not any("clamped step raised" in w for w in cert.warnings):
            assert rec["potential_after"] <= rec["potential_before"] + tol
    if D is None:
        assert cert.claimed_bound == pytest.approx(eps * hs_norm(U) / math.sqrt(m), rel=1e-12)


@given(matrix_seeds, st.integers(2, 8), st.integers(4, 24), st.sampled_from([0.1, 0.25, 0.5, 0.75]), st.booleans())
def test_kt_invariants(seed, n, m, lam, eta_high):
    r = np.random.default_rng(seed)
    U = r.standard_normal((n, m))
    lam = max(lam, 1 / m)
    eta = 0.9 if eta_high else lam
    cert = kt_select(U, lam, eta)
    assert len(cert.sigma) == math.ceil(lam * m - 1e-9) == len(set(cert.sigma))
    assert np.linalg.norm(U[:, cert.sigma], 2) <= (1 + 1e-6) * cert.claimed_bound
    tol = 1e-9 * max(1.0, hs_norm(U) ** 2)
    for rec in cert.trace:
        assert rec["potential_after"] <= rec["potential_before"] + tol
        assert rec["edge_eigenvalue"] < rec["barrier_after"]
    again = kt_select(U, lam, eta, delta=2.0)
    assert again.sigma == cert.sigma
