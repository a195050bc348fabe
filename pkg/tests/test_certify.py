import dataclasses
import math

import numpy as np
import pytest

from resinv.barrier import kt_select, ri_select
from resinv.certify import (
    CertificateError,
    kt_bound_formula,
    oracle_best_subset_norm,
    oracle_best_subset_smin,
    verify_kt,
    verify_ri,
)

S2 = 1 / math.sqrt(2)


def test_verify_ri_identity_passes():
    cert = ri_select(np.eye(4), None, 0.5)
    rep = verify_ri(np.eye(4), None, cert)
    assert rep.passed, rep.table()


def test_verify_ri_dropped_index_fails_size(rng):
    U = rng.standard_normal((6, 20))
    cert = ri_select(U, None, 0.3)
    bad = dataclasses.replace(cert, sigma=cert.sigma[:-1])
    rep = verify_ri(U, None, bad)
    assert not rep.passed
    assert "size" in rep.failed()


def test_verify_ri_gaussian_runs(rng):
    for _ in range(100):
        U = rng.standard_normal((6, 18))
        cert = ri_select(U, None, 0.4)
        assert verify_ri(U, None, cert).passed


def test_verify_ri_rejects_wrong_kind():
    cert = kt_select(np.eye(4), 0.5)
    with pytest.raises(CertificateError):
        verify_ri(np.eye(4), None, cert)


def test_verify_ri_detects_index_outside_support():
    U = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    alphas = np.array([1.0, 1.0, 0.0])
    cert = ri_select(U, alphas, 0.2)
    bad = dataclasses.replace(cert, sigma=[2])
    rep = verify_ri(U, alphas, bad)
    assert "indices" in rep.failed()


def test_verify_kt_identity_and_formula(rng):
    assert verify_kt(np.eye(4), kt_select(np.eye(4), 0.5)).passed
    U = rng.standard_normal((5, 12))
    cert = kt_select(U, 0.25)
    rep = verify_kt(U, cert)
    assert rep.passed
    s = np.linalg.svd(U, compute_uv=False)
    direct = kt_bound_formula(s[0], math.sqrt(np.sum(s**2)), 12, 0.25, 0.25)
    assert abs(direct - cert.claimed_bound) <= 1e-12 * direct


def test_verify_kt_tampered_bound_fails():
    cert = kt_select(np.eye(4), 0.5)
    bad = dataclasses.replace(cert, claimed_bound=cert.claimed_bound * 0.5)
    assert "claimed_bound" in verify_kt(np.eye(4), bad).failed()


def test_verify_accepts_plain_dicts():
    cert = dataclasses.asdict(ri_select(np.eye(3), None, 0.2))
    assert verify_ri(np.eye(3), None, cert).passed
    del cert["params"]
    with pytest.raises(CertificateError, match="params"):
        verify_ri(np.eye(3), None, cert)


def test_report_table_lists_every_clause():
    rep = verify_kt(np.eye(4), kt_select(np.eye(4), 0.5))
    text = rep.table()
    for name in rep.clauses:
        assert name in text


def test_oracle_smin_examples():
    assert oracle_best_subset_smin(np.eye(4), None, 2)[1] == pytest.approx(1.0)
    U = np.array([[1.0, 0.0, S2], [0.0, 1.0, S2]])
    best, val = oracle_best_subset_smin(U, None, 2)
    assert best == [0, 1]
    assert val == pytest.approx(1.0)


def test_oracle_norm_examples():
    assert oracle_best_subset_norm(np.eye(6), 3)[1] == pytest.approx(1.0)
    U = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    best, val = oracle_best_subset_norm(U, 2)
    assert best in ([0, 2], [1, 2])
    assert val == pytest.approx(1.0)


def test_oracle_refuses_large_instances(rng):
    with pytest.raises(CertificateError):
        oracle_best_subset_norm(rng.standard_normal((3, 13)), 2)
    with pytest.raises(CertificateError):
        oracle_best_subset_smin(np.eye(3), None, 4)


def test_oracle_sandwich(rng):
    for _ in range(10):
        U = rng.standard_normal((4, 10))
        ri = ri_select(U, None, 0.3)
        _, best = oracle_best_subset_smin(U, None, len(ri.sigma))
        assert ri.claimed_bound * (1 - 1e-6) <= ri.achieved <= best + 1e-12
        kt = kt_select(U, 0.3)
        _, best = oracle_best_subset_norm(U, len(kt.sigma))
        assert best - 1e-12 <= kt.achieved <= kt.claimed_bound * (1 + 1e-6)
