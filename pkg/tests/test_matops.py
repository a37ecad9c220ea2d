import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from freehull.matops import (BlockMatrix, NotPSDError, batched_kron, block_diag, is_psd,
                             kron, principal_sqrt, sym_eig)
from oracles import psd_by_cholesky

MU = (3 - math.sqrt(5)) / 2


def test_sym_eig_identity():
    w, V = sym_eig(np.eye(3))
    assert np.allclose(w, 1.0)
    assert np.allclose(V @ V.T, np.eye(3))


def test_sym_eig_golden_ratio_matrix():
    w, _ = sym_eig([[2, 1], [1, 1]])
    assert w == pytest.approx([(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2], abs=1e-12)
    assert w[0] == pytest.approx(0.381966, abs=1e-6)


def test_sym_eig_indefinite():
    w, _ = sym_eig([[4, 3], [3, 2]])
    assert w == pytest.approx([3 - math.sqrt(10), 3 + math.sqrt(10)], abs=1e-12)


def test_sym_eig_rejects_nonsquare_and_asymmetric():
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))
    with pytest.raises(ValueError):
        sym_eig([[1, 2], [0, 1]])


@pytest.mark.parametrize("M, expect, lam", [
    (np.zeros((3, 3)), True, 0.0),
    ([[4, 3], [3, 2]], False, 3 - math.sqrt(10)),
    ([[1, 1], [1, 1]], True, 0.0),
])
def test_is_psd_examples(M, expect, lam):
    ok, got = is_psd(M, 1e-9)
    assert ok is expect
    assert got == pytest.approx(lam, abs=1e-12)


def test_principal_sqrt_examples():
    assert np.allclose(principal_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    assert np.allclose(principal_sqrt(np.eye(3)), np.eye(3))
    W = MU * np.array([[2.0, 1.0], [1.0, 1.0]])
    R = principal_sqrt(np.eye(2) - W @ W)
    assert np.linalg.eigvalsh(R) == pytest.approx([0.0, math.sqrt(1 - MU ** 4)], abs=1e-7)
    # the printed 0.989298 is truncated, not rounded, from 0.98929963...
    assert math.sqrt(1 - MU ** 4) == pytest.approx(0.989298, abs=2e-6)


def test_principal_sqrt_rejects_indefinite():
    with pytest.raises(NotPSDError):
        principal_sqrt([[4, 3], [3, 2]])


def test_kron_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    K = kron([[0, 1], [1, 0]], np.diag([1, 2]))
    assert np.array_equal(K[:2, 2:], np.diag([1, 2]))
    assert np.array_equal(K[2:, :2], np.diag([1, 2]))
    assert not K[:2, :2].any() and not K[2:, 2:].any()
    assert kron(np.ones((2, 3)), np.ones((4, 5))).shape == (8, 15)


def test_batched_kron_matches_kron(rng):
    C = rng.standard_normal((2, 3))
    W = rng.standard_normal((4, 2, 2))
    out = batched_kron(C, W)
    for i in range(4):
        assert np.allclose(out[i], np.kron(C, W[i]))


def test_block_matrix_flattening():
    bm = BlockMatrix(["a", "b"], ["a", "b"], {"a": 1, "b": 2})
    bm.blocks[("a", "b")] = np.array([[1.0, 2.0]])
    bm.blocks[("b", "a")] = np.array([[1.0], [2.0]])
    D = bm.dense()
    assert D.shape == (3, 3)
    assert np.array_equal(D[0, 1:], [1, 2]) and np.array_equal(D[1:, 0], [1, 2])
    assert np.array_equal(block_diag([[1]], [[2]]), np.diag([1.0, 2.0]))


sym_mats = st.integers(1, 12).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10)))


@given(sym_mats)
def test_sym_eig_reconstruction(A):
    M = A + A.T
    w, V = sym_eig(M)
    assert np.all(np.diff(w) >= -1e-12)
    assert np.abs(V @ np.diag(w) @ V.T - M).max() <= 1e-10 * (1 + np.linalg.norm(M, 2))


@given(sym_mats)
def test_principal_sqrt_squares_back(A):
    M = A @ A.T
    R = principal_sqrt(M)
    assert np.linalg.eigvalsh(R)[0] >= -1e-9
    assert np.abs(R @ R - M).max() <= 1e-8 * (1 + np.linalg.norm(M, 2))


def test_principal_sqrt_large_random(rng):
    for n in (16, 40, 64):
        A = rng.standard_normal((n, n))
        M = A @ A.T
        R = principal_sqrt(M)
        assert np.abs(R @ R - M).max() <= 1e-8 * (1 + np.linalg.norm(M, 2))


@given(st.integers(0, 2 ** 32 - 1))
def test_kron_mixed_product(seed):
    r = np.random.default_rng(seed)
    A, C = r.standard_normal((2, 3)), r.standard_normal((3, 2))
    B, D = r.standard_normal((2, 2)), r.standard_normal((2, 4))
    assert np.abs(kron(A, B) @ kron(C, D) - kron(A @ C, B @ D)).max() <= 1e-12 * 100


def test_is_psd_agrees_with_pivoted_cholesky(rng):
    agree = 0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        A = rng.standard_normal((n, n))
        # mix of PSD, indefinite and near-singular matrices
        kind = rng.integers(3)
        if kind == 0:
            M = A @ A.T
        elif kind == 1:
            M = A + A.T
        else:
            v = rng.standard_normal((n, 1))
            M = v @ v.T
        ok, lam = is_psd(M, 1e-9)
        if abs(lam) < 1e-7:       # rounding band where both tests are legitimately unsure
            agree += 1
            continue
        agree += ok == psd_by_cholesky(M, 1e-9)
    assert agree == 1000
