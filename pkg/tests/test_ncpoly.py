import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freehull.ncpoly import (MatrixPoly, MatrixTuple, PolySyntaxError, class_rep,
                             enumerate_words, eval_poly, eval_word, format_poly, involution,
                             parse_poly, word_count)
from oracles import naive_eval, shuffle_permutation, words_upto

MU = (3 - math.sqrt(5)) / 2


def test_enumerate_words_orders():
    assert enumerate_words(2, 1) == [(), (1,), (2,)]
    assert enumerate_words(2, 2) == [(), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]
    tail = enumerate_words(2, 3)[7:]
    assert tail == [(1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2),
                    (2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2)]


def test_printed_row_labels_are_reversed_row_words():
    # printed Hankel rows read 1, X1, X2, Y11, Y21, Y12, Y22: the label is alpha*
    labels = [involution(w) for w in enumerate_words(2, 2)]
    assert labels[4] == (2, 1) and labels[5] == (1, 2)


def test_enumerate_words_matches_oracle_and_rejects_bad_args():
    for g in (1, 2, 3):
        for d in range(4):
            ws = enumerate_words(g, d)
            assert sorted(ws) == sorted(words_upto(g, d))
            assert len(ws) == word_count(g, d)
    with pytest.raises(ValueError):
        enumerate_words(0, 2)


@given(st.integers(2, 4), st.integers(0, 5))
def test_word_count_closed_form(g, d):
    assert word_count(g, d) == (g ** (d + 1) - 1) // (g - 1)


def test_involution_examples():
    assert involution((1, 2, 1)) == (1, 2, 1)
    assert involution((1, 1, 2)) == (2, 1, 1)
    assert involution(()) == ()
    assert class_rep((2, 1, 1)) == (1, 1, 2)


@given(st.lists(st.integers(1, 3), max_size=8))
def test_involution_is_an_involution(w):
    w = tuple(w)
    assert involution(involution(w)) == w
    assert len(involution(w)) == len(w)


def test_eval_word_examples():
    X = MatrixTuple([np.diag([1.0, 2.0]), [[0.0, 1.0], [1.0, 0.0]]])
    assert np.array_equal(eval_word((), MatrixTuple([np.eye(3)])), np.eye(3))
    assert np.array_equal(eval_word((1, 2, 1), X), [[0, 2], [2, 0]])
    w = (1, 2, 2, 1, 2)
    assert np.allclose(eval_word(involution(w), X), eval_word(w, X).T)


def test_matrix_tuple_validation():
    with pytest.raises(ValueError):
        MatrixTuple([[[1.0, 2.0], [0.0, 1.0]]])
    with pytest.raises(ValueError):
        MatrixTuple([np.eye(2), np.eye(3)])
    X = MatrixTuple([np.eye(2), np.zeros((2, 2))])
    assert MatrixTuple.from_json(X.to_json()).to_json() == X.to_json()
    with pytest.raises(ValueError):
        MatrixTuple.from_json({"g": 3, "matrices": X.to_json()["matrices"]})


def test_eval_poly_scalar_tv():
    p = parse_poly("1 - x1^2 - x2^4", 2)
    assert eval_poly(p, MatrixTuple.scalar([0.6, 0.5]))[0, 0] == pytest.approx(0.5775, abs=1e-15)


def test_eval_poly_at_malicious_point():
    Y = math.sqrt(MU) * np.diag([1.0, 0.0])
    W = MU * np.array([[2.0, 1.0], [1.0, 1.0]])
    w, V = np.linalg.eigh(np.eye(2) - W @ W)
    X = V @ np.diag(np.sqrt(np.clip(w, 0, None))) @ V.T
    val = parse_poly("1 - x1^2 - x2^4", 2)(MatrixTuple([X, Y]))
    assert np.allclose(val, MU ** 2 * np.array([[4.0, 3.0], [3.0, 2.0]]), atol=1e-12)
    assert np.linalg.eigvalsh(val)[0] == pytest.approx(MU ** 2 * (3 - math.sqrt(10)), abs=1e-12)
    assert np.linalg.eigvalsh(val)[0] == pytest.approx(-0.023676, abs=1e-6)


def test_eval_poly_projection_example():
    q = parse_poly("x2*x1^2*x2 + x3*x1^2*x3 - 1", 3)
    I3, O3 = np.eye(3), np.zeros((3, 3))
    X = np.block([[I3, O3], [O3, O3]])
    Y = math.sqrt(2) * np.block([[O3, I3], [I3, O3]])
    Z = math.sqrt(2) * np.block([[I3, O3], [O3, O3]])
    assert np.allclose(q(MatrixTuple([X, Y, Z])), np.eye(6), atol=1e-12)


def test_eval_poly_variable_count_mismatch():
    with pytest.raises(ValueError):
        eval_poly(parse_poly("x1", 2), MatrixTuple([np.eye(2)]))


def test_arithmetic_examples():
    x1, x2 = MatrixPoly.variable(1, 2), MatrixPoly.variable(2, 2)
    lhs = (x1 + x2) * (x1 - x2)
    rhs = MatrixPoly(2, 1, {(1, 1): 1, (1, 2): -1, (2, 1): 1, (2, 2): -1})
    assert lhs == rhs
    y = x2
    ident = (y * y - 0.5) ** 2 + (1 - x1 * x1 - y ** 4) + (x1 * x1 + y * y) - 1.25
    assert ident.is_zero()
    assert (x1 * x2).star() * (x1 * x2) == MatrixPoly.monomial((2, 1, 1, 2), 2)


def test_block_dim_mismatch():
    a = parse_poly("diag(x1 ; x2)", 2)
    b = parse_poly("diag(x1 ; x2 ; 1)", 2)
    with pytest.raises(ValueError):
        a + b


def test_parse_examples():
    p = parse_poly("1 - x1^2 - x2^4", 2)
    assert p == MatrixPoly(2, 1, {(): 1, (1, 1): -1, (2, 2, 2, 2): -1})
    box = parse_poly("diag(1 - 2*x2^2 + x1^2 ; 1 - 2*x1^2 + x2^2)", 2)
    assert box.block_dim == 2
    assert np.array_equal(box.coefficient((2, 2)), np.diag([-2.0, 1.0]))
    assert np.array_equal(box.coefficient((1, 1)), np.diag([1.0, -2.0]))
    q = parse_poly("1 - x1*x2^2*x1", 2)
    assert q.support() == [(), (1, 2, 2, 1)]
    assert q.is_symmetric()


def test_parse_round_trip_is_canonical():
    for text in ["1 - x1^2 - x2^4", "diag(1 - 2*x2^2 + x1^2 ; 1 - 2*x1^2 + x2^2)",
                 "1 - x1*x2^2*x1", "-x2*x1 + 0.5*x1*x2"]:
        g = 2
        once = format_poly(parse_poly(text, g))
        assert format_poly(parse_poly(once, g)) == once
        assert parse_poly(once, g) == parse_poly(text, g)


def test_parse_errors():
    with pytest.raises(PolySyntaxError) as e:
        parse_poly("1 - x1^^2", 2)
    assert e.value.pos == 7   # 0-based index of the second caret
    with pytest.raises(PolySyntaxError):
        parse_poly("x3", 2)
    with pytest.raises(PolySyntaxError):
        parse_poly("(x1 + x2", 2)
    with pytest.raises(PolySyntaxError):
        parse_poly("x1^1.5", 2)


# ---------------------------------------------------------------------------
# properties

def _rand_poly(r, g, deg, ell=1, sym=False):
    terms = {}
    for w in words_upto(g, deg):
        if r.random() < 0.5:
            terms[w] = r.standard_normal((ell, ell))
    P = MatrixPoly(g, ell, terms)
    return P + P.star() if sym else P


def _rand_tuple(r, g, n):
    mats = []
    for _ in range(g):
        A = r.standard_normal((n, n))
        mats.append(A + A.T)
    return MatrixTuple(mats)


seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds)
def test_eval_is_multiplicative(seed):
    r = np.random.default_rng(seed)
    P, Q = _rand_poly(r, 2, 3), _rand_poly(r, 2, 2)
    X = _rand_tuple(r, 2, 3)
    lhs, rhs = eval_poly(P * Q, X), eval_poly(P, X) @ eval_poly(Q, X)
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1 + np.abs(rhs).max())


@given(seeds)
def test_eval_respects_involution(seed):
    r = np.random.default_rng(seed)
    P = _rand_poly(r, 3, 3, ell=2)
    X = _rand_tuple(r, 3, 2)
    assert np.allclose(eval_poly(P.star(), X), eval_poly(P, X).T, atol=1e-10)
    S = P + P.star()
    assert S.is_symmetric(1e-12)
    out = eval_poly(S, X)
    assert np.abs(out - out.T).max() <= 1e-10 * (1 + np.abs(out).max())


@given(seeds)
def test_eval_matches_naive_expansion(seed):
    r = np.random.default_rng(seed)
    P = _rand_poly(r, 2, 3, ell=2)
    X = _rand_tuple(r, 2, 3)
    if not P.terms:
        return
    assert np.allclose(eval_poly(P, X), naive_eval(P.terms, list(X)), atol=1e-10)


@given(seeds)
def test_direct_sum_shuffle(seed):
    r = np.random.default_rng(seed)
    ell, n1, n2 = 2, 2, 3
    P = _rand_poly(r, 2, 3, ell=ell, sym=True)
    A, B = _rand_tuple(r, 2, n1), _rand_tuple(r, 2, n2)
    AB = MatrixTuple([np.block([[a, np.zeros((n1, n2))], [np.zeros((n2, n1)), b]])
                      for a, b in zip(A, B)])
    Pm = shuffle_permutation(n1, n2, ell)
    lhs = Pm.T @ eval_poly(P, AB) @ Pm
    rhs = np.block([[eval_poly(P, A), np.zeros((ell * n1, ell * n2))],
                    [np.zeros((ell * n2, ell * n1)), eval_poly(P, B)]])
    assert np.allclose(lhs, rhs, atol=1e-9)
