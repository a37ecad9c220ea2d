"""Reference implementations that share no code path with the package.

Slow and literal on purpose: words by recursion, Hankel matrices by explicit index
loops over (word, word) pairs, polynomial evaluation by expanding products, PSD by
pivoted Cholesky from LAPACK.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import lapack


def words_upto(g: int, d: int) -> list[tuple[int, ...]]:
    out = [()]
    layer = [()]
    for _ in range(d):
        layer = [w + (a,) for w in layer for a in range(1, g + 1)]
        out += layer
    return out


def class_count(g: int, lo: int, hi: int) -> int:
    """Number of classes {w, reversed w} with lo <= |w| <= hi (counted by brute force)."""
    seen = set()
    for k in range(lo, hi + 1):
        for w in itertools.product(range(1, g + 1), repeat=k):
            seen.add(min(w, w[::-1]))
    return len(seen)


def psd_by_cholesky(M: np.ndarray, tol: float) -> bool:
    """``M + tol I`` admits a full-rank pivoted Cholesky factor iff lambda_min(M) >= -tol (up to rounding)."""
    A = np.asarray(M, dtype=float) + tol * np.eye(len(M))
    _, _, rank, info = lapack.dpstrf(A, lower=1, tol=-1.0)
    return info == 0 and rank == len(M)


def word_matrix(w, X) -> np.ndarray:
    n = X[0].shape[0]
    out = np.eye(n)
    for a in w:
        out = out @ X[a - 1]
    return out


def naive_moments(Z, V, d):
    """dict word -> V^T Z^w V for every word (not only class representatives)."""
    return {w: V.T @ word_matrix(w, Z) @ V for w in words_upto(len(Z), d)}


def naive_hankel(mom: dict, g: int, d: int, n: int) -> np.ndarray:
    ws = words_upto(g, d)
    H = np.zeros((len(ws) * n, len(ws) * n))
    for i, a in enumerate(ws):
        for j, b in enumerate(ws):
            H[i * n:(i + 1) * n, j * n:(j + 1) * n] = mom[a[::-1] + b]
    return H


def naive_localizing(terms: dict, mom: dict, g: int, d: int, n: int, ell: int) -> np.ndarray:
    """terms: word -> ell x ell coefficient; block (a, b) = sum_c p_c (x) Y_{a* c b}."""
    ws = words_upto(g, d)
    k = ell * n
    H = np.zeros((len(ws) * k, len(ws) * k))
    for i, a in enumerate(ws):
        for j, b in enumerate(ws):
            blk = np.zeros((k, k))
            for c, B in terms.items():
                blk += np.kron(B, mom[a[::-1] + c + b])
            H[i * k:(i + 1) * k, j * k:(j + 1) * k] = blk
    return H


def naive_eval(terms: dict, X) -> np.ndarray:
    n = X[0].shape[0]
    ell = next(iter(terms.values())).shape[0]
    out = np.zeros((ell * n, ell * n))
    for w, B in terms.items():
        out += np.kron(B, word_matrix(w, X))
    return out


def grid_margin(F0, Fs, R, steps=401):
    """Brute-force max over a grid of min eigenvalue of F0 + sum u_i F_i, m <= 2."""
    m = len(Fs)
    axis = np.linspace(-R, R, steps)
    best = -np.inf
    for u in itertools.product(axis, repeat=m):
        M = F0 + sum(ui * F for ui, F in zip(u, Fs))
        best = max(best, np.linalg.eigvalsh(M)[0])
    return best


def shuffle_permutation(n1: int, n2: int, ell: int) -> np.ndarray:
    """Permutation P with P^T (B (x) (A1 (+) A2)) P = (B (x) A1) (+) (B (x) A2)."""
    n = n1 + n2
    idx = [c * n + i for c in range(ell) for i in range(n1)]
    idx += [c * n + n1 + i for c in range(ell) for i in range(n2)]
    P = np.zeros((ell * n, ell * n))
    P[idx, np.arange(ell * n)] = 1.0
    return P


def grid_margin_refined(F0, Fs, R, steps=81, rounds=4):
    """Repeated grid search, each round zooming to +-2 cells around the best point.

    Sound for the concave min-eigenvalue map: its superlevel sets are convex.
    """
    m = len(Fs)
    lo, hi = np.full(m, -R), np.full(m, R)
    best, best_u = -np.inf, None
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], steps) for i in range(m)]
        for u in itertools.product(*axes):
            M = F0 + sum(ui * F for ui, F in zip(u, Fs))
            val = np.linalg.eigvalsh(M)[0]
            if val > best:
                best, best_u = val, np.array(u)
        cell = (hi - lo) / (steps - 1)
        lo = np.maximum(best_u - 2 * cell, -R)
        hi = np.minimum(best_u + 2 * cell, R)
    return best
