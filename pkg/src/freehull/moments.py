"""Moment sequences, free Hankel and localizing matrices, Riesz maps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .matops import BlockMatrix, batched_kron
from .ncpoly import (EMPTY, MatrixPoly, MatrixTuple, Word, class_rep, enumerate_words,
                     involution, is_palindrome, parse_word, word_str)


def moment_degree_cap(p: MatrixPoly, d: int) -> int:
    """Largest word length read by the level-``d`` constraints for ``p``."""
    half = -(-p.degree // 2)
    return max(2 * (d + half), 2 * d + p.degree)


class MomentSequence:
    """Truncated moment sequence ``alpha -> Y_alpha`` (n x n), ``Y_() = I``.

    One matrix is stored per class ``{alpha, alpha*}``; the other member is read
    back as the transpose, so ``Y_{alpha*} = Y_alpha^T`` holds by construction.
    """

    def __init__(self, g: int, n: int, max_deg: int, values: Mapping, *, check: bool = True,
                 tol: float = 1e-9):
        self.g, self.n, self.max_deg = g, n, max_deg
        self._store: dict[Word, np.ndarray] = {}
        for w, M in values.items():
            w = tuple(w)
            if len(w) > max_deg:
                continue
            M = np.array(M, dtype=float, ndmin=2)
            if M.shape != (n, n):
                raise ValueError(f"moment {word_str(w) or '()'} has shape {M.shape}")
            r = class_rep(w)
            M = M if r == w else M.T
            if r in self._store and check:
                if np.abs(self._store[r] - M).max() > tol * (1 + np.abs(M).max()):
                    raise ValueError(f"moments of {w} and its reversal are not transposes")
            self._store[r] = M
        for r, M in list(self._store.items()):
            if is_palindrome(r):
                if check and np.abs(M - M.T).max() > tol * (1 + np.abs(M).max()):
                    raise ValueError(f"palindromic moment {word_str(r)} is not symmetric")
                self._store[r] = 0.5 * (M + M.T)
        if check:
            if EMPTY not in self._store or np.abs(self._store[EMPTY] - np.eye(n)).max() > tol:
                raise ValueError("moment of the empty word must be the identity")
            missing = [w for w in enumerate_words(g, max_deg) if class_rep(w) not in self._store]
            if missing:
                raise ValueError(f"missing moments, e.g. {word_str(missing[0])}")

    def __getitem__(self, w) -> np.ndarray:
        w = tuple(w)
        if len(w) > self.max_deg:
            raise KeyError(f"word of length {len(w)} exceeds max_deg {self.max_deg}")
        r = class_rep(w)
        M = self._store[r]
        return M if r == w else M.T

    def __contains__(self, w) -> bool:
        return len(w) <= self.max_deg and class_rep(tuple(w)) in self._store

    def representatives(self) -> list[Word]:
        return sorted(self._store, key=lambda w: (len(w), w))

    def truncate(self, max_deg: int) -> "MomentSequence":
        if max_deg > self.max_deg:
            raise ValueError("cannot truncate upwards")
        vals = {r: M for r, M in self._store.items() if len(r) <= max_deg}
        return MomentSequence(self.g, self.n, max_deg, vals, check=False)

    def hat(self) -> MatrixTuple:
        """The degree-one part ``(Y_{x_1}, ..., Y_{x_g})``."""
        return MatrixTuple([self[(j,)] for j in range(1, self.g + 1)], check=False)

    def compress(self, V: np.ndarray) -> "MomentSequence":
        """``V^T Y_alpha V`` for every stored class (``V`` an isometry)."""
        V = np.asarray(V, dtype=float)
        vals = {r: V.T @ M @ V for r, M in self._store.items()}
        return MomentSequence(self.g, V.shape[1], self.max_deg, vals, check=False)

    @classmethod
    def direct_sum(cls, *seqs: "MomentSequence") -> "MomentSequence":
        from .matops import block_diag
        D = min(s.max_deg for s in seqs)
        reps = {r for r in seqs[0]._store if len(r) <= D}
        vals = {r: block_diag(*(s[r] for s in seqs)) for r in reps}
        return cls(seqs[0].g, sum(s.n for s in seqs), D, vals, check=False)

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {"g": self.g, "n": self.n, "max_deg": self.max_deg,
                "values": {word_str(r): M.tolist() for r, M in
                           sorted(self._store.items(), key=lambda t: (len(t[0]), t[0]))}}

    @classmethod
    def from_json(cls, data: Mapping) -> "MomentSequence":
        for key in ("g", "n", "max_deg", "values"):
            if key not in data:
                raise ValueError(f"moment file lacks {key!r}")
        vals = {parse_word(k): v for k, v in data["values"].items()}
        return cls(int(data["g"]), int(data["n"]), int(data["max_deg"]), vals)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "MomentSequence":
        return cls.from_json(json.loads(Path(path).read_text()))

    def __repr__(self) -> str:
        return f"MomentSequence(g={self.g}, n={self.n}, max_deg={self.max_deg})"


def check_isometry(V, tol: float = 1e-10) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m, n = V.shape
    if m < n:
        raise ValueError("an isometry needs at least as many rows as columns")
    err = np.abs(V.T @ V - np.eye(n)).max()
    if err > tol:
        raise ValueError(f"V is not an isometry (|V^T V - I| = {err:.2e})")
    return V


def moments_from_representation(Z: MatrixTuple, V, max_deg: int) -> MomentSequence:
    """``Y_alpha = V^T Z^alpha V`` for all words up to ``max_deg``."""
    V = check_isometry(V)
    if V.shape[0] != Z.n:
        raise ValueError(f"V has {V.shape[0]} rows but Z acts on R^{Z.n}")
    # Z^alpha V built by prepending letters: Z^{x_j alpha} V = Z_j (Z^alpha V)
    acts: dict[Word, np.ndarray] = {EMPTY: V}
    vals: dict[Word, np.ndarray] = {}
    for w in enumerate_words(Z.g, max_deg):
        if w:
            acts[w] = Z[w[0] - 1] @ acts[w[1:]]
        if class_rep(w) == w:
            vals[w] = V.T @ acts[w]
    return MomentSequence(Z.g, V.shape[1], max_deg, vals, check=False)


# ---------------------------------------------------------------------------
# Hankel / localizing layouts.  Builders take a lookup ``word -> array (..., n, n)``
# so the same code produces numeric matrices and affine coefficient tensors.

def hankel_layout(g: int, d: int) -> list[tuple[int, int, Word]]:
    words = enumerate_words(g, d)
    return [(i, j, involution(a) + b) for i, a in enumerate(words) for j, b in enumerate(words)]


def localizing_layout(p: MatrixPoly, d: int) -> list[tuple[int, int, list[tuple[np.ndarray, Word]]]]:
    words = enumerate_words(p.g, d)
    support = p.support()
    return [(i, j, [(p.terms[c], involution(a) + c + b) for c in support])
            for i, a in enumerate(words) for j, b in enumerate(words)]


def _assemble(layout, nwords: int, ell: int, lookup: Callable[[Word], np.ndarray],
              localizing: bool) -> np.ndarray:
    probe = lookup(EMPTY)
    batch, n = probe.shape[:-2], probe.shape[-1]
    k = ell * n
    out = np.zeros(batch + (nwords * k, nwords * k))
    for i, j, entry in layout:
        if localizing:
            blk = sum(batched_kron(c, lookup(w)) for c, w in entry)
        else:
            blk = lookup(entry)
        out[..., i * k:(i + 1) * k, j * k:(j + 1) * k] = blk
    return out


def hankel_dense(lookup, g: int, d: int) -> np.ndarray:
    return _assemble(hankel_layout(g, d), len(enumerate_words(g, d)), 1, lookup, False)


def localizing_dense(lookup, p: MatrixPoly, d: int) -> np.ndarray:
    return _assemble(localizing_layout(p, d), len(enumerate_words(p.g, d)), p.block_dim,
                     lookup, True)


def _as_block(flat: np.ndarray, labels: list, k: int) -> BlockMatrix:
    bm = BlockMatrix(labels, labels, {w: k for w in labels})
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            bm.blocks[(a, b)] = flat[i * k:(i + 1) * k, j * k:(j + 1) * k]
    return bm


def build_hankel(W: MomentSequence, d: int) -> BlockMatrix:
    """``H_d(W) = (W_{alpha* beta})`` over words of length <= d."""
    if 2 * d > W.max_deg:
        raise ValueError(f"H_{d} needs moments to degree {2 * d}, have {W.max_deg}")
    return _as_block(hankel_dense(W.__getitem__, W.g, d), enumerate_words(W.g, d), W.n)


def build_localizing(p: MatrixPoly, W: MomentSequence, d: int) -> BlockMatrix:
    """Block ``(alpha, beta)`` is ``sum_gamma p_gamma (x) W_{alpha* gamma beta}``.

    Inside a block the coefficient index is the outer one and the moment index the inner one.
    """
    if p.g != W.g:
        raise ValueError("polynomial and moment sequence disagree on g")
    if 2 * d + p.degree > W.max_deg:
        raise ValueError(f"localizing matrix at d={d} needs degree {2 * d + p.degree}, "
                         f"have {W.max_deg}")
    flat = localizing_dense(W.__getitem__, p, d)
    return _as_block(flat, enumerate_words(W.g, d), p.block_dim * W.n)


def riesz_apply(W: MomentSequence, P: MatrixPoly) -> np.ndarray:
    """``sum_alpha B_alpha (x) W_alpha``."""
    if P.degree > W.max_deg:
        raise ValueError(f"polynomial degree {P.degree} exceeds moment degree {W.max_deg}")
    s, n = P.block_dim, W.n
    out = np.zeros((s * n, s * n))
    for w, B in P.terms.items():
        out += np.kron(B, W[w])
    return out


@dataclass
class GrowthViolation:
    word: Word
    norm: float
    bound: float


def growth_bound_check(W: MomentSequence, C: float, max_len: int) -> list[GrowthViolation]:
    """Words with ``||W_alpha||_2 > C^|alpha| (1 + 1e-6)``."""
    out = []
    for r in W.representatives():
        if len(r) > max_len:
            continue
        nrm = float(np.linalg.norm(W[r], 2))
        bound = C ** len(r)
        if nrm > bound * (1 + 1e-6):
            out.append(GrowthViolation(r, nrm, bound))
    return out
