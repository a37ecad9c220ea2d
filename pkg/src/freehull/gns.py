"""Finite-dimensional representations recovered from flat truncated moment sequences."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .moments import MomentSequence, build_hankel
from .ncpoly import EMPTY, MatrixPoly, MatrixTuple, enumerate_words, eval_poly


class FlatnessError(ValueError):
    """rank H_d(Y) exceeds rank H_{d-1}(Y)."""

    def __init__(self, rank_low: int, rank_high: int, d: int):
        super().__init__(f"moment sequence is not flat at level {d}: "
                         f"rank H_{d - 1} = {rank_low} < rank H_{d} = {rank_high}")
        self.rank_low, self.rank_high, self.d = rank_low, rank_high, d


class HankelNotPSD(ValueError):
    pass


@dataclass
class GnsResult:
    Z: MatrixTuple
    Q: np.ndarray
    rank_profile: list[int]
    moment_residual: float = 0.0
    p_min_eig: float | None = None
    symmetry_defect: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def to_json(self) -> dict:
        return {"dim": self.dim, "Z": [M.tolist() for M in self.Z], "Q": self.Q.tolist(),
                "rank_profile": self.rank_profile,
                "residuals": {"moment_mismatch": self.moment_residual,
                              "p_min_eig": self.p_min_eig,
                              "symmetry_defect": self.symmetry_defect}}

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def _rank(H: np.ndarray, rank_tol: float) -> int:
    if H.size == 0:
        return 0
    lam = np.linalg.eigvalsh(H)
    top = max(lam[-1], 0.0)
    return int(np.sum(lam > rank_tol * top)) if top > 0 else 0


def rank_profile(Y: MomentSequence, d: int, rank_tol: float = 1e-8) -> list[int]:
    return [_rank(build_hankel(Y, k).dense(), rank_tol) for k in range(d + 1)]


def moment_mismatch(Z: MatrixTuple, Q: np.ndarray, Y: MomentSequence, max_deg: int) -> float:
    """``max ||Q^T Z^alpha Q - Y_alpha||`` over words of length ``<= max_deg``."""
    acts = {EMPTY: Q}
    worst = 0.0
    for w in enumerate_words(Y.g, max_deg):
        if w:
            acts[w] = Z[w[0] - 1] @ acts[w[1:]]
        worst = max(worst, float(np.abs(Q.T @ acts[w] - Y[w]).max()))
    return worst


def reconstruct(Y: MomentSequence, d: int, rank_tol: float = 1e-8,
                p: MatrixPoly | None = None) -> GnsResult:
    """Build ``(Z, Q)`` with ``Q^T Z^alpha Q = Y_alpha`` from a flat truncation.

    The Hankel Gram ``H_d = Phi Phi^T`` gives a feature vector per row ``(beta, k)``;
    ``Z_j`` sends the vector of ``(beta, k)`` to that of ``(x_j beta, k)``.
    """
    if d < 1:
        raise ValueError("reconstruction needs d >= 1")
    g, n = Y.g, Y.n
    H = build_hankel(Y, d).dense()
    lam, U = np.linalg.eigh(H)
    if lam[0] < -1e-9 * max(1.0, abs(lam[-1])):
        raise HankelNotPSD(f"H_{d}(Y) has eigenvalue {lam[0]:.3e}")
    profile = rank_profile(Y, d, rank_tol)
    if profile[-1] != profile[-2]:
        raise FlatnessError(profile[-2], profile[-1], d)
    keep = lam > rank_tol * max(lam[-1], 0.0)
    Phi = U[:, keep] * np.sqrt(lam[keep])               # rows: (word, k)
    words = enumerate_words(g, d)
    pos = {w: i for i, w in enumerate(words)}
    low = enumerate_words(g, d - 1)
    rows_low = np.concatenate([np.arange(pos[w] * n, pos[w] * n + n) for w in low])
    A = Phi[rows_low]                                   # features of words <= d-1
    A_pinv = np.linalg.pinv(A, rcond=rank_tol)
    Zs, defect = [], 0.0
    for j in range(1, g + 1):
        rows_shift = np.concatenate([np.arange(pos[(j,) + w] * n, pos[(j,) + w] * n + n)
                                     for w in low])
        Zj = (A_pinv @ Phi[rows_shift]).T
        defect = max(defect, float(np.abs(Zj - Zj.T).max()))
        Zs.append(0.5 * (Zj + Zj.T))
    Z = MatrixTuple(Zs, check=False)
    Q = Phi[:n].T                                        # rows of the empty word
    res = GnsResult(Z, Q, profile, symmetry_defect=defect)
    res.moment_residual = moment_mismatch(Z, Q, Y, 2 * (d - 1))
    if p is not None:
        res.p_min_eig = float(np.linalg.eigvalsh(eval_poly(p, Z))[0])
    return res
