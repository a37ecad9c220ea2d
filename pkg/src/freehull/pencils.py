"""Linear pencils, spectrahedra and spectrahedrops, and matrix-convexity helpers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import sdpcore
from .matops import DEFAULT_PSD_TOL, block_diag, inv_sqrt, is_psd, sym_eig
from .ncpoly import MatrixTuple

SYM, SKEW = "sym", "skew"


@dataclass
class AffinePencil:
    """``L(x, y) = A0 + sum_j A_j x_j + sum_l B_l y_l``.

    ``x`` slots take symmetric matrices.  Each lifted slot carries a kind: ``"sym"``
    slots take symmetric matrices, ``"skew"`` slots take skew-symmetric ones (their
    coefficient is then skew as well, so the evaluation stays symmetric).
    """

    A0: np.ndarray
    A: list[np.ndarray]
    lifted: list[np.ndarray] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.A0 = np.atleast_2d(np.asarray(self.A0, dtype=float))
        self.A = [np.atleast_2d(np.asarray(a, dtype=float)) for a in self.A]
        self.lifted = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.lifted]
        if not self.kinds:
            self.kinds = [SYM] * len(self.lifted)
        if len(self.kinds) != len(self.lifted):
            raise ValueError("one kind flag per lifted slot")
        k = self.size
        for M in [self.A0, *self.A, *self.lifted]:
            if M.shape != (k, k):
                raise ValueError("all pencil coefficients must be k x k")
        for M in [self.A0, *self.A]:
            if np.abs(M - M.T).max(initial=0) > 1e-12 * (1 + np.abs(M).max(initial=0)):
                raise ValueError("x coefficients must be symmetric")
        for M, kind in zip(self.lifted, self.kinds):
            want = M.T if kind == SYM else -M.T
            if kind not in (SYM, SKEW):
                raise ValueError(f"unknown slot kind {kind!r}")
            if np.abs(M - want).max(initial=0) > 1e-12 * (1 + np.abs(M).max(initial=0)):
                raise ValueError(f"a {kind} slot needs a {kind}-symmetric coefficient")

    @property
    def size(self) -> int:
        return self.A0.shape[0]

    @property
    def g(self) -> int:
        return len(self.A)

    @property
    def h(self) -> int:
        return len(self.lifted)

    def is_monic(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.A0 - np.eye(self.size)).max() <= tol)

    def to_json(self) -> dict:
        return {"size": self.size, "g": self.g,
                "h_sym": sum(k == SYM for k in self.kinds),
                "h_skew": sum(k == SKEW for k in self.kinds),
                "A0": self.A0.tolist(), "A": [a.tolist() for a in self.A],
                "lifted": [b.tolist() for b in self.lifted], "kinds": list(self.kinds)}

    @classmethod
    def from_json(cls, data) -> "AffinePencil":
        return cls(data["A0"], data["A"], data.get("lifted", []), data.get("kinds", []))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def pencil_eval(L: AffinePencil, X: MatrixTuple | Sequence, lifted: Sequence = ()) -> np.ndarray:
    """``A0 (x) I + sum A_j (x) X_j + sum B_l (x) Y_l``."""
    mats = list(X)
    if len(mats) != L.g:
        raise ValueError(f"pencil has {L.g} x slots, got {len(mats)} matrices")
    if len(lifted) != L.h:
        raise ValueError(f"pencil has {L.h} lifted slots, got {len(lifted)}")
    n = np.atleast_2d(mats[0]).shape[0] if mats else np.atleast_2d(lifted[0]).shape[0]
    out = np.kron(L.A0, np.eye(n))
    for A, M in zip(L.A, mats):
        out += np.kron(A, np.atleast_2d(M))
    for B, kind, M in zip(L.lifted, L.kinds, lifted):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        want = M.T if kind == SYM else -M.T
        if np.abs(M - want).max(initial=0) > 1e-10 * (1 + np.abs(M).max(initial=0)):
            raise ValueError(f"value for a {kind} slot is not {kind}-symmetric")
        out += np.kron(B, M)
    return 0.5 * (out + out.T)


def in_spectrahedron(L: AffinePencil, X, lifted: Sequence = (),
                     tol: float = DEFAULT_PSD_TOL) -> tuple[bool, float]:
    return is_psd(pencil_eval(L, X, lifted), tol)


def _slot_basis(kind: str, n: int) -> list[np.ndarray]:
    out = []
    for a in range(n):
        for b in range(a, n):
            if kind == SKEW and a == b:
                continue
            E = np.zeros((n, n))
            E[a, b] = 1.0
            E[b, a] = 1.0 if kind == SYM else -1.0
            out.append(E)
    return out


@dataclass
class SpectrahedropResult:
    verdict: sdpcore.Verdict
    lifted: list[np.ndarray] | None = None


def spectrahedrop_problem(L: AffinePencil, X: MatrixTuple,
                          box_radius: float = 10.0) -> tuple[sdpcore.AffineMatrixProblem, list]:
    n = X.n
    F0 = pencil_eval(L, X, [np.zeros((n, n))] * L.h)
    Fs, index = [], []
    for s, (B, kind) in enumerate(zip(L.lifted, L.kinds)):
        for E in _slot_basis(kind, n):
            Fs.append(np.kron(B, E))
            index.append((s, E))
    Fs = np.array(Fs).reshape((len(Fs),) + F0.shape)
    labels = [f"{L.names[s] if s < len(L.names) else s}:{i}" for i, (s, _) in enumerate(index)]
    prob = sdpcore.AffineMatrixProblem([sdpcore.MatrixBlock(F0, Fs, "pencil")], len(index),
                                       box_radius, labels)
    return prob, index


def in_spectrahedrop(L: AffinePencil, X: MatrixTuple, box_radius: float = 10.0,
                     config: sdpcore.SolverConfig | None = None) -> SpectrahedropResult:
    """Is there a lifted assignment with ``L(X, Y) >= 0``?  Decided by the SDP engine."""
    prob, index = spectrahedrop_problem(L, X, box_radius)
    verdict = sdpcore.solve(prob, config)
    lifted = None
    if verdict.point is not None:
        lifted = [np.zeros((X.n, X.n)) for _ in range(L.h)]
        for ui, (s, E) in zip(verdict.point, index):
            lifted[s] = lifted[s] + ui * E
    return SpectrahedropResult(verdict, lifted)


def scalar_witness(L: AffinePencil, ell: tuple[float, Sequence[float]], X: MatrixTuple,
                   tol: float = 1e-8) -> np.ndarray:
    """Project ``X`` to a scalar point of ``D_L(1)`` where ``ell`` is negative.

    ``ell = (l0, (l1..lg))`` is the affine function ``l0 + sum l_j x_j``.  Uses a unit
    eigenvector ``v`` of ``ell(X)`` for its most negative eigenvalue; then
    ``L(v*Xv) = (I (x) v)^T L(X) (I (x) v)`` stays PSD while ``ell(v*Xv) < 0``.
    """
    l0, coeffs = ell
    lX = l0 * np.eye(X.n) + sum(c * M for c, M in zip(coeffs, X))
    w, V = sym_eig(lX)
    if w[0] >= 0:
        raise ValueError("ell(X) is PSD; there is no separating scalar point")
    v = V[:, 0]
    pt = np.array([v @ M @ v for M in X])
    ok, lam = is_psd(pencil_eval(L, MatrixTuple.scalar(pt)), tol)
    if not ok:
        raise ValueError(f"X is not in D_L (scalar compression has min eigenvalue {lam:.2e})")
    return pt


@dataclass
class MonicPencil:
    pencil: AffinePencil
    shift: np.ndarray          # scalar point subtracted from every slot
    congruence: np.ndarray     # S^{-1/2}

    def original_point(self, X: MatrixTuple) -> MatrixTuple:
        """Map a tuple for the monic pencil back to the original variables."""
        n = X.n
        return MatrixTuple([M + c * np.eye(n) for M, c in zip(X, self.shift[:len(X)])])


def monic_normalize(L: AffinePencil, strict_point: Sequence[float],
                    min_eig: float = 1e-6) -> MonicPencil:
    """Translate to a strictly feasible scalar point, then congrue by ``S^{-1/2}``.

    ``strict_point`` lists one scalar per slot (x slots first, then lifted slots);
    skew slots must be 0.  The result ``M`` satisfies
    ``M(x, y) = S^{-1/2} L(x + x^, y + y^) S^{-1/2}`` with constant term ``I``.
    """
    pt = np.asarray(strict_point, dtype=float)
    if pt.shape != (L.g + L.h,):
        raise ValueError(f"strict point needs {L.g + L.h} coordinates")
    for c, kind in zip(pt[L.g:], L.kinds):
        if kind == SKEW and c != 0:
            raise ValueError("skew slots have no nonzero scalar values")
    S = L.A0 + sum(c * A for c, A in zip(pt[:L.g], L.A)) + sum(
        c * B for c, B in zip(pt[L.g:], L.lifted))
    S = 0.5 * (S + S.T)
    w = np.linalg.eigvalsh(S)[0]
    if w < min_eig:
        raise ValueError(f"point is not strictly feasible (min eigenvalue {w:.3e})")
    T = inv_sqrt(S)
    P = AffinePencil(T @ S @ T, [T @ A @ T for A in L.A], [T @ B @ T for B in L.lifted],
                     list(L.kinds), list(L.names))
    P.A0 = np.eye(P.size) if np.abs(P.A0 - np.eye(P.size)).max() < 1e-10 else P.A0
    return MonicPencil(P, pt, T)


# ---------------------------------------------------------------------------
# matrix convexity

def direct_sum(*tuples: MatrixTuple) -> MatrixTuple:
    g = tuples[0].g
    if any(t.g != g for t in tuples):
        raise ValueError("direct sum of tuples with different g")
    return MatrixTuple([block_diag(*(t[j] for t in tuples)) for j in range(g)], check=False)


def compress(V, X: MatrixTuple) -> MatrixTuple:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] != X.n:
        raise ValueError("isometry rows must match the tuple size")
    return MatrixTuple([V.T @ M @ V for M in X], check=False)


def convex_combination(Vs: Sequence, Xs: Sequence[MatrixTuple], tol: float = 1e-9) -> MatrixTuple:
    """``sum_l V_l^T X^l V_l`` where ``sum_l V_l^T V_l = I``."""
    Vs = [np.atleast_2d(np.asarray(V, dtype=float)) for V in Vs]
    n = Vs[0].shape[1]
    tot = sum(V.T @ V for V in Vs)
    if np.abs(tot - np.eye(n)).max() > tol:
        raise ValueError("the V_l do not form a partition of the identity")
    g = Xs[0].g
    return MatrixTuple([sum(V.T @ X[j] @ V for V, X in zip(Vs, Xs)) for j in range(g)], check=False)


# ---------------------------------------------------------------------------
# the bent TV screen lifts

@dataclass(frozen=True)
class TvScreenConfig:
    alpha: float = 1.0
    mu: float = (3.0 - math.sqrt(5.0)) / 2.0

    @property
    def gamma4(self) -> float:
        return 1.0 + self.alpha ** 2

    @property
    def gamma2(self) -> float:
        return math.sqrt(self.gamma4)

    @property
    def gamma(self) -> float:
        return self.gamma4 ** 0.25


def tv_lift(cfg: TvScreenConfig = TvScreenConfig()) -> AffinePencil:
    """``L1 (+) L2`` in slots ``(x, y; w)``; projects onto the TV-screen hull."""
    a, g1, g2 = cfg.alpha, cfg.gamma, cfg.gamma2
    E = lambda i, j, k: _unit(i, j, k)  # noqa: E731
    A0 = block_diag(np.diag([1.0, a]), np.diag([1.0, 1.0, 1.0]))
    Ax = block_diag(np.zeros((2, 2)), g2 * E(0, 2, 3))
    Ay = block_diag(g1 * E(0, 1, 2), np.zeros((3, 3)))
    Aw = block_diag(np.diag([0.0, 1.0]), E(1, 2, 3) + np.diag([0.0, 0.0, -2.0 * a]))
    return AffinePencil(A0, [Ax, Ay], [Aw], [SYM], ["w"])


def tv_classical_lift() -> AffinePencil:
    """The non-monic lift ``[[1,0,x],[0,1,w],[x,w,1]] (+) [[1,y],[y,w]]``."""
    A0 = block_diag(np.eye(3), np.diag([1.0, 0.0]))
    Ax = block_diag(_unit(0, 2, 3), np.zeros((2, 2)))
    Ay = block_diag(np.zeros((3, 3)), _unit(0, 1, 2))
    Aw = block_diag(_unit(1, 2, 3), np.diag([0.0, 1.0]))
    return AffinePencil(A0, [Ax, Ay], [Aw], [SYM], ["w"])


def box_pencil(g: int) -> AffinePencil:
    """``||x||_inf <= 1`` as ``diag(1 - x_j, 1 + x_j)``."""
    k = 2 * g
    A = []
    for j in range(g):
        M = np.zeros((k, k))
        M[2 * j, 2 * j], M[2 * j + 1, 2 * j + 1] = -1.0, 1.0
        A.append(M)
    return AffinePencil(np.eye(k), A)


def _unit(i: int, j: int, k: int) -> np.ndarray:
    E = np.zeros((k, k))
    E[i, j] = E[j, i] = 1.0
    return E
