"""Level-d moment relaxations of free semialgebraic sets and their certificates.

For a symmetric ``p`` the level-``d`` relaxation at size ``n`` asks for moments
``Y_alpha`` (``|alpha| <= D``) with ``Y_() = I``, ``Y_{x_j} = X_j`` and

    H_{d + ceil(deg p / 2)}(Y) >= 0,    H^loc_{p,d}(Y) >= 0.

The free parameters are the entries of one matrix per class ``{alpha, alpha*}``;
symmetry of the sequence is structural, never a constraint.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from . import sdpcore
from .matops import block_diag
from .moments import (MomentSequence, hankel_dense, localizing_dense, moment_degree_cap)
from .ncpoly import (EMPTY, MatrixPoly, MatrixTuple, Word, class_rep, enumerate_words,
                     involution, is_palindrome, word_str)
from .pencils import SKEW, SYM, AffinePencil, monic_normalize  # noqa: F401  (re-export)


@dataclass
class RelaxConfig:
    """Knobs for membership solves.

    ``arch_constant`` is a constant ``C`` with ``C^2 - sum x_j^2`` in the quadratic
    module of ``p``; it sets the box radius to ``max(10, 2 C^D)``.  Without it the
    box radius is ``1e3``.
    """

    arch_constant: float | None = None
    box_radius: float | None = None
    solver: sdpcore.SolverConfig = field(default_factory=sdpcore.SolverConfig)

    def radius(self, max_deg: int) -> float:
        if self.box_radius is not None:
            return self.box_radius
        if self.arch_constant is not None:
            return max(10.0, 2.0 * self.arch_constant ** max_deg)
        return 1e3


def _entry_basis(n: int, palindrome: bool) -> list[tuple[int, int, np.ndarray]]:
    out = []
    for a in range(n):
        for b in range(a if palindrome else 0, n):
            E = np.zeros((n, n))
            E[a, b] = 1.0
            if palindrome:
                E[b, a] = 1.0
            out.append((a, b, E))
    return out


@dataclass
class RelaxationProblem:
    p: MatrixPoly
    d: int
    n: int
    max_deg: int
    hankel_order: int
    param_map: list[tuple[Word, int, int]]       # parameter -> (class rep, row, col)
    classes: list[Word]                          # free classes in parameter order
    X: MatrixTuple | None
    # affine data per block: constant without X, X-entry coefficients, parameter coefficients
    base: list[np.ndarray] = field(repr=False, default_factory=list)
    x_coeffs: list[np.ndarray] = field(repr=False, default_factory=list)
    x_index: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def g(self) -> int:
        return self.p.g

    @property
    def num_params(self) -> int:
        return len(self.param_map)

    def F0_for(self, X: MatrixTuple) -> list[np.ndarray]:
        xv = _x_vector(X, self.x_index)
        return [b + np.tensordot(xv, c, axes=1) for b, c in zip(self.base, self.x_coeffs)]

    def moments(self, u: np.ndarray, X: MatrixTuple | None = None) -> MomentSequence:
        """The moment sequence encoded by parameter vector ``u`` at point ``X``."""
        X = X if X is not None else self.X
        n = self.n
        vals: dict[Word, np.ndarray] = {EMPTY: np.eye(n)}
        for j in range(self.g):
            vals[(j + 1,)] = X[j]
        for r in self.classes:
            vals[r] = np.zeros((n, n))
        for ui, (r, a, b) in zip(u, self.param_map):
            vals[r][a, b] += ui
            if is_palindrome(r) and a != b:
                vals[r][b, a] += ui
        return MomentSequence(self.g, n, self.max_deg, vals, check=False)

    def parameters_of(self, Y: MomentSequence) -> np.ndarray:
        return np.array([Y[r][a, b] for r, a, b in self.param_map])


def _x_vector(X: MatrixTuple, x_index) -> np.ndarray:
    return np.array([X[j][a, b] for j, a, b in x_index])


class _SymbolicMoments:
    """``word -> (P, n, n)`` affine coefficient tensors over [1, params, X entries]."""

    def __init__(self, g: int, n: int, max_deg: int):
        self.g, self.n, self.max_deg = g, n, max_deg
        self.classes = [w for w in enumerate_words(g, max_deg)
                        if len(w) >= 2 and class_rep(w) == w]
        self.param_map = [(r, a, b) for r in self.classes
                          for a, b, _ in _entry_basis(n, is_palindrome(r))]
        self.x_index = [(j, a, b) for j in range(g) for a, b, _ in _entry_basis(n, True)]
        m, mx = len(self.param_map), len(self.x_index)
        self.m, self.mx = m, mx
        P = 1 + m + mx
        self.table: dict[Word, np.ndarray] = {}
        T = np.zeros((P, n, n))
        T[0] = np.eye(n)
        self.table[EMPTY] = T
        pos = 1
        for r in self.classes:
            T = np.zeros((P, n, n))
            for _, _, E in _entry_basis(n, is_palindrome(r)):
                T[pos] = E
                pos += 1
            self.table[r] = T
        sym_basis = [E for _, _, E in _entry_basis(n, True)]
        for j in range(g):
            T = np.zeros((P, n, n))
            k0 = 1 + m + j * len(sym_basis)
            T[k0:k0 + len(sym_basis)] = sym_basis
            self.table[(j + 1,)] = T

    def __call__(self, w: Word) -> np.ndarray:
        r = class_rep(w)
        T = self.table[r]
        return T if r == w else T.transpose(0, 2, 1)


def _split(dense: np.ndarray, m: int):
    return dense[0], dense[1:1 + m], dense[1 + m:]


def assemble(p: MatrixPoly, n: int, d: int, X: MatrixTuple | None = None,
             box_radius: float = 10.0) -> tuple[RelaxationProblem, sdpcore.AffineMatrixProblem | None]:
    """Two PSD blocks (Hankel, localizing) affine in the free moment entries.

    When ``X`` is ``None`` only the relaxation layout is built.
    """
    if not p.is_symmetric(tol=1e-12):
        raise ValueError("the defining polynomial must be symmetric")
    if d < 0:
        raise ValueError("relaxation level must be >= 0")
    if X is not None and (X.g != p.g or X.n != n):
        raise ValueError(f"point must be a {p.g}-tuple of {n}x{n} matrices")
    D = moment_degree_cap(p, d)
    k_h = d + -(-p.degree // 2)
    sym = _SymbolicMoments(p.g, n, D)
    H = hankel_dense(sym, p.g, k_h)
    Lc = localizing_dense(sym, p, d)
    base, x_coeffs = [], []
    Fs = []
    for dense in (H, Lc):
        c0, cu, cx = _split(dense, sym.m)
        base.append(c0)
        x_coeffs.append(cx)
        Fs.append(cu)
    rp = RelaxationProblem(p, d, n, D, k_h, sym.param_map, sym.classes, X, base, x_coeffs,
                           sym.x_index)
    if X is None:
        return rp, None
    F0s = rp.F0_for(X)
    labels = [f"Y[{word_str(r)}][{a},{b}]" for r, a, b in sym.param_map]
    blocks = [sdpcore.MatrixBlock(F0s[0], Fs[0], "hankel"),
              sdpcore.MatrixBlock(F0s[1], Fs[1], "localizing")]
    return rp, sdpcore.AffineMatrixProblem(blocks, sym.m, box_radius, labels)


@dataclass
class MembershipResult:
    verdict: sdpcore.Verdict
    relaxation: RelaxationProblem
    problem: sdpcore.AffineMatrixProblem
    witness: MomentSequence | None = None

    @property
    def status(self) -> sdpcore.Status:
        return self.verdict.status

    def to_json(self, witness_file: str | None = None) -> dict:
        out = self.verdict.to_json()
        out["level"] = self.relaxation.d
        out["n"] = self.relaxation.n
        out["box_radius"] = self.problem.box_radius
        out["witness_file"] = witness_file
        return out


def membership(p: MatrixPoly, X: MatrixTuple, d: int,
               config: RelaxConfig | None = None) -> MembershipResult:
    """Decide whether ``X`` lies in the projection of the level-``d`` relaxation."""
    cfg = config or RelaxConfig()
    D = moment_degree_cap(p, d)
    rp, prob = assemble(p, X.n, d, X, cfg.radius(D))
    verdict = sdpcore.solve(prob, cfg.solver)
    witness = None
    if verdict.status is sdpcore.Status.STRICTLY_FEASIBLE:
        witness = rp.moments(verdict.point, X)
    return MembershipResult(verdict, rp, prob, witness)


def witness_margins(p: MatrixPoly, Y: MomentSequence, d: int) -> tuple[float, float]:
    """Minimal eigenvalues of the two level-``d`` constraint blocks at ``Y``."""
    from .moments import build_hankel, build_localizing
    k_h = d + -(-p.degree // 2)
    h = np.linalg.eigvalsh(build_hankel(Y, k_h).dense())[0]
    loc = np.linalg.eigvalsh(build_localizing(p, Y, d).dense())[0]
    return float(h), float(loc)


# ---------------------------------------------------------------------------
# separation

@dataclass
class SeparationFunctional:
    """``ell(X) = c0 + sum_j tr(C_j X_j)``; negative at the separated point."""

    c0: float
    C: list[np.ndarray]
    provenance: str
    level: int = 0

    def __call__(self, X: MatrixTuple) -> float:
        return float(self.c0 + sum(np.sum(Cj * Xj) for Cj, Xj in zip(self.C, X)))

    def to_json(self) -> dict:
        return {"c0": self.c0, "C": [c.tolist() for c in self.C], "provenance": self.provenance,
                "level": self.level}


def functional_from_certificate(rp: RelaxationProblem, prob: sdpcore.AffineMatrixProblem,
                                cert: sdpcore.InfeasibilityCertificate) -> SeparationFunctional:
    """Partial traces of the certificate against the blocks where ``X`` enters.

    Any ``X'`` with a witness inside the box has ``ell(X') >= 0``, because the same
    multipliers would otherwise certify its infeasibility.
    """
    c0 = prob.box_radius * float(np.sum(cert.lam_plus + cert.lam_minus))
    kappa = np.zeros(len(rp.x_index))
    for Lam, b, cx in zip(cert.multipliers, rp.base, rp.x_coeffs):
        c0 += float(np.sum(Lam * b))
        if len(rp.x_index):
            kappa += np.einsum("ijk,jk->i", cx, Lam)
    n = rp.n
    C = [np.zeros((n, n)) for _ in range(rp.g)]
    for val, (j, a, b) in zip(kappa, rp.x_index):
        if a == b:
            C[j][a, a] = val
        else:
            C[j][a, b] = C[j][b, a] = val / 2.0
    blob = json.dumps(cert.to_json(), sort_keys=True).encode()
    return SeparationFunctional(c0, C, hashlib.sha256(blob).hexdigest()[:16], rp.d)


def separate(p: MatrixPoly, X: MatrixTuple, d: int, config: RelaxConfig | None = None,
             result: MembershipResult | None = None) -> SeparationFunctional:
    """Affine functional negative at ``X`` and nonnegative on the relaxation (within the box)."""
    res = result or membership(p, X, d, config)
    if res.verdict.status is not sdpcore.Status.INFEASIBLE:
        raise ValueError(f"cannot separate: membership verdict is {res.verdict.status.value}")
    fun = functional_from_certificate(res.relaxation, res.problem, res.verdict.certificate)
    if not fun(X) < 0:
        raise RuntimeError("extracted functional is not negative at the point")
    return fun


# ---------------------------------------------------------------------------
# mixed pencil and symmetrization

@dataclass
class MixedPencil:
    """``A0 + sum A_j x_j + sum S_r z_r + sum (B_l y_l + B_l^T y_l^T)``.

    ``z_r`` are symmetric lifted variables (palindromic classes), ``y_l`` are
    unconstrained square variables (one per non-palindromic class).
    """

    A0: np.ndarray
    A: list[np.ndarray]
    S: list[np.ndarray]
    B: list[np.ndarray]
    sym_classes: list[Word] = field(default_factory=list)
    free_classes: list[Word] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.A0.shape[0]

    def evaluate(self, X, Zs, Ys) -> np.ndarray:
        X = list(X)
        n = np.atleast_2d(X[0]).shape[0]
        out = np.kron(self.A0, np.eye(n))
        for A, M in zip(self.A, X):
            out = out + np.kron(A, M)
        for S, M in zip(self.S, Zs):
            out = out + np.kron(S, M)
        for B, M in zip(self.B, Ys):
            out = out + np.kron(B, M) + np.kron(B.T, np.asarray(M).T)
        return out

    def evaluate_moments(self, X: MatrixTuple, Y: MomentSequence) -> np.ndarray:
        return self.evaluate(X, [Y[r] for r in self.sym_classes], [Y[r] for r in self.free_classes])


def build_mixed_pencil(p: MatrixPoly, d: int) -> MixedPencil:
    """Scalar coefficients ``Delta`` with ``D_Delta`` equal to the level-``d`` relaxation."""
    if not p.is_symmetric(tol=1e-12):
        raise ValueError("the defining polynomial must be symmetric")
    D = moment_degree_cap(p, d)
    k_h = d + -(-p.degree // 2)
    classes = [w for w in enumerate_words(p.g, D) if len(w) >= 2 and class_rep(w) == w]
    # one slot per oriented word: constant, x_j, then r and (for non-palindromes) r*
    slots: dict[Word, int] = {EMPTY: 0}
    for j in range(1, p.g + 1):
        slots[(j,)] = len(slots)
    for r in classes:
        slots[r] = len(slots)
        if not is_palindrome(r):
            slots[involution(r)] = len(slots)
    P = len(slots)
    table = {}
    for w, s in slots.items():
        T = np.zeros((P, 1, 1))
        T[s] = 1.0
        table[w] = T
    lookup = table.__getitem__
    blocks = [hankel_dense(lookup, p.g, k_h), localizing_dense(lookup, p, d)]
    coef = np.stack([block_diag(*(b[s] for b in blocks)) for s in range(P)])
    A0 = coef[0]
    A = [coef[slots[(j,)]] for j in range(1, p.g + 1)]
    sym_classes = [r for r in classes if is_palindrome(r)]
    free_classes = [r for r in classes if not is_palindrome(r)]
    S = [coef[slots[r]] for r in sym_classes]
    B = [coef[slots[r]] for r in free_classes]
    for r, Bm in zip(free_classes, B):
        if not np.array_equal(coef[slots[involution(r)]], Bm.T):
            raise AssertionError(f"reversed word {word_str(r)} is not placed at the transpose")
    return MixedPencil(A0, A, S, B, sym_classes, free_classes)


def split_symmetrize(delta: MixedPencil) -> AffinePencil:
    """Real symmetrization: ``B = C + D`` (symmetric + skew), ``y = W + V``.

    ``B (x) y + B^T (x) y^T = 2 C (x) W + 2 D (x) V``, so the result has the ``S``
    slots, then ``2C`` on symmetric slots, then ``2D`` on skew slots.
    """
    Cs = [(B + B.T) for B in delta.B]     # 2C
    Ds = [(B - B.T) for B in delta.B]     # 2D
    lifted = list(delta.S) + Cs + Ds
    kinds = [SYM] * (len(delta.S) + len(Cs)) + [SKEW] * len(Ds)
    names = ([f"z{word_str(r)}" for r in delta.sym_classes]
             + [f"w{word_str(r)}" for r in delta.free_classes]
             + [f"v{word_str(r)}" for r in delta.free_classes])
    return AffinePencil(delta.A0, delta.A, lifted, kinds, names)


def symmetrized_assignment(delta: MixedPencil, Zs, Ys) -> list[np.ndarray]:
    """Lifted values for :func:`split_symmetrize` matching ``(Zs, Ys)`` in ``delta``."""
    Ws = [0.5 * (np.asarray(Y) + np.asarray(Y).T) for Y in Ys]
    Vs = [0.5 * (np.asarray(Y) - np.asarray(Y).T) for Y in Ys]
    return [np.asarray(Z) for Z in Zs] + Ws + Vs


# ---------------------------------------------------------------------------
# truncated quadratic module

@dataclass
class QuadModuleCertificate:
    sos_basis: list[Word]
    sos_gram: np.ndarray
    loc_basis: list[tuple[int, Word]]          # (coefficient row, word)
    loc_gram: np.ndarray
    p: MatrixPoly
    residual: float = 0.0
    min_eig: float = 0.0

    def reconstruct(self) -> MatrixPoly:
        g = self.p.g
        out = MatrixPoly(g)
        for i, a in enumerate(self.sos_basis):
            for j, b in enumerate(self.sos_basis):
                if self.sos_gram[i, j]:
                    out._accumulate(involution(a) + b, self.sos_gram[i, j])
        for i, (c, a) in enumerate(self.loc_basis):
            for j, (c2, b) in enumerate(self.loc_basis):
                G = self.loc_gram[i, j]
                if not G:
                    continue
                for gam, pc in self.p.terms.items():
                    if pc[c, c2]:
                        out._accumulate(involution(a) + gam + b, G * pc[c, c2])
        return out

    def sos_factors(self, tol: float = 1e-12) -> list[MatrixPoly]:
        """``s_i`` with ``sum s_i* s_i`` equal to the SOS part (from the Gram eigenpairs)."""
        return _factors(self.sos_gram, [(0, w) for w in self.sos_basis], self.p.g, 1, tol)

    def loc_factors(self, tol: float = 1e-12) -> list[MatrixPoly]:
        """Column polynomials ``f_j`` (block dim of ``p`` x 1, stored square-padded)."""
        return _factors(self.loc_gram, self.loc_basis, self.p.g, self.p.block_dim, tol)

    def to_json(self) -> dict:
        return {"sos_basis": [word_str(w) for w in self.sos_basis],
                "sos_gram": self.sos_gram.tolist(),
                "loc_basis": [[c, word_str(w)] for c, w in self.loc_basis],
                "loc_gram": self.loc_gram.tolist(), "residual": self.residual,
                "min_eig": self.min_eig}


def _factors(G, basis, g, ell, tol):
    if G.size == 0:
        return []
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    out = []
    for lam, v in zip(w, V.T):
        if lam <= tol:
            continue
        f = MatrixPoly(g, ell)
        for coef, (c, word) in zip(np.sqrt(lam) * v, basis):
            if coef:
                M = np.zeros((ell, ell))
                M[c, 0] = coef
                f._accumulate(word, M)
        out.append(f)
    return out


@dataclass
class NotFound:
    reason: str
    verdict: sdpcore.Verdict | None = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return False


def quad_module_membership(q: MatrixPoly, p: MatrixPoly, alpha: int, beta: int,
                           box_radius: float = 100.0, psd_tol: float = 1e-8,
                           config: sdpcore.SolverConfig | None = None):
    """Search for ``q = v_a^T G v_a + sum_{c,c'} (v_b^T F v_b)_{c c'} * p`` with PSD Grams.

    ``q`` must be scalar.  The coefficient identity is solved exactly as a linear
    system; the Grams are then parametrized over its solution space and only PSD-ness
    is left to the SDP engine.
    """
    if q.block_dim != 1:
        raise ValueError("quadratic-module search supports scalar targets only")
    if not q.is_symmetric(tol=1e-12):
        raise ValueError("target polynomial must be symmetric")
    if q.degree > max(2 * alpha, 2 * beta + p.degree):
        raise ValueError("target degree exceeds the module degree bounds")
    g, ell = p.g, p.block_dim
    sos_basis = enumerate_words(g, alpha)
    loc_basis = [(c, w) for c in range(ell) for w in enumerate_words(g, beta)]
    ns, nl = len(sos_basis), len(loc_basis)
    Dtop = max(2 * alpha, 2 * beta + p.degree)
    rows = {w: i for i, w in enumerate(enumerate_words(g, Dtop))}
    unknowns = [("s", i, j) for i in range(ns) for j in range(i, ns)] + \
               [("f", i, j) for i in range(nl) for j in range(i, nl)]
    A = np.zeros((len(rows), len(unknowns)))
    for col, (kind, i, j) in enumerate(unknowns):
        pairs = [(i, j)] if i == j else [(i, j), (j, i)]
        for a_, b_ in pairs:
            if kind == "s":
                A[rows[involution(sos_basis[a_]) + sos_basis[b_]], col] += 1.0
            else:
                (c, wa), (c2, wb) = loc_basis[a_], loc_basis[b_]
                for gam, pc in p.terms.items():
                    if pc[c, c2]:
                        A[rows[involution(wa) + gam + wb], col] += pc[c, c2]
    rhs = np.zeros(len(rows))
    for w, B in q.terms.items():
        rhs[rows[w]] = B[0, 0]
    x0, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    lin_res = float(np.abs(A @ x0 - rhs).max(initial=0.0))
    if lin_res > 1e-9:
        return NotFound(f"coefficient identity has no solution (residual {lin_res:.2e})")
    N = null_space(A)

    def grams(x):
        Gs, Gf = np.zeros((ns, ns)), np.zeros((nl, nl))
        for val, (kind, i, j) in zip(x, unknowns):
            G = Gs if kind == "s" else Gf
            G[i, j] = G[j, i] = val
        return Gs, Gf

    def gram_stack(vecs):
        S, F = zip(*(grams(v) for v in vecs)) if len(vecs) else ((), ())
        return (np.array(S).reshape(-1, ns, ns), np.array(F).reshape(-1, nl, nl))

    S0, F0 = grams(x0)
    Ss, Fs = gram_stack(list(N.T))
    blocks = []
    if ns:
        blocks.append(sdpcore.MatrixBlock(S0, Ss, "sos"))
    if nl:
        blocks.append(sdpcore.MatrixBlock(F0, Fs, "loc"))
    prob = sdpcore.AffineMatrixProblem(blocks, N.shape[1], box_radius)
    verdict = sdpcore.solve(prob, config)
    if verdict.status is sdpcore.Status.INFEASIBLE or verdict.margin < -psd_tol:
        return NotFound("no PSD Gram matrices within the degree bounds", verdict)
    x = x0 + N @ verdict.point
    Gs, Gf = grams(x)
    cert = QuadModuleCertificate(sos_basis, Gs, loc_basis, Gf, p)
    cert.residual = float(max((abs(v) for v in (cert.reconstruct() - q).terms.values()
                               for v in v.ravel()), default=0.0))
    cert.min_eig = float(min(np.linalg.eigvalsh(G)[0] for G in (Gs, Gf) if G.size))
    if cert.residual > 1e-7 or cert.min_eig < -psd_tol:
        return NotFound("Gram reconstruction failed tolerance checks", verdict)
    return cert


def archimedean_residual(k_squared: float, p: MatrixPoly, sos: list[MatrixPoly],
                         loc: list[MatrixPoly]) -> MatrixPoly | None:
    """``K^2 - sum x_j^2 - sum s* s - sum f* p f``; ``None`` if the right side is not scalar.

    For a block ``p`` the ``f_j`` are column polynomials stored square-padded (column 0),
    so ``f* p f`` is nonzero only in its ``(0, 0)`` entry.
    """
    g = p.g
    lhs = MatrixPoly.constant(k_squared, g)
    for j in range(1, g + 1):
        lhs = lhs - MatrixPoly.monomial((j, j), g)
    rhs = MatrixPoly(g)
    for s in sos:
        rhs = rhs + s.star() * s
    for f in loc:
        rhs = rhs + f.star() * p * f
    if rhs.block_dim != 1:
        if any(np.any(np.delete(B.ravel(), 0)) for B in rhs.terms.values()):
            return None
        rhs = MatrixPoly(g, 1, {w: B[0, 0] for w, B in rhs.terms.items()})
    return lhs - rhs


def verify_archimedean_identity(k_squared: float, p: MatrixPoly, sos: list[MatrixPoly],
                                loc: list[MatrixPoly]) -> bool:
    """Exact check of ``K^2 - sum x_j^2 == sum s* s + sum f* p f`` after expansion."""
    res = archimedean_residual(k_squared, p, sos, loc)
    return res is not None and res.is_zero(tol=0.0)


def tv_screen() -> MatrixPoly:
    from .ncpoly import parse_poly
    return parse_poly("1 - x1^2 - x2^4", 2)


TV_ARCH_CONSTANT = math.sqrt(5.0) / 2.0
