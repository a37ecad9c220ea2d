"""Block-affine PSD feasibility: maximize the eigenvalue margin ``t`` over a box.

For blocks ``F_b(u) = F0_b + sum_i u_i F_ib`` the engine solves

    maximize t  subject to  F_b(u) - t I >= 0 for all b,  |u_i| <= R

with a log-det barrier path-following method.  A positive optimum is a strict
feasibility witness.  A negative optimum comes with a Farkas certificate
``(Lambda_b, lam_plus, lam_minus)`` that proves infeasibility inside the box.

Infeasibility is only ever certified relative to the box radius ``R``.  Callers
must choose ``R`` above any a-priori bound on genuine solutions before reading
``Infeasible`` as non-membership.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    STRICTLY_FEASIBLE = "StrictlyFeasible"
    INFEASIBLE = "Infeasible"
    MARGINAL = "Marginal"


class ProblemTooLarge(ValueError):
    pass


@dataclass
class MatrixBlock:
    F0: np.ndarray          # (k, k)
    F: np.ndarray           # (m, k, k)
    name: str = ""

    @property
    def size(self) -> int:
        return self.F0.shape[0]

    def at(self, u: np.ndarray) -> np.ndarray:
        return self.F0 + np.tensordot(u, self.F, axes=1) if self.F.shape[0] else self.F0.copy()


@dataclass
class AffineMatrixProblem:
    blocks: list[MatrixBlock]
    num_params: int
    box_radius: float = 10.0
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        for b in self.blocks:
            if b.F.shape != (self.num_params,) + b.F0.shape:
                raise ValueError(f"block {b.name!r}: coefficient stack has shape {b.F.shape}")
            if np.abs(b.F0 - b.F0.T).max(initial=0) > 1e-9 * (1 + np.abs(b.F0).max(initial=0)):
                raise ValueError(f"block {b.name!r}: constant term is not symmetric")
        if not np.isfinite(self.box_radius) or self.box_radius <= 0:
            raise ValueError("box radius must be positive and finite")

    @classmethod
    def from_blocks(cls, blocks: Sequence[tuple], box_radius: float = 10.0,
                    labels: Sequence[str] | None = None) -> "AffineMatrixProblem":
        """Build from ``(F0, [F_1, ..., F_m])`` pairs."""
        mbs = []
        m = None
        for idx, (F0, Fs) in enumerate(blocks):
            F0 = np.atleast_2d(np.asarray(F0, dtype=float))
            Fs = np.asarray(Fs, dtype=float).reshape((-1,) + F0.shape)
            m = Fs.shape[0] if m is None else m
            mbs.append(MatrixBlock(F0, Fs, f"block{idx}"))
        return cls(mbs, m or 0, box_radius, list(labels or []))

    @property
    def total_dim(self) -> int:
        return sum(b.size for b in self.blocks)

    def margin(self, u: np.ndarray) -> float:
        return min(float(np.linalg.eigvalsh(b.at(u))[0]) for b in self.blocks if b.size)

    def to_json(self) -> dict:
        return {"num_params": self.num_params, "box_radius": self.box_radius,
                "labels": list(self.labels),
                "blocks": [{"name": b.name, "F0": b.F0.tolist(), "F": b.F.tolist()}
                           for b in self.blocks]}

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


@dataclass
class InfeasibilityCertificate:
    multipliers: list[np.ndarray]
    lam_plus: np.ndarray
    lam_minus: np.ndarray
    gap: float

    def to_json(self) -> dict:
        return {"multipliers": [L.tolist() for L in self.multipliers],
                "lam_plus": self.lam_plus.tolist(), "lam_minus": self.lam_minus.tolist(),
                "gap": self.gap}


@dataclass
class Verdict:
    status: Status
    margin: float
    point: np.ndarray | None = None
    certificate: InfeasibilityCertificate | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status is Status.STRICTLY_FEASIBLE

    @property
    def infeasible(self) -> bool:
        return self.status is Status.INFEASIBLE

    def to_json(self) -> dict:
        out = {"status": self.status.value, "margin": self.margin, "iterations": self.iterations}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


@dataclass
class SolverConfig:
    eps_feas: float = 1e-7
    gap_tol: float = 1e-9
    max_newton: int = 600
    eta_factor: float = 8.0
    center_tol: float = 1e-4
    max_dim: int = 4000


def verify_certificate(cert: InfeasibilityCertificate, problem: AffineMatrixProblem,
                       tol: float = 1e-6) -> bool:
    """Check the Farkas identities directly from the problem data.

    For ``u`` in the box, ``sum_b tr(Lambda_b F_b(u)) <= value + R * sum_i |resid_i| < 0``,
    which rules out ``F_b(u) >= 0`` for all ``b``.
    """
    if len(cert.multipliers) != len(problem.blocks):
        raise ValueError("certificate and problem disagree on the number of blocks")
    m = problem.num_params
    if cert.lam_plus.shape != (m,) or cert.lam_minus.shape != (m,):
        raise ValueError("box multipliers have the wrong length")
    if not cert.gap > 0:
        return False
    if np.any(cert.lam_plus < -tol) or np.any(cert.lam_minus < -tol):
        return False
    resid = cert.lam_plus - cert.lam_minus
    value = problem.box_radius * float(np.sum(cert.lam_plus + cert.lam_minus))
    for Lam, b in zip(cert.multipliers, problem.blocks):
        if Lam.shape != b.F0.shape:
            raise ValueError("multiplier shape does not match its block")
        if np.abs(Lam - Lam.T).max(initial=0) > tol:
            return False
        if b.size and np.linalg.eigvalsh(0.5 * (Lam + Lam.T))[0] < -tol:
            return False
        if m:
            resid = resid + np.einsum("ijk,jk->i", b.F, Lam)
        value += float(np.sum(Lam * b.F0))
    if np.abs(resid).max(initial=0.0) > tol:
        return False
    if abs(value + cert.gap) > tol * (1 + abs(cert.gap)):
        return False
    slack = problem.box_radius * float(np.abs(resid).sum())
    return value + slack < 0


class _Barrier:
    """Barrier ``-sum log det(F_b(u) - tI) - sum log(R^2 - u_i^2)`` and its derivatives."""

    def __init__(self, problem: AffineMatrixProblem):
        self.p = problem
        self.m = problem.num_params
        self.R = problem.box_radius
        self.nu = problem.total_dim + 2 * self.m
        self.blocks = [b for b in problem.blocks if b.size]

    def slacks(self, z):
        u, t = z[:-1], z[-1]
        return [b.at(u) - t * np.eye(b.size) for b in self.blocks]

    def chol(self, z):
        """Cholesky factors of every slack, or None when ``z`` leaves the domain."""
        u = z[:-1]
        if self.m and np.abs(u).max() >= self.R:
            return None
        out = []
        for S in self.slacks(z):
            try:
                out.append(np.linalg.cholesky(S))
            except np.linalg.LinAlgError:
                return None
        return out

    def value(self, z, chols) -> float:
        u = z[:-1]
        v = -sum(2.0 * np.log(np.diag(L)).sum() for L in chols)
        if self.m:
            v -= np.log(self.R - u).sum() + np.log(self.R + u).sum()
        return float(v)

    def derivatives(self, z, chols):
        m = self.m
        u = z[:-1]
        grad = np.zeros(m + 1)
        hess = np.zeros((m + 1, m + 1))
        for b, L in zip(self.blocks, chols):
            k = b.size
            # G_a = L^{-1} A_a L^{-T}; A_i = F_i, A_t = -I
            A = np.concatenate([b.F, -np.eye(k)[None]], axis=0)        # (m+1, k, k)
            C = solve_triangular(L, A.transpose(1, 0, 2).reshape(k, -1), lower=True)
            C = C.reshape(k, m + 1, k).transpose(1, 0, 2)               # L^{-1} A_a
            G = solve_triangular(L, C.transpose(2, 0, 1).reshape(k, -1), lower=True)
            G = G.reshape(k, m + 1, k).transpose(1, 0, 2)              # (L^{-1} A_a L^{-T})^T
            flat = G.reshape(m + 1, -1)
            grad -= np.trace(G, axis1=1, axis2=2)
            hess += flat @ flat.T
        if m:
            a, c = 1.0 / (self.R - u), 1.0 / (self.R + u)
            grad[:m] += a - c
            hess[np.arange(m), np.arange(m)] += a * a + c * c
        return grad, hess

    def inverse_slacks(self, chols):
        out = []
        for L in chols:
            Li = solve_triangular(L, np.eye(L.shape[0]), lower=True)
            out.append(Li.T @ Li)
        return out


def _extract_certificate(problem: AffineMatrixProblem, bar: _Barrier, chols) -> InfeasibilityCertificate:
    Sinv = bar.inverse_slacks(chols)
    mult, it = [], iter(Sinv)
    for b in problem.blocks:
        mult.append(next(it) if b.size else np.zeros((0, 0)))
    total = sum(float(np.trace(L)) for L in mult)
    mult = [0.5 * (L + L.T) / total for L in mult]
    m = problem.num_params
    r = np.zeros(m)
    value = 0.0
    for L, b in zip(mult, problem.blocks):
        if m:
            r += np.einsum("ijk,jk->i", b.F, L)
        value += float(np.sum(L * b.F0))
    lam_plus, lam_minus = np.maximum(-r, 0.0), np.maximum(r, 0.0)
    value += problem.box_radius * float(np.sum(lam_plus + lam_minus))
    return InfeasibilityCertificate(mult, lam_plus, lam_minus, -value)


def solve(problem: AffineMatrixProblem, config: SolverConfig | None = None) -> Verdict:
    """Maximize the minimal eigenvalue margin over the box and classify the result."""
    cfg = config or SolverConfig()
    if problem.total_dim > cfg.max_dim:
        raise ProblemTooLarge(f"flattened dimension {problem.total_dim} exceeds cap {cfg.max_dim}")
    bar = _Barrier(problem)
    m = bar.m
    if not bar.blocks:
        return Verdict(Status.STRICTLY_FEASIBLE, float("inf"), np.zeros(m))

    u0 = np.zeros(m)
    t0 = problem.margin(u0)
    z = np.append(u0, t0 - 1.0)
    chols = bar.chol(z)
    eta = 1.0
    newton = 0
    stalled = False
    ev = np.zeros(m + 1)
    ev[-1] = 1.0
    while True:
        # centering
        for _ in range(200):
            g, H = bar.derivatives(z, chols)
            g = g - eta * ev
            try:
                step = -cho_solve(cho_factor(H), g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec = float(np.sqrt(max(-g @ step, 0.0)))
            newton += 1
            alpha = 1.0 if dec < 0.25 else 1.0 / (1.0 + dec)
            f0 = -eta * z[-1] + bar.value(z, chols)
            while True:
                zn = z + alpha * step
                cn = bar.chol(zn)
                if cn is not None and -eta * zn[-1] + bar.value(zn, cn) <= f0 + 1e-12 * (1 + abs(f0)):
                    break
                alpha *= 0.5
                if alpha < 1e-12:
                    cn = None
                    break
            if cn is None:
                stalled = True
                break
            z, chols = zn, cn
            if dec < cfg.center_tol or newton >= cfg.max_newton:
                break
        if stalled or newton >= cfg.max_newton:
            break
        if bar.nu / eta <= cfg.gap_tol:
            break
        eta *= cfg.eta_factor

    u = z[:-1]
    t_star = problem.margin(u)
    diag = {"newton_steps": newton, "barrier_gap": bar.nu / eta, "eta": eta}
    if stalled:
        diag["stalled"] = True
        u, t_star = _supergradient_polish(problem, u, t_star)
    if newton >= cfg.max_newton:
        diag["iteration_cap"] = True

    if t_star > cfg.eps_feas:
        return Verdict(Status.STRICTLY_FEASIBLE, t_star, u, None, newton, diag)
    cert = _extract_certificate(problem, bar, chols)
    diag["dual_bound"] = -cert.gap
    if t_star < -cfg.eps_feas and verify_certificate(cert, problem):
        return Verdict(Status.INFEASIBLE, t_star, u, cert, newton, diag)
    if t_star < -cfg.eps_feas:
        diag["certificate_failed"] = True
    return Verdict(Status.MARGINAL, t_star, u, cert, newton, diag)


def _supergradient_polish(problem: AffineMatrixProblem, u: np.ndarray, t: float,
                          iters: int = 200) -> tuple[np.ndarray, float]:
    """Projected supergradient ascent on ``min_b lambda_min(F_b(u))``."""
    best_u, best_t = u.copy(), t
    R = problem.box_radius
    for k in range(iters):
        vals = []
        for b in problem.blocks:
            if not b.size:
                continue
            w, V = np.linalg.eigh(b.at(u))
            vals.append((w[0], V[:, 0], b))
        lam, v, b = min(vals, key=lambda x: x[0])
        sg = np.einsum("j,ijk,k->i", v, b.F, v) if problem.num_params else np.zeros(0)
        nrm = np.linalg.norm(sg)
        if nrm == 0:
            break
        u = np.clip(u + (0.1 / (k + 1)) * sg / nrm, -R * (1 - 1e-9), R * (1 - 1e-9))
        t_new = problem.margin(u)
        if t_new > best_t:
            best_u, best_t = u.copy(), t_new
    return best_u, best_t
