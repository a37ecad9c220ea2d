"""Dense real matrix kernel shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.linalg

DEFAULT_PSD_TOL = 1e-9
SYM_RTOL = 1e-12


class NotPSDError(ValueError):
    """Raised when a matrix required to be PSD has a clearly negative eigenvalue."""


def as_square(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def is_symmetric(M, rtol: float = SYM_RTOL) -> bool:
    A = as_square(M)
    scale = 1.0 + np.abs(A).max(initial=0.0)
    return bool(np.abs(A - A.T).max(initial=0.0) <= rtol * scale)


def symmetrize(M) -> np.ndarray:
    A = as_square(M)
    return 0.5 * (A + A.T)


def sym_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    Returns ``(w, V)`` with ``M = V diag(w) V^T``.
    """
    A = as_square(M)
    if not is_symmetric(A, rtol=1e-9):
        raise ValueError("sym_eig requires a symmetric matrix")
    try:
        w, V = np.linalg.eigh(symmetrize(A))
    except np.linalg.LinAlgError as exc:  # LAPACK convergence failure
        raise FloatingPointError(f"symmetric eigensolver did not converge: {exc}") from exc
    return w, V


def min_eig(M) -> float:
    A = as_square(M)
    if A.shape[0] == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(symmetrize(A))[0])


def is_psd(M, tol: float = DEFAULT_PSD_TOL) -> tuple[bool, float]:
    """Return ``(lambda_min >= -tol, lambda_min)``."""
    lam = min_eig(M)
    return lam >= -tol, lam


def principal_sqrt(M, tol: float = 1e-10) -> np.ndarray:
    """PSD square root; eigenvalues in ``[-tol, 0)`` are clamped to zero."""
    w, V = sym_eig(M)
    if w.size and w[0] < -tol:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    r = np.sqrt(np.clip(w, 0.0, None))
    return symmetrize((V * r) @ V.T)


def inv_sqrt(M) -> np.ndarray:
    w, V = sym_eig(M)
    if w[0] <= 0:
        raise NotPSDError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return symmetrize((V / np.sqrt(w)) @ V.T)


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def batched_kron(C: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Kronecker product ``C (x) W`` over the trailing two axes of ``W``.

    ``C`` is ``(a, b)``; ``W`` is ``(..., n, m)``; the result is ``(..., a*n, b*m)``.
    """
    a, b = C.shape
    n, m = W.shape[-2:]
    out = np.einsum("ab,...ij->...aibj", C, W)
    return out.reshape(W.shape[:-2] + (a * n, b * m))


def block_diag(*mats) -> np.ndarray:
    return scipy.linalg.block_diag(*(np.atleast_2d(np.asarray(M, dtype=float)) for M in mats))


@dataclass
class BlockMatrix:
    """Block matrix addressed by labels; flattening follows the index order."""

    row_index: list
    col_index: list
    block_dims: dict
    blocks: dict = field(default_factory=dict)

    def block(self, r: Hashable, c: Hashable) -> np.ndarray:
        if (r, c) in self.blocks:
            return self.blocks[(r, c)]
        return np.zeros((self.block_dims[r], self.block_dims[c]))

    def offsets(self, labels: Sequence) -> dict:
        out, pos = {}, 0
        for lab in labels:
            out[lab] = pos
            pos += self.block_dims[lab]
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return (sum(self.block_dims[r] for r in self.row_index),
                sum(self.block_dims[c] for c in self.col_index))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        ro, co = self.offsets(self.row_index), self.offsets(self.col_index)
        for (r, c), B in self.blocks.items():
            out[ro[r]:ro[r] + B.shape[0], co[c]:co[c] + B.shape[1]] = B
        return out
