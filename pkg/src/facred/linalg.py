"""Dense symmetric linear algebra used by the face machinery.

The eigensolver is a cyclic Jacobi iteration: at the target scale (matrix
orders up to ~50) it is simple, accurate, and has no dependencies beyond
numpy.  Eigenvalues come back in descending order with deterministically
fixed eigenvector signs so repeated runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config

_JACOBI_SWEEP_LIMIT = 60


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # orthonormal columns, Q[:, k] pairs with eigenvalues[k]

    def reconstruct(self) -> np.ndarray:
        q, lam = self.eigenvectors, self.eigenvalues
        return (q * lam) @ q.T


def _fix_signs(q: np.ndarray) -> np.ndarray:
    q = q.copy()
    for k in range(q.shape[1]):
        col = q[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12 * max(1.0, np.max(np.abs(col))))[0]
        if nz.size and col[nz[0]] < 0:
            q[:, k] = -col
    return q


def sym_eig(x: np.ndarray, tol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rejects inputs whose asymmetry exceeds ``tol`` relative to the largest
    entry.  Convergence: off-diagonal Frobenius mass below 1e-12 times the
    matrix norm.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("square matrix required")
    asym = np.max(np.abs(x - x.T), initial=0.0)
    if asym > tol * (1.0 + np.max(np.abs(x), initial=0.0)):
        raise ValueError(f"matrix asymmetry {asym:.3e} beyond tolerance")
    n = x.shape[0]
    a = 0.5 * (x + x.T)
    q = np.eye(n)
    norm = np.linalg.norm(a)
    if n > 1 and norm > 0:
        target = 1e-12 * norm
        for _ in range(_JACOBI_SWEEP_LIMIT):
            off = np.linalg.norm(a - np.diag(np.diag(a)))
            if off <= target:
                break
            for p in range(n - 1):
                for r in range(p + 1, n):
                    apq = a[p, r]
                    if abs(apq) <= 1e-300:
                        continue
                    theta = 0.5 * np.arctan2(2.0 * apq, a[r, r] - a[p, p])
                    c, s = np.cos(theta), np.sin(theta)
                    rot_p = c * a[:, p] - s * a[:, r]
                    rot_r = s * a[:, p] + c * a[:, r]
                    a[:, p], a[:, r] = rot_p, rot_r
                    rot_p = c * a[p, :] - s * a[r, :]
                    rot_r = s * a[p, :] + c * a[r, :]
                    a[p, :], a[r, :] = rot_p, rot_r
                    rot_p = c * q[:, p] - s * q[:, r]
                    rot_r = s * q[:, p] + c * q[:, r]
                    q[:, p], q[:, r] = rot_p, rot_r
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return EigenDecomposition(lam[order], _fix_signs(q[:, order]))


def numeric_rank(eigenvalues: np.ndarray, tol: float = None) -> int:
    """Count of eigenvalues above ``tol * max(1, largest eigenvalue)``.

    Expects descending order (as produced by :func:`sym_eig`).
    """
    if tol is None:
        tol = config.RANK_TOL
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return 0
    if np.any(np.diff(lam) > 1e-12 * (1.0 + np.max(np.abs(lam)))):
        raise ValueError("eigenvalues must be in descending order")
    cutoff = tol * max(1.0, float(lam[0]))
    return int(np.sum(lam > cutoff))


def _svec(part: np.ndarray, kind: str) -> np.ndarray:
    """Flatten a block payload isometrically (off-diagonals scaled by sqrt 2)."""
    if kind == "orthant":
        return np.asarray(part, dtype=float).reshape(-1)
    n = part.shape[0]
    iu = np.triu_indices(n)
    weights = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return part[iu] * weights


def _unsvec(vec: np.ndarray, kind: str, size: int) -> np.ndarray:
    if kind == "orthant":
        return np.asarray(vec, dtype=float).copy()
    mat = np.zeros((size, size))
    iu = np.triu_indices(size)
    weights = np.where(iu[0] == iu[1], 1.0, 1.0 / np.sqrt(2.0))
    mat[iu] = vec * weights
    mat = mat + mat.T - np.diag(np.diag(mat))
    return mat


def flatten_element(y) -> np.ndarray:
    """Isometric flattening of a YElement: inner products become dot products."""
    return np.concatenate([_svec(part, blk.kind)
                           for blk, part in zip(y.blocks, y.parts)]) \
        if y.blocks else np.zeros(0)


def unflatten_element(vec: np.ndarray, blocks):
    from .model import YElement
    parts, at = [], 0
    for blk in blocks:
        d = blk.ambient_dim
        parts.append(_unsvec(vec[at:at + d], blk.kind, blk.size))
        at += d
    return YElement(blocks, parts)


def nullspace_basis(rows, tol: float = None):
    """Orthonormal basis of the joint orthogonal complement of ``rows``.

    ``rows`` is a list of YElements (typically the constraint elements plus
    the right-hand side).  The basis is computed from the eigendecomposition
    of the Gram matrix R^T R of the flattened rows, avoiding a general SVD;
    eigenvectors with eigenvalue at or below the cutoff span the complement.
    Returns a (possibly empty) list of YElements.
    """
    if tol is None:
        tol = config.RANK_TOL
    if not rows:
        raise ValueError("at least one row required")
    blocks = rows[0].blocks
    r = np.vstack([flatten_element(y) for y in rows])
    gram = r.T @ r
    dec = sym_eig(gram)
    lam, q = dec.eigenvalues, dec.eigenvectors
    scale = max(1.0, float(lam[0])) if lam.size else 1.0
    keep = lam <= (tol * tol) * scale
    basis = [unflatten_element(q[:, k], blocks)
             for k in range(q.shape[1]) if keep[k]]
    return basis
