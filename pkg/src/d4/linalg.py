"""Orthogonal projection operators and orthonormal-basis bookkeeping.

The removal machinery works with an ordered orthonormal basis of decision
directions. Projecting data rows onto the orthogonal complement of that
basis zeroes all variability along the removed directions:

    X_perp = X (I - sum_j w_j w_j^T)

This module owns the basis type, the associated projector, orthonormal
completion of a partial basis (for rank-reduced representations), and the
column-space Schur-complement deflation that the row projection is
compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BasisFullError,
    DegenerateDirectionError,
    DimensionMismatchError,
    LinearlyDependentError,
    ZeroVectorError,
)


@dataclass
class Tolerances:
    """Global numeric tolerances shared across the library.

    orthogonality: relative tolerance for orthogonality, idempotence and
        dependence checks.
    zero_vector: absolute Euclidean norm below which a vector is treated
        as zero.
    """

    orthogonality: float = 1e-8
    zero_vector: float = 1e-12


tol = Tolerances()


def _as_vector(w, name: str = "vector") -> np.ndarray:
    v = np.asarray(w, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_feature_matrix(X, name: str = "feature matrix") -> np.ndarray:
    """Validate and return an n x p float matrix (finite, n >= 1, p >= 1)."""
    A = np.asarray(X, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatchError(f"{name} must be two-dimensional, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must be at least 1 x 1, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def normalize(w) -> np.ndarray:
    """Return w / ||w||_2.

    Raises ZeroVectorError when ||w|| falls below the zero tolerance,
    which signals a degenerate learner output upstream.
    """
    v = _as_vector(w)
    norm = float(np.linalg.norm(v))
    if norm < tol.zero_vector:
        raise ZeroVectorError(f"cannot normalize vector with norm {norm:.3e}")
    return v / norm


class OrthonormalBasis:
    """An ordered set of mutually orthogonal unit vectors in R^p.

    Immutable: growing the basis returns a new instance. `vectors` is a
    (k, p) array whose rows are the directions, in removal order.
    """

    __slots__ = ("dim", "vectors")

    def __init__(self, dim: int, vectors: np.ndarray | None = None):
        if dim < 1:
            raise DimensionMismatchError("basis dimension must be >= 1")
        if vectors is None:
            vectors = np.zeros((0, dim))
        V = np.asarray(vectors, dtype=float)
        if V.ndim != 2 or V.shape[1] != dim:
            raise DimensionMismatchError(
                f"basis vectors must have shape (k, {dim}), got {V.shape}"
            )
        if V.shape[0] > dim:
            raise BasisFullError(f"{V.shape[0]} vectors cannot be orthonormal in R^{dim}")
        self.dim = int(dim)
        self.vectors = V
        self.vectors.setflags(write=False)

    @classmethod
    def empty(cls, dim: int) -> "OrthonormalBasis":
        return cls(dim)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.vectors)

    def validate(self, rtol: float | None = None) -> None:
        """Check unit norms and pairwise orthogonality, raising on failure."""
        rtol = tol.orthogonality if rtol is None else rtol
        if self.size == 0:
            return
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise LinearlyDependentError("basis vector norms deviate from 1")
        gram = self.vectors @ self.vectors.T
        off = gram - np.eye(self.size)
        if np.max(np.abs(off)) > rtol:
            raise LinearlyDependentError("basis vectors are not mutually orthogonal")

    def extended(self, w) -> "OrthonormalBasis":
        """Append a new direction after re-orthogonalizing it against the basis.

        Components along existing directions are subtracted before
        renormalizing; a residual shorter than the orthogonality tolerance
        is rejected as linearly dependent. The guard matters because
        learners run on projected data can return directions with small
        numerical leakage into the removed span.
        """
        v = _as_vector(w, "direction")
        if v.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"direction has length {v.shape[0]}, basis dimension is {self.dim}"
            )
        if self.size == self.dim:
            raise BasisFullError("basis already spans the full space")
        norm_in = float(np.linalg.norm(v))
        if norm_in < tol.zero_vector:
            raise ZeroVectorError("cannot extend basis with a zero direction")
        residual = v - self.vectors.T @ (self.vectors @ v)
        # Second Gram-Schmidt pass: cheap and removes first-pass rounding.
        residual -= self.vectors.T @ (self.vectors @ residual)
        res_norm = float(np.linalg.norm(residual))
        if res_norm < tol.orthogonality * norm_in:
            raise LinearlyDependentError(
                "new direction lies in the span of the existing basis"
            )
        new = np.vstack([self.vectors, residual / res_norm])
        return OrthonormalBasis(self.dim, new)

    def truncated(self, k: int) -> "OrthonormalBasis":
        """First k directions as a basis of their own."""
        if not 0 <= k <= self.size:
            raise DimensionMismatchError(f"k={k} out of range for basis of size {self.size}")
        return OrthonormalBasis(self.dim, self.vectors[:k])


def projector_from_basis(basis: OrthonormalBasis) -> np.ndarray:
    """The p x p projector O = I - sum_j w_j w_j^T onto the basis complement.

    O is symmetric, idempotent, and has rank p - k for a basis of size k.
    """
    eye = np.eye(basis.dim)
    if basis.size == 0:
        return eye
    return eye - basis.vectors.T @ basis.vectors


def project_rows_orthogonal(X, basis: OrthonormalBasis) -> np.ndarray:
    """Project each row of X onto the orthogonal complement of the basis.

    Returns X_perp = X O without forming O: the rank-k correction
    X (V^T V) is cheaper than a p x p product for small bases.
    """
    A = as_feature_matrix(X)
    if A.shape[1] != basis.dim:
        raise DimensionMismatchError(
            f"matrix has {A.shape[1]} columns, basis dimension is {basis.dim}"
        )
    if basis.size == 0:
        return A.copy()
    V = basis.vectors
    return A - (A @ V.T) @ V


def complete_basis(basis: OrthonormalBasis) -> np.ndarray:
    """Orthonormal columns spanning the complement of the basis.

    Computed by Householder QR of the p x k matrix of kept directions,
    taking the trailing p - k columns of the full orthogonal factor.
    Any orthonormal complement is equivalent up to rotation; QR is
    numerically stabler than classical Gram-Schmidt.
    """
    k, p = basis.size, basis.dim
    if k == p:
        raise BasisFullError("basis is complete; the complement is empty")
    if k == 0:
        return np.eye(p)
    q, _ = np.linalg.qr(basis.vectors.T, mode="complete")
    return q[:, k:]


def schur_deflate(X, omega) -> np.ndarray:
    """Column-space deflation of X against the direction X omega.

    Returns (I - (Xw)(Xw)^T / (w^T X^T X w)) X. This projects the columns
    of X orthogonal to the vector X omega, which coincides with the row
    projection X (I - w w^T) exactly when X has orthonormal columns, and
    differs otherwise.
    """
    A = as_feature_matrix(X)
    w = _as_vector(omega, "direction")
    if w.shape[0] != A.shape[1]:
        raise DimensionMismatchError(
            f"direction has length {w.shape[0]}, matrix has {A.shape[1]} columns"
        )
    u = A @ w
    denom = float(u @ u)
    if np.sqrt(denom) < tol.zero_vector:
        raise DegenerateDirectionError("X omega has numerically zero norm")
    return A - np.outer(u, (u @ A) / denom)
