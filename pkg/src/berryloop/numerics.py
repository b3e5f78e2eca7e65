"""Dense real linear algebra kernel.

Symmetric eigendecomposition with a deterministic sign convention,
determinants, and occupied-orbital overlap matrices.  Everything here is
a thin, validated layer over LAPACK (through numpy); the contracts that
matter to the rest of the package are the ordering and sign conventions,
not the factorization algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EigenSystem", "eig_sym", "det", "occupied_overlap"]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def _as_square_real(m, name):
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def fix_vector_signs(vectors):
    """Apply the package-wide sign convention column by column.

    The largest-magnitude component of each column is made positive;
    magnitude ties resolve to the lowest index (argmax behaviour).
    Returns the same array, modified in place.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[idx, np.arange(vectors.shape[1])] < 0.0
    vectors[:, flip] *= -1.0
    return vectors


def eig_sym(m) -> EigenSystem:
    """Eigendecompose a real symmetric matrix.

    Eigenvalues come back ascending; eigenvectors are orthonormal columns
    with the deterministic sign convention of :func:`fix_vector_signs`,
    so bitwise-identical input yields bitwise-identical output.

    Raises
    ------
    ValueError
        If the matrix is not square, not finite, or not exactly symmetric
        as stored.
    """
    a = _as_square_real(m, "matrix")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric as stored")
    values, vectors = np.linalg.eigh(a)
    fix_vector_signs(vectors)
    return EigenSystem(values=values, vectors=vectors)


def det(m) -> float:
    """Determinant of a square real matrix (LU factorization)."""
    a = _as_square_real(m, "matrix")
    return float(np.linalg.det(a))


def occupied_overlap(bra, ket) -> np.ndarray:
    """Overlap matrix between two sets of occupied orbitals.

    Both arguments are ``k x n`` arrays (one orbital per row, ``n`` the
    single-particle dimension).  Entry ``(a, b)`` is the inner product of
    bra orbital ``a`` with ket orbital ``b``.
    """
    b = np.asarray(bra, dtype=float)
    k = np.asarray(ket, dtype=float)
    if b.ndim != 2 or k.ndim != 2 or b.shape != k.shape:
        raise ValueError(
            f"orbital sets must share one k x n shape, got {b.shape} vs {k.shape}"
        )
    return b @ k.T
