"""Group inverse of rank-(N-1) matrices with positive kernel vectors.

For a matrix A with A b = 0, A^T c = 0 (b, c > 0, <b, c> = 1) and
D0 = trace(adj A) != 0, the group inverse is

    A# = (adj(A + t b c^T) - D0 b c^T) / (t D0)

for any t != 0. This module evaluates that formula, provides an
independent solve-based path for cross-checking, and certifies
definiteness of symmetric matrices on hyperplanes.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import null_space

from .errors import (
    DimensionMismatch,
    KernelMismatch,
    NotSymmetric,
    PreconditionViolated,
    SingularD0,
)

KERNEL_TOL = 1e-10
RANK_TOL = 1e-10
D0_TOL = 1e-12
SYM_TOL = 1e-10
PSD_TOL = 1e-10
SMALL_COFACTOR_N = 6


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


@lru_cache(maxsize=None)
def _deletion_index(n):
    return np.array([[k for k in range(n) if k != i] for i in range(n)])


def _cofactor_adjugate(A):
    n = A.shape[0]
    keep = _deletion_index(n)
    minors = A[keep[:, None, :, None], keep[None, :, None, :]]
    cof = np.linalg.det(minors)
    signs = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    return (signs * cof).T


def _svd_adjugate(A):
    # adj(U S V^T) = det(U) det(V) V adj(S) U^T, valid for singular A too.
    U, s, Vt = np.linalg.svd(A)
    n = s.shape[0]
    adj_s = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    sign = np.linalg.det(U) * np.linalg.det(Vt)
    return sign * (Vt.T * adj_s) @ U.T


def adjugate(A) -> np.ndarray:
    """Classical adjoint of a square matrix, defined for singular A as well.

    Small matrices use cofactors; larger ones use an SVD factorization, which
    stays well defined when A is rank deficient.
    """
    A = _square(A)
    n = A.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n <= SMALL_COFACTOR_N:
        return _cofactor_adjugate(A)
    return _svd_adjugate(A)


@dataclass(frozen=True)
class RankDeficientMatrix:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class GroupInverseResult:
    Asharp: np.ndarray
    D0: float


def rank_deficient(A, b, c, check_rank: bool = True) -> RankDeficientMatrix:
    """Validate kernel data and rescale ``c`` so that <b, c> = 1."""
    A = _square(A)
    n = A.shape[0]
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if b.shape != (n,) or c.shape != (n,):
        raise DimensionMismatch("kernel vectors must match the matrix size")
    if np.any(b <= 0) or np.any(c <= 0):
        raise KernelMismatch("kernel vectors must be strictly positive")
    c = c / float(b @ c)
    scale = np.linalg.norm(A, 2)
    if np.linalg.norm(A @ b) > KERNEL_TOL * scale * np.linalg.norm(b):
        raise KernelMismatch("A b != 0")
    if np.linalg.norm(A.T @ c) > KERNEL_TOL * scale * np.linalg.norm(c):
        raise KernelMismatch("A^T c != 0")
    if check_rank and n >= 2:
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-2] <= RANK_TOL * scale:
            raise SingularD0("rank of A is below N-1")
    return RankDeficientMatrix(A, b, c)


def principal_minor_sum(A) -> float:
    A = _square(A)
    n = A.shape[0]
    if n == 1:
        return 1.0
    return float(sum(np.linalg.det(np.delete(np.delete(A, i, 0), i, 1)) for i in range(n)))


def group_inverse(rdm: RankDeficientMatrix, t=None) -> GroupInverseResult:
    """Group inverse through the adjugate of the rank-one completion.

    Parameters
    ----------
    rdm : RankDeficientMatrix
    t : float, optional
        Completion weight; defaults to the infinity norm of A. The result does
        not depend on t in exact arithmetic.
    """
    A, b, c = rdm.A, rdm.b, rdm.c
    n = A.shape[0]
    if t is None:
        t = float(np.linalg.norm(A, np.inf))
    if t == 0:
        raise SingularD0("zero matrix has no rank N-1 group inverse")
    D0 = float(np.trace(adjugate(A)))
    norm = np.linalg.norm(A, 2)
    if abs(D0) <= D0_TOL * norm ** (n - 1):
        raise SingularD0(f"trace(adj A) = {D0!r} is numerically zero")
    bc = np.outer(b, c)
    Asharp = (adjugate(A + t * bc) - D0 * bc) / (t * D0)
    return GroupInverseResult(Asharp, D0)


def group_inverse_oracle(rdm: RankDeficientMatrix) -> np.ndarray:
    """Solve-based group inverse, independent of the adjugate route.

    Uses (A + s b c^T)^{-1} = A# + b c^T / s, then strips the rank-one term by
    multiplying with I - b c^T. ``s`` is the infinity norm of A.
    """
    A, b, c = rdm.A, rdm.b, rdm.c
    s = float(np.linalg.norm(A, np.inf)) or 1.0
    proj = np.eye(A.shape[0]) - np.outer(b, c)
    Z = np.linalg.solve(A + s * np.outer(b, c), proj)
    return proj @ Z


def group_inverse_batch(A, b, c, t=None):
    """Vectorized group inverse for a stack of matrices of shape (..., N, N).

    ``b`` and ``c`` broadcast against ``A[..., 0]`` and must satisfy
    <b, c> = 1. No validation is performed; this is the inner-loop path.
    """
    A = np.asarray(A, dtype=float)
    b = np.broadcast_to(np.asarray(b, dtype=float), A.shape[:-1])
    c = np.broadcast_to(np.asarray(c, dtype=float), A.shape[:-1])
    if t is None:
        t = np.max(np.sum(np.abs(A), axis=-1), axis=-1)
    t = np.asarray(t, dtype=float)[..., None, None]
    bc = b[..., :, None] * c[..., None, :]
    return np.linalg.inv(A + t * bc) - bc / t


@dataclass(frozen=True)
class SubspaceCertificate:
    min_eig: float
    ok: bool


def orthonormal_complement(v) -> np.ndarray:
    """Columns form an orthonormal basis of the hyperplane orthogonal to v."""
    v = np.asarray(v, dtype=float)
    return null_space(v[None, :])


def _check_symmetric(M):
    M = _square(M)
    norm = np.linalg.norm(M, 2)
    if np.linalg.norm(M - M.T, 2) > SYM_TOL * max(norm, np.finfo(float).tiny):
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    return 0.5 * (M + M.T), norm


def psd_on_subspace(Msym, kernel_dir) -> SubspaceCertificate:
    """Smallest eigenvalue of Msym restricted to the complement of kernel_dir."""
    M, norm = _check_symmetric(Msym)
    Q = orthonormal_complement(kernel_dir)
    if Q.shape[1] == 0:
        return SubspaceCertificate(float("inf"), True)
    min_eig = float(np.linalg.eigvalsh(Q.T @ M @ Q)[0])
    return SubspaceCertificate(min_eig, bool(min_eig >= -PSD_TOL * norm))


def det_monotone(A, B) -> bool:
    """Check det(A) >= det(B) for symmetric PSD matrices with A - B PSD."""
    A, na = _check_symmetric(A)
    B, nb = _check_symmetric(B)
    if A.shape != B.shape:
        raise DimensionMismatch("A and B must have the same shape")
    scale = max(1.0, na)
    for name, mat in (("A", A), ("B", B), ("A - B", A - B)):
        if np.linalg.eigvalsh(mat)[0] < -PSD_TOL * scale:
            raise PreconditionViolated(f"{name} is not positive semidefinite")
    det_a = float(np.linalg.det(A))
    det_b = float(np.linalg.det(B))
    return det_a >= det_b - 1e-10 * max(1.0, abs(det_a))
