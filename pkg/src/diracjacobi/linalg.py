"""Rank-revealing linear algebra for pointwise subbundle checks.

All subspaces are handled as column spans of small dense matrices; ranks are
counted from singular values against a threshold relative to a shared
reference scale, so that mutual-containment tests are symmetric.
"""

from __future__ import annotations

import numpy as np

DEFAULT_RTOL = 1e-9


def svdvals(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def matrix_rank(M: np.ndarray, rtol: float = DEFAULT_RTOL, ref: float | None = None) -> int:
    """Number of singular values above rtol * ref (ref defaults to s_max of M)."""
    s = svdvals(M)
    if s.size == 0:
        return 0
    scale = ref if ref is not None else float(s[0])
    if scale == 0.0:
        return 0
    return int(np.sum(s > rtol * scale))


def null_space(M: np.ndarray, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of M."""
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    U, s, Vt = np.linalg.svd(M)
    scale = float(s[0]) if s.size else 0.0
    if scale == 0.0:
        return np.eye(M.shape[1])
    r = int(np.sum(s > rtol * scale))
    return Vt[r:].T


def orthonormal_columns(M: np.ndarray, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Orthonormal basis of the column span."""
    if M.size == 0 or M.shape[1] == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    scale = float(s[0]) if s.size else 0.0
    if scale == 0.0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(s > rtol * scale))
    return U[:, :r]


def spans_equal(A: np.ndarray, B: np.ndarray, rtol: float = DEFAULT_RTOL) -> bool:
    """Mutual containment: rank(A) == rank(B) == rank([A | B]).

    Columns are normalized first so that wildly different generator scales
    (e.g. an e^t factor) cannot skew the shared singular-value threshold.
    """

    def unit_cols(M: np.ndarray) -> np.ndarray:
        if M.size == 0:
            return M
        norms = np.linalg.norm(M, axis=0)
        keep = norms > 0
        return M[:, keep] / norms[keep]

    A = unit_cols(np.asarray(A, dtype=float))
    B = unit_cols(np.asarray(B, dtype=float))
    if A.shape[1] == 0 and B.shape[1] == 0:
        return True
    stacked = np.hstack([A, B]) if A.size and B.size else (A if A.size else B)
    ref_vals = svdvals(stacked)
    ref = float(ref_vals[0]) if ref_vals.size else 0.0
    if ref == 0.0:
        return True
    ra = matrix_rank(A, rtol, ref)
    rb = matrix_rank(B, rtol, ref)
    rab = matrix_rank(stacked, rtol, ref)
    return ra == rb == rab


def membership_residual(B: np.ndarray, v: np.ndarray) -> float:
    """Scaled least-squares distance of v from the column span of B."""
    v = np.asarray(v, dtype=float)
    if B.size == 0 or B.shape[1] == 0:
        return float(np.linalg.norm(v)) / (1.0 + float(np.linalg.norm(v)))
    sol, *_ = np.linalg.lstsq(B, v, rcond=None)
    resid = float(np.linalg.norm(B @ sol - v))
    return resid / (1.0 + float(np.linalg.norm(v)))


def least_squares_coefficients(B: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, float]:
    """Best coefficients c with B c ~ v, plus the scaled residual."""
    v = np.asarray(v, dtype=float)
    if B.size == 0 or B.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(v)) / (1.0 + float(np.linalg.norm(v)))
    sol, *_ = np.linalg.lstsq(B, v, rcond=None)
    resid = float(np.linalg.norm(B @ sol - v)) / (1.0 + float(np.linalg.norm(v)))
    return sol, resid
