"""Dense linear-algebra kernel shared by the pursuits.

Projections and least squares go through the SVD so that rank problems are
caught with a relative singular-value threshold. The Gram inverse of a growing
or shrinking column set is maintained by rank-one updates in
:class:`InverseCache`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateColumn, InvalidIndex, RankDeficient

RANK_RTOL = 1e-10
DEGENERATE_TOL = 1e-10
REFRESH_EVERY = 64


def _thin_svd(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix, got shape %r" % (A.shape,))
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], 0)), np.zeros(0), np.zeros((0, 0))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        raise RankDeficient(
            "matrix of shape %r is rank deficient (sigma_min/sigma_max = %.3g)"
            % (A.shape, 0.0 if s[0] == 0 else s[-1] / s[0]))
    return U, s, Vt


def check_full_column_rank(A):
    _thin_svd(A)


def residual_projection(A, v):
    """Return ``R_A v = v - A (A^T A)^{-1} A^T v``.

    Raises :class:`RankDeficient` when ``A`` does not have full column rank.
    """
    U, _, _ = _thin_svd(A)
    v = np.asarray(v, dtype=float)
    if v.shape[0] != U.shape[0]:
        raise ValueError("vector length %d does not match %d rows"
                         % (v.shape[0], U.shape[0]))
    return v - U @ (U.T @ v)


def least_squares(A, y):
    """Least-squares coefficients ``(A^T A)^{-1} A^T y`` via the thin SVD."""
    U, s, Vt = _thin_svd(A)
    return Vt.T @ ((U.T @ np.asarray(y, dtype=float)) / s)


def null_space_basis(M):
    """Orthonormal basis of the null space of a full-row-rank ``M``.

    For ``M`` of shape ``(m, n)`` with ``m <= n`` the result has shape
    ``(n, n - m)``. A zero-row ``M`` gives the identity and a square one an
    empty ``(n, 0)`` basis.
    """
    M = np.asarray(M, dtype=float)
    m, n = M.shape
    if m > n:
        raise RankDeficient("null_space_basis expects m <= n, got %r" % (M.shape,))
    if m == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        raise RankDeficient("M does not have full row rank")
    return Vt[m:].T.copy()


@dataclass
class InverseCache:
    """Inverse Gram matrix ``B = (A^T A)^{-1}`` of a tracked column set ``A``.

    ``A`` is carried along so that ``B`` can be rebuilt from scratch every
    :data:`REFRESH_EVERY` rank-one updates.
    """

    A: np.ndarray
    B: np.ndarray
    updates: int = field(default=0)

    @classmethod
    def empty(cls, rows):
        return cls(np.zeros((rows, 0)), np.zeros((0, 0)))

    @classmethod
    def from_columns(cls, A):
        A = np.array(A, dtype=float)
        check_full_column_rank(A)
        return cls(A, _direct_inverse(A))

    @property
    def order(self):
        return self.B.shape[0]

    def refreshed(self):
        return InverseCache(self.A, _direct_inverse(self.A), 0)


def _direct_inverse(A):
    if A.shape[1] == 0:
        return np.zeros((0, 0))
    B = np.linalg.inv(A.T @ A)
    return 0.5 * (B + B.T)


def _maybe_refresh(cache):
    if cache.updates >= REFRESH_EVERY:
        return cache.refreshed()
    return cache


def inverse_add(cache, a):
    """Append column ``a`` to the tracked set.

    Returns ``(new_cache, e_hat, r)`` with ``e_hat = A^+ a`` and
    ``r = ||R_A a||^2``.
    """
    a = np.asarray(a, dtype=float)
    A, B = cache.A, cache.B
    if a.shape[0] != A.shape[0]:
        raise ValueError("column length %d does not match %d rows" % (a.shape[0], A.shape[0]))
    e_hat = B @ (A.T @ a)
    resid = a - A @ e_hat
    r = float(resid @ resid)
    if r < DEGENERATE_TOL * max(float(a @ a), np.finfo(float).tiny):
        raise DegenerateColumn("column lies numerically in the tracked span (r=%.3g)" % r)
    k = B.shape[0]
    Bt = np.empty((k + 1, k + 1))
    Bt[:k, :k] = B + np.outer(e_hat, e_hat) / r
    Bt[:k, k] = -e_hat / r
    Bt[k, :k] = -e_hat / r
    Bt[k, k] = 1.0 / r
    new = InverseCache(np.column_stack([A, a]), Bt, cache.updates + 1)
    return _maybe_refresh(new), e_hat, r


def inverse_remove(cache, i):
    """Delete tracked column ``i``.

    Returns ``(new_cache, e_hat, r)`` where ``e_hat`` is minus column ``i`` of
    the old inverse without its ``i``-th entry and ``r = 1 / B(i, i)``.
    """
    k = cache.order
    if not 0 <= i < k:
        raise InvalidIndex("column %r out of range for order %d" % (i, k))
    Bt = cache.B
    keep = np.r_[0:i, i + 1:k]
    e_hat = -Bt[keep, i]
    r = 1.0 / Bt[i, i]
    B = Bt[np.ix_(keep, keep)] - r * np.outer(e_hat, e_hat)
    new = InverseCache(cache.A[:, keep], B, cache.updates + 1)
    return _maybe_refresh(new), e_hat, r


def column_contributions(xh, cache):
    """Residual increase caused by dropping each column: ``xh(i)^2 / B(i, i)``."""
    return np.asarray(xh, dtype=float) ** 2 / np.diag(cache.B)


def least_contributing_index(xh, cache):
    """Index of the column whose removal increases the residual the least.

    Ties go to the smallest index.
    """
    if cache.order == 0:
        raise ValueError("empty support has no least contributing column")
    return int(np.argmin(column_contributions(xh, cache)))
