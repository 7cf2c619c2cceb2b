"""Exhaustive reference solvers for small sparse and cosparse instances.

Subsets are visited in lexicographic order and a later subset replaces the
incumbent only when it is strictly better, so ties resolve to the
lexicographically smallest subset.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import BudgetExceeded, SingularSystem

log = logging.getLogger(__name__)

SPARSE_BUDGET = 10**6
COSPARSE_BUDGET = 10**5


@dataclass
class ExhaustiveResult:
    best_support: tuple
    best_residual_sq: float
    evaluated: int
    skipped: list = field(default_factory=list)

    def to_json(self):
        return {"best_support": list(self.best_support),
                "best_residual_sq": float(self.best_residual_sq),
                "evaluated": int(self.evaluated),
                "skipped": [list(s) for s in self.skipped]}


def _sparse_residual(M, y, T):
    if not T:
        return float(y @ y)
    Q, R = np.linalg.qr(M[:, list(T)])
    if np.min(np.abs(np.diag(R))) < 1e-10 * np.max(np.abs(np.diag(R))):
        raise SingularSystem("support %r is rank deficient" % (T,))
    r = y - Q @ (Q.T @ y)
    return float(r @ r)


def exhaustive_sparse(M, y, k, budget=SPARSE_BUDGET, supports=None):
    """Best ``k``-term least-squares approximation of ``y`` over columns of ``M``.

    ``supports`` overrides the enumeration order (used to cross-check order
    independence); rank-deficient supports are skipped and reported.
    """
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = M.shape[1]
    total = comb(n, k)
    if total > budget:
        raise BudgetExceeded("C(%d, %d) = %d supports exceeds budget %d" % (n, k, total, budget))
    it = itertools.combinations(range(n), k) if supports is None else supports
    best, best_T, count, skipped = np.inf, None, 0, []
    for T in it:
        count += 1
        try:
            res = _sparse_residual(M, y, T)
        except SingularSystem:
            skipped.append(tuple(T))
            continue
        if res < best or (res == best and tuple(T) < best_T):
            best, best_T = res, tuple(T)
    if skipped:
        log.info("skipped %d rank-deficient supports", len(skipped))
    return ExhaustiveResult(best_T if best_T is not None else (), best, count, skipped)


def cosparse_objective(M, Omega, y, Lam):
    """``min ||Omega_Lam x||^2`` subject to ``M x = y`` via the KKT system."""
    M = np.asarray(M, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    m, n = M.shape
    OL = Omega[list(Lam)]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = 2.0 * OL.T @ OL
    K[:n, n:] = M.T
    K[n:, :n] = M
    rhs = np.concatenate([np.zeros(n), y])
    s = np.linalg.svd(K, compute_uv=False)
    if s.size and (s[0] == 0 or s[-1] < 1e-10 * s[0]):
        raise SingularSystem("KKT system singular for cosupport %r" % (tuple(Lam),))
    x = np.linalg.solve(K, rhs)[:n]
    return float(np.sum((OL @ x) ** 2)), x


def exhaustive_cosparse(M, Omega, y, l, budget=COSPARSE_BUDGET):
    """Cosupport of size ``l`` with the smallest relaxed analysis objective."""
    Omega = np.asarray(Omega, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    p = Omega.shape[0]
    total = comb(p, l)
    if total > budget:
        raise BudgetExceeded("C(%d, %d) = %d cosupports exceeds budget %d" % (p, l, total, budget))
    best, best_L, count, skipped = np.inf, None, 0, []
    for Lam in itertools.combinations(range(p), l):
        count += 1
        try:
            obj, _ = cosparse_objective(M, Omega, y, Lam)
        except SingularSystem:
            skipped.append(Lam)
            log.info("skipped singular cosupport %r", Lam)
            continue
        if obj < best:
            best, best_L = obj, Lam
    return ExhaustiveResult(best_L if best_L is not None else (), best, count, skipped)
