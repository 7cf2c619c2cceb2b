"""Restricted-isometry constants by enumeration and the recovery bounds built on them.

All constants here are exact maxima over every support (or cosupport) of the
requested size, so enumeration is capped by an explicit budget instead of
falling back to sampling.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import BudgetExceeded, InvalidDelta
from .linalg import least_squares

RIP_BUDGET = 10**6
OMEGA_RIP_BUDGET = 10**5
RIP_BOUND = 0.445
DEFAULT_CONFIDENCE = 1.0


@dataclass
class RipReport:
    order: int
    delta: float
    witness_support: tuple
    vacuous: bool = False
    evaluated: int = 0

    def to_json(self):
        return {"order": self.order, "delta": self.delta,
                "witness_support": list(self.witness_support),
                "vacuous": self.vacuous, "evaluated": self.evaluated}


@dataclass
class BoundReport:
    delta: float
    c_delta: float
    gamma: float
    b_iterations: float = math.nan
    awgn_holds: bool = False
    awgn_lhs: float = math.nan
    awgn_rhs: float = math.nan
    oracle_bound: float = math.nan
    worstcase_bound: float = math.nan
    failure_probability: float = math.nan
    notes: list = field(default_factory=list)

    def to_json(self):
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, float) and not math.isfinite(val):
                val = None
            out[key] = val
        return out


def _deviation(eigs):
    return max(abs(eigs[0] - 1.0), abs(eigs[-1] - 1.0))


def support_deviation(M, T):
    """``max(|lambda_min - 1|, |lambda_max - 1|)`` of the Gram matrix of ``M[:, T]``."""
    A = np.asarray(M, dtype=float)[:, list(T)]
    return _deviation(np.linalg.eigvalsh(A.T @ A))


def rip_constant(M, k, budget=RIP_BUDGET):
    """Exact RIP constant of order ``k`` by enumerating all ``C(n, k)`` supports.

    Columns are used as given; callers wanting the unit-norm convention should
    normalise first. The witness is the lexicographically first support that
    attains the maximum.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[1]
    if not 0 <= k <= n:
        raise ValueError("order %d outside [0, %d]" % (k, n))
    total = comb(n, k)
    if total > budget:
        raise BudgetExceeded("C(%d, %d) = %d supports exceeds budget %d" % (n, k, total, budget))
    if k == 0:
        return RipReport(0, 0.0, (), vacuous=True, evaluated=1)
    G = M.T @ M
    best, witness = -1.0, None
    for T in itertools.combinations(range(n), k):
        d = _deviation(np.linalg.eigvalsh(G[np.ix_(T, T)]))
        if d > best:
            best, witness = d, T
    return RipReport(k, float(best), witness, evaluated=total)


def omega_rip_constant(M, Omega, s, budget=OMEGA_RIP_BUDGET):
    """Omega-RIP constant of order ``s``.

    For every row subset of size ``s`` take an orthonormal basis ``V`` of the
    null space of those rows and measure how far the eigenvalues of
    ``(M V)^T (M V)`` stray from one. Cosupports whose null space is trivial
    contribute nothing; if all are trivial the report is flagged vacuous.
    """
    M = np.asarray(M, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    p, n = Omega.shape
    if M.shape[1] != n:
        raise ValueError("M and Omega disagree on the signal dimension")
    if not 0 <= s <= p:
        raise ValueError("order %d outside [0, %d]" % (s, p))
    total = comb(p, s)
    if total > budget:
        raise BudgetExceeded("C(%d, %d) = %d cosupports exceeds budget %d" % (p, s, total, budget))
    best, witness = 0.0, None
    for Lam in itertools.combinations(range(p), s):
        V = _null_basis(Omega[list(Lam)], n)
        if V.shape[1] == 0:
            continue
        MV = M @ V
        d = _deviation(np.linalg.eigvalsh(MV.T @ MV))
        if witness is None or d > best:
            best, witness = d, Lam
    if witness is None:
        return RipReport(s, 0.0, (), vacuous=True, evaluated=total)
    return RipReport(s, float(best), witness, evaluated=total)


def _null_basis(rows, n, rtol=1e-10):
    if rows.shape[0] == 0:
        return np.eye(n)
    _, sv, Vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    return Vt[rank:].T


def c_delta(delta):
    return (1.0 - delta**2) * (1.0 - delta)


def gamma_rate(delta):
    c = c_delta(delta)
    return c - delta**2 / c


def convergence_bound(delta, y_norm_sq, eps_t, k):
    """Worst-case iteration count of noiseless OLSR to reach residual ``eps_t``.

    ``b = k (1 + ln(||y||^2 / (eps_t e^{c_delta})) / gamma)``.
    """
    if eps_t <= 0:
        raise ValueError("eps_t must be positive")
    if not 0 <= delta < 1:
        raise InvalidDelta("delta must lie in [0, 1)")
    g = gamma_rate(delta)
    if g <= 0:
        raise InvalidDelta("gamma = %.3g <= 0 for delta = %.4g" % (g, delta))
    c = c_delta(delta)
    return k * (1.0 + (math.log(y_norm_sq / eps_t) - c) / g)


def failure_probability(n, a=DEFAULT_CONFIDENCE):
    """Probability bound ``(sqrt(pi (1+a) log n) n^a)^{-1}`` of the noise sup event."""
    return 1.0 / (math.sqrt(math.pi * (1.0 + a) * math.log(n)) * n**a)


def awgn_condition(delta, sigma, k, n, a, y0_norm_sq):
    """Signal-to-noise condition for exact support recovery under white noise.

    Returns ``(holds, lhs, rhs)`` with ``lhs = ||y0||^2 / (sigma^2 k)``.
    """
    if not 0 <= delta < 1:
        raise InvalidDelta("delta must lie in [0, 1)")
    denom = (1.0 - delta) * (1.0 - delta**2) - delta
    if denom <= 0:
        raise InvalidDelta("condition is vacuous: (1-d)(1-d^2) - d = %.3g <= 0" % denom)
    rhs = (1.0 + math.sqrt(1.0 - delta)) ** 2 * 2.0 * (1.0 + a) * math.log(n) / denom**2
    lhs = math.inf if sigma == 0 else y0_norm_sq / (sigma**2 * k)
    return lhs >= rhs, lhs, rhs


def oracle_error_bound(delta, sigma, k, n, a=DEFAULT_CONFIDENCE):
    """Error bound for an estimate that recovered the true support."""
    return math.sqrt(2.0 * (1.0 + a) * math.log(n)) / (1.0 - delta) * math.sqrt(k) * sigma


def worstcase_constant(delta):
    denom = (1.0 - delta) * (1.0 - delta**2) - delta
    if denom <= 0:
        raise InvalidDelta("worst-case constant undefined for delta = %.4g" % delta)
    return (1.0 + delta**2) * (1.0 + math.sqrt(1.0 - delta)) / denom + 1.0 / (1.0 - delta)


def worstcase_error_bound(delta, sigma, k, n, a=DEFAULT_CONFIDENCE):
    return worstcase_constant(delta) * math.sqrt(2.0 * k * sigma**2 * (1.0 + a) * math.log(n))


def oracle_estimate(M, L, y, delta=0.0, sigma=0.0, a=DEFAULT_CONFIDENCE):
    """Least-squares fit on a known support plus the two error bounds.

    Returns ``(xh, bound_known_support, bound_worst_case)``; ``xh`` is a
    full-length vector. The worst-case bound is ``nan`` when its constant is
    undefined for ``delta``.
    """
    M = np.asarray(M, dtype=float)
    L = list(L)
    n = M.shape[1]
    xh = np.zeros(n)
    if L:
        xh[L] = least_squares(M[:, L], y)
    k = len(L)
    b1 = oracle_error_bound(delta, sigma, k, n, a)
    try:
        b2 = worstcase_error_bound(delta, sigma, k, n, a)
    except InvalidDelta:
        b2 = math.nan
    return xh, b1, b2


def bound_report(delta, k, n=None, sigma=None, y0_norm_sq=None, eps_t=None,
                 a=DEFAULT_CONFIDENCE):
    """Evaluate every closed-form quantity that is defined for the inputs."""
    rep = BoundReport(delta=delta, c_delta=c_delta(delta), gamma=gamma_rate(delta))
    if eps_t is not None and y0_norm_sq is not None:
        try:
            rep.b_iterations = convergence_bound(delta, y0_norm_sq, eps_t, k)
        except InvalidDelta as exc:
            rep.notes.append(str(exc))
    if n is not None and sigma is not None:
        rep.failure_probability = failure_probability(n, a)
        rep.oracle_bound = oracle_error_bound(delta, sigma, k, n, a)
        try:
            rep.worstcase_bound = worstcase_error_bound(delta, sigma, k, n, a)
        except InvalidDelta as exc:
            rep.notes.append(str(exc))
        if y0_norm_sq is not None:
            try:
                rep.awgn_holds, rep.awgn_lhs, rep.awgn_rhs = awgn_condition(
                    delta, sigma, k, n, a, y0_norm_sq)
            except InvalidDelta as exc:
                rep.notes.append(str(exc))
    return rep


__all__ = [
    "RipReport", "BoundReport", "rip_constant", "omega_rip_constant", "support_deviation",
    "c_delta", "gamma_rate", "convergence_bound", "awgn_condition", "oracle_estimate",
    "oracle_error_bound", "worstcase_constant", "worstcase_error_bound",
    "failure_probability", "bound_report",
]
