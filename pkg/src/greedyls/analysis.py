"""Greedy pursuits for the cosparse analysis model.

The signal is assumed orthogonal to many rows of an analysis operator
``Omega``; a cosupport ``Lambda`` is scored by the relaxed objective

    min_x ||Omega_Lambda x||^2  subject to  M x = y.

Writing ``x = M^+ y + Q z`` with ``Q`` an orthonormal basis of null(M), the
objective becomes a least-squares residual in ``z``. With ``L = Q^T Omega^T``
(stored transposed as ``Lt = Omega Q``) the fast solvers keep

* ``Gamma = (L_Lambda L_Lambda^T)^{-1}``
* ``b     = Omega M^+ y``
* ``gamma = L^T Gamma L_Lambda b_Lambda``
* ``alpha = diag(L^T Gamma L)``

so that the objective is ``||b_Lambda||^2 - ||gamma_Lambda||^2``, dropping row
``i`` lowers it by ``(b_i - gamma_i)^2 / (1 - alpha_i)`` and adding row ``j``
raises it by ``(b_j - gamma_j)^2 / (1 + alpha_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (BisectionFailed, DegeneratePivot, InvalidProblem,
                     IterationCapExceeded, RankDeficient, SingularSystem)
from .linalg import REFRESH_EVERY, null_space_basis

PIVOT_TOL = 1e-10
SINGULAR_RTOL = 1e-10
PROGRESS_RTOL = 1e-12
LAMBDA_RANGE = (1e-12, 1e12)
NORM_RTOL = 1e-6


@dataclass(frozen=True)
class AnalysisOperators:
    """Quantities that depend only on ``(M, Omega)``; safe to share between solves."""

    M: np.ndarray
    Omega: np.ndarray
    Q: np.ndarray
    Mpinv: np.ndarray
    Lt: np.ndarray
    OMpinv: np.ndarray

    @classmethod
    def build(cls, M, Omega):
        M = np.array(M, dtype=float)
        Omega = np.array(Omega, dtype=float)
        if M.ndim != 2 or Omega.ndim != 2 or M.shape[1] != Omega.shape[1]:
            raise InvalidProblem("M and Omega must be matrices with equal column counts")
        m, n = M.shape
        if m > n:
            raise InvalidProblem("analysis problems need m <= n")
        try:
            Q = null_space_basis(M)
        except RankDeficient as exc:
            raise InvalidProblem("M must have full row rank") from exc
        Mpinv = np.linalg.pinv(M) if m else np.zeros((n, 0))
        return cls(M, Omega, Q, Mpinv, Omega @ Q, Omega @ Mpinv)

    @property
    def shape(self):
        """``(m, n, p)``."""
        return self.M.shape[0], self.M.shape[1], self.Omega.shape[0]


@dataclass
class AnalysisProblem:
    M: np.ndarray
    Omega: np.ndarray
    y: np.ndarray
    l: Optional[int] = None
    eps_t: Optional[float] = None
    eps_w: Optional[float] = None
    ops: Optional[AnalysisOperators] = field(default=None, repr=False)

    def __post_init__(self):
        if self.ops is None:
            self.ops = AnalysisOperators.build(self.M, self.Omega)
        self.M, self.Omega = self.ops.M, self.ops.Omega
        m, n, p = self.ops.shape
        self.y = np.array(self.y, dtype=float).ravel()
        if self.y.shape[0] != m:
            raise InvalidProblem("y has length %d, expected %d" % (self.y.shape[0], m))
        if (self.l is None) == (self.eps_t is None):
            raise InvalidProblem("give exactly one of l or eps_t")
        if self.l is not None and not 0 <= self.l <= p:
            raise InvalidProblem("cosparsity l=%r outside [0, %d]" % (self.l, p))
        if self.eps_t is not None and self.eps_t < 0:
            raise InvalidProblem("eps_t must be non-negative")
        if self.eps_w is not None and self.eps_w < 0:
            raise InvalidProblem("eps_w must be non-negative")
        if _gram_inverse(self.ops.Lt) is None:
            raise InvalidProblem("B_Lambda is singular at the full cosupport")

    @property
    def b(self):
        return self.ops.OMpinv @ self.y


@dataclass
class AnalysisState:
    mask: np.ndarray
    Gamma: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    eps0: float
    ops: AnalysisOperators = field(repr=False)
    Mpinv_y: np.ndarray = field(repr=False)
    updates: int = 0

    @property
    def Lambda(self):
        return [int(i) for i in np.flatnonzero(self.mask)]

    @property
    def QMperp(self):
        return self.ops.Q


@dataclass
class AnalysisResult:
    xh: np.ndarray
    cosupport: list
    objective: float
    iterations: int
    trace: list = field(default_factory=list)
    events: list = field(default_factory=list)
    replacement_iterations: int = 0

    def to_json(self):
        return {
            "cosupport": [int(i) for i in self.cosupport],
            "xh": [float(v) for v in self.xh],
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "replacement_iterations": int(self.replacement_iterations),
        }


def _gram_inverse(Lt_rows):
    """``(L_Lambda L_Lambda^T)^{-1}`` or ``None`` when numerically singular."""
    d = Lt_rows.shape[1]
    if d == 0:
        return np.zeros((0, 0))
    G = Lt_rows.T @ Lt_rows
    w = np.linalg.eigvalsh(G)
    if w[-1] <= 0 or w[0] < SINGULAR_RTOL * w[-1]:
        return None
    Gi = np.linalg.inv(G)
    return 0.5 * (Gi + Gi.T)


def _objective(b, gamma, mask):
    return float(b[mask] @ b[mask] - gamma[mask] @ gamma[mask])


# -- state ----------------------------------------------------------------------

def init_state(prob, Lambda=None):
    """Auxiliary variables for ``Lambda`` (default: every row of Omega)."""
    ops = prob.ops
    p = ops.Omega.shape[0]
    mask = np.ones(p, dtype=bool)
    if Lambda is not None:
        mask = np.zeros(p, dtype=bool)
        mask[list(Lambda)] = True
    return _fresh(ops, prob.y, mask)


def _fresh(ops, y, mask, updates=0):
    Lt = ops.Lt
    Gamma = _gram_inverse(Lt[mask])
    if Gamma is None:
        raise SingularSystem("L_Lambda L_Lambda^T is singular for |Lambda|=%d" % mask.sum())
    Mpinv_y = ops.Mpinv @ y
    b = ops.Omega @ Mpinv_y
    gamma = Lt @ (Gamma @ (Lt[mask].T @ b[mask]))
    alpha = np.einsum("ij,ij->i", Lt @ Gamma, Lt)
    return AnalysisState(mask=mask, Gamma=Gamma, b=b, gamma=gamma, alpha=alpha,
                         eps0=_objective(b, gamma, mask), ops=ops, Mpinv_y=Mpinv_y,
                         updates=updates)


def refresh_state(state):
    y = state.ops.M @ state.Mpinv_y
    fresh = _fresh(state.ops, y, state.mask.copy())
    fresh.b = state.b
    fresh.gamma = state.ops.Lt @ (fresh.Gamma @ (state.ops.Lt[state.mask].T @ state.b[state.mask]))
    fresh.eps0 = _objective(fresh.b, fresh.gamma, fresh.mask)
    return fresh


def _finish_update(state):
    state.eps0 = _objective(state.b, state.gamma, state.mask)
    if state.updates >= REFRESH_EVERY:
        state = refresh_state(state)
    return state


def upd_add_a(state, j):
    """Add row ``j`` to the cosupport with a rank-one update of Gamma, gamma, alpha."""
    if state.mask[j]:
        raise ValueError("row %d already in the cosupport" % j)
    denom = 1.0 + state.alpha[j]
    if denom <= PIVOT_TOL:
        raise DegeneratePivot("1 + alpha(%d) = %.3g" % (j, denom))
    Lt = state.ops.Lt
    u = state.Gamma @ Lt[j]
    w = Lt @ u
    mask = state.mask.copy()
    mask[j] = True
    new = replace(
        state, mask=mask,
        Gamma=state.Gamma - np.outer(u, u) / denom,
        gamma=state.gamma + (state.b[j] - state.gamma[j]) / denom * w,
        alpha=state.alpha - w * w / denom,
        updates=state.updates + 1)
    return _finish_update(new)


def upd_rem_a(state, i):
    """Remove row ``i`` from the cosupport; mirror image of :func:`upd_add_a`."""
    if not state.mask[i]:
        raise ValueError("row %d not in the cosupport" % i)
    denom = 1.0 - state.alpha[i]
    if denom <= PIVOT_TOL:
        raise DegeneratePivot("1 - alpha(%d) = %.3g" % (i, denom))
    Lt = state.ops.Lt
    u = state.Gamma @ Lt[i]
    w = Lt @ u
    mask = state.mask.copy()
    mask[i] = False
    new = replace(
        state, mask=mask,
        Gamma=state.Gamma + np.outer(u, u) / denom,
        gamma=state.gamma - (state.b[i] - state.gamma[i]) / denom * w,
        alpha=state.alpha + w * w / denom,
        updates=state.updates + 1)
    return _finish_update(new)


def cosparse_residual(state, y=None):
    """Objective ``||Omega_Lambda xh||^2`` as ``||b_Lambda||^2 - ||gamma_Lambda||^2``."""
    return _objective(state.b, state.gamma, state.mask)


# -- direct formulas --------------------------------------------------------------

def analysis_ls(prob, Lambda):
    """Minimiser of ``||Omega_Lambda x||^2`` subject to ``M x = y``.

    Evaluated in closed form as ``B^{-1} M^T C y`` with
    ``B = M^T M + Omega_Lambda^T Omega_Lambda`` and ``C = (M B^{-1} M^T)^{-1}``.
    """
    M, Omega, y = prob.M, prob.Omega, prob.y
    Binv = _checked_inverse(M.T @ M + Omega[list(Lambda)].T @ Omega[list(Lambda)], "B_Lambda")
    if M.shape[0] == 0:
        return np.zeros(M.shape[1])
    C = _checked_inverse(M @ Binv @ M.T, "M B^-1 M^T")
    return Binv @ (M.T @ (C @ y))


def _checked_inverse(A, name):
    A = 0.5 * (A + A.T)
    w = np.linalg.eigvalsh(A)
    if w.size and (w[-1] <= 0 or w[0] < SINGULAR_RTOL * w[-1]):
        raise SingularSystem("%s is numerically singular" % name)
    return np.linalg.inv(A)


def mse_forms(prob, Lambda):
    """The objective at ``Lambda`` by three routes.

    Returns ``(||Omega_Lambda xh||^2, y^T (C - I) y, ||R_L Omega_Lambda M^+ y||^2)``.
    """
    M, Omega, y = prob.M, prob.Omega, prob.y
    Lam = list(Lambda)
    xh = analysis_ls(prob, Lam)
    direct = float(np.sum((Omega[Lam] @ xh) ** 2))
    Binv = np.linalg.inv(M.T @ M + Omega[Lam].T @ Omega[Lam])
    C = np.linalg.inv(M @ Binv @ M.T)
    quad = float(y @ (C @ y) - y @ y)
    v = Omega[Lam] @ (np.linalg.pinv(M) @ y)
    Lmat = prob.ops.Q.T @ Omega[Lam].T
    if Lmat.shape[0]:
        coef = np.linalg.lstsq(Lmat.T, v, rcond=None)[0]
        v = v - Lmat.T @ coef
    return direct, quad, float(v @ v)


# -- selection ---------------------------------------------------------------------

def removal_scores(state, b=None, gamma=None):
    b = state.b if b is None else b
    gamma = state.gamma if gamma is None else gamma
    scores = np.full(b.shape, -np.inf)
    ok = state.mask & (1.0 - state.alpha > PIVOT_TOL)
    scores[ok] = (b[ok] - gamma[ok]) ** 2 / (1.0 - state.alpha[ok])
    return scores


def addition_scores(state, b=None, gamma=None):
    b = state.b if b is None else b
    gamma = state.gamma if gamma is None else gamma
    scores = np.full(b.shape, np.inf)
    ok = ~state.mask & (1.0 + state.alpha > PIVOT_TOL)
    scores[ok] = (b[ok] - gamma[ok]) ** 2 / (1.0 + state.alpha[ok])
    return scores


def estimate_noise(state, eps_w):
    """Perturbation ``w`` with ``||w|| = eps_w`` that best explains the objective.

    Solves ``min ||r - G w||^2 + lam ||w||^2`` with ``G = R_L Omega_Lambda M^+``
    and ``r = b_Lambda - gamma_Lambda``, bisecting on ``log lam`` until the
    norm constraint holds to a relative ``1e-6``.
    """
    m = state.ops.M.shape[0]
    if eps_w == 0 or m == 0:
        return np.zeros(m)
    mask = state.mask
    LtL = state.ops.Lt[mask]
    OM = state.ops.OMpinv[mask]
    G = OM - LtL @ (state.Gamma @ (LtL.T @ OM))
    r = state.b[mask] - state.gamma[mask]
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    proj = U.T @ r

    def w_of(lam):
        return Vt.T @ (s * proj / (s * s + lam))

    lo, hi = math.log(LAMBDA_RANGE[0]), math.log(LAMBDA_RANGE[1])
    n_lo, n_hi = np.linalg.norm(w_of(math.exp(lo))), np.linalg.norm(w_of(math.exp(hi)))
    if not n_hi <= eps_w <= n_lo:
        if abs(n_lo - eps_w) <= NORM_RTOL * eps_w:
            return w_of(math.exp(lo))
        raise BisectionFailed("no lambda in [%g, %g] gives ||w|| = %g (range %g..%g)"
                              % (LAMBDA_RANGE + (eps_w, n_hi, n_lo)))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        w = w_of(math.exp(mid))
        nw = np.linalg.norm(w)
        if abs(nw - eps_w) <= NORM_RTOL * eps_w:
            return w
        if nw > eps_w:
            lo = mid
        else:
            hi = mid
    raise BisectionFailed("bisection did not converge")


def noisy_selection(state, prob, mode):
    """Row selection on noise-corrected ``(b, gamma)``.

    ``mode`` is ``"remove"`` (largest objective drop inside the cosupport) or
    ``"add"`` (smallest objective rise outside it). Returns the row index, or
    ``None`` when no row is eligible.
    """
    eps_w = prob.eps_w or 0.0
    w = estimate_noise(state, eps_w)
    shift = state.ops.OMpinv @ w
    Lt = state.ops.Lt
    b_t = state.b - shift
    g_t = state.gamma - Lt @ (state.Gamma @ (Lt[state.mask].T @ shift[state.mask]))
    if mode == "remove":
        return _pick_max(removal_scores(state, b_t, g_t))
    if mode == "add":
        return _pick_min(addition_scores(state, b_t, g_t))
    raise ValueError("mode must be 'add' or 'remove'")


def _pick_max(scores):
    i = int(np.argmax(scores))
    return i if np.isfinite(scores[i]) else None


def _pick_min(scores):
    i = int(np.argmin(scores))
    return i if np.isfinite(scores[i]) else None


def _select_remove(state, prob):
    if prob.eps_w:
        try:
            return noisy_selection(state, prob, "remove")
        except BisectionFailed:
            # the residual is smaller than the noise budget; nothing left to correct
            pass
    return _pick_max(removal_scores(state))


def _select_add(state, prob):
    if prob.eps_w:
        try:
            return noisy_selection(state, prob, "add")
        except BisectionFailed:
            pass
    return _pick_min(addition_scores(state))


# -- solvers ----------------------------------------------------------------------

def _result(prob, state_or_mask, iterations, trace, events, swaps=0):
    mask = state_or_mask.mask if isinstance(state_or_mask, AnalysisState) else state_or_mask
    Lam = [int(i) for i in np.flatnonzero(mask)]
    xh = analysis_ls(prob, Lam)
    obj = float(np.sum((prob.Omega[Lam] @ xh) ** 2))
    return AnalysisResult(xh=xh, cosupport=Lam, objective=obj, iterations=iterations,
                          trace=trace, events=events, replacement_iterations=swaps)


def _gals_loop(prob, state, trace, events, callback=None):
    while True:
        if prob.l is not None:
            if state.mask.sum() <= prob.l:
                break
        elif state.eps0 <= prob.eps_t:
            break
        i = _select_remove(state, prob)
        if i is None:
            raise DegeneratePivot("no removable row left at |Lambda|=%d" % state.mask.sum())
        state = upd_rem_a(state, i)
        events.append(("rem", i))
        trace.append((int(state.mask.sum()), state.eps0))
        if callback is not None:
            callback(state)
    return state


def gals_solve(prob, callback=None):
    """Greedy analysis least squares: drop the row that lowers the objective most."""
    trace, events = [], []
    state = _gals_loop(prob, init_state(prob), trace, events, callback)
    return _result(prob, state, len(trace), trace, events)


def galsr_solve(prob, callback=None):
    """GALS followed by add-then-remove swaps while the objective strictly drops.

    A swap that does not lower the objective is undone before exiting, so the
    returned cosupport is the best one visited and has size ``l``.
    """
    if prob.l is None:
        raise InvalidProblem("GALSR needs a target cosparsity l")
    trace, events = [], []
    state = _gals_loop(prob, init_state(prob), trace, events, callback)
    warmup = len(trace)
    p = prob.Omega.shape[0]
    cap = 50 * max(p - prob.l, 1)
    tol = PROGRESS_RTOL * max(float(state.b @ state.b), np.finfo(float).tiny)
    passes = swaps = 0
    while True:
        passes += 1
        if passes > cap:
            raise IterationCapExceeded("GALSR exceeded %d replacement passes" % cap)
        j = _select_add(state, prob)
        if j is None:
            break
        trial = upd_add_a(state, j)
        i = _select_remove(trial, prob)
        if i is None or i == j:
            break
        trial = upd_rem_a(trial, i)
        if trial.eps0 >= state.eps0 - tol:
            break
        state = trial
        swaps += 1
        events.extend([("add", j), ("rem", i)])
        trace.append((int(state.mask.sum()), state.eps0))
        if callback is not None:
            callback(state)
    return _result(prob, state, warmup + passes, trace, events, swaps)


def gap_solve(prob, callback=None):
    """Greedy analysis pursuit baseline.

    Starts from the full cosupport and repeatedly drops the row with the
    largest ``|Omega x|`` entry, re-solving the constrained least squares.
    """
    p = prob.Omega.shape[0]
    mask = np.ones(p, dtype=bool)
    trace, events = [], []
    while True:
        Lam = np.flatnonzero(mask)
        xh = analysis_ls(prob, Lam)
        corr = np.abs(prob.Omega @ xh)
        obj = float(np.sum(corr[mask] ** 2))
        if prob.l is not None:
            if mask.sum() <= prob.l:
                break
        elif obj <= prob.eps_t:
            break
        corr[~mask] = -np.inf
        i = int(np.argmax(corr))
        mask[i] = False
        events.append(("rem", i))
        trace.append((int(mask.sum()), obj))
        if callback is not None:
            callback(mask)
    return _result(prob, mask, len(trace), trace, events)


SOLVERS = {"gap": gap_solve, "gals": gals_solve, "galsr": galsr_solve}
