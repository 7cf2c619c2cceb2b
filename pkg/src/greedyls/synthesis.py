"""Greedy pursuits for the sparse synthesis model ``y = M x + w``.

Baselines are OMP (correlation rule, full least-squares refit) and a naive
OLS that recomputes every projection. FOLS, OLSR and IOLSR share the fast
state in :class:`SynthesisState`: the inverse Gram matrix of the selected
atoms plus two length-``n`` vectors

* ``c[i]   = <R_T m_i, y>``
* ``rho[i] = ||R_T m_i||^2``

so that the residual drop of adding atom ``i`` is ``c[i]**2 / rho[i]`` and
the residual growth of removing support position ``j`` is
``xh[j]**2 / B[j, j]``. Each support change costs one ``M^T v`` product.

Dictionaries are column-normalised on construction of the problem and the
returned coefficients are mapped back to the caller's column scales.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import InvalidProblem, IterationCapExceeded, NoProgress
from .linalg import InverseCache

ELIGIBLE_RHO = 1e-8
EXACT_FIT_RTOL = 1e-12
PROGRESS_RTOL = 1e-12
CAP_DELTA = 0.445


@dataclass
class SynthesisProblem:
    """Dictionary, measurement and exactly one stop criterion.

    ``M`` is stored with unit-norm columns; ``scales`` keeps the original
    column norms.
    """

    M: np.ndarray
    y: np.ndarray
    k: Optional[int] = None
    eps_t: Optional[float] = None
    scales: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if M.ndim != 2:
            raise InvalidProblem("M must be a matrix")
        if y.shape[0] != M.shape[0]:
            raise InvalidProblem("y has length %d but M has %d rows" % (y.shape[0], M.shape[0]))
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(y))):
            raise InvalidProblem("non-finite entries in M or y")
        if (self.k is None) == (self.eps_t is None):
            raise InvalidProblem("give exactly one of k or eps_t")
        if self.k is not None:
            if not 0 <= self.k <= min(M.shape):
                raise InvalidProblem("k=%r must lie in [0, min(m, n)]" % self.k)
            self.k = int(self.k)
        if self.eps_t is not None and self.eps_t < 0:
            raise InvalidProblem("eps_t must be non-negative")
        norms = np.linalg.norm(M, axis=0)
        if np.any(norms == 0):
            raise InvalidProblem("dictionary has a zero column")
        self.M = M / norms
        self.y = y
        self.scales = norms

    @property
    def y_norm_sq(self):
        return float(self.y @ self.y)

    @property
    def exact_tol(self):
        return EXACT_FIT_RTOL * self.y_norm_sq


@dataclass
class SynthesisState:
    T: list
    cache: InverseCache
    c: np.ndarray
    rho: np.ndarray
    eps0: float
    xh: np.ndarray
    c0: np.ndarray
    y_norm_sq: float


@dataclass
class RecoveryResult:
    xh_full: np.ndarray
    support: list
    residual_sq: float
    iterations: int
    trace: list = field(default_factory=list)
    events: list = field(default_factory=list)
    replacement_iterations: int = 0

    def to_json(self):
        return {
            "support": [int(i) for i in self.support],
            "xh": [float(v) for v in self.xh_full],
            "residual_sq": float(self.residual_sq),
            "iterations": int(self.iterations),
            "replacement_iterations": int(self.replacement_iterations),
        }


# -- state maintenance ---------------------------------------------------------

def init_state(p):
    M, y = p.M, p.y
    c0 = M.T @ y
    return SynthesisState(
        T=[], cache=InverseCache.empty(M.shape[0]), c=c0.copy(),
        rho=np.einsum("ij,ij->j", M, M), eps0=p.y_norm_sq,
        xh=np.zeros(0), c0=c0, y_norm_sq=p.y_norm_sq)


def upd_add(state, M):
    """Update ``c`` and ``rho`` after the last support position was appended.

    ``state.cache`` and ``state.xh`` must already include the new atom.
    """
    B = state.cache.B
    tau = B.shape[0] - 1
    v = state.cache.A @ B[:, tau]
    rho_t = M.T @ v
    c = state.c - (state.xh[tau] / B[tau, tau]) * rho_t
    rho = state.rho - rho_t * rho_t / B[tau, tau]
    return replace(state, c=c, rho=rho)


def upd_rem(state, M, j):
    """Update ``c`` and ``rho`` for the removal of support position ``j``.

    Works on the state *before* the removal; the cache and support are left
    untouched.
    """
    B = state.cache.B
    v = state.cache.A @ B[:, j]
    rho_t = M.T @ v
    c = state.c + (state.xh[j] / B[j, j]) * rho_t
    rho = state.rho + rho_t * rho_t / B[j, j]
    return replace(state, c=c, rho=rho)


def refresh_aux(state, M):
    """Recompute ``c``, ``rho``, ``xh`` and ``eps0`` from the cached inverse."""
    A, B = state.cache.A, state.cache.B
    if not state.T:
        return replace(state, c=state.c0.copy(), rho=np.einsum("ij,ij->j", M, M),
                       xh=np.zeros(0), eps0=state.y_norm_sq)
    G = A.T @ M
    xh = B @ state.c0[state.T]
    c = state.c0 - G.T @ xh
    rho = np.einsum("ij,ij->j", M, M) - np.einsum("ij,ij->j", G, B @ G)
    eps0 = state.y_norm_sq - float(state.c0[state.T] @ xh)
    return replace(state, c=c, rho=rho, xh=xh, eps0=eps0)


def add_atom(state, M, i):
    """Append atom ``i``; returns the new state and the residual drop."""
    cache, _, _ = linalg.inverse_add(state.cache, M[:, i])
    T = state.T + [int(i)]
    xh = cache.B @ state.c0[T]
    tau = len(T) - 1
    drop = xh[tau] ** 2 / cache.B[tau, tau]
    st = replace(state, T=T, cache=cache, xh=xh, eps0=state.eps0 - drop)
    st = upd_add(st, M)
    if cache.updates == 0:
        st = refresh_aux(st, M)
    return st, drop


def remove_atom(state, M, j):
    """Remove support position ``j``; returns the new state and the residual growth."""
    growth = state.xh[j] ** 2 / state.cache.B[j, j]
    st = upd_rem(state, M, j)
    cache, _, _ = linalg.inverse_remove(st.cache, j)
    T = st.T[:j] + st.T[j + 1:]
    xh = cache.B @ st.c0[T] if T else np.zeros(0)
    st = replace(st, T=T, cache=cache, xh=xh, eps0=st.eps0 + growth)
    if cache.updates == 0:
        st = refresh_aux(st, M)
    return st, growth


def selection_scores(state):
    """``c^2 / rho`` for eligible atoms, ``-inf`` elsewhere."""
    scores = np.full(state.c.shape, -np.inf)
    ok = state.rho > ELIGIBLE_RHO
    ok[state.T] = False
    scores[ok] = state.c[ok] ** 2 / state.rho[ok]
    return scores


def _select(state, p):
    scores = selection_scores(state)
    i = int(np.argmax(scores))
    if not np.isfinite(scores[i]) or scores[i] <= (1e-12) ** 2 * p.y_norm_sq:
        raise NoProgress("no eligible atom reduces the residual (|T|=%d)" % len(state.T))
    return i, float(scores[i])


def _finish(p, T, iterations, trace, events, replacement_iterations=0):
    n = p.M.shape[1]
    xh_full = np.zeros(n)
    if T:
        coef = linalg.least_squares(p.M[:, T], p.y)
        xh_full[T] = coef / p.scales[T]
    resid = p.y - p.M[:, T] @ (xh_full[T] * p.scales[T]) if T else p.y
    return RecoveryResult(xh_full=xh_full, support=list(T), residual_sq=float(resid @ resid),
                          iterations=iterations, trace=trace, events=events,
                          replacement_iterations=replacement_iterations)


def _keep_going(p, size, eps0, k_target):
    if eps0 <= p.exact_tol:
        return False
    if p.k is not None:
        return size < k_target
    return eps0 > p.eps_t


def iteration_cap(p):
    """Safety cap on solver loop passes.

    The convergence bound evaluated at the largest admissible RIP constant,
    with a target residual of ``1e-12 ||y||^2``, and never below ``100 k``.
    """
    from .guarantees import convergence_bound

    k = p.k if p.k is not None else min(p.M.shape)
    k = max(k, 1)
    b = convergence_bound(CAP_DELTA, 1.0, EXACT_FIT_RTOL, k)
    return max(int(math.ceil(b)), 100 * k)


# -- baselines -------------------------------------------------------------------

def omp_solve(p, callback=None):
    """Orthogonal matching pursuit with a full least-squares refit per step."""
    M, y = p.M, p.y
    T, r = [], y.copy()
    eps0 = p.y_norm_sq
    trace, events = [], []
    thresh = 1e-12 * math.sqrt(p.y_norm_sq)
    while _keep_going(p, len(T), eps0, p.k):
        corr = np.abs(M.T @ r)
        corr[T] = -np.inf
        i = int(np.argmax(corr))
        if not corr[i] > thresh:
            raise NoProgress("all correlations vanish before the stop criterion")
        T.append(i)
        events.append(("add", i))
        coef = linalg.least_squares(M[:, T], y)
        r = y - M[:, T] @ coef
        eps0 = float(r @ r)
        trace.append((len(T), eps0))
        if callback is not None:
            callback(T, eps0)
    return _finish(p, T, len(trace), trace, events)


def ols_solve(p, callback=None):
    """Reference OLS: every projection is recomputed from an orthonormal basis."""
    M, y = p.M, p.y
    n = M.shape[1]
    T = []
    eps0 = p.y_norm_sq
    trace, events = [], []
    while _keep_going(p, len(T), eps0, p.k):
        if T:
            Q = np.linalg.qr(M[:, T])[0]
            RM = M - Q @ (Q.T @ M)
            r = y - Q @ (Q.T @ y)
        else:
            RM, r = M, y
        c = RM.T @ y
        rho = np.einsum("ij,ij->j", RM, RM)
        scores = np.full(n, -np.inf)
        ok = rho > ELIGIBLE_RHO
        ok[T] = False
        scores[ok] = (M[:, ok].T @ r) ** 2 / rho[ok]
        i = int(np.argmax(scores))
        if not np.isfinite(scores[i]) or scores[i] <= (1e-12) ** 2 * p.y_norm_sq:
            raise NoProgress("no eligible atom reduces the residual")
        T.append(i)
        events.append(("add", i))
        Q = np.linalg.qr(M[:, T])[0]
        r = y - Q @ (Q.T @ y)
        eps0 = float(r @ r)
        trace.append((len(T), eps0))
        if callback is not None:
            callback(T, eps0)
    return _finish(p, T, len(trace), trace, events)


# -- fast pursuits -----------------------------------------------------------------

def _fols_run(p, state, target, trace, events, callback):
    while _keep_going(p, len(state.T), state.eps0, target):
        i, _ = _select(state, p)
        state, _ = add_atom(state, p.M, i)
        events.append(("add", i))
        trace.append((len(state.T), state.eps0))
        if callback is not None:
            callback(state)
    return state


def fols_solve(p, callback=None):
    """Fast OLS: same selections as :func:`ols_solve` with rank-one updates."""
    trace, events = [], []
    state = _fols_run(p, init_state(p), p.k, trace, events, callback)
    return _finish(p, state.T, len(trace), trace, events)


def olsr_solve(p, callback=None):
    """OLS with replacement.

    Grows a support of ``k + 1`` atoms with FOLS, then repeatedly drops the
    least contributing atom and adds the best outside atom while that swap
    strictly lowers the residual. Returns a support of size ``k``.
    """
    if p.k is None:
        raise InvalidProblem("OLSR needs a target cardinality k")
    k = p.k
    M = p.M
    trace, events = [], []
    state = _fols_run(p, init_state(p), k + 1, trace, events, callback)
    warmup = len(trace)
    if len(state.T) <= k:
        return _finish(p, state.T, warmup, trace, events)
    cap = iteration_cap(p)
    tol = PROGRESS_RTOL * p.y_norm_sq
    passes = swaps = 0
    while True:
        passes += 1
        if passes > cap:
            raise IterationCapExceeded("OLSR exceeded %d replacement passes" % cap)
        contrib = linalg.column_contributions(state.xh, state.cache)
        j = int(np.argmin(contrib))
        removed = state.T[j]
        state, growth = remove_atom(state, M, j)
        events.append(("rem", removed))
        i, gain = _select_or_none(state)
        if i is None or i == removed or gain - growth <= tol:
            trace.append((len(state.T), state.eps0))
            break
        state, _ = add_atom(state, M, i)
        events.append(("add", i))
        swaps += 1
        trace.append((len(state.T), state.eps0))
        if callback is not None:
            callback(state)
    return _finish(p, state.T, warmup + passes, trace, events, replacement_iterations=swaps)


def _select_or_none(state):
    scores = selection_scores(state)
    i = int(np.argmax(scores))
    if not np.isfinite(scores[i]):
        return None, 0.0
    return i, float(scores[i])


def iolsr_solve(p, callback=None):
    """Iterative OLS with replacement (stepwise add, then conditional drop).

    Each pass adds the best atom; if some other atom now contributes strictly
    less than the new one, that atom is dropped. With a cardinality target the
    loop runs to ``k + 1`` atoms and the least contributing one is removed at
    the end. With a residual target it runs until ``eps0 <= eps_t``.
    """
    M = p.M
    k_target = p.k + 1 if p.k is not None else None
    cap = iteration_cap(p)
    tol = PROGRESS_RTOL * p.y_norm_sq
    state = init_state(p)
    trace, events = [], []
    swaps = 0
    while True:
        if p.k is not None:
            if len(state.T) >= k_target:
                break
            if state.eps0 <= p.exact_tol and len(state.T) <= p.k:
                break
        elif state.eps0 <= max(p.eps_t, p.exact_tol):
            break
        if len(trace) >= cap:
            raise IterationCapExceeded("IOLSR exceeded %d passes" % cap)
        i, _ = _select(state, p)
        state, _ = add_atom(state, M, i)
        events.append(("add", i))
        tau = len(state.T) - 1
        contrib = linalg.column_contributions(state.xh, state.cache)
        j = int(np.argmin(contrib))
        if j != tau and contrib[j] < contrib[tau] - tol:
            removed = state.T[j]
            state, _ = remove_atom(state, M, j)
            events.append(("rem", removed))
            swaps += 1
        trace.append((len(state.T), state.eps0))
        if callback is not None:
            callback(state)
    T = state.T
    if p.k is not None and len(T) > p.k:
        j = linalg.least_contributing_index(state.xh, state.cache)
        events.append(("rem", T[j]))
        T = T[:j] + T[j + 1:]
    return _finish(p, T, len(trace), trace, events, replacement_iterations=swaps)


SOLVERS: dict[str, Callable] = {
    "omp": omp_solve,
    "ols": ols_solve,
    "fols": fols_solve,
    "olsr": olsr_solve,
    "iolsr": iolsr_solve,
}
