"""Seeded Monte-Carlo experiments over grids of problem sizes.

Every trial draws from its own PCG64 stream seeded with
``SeedSequence([master_seed, cell_index, trial_index])``, so results do not
depend on how trials are spread over worker processes. Aggregation walks the
trials in (cell, trial) order.

Four experiment kinds are available:

``phase``           noiseless synthesis phase transition at fixed ``m`` over
                    ``delta = m/n`` and ``rho = k/m``
``noise``           white-noise sweep over ``k`` with an oracle reference
``coherence``       sweep over the coherence damaging parameter ``mu``
``analysis-phase``  cosparse recovery with a Gaussian tight frame over ``(m, l)``
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple, Optional

import numpy as np

from . import __version__
from . import analysis, synthesis
from .errors import GreedyLSError, InvalidDims
from .guarantees import DEFAULT_CONFIDENCE, failure_probability, oracle_error_bound, support_deviation
from .linalg import least_squares

KINDS = ("phase", "noise", "coherence", "analysis-phase")

DEFAULTS = {
    "phase": {"m": 100, "delta": [0.25, 0.5, 0.75], "rho": [0.1, 0.2, 0.3, 0.4, 0.5],
              "trials": 50, "threshold": 1e-4, "algorithms": ["omp", "olsr", "iolsr"]},
    "noise": {"n": 150, "m": 50, "k": list(range(2, 15, 2)), "sigma_factor": 0.01,
              "trials": 200, "threshold": 1e-4,
              "algorithms": ["omp", "olsr", "iolsr", "oracle"]},
    "coherence": {"n": 120, "m": 40, "k": 12, "mu": [0.0, 0.25, 0.5], "sigma_factor": 0.01,
                  "passes": 5, "trials": 200, "threshold": 1e-4,
                  "algorithms": ["omp", "olsr", "iolsr", "oracle"]},
    "analysis-phase": {"n": 24, "p": 30, "m": [8, 12, 16, 20, 24], "l": [10, 14, 18, 22],
                       "trials": 20, "threshold": 1e-4, "algorithms": ["gap", "gals", "galsr"]},
}

AXES = {
    "phase": ("delta", "rho", "m", "n", "k"),
    "noise": ("k", "m", "n", "sigma_factor"),
    "coherence": ("mu", "m", "n", "k", "sigma_factor"),
    "analysis-phase": ("m", "l", "n", "p"),
}

STATS = ("algorithm", "success_rate", "median_error", "mean_iters",
         "mean_replacements", "failures", "mean_ms")


class GeneratedProblem(NamedTuple):
    M: np.ndarray
    x: np.ndarray
    y0: np.ndarray
    support: list
    Omega: Optional[np.ndarray] = None


def trial_rng(master_seed, cell, trial):
    ss = np.random.SeedSequence([int(master_seed), int(cell), int(trial)])
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def tight_frame(rng, p, n):
    """Gaussian ``p x n`` matrix with every singular value set to one."""
    U, _, Vt = np.linalg.svd(rng.standard_normal((p, n)), full_matrices=False)
    return U @ Vt


def gen_problem(seed, m, n, k, kind="synthesis", p=None):
    """Random instance.

    ``synthesis``: column-normalised Gaussian ``M`` (m x n) and a ``k``-sparse
    ``x`` with uniform support and Gaussian values.

    ``analysis``: Gaussian ``M``, tight frame ``Omega`` (p x n) and ``x`` in the
    null space of ``k`` random rows of ``Omega``; ``support`` then holds the
    planted cosupport.
    """
    rng = _as_rng(seed)
    if kind == "synthesis":
        if not 0 <= k <= m <= n:
            raise InvalidDims("need 0 <= k <= m <= n, got k=%d m=%d n=%d" % (k, m, n))
        M = rng.standard_normal((m, n))
        M /= np.linalg.norm(M, axis=0)
        support = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
        x = np.zeros(n)
        x[support] = rng.standard_normal(k)
        return GeneratedProblem(M, x, M @ x, support)
    if kind == "analysis":
        p = n if p is None else p
        if not (0 <= m <= n and 0 <= k <= p and n <= p):
            raise InvalidDims("need 0 <= m <= n <= p and 0 <= l <= p")
        Omega = tight_frame(rng, p, n)
        cos = sorted(int(i) for i in rng.choice(p, size=k, replace=False))
        _, s, Vt = np.linalg.svd(Omega[cos], full_matrices=True) if k else (None, np.zeros(0), np.eye(n))
        rank = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
        V = Vt[rank:].T
        x = V @ rng.standard_normal(V.shape[1])
        M = rng.standard_normal((m, n))
        return GeneratedProblem(M, x, M @ x, cos, Omega)
    raise InvalidDims("unknown problem kind %r" % kind)


def damage_coherence(M, mu, passes=5):
    """Blend every column with its right neighbour, ``passes`` times, then renormalise.

    The last column has no right neighbour and is left alone (no wrap-around).
    """
    D = np.array(M, dtype=float)
    for _ in range(passes):
        for i in range(D.shape[1] - 1):
            D[:, i] = D[:, i] + mu * D[:, i + 1]
    return D / np.linalg.norm(D, axis=0)


# -- configuration -------------------------------------------------------------------

def load_config(kind, cfg=None):
    if kind not in KINDS:
        raise ValueError("unknown experiment kind %r" % kind)
    out = json.loads(json.dumps(DEFAULTS[kind]))
    for key, val in (cfg or {}).items():
        if key == "kind":
            if val != kind:
                raise ValueError("config is for %r, not %r" % (val, kind))
            continue
        if key not in out:
            raise ValueError("unknown config key %r for %s" % (key, kind))
        out[key] = val
    if int(out["trials"]) < 1:
        raise ValueError("trials must be >= 1")
    if not float(out["threshold"]) > 0:
        raise ValueError("threshold must be positive")
    out["kind"] = kind
    return out


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def grid_cells(cfg):
    kind = cfg["kind"]
    if kind == "phase":
        m = int(cfg["m"])
        cells = []
        for d, r in itertools.product(cfg["delta"], cfg["rho"]):
            n = max(m, int(round(m / d)))
            cells.append({"delta": d, "rho": r, "m": m, "n": n, "k": int(round(r * m))})
        return cells
    if kind == "noise":
        return [{"k": int(k), "m": int(cfg["m"]), "n": int(cfg["n"]),
                 "sigma_factor": cfg["sigma_factor"]} for k in _listify(cfg["k"])]
    if kind == "coherence":
        return [{"mu": mu, "m": int(cfg["m"]), "n": int(cfg["n"]), "k": int(cfg["k"]),
                 "sigma_factor": cfg["sigma_factor"]} for mu in _listify(cfg["mu"])]
    return [{"m": int(m), "l": int(l), "n": int(cfg["n"]), "p": int(cfg["p"])}
            for m, l in itertools.product(cfg["m"], cfg["l"])]


# -- trials ------------------------------------------------------------------------------

def _rel_sq_error(xh, x):
    err = float(np.sum((xh - x) ** 2))
    return err / float(x @ x) if x @ x > 0 else (0.0 if err == 0 else math.inf)


def _synthesis_trial(cfg, cell, rng, timing):
    kind = cfg["kind"]
    m, n, k = cell["m"], cell["n"], cell["k"]
    gp = gen_problem(rng, m, n, k)
    M, x, y0 = gp.M, gp.x, gp.y0
    if kind == "coherence" and cell["mu"] != 0:
        M = damage_coherence(M, cell["mu"], cfg.get("passes", 5))
        y0 = M @ x
    sigma = cell.get("sigma_factor", 0.0) * float(np.linalg.norm(y0)) / math.sqrt(m)
    y = y0 + sigma * rng.standard_normal(m) if sigma > 0 else y0
    out = {}
    for alg in cfg["algorithms"]:
        rec = {"ok": True, "iters": 0, "swaps": 0}
        t0 = time.perf_counter()
        try:
            if alg == "oracle":
                xh = np.zeros(n)
                if gp.support:
                    xh[gp.support] = least_squares(M[:, gp.support], y)
                if sigma > 0 and gp.support:
                    delta = support_deviation(M, gp.support)
                    rec["bound"] = oracle_error_bound(delta, sigma, k, n, DEFAULT_CONFIDENCE) \
                        if delta < 1 else math.inf
                est_support = list(gp.support)
            else:
                res = synthesis.SOLVERS[alg](synthesis.SynthesisProblem(M, y, k=k))
                xh, est_support = res.xh_full, res.support
                rec["iters"], rec["swaps"] = res.iterations, res.replacement_iterations
        except GreedyLSError as exc:
            rec.update(ok=False, error=math.inf, rel=math.inf, exact_support=False,
                       reason=type(exc).__name__)
        else:
            rec["error"] = float(np.linalg.norm(xh - x))
            rec["rel"] = _rel_sq_error(xh, x)
            rec["exact_support"] = sorted(est_support) == gp.support
        if timing:
            rec["ms"] = 1e3 * (time.perf_counter() - t0)
        out[alg] = rec
    return out


def _analysis_trial(cfg, cell, rng, timing):
    m, l, n, p = cell["m"], cell["l"], cell["n"], cell["p"]
    gp = gen_problem(rng, m, n, l, kind="analysis", p=p)
    out = {}
    ops = None
    for alg in cfg["algorithms"]:
        rec = {"ok": True, "iters": 0, "swaps": 0}
        t0 = time.perf_counter()
        try:
            prob = analysis.AnalysisProblem(gp.M, gp.Omega, gp.y0, l=l, ops=ops)
            ops = prob.ops
            res = analysis.SOLVERS[alg](prob)
        except GreedyLSError as exc:
            rec.update(ok=False, error=math.inf, rel=math.inf, reason=type(exc).__name__)
        else:
            rec["error"] = float(np.linalg.norm(res.xh - gp.x))
            rec["rel"] = _rel_sq_error(res.xh, gp.x)
            rec["iters"], rec["swaps"] = res.iterations, res.replacement_iterations
        if timing:
            rec["ms"] = 1e3 * (time.perf_counter() - t0)
        out[alg] = rec
    return out


def run_trial(cfg, cell_index, trial, master_seed, timing=False):
    """One seeded trial of every configured algorithm on a fresh instance."""
    cell = grid_cells(cfg)[cell_index]
    rng = trial_rng(master_seed, cell_index, trial)
    if cfg["kind"] == "analysis-phase":
        return _analysis_trial(cfg, cell, rng, timing)
    return _synthesis_trial(cfg, cell, rng, timing)


def _task(args):
    return run_trial(*args)


# -- aggregation ------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return "%.10g" % v
    return str(v)


def summarize(cfg, cells, records):
    """One row per (cell, algorithm); ``records[c][t][alg]`` is a trial record."""
    rows = []
    thr = float(cfg["threshold"])
    for ci, cell in enumerate(cells):
        for alg in cfg["algorithms"]:
            recs = [r[alg] for r in records[ci]]
            ok = [r for r in recs if r["ok"]]
            row = {key: cell[key] for key in AXES[cfg["kind"]]}
            row["algorithm"] = alg
            row["success_rate"] = sum(1 for r in recs if r["rel"] <= thr) / len(recs)
            row["median_error"] = float(np.median([r["error"] for r in recs]))
            row["mean_iters"] = float(np.mean([r["iters"] for r in ok])) if ok else None
            row["mean_replacements"] = float(np.mean([r["swaps"] for r in ok])) if ok else None
            row["failures"] = len(recs) - len(ok)
            row["mean_ms"] = float(np.mean([r["ms"] for r in recs])) if "ms" in recs[0] else None
            rows.append(row)
    return rows


def run_experiment(cfg, seed, workers=1, timing=False):
    """Run every (cell, trial) and return ``(rows, records)``."""
    cells = grid_cells(cfg)
    trials = int(cfg["trials"])
    tasks = [(cfg, ci, t, seed, timing) for ci in range(len(cells)) for t in range(trials)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        flat = [_task(t) for t in tasks]
    records = [flat[ci * trials:(ci + 1) * trials] for ci in range(len(cells))]
    return summarize(cfg, cells, records), records


def rows_to_csv(cfg, rows):
    buf = io.StringIO()
    header = list(AXES[cfg["kind"]]) + list(STATS)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def run_phase_transition(cfg, seed=0, workers=1, timing=False):
    cfg = load_config("phase", cfg)
    return rows_to_csv(cfg, run_experiment(cfg, seed, workers, timing)[0])


def run_noise_sweep(cfg, seed=0, workers=1, timing=False):
    cfg = load_config("noise", cfg)
    return rows_to_csv(cfg, run_experiment(cfg, seed, workers, timing)[0])


def run_coherence_sweep(cfg, seed=0, workers=1, timing=False):
    cfg = load_config("coherence", cfg)
    return rows_to_csv(cfg, run_experiment(cfg, seed, workers, timing)[0])


def run_analysis_phase(cfg, seed=0, workers=1, timing=False):
    cfg = load_config("analysis-phase", cfg)
    return rows_to_csv(cfg, run_experiment(cfg, seed, workers, timing)[0])


def oracle_bound_summary(records, n, a=DEFAULT_CONFIDENCE):
    """Fraction of oracle trials whose error exceeded the known-support bound."""
    recs = [r["oracle"] for cell in records for r in cell if "bound" in r.get("oracle", {})]
    bad = sum(1 for r in recs if r["error"] > r["bound"])
    return bad / len(recs) if recs else 0.0, failure_probability(n, a)


def run_to_dir(kind, cfg, seed, out_dir, workers=1, timing=False):
    """Run an experiment and write ``results.csv`` and ``manifest.json``."""
    cfg = load_config(kind, cfg)
    rows, _ = run_experiment(cfg, seed, workers, timing)
    os.makedirs(out_dir, exist_ok=True)
    text = rows_to_csv(cfg, rows)
    with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
        fh.write(text)
    manifest = {"kind": kind, "config": cfg, "seed": int(seed), "version": __version__,
                "prng": "numpy PCG64, SeedSequence([seed, cell, trial])",
                "cells": len(grid_cells(cfg)), "timing": bool(timing)}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return text
