import itertools

import numpy as np
import pytest

from conftest import gaussian_dictionary
from greedyls import analysis as an
from greedyls import synthesis as syn
from greedyls.bench import gen_problem
from greedyls.errors import BudgetExceeded
from greedyls.oracle import exhaustive_cosparse, exhaustive_sparse


def test_sparse_trivial(rng):
    M = gaussian_dictionary(rng, 6, 9)
    res = exhaustive_sparse(M, M[:, 2], 1)
    assert res.best_support == (2,) and res.best_residual_sq < 1e-20
    assert res.evaluated == 9
    M = np.eye(4)[:, :3]
    y = np.array([0.0, 0.0, 0.0, 2.0])
    res = exhaustive_sparse(M, y, 1)
    assert res.best_residual_sq == pytest.approx(4.0) and res.best_support == (0,)


def test_sparse_order_independent(rng):
    M = gaussian_dictionary(rng, 12, 18)
    y = rng.standard_normal(12)
    fwd = exhaustive_sparse(M, y, 2)
    rev = exhaustive_sparse(M, y, 2, supports=reversed(list(itertools.combinations(range(18), 2))))
    assert fwd.best_support == rev.best_support
    assert fwd.best_residual_sq == rev.best_residual_sq


def test_sparse_budget(rng):
    with pytest.raises(BudgetExceeded):
        exhaustive_sparse(rng.standard_normal((5, 60)), np.ones(5), 6)


def test_sparse_optimum_below_pursuits(rng):
    for _ in range(10):
        M = gaussian_dictionary(rng, 8, 14)
        y = rng.standard_normal(8)
        best = exhaustive_sparse(M, y, 3).best_residual_sq
        for solve in syn.SOLVERS.values():
            assert best <= solve(syn.SynthesisProblem(M, y, k=3)).residual_sq + 1e-12


def test_cosparse_examples(rng):
    gp = gen_problem(rng, 6, 8, 5, kind="analysis", p=10)
    res = exhaustive_cosparse(gp.M, gp.Omega, gp.y0, 5)
    assert res.best_residual_sq < 1e-18
    res = exhaustive_cosparse(gp.M, gp.Omega, np.zeros(6), 5)
    assert res.best_support == (0, 1, 2, 3, 4) and res.best_residual_sq == 0.0


def test_cosparse_below_gals(rng):
    for _ in range(10):
        M = rng.standard_normal((5, 8))
        Omega = rng.standard_normal((12, 8))
        y = rng.standard_normal(5)
        best = exhaustive_cosparse(M, Omega, y, 4)
        for name, solve in an.SOLVERS.items():
            res = solve(an.AnalysisProblem(M, Omega, y, l=4))
            assert best.best_residual_sq <= res.objective + 1e-10


def test_cosparse_skips_singular(rng):
    M = rng.standard_normal((3, 5))
    Omega = np.vstack([np.eye(5)[:2], np.eye(5)[:2], np.eye(5)[2:]])
    res = exhaustive_cosparse(M, Omega, rng.standard_normal(3), 2)
    # rows 0/2 and 1/3 coincide, so those pairs leave the system singular
    assert res.evaluated == 21 and res.skipped == [(0, 2), (1, 3)]
    res = exhaustive_cosparse(np.zeros((0, 5)), Omega, np.zeros(0), 2)
    assert len(res.skipped) == 21 and res.best_support == ()


def test_cosparse_budget(rng):
    with pytest.raises(BudgetExceeded):
        exhaustive_cosparse(rng.standard_normal((3, 5)), rng.standard_normal((40, 5)), np.ones(3), 10)


def test_deterministic(rng):
    M = gaussian_dictionary(rng, 8, 12)
    y = rng.standard_normal(8)
    assert exhaustive_sparse(M, y, 2).to_json() == exhaustive_sparse(M, y, 2).to_json()
