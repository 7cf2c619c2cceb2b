import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gaussian_dictionary, sparse_vector
from greedyls import synthesis as syn
from greedyls.errors import InvalidProblem, NoProgress
from greedyls.linalg import residual_projection
from greedyls.oracle import exhaustive_sparse


def direct_aux(M, T, y):
    """``c`` and ``rho`` from explicit projections."""
    if T:
        RM = np.column_stack([residual_projection(M[:, T], M[:, i]) for i in range(M.shape[1])])
    else:
        RM = M
    return RM.T @ y, np.sum(RM * RM, axis=0)


def resid_sq(M, T, y):
    return float(np.sum(residual_projection(M[:, T], y) ** 2)) if T else float(y @ y)


def test_problem_validation(rng):
    M = rng.standard_normal((5, 8))
    y = rng.standard_normal(5)
    with pytest.raises(InvalidProblem):
        syn.SynthesisProblem(M, y)
    with pytest.raises(InvalidProblem):
        syn.SynthesisProblem(M, y, k=2, eps_t=0.1)
    with pytest.raises(InvalidProblem):
        syn.SynthesisProblem(M, y, k=6)
    with pytest.raises(InvalidProblem):
        syn.SynthesisProblem(M, y[:3], k=1)
    with pytest.raises(InvalidProblem):
        syn.SynthesisProblem(np.zeros((5, 2)), y, k=1)
    p = syn.SynthesisProblem(3.0 * M, y, k=2)
    assert np.allclose(np.linalg.norm(p.M, axis=0), 1.0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(syn.SOLVERS))
def test_single_atom_signal(rng, name):
    M = gaussian_dictionary(rng, 10, 20)
    res = syn.SOLVERS[name](syn.SynthesisProblem(M, M[:, 3], k=1))
    assert res.support == [3]
    assert res.residual_sq < 1e-20
    assert np.allclose(res.xh_full, np.eye(20)[3])


@pytest.mark.parametrize("name", sorted(syn.SOLVERS))
def test_zero_signal(rng, name):
    M = gaussian_dictionary(rng, 10, 20)
    res = syn.SOLVERS[name](syn.SynthesisProblem(M, np.zeros(10), k=3))
    assert res.support == [] and res.residual_sq == 0.0
    assert not np.any(res.xh_full)


def test_omp_single_iteration(rng):
    M = gaussian_dictionary(rng, 10, 20)
    res = syn.omp_solve(syn.SynthesisProblem(M, M[:, 3], eps_t=1e-10))
    assert res.support == [3] and res.iterations == 1


def test_omp_matches_exhaustive_on_separated_instance(rng):
    M = gaussian_dictionary(rng, 20, 50)
    x = np.zeros(50)
    x[[4, 17, 33]] = [3.0, -2.5, 2.0]
    y = M @ x
    res = syn.omp_solve(syn.SynthesisProblem(M, y, k=3))
    best = exhaustive_sparse(M, y, 3)
    assert sorted(res.support) == list(best.best_support)


def test_ols_orthonormal_matches_omp(rng):
    Q = np.linalg.qr(rng.standard_normal((12, 12)))[0][:, :8]
    y = Q @ rng.standard_normal(8)
    a = syn.omp_solve(syn.SynthesisProblem(Q, y, k=5))
    b = syn.ols_solve(syn.SynthesisProblem(Q, y, k=5))
    assert a.events == b.events


def test_ols_residual_beats_omp_on_coherent_dictionaries():
    from greedyls.bench import damage_coherence
    wins = 0
    for seed in range(30):
        rng = np.random.default_rng(seed)
        M = damage_coherence(gaussian_dictionary(rng, 15, 40), 0.5)
        y = M @ sparse_vector(rng, 40, 4)
        a = syn.omp_solve(syn.SynthesisProblem(M, y, k=4)).residual_sq
        b = syn.ols_solve(syn.SynthesisProblem(M, y, k=4)).residual_sq
        wins += b <= a + 1e-12
    assert wins >= 15


def test_fols_orthonormal_pair():
    M = np.eye(6)
    y = M[:, 0] + M[:, 1]
    res = syn.fols_solve(syn.SynthesisProblem(M, y, k=2))
    assert res.support == [0, 1] and res.residual_sq == pytest.approx(0.0, abs=1e-24)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_fols_equals_ols(seed, k):
    rng = np.random.default_rng(seed)
    M = gaussian_dictionary(rng, 30, 100)
    y = M @ sparse_vector(rng, 100, k) + 0.01 * rng.standard_normal(30)
    a = syn.ols_solve(syn.SynthesisProblem(M, y, k=k))
    b = syn.fols_solve(syn.SynthesisProblem(M, y, k=k))
    assert a.events == b.events
    assert abs(a.residual_sq - b.residual_sq) <= 1e-8


@pytest.mark.parametrize("name", ["fols", "olsr", "iolsr"])
def test_auxiliary_vectors_stay_consistent(rng, name):
    M = gaussian_dictionary(rng, 20, 60)
    y = M @ sparse_vector(rng, 60, 6) + 0.05 * rng.standard_normal(20)
    seen = []

    def check(state):
        c, rho = direct_aux(M, state.T, y)
        assert np.allclose(state.rho, rho, atol=1e-8)
        ok = rho > 1e-8
        assert np.allclose(state.c[ok] ** 2 / state.rho[ok], c[ok] ** 2 / rho[ok], rtol=1e-7, atol=1e-12)
        assert state.eps0 == pytest.approx(resid_sq(M, state.T, y), rel=1e-7)
        seen.append(len(state.T))

    syn.SOLVERS[name](syn.SynthesisProblem(M, y, k=6), callback=check)
    assert seen


def test_upd_add_and_upd_rem_match_direct(rng):
    M = gaussian_dictionary(rng, 15, 30)
    y = rng.standard_normal(15)
    p = syn.SynthesisProblem(M, y, k=5)
    st0 = syn.init_state(p)
    st1, _ = syn.add_atom(st0, p.M, 4)
    st2, _ = syn.add_atom(st1, p.M, 11)
    c, rho = direct_aux(p.M, [4, 11], y)
    assert np.allclose(st2.c, c, atol=1e-8) and np.allclose(st2.rho, rho, atol=1e-8)
    back, _ = syn.remove_atom(st2, p.M, 1)
    assert np.allclose(back.c, st1.c, atol=1e-8) and np.allclose(back.rho, st1.rho, atol=1e-8)
    empty, _ = syn.remove_atom(st1, p.M, 0)
    assert np.allclose(empty.c, p.M.T @ y) and np.allclose(empty.rho, 1.0)


def test_upd_add_orthogonal_atom():
    M = np.eye(5)
    p = syn.SynthesisProblem(M, np.arange(1.0, 6.0), k=2)
    st, _ = syn.add_atom(syn.init_state(p), p.M, 2)
    assert st.rho[2] <= 1e-10
    assert np.allclose(np.delete(st.rho, 2), 1.0)


def test_selection_is_best_residual_drop(rng):
    M = gaussian_dictionary(rng, 12, 30)
    y = rng.standard_normal(12)

    def check(state):
        if len(state.T) >= 5:
            return
        drops = [resid_sq(M, state.T, y) - resid_sq(M, state.T + [i], y) if i not in state.T
                 else -np.inf for i in range(30)]
        assert int(np.argmax(syn.selection_scores(state))) == int(np.argmax(drops))

    syn.fols_solve(syn.SynthesisProblem(M, y, k=5), callback=check)


def test_ols_residual_strictly_decreases(rng):
    M = gaussian_dictionary(rng, 20, 50)
    y = rng.standard_normal(20)
    res = syn.ols_solve(syn.SynthesisProblem(M, y, k=10))
    eps = [y @ y] + [e for _, e in res.trace]
    assert all(b < a for a, b in zip(eps, eps[1:]))


def test_olsr_orthonormal_no_replacements(rng):
    Q = np.linalg.qr(rng.standard_normal((10, 10)))[0]
    y = Q[:, [1, 5, 7]] @ [2.0, -1.0, 0.5]
    res = syn.olsr_solve(syn.SynthesisProblem(Q, y, k=3))
    assert sorted(res.support) == [1, 5, 7]
    assert res.replacement_iterations == 0


def test_olsr_needs_k(rng):
    M = gaussian_dictionary(rng, 10, 20)
    with pytest.raises(InvalidProblem):
        syn.olsr_solve(syn.SynthesisProblem(M, M[:, 0], eps_t=0.1))


@pytest.mark.parametrize("seed", range(10))
def test_olsr_swaps_strictly_reduce_residual(seed):
    from greedyls.bench import damage_coherence
    rng = np.random.default_rng(seed)
    M = damage_coherence(gaussian_dictionary(rng, 20, 60), 0.4)
    y = M @ sparse_vector(rng, 60, 6) + 0.02 * rng.standard_normal(20)
    k = 6
    res = syn.olsr_solve(syn.SynthesisProblem(M, y, k=k))
    assert len(res.support) == k
    swaps = [e for s, e in res.trace if s == k + 1][1:]
    start = [e for s, e in res.trace if s == k + 1][0]
    levels = [start] + swaps
    assert all(b < a for a, b in zip(levels, levels[1:]))


def test_iolsr_single_atom_k_mode(rng):
    M = gaussian_dictionary(rng, 10, 20)
    y = M[:, 5] + 0.01 * rng.standard_normal(10)
    res = syn.iolsr_solve(syn.SynthesisProblem(M, y, k=1))
    assert res.support == [5]


@pytest.mark.parametrize("seed", range(10))
def test_iolsr_residual_never_increases(seed):
    rng = np.random.default_rng(seed)
    M = gaussian_dictionary(rng, 20, 60)
    y = M @ sparse_vector(rng, 60, 7) + 0.05 * rng.standard_normal(20)
    res = syn.iolsr_solve(syn.SynthesisProblem(M, y, k=7))
    eps = [y @ y] + [e for _, e in res.trace]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(eps, eps[1:]))


def test_iolsr_residual_target_exact_recovery():
    rng = np.random.default_rng(3)
    Q = np.linalg.qr(rng.standard_normal((14, 14)))[0][:12]
    M = Q / np.linalg.norm(Q, axis=0)
    x = np.zeros(14)
    x[6] = 1.3
    res = syn.iolsr_solve(syn.SynthesisProblem(M, M @ x, eps_t=0.0))
    assert res.support == [6]


def test_rescaling_to_original_columns(rng):
    M = gaussian_dictionary(rng, 10, 20)
    scales = rng.uniform(0.5, 3.0, 20)
    x = sparse_vector(rng, 20, 3)
    y = M @ x
    res = syn.fols_solve(syn.SynthesisProblem(M * scales, y, k=3))
    assert np.allclose(res.xh_full * scales, x, atol=1e-10)
    assert res.residual_sq == pytest.approx(np.sum((y - (M * scales) @ res.xh_full) ** 2), abs=1e-20)


def test_residual_target_mode(rng):
    M = gaussian_dictionary(rng, 20, 40)
    y = rng.standard_normal(20)
    res = syn.fols_solve(syn.SynthesisProblem(M, y, eps_t=0.3 * (y @ y)))
    assert res.residual_sq <= 0.3 * (y @ y)
    assert all(e > 0.3 * (y @ y) for _, e in res.trace[:-1])


def test_no_progress_raised():
    M = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    y = np.array([0.0, 0.0, 1.0])
    with pytest.raises(NoProgress):
        syn.omp_solve(syn.SynthesisProblem(M, y, k=1))
    with pytest.raises(NoProgress):
        syn.fols_solve(syn.SynthesisProblem(M, y, k=1))


def test_iteration_cap_floor(rng):
    p = syn.SynthesisProblem(gaussian_dictionary(rng, 10, 20), rng.standard_normal(10), k=3)
    assert syn.iteration_cap(p) >= 300


def test_result_json(rng):
    M = gaussian_dictionary(rng, 10, 20)
    out = syn.olsr_solve(syn.SynthesisProblem(M, M[:, 2] - M[:, 9], k=2)).to_json()
    assert set(out) >= {"support", "xh", "residual_sq", "iterations"}
    assert sorted(out["support"]) == [2, 9] and len(out["xh"]) == 20
