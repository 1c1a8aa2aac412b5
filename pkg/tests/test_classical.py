import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fcesched.classical import (
    SaParams,
    brute_force,
    brute_result,
    dp_exact,
    dp_result,
    layered_global_min,
    sa_solve,
)
from fcesched.errors import ConfigError, SizeError
from fcesched.qubo import build_qubo, energy, s_max
from fcesched.trace import ALLOWED_WEIGHTS, TransitionMatrix, planted_transition_matrix

PLANTED_2 = TransitionMatrix([20, 60], np.array([[0, 99], [99, 0]]))
FAST = SaParams(num_reads=10, sweeps=2000, seed=3)


def enumerate_schedules(w, n):
    return max(s_max(w, s) for s in itertools.product(range(w.z), repeat=n))


# --- simulated annealing ------------------------------------------------------


def test_sa_small_instance():
    r = sa_solve(build_qubo(PLANTED_2, 2), FAST)
    assert r.best_energy == -693
    assert r.feasible
    assert len(r.per_trial) == 10


def test_sa_penalty_only():
    q = build_qubo(PLANTED_2, 3, b=0)
    r = sa_solve(q, FAST)
    assert r.best_energy == 0
    assert r.feasible


def test_sa_deterministic():
    q = build_qubo(planted_transition_matrix(9, seed=1), 3)
    a = sa_solve(q, SaParams(num_reads=3, sweeps=500, seed=5))
    b = sa_solve(q, SaParams(num_reads=3, sweeps=500, seed=5))
    assert [t.energy for t in a.per_trial] == [t.energy for t in b.per_trial]
    for ta, tb in zip(a.per_trial, b.per_trial):
        np.testing.assert_array_equal(ta.bits, tb.bits)
    assert a.best_energy == b.best_energy


def test_sa_reads_are_independent_streams():
    # read r depends only on (seed, r): a 2-read run is a prefix of a 4-read run
    q = build_qubo(planted_transition_matrix(9, seed=1), 3)
    short = sa_solve(q, SaParams(num_reads=2, sweeps=300, seed=9))
    long = sa_solve(q, SaParams(num_reads=4, sweeps=300, seed=9))
    for ta, tb in zip(short.per_trial, long.per_trial):
        np.testing.assert_array_equal(ta.bits, tb.bits)


def test_sa_trial_records_consistent():
    q = build_qubo(planted_transition_matrix(9, seed=2), 4)
    r = sa_solve(q, SaParams(num_reads=4, sweeps=3000, seed=0))
    for t in r.per_trial:
        assert t.energy == energy(q, t.bits)
        if t.feasible:
            assert t.energy == -q.b * t.s_max
    assert r.best_energy == min(t.energy for t in r.per_trial)


@pytest.mark.parametrize(
    "kwargs",
    [{"num_reads": 0}, {"sweeps": 0}, {"beta_hot": 0.0}, {"beta_hot": 2.0, "beta_cold": 1.0}],
)
def test_sa_params_validation(kwargs):
    with pytest.raises(ConfigError):
        SaParams(**kwargs)


# --- brute force --------------------------------------------------------------


def test_brute_small_instance_tie_break():
    bits, e = brute_force(build_qubo(PLANTED_2, 2))
    assert e == -693
    assert bits.tolist() == [1, 0, 0, 1]


def test_brute_zero_matrix():
    w = TransitionMatrix([1, 2], np.zeros((2, 2), dtype=int))
    bits, e = brute_force(build_qubo(w, 3))
    assert e == 0
    assert bits.reshape(3, 2).sum(axis=1).tolist() == [1, 1, 1]


def test_brute_size_cap():
    w = planted_transition_matrix(9)
    with pytest.raises(SizeError):
        brute_force(build_qubo(w, 3))


def test_brute_result_wraps():
    r = brute_result(build_qubo(PLANTED_2, 2))
    assert r.backend == "brute" and r.schedule == [0, 1] and r.s_max == 99


# --- dynamic programming ------------------------------------------------------


def test_dp_forced_alternation():
    sched, score, e = dp_exact(PLANTED_2, 3)
    assert sched == [0, 1, 0] and score == 198 and e == -7 * 198


def test_dp_stays_on_diagonal():
    # [[5, 1], [1, 5]] scaled onto the allowed weight set
    w = TransitionMatrix([1, 2], np.array([[50, 10], [10, 50]]))
    sched, score, _ = dp_exact(w, 3)
    assert sched == [0, 0, 0] and score == 100


def test_dp_matches_enumeration_seeded():
    rng = np.random.default_rng(5)
    w = TransitionMatrix(list(range(9)), rng.choice(ALLOWED_WEIGHTS, size=(9, 9)))
    sched, score, _ = dp_exact(w, 5)
    assert score == enumerate_schedules(w, 5)
    assert s_max(w, sched) == score


def test_dp_lexicographic_tie_break():
    sched, _, _ = dp_exact(PLANTED_2, 4)
    assert sched == [0, 1, 0, 1]


def test_dp_requires_two_orders():
    with pytest.raises(ConfigError):
        dp_exact(PLANTED_2, 1)


def test_dp_planted_alternates():
    w = planted_transition_matrix(9, seed=3)
    i, j = w.level_index(20), w.level_index(60)
    sched, score, _ = dp_exact(w, 6)
    assert sched in ([i, j] * 3, [j, i] * 3)
    assert score == 99 * 5
    r = dp_result(w, 6, build_qubo(w, 6))
    assert r.best_energy == -7 * 99 * 5


# --- global optimum over all bitstrings ---------------------------------------


def test_layered_min_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(5):
        w = TransitionMatrix(list(range(3)), rng.choice(ALLOWED_WEIGHTS, size=(3, 3)))
        q = build_qubo(w, 3, a=50.0, b=7.0)
        _, e_brute = brute_force(q)
        bits, e_layer = layered_global_min(w, 3, a=50.0, b=7.0)
        assert e_layer == pytest.approx(e_brute)
        assert energy(q, bits) == pytest.approx(e_layer)


@pytest.mark.parametrize("seed", range(5))
def test_planted_family_optimum_is_feasible(seed):
    w = planted_transition_matrix(9, seed=seed)
    for n in (2, 6, 10):
        bits, e = layered_global_min(w, n)
        assert e == dp_exact(w, n)[2]


# --- properties ---------------------------------------------------------------


@st.composite
def small_matrices(draw):
    z = draw(st.integers(2, 4))
    w = draw(arrays(np.int64, (z, z), elements=st.sampled_from(ALLOWED_WEIGHTS)))
    return TransitionMatrix(list(range(z)), w)


@settings(max_examples=50, deadline=None)
@given(small_matrices(), st.integers(2, 4))
def test_dp_equals_schedule_enumeration(w, n):
    sched, score, e = dp_exact(w, n)
    assert score == enumerate_schedules(w, n)
    assert e == -7.0 * score


@settings(max_examples=30, deadline=None)
@given(small_matrices(), st.integers(2, 3))
def test_brute_force_never_above_dp(w, n):
    q = build_qubo(w, n)
    if q.num_vars > 12:
        return
    _, e = brute_force(q)
    assert e <= dp_exact(w, n)[2] + 1e-9
