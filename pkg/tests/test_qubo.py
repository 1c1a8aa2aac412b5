import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fcesched.errors import ConfigError, DimensionError, InfeasibleError
from fcesched.qubo import (
    QuboProblem,
    build_qubo,
    decode_schedule,
    direct_energy,
    encode_schedule,
    energies,
    energy,
    is_feasible,
    s_max,
    schedule_labels,
    schedule_score,
    var_index,
)
from fcesched.trace import ALLOWED_WEIGHTS, TransitionMatrix, default_levels

PLANTED_2 = TransitionMatrix([20, 60], np.array([[0, 99], [99, 0]]))

weights = st.sampled_from(ALLOWED_WEIGHTS)


@st.composite
def matrices(draw, z_min=2, z_max=5):
    z = draw(st.integers(z_min, z_max))
    w = draw(arrays(np.int64, (z, z), elements=weights))
    return TransitionMatrix(list(range(z)), w)


def test_var_index():
    assert var_index(0, 0, 9) == 0
    assert var_index(1, 0, 9) == 9
    assert var_index(9, 8, 9) == 89
    with pytest.raises(IndexError):
        var_index(0, 9, 9)
    with pytest.raises(IndexError):
        var_index(10, 0, 9, n_orders=10)


def test_small_instance_energies():
    q = build_qubo(PLANTED_2, 2)
    assert energy(q, [0, 0, 0, 0]) == 2000
    assert energy(q, [1, 0, 0, 1]) == -693
    assert energy(q, [1, 1, 1, 1]) == 614


def test_expansion_coefficients():
    q = build_qubo(PLANTED_2, 2, a=3.0, b=2.0)
    assert q.offset == 6.0
    assert q.linear.tolist() == [-3.0] * 4
    assert q.quadratic == {(0, 1): 6.0, (2, 3): 6.0, (0, 3): -198.0, (1, 2): -198.0}


def test_exhaustive_expansion_small_instance():
    q = build_qubo(PLANTED_2, 2)
    for bits in itertools.product([0, 1], repeat=4):
        assert energy(q, bits) == pytest.approx(direct_energy(bits, PLANTED_2, 2), abs=1e-9)


def test_random_bitstrings_match_direct_formula():
    rng = np.random.default_rng(11)
    w = TransitionMatrix(default_levels(9), rng.choice(ALLOWED_WEIGHTS, size=(9, 9)))
    q = build_qubo(w, 3)
    xs = rng.integers(0, 2, size=(100, q.num_vars))
    batch = energies(q, xs)
    for x, e in zip(xs, batch):
        assert e == pytest.approx(direct_energy(x, w, 3), abs=1e-9)
        assert e == pytest.approx(energy(q, x), abs=1e-9)


def test_build_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        build_qubo(PLANTED_2, 1)
    with pytest.raises(ConfigError):
        build_qubo(PLANTED_2, 2, a=0)
    with pytest.raises(ConfigError):
        build_qubo(PLANTED_2, 2, b=-1)


def test_energy_length_mismatch():
    q = build_qubo(PLANTED_2, 2)
    with pytest.raises(DimensionError):
        energy(q, [0, 1, 0])


def test_problem_is_immutable():
    q = build_qubo(PLANTED_2, 2)
    with pytest.raises(ValueError):
        q.linear[0] = 5.0
    with pytest.raises(AttributeError):
        q.offset = 0.0


def test_quadratic_keys_normalized():
    q = QuboProblem(1, 3, 1.0, 0.0, np.zeros(3), {(2, 0): 1.0, (0, 2): 2.0}, 0.0)
    assert q.quadratic == {(0, 2): 3.0}
    with pytest.raises(DimensionError):
        QuboProblem(1, 3, 1.0, 0.0, np.zeros(3), {(1, 1): 1.0}, 0.0)


def test_feasibility():
    assert is_feasible([1, 0, 0, 1], 2, 2)
    assert not is_feasible([0, 0, 0, 1], 2, 2)
    assert not is_feasible([1, 1, 0, 1], 2, 2)


def test_decode_small():
    assert decode_schedule([1, 0, 0, 1], 2, 2) == [0, 1]


def test_decode_reports_orders():
    with pytest.raises(InfeasibleError) as err:
        decode_schedule([1, 1, 0, 1, 0, 0], 3, 2)
    assert err.value.orders == [0, 2]


def test_figure_schedule_roundtrip():
    levels = default_levels(9)
    labels = [60, 40, 90, 30, 50, 20, 50, 70, 20, 40]
    sched = [levels.index(v) for v in labels]
    x = encode_schedule(sched, 9)
    assert x.size == 90 and x.sum() == 10
    w = TransitionMatrix(levels, np.zeros((9, 9), dtype=int))
    assert schedule_labels(w, decode_schedule(x, 10, 9)) == labels


def test_s_max_examples():
    assert s_max(PLANTED_2, [0, 1, 0]) == 198
    w = TransitionMatrix([1, 2], np.array([[0, 50], [70, 0]]))
    assert s_max(w, [0, 0, 0]) == 0
    with pytest.raises(IndexError):
        s_max(w, [0, 2])


def test_schedule_score_without_matrix():
    q = build_qubo(PLANTED_2, 2)
    plain = QuboProblem(2, 2, q.a, q.b, q.linear, q.quadratic, q.offset)
    assert schedule_score(plain, [0, 1], -693.0) == 99
    assert schedule_score(q, [0, 1], -693.0) == 99


# --- properties ---------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(matrices(), st.integers(2, 5), st.data())
def test_feasible_energy_identity(w, n, data):
    sched = data.draw(st.lists(st.integers(0, w.z - 1), min_size=n, max_size=n))
    q = build_qubo(w, n)
    x = encode_schedule(sched, w.z)
    assert energy(q, x) == -q.b * s_max(w, sched)
    assert decode_schedule(x, n, w.z) == sched


@settings(max_examples=60, deadline=None)
@given(matrices(), st.integers(2, 4), st.data(),
       st.floats(0.5, 2000), st.floats(0, 20))
def test_expanded_equals_direct(w, n, data, a, b):
    x = data.draw(arrays(np.uint8, n * w.z, elements=st.integers(0, 1)))
    q = build_qubo(w, n, a, b)
    assert energy(q, x) == pytest.approx(direct_energy(x, w, n, a, b), rel=1e-12, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(matrices(), st.integers(2, 4))
def test_zero_bitstring_costs_a_per_order(w, n):
    q = build_qubo(w, n)
    assert energy(q, np.zeros(q.num_vars)) == q.a * n
