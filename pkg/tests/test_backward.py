import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boomp.backward import (
    BackwardConfig,
    Criterion,
    boomp_run,
    deletion_residual,
    downdate_coefficients,
    select_deletion_index,
)
from boomp.core import (
    Decomposition,
    Dictionary,
    EmptyDecomposition,
    IndexOutOfRange,
    Infeasible,
    decomposition_from_indices,
)
from boomp.oracle import best_single_deletion, least_squares_projection
from boomp.verify import biorthogonality_error, residual_orthogonality_error

from conftest import SQ2, random_decomposition


def test_config_validation():
    with pytest.raises(ValueError):
        BackwardConfig()
    with pytest.raises(ValueError):
        BackwardConfig(target_count=0)
    with pytest.raises(ValueError):
        BackwardConfig(error_budget=-1.0)
    assert BackwardConfig(3, criterion="naive_abs_coeff").criterion is Criterion.NAIVE_ABS_COEFF


# --- select_deletion_index ---------------------------------------------------

def test_skew_pair_criterion(skew_pair):
    d, f, state = skew_pair
    j, value = select_deletion_index(state)
    assert j == 0
    assert value == pytest.approx(0.5, rel=1e-12)
    # oracle: deleting position 0 costs less than deleting position 1
    keep1 = least_squares_projection(f, [d.matrix[1]]).residual_norm
    keep0 = least_squares_projection(f, [d.matrix[0]]).residual_norm
    assert keep1 ** 2 == pytest.approx(0.5, rel=1e-12)
    assert keep0 ** 2 == pytest.approx(9.0, rel=1e-12)
    assert best_single_deletion(f, list(d.matrix))[0] == 0


def test_zero_coefficient_is_deleted_for_free():
    d = Dictionary([[1.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 1.0]])
    f = np.array([1.0, 2.0, 0.0])
    state = decomposition_from_indices(d, [0, 1, 2], f)
    j, value = select_deletion_index(state)
    assert j == 2
    assert value == pytest.approx(0.0, abs=1e-24)


def test_orthonormal_case_is_smallest_coefficient():
    d = Dictionary(np.eye(4))
    f = np.array([3.0, -0.5, 2.0, 1.0])
    state = decomposition_from_indices(d, range(4), f)
    assert select_deletion_index(state)[0] == 1


def test_naive_criterion_uses_absolute_coefficients(skew_pair):
    _, _, state = skew_pair
    assert select_deletion_index(state, Criterion.NAIVE_ABS_COEFF) == (0, 1.0)


def test_empty_decomposition():
    with pytest.raises(EmptyDecomposition):
        select_deletion_index(Decomposition(dim=2))


# --- downdate_coefficients ---------------------------------------------------

def test_orthonormal_coefficients_unchanged():
    d = Dictionary(np.eye(3))
    f = np.array([1.0, 2.0, 3.0])
    state = decomposition_from_indices(d, range(3), f)
    np.testing.assert_allclose(downdate_coefficients(state, 1), [1.0, 3.0])


def test_skew_pair_drop_second(skew_pair):
    d, f, state = skew_pair
    c = downdate_coefficients(state, 1)
    expected = least_squares_projection(f, [d.matrix[0]]).coefficients
    np.testing.assert_allclose(c, expected, atol=1e-13)
    np.testing.assert_allclose(c, [2.0], atol=1e-13)


def test_zero_coefficient_deletion_keeps_others():
    d = Dictionary([[1.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 1.0]])
    f = np.array([1.0, 2.0, 0.0])
    state = decomposition_from_indices(d, [0, 1, 2], f)
    before = state.coefficients.copy()
    np.testing.assert_allclose(downdate_coefficients(state, 2), before[:2], atol=1e-14)


def test_bad_position(skew_pair):
    with pytest.raises(IndexOutOfRange):
        downdate_coefficients(skew_pair[2], 2)
    with pytest.raises(IndexOutOfRange):
        deletion_residual(skew_pair[2], 5)


# --- deletion_residual -------------------------------------------------------

def test_zero_coefficient_residual():
    d = Dictionary([[1.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 1.0]])
    f = np.array([1.0, 2.0, 0.0])
    state = decomposition_from_indices(d, [0, 1, 2], f)
    vec, sq = deletion_residual(state, 2)
    np.testing.assert_allclose(vec, 0.0, atol=1e-14)
    assert sq == pytest.approx(0.0, abs=1e-24)


def test_skew_pair_residual(skew_pair):
    d, f, state = skew_pair
    vec, sq = deletion_residual(state, 0)
    full = least_squares_projection(f, list(d.matrix)).approximation
    reduced = least_squares_projection(f, [d.matrix[1]]).approximation
    np.testing.assert_allclose(vec, full - reduced, atol=1e-13)
    np.testing.assert_allclose(vec, [-0.5, 0.5], atol=1e-13)
    assert sq == pytest.approx(0.5, rel=1e-12)
    assert state.coefficients.size == 2  # not mutated


def test_single_atom_residual_is_whole_approximation():
    d = Dictionary([[3.0, 4.0]])
    f = np.array([1.0, 1.0])
    state = decomposition_from_indices(d, [0], f)
    vec, _ = deletion_residual(state, 0)
    np.testing.assert_allclose(vec, state.approximation(), atol=1e-14)


# --- boomp_run -----------------------------------------------------------------

def test_target_equal_to_size_is_noop(skew_pair):
    d, f, state = skew_pair
    out, trace = boomp_run(state, f, BackwardConfig(target_count=2))
    assert len(trace) == 0
    np.testing.assert_array_equal(out.coefficients, state.coefficients)


def test_input_state_not_mutated(skew_pair):
    d, f, state = skew_pair
    before = state.copy()
    boomp_run(state, f, BackwardConfig(target_count=1))
    assert state.selected == before.selected
    np.testing.assert_array_equal(state.duals, before.duals)


def test_one_step_on_random_six_atoms():
    rng = np.random.default_rng(21)
    d, f, state = random_decomposition(rng, 6, 10)
    out, trace = boomp_run(state, f, BackwardConfig(target_count=5))
    ref = least_squares_projection(f, list(out.atoms))
    np.testing.assert_allclose(out.coefficients, ref.coefficients,
                               rtol=1e-8, atol=1e-8 * np.linalg.norm(ref.coefficients))
    assert out.residual_norm == pytest.approx(ref.residual_norm, rel=1e-8)


def test_target_larger_than_size_is_infeasible(skew_pair):
    d, f, state = skew_pair
    with pytest.raises(Infeasible):
        boomp_run(state, f, BackwardConfig(target_count=3))


def test_zero_budget_deletes_nothing():
    rng = np.random.default_rng(1)
    d, f, state = random_decomposition(rng, 6, 10)
    out, trace = boomp_run(state, f, BackwardConfig(error_budget=0.0))
    assert len(trace) == 0 and len(out) == 6
    with pytest.raises(Infeasible) as info:
        boomp_run(state, f, BackwardConfig(target_count=3, error_budget=0.0))
    assert len(info.value.trace) == 0


def test_budget_is_never_exceeded():
    rng = np.random.default_rng(9)
    d, f, state = random_decomposition(rng, 20, 40)
    budget = 0.9 * np.linalg.norm(f)
    out, trace = boomp_run(state, f, BackwardConfig(error_budget=budget))
    assert out.residual_norm <= budget
    assert len(out) > 0
    # the next deletion would have crossed it
    j, value = select_deletion_index(out)
    assert np.sqrt(out.residual_norm ** 2 + value) > budget


def test_theorem1_beats_naive_on_skewed_atoms():
    d = Dictionary([[1.0, 0.0, 0.0], [1.0, 0.05, 0.0], [0.0, 0.0, 1.0]])
    f = np.array([1.0, 0.01, 0.2])
    state = decomposition_from_indices(d, [0, 1, 2], f)
    good, _ = boomp_run(state, f, BackwardConfig(2))
    assert select_deletion_index(state, Criterion.NAIVE_ABS_COEFF)[0] == 2
    assert select_deletion_index(state)[0] == 1
    naive, _ = boomp_run(state, f, BackwardConfig(2, criterion=Criterion.NAIVE_ABS_COEFF))
    assert good.residual_norm < naive.residual_norm


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), extra=st.integers(0, 12))
def test_criterion_matches_exhaustive_deletion(seed, n, extra):
    rng = np.random.default_rng(seed)
    d, f, state = random_decomposition(rng, n, n + extra)
    j, value = select_deletion_index(state)
    norms = [least_squares_projection(f, [a for k, a in enumerate(state.atoms) if k != i]).residual_norm
             for i in range(n)]
    best = min(norms)
    assert norms[j] <= best + 1e-9 * np.linalg.norm(f)
    if sorted(norms)[1] - best > 1e-9 * np.linalg.norm(f):
        assert j == best_single_deletion(f, list(state.atoms))[0]
    vec, sq = deletion_residual(state, j)
    full = least_squares_projection(f, list(state.atoms)).approximation
    reduced = least_squares_projection(f, [a for k, a in enumerate(state.atoms) if k != j]).approximation
    actual = np.sum((full - reduced) ** 2)
    assert sq == pytest.approx(actual, rel=1e-10, abs=1e-12 * np.sum(f ** 2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 50), extra=st.integers(10, 150),
       keep=st.floats(0, 1))
def test_trace_invariants(seed, n, extra, keep):
    rng = np.random.default_rng(seed)
    d, f, state = random_decomposition(rng, n, min(n + extra, 200))
    target = max(1, int(keep * n))
    seen = []

    def observe(s, step):
        ref = least_squares_projection(f, list(s.atoms)).coefficients
        seen.append((np.linalg.norm(s.coefficients - ref) / np.linalg.norm(ref),
                     biorthogonality_error(s), residual_orthogonality_error(s, f)))

    out, trace = boomp_run(state, f, BackwardConfig(target), callback=observe)
    assert len(out) == target
    for coeff_err, bio, orth in seen:
        assert coeff_err <= 1e-8
        assert bio <= 1e-8
        assert orth <= 1e-8
    norms = [trace.initial_residual_norm] + trace.residual_norms
    assert all(b >= a * (1 - 1e-12) for a, b in zip(norms, norms[1:]))
    lhs = out.residual_norm ** 2
    rhs = state.residual_norm ** 2 + sum(s.criterion_value for s in trace.steps)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-20)
