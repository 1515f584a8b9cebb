import itertools
import math

import numpy as np
import pytest
from conftest import ising_models
from hypothesis import given
from hypothesis import strategies as st

from pbit_forge.errors import CapacityError, ContractError
from pbit_forge.ising import (
    IsingModel,
    SpinDomain,
    SpinState,
    all_states,
    conditional_flip_probability,
    energies,
    energy,
    exact_boltzmann,
    flip_gain,
    local_field,
    sigmoid,
    total_variation,
)


def brute_energy(J, h, s):
    n = len(s)
    pair = sum(J[i, j] * s[i] * s[j] for i in range(n) for j in range(i + 1, n))
    return -pair - sum(h[i] * s[i] for i in range(n))


def test_two_spin_ferromagnet_energies():
    m = IsingModel.from_dense([[0, 1], [1, 0]])
    assert energy(m, SpinState([1, 1])) == -1
    assert energy(m, SpinState([1, -1])) == 1


def test_bias_only_qubo():
    m = IsingModel.from_dense(np.zeros((2, 2)), [1, 1], SpinDomain.ZERO_ONE)
    assert energy(m, SpinState([1, 1], SpinDomain.ZERO_ONE)) == -2
    assert energy(m, SpinState([0, 0], SpinDomain.ZERO_ONE)) == 0


@given(ising_models(), st.integers(0, 2**32 - 1))
def test_energy_matches_direct_double_sum(model, seed):
    s = SpinState.random(model.n, model.domain, np.random.default_rng(seed))
    assert energy(model, s) == pytest.approx(brute_energy(model.J, model.h, s.values), abs=1e-9)


@given(ising_models(max_n=6))
def test_vectorized_energies_agree(model):
    states = all_states(model.n, model.domain)
    want = [energy(model, SpinState(row, model.domain)) for row in states]
    np.testing.assert_allclose(energies(model, states), want, atol=1e-9)


@given(ising_models(), st.data())
def test_flip_energy_is_determined_by_local_field(model, data):
    s = SpinState.random(model.n, model.domain, np.random.default_rng(data.draw(st.integers(0, 999))))
    i = data.draw(st.integers(0, model.n - 1))
    t = s.flipped(i)
    f = local_field(model, s, i)
    delta = float(t.values[i]) - float(s.values[i])
    assert energy(model, t) - energy(model, s) == pytest.approx(-delta * f, abs=1e-9)


@given(ising_models(max_n=6), st.floats(0.0, 3.0), st.data())
def test_conditional_matches_boltzmann_ratio(model, beta, data):
    s = SpinState.random(model.n, model.domain, np.random.default_rng(data.draw(st.integers(0, 999))))
    i = data.draw(st.integers(0, model.n - 1))
    hi = s.values.copy()
    hi[i] = 1
    lo = s.values.copy()
    lo[i] = model.domain.low
    e_hi = energy(model, SpinState(hi, model.domain))
    e_lo = energy(model, SpinState(lo, model.domain))
    want = 1.0 / (1.0 + math.exp(beta * (e_hi - e_lo)))
    assert conditional_flip_probability(model, s, i, beta) == pytest.approx(want, abs=1e-12)


def test_flip_gain_per_domain():
    assert flip_gain(SpinDomain.PLUS_MINUS_ONE) == 2
    assert flip_gain(SpinDomain.ZERO_ONE) == 1


def test_conditional_at_zero_beta_is_half():
    m = IsingModel.from_dense([[0, 3], [3, 0]], [1, -2])
    assert conditional_flip_probability(m, SpinState([1, -1]), 0, 0.0) == 0.5


def test_local_field_index_out_of_range():
    m = IsingModel.from_dense(np.zeros((3, 3)))
    with pytest.raises(IndexError):
        local_field(m, SpinState([1, 1, 1]), 3)


@given(ising_models(max_n=7), st.floats(0.0, 2.0))
def test_boltzmann_normalized_and_ordered(model, beta):
    table = exact_boltzmann(model, beta)
    assert table.probs.sum() == pytest.approx(1.0)
    # lower energy never less probable
    order = np.argsort(table.energies, kind="stable")
    assert np.all(np.diff(table.probs[order]) <= 1e-12)


def test_boltzmann_uniform_at_zero_beta():
    m = IsingModel.from_dense(np.ones((4, 4)) - np.eye(4))
    np.testing.assert_allclose(exact_boltzmann(m, 0.0).probs, 1 / 16)


def test_boltzmann_capacity():
    m = IsingModel.from_dense(np.zeros((21, 21)))
    with pytest.raises(CapacityError):
        exact_boltzmann(m, 1.0)


def test_all_states_code_order():
    rows = all_states(3, SpinDomain.ZERO_ONE)
    for k, row in enumerate(rows):
        assert SpinState(row, SpinDomain.ZERO_ONE).index() == k


@given(ising_models(max_n=6), st.data())
def test_energy_invariant_under_relabeling(model, data):
    perm = data.draw(st.permutations(range(model.n)))
    s = SpinState.random(model.n, model.domain, np.random.default_rng(3))
    moved = model.permuted(perm)
    assert energy(moved, SpinState(s.values[list(perm)], model.domain)) == pytest.approx(energy(model, s))


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_sigmoid_symmetry_and_range(x):
    p = sigmoid(x)
    assert 0.0 <= p <= 1.0
    assert p + sigmoid(-x) == pytest.approx(1.0)


def test_sigmoid_no_overflow():
    np.testing.assert_array_equal(sigmoid(np.array([-1e6, 1e6])), [0.0, 1.0])
    assert sigmoid(-1e6) == 0.0


@pytest.mark.parametrize(
    "J",
    [
        [[0, 1], [2, 0]],  # asymmetric
        [[1, 0], [0, 0]],  # diagonal
        [[0, 1, 0], [1, 0, 0]],  # not square
    ],
)
def test_bad_coupling_matrices(J):
    with pytest.raises(ContractError):
        IsingModel.from_dense(J)


def test_domain_mismatch_rejected():
    m = IsingModel.from_dense(np.zeros((2, 2)), domain=SpinDomain.ZERO_ONE)
    with pytest.raises(ContractError):
        energy(m, SpinState([1, -1]))
    with pytest.raises(ContractError):
        SpinState([0, 2], SpinDomain.ZERO_ONE)


def test_from_couplings_merges_and_drops_zeros():
    m = IsingModel.from_couplings(3, {(0, 1): 1.0, (1, 0): -1.0, (2, 1): 2.0})
    assert m.nnz == 2
    assert m.J[1, 2] == 2.0


def test_sparsity_counts_full_matrix():
    m = IsingModel.from_couplings(4, {(0, 1): 1.0})
    assert m.sparsity == pytest.approx(1 - 2 / 16)


def test_total_variation():
    assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5
    for p in itertools.permutations([0.2, 0.3, 0.5]):
        assert total_variation(p, p) == 0.0
