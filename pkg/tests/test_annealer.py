import numpy as np
import pytest
from conftest import ising_models
from hypothesis import given
from hypothesis import strategies as st

from pbit_forge.annealer import (
    AnnealSchedule,
    IsingMachine,
    MachineConfig,
    SmtjAssignment,
    UpdateMode,
    UpdateOrder,
    chromatic_sweep,
    effective_beta,
    gibbs_step,
    run_annealing,
    state_histogram,
)
from pbit_forge.devices import CrossbarArray, SmtjDevice
from pbit_forge.errors import ContractError
from pbit_forge.ising import (
    IsingModel,
    SpinDomain,
    SpinState,
    conditional_flip_probability,
    energy,
    exact_boltzmann,
    total_variation,
)
from pbit_forge.mapping import WeightedGraph, conflict_coloring, map_coloring, map_maxcut, to_crossbar

PATH4 = WeightedGraph(4, ((0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)))


def ideal_machine(model, **kw):
    return IsingMachine(model, MachineConfig(mode=UpdateMode.IDEAL, **kw), g_scale=1.0)


def crossbar_machine(model, levels, g_scale, mode=UpdateMode.HARDWARE, classes=None, **kw):
    low = to_crossbar(model, levels, g_scale)
    arr = CrossbarArray.ideal(low.conductance_targets, low.column_polarity)
    return IsingMachine(model, MachineConfig(mode=mode, pulse_width=None, **kw), crossbar=arr, lowering=low,
                        color_classes=classes)


# --- schedule ----------------------------------------------------------------

def test_schedule_steps_every_block():
    s = AnnealSchedule(0.035, 0.25, 50, 7200)
    assert s.n_steps == 144
    assert s.v_at(0) == s.v_at(49) == 0.035
    assert s.v_at(50) > 0.035
    assert s.v_at(7199) == pytest.approx(0.25)
    assert len(np.unique(s.voltages())) == 144


@given(st.floats(0.01, 0.5), st.floats(0.0, 0.5), st.integers(1, 100), st.integers(1, 50))
def test_schedule_is_nondecreasing(v0, dv, step, blocks):
    s = AnnealSchedule(v0, min(v0 + dv, 1.0), step, step * blocks)
    assert np.all(np.diff(s.voltages()) >= 0)


@pytest.mark.parametrize("kw", [dict(v_start=0.3, v_end=0.2), dict(v_end=1.5), dict(updates_per_step=0),
                                dict(total_updates=10), dict(v_ref=0.0)])
def test_schedule_validation(kw):
    with pytest.raises(ContractError):
        AnnealSchedule(**kw)


def test_effective_beta():
    assert effective_beta(0.125, 0.25) == 0.5


# --- machine -----------------------------------------------------------------

def test_hardware_mode_needs_crossbar():
    with pytest.raises(ContractError):
        IsingMachine(map_maxcut(PATH4))


def test_per_row_needs_one_device_per_spin():
    with pytest.raises(ContractError):
        IsingMachine(map_maxcut(PATH4), MachineConfig(mode=UpdateMode.IDEAL, assignment=SmtjAssignment.PER_ROW))


def test_boltzmann_beta_uses_domain_gain():
    m = ideal_machine(map_maxcut(PATH4))
    d = SmtjDevice()
    assert m.beta_hw(0.1) == pytest.approx(d.K * d.r_alpha * 1e-6 * 0.1)
    assert m.boltzmann_beta(0.1) == pytest.approx(m.beta_hw(0.1) / 2)


@given(st.integers(0, 15), st.floats(0.01, 0.05))
def test_hardware_chain_equals_ideal_sigmoid(code, v):
    model = map_maxcut(PATH4)
    hw = crossbar_machine(model, [33, 66, 99], 33.0)
    ideal = ideal_machine(model)
    ideal.g_scale = 33.0
    s = SpinState(2 * ((code >> np.arange(4)) & 1) - 1)
    for i in range(4):
        assert hw.high_probability(s, i, v) == pytest.approx(ideal.high_probability(s, i, v), abs=1e-12)


@given(ising_models(max_n=6), st.floats(0.0, 0.2), st.data())
def test_ideal_probability_is_gibbs_conditional(model, v, data):
    m = ideal_machine(model)
    s = SpinState.random(model.n, model.domain, np.random.default_rng(data.draw(st.integers(0, 99))))
    i = data.draw(st.integers(0, model.n - 1))
    want = conditional_flip_probability(model, s, i, m.boltzmann_beta(v))
    assert m.high_probability(s, i, v) == pytest.approx(want, abs=1e-12)


def test_gibbs_step_frequency(rng):
    model = map_maxcut(PATH4)
    m = ideal_machine(model)
    s = SpinState([1, -1, 1, -1])
    p = m.high_probability(s, 1, 0.02)
    hits = sum(gibbs_step(m, s, 1, 0.02, rng).values[1] == 1 for _ in range(20000))
    assert abs(hits / 20000 - p) < 4 * np.sqrt(p * (1 - p) / 20000)
    with pytest.raises(IndexError):
        gibbs_step(m, s, 4, 0.02, rng)


def test_gibbs_step_only_touches_one_spin(rng):
    m = ideal_machine(map_maxcut(PATH4))
    s = SpinState([1, -1, 1, -1])
    for _ in range(50):
        t = gibbs_step(m, s, 2, 0.05, rng)
        assert np.array_equal(np.delete(t.values, 2), np.delete(s.values, 2))


# --- runs --------------------------------------------------------------------

@given(ising_models(max_n=7, integer=True), st.integers(0, 2**32 - 1),
       st.sampled_from([UpdateOrder.SEQUENTIAL, UpdateOrder.SHUFFLED]))
def test_trace_energies_match_recomputation(model, seed, order):
    m = ideal_machine(model, order=order)
    tr = run_annealing(m, AnnealSchedule(0.01, 0.1, 10, 200), rng=np.random.default_rng(seed), record_codes=True)
    n = model.n
    for t in range(0, 200, 17):
        code = int(tr.state_codes[t])
        bits = (code >> np.arange(n)) & 1
        s = SpinState(bits if model.domain is SpinDomain.ZERO_ONE else 2 * bits - 1, model.domain)
        assert energy(model, s) == pytest.approx(tr.energy[t], abs=1e-9)
    assert tr.final_energy == energy(model, tr.final_state)


def test_run_is_reproducible():
    model = map_coloring(WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0))), 2)
    m = crossbar_machine(model, [70, 140], 70.0, mac_noise=0.01)
    a = run_annealing(m, AnnealSchedule(0.02, 0.15, 50, 300), rng=np.random.default_rng(5))
    b = run_annealing(m, AnnealSchedule(0.02, 0.15, 50, 300), rng=np.random.default_rng(5))
    assert a.to_csv() == b.to_csv()
    assert a.final_state == b.final_state


def test_trace_csv_layout():
    m = ideal_machine(map_maxcut(PATH4))
    tr = run_annealing(m, AnnealSchedule(0.035, 0.035, 50, 100), rng=np.random.default_rng(0))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "iteration,v_read_mV,flipped_index,energy"
    assert len(lines) == 101
    it, mv, flipped, e = lines[1].split(",")
    assert it == "0" and mv == "3.50000e+01" and int(flipped) in (-1, 0)


def test_snapshots_and_init():
    model = map_maxcut(PATH4)
    m = ideal_machine(model, snapshot_stride=25)
    init = SpinState([1, 1, 1, 1])
    tr = run_annealing(m, AnnealSchedule(0.035, 0.035, 50, 100), init=init, rng=np.random.default_rng(0))
    assert [k for k, _ in tr.snapshots] == [24, 49, 74, 99]
    assert tr.initial_state == init
    with pytest.raises(ContractError):
        run_annealing(m, AnnealSchedule(), init=SpinState([1, 1]))


def test_annealing_solves_small_maxcut():
    model = map_maxcut(PATH4)
    m = crossbar_machine(model, [33, 66, 99], 33.0)
    tr = run_annealing(m, AnnealSchedule(0.035, 0.25, 50, 500), rng=np.random.default_rng(1))
    assert tr.final_energy == -6.0


def test_ideal_stationary_distribution(rng):
    model = IsingModel.from_dense([[0, 1, -0.5], [1, 0, 0.7], [-0.5, 0.7, 0]], [0.2, 0, -0.3])
    m = ideal_machine(model)
    v = 0.02
    tr = run_annealing(m, AnnealSchedule(v, v, 50, 200_000), rng=rng, record_codes=True)
    emp = state_histogram(tr, 3, burn_in=1000)
    want = exact_boltzmann(model, m.boltzmann_beta(v)).probs
    assert total_variation(emp, want) < 0.02


# --- chromatic ---------------------------------------------------------------

def test_chromatic_rejects_invalid_classes_before_mutation(rng):
    model = map_maxcut(PATH4)
    m = ideal_machine(model)
    s = SpinState([1, -1, 1, -1])
    before = s.values.copy()
    with pytest.raises(ContractError):
        chromatic_sweep(m, s, [[0, 1], [2, 3]], 0.1, rng)
    assert np.array_equal(s.values, before)
    with pytest.raises(ContractError):
        IsingMachine(model, MachineConfig(mode=UpdateMode.IDEAL, order=UpdateOrder.CHROMATIC),
                     color_classes=[[0, 1, 2, 3]])


def test_chromatic_class_members_use_pre_class_state():
    """At very high beta every member aligns with its field as computed before the class update."""
    model = map_maxcut(PATH4)
    m = ideal_machine(model)
    s = SpinState([1, 1, 1, 1])
    out = chromatic_sweep(m, s, [[0, 2], [1, 3]], 1.0, np.random.default_rng(0))
    # class {0,2}: fields push both to -1; then {1,3} see s0=s2=-1 and go +1
    assert out.values.tolist() == [-1, 1, -1, 1]


def test_chromatic_run_and_hardware_equivalence():
    model = map_coloring(WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0))), 2)
    classes = conflict_coloring(model)
    hw = crossbar_machine(model, [70, 140], 70.0, classes=classes, order=UpdateOrder.CHROMATIC)
    ideal = crossbar_machine(model, [70, 140], 70.0, UpdateMode.IDEAL, classes, order=UpdateOrder.CHROMATIC)
    sched = AnnealSchedule(0.02, 0.15, 10, 60)
    init = SpinState([0] * 6, SpinDomain.ZERO_ONE)
    a = run_annealing(hw, sched, init=init, rng=np.random.default_rng(3))
    b = run_annealing(ideal, sched, init=init, rng=np.random.default_rng(3))
    assert a.to_csv() == b.to_csv()
    assert a.final_energy == -3.0
