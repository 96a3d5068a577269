from dataclasses import replace

import numpy as np
import pytest

from asnsim.adversary import AttackRule, AttackScript, Constant, ModulatedVector, Replay
from asnsim.dynamics import Role
from asnsim.errors import SimulationError
from asnsim.generators import random_scenario
from asnsim.graph import DirectedGraph, complete_graph
from asnsim.simulate import relative_error, role_at, run_scenario
from helpers import main_scenario, truthful_scenario


def test_relative_error_examples():
    x = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(relative_error(x, (1, 2), {1, 2}, {}), [2.0, 2.0])
    same = np.ones((3, 2))
    np.testing.assert_allclose(relative_error(same, (1, 2, 3), {1, 2, 3}, {}), 0.0)


def test_relative_error_admissible_uses_reference_set():
    x = np.array([[1.0], [4.0], [0.0]])
    out = relative_error(x, (1, 2, 3), {1, 3}, {2: frozenset({1, 3})})
    assert out[1] == pytest.approx(abs(2 * 4.0 - 1.0 - 0.0))
    assert out[0] == pytest.approx(abs(2 * 1.0 - 1.0))


def test_relative_error_accepts_time_axis():
    x = np.random.default_rng(0).normal(size=(5, 4, 3))
    stacked = relative_error(x, (1, 2, 3, 4), {1, 2, 3}, {4: frozenset({1})})
    for k in range(5):
        np.testing.assert_allclose(stacked[k], relative_error(x[k], (1, 2, 3, 4), {1, 2, 3}, {4: frozenset({1})}))


def test_truthful_consensus_without_defense():
    rng = np.random.default_rng(3)
    g = complete_graph(range(1, 6))
    trace = run_scenario(truthful_scenario(g, g, rng, defense="none", horizon=2000))
    assert trace.converged
    assert trace.sigma[-1].max() < 1e-5
    assert trace.flags == [] and len(trace.epochs) == 1
    # the average is preserved on a balanced graph
    np.testing.assert_allclose(trace.states[-1].mean(axis=0), trace.states[0].mean(axis=0), atol=1e-9)


def test_runs_are_deterministic():
    a = run_scenario(main_scenario())
    b = run_scenario(main_scenario())
    np.testing.assert_array_equal(a.states, b.states)
    assert a.flags == b.flags
    assert a.summary() == b.summary()


def test_two_epochs_on_substituted_topology():
    trace = run_scenario(main_scenario())
    assert trace.converged
    assert [e.k for e in trace.epochs] == [0, 120, 400]
    assert [e.leader for e in trace.epochs[1:]] == [8, 10]
    assert trace.byzantine_of_row[-1] == {1, 4, 9}
    # epoch count equals the number of instants where the normal set shrank
    shrinks = sum(1 for a, b in zip(trace.byzantine_of_row, trace.byzantine_of_row[1:]) if a != b)
    assert shrinks == len(trace.epochs) - 1


def test_reconstruction_does_not_move_states():
    asns = run_scenario(main_scenario())
    plain = run_scenario(main_scenario(defense="none", horizon=121))
    # rows up to and including k1 only depend on the graph before reconstruction
    np.testing.assert_array_equal(asns.states[:121], plain.states[:121])
    assert not np.array_equal(asns.states[121], plain.states[121])


def test_oracle_and_two_hop_agree_here():
    a = run_scenario(main_scenario())
    b = run_scenario(main_scenario(detection="oracle"))
    assert [(e.k, e.normal) for e in a.epochs] == [(e.k, e.normal) for e in b.epochs]


def test_baseline_and_wmsr_stall():
    base = run_scenario(main_scenario(defense="connectivity-baseline"))
    assert not base.converged and len(base.epochs) == 2
    assert base.epochs[1].graph.in_neighbors(7) == set()
    wmsr = run_scenario(main_scenario(defense="wmsr"))
    assert not wmsr.converged and wmsr.flags == []


def test_horizon_zero():
    trace = run_scenario(main_scenario(horizon=0))
    assert trace.steps == 0 and not trace.converged


def test_convergence_needs_a_window():
    rng = np.random.default_rng(0)
    g = complete_graph(range(1, 4))
    s = truthful_scenario(g, g, rng, defense="none", horizon=500)
    trace = run_scenario(s)
    k = trace.convergence_step
    assert np.all(trace.hull_width[k:] < s.tolerance)
    assert trace.hull_width[k - 1] >= s.tolerance
    assert trace.steps == k + 9


def test_no_early_stop_when_disabled():
    rng = np.random.default_rng(0)
    g = complete_graph(range(1, 4))
    trace = run_scenario(truthful_scenario(g, g, rng, defense="none", horizon=300, stop_on_convergence=False))
    assert trace.steps == 300 and trace.converged


def test_defense_failure_recorded():
    # agent 2 is the only bridge in the candidate graph
    pre = DirectedGraph([1, 2, 3], [(1, 2), (2, 3)], undirected=True)
    g = DirectedGraph([1, 2, 3], [(1, 2), (2, 3), (2, 1), (3, 2)])
    bias = Constant(ModulatedVector.of([9.0]))
    s = truthful_scenario(
        g, pre, np.random.default_rng(1), F=1, admissible=frozenset({2}),
        scripts={2: AttackScript(2, (AttackRule(None, 5, None, bias),))}, dimension=1,
        initial={1: (0.0,), 2: (1.0,), 3: (2.0,)}, epsilon=0.3, horizon=100,
    )
    trace = run_scenario(s)
    assert trace.defense_failure["step"] == 5
    assert trace.defense_failure["cause"] == "StructureError"
    assert not trace.converged and trace.steps == 5


def test_pinned_leader_flagged_aborts_run():
    with pytest.raises(SimulationError) as info:
        run_scenario(main_scenario(leaders=(9,)))
    assert info.value.step == 120 and info.value.cause == "config"


def test_roles():
    s = main_scenario()
    assert role_at(s, 2, 500) is Role.NORMAL
    assert role_at(s, 4, 200) is Role.BYZANTINE_DORMANT
    assert role_at(s, 4, 400) is Role.BYZANTINE_ACTIVE
    assert role_at(s, 1, 400) is Role.BYZANTINE_DORMANT


def test_replay_clamps_reported():
    rng = np.random.default_rng(5)
    g = complete_graph(range(1, 5))
    s = truthful_scenario(
        g, g, rng, F=1, admissible=frozenset({4}), defense="none", horizon=20,
        scripts={4: AttackScript(4, (AttackRule(None, 2, None, Replay(5)),))},
    )
    trace = run_scenario(s)
    assert (4, -3) in trace.replay_clamps


def test_random_scenarios_validate():
    for seed in range(20):
        s = random_scenario(np.random.default_rng(seed), horizon=50)
        run_scenario(replace(s, detection="two-hop"))


def test_random_scenarios_start_with_spanning_tree():
    from asnsim.graph import has_rooted_spanning_tree
    for seed in range(30):
        s = random_scenario(np.random.default_rng(seed), horizon=10)
        assert has_rooted_spanning_tree(s.graph)[0]
