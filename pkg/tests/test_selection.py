import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asnsim.errors import ConfigError, PreconditionError, StructureError
from asnsim.generators import random_f_local_set, random_robust_graph
from asnsim.graph import (
    DirectedGraph,
    complete_graph,
    has_rooted_spanning_tree,
    induced_subgraph,
    is_connected,
)
from asnsim.selection import (
    PreDiscriminativeGraph,
    SelectionPolicy,
    build_pre_graph,
    compute_psi,
    pick_virtual_leader,
    reconstruct,
    select_in_neighbors,
)
from asnsim.spectral import Eigenpair, perturbed_laplacian, smallest_eigenpair
from helpers import main_scenario


def test_pre_graph_drops_isolated_agent():
    k5 = PreDiscriminativeGraph(0, complete_graph(range(1, 6)))
    pre = build_pre_graph(k5, {1, 2, 4, 5})
    assert pre.epoch == 1
    assert pre.graph.nodes == (1, 2, 3, 4, 5)
    assert pre.candidates(3) == set()
    assert induced_subgraph(pre.graph, {1, 2, 4, 5}) == complete_graph([1, 2, 4, 5])


def test_pre_graph_identity_without_isolation():
    k5 = PreDiscriminativeGraph(0, complete_graph(range(1, 6)))
    assert build_pre_graph(k5, range(1, 6), epoch=4).graph == k5.graph


def test_pre_graph_rejects_unknown_agents():
    with pytest.raises(PreconditionError):
        build_pre_graph(PreDiscriminativeGraph(0, complete_graph([1, 2])), {1, 2, 3})


@pytest.mark.parametrize("seed", range(10))
def test_three_robust_minus_two_stays_connected(seed):
    rng = np.random.default_rng(seed)
    g = random_robust_graph(10, 3, rng)
    for removed in [set(rng.choice(np.arange(1, 11), 2, replace=False).tolist()) for _ in range(20)]:
        pre = build_pre_graph(PreDiscriminativeGraph(0, g), set(g.nodes) - removed)
        assert is_connected(induced_subgraph(pre.graph, set(g.nodes) - removed))


def test_leader_choice():
    normal = {2, 3, 4, 5, 6, 7, 8, 10}
    assert pick_virtual_leader(normal) == 2
    assert pick_virtual_leader(normal, 8) == 8
    assert pick_virtual_leader({2, 3, 5, 6, 7, 8, 10}, 10) == 10
    with pytest.raises(ConfigError):
        pick_virtual_leader(normal, 9)
    with pytest.raises(PreconditionError):
        pick_virtual_leader(set())


def eig_of(g, leader):
    return smallest_eigenpair(perturbed_laplacian(g, leader))


def test_psi_two_nodes():
    g = DirectedGraph([1, 2], [(1, 2)], undirected=True)
    eig = eig_of(g, 1)
    np.testing.assert_allclose(eig.v1, [0.5257, 0.8507], atol=1e-4)
    assert compute_psi(g, {1, 2}, 1, eig) == {1: (), 2: (1,)}


def test_psi_ties_broken_by_id():
    g = complete_graph([1, 2, 3])
    eig = eig_of(g, 1)
    assert eig.entry(2) == pytest.approx(eig.entry(3))
    psi = compute_psi(g, {1, 2, 3}, 1, eig)
    assert psi == {1: (), 2: (1,), 3: (1, 2)}


def test_psi_empty_is_structure_error():
    g = DirectedGraph([1, 2, 3], [(1, 2), (2, 3)], undirected=True)
    bogus = Eigenpair((1, 2, 3), 0.1, np.array([0.1, 0.9, 0.5]), 0.0, 1)
    with pytest.raises(StructureError):
        compute_psi(g, {1, 2, 3}, 1, bogus)


def test_psi_needs_eigenpair_for_every_agent():
    g = complete_graph([1, 2, 3])
    eig = eig_of(complete_graph([1, 2]), 1)
    with pytest.raises(PreconditionError):
        compute_psi(g, {1, 2, 3}, 1, eig)


def test_policies():
    assert SelectionPolicy().take == 1
    assert SelectionPolicy("flexible", 3).take == 3
    with pytest.raises(ConfigError):
        SelectionPolicy("greedy")
    with pytest.raises(ConfigError):
        SelectionPolicy("flexible", 0)


def test_select_minimum_and_flexible():
    psi = {1: (), 2: (1,), 3: (1, 2), 4: (1, 3, 2)}
    g = select_in_neighbors(psi, SelectionPolicy(), range(1, 6), leader=1)
    assert sorted(g.edges) == [(1, 2), (1, 3), (1, 4)]
    assert g.in_neighbors(5) == set()
    flex = select_in_neighbors(psi, SelectionPolicy("flexible", 2), range(1, 6), leader=1)
    assert flex.in_neighbors(4) == {1, 3}
    assert flex.in_neighbors(2) == {1}
    assert all(w == 1.0 for w in flex.weights.values())


@st.composite
def robust_cases(draw):
    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    F = draw(st.sampled_from([1, 2]))
    n = draw(st.integers(2 * F + 2, 9))
    g = random_robust_graph(n, F + 1, rng)
    removed = random_f_local_set(g, F, rng, keep_normal=2)
    normal = set(g.nodes) - removed
    leader = draw(st.sampled_from(sorted(normal)))
    return g, normal, leader


@settings(max_examples=60, deadline=None)
@given(robust_cases())
def test_minimum_selection_is_a_spanning_tree(case):
    g, normal, leader = case
    ctx = reconstruct(PreDiscriminativeGraph(0, g), normal, 1, SelectionPolicy(), leader)
    sub = induced_subgraph(ctx.graph, normal)
    assert len(ctx.graph.edges) == len(normal) - 1
    assert len(sub.edges) == len(normal) - 1
    # only the root of a tree reaches every node, so the witness is the leader
    assert has_rooted_spanning_tree(sub) == (True, leader)
    # every edge goes from lower to higher eigenvector rank
    for j, i in ctx.graph.edges:
        assert j == leader or ctx.eigenpair.entry(j) <= ctx.eigenpair.entry(i)
    assert all(ctx.graph.in_neighbors(b) == set() and ctx.graph.out_neighbors(b) == set()
               for b in set(g.nodes) - normal)


@settings(max_examples=40, deadline=None)
@given(robust_cases(), st.integers(2, 4))
def test_flexible_selection_degrees(case, d):
    g, normal, leader = case
    ctx = reconstruct(PreDiscriminativeGraph(0, g), normal, 1, SelectionPolicy("flexible", d), leader)
    for i in normal - {leader}:
        assert len(ctx.graph.in_neighbors(i)) == min(d, len(ctx.psi[i]))
    assert has_rooted_spanning_tree(induced_subgraph(ctx.graph, normal))[0]


def test_substituted_topology_reconstructions():
    s = main_scenario()
    g0 = PreDiscriminativeGraph(0, s.pre_graph)
    first = reconstruct(g0, set(s.nodes) - {1, 9}, 1, SelectionPolicy(), 8)
    assert first.leader == 8
    assert first.graph.in_neighbors(2) == {4} and first.graph.in_neighbors(10) == {4}
    # isolating 4 afterwards would cut 2 and 10 off under the old graph
    cut = first.graph.without_edges_touching({4})
    assert not has_rooted_spanning_tree(induced_subgraph(cut, {2, 3, 5, 6, 7, 8, 10}))[0]
    second = reconstruct(g0, set(s.nodes) - {1, 4, 9}, 2, SelectionPolicy(), 10)
    assert has_rooted_spanning_tree(induced_subgraph(second.graph, second.normal)) == (True, 10)
