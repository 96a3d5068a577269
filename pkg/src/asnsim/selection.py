"""Active secure neighbor selection: candidate-graph rebuild, virtual leader,
eigenvector-ordered candidate sets and the emitted communication graph.

Agents are ranked by ``(v1 entry, id)`` with the virtual leader forced to
the bottom of the order. Each non-leader agent may only listen to candidates
ranked below it, which makes every selected graph acyclic and rooted at the
leader.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, PreconditionError, StructureError
from .graph import DirectedGraph, induced_subgraph
from .spectral import Eigenpair, perturbed_laplacian, smallest_eigenpair


@dataclass(frozen=True)
class SelectionPolicy:
    """``minimum`` takes one in-neighbor per agent; ``flexible`` up to ``degree``."""

    kind: str = "minimum"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("minimum", "flexible"):
            raise ConfigError(f"unknown selection policy {self.kind!r}")
        if self.degree < 1:
            raise ConfigError("selection degree must be at least 1")

    @property
    def take(self) -> int:
        return 1 if self.kind == "minimum" else self.degree


@dataclass(frozen=True)
class PreDiscriminativeGraph:
    epoch: int
    graph: DirectedGraph

    def candidates(self, i: int) -> frozenset[int]:
        return self.graph.in_neighbors(i)


@dataclass(frozen=True)
class SelectionContext:
    epoch: int
    normal: frozenset[int]
    leader: int
    eigenpair: Eigenpair
    psi: Mapping[int, tuple[int, ...]]
    policy: SelectionPolicy
    pre: PreDiscriminativeGraph
    graph: DirectedGraph


def build_pre_graph(g0_pre: PreDiscriminativeGraph, normal: Iterable[int], epoch: int | None = None) -> PreDiscriminativeGraph:
    keep = set(normal)
    g0 = g0_pre.graph
    if not keep <= set(g0.nodes):
        raise PreconditionError("normal set is not a subset of the node set")
    edges = {(j, i): w for (j, i), w in g0.weights.items() if j in keep and i in keep}
    return PreDiscriminativeGraph(
        g0_pre.epoch + 1 if epoch is None else epoch,
        DirectedGraph(g0.nodes, edges, undirected=True),
    )


def pick_virtual_leader(normal: Iterable[int], pinned: int | None = None) -> int:
    members = set(normal)
    if not members:
        raise PreconditionError("no normal agent left to act as virtual leader")
    if pinned is None:
        return min(members)
    if pinned not in members:
        raise ConfigError(f"pinned virtual leader {pinned} is not in the normal set {sorted(members)}")
    return pinned


def rank_order(eig: Eigenpair, leader: int) -> dict[int, tuple[int, float, int]]:
    """Sort key per node: leader first, then by eigenvector entry, then id."""
    return {v: (0 if v == leader else 1, float(x), v) for v, x in zip(eig.nodes, eig.v1)}


def compute_psi(
    pre: PreDiscriminativeGraph | DirectedGraph,
    normal: Iterable[int],
    leader: int,
    eig: Eigenpair,
) -> dict[int, tuple[int, ...]]:
    g = pre.graph if isinstance(pre, PreDiscriminativeGraph) else pre
    members = set(normal)
    order = rank_order(eig, leader)
    missing = members - set(order)
    if missing:
        raise PreconditionError(f"eigenpair does not cover agents {sorted(missing)}")
    psi: dict[int, tuple[int, ...]] = {}
    for i in sorted(members):
        if i == leader:
            psi[i] = ()
            continue
        below = [j for j in g.in_neighbors(i) & members if order[j] < order[i]]
        if not below:
            raise StructureError(f"agent {i} has no admissible in-neighbor ranked below it")
        psi[i] = tuple(sorted(below, key=order.__getitem__))
    return psi


def select_in_neighbors(
    psi: Mapping[int, Sequence[int]],
    policy: SelectionPolicy,
    nodes: Iterable[int],
    leader: int | None = None,
) -> DirectedGraph:
    """Emit the new communication graph with unit weights. Agents outside
    ``psi`` (isolated Byzantine agents) keep no edges."""
    edges = {}
    for i, cands in psi.items():
        if i == leader:
            continue
        if not cands:
            raise StructureError(f"agent {i} has an empty candidate set")
        for j in list(cands)[: policy.take]:
            edges[(j, i)] = 1.0
    return DirectedGraph(nodes, edges)


def reconstruct(
    g0_pre: PreDiscriminativeGraph,
    normal: Iterable[int],
    epoch: int,
    policy: SelectionPolicy,
    pinned_leader: int | None = None,
) -> SelectionContext:
    members = frozenset(normal)
    pre = build_pre_graph(g0_pre, members, epoch)
    leader = pick_virtual_leader(members, pinned_leader)
    sub = induced_subgraph(pre.graph, members)
    eig = smallest_eigenpair(perturbed_laplacian(sub, leader))
    psi = compute_psi(pre, members, leader, eig)
    graph = select_in_neighbors(psi, policy, g0_pre.graph.nodes, leader)
    return SelectionContext(epoch, members, leader, eig, psi, policy, pre, graph)
