"""Weighted digraphs, Laplacians, reachability and exact r-robustness.

Edges are stored as ``(j, i)`` pairs meaning *i receives from j*, so the
in-neighbors of ``i`` are the agents whose values ``i`` consumes.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, PreconditionError, UnknownNodeError

ROBUSTNESS_LIMIT = 12

Edge = tuple[int, int]


class DirectedGraph:
    """Immutable weighted digraph over integer node ids.

    ``weights`` maps ``(j, i)`` to the positive weight ``a_ij``. With
    ``undirected=True`` every edge is mirrored; a pair given in both
    directions must carry the same weight.
    """

    __slots__ = ("nodes", "undirected", "_w", "_in", "_out", "_index")

    def __init__(
        self,
        nodes: Iterable[int],
        edges: Mapping[Edge, float] | Iterable[Edge] = (),
        undirected: bool = False,
    ):
        node_tuple = tuple(sorted(set(int(v) for v in nodes)))
        node_set = set(node_tuple)
        if isinstance(edges, Mapping):
            items = [(tuple(e), float(w)) for e, w in edges.items()]
        else:
            items = [(tuple(e), 1.0) for e in edges]

        weights: dict[Edge, float] = {}
        for (j, i), w in items:
            j, i = int(j), int(i)
            if j == i:
                raise PreconditionError(f"self-loop on node {i}")
            if j not in node_set:
                raise UnknownNodeError(j)
            if i not in node_set:
                raise UnknownNodeError(i)
            if not w > 0.0 or not np.isfinite(w):
                raise PreconditionError(f"edge {j} -> {i} has non-positive weight {w}")
            pairs = [(j, i), (i, j)] if undirected else [(j, i)]
            for e in pairs:
                old = weights.get(e)
                if old is not None and old != w:
                    raise PreconditionError(f"conflicting weights for edge {e[0]} -> {e[1]}")
                weights[e] = w

        self.nodes = node_tuple
        self.undirected = bool(undirected)
        self._w = dict(sorted(weights.items()))
        self._in: dict[int, frozenset[int]] = {v: frozenset() for v in node_tuple}
        self._out: dict[int, frozenset[int]] = {v: frozenset() for v in node_tuple}
        ins: dict[int, set[int]] = {v: set() for v in node_tuple}
        outs: dict[int, set[int]] = {v: set() for v in node_tuple}
        for j, i in self._w:
            ins[i].add(j)
            outs[j].add(i)
        self._in = {v: frozenset(s) for v, s in ins.items()}
        self._out = {v: frozenset(s) for v, s in outs.items()}
        self._index = {v: n for n, v in enumerate(node_tuple)}

    def __setattr__(self, name, value):
        if hasattr(self, "_index"):
            raise AttributeError("DirectedGraph is immutable")
        object.__setattr__(self, name, value)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        return node in self._index

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.nodes == other.nodes and self._w == other._w

    def __hash__(self):
        return hash((self.nodes, tuple(self._w.items())))

    def __repr__(self):
        return f"DirectedGraph(nodes={list(self.nodes)}, edges={len(self._w)}, undirected={self.undirected})"

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self._w)

    @property
    def weights(self) -> dict[Edge, float]:
        return dict(self._w)

    def weight(self, j: int, i: int) -> float:
        """``a_ij``: weight of the edge ``j -> i``, 0.0 when absent."""
        return self._w.get((j, i), 0.0)

    def has_edge(self, j: int, i: int) -> bool:
        return (j, i) in self._w

    def in_neighbors(self, i: int) -> frozenset[int]:
        try:
            return self._in[i]
        except KeyError:
            raise UnknownNodeError(i) from None

    def out_neighbors(self, j: int) -> frozenset[int]:
        try:
            return self._out[j]
        except KeyError:
            raise UnknownNodeError(j) from None

    def in_degree_weight(self, i: int) -> float:
        return sum(self._w[(j, i)] for j in self._in[i])

    def index(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNodeError(node) from None

    def adjacency(self) -> np.ndarray:
        """Dense ``A`` with ``A[i, j] = a_ij`` in node order."""
        n = len(self.nodes)
        a = np.zeros((n, n))
        for (j, i), w in self._w.items():
            a[self._index[i], self._index[j]] = w
        return a

    def with_edges(self, edges: Mapping[Edge, float]) -> "DirectedGraph":
        merged = dict(self._w)
        merged.update(edges)
        return DirectedGraph(self.nodes, merged)

    def without_edges_touching(self, removed: Iterable[int]) -> "DirectedGraph":
        gone = set(removed)
        kept = {e: w for e, w in self._w.items() if e[0] not in gone and e[1] not in gone}
        return DirectedGraph(self.nodes, kept, undirected=self.undirected)

    def is_subgraph_of(self, other: "DirectedGraph") -> bool:
        return set(self.nodes) <= set(other.nodes) and all(e in other._w for e in self._w)


def build_laplacian(g: DirectedGraph) -> np.ndarray:
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def is_r_reachable(g: DirectedGraph, subset: Iterable[int], r: int) -> bool:
    s = set(subset)
    if not s:
        raise PreconditionError("r-reachability needs a nonempty subset")
    for v in s:
        if v not in g:
            raise UnknownNodeError(v)
    return any(len(g.in_neighbors(i) - s) >= r for i in s)


def _in_masks(g: DirectedGraph) -> list[int]:
    masks = []
    for v in g.nodes:
        m = 0
        for j in g.in_neighbors(v):
            m |= 1 << g.index(j)
        masks.append(m)
    return masks


def max_robustness(g: DirectedGraph, limit: int = ROBUSTNESS_LIMIT) -> int:
    """Largest r such that of any two disjoint nonempty node subsets at
    least one is r-reachable.

    Exact over all pairs. For a subset S let reach(S) be the largest number
    of outside in-neighbors of a member of S. The answer is the minimum over
    S of max(reach(S), best(V \\ S)) where best(C) is the minimum reach over
    nonempty subsets of C, obtained with a subset-minimum sweep.
    Graphs with fewer than two nodes have no subset pairs and return 0.
    """
    n = len(g)
    if n > limit:
        raise CapacityError(n, limit)
    if n < 2:
        return 0
    full = (1 << n) - 1
    subsets = np.arange(1 << n, dtype=np.int64)
    reach = np.zeros(1 << n, dtype=np.int64)
    for bit, mask in enumerate(_in_masks(g)):
        member = (subsets >> bit) & 1 == 1
        outside = np.bitwise_count(np.int64(mask) & ~subsets & full).astype(np.int64)
        reach = np.where(member, np.maximum(reach, outside), reach)

    best = reach.copy()
    best[0] = np.iinfo(np.int64).max
    for bit in range(n):
        has = subsets[(subsets >> bit) & 1 == 1]
        best[has] = np.minimum(best[has], best[has ^ (1 << bit)])

    s = subsets[1:full]
    return int(np.min(np.maximum(reach[s], best[full ^ s])))


def reachable_from(g: DirectedGraph, root: int) -> set[int]:
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in g.out_neighbors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def has_rooted_spanning_tree(g: DirectedGraph) -> tuple[bool, int | None]:
    """Return ``(True, root)`` for the lowest-id node that reaches every
    other node along directed edges, else ``(False, None)``."""
    total = len(g)
    for v in g.nodes:
        if len(reachable_from(g, v)) == total:
            return True, v
    return False, None


def is_connected(g: DirectedGraph) -> bool:
    """Weak connectivity; the empty graph counts as connected."""
    if not g.nodes:
        return True
    seen = {g.nodes[0]}
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in g.out_neighbors(v) | g.in_neighbors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(g)


def induced_subgraph(g: DirectedGraph, keep: Iterable[int]) -> DirectedGraph:
    kept = set(keep)
    for v in kept:
        if v not in g:
            raise UnknownNodeError(v)
    edges = {(j, i): w for (j, i), w in g.weights.items() if j in kept and i in kept}
    return DirectedGraph(kept, edges, undirected=g.undirected)


def complete_graph(nodes: Iterable[int], weight: float = 1.0) -> DirectedGraph:
    ns = sorted(nodes)
    return DirectedGraph(ns, {(a, b): weight for a in ns for b in ns if a < b}, undirected=True)
