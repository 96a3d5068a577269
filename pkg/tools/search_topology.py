"""Search for a 10-agent candidate graph around a fixed initial graph.

Constraints: 3-robust, undirected, contains the initial graph, no 1-10 edge,
no agent adjacent to all of 1, 4 and 9, and under the minimum policy with
leader 8 (after isolating 1 and 9) agents 2 and 10 both listen to 4.
"""
import itertools
import sys

import numpy as np

from asnsim.graph import DirectedGraph, max_robustness, has_rooted_spanning_tree
from asnsim.selection import PreDiscriminativeGraph, SelectionPolicy, reconstruct

G0_EDGES = [
    (1, 6), (1, 7), (1, 8), (1, 9), (9, 1), (9, 5), (9, 6), (9, 10), (7, 10),
    (2, 3), (3, 2), (3, 4), (4, 3), (4, 5), (5, 4), (5, 6), (6, 5), (6, 8),
    (8, 6), (8, 1), (5, 9),
]
NODES = range(1, 11)


def main(seed=0, tries=20000):
    rng = np.random.default_rng(seed)
    g0 = DirectedGraph(NODES, G0_EDGES)
    assert max_robustness(g0) == 1 and has_rooted_spanning_tree(g0)[0]
    base = {tuple(sorted(e)) for e in G0_EDGES} | {(2, 4), (4, 10)}
    pool = [p for p in itertools.combinations(NODES, 2) if p not in base and p != (1, 10)]
    for t in range(tries):
        extra = [p for p in pool if rng.random() < 0.35]
        pre = DirectedGraph(NODES, sorted(base | set(extra)), undirected=True)
        if any({1, 4, 9} <= pre.in_neighbors(v) for v in NODES):
            continue
        if max_robustness(pre) < 3:
            continue
        g0p = PreDiscriminativeGraph(0, pre)
        ctx = reconstruct(g0p, set(NODES) - {1, 9}, 1, SelectionPolicy("minimum"), 8)
        if not (ctx.graph.has_edge(4, 2) and ctx.graph.has_edge(4, 10)):
            continue
        ctx2 = reconstruct(g0p, set(NODES) - {1, 4, 9}, 2, SelectionPolicy("minimum"), 10)
        print("found after", t, "tries; edges", len(pre.edges) // 2)
        for j, i in pre.edges:
            if j < i:
                print(f"{j} -> {i}")
        print("G(k1):", ctx.graph.edges)
        print("G(k2):", ctx2.graph.edges)
        return
    print("nothing found", file=sys.stderr)


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:]))
