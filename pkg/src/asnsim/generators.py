"""Randomized graph and scenario generators used by the CLI and the test
suites. Everything is driven by an explicit ``numpy.random.Generator``."""
from __future__ import annotations

import numpy as np

from .adversary import Affine, AttackRule, AttackScript, Constant, ModulatedVector, Replay
from .dynamics import step_size_bound
from .errors import AsnsError
from .graph import DirectedGraph, has_rooted_spanning_tree, max_robustness
from .scenario import Scenario
from .selection import SelectionPolicy


def random_undirected(n: int, p: float, rng: np.random.Generator) -> DirectedGraph:
    edges = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < p]
    return DirectedGraph(range(1, n + 1), edges, undirected=True)


def random_robust_graph(
    n: int, r: int, rng: np.random.Generator, p: float | None = None, max_tries: int = 2000
) -> DirectedGraph:
    """Rejection-sample an undirected graph certified r-robust by
    :func:`max_robustness`. The edge probability creeps up after misses."""
    prob = p if p is not None else min(0.95, (2 * r + 1) / n)
    for attempt in range(max_tries):
        g = random_undirected(n, prob, rng)
        if max_robustness(g) >= r:
            return g
        if p is None and attempt % 20 == 19:
            prob = min(0.98, prob + 0.05)
    raise AsnsError(f"no {r}-robust graph on {n} nodes found in {max_tries} tries")


def random_f_local_set(
    g: DirectedGraph, F: int, rng: np.random.Generator, keep_normal: int = 1
) -> frozenset[int]:
    """A random maximal set in which no agent has more than F in-neighbors,
    leaving at least ``keep_normal`` agents outside."""
    chosen: set[int] = set()
    for v in rng.permutation(np.array(g.nodes)):
        v = int(v)
        if len(g) - len(chosen) - 1 < keep_normal:
            break
        trial = chosen | {v}
        if all(len(g.in_neighbors(i) & trial) <= F for i in g.out_neighbors(v)):
            chosen = trial
    return frozenset(chosen)


def random_subgraph(pre: DirectedGraph, keep: float, rng: np.random.Generator) -> DirectedGraph:
    """Directed subgraph of an undirected graph keeping each direction
    independently with probability ``keep``."""
    edges = [e for e in pre.edges if rng.random() < keep]
    return DirectedGraph(pre.nodes, edges)


def random_attack_function(dim: int, rng: np.random.Generator):
    kind = rng.integers(3)
    if kind == 0:
        return Constant(ModulatedVector.of(np.round(rng.uniform(-1, 1, dim), 3)))
    if kind == 1:
        return Replay(int(rng.integers(1, 8)))
    mods = tuple(rng.choice(np.array([None, "sin", "cos"], dtype=object), dim))
    gains = ModulatedVector(tuple(np.round(rng.uniform(-1, 1, dim), 3)), mods)
    return Affine(gains, ModulatedVector.of([float(np.round(rng.uniform(-1, 1), 3))]), int(rng.integers(0, 4)))


def random_scenario(
    rng: np.random.Generator,
    n_range: tuple[int, int] = (6, 10),
    F_choices: tuple[int, ...] = (1, 2),
    dim: int = 3,
    horizon: int = 5000,
    detection: str = "oracle",
    name: str = "random",
) -> Scenario:
    """ASNS scenario on a certified (F+1)-robust candidate graph with scripted
    F-local attacks launched at one to three activation instants. The initial
    communication graph always contains a directed spanning tree."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    F = int(rng.choice(F_choices))
    pre = random_robust_graph(n, F + 1, rng)
    # attacks that never touch a G(0) edge trigger no rebuild, so G(0) itself
    # must be able to reach consensus
    g0 = random_subgraph(pre, 0.6, rng)
    while not has_rooted_spanning_tree(g0)[0]:
        g0 = random_subgraph(pre, 0.6, rng)
    admissible = random_f_local_set(pre, F, rng, keep_normal=2)
    attackers = sorted(admissible)
    n_inst = int(rng.integers(1, 4))
    instants = sorted(set(int(k) for k in rng.integers(1, 40, n_inst)))
    order = rng.permutation(len(attackers))
    scripts = {}
    for pos, a in zip(order, attackers):
        start = instants[int(pos) % len(instants)]
        receivers = sorted(pre.in_neighbors(a))
        rules = []
        if rng.random() < 0.5 or not receivers:
            rules.append(AttackRule(None, start, None, random_attack_function(dim, rng)))
        else:
            picks = rng.choice(np.array(receivers), size=min(len(receivers), int(rng.integers(1, 4))), replace=False)
            for i in sorted(int(v) for v in picks):
                rules.append(AttackRule(i, start, None, random_attack_function(dim, rng)))
        scripts[a] = AttackScript(a, tuple(rules))
    bound = min(step_size_bound(g0), 1.0)
    epsilon = float(np.round(rng.uniform(0.2, 0.9) * bound, 6))
    initial = {v: tuple(float(c) for c in np.round(rng.uniform(-5, 5, dim), 4)) for v in pre.nodes}
    return Scenario(
        graph=g0,
        pre_graph=pre,
        initial=initial,
        epsilon=epsilon,
        dimension=dim,
        F=F,
        defense="asns",
        policy=SelectionPolicy("minimum"),
        admissible=admissible,
        scripts=scripts,
        horizon=horizon,
        detection=detection,
        name=name,
    )
