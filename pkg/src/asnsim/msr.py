"""W-MSR baseline: drop up to F extreme neighbor values per coordinate."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .dynamics import AgentState, consensus_step
from .errors import ConfigError, ProtocolError
from .graph import DirectedGraph


@dataclass(frozen=True)
class MsrConfig:
    F: int
    epsilon: float

    def __post_init__(self):
        if self.F < 0:
            raise ConfigError("F must be nonnegative")


def trim(own: float, values: Sequence[tuple[int, float]], F: int) -> list[int]:
    """Ids of the senders that survive trimming around ``own``.

    Up to F values strictly above ``own`` are removed starting from the
    largest, and up to F strictly below starting from the smallest. Among
    equal values the higher sender id goes first.
    """
    above = sorted((v for v in values if v[1] > own), key=lambda p: (-p[1], -p[0]))
    below = sorted((v for v in values if v[1] < own), key=lambda p: (p[1], -p[0]))
    dropped = {j for j, _ in above[:F]} | {j for j, _ in below[:F]}
    return [j for j, _ in values if j not in dropped]


def wmsr_update(
    own: np.ndarray,
    senders: Sequence[int],
    weights: Sequence[float],
    values: Sequence[np.ndarray],
    F: int,
    epsilon: float,
) -> np.ndarray:
    """Per-coordinate W-MSR update of a single agent.

    Survivor weights are rescaled so they sum to the agent's full in-weight,
    which keeps the self coefficient at ``1 - eps * l_ii`` and the result a
    convex combination of the agent's value and the survivors.
    """
    total = float(sum(weights))
    w_of = dict(zip(senders, weights))
    out = np.array(own, dtype=float)
    for l in range(len(own)):
        col = [(j, float(v[l])) for j, v in zip(senders, values)]
        keep = trim(float(own[l]), col, F)
        if not keep:
            continue
        kept_w = sum(w_of[j] for j in keep)
        scale = total / kept_w
        vals = dict(col)
        out[l] = own[l] + epsilon * sum(scale * w_of[j] * (vals[j] - own[l]) for j in keep)
    return out


def wmsr_step(
    states: Mapping[int, AgentState],
    g: DirectedGraph,
    received: Mapping[tuple[int, int], np.ndarray],
    cfg: MsrConfig,
    k: int | None = None,
) -> dict[int, AgentState]:
    if cfg.F == 0:
        return consensus_step(states, g, cfg.epsilon, received, k)
    out = {}
    for i in g.nodes:
        senders = sorted(g.in_neighbors(i))
        vals = []
        for j in senders:
            try:
                vals.append(np.asarray(received[(i, j)], dtype=float))
            except KeyError:
                raise ProtocolError(i, j, k) from None
        x = np.asarray(states[i].x, dtype=float)
        new = wmsr_update(x, senders, [g.weight(j, i) for j in senders], vals, cfg.F, cfg.epsilon)
        out[i] = replace(states[i], x=new, x_prev=states[i].x)
    return out
