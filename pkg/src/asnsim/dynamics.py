"""Discrete-time consensus update and per-coordinate hull bounds."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import PreconditionError, ProtocolError
from .graph import DirectedGraph, build_laplacian

log = logging.getLogger(__name__)


class Role(str, enum.Enum):
    NORMAL = "normal"
    BYZANTINE_ACTIVE = "byzantine-active"
    BYZANTINE_DORMANT = "byzantine-dormant"


@dataclass(frozen=True)
class AgentState:
    id: int
    x: np.ndarray
    x_prev: np.ndarray
    role: Role = Role.NORMAL

    @classmethod
    def initial(cls, id: int, x, role: Role = Role.NORMAL) -> "AgentState":
        arr = np.asarray(x, dtype=float)
        return cls(id, arr, arr.copy(), role)


@dataclass(frozen=True)
class HullBounds:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def width(self) -> float:
        return float(np.max(self.hi - self.lo))

    def contains(self, other: "HullBounds", slack: float = 0.0) -> bool:
        return bool(np.all(other.lo >= self.lo - slack) and np.all(other.hi <= self.hi + slack))


def step_size_bound(g: DirectedGraph) -> float:
    """``1 / max_i l_ii``; infinite for an edgeless graph."""
    top = max((g.in_degree_weight(i) for i in g.nodes), default=0.0)
    return np.inf if top == 0.0 else 1.0 / top


def validate_step_size(g: DirectedGraph, epsilon: float) -> bool:
    bound = step_size_bound(g)
    log.debug("step-size bound 1/max l_ii = %s, epsilon = %s", bound, epsilon)
    return 0.0 < epsilon < bound


def laplacian_update(
    x: np.ndarray, lap: np.ndarray, epsilon: float, correction: np.ndarray | None = None
) -> np.ndarray:
    """Array form of the update: ``x - eps * L x + eps * correction``.

    ``correction[i]`` is ``sum_j a_ij (r_ij - x_j)``, the total deviation of
    what agent i received from the senders' true states.
    """
    out = x - epsilon * (lap @ x)
    if correction is not None:
        out = out + epsilon * correction
    return out


def consensus_step(
    states: Mapping[int, AgentState],
    g: DirectedGraph,
    epsilon: float,
    received: Mapping[tuple[int, int], np.ndarray],
    k: int | None = None,
) -> dict[int, AgentState]:
    """One synchronous round. ``received[(i, j)]`` is the value agent i uses
    for its in-neighbor j; every agent, Byzantine or not, updates on what it
    actually received."""
    nodes = g.nodes
    x = np.stack([np.asarray(states[v].x, dtype=float) for v in nodes])
    correction = np.zeros_like(x)
    for j, i in g.edges:
        try:
            r = received[(i, j)]
        except KeyError:
            raise ProtocolError(i, j, k) from None
        correction[g.index(i)] += g.weight(j, i) * (np.asarray(r, dtype=float) - x[g.index(j)])
    new = laplacian_update(x, build_laplacian(g), epsilon, correction)
    return {
        v: replace(states[v], x=new[n], x_prev=states[v].x) for n, v in enumerate(nodes)
    }


def hull_of(states: Mapping[int, AgentState] | Mapping[int, np.ndarray], normal: Iterable[int]) -> HullBounds:
    members = list(normal)
    if not members:
        raise PreconditionError("hull of an empty normal set")
    rows = []
    for v in members:
        s = states[v]
        rows.append(np.asarray(s.x if isinstance(s, AgentState) else s, dtype=float))
    arr = np.stack(rows)
    return HullBounds(arr.min(axis=0), arr.max(axis=0))


def hull_of_array(x: np.ndarray, rows: np.ndarray) -> HullBounds:
    sub = x[rows]
    return HullBounds(sub.min(axis=0), sub.max(axis=0))
