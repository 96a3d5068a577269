"""Two-hop packets, the protocol-consistency detector and broadcast merging."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

DETECTION_TOL = 1e-9


@dataclass(frozen=True)
class TwoHopPacket:
    """``x_now`` is the sender's claimed state at ``k``; ``relayed`` holds the
    values it received from its in-neighbors at ``k - 1``."""

    sender: int
    k: int
    x_now: np.ndarray
    relayed: tuple[tuple[int, np.ndarray], ...]

    def with_value(self, x_now: np.ndarray) -> "TwoHopPacket":
        return TwoHopPacket(self.sender, self.k, x_now, self.relayed)


def build_packet(
    agent: int,
    k: int,
    x_now: np.ndarray,
    prev_in_neighbors: Iterable[int],
    received_prev: Mapping[tuple[int, int], np.ndarray],
) -> TwoHopPacket:
    """``received_prev[(agent, h)]`` is what ``agent`` received from h at k-1."""
    if k < 1:
        raise ValueError("packets are exchanged from k = 1 on")
    relayed = tuple((h, received_prev[(agent, h)]) for h in sorted(prev_in_neighbors))
    return TwoHopPacket(agent, k, x_now, relayed)


def predicted_state(x_prev: np.ndarray, relayed: Mapping[int, np.ndarray], weights: Mapping[int, float], epsilon: float) -> np.ndarray:
    acc = np.zeros_like(x_prev, dtype=float)
    for h, a in weights.items():
        acc += a * (relayed[h] - x_prev)
    return x_prev + epsilon * acc


def detect_neighbor(
    pkt_now: TwoHopPacket,
    x_prev: np.ndarray,
    weights: Mapping[int, float],
    epsilon: float,
    tol: float = DETECTION_TOL,
) -> tuple[bool, float]:
    """Check a neighbor's packet against the nominal update.

    ``x_prev`` is the sender's state as the observer received it at k-1 and
    ``weights`` maps each of the sender's previous in-neighbors h to a_jh.
    Returns ``(flagged, residual)`` with the residual in the max norm. A
    packet whose relayed set does not match the sender's previous in-neighbor
    set is flagged with an infinite residual.
    """
    relayed = dict(pkt_now.relayed)
    if set(relayed) != set(weights):
        return True, float("inf")
    predicted = predicted_state(np.asarray(x_prev, dtype=float), relayed, weights, epsilon)
    residual = float(np.max(np.abs(np.asarray(pkt_now.x_now) - predicted), initial=0.0))
    return residual > tol, residual


@dataclass(frozen=True)
class DetectionState:
    k: int
    nodes: frozenset[int]
    byzantine: frozenset[int]
    flagged_now: Mapping[int, frozenset[int]]

    @classmethod
    def initial(cls, nodes: Iterable[int]) -> "DetectionState":
        return cls(0, frozenset(nodes), frozenset(), {})

    @property
    def normal(self) -> frozenset[int]:
        return self.nodes - self.byzantine


def merge_broadcasts(
    prev: DetectionState, flagged: Mapping[int, Iterable[int]], k: int
) -> tuple[DetectionState, bool]:
    """Union every observer's broadcast flag set into the cumulative
    Byzantine set; the trigger fires when the normal set shrinks."""
    sets = {i: frozenset(s) for i, s in flagged.items() if s}
    new = prev.byzantine.union(*sets.values()) if sets else prev.byzantine
    state = DetectionState(k, prev.nodes, frozenset(new), sets)
    return state, state.normal != prev.normal
