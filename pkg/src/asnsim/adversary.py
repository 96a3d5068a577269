"""Byzantine transmissions, attack-function families and the F-local check.

Attack functions map the step index ``k`` and the attacker's true state
history to the vector it sends. Trigonometric modulation uses the integer
step index in radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, PreconditionError
from .graph import DirectedGraph

MODULATIONS = {None: lambda k: 1.0, "sin": math.sin, "cos": math.cos}


@dataclass(frozen=True)
class ModulatedVector:
    """Entries ``coeff * mod(k)`` with ``mod`` one of none/sin/cos.

    A single entry is broadcast to every coordinate.
    """

    coeffs: tuple[float, ...]
    mods: tuple[str | None, ...]

    def __post_init__(self):
        if len(self.coeffs) != len(self.mods):
            raise ConfigError("coefficient and modulation lists differ in length")
        for m in self.mods:
            if m not in MODULATIONS:
                raise ConfigError(f"unknown modulation {m!r}")

    @classmethod
    def of(cls, values: Sequence[float], mod: str | None = None) -> "ModulatedVector":
        return cls(tuple(float(v) for v in values), tuple(mod for _ in values))

    def at(self, k: int, n: int) -> np.ndarray:
        vals = np.array([c * MODULATIONS[m](k) for c, m in zip(self.coeffs, self.mods)])
        if len(vals) == 1:
            return np.full(n, vals[0])
        if len(vals) != n:
            raise ConfigError(f"attack vector has {len(vals)} entries, state dimension is {n}")
        return vals


class StateHistory:
    """True agent states by time step. Lookups before k = 0 clamp to the
    initial state and are remembered in ``clamped``."""

    def __init__(self, nodes: Sequence[int], states: Sequence[np.ndarray] | None = None):
        self.nodes = tuple(nodes)
        self._index = {v: n for n, v in enumerate(self.nodes)}
        self._states: list[np.ndarray] = list(states or [])
        self.clamped: set[tuple[int, int]] = set()

    def append(self, x: np.ndarray) -> None:
        self._states.append(x)

    def __len__(self):
        return len(self._states)

    def step(self, k: int) -> np.ndarray:
        """All agents' states at step ``k`` in node order."""
        return self._states[k]

    def stacked(self) -> np.ndarray:
        return np.stack(self._states)

    def state(self, agent: int, k: int) -> np.ndarray:
        if k < 0:
            self.clamped.add((agent, k))
            k = 0
        if k >= len(self._states):
            raise PreconditionError(f"history has no state for k={k}")
        return self._states[k][self._index[agent]]


@dataclass(frozen=True)
class Constant:
    value: ModulatedVector

    def __call__(self, attacker: int, k: int, history: StateHistory, n: int) -> np.ndarray:
        return self.value.at(k, n)


@dataclass(frozen=True)
class Replay:
    delay: int

    def __post_init__(self):
        if self.delay < 1:
            raise ConfigError(f"replay delay must be >= 1, got {self.delay}")

    def __call__(self, attacker, k, history, n):
        return np.array(history.state(attacker, k - self.delay), dtype=float)


@dataclass(frozen=True)
class Affine:
    """``diag(gains(k)) x(k - delay) + offset(k)``."""

    gains: ModulatedVector
    offset: ModulatedVector = ModulatedVector((0.0,), (None,))
    delay: int = 0

    def __post_init__(self):
        if self.delay < 0:
            raise ConfigError(f"affine delay must be >= 0, got {self.delay}")

    def __call__(self, attacker, k, history, n):
        x = history.state(attacker, k - self.delay)
        return self.gains.at(k, n) * x + self.offset.at(k, n)


AttackFunction = Constant | Replay | Affine


@dataclass(frozen=True)
class AttackRule:
    """Active on ``start <= k < end``; ``receiver=None`` matches any receiver,
    ``end=None`` never expires."""

    receiver: int | None
    start: int
    end: int | None
    function: AttackFunction

    def active(self, k: int) -> bool:
        return self.start <= k and (self.end is None or k < self.end)

    def overlaps(self, other: "AttackRule") -> bool:
        a_end = math.inf if self.end is None else self.end
        b_end = math.inf if other.end is None else other.end
        return self.start < b_end and other.start < a_end


@dataclass(frozen=True)
class AttackScript:
    attacker: int
    rules: tuple[AttackRule, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for n, a in enumerate(self.rules):
            if a.end is not None and a.end <= a.start:
                raise ConfigError(f"attacker {self.attacker}: empty window [{a.start}, {a.end})")
            for b in self.rules[n + 1:]:
                if a.receiver == b.receiver and a.overlaps(b):
                    who = "*" if a.receiver is None else a.receiver
                    raise ConfigError(
                        f"attacker {self.attacker}: overlapping windows for receiver {who}"
                    )

    def rule_for(self, receiver: int, k: int) -> AttackRule | None:
        """Receiver-specific rules take precedence over wildcard rules."""
        wildcard = None
        for rule in self.rules:
            if not rule.active(k):
                continue
            if rule.receiver == receiver:
                return rule
            if rule.receiver is None:
                wildcard = rule
        return wildcard

    def active_at(self, k: int) -> bool:
        return any(r.active(k) for r in self.rules)

    @property
    def first_start(self) -> int | None:
        return min((r.start for r in self.rules), default=None)


@dataclass(frozen=True)
class AttackSchedule:
    admissible: frozenset[int]
    activations: tuple[tuple[int, frozenset[int]], ...]

    def __post_init__(self):
        instants = [k for k, _ in self.activations]
        if instants != sorted(set(instants)):
            raise ConfigError("activation instants must be strictly increasing")
        for k, agents in self.activations:
            if k <= 0:
                raise ConfigError("no agent may be attacked at the initial time")
            stray = agents - self.admissible
            if stray:
                raise ConfigError(f"agents {sorted(stray)} activate at k={k} but are not attack-admissible")

    @property
    def instants(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.activations)


def schedule_of(scripts: Mapping[int, AttackScript], admissible: Iterable[int]) -> AttackSchedule:
    by_instant: dict[int, set[int]] = {}
    for script in scripts.values():
        for rule in script.rules:
            by_instant.setdefault(rule.start, set()).add(script.attacker)
    acts = tuple((k, frozenset(v)) for k, v in sorted(by_instant.items()))
    return AttackSchedule(frozenset(admissible), acts)


def transmitted_value(
    scripts: Mapping[int, AttackScript],
    attacker: int,
    receiver: int,
    k: int,
    history: StateHistory,
    n: int | None = None,
) -> np.ndarray:
    """What ``attacker`` sends to ``receiver`` at step ``k``: the matching
    rule's output, or its true state when dormant."""
    truth = history.state(attacker, k)
    script = scripts.get(attacker)
    rule = script.rule_for(receiver, k) if script is not None else None
    if rule is None:
        return np.array(truth, dtype=float)
    return np.asarray(rule.function(attacker, k, history, n or len(truth)), dtype=float)


def check_f_local(g: DirectedGraph, active: Iterable[int], F: int) -> bool:
    bad = set(active)
    return all(len(g.in_neighbors(i) & bad) <= F for i in g.nodes)
