"""Round-synchronous orchestration of a scenario.

Every step k runs, in order: value exchange over the current graph,
detection and broadcast merge, graph reconstruction when the normal set
shrank, and finally the state update that produces x(k + 1). A row of the
trace describes x(k) together with the events of step k.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adversary import StateHistory, transmitted_value
from .detection import (
    DETECTION_TOL,
    DetectionState,
    build_packet,
    detect_neighbor,
    merge_broadcasts,
)
from .dynamics import Role, hull_of_array, laplacian_update
from .errors import ConfigError, ConvergenceError, PreconditionError, SimulationError, StructureError
from .graph import DirectedGraph, build_laplacian
from .msr import wmsr_update
from .scenario import Scenario, validate_scenario
from .selection import PreDiscriminativeGraph, reconstruct

log = logging.getLogger(__name__)

CONVERGENCE_WINDOW = 10


@dataclass(frozen=True)
class FlagEvent:
    k: int
    observer: int
    flagged: int
    residual: float


@dataclass
class EpochRecord:
    epoch: int
    k: int
    normal: tuple[int, ...]
    graph: DirectedGraph
    leader: int | None = None
    lambda1: float | None = None
    v1: dict[int, float] | None = None
    psi: dict[int, tuple[int, ...]] | None = None

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(self.graph.edges)

    def normal_edges(self) -> list[tuple[int, int]]:
        members = set(self.normal)
        return [(j, i) for j, i in self.graph.edges if j in members and i in members]

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "k": self.k,
            "normal": list(self.normal),
            "leader": self.leader,
            "lambda1": self.lambda1,
            "v1": None if self.v1 is None else {str(v): x for v, x in self.v1.items()},
            "psi": None if self.psi is None else {str(v): list(p) for v, p in self.psi.items()},
            "edges": [[j, i] for j, i in self.edges],
        }


@dataclass
class SimTrace:
    scenario: Scenario
    states: np.ndarray
    epoch_of_row: list[int]
    byzantine_of_row: list[frozenset[int]]
    hull_lo: np.ndarray
    hull_hi: np.ndarray
    active_lo: np.ndarray
    active_hi: np.ndarray
    contaminated: list[bool]
    sigma: np.ndarray
    flags: list[FlagEvent] = field(default_factory=list)
    epochs: list[EpochRecord] = field(default_factory=list)
    converged: bool = False
    convergence_step: int | None = None
    defense_failure: dict | None = None
    replay_clamps: list[tuple[int, int]] = field(default_factory=list)

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.scenario.nodes

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def hull_width(self) -> np.ndarray:
        return np.max(self.hull_hi - self.hull_lo, axis=1)

    @property
    def final_hull_width(self) -> float:
        return float(self.hull_width[-1])

    def first_flag_step(self, agent: int) -> int | None:
        return min((f.k for f in self.flags if f.flagged == agent), default=None)

    def summary(self) -> dict:
        s = self.scenario
        return {
            "scenario": s.name,
            "defense": s.defense,
            "detection": s.detection,
            "converged": self.converged,
            "convergence_step": self.convergence_step,
            "steps": self.steps,
            "final_hull_width": self.final_hull_width,
            "reconstructions": len(self.epochs) - 1,
            "edges_per_epoch": [len(e.graph.edges) for e in self.epochs],
            "epochs": [e.to_json() for e in self.epochs],
            "isolated": sorted(self.byzantine_of_row[-1]),
            "first_flag": {str(v): self.first_flag_step(v) for v in sorted({f.flagged for f in self.flags})},
            "defense_failure": self.defense_failure,
            "replay_clamps": [[a, k] for a, k in self.replay_clamps],
        }


def relative_error(
    x: np.ndarray,
    nodes: tuple[int, ...],
    normal: set[int] | frozenset[int],
    reference: dict[int, frozenset[int]],
) -> np.ndarray:
    """Per-agent norm of the summed state differences.

    Normal agents compare against every normal agent; attack-admissible
    agents against their own reference set (their initial in-neighbors).
    ``x`` may carry leading time axes: shape ``(..., N, n)``.
    """
    idx = {v: n for n, v in enumerate(nodes)}
    out = np.zeros(x.shape[:-1])
    normal_rows = [idx[v] for v in nodes if v in normal]
    if normal_rows:
        total = x[..., normal_rows, :].sum(axis=-2)
        for v in normal:
            r = idx[v]
            out[..., r] = np.linalg.norm(len(normal_rows) * x[..., r, :] - total, axis=-1)
    for v in nodes:
        if v in normal:
            continue
        refs = [idx[j] for j in sorted(reference.get(v, ()))]
        if refs:
            r = idx[v]
            diff = len(refs) * x[..., r, :] - x[..., refs, :].sum(axis=-2)
            out[..., r] = np.linalg.norm(diff, axis=-1)
    return out


class _Run:
    def __init__(self, s: Scenario):
        self.s = s
        self.nodes = s.nodes
        self.idx = {v: n for n, v in enumerate(self.nodes)}
        self.n = s.dimension
        x0 = np.array([s.initial[v] for v in self.nodes], dtype=float).reshape(len(self.nodes), self.n)
        self.history = StateHistory(self.nodes, [x0])
        self.g = s.graph
        self.lap = build_laplacian(self.g)
        self.g0_pre = PreDiscriminativeGraph(0, s.pre_graph)
        self.det = DetectionState.initial(self.nodes)
        self.epoch = 0
        self.prev_over: dict[tuple[int, int], np.ndarray] = {}
        self.flags: list[FlagEvent] = []
        self.epochs = [EpochRecord(0, 0, tuple(self.nodes), self.g)]
        self.defense_failure = None

    # ---- value exchange

    def overrides(self, k: int) -> dict[tuple[int, int], np.ndarray]:
        """Values attackers send that come from an active rule, keyed (i, j)."""
        out = {}
        x_hist = self.history
        for attacker, script in self.s.scripts.items():
            if not script.active_at(k):
                continue
            for i in sorted(self.g.out_neighbors(attacker)):
                if script.rule_for(i, k) is not None:
                    out[(i, attacker)] = transmitted_value(self.s.scripts, attacker, i, k, x_hist, self.n)
        return out

    def visible_lies(self, x, over, receivers):
        for (i, j), v in over.items():
            if i in receivers:
                gap = float(np.max(np.abs(v - x[self.idx[j]])))
                if gap > DETECTION_TOL:
                    yield i, j, gap

    # ---- detection

    def detect_oracle(self, k, x, over):
        flagged: dict[int, set[int]] = {}
        for i, j, gap in self.visible_lies(x, over, self.det.normal):
            if j in self.det.normal and j not in flagged.get(i, ()):
                flagged.setdefault(i, set()).add(j)
                self.flags.append(FlagEvent(k, i, j, gap))
        return flagged

    def detect_two_hop(self, k, x, over):
        x_prev = self.history.step(k - 1)
        idx, eps = self.idx, self.s.epsilon
        normal = self.det.normal
        prev_g = self.g
        packets = {}
        for j in self.nodes:
            if j in normal:
                received_prev = {
                    (j, h): self.prev_over.get((j, h), x_prev[idx[h]]) for h in prev_g.in_neighbors(j)
                }
                packets[j] = build_packet(j, k, x[idx[j]], prev_g.in_neighbors(j), received_prev)
        flagged: dict[int, set[int]] = {}
        # observers on edges without a lie at k or k-1 all see the same packet
        shared: dict[int, tuple[bool, float]] = {}
        for i in sorted(normal):
            for j in sorted(self.g.in_neighbors(i) & normal):
                plain = (i, j) not in over and (i, j) not in self.prev_over
                if plain and j in shared:
                    hit, residual = shared[j]
                else:
                    pkt = packets[j]
                    if (i, j) in over:
                        pkt = pkt.with_value(over[(i, j)])
                    seen_prev = self.prev_over.get((i, j), x_prev[idx[j]])
                    weights = {h: prev_g.weight(h, j) for h in prev_g.in_neighbors(j)}
                    hit, residual = detect_neighbor(pkt, seen_prev, weights, eps)
                    if plain:
                        shared[j] = hit, residual
                if hit:
                    flagged.setdefault(i, set()).add(j)
                    self.flags.append(FlagEvent(k, i, j, residual))
        return flagged

    # ---- reconstruction

    def rebuild(self, k, x):
        s = self.s
        self.epoch += 1
        if s.defense == "connectivity-baseline":
            self.g = self.g.without_edges_touching(self.det.byzantine)
            self.epochs.append(EpochRecord(self.epoch, k, tuple(sorted(self.det.normal)), self.g))
            return
        while True:
            pin = s.leaders[self.epoch - 1] if self.epoch - 1 < len(s.leaders) else None
            try:
                ctx = reconstruct(self.g0_pre, self.det.normal, self.epoch, s.policy, pin)
            except ConfigError as exc:
                raise SimulationError(k, "config", str(exc)) from None
            self.g = ctx.graph
            if s.detection != "oracle":
                break
            # oracle mode flags lies on freshly created edges before they are used
            over = self.overrides(k)
            extra = self.detect_oracle(k, x, over)
            if not extra:
                break
            self.det, _ = merge_broadcasts(self.det, extra, k)
        self.epochs.append(
            EpochRecord(
                self.epoch, k, tuple(sorted(ctx.normal)), ctx.graph, ctx.leader,
                ctx.eigenpair.lambda1, ctx.eigenpair.as_dict(), dict(ctx.psi),
            )
        )

    # ---- state update

    def update(self, x, over):
        s = self.s
        if s.defense == "wmsr":
            out = np.empty_like(x)
            for i in self.nodes:
                senders = sorted(self.g.in_neighbors(i))
                vals = [over.get((i, j), x[self.idx[j]]) for j in senders]
                out[self.idx[i]] = wmsr_update(
                    x[self.idx[i]], senders, [self.g.weight(j, i) for j in senders], vals, s.F, s.epsilon
                )
            return out
        corr = None
        if over:
            corr = np.zeros_like(x)
            for (i, j), v in over.items():
                corr[self.idx[i]] += self.g.weight(j, i) * (v - x[self.idx[j]])
        return laplacian_update(x, self.lap, s.epsilon, corr)


def run_scenario(s: Scenario, validate: bool = True) -> SimTrace:
    if validate:
        validate_scenario(s)
    run = _Run(s)
    nodes, idx = run.nodes, run.idx
    normal_rows = np.array([idx[v] for v in s.normal_agents])
    detecting = s.defense in ("asns", "connectivity-baseline")
    last_start = max((r.start for sc in s.scripts.values() for r in sc.rules), default=0)

    epoch_of_row, byz_of_row, contaminated = [], [], []
    hull_lo, hull_hi, act_lo, act_hi = [], [], [], []
    streak = 0
    k = 0
    while True:
        x = run.history.step(k)
        over = {}
        if k < s.horizon:
            over = run.overrides(k)
            if detecting and k >= 1 and run.defense_failure is None:
                try:
                    if s.detection == "oracle":
                        flagged = run.detect_oracle(k, x, over)
                    else:
                        flagged = run.detect_two_hop(k, x, over)
                    run.det, trigger = merge_broadcasts(run.det, flagged, k)
                    if trigger:
                        run.rebuild(k, x)
                        run.lap = build_laplacian(run.g)
                        over = run.overrides(k)
                except (StructureError, ConvergenceError, PreconditionError) as exc:
                    run.defense_failure = {"step": k, "cause": type(exc).__name__, "detail": str(exc)}
                    log.warning("defense failure at k=%d: %s", k, exc)

        epoch_of_row.append(run.epoch)
        byz_of_row.append(run.det.byzantine)
        hb = hull_of_array(x, normal_rows)
        hull_lo.append(hb.lo)
        hull_hi.append(hb.hi)
        active = np.array([idx[v] for v in sorted(run.det.normal)])
        ab = hull_of_array(x, active)
        act_lo.append(ab.lo)
        act_hi.append(ab.hi)

        streak = streak + 1 if hb.width < s.tolerance else 0
        if run.defense_failure is not None or k >= s.horizon:
            break
        if s.stop_on_convergence and streak >= CONVERGENCE_WINDOW and k >= last_start:
            break

        contaminated.append(any(True for _ in run.visible_lies(x, over, run.det.normal)))
        x_next = run.update(x, over)
        run.prev_over = over
        run.history.append(x_next)
        k += 1

    states = run.history.stacked()
    reference = {v: s.graph.in_neighbors(v) for v in s.admissible}
    sigma = relative_error(states, nodes, set(s.normal_agents), reference)
    converged = run.defense_failure is None and streak >= CONVERGENCE_WINDOW
    return SimTrace(
        scenario=s,
        states=states,
        epoch_of_row=epoch_of_row,
        byzantine_of_row=byz_of_row,
        hull_lo=np.array(hull_lo),
        hull_hi=np.array(hull_hi),
        active_lo=np.array(act_lo),
        active_hi=np.array(act_hi),
        contaminated=contaminated,
        sigma=sigma,
        flags=run.flags,
        epochs=run.epochs,
        converged=converged,
        convergence_step=(k - streak + 1) if converged else None,
        defense_failure=run.defense_failure,
        replay_clamps=sorted(run.history.clamped),
    )


def role_at(s: Scenario, agent: int, k: int) -> Role:
    if agent not in s.admissible:
        return Role.NORMAL
    script = s.scripts.get(agent)
    if script is not None and script.active_at(k):
        return Role.BYZANTINE_ACTIVE
    return Role.BYZANTINE_DORMANT
