"""Scenario files: a plain-text, line-oriented format.

Top-level ``key: value`` settings come first, followed by sections::

    name: demo
    dimension: 1
    epsilon: 0.25
    F: 0
    defense: none

    [graph]
    nodes: 2
    undirected: true
    1 -> 2

    [initial]
    1: 0.0
    2: 1.0

Sections are ``[graph]`` (the initial communication graph), ``[pre_graph]``
(the candidate graph, defaults to the undirected closure of ``[graph]``),
``[initial]`` and any number of ``[attack]`` blocks::

    [attack]
    attacker: 1
    receiver: 8          # or * for every receiver
    window: 120 400      # end may be inf
    function: constant value=0.02,0.06,0.04

Attack functions: ``constant value=V``, ``replay delay=D`` and
``affine gains=V offset=V delay=D``. A vector ``V`` is a comma-separated
list whose entries may carry a modulation suffix (``0.03*sin``,
``0.12*cos``); a single entry is broadcast to every coordinate.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator

from .adversary import (
    Affine,
    AttackRule,
    AttackScript,
    Constant,
    ModulatedVector,
    Replay,
    check_f_local,
    schedule_of,
)
from .dynamics import step_size_bound
from .errors import AsnsError, ConfigError, ParseError
from .graph import DirectedGraph
from .selection import SelectionPolicy

DEFENSES = ("asns", "wmsr", "none", "connectivity-baseline")
DETECTION_MODES = ("two-hop", "oracle")
DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Scenario:
    graph: DirectedGraph
    pre_graph: DirectedGraph
    initial: dict[int, tuple[float, ...]]
    epsilon: float
    dimension: int = 1
    F: int = 0
    defense: str = "asns"
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    leaders: tuple[int, ...] = ()
    admissible: frozenset[int] = frozenset()
    scripts: dict[int, AttackScript] = field(default_factory=dict)
    horizon: int = 1000
    detection: str = "two-hop"
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    stop_on_convergence: bool = True
    name: str = "scenario"

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.graph.nodes

    @property
    def normal_agents(self) -> tuple[int, ...]:
        return tuple(v for v in self.nodes if v not in self.admissible)

    def with_overrides(self, defense: str | None = None, horizon: int | None = None) -> "Scenario":
        s = self
        if defense is not None:
            s = replace(s, defense=defense)
        if horizon is not None:
            s = replace(s, horizon=horizon)
        return s


def validate_scenario(s: Scenario) -> None:
    """Raise ConfigError for any scenario the simulator must refuse."""
    nodes = set(s.graph.nodes)
    if not nodes:
        raise ConfigError("scenario has no agents")
    if set(s.pre_graph.nodes) != nodes:
        raise ConfigError("graph and pre_graph have different node sets")
    if not s.graph.is_subgraph_of(s.pre_graph):
        extra = [e for e in s.graph.edges if not s.pre_graph.has_edge(*e)]
        raise ConfigError(f"graph edges {extra[:5]} are missing from pre_graph")
    if not s.pre_graph.undirected:
        raise ConfigError("pre_graph must be undirected")
    if s.defense not in DEFENSES:
        raise ConfigError(f"unknown defense {s.defense!r}")
    if s.detection not in DETECTION_MODES:
        raise ConfigError(f"unknown detection mode {s.detection!r}")
    if s.dimension < 1:
        raise ConfigError("dimension must be at least 1")
    if set(s.initial) != nodes:
        missing = sorted(nodes - set(s.initial))
        extra = sorted(set(s.initial) - nodes)
        raise ConfigError(f"initial states mismatch: missing {missing}, unknown {extra}")
    for v, x in s.initial.items():
        if len(x) != s.dimension:
            raise ConfigError(f"initial state of agent {v} has {len(x)} entries, expected {s.dimension}")
    if s.F < 0:
        raise ConfigError("F must be nonnegative")
    if s.horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    if not s.tolerance > 0:
        raise ConfigError("tolerance must be positive")
    if not s.admissible <= nodes:
        raise ConfigError(f"admissible agents {sorted(s.admissible - nodes)} are not in the graph")
    if not s.normal_agents:
        raise ConfigError("every agent is attack-admissible; no normal agent remains")
    for leader in s.leaders:
        if leader not in nodes:
            raise ConfigError(f"pinned leader {leader} is not an agent")

    for attacker, script in s.scripts.items():
        if attacker != script.attacker:
            raise ConfigError(f"script keyed {attacker} belongs to attacker {script.attacker}")
        if attacker not in s.admissible:
            raise ConfigError(f"agent {attacker} has attack rules but is not attack-admissible")
        for rule in script.rules:
            if rule.receiver is not None and rule.receiver not in nodes:
                raise ConfigError(f"attack rule of agent {attacker} targets unknown agent {rule.receiver}")
    schedule_of(s.scripts, s.admissible)

    ever_active = set(s.scripts)
    for label, g in _graphs_in_play(s):
        if not check_f_local(g, ever_active, s.F):
            raise ConfigError(f"attack schedule is not {s.F}-local on {label}")

    bound = step_size_bound(s.graph)
    if not 0.0 < s.epsilon < bound:
        raise ConfigError(
            f"epsilon={s.epsilon!r} violates 0 < epsilon < 1/max l_ii = {bound!r} on graph"
        )
    if s.defense == "asns":
        worst = max((min(s.policy.take, len(s.pre_graph.in_neighbors(v))) for v in nodes), default=0)
        if worst and not s.epsilon < 1.0 / worst:
            raise ConfigError(
                f"epsilon={s.epsilon!r} violates 0 < epsilon < 1/max l_ii = {1.0 / worst!r} "
                "on reconstructed graphs"
            )


def _graphs_in_play(s: Scenario):
    yield "graph", s.graph
    if s.defense == "asns":
        yield "pre_graph", s.pre_graph


# --------------------------------------------------------------------------
# parsing

_SECTION = re.compile(r"^\[(\w+)\]$")
_EDGE = re.compile(r"^(-?\d+)\s*->\s*(-?\d+)(?:\s+\[?\s*([^\]\s]+)\s*\]?)?$")


def _lines(text: str) -> Iterator[tuple[int, str]]:
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line


def _key_value(line: str, n: int) -> tuple[str, str]:
    if ":" not in line:
        raise ParseError(f"expected 'key: value', got {line!r}", n)
    key, value = line.split(":", 1)
    return key.strip(), value.strip()


def _int(value: str, n: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", n) from None


def _float(value: str, n: int, what: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"{what} must be a number, got {value!r}", n) from None


def _bool(value: str, n: int, what: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ParseError(f"{what} must be true or false, got {value!r}", n)


def _parse_graph_block(body: list[tuple[int, str]], start_line: int) -> DirectedGraph:
    count = None
    undirected = False
    edges: dict[tuple[int, int], float] = {}
    for n, line in body:
        m = _EDGE.match(line)
        if m:
            j, i = int(m.group(1)), int(m.group(2))
            w = _float(m.group(3), n, "edge weight") if m.group(3) else 1.0
            if (j, i) in edges:
                raise ParseError(f"duplicate edge {j} -> {i}", n)
            edges[(j, i)] = w
            continue
        key, value = _key_value(line, n)
        if key == "nodes":
            count = _int(value, n, "nodes")
        elif key == "undirected":
            undirected = _bool(value, n, "undirected")
        else:
            raise ParseError(f"unknown graph setting {key!r}", n)
    if count is None:
        raise ParseError("graph block needs 'nodes: N'", start_line)
    try:
        return DirectedGraph(range(1, count + 1), edges, undirected=undirected)
    except AsnsError as exc:
        raise ParseError(f"invalid graph: {exc}", start_line) from None


def parse_graph(text: str) -> DirectedGraph:
    """Parse a standalone graph literal (the body of a ``[graph]`` block)."""
    return _parse_graph_block(list(_lines(text)), 1)


def parse_vector(token: str, n: int = 0) -> ModulatedVector:
    coeffs, mods = [], []
    for part in token.split(","):
        part = part.strip()
        mod = None
        if "*" in part:
            part, mod = (p.strip() for p in part.split("*", 1))
            if mod not in ("sin", "cos"):
                raise ParseError(f"unknown modulation {mod!r} in {token!r}", n or None)
        coeffs.append(_float(part, n or None, "vector entry"))
        mods.append(mod)
    return ModulatedVector(tuple(coeffs), tuple(mods))


def parse_function(text: str, n: int = 0):
    parts = text.split()
    if not parts:
        raise ParseError("empty attack function", n or None)
    kind, args = parts[0], {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ParseError(f"expected key=value in attack function, got {tok!r}", n or None)
        k, v = tok.split("=", 1)
        args[k] = v
    allowed = {"constant": {"value"}, "replay": {"delay"}, "affine": {"gains", "offset", "delay"}}
    if kind not in allowed:
        raise ParseError(f"unknown attack function {kind!r}", n or None)
    unknown = set(args) - allowed[kind]
    if unknown:
        raise ParseError(f"unknown parameters {sorted(unknown)} for {kind}", n or None)
    try:
        if kind == "constant":
            return Constant(parse_vector(args["value"], n))
        if kind == "replay":
            return Replay(_int(args["delay"], n, "delay"))
        offset = parse_vector(args["offset"], n) if "offset" in args else ModulatedVector((0.0,), (None,))
        return Affine(parse_vector(args["gains"], n), offset, _int(args.get("delay", "0"), n, "delay"))
    except KeyError as exc:
        raise ParseError(f"{kind} needs parameter {exc.args[0]!r}", n or None) from None
    except ConfigError as exc:
        raise ParseError(str(exc), n or None) from None


def _parse_attack(body: list[tuple[int, str]], start: int) -> tuple[int, AttackRule]:
    fields: dict[str, tuple[int, str]] = {}
    for n, line in body:
        key, value = _key_value(line, n)
        if key not in ("attacker", "receiver", "window", "function"):
            raise ParseError(f"unknown attack setting {key!r}", n)
        fields[key] = (n, value)
    for req in ("attacker", "window", "function"):
        if req not in fields:
            raise ParseError(f"attack block needs {req!r}", start)
    n, v = fields["attacker"]
    attacker = _int(v, n, "attacker")
    receiver = None
    if "receiver" in fields:
        n, v = fields["receiver"]
        receiver = None if v == "*" else _int(v, n, "receiver")
    n, v = fields["window"]
    bounds = v.split()
    if len(bounds) != 2:
        raise ParseError("window needs 'start end'", n)
    start_k = _int(bounds[0], n, "window start")
    end_k = None if bounds[1].lower() in ("inf", "*") else _int(bounds[1], n, "window end")
    n, v = fields["function"]
    return attacker, AttackRule(receiver, start_k, end_k, parse_function(v, n))


_SETTINGS = {
    "name", "dimension", "epsilon", "F", "defense", "policy", "degree", "leaders",
    "admissible", "horizon", "detection", "seed", "tolerance", "stop_on_convergence",
}


def parse_scenario(text: str, validate: bool = True) -> Scenario:
    settings: dict[str, tuple[int, str]] = {}
    sections: list[tuple[str, int, list[tuple[int, str]]]] = []
    for n, line in _lines(text):
        m = _SECTION.match(line)
        if m:
            sections.append((m.group(1), n, []))
            continue
        if sections:
            sections[-1][2].append((n, line))
            continue
        key, value = _key_value(line, n)
        if key not in _SETTINGS:
            raise ParseError(f"unknown setting {key!r}", n)
        if key in settings:
            raise ParseError(f"duplicate setting {key!r}", n)
        settings[key] = (n, value)

    graph = pre = None
    initial: dict[int, tuple[float, ...]] = {}
    rules: dict[int, list[AttackRule]] = {}
    for name, start, body in sections:
        if name == "graph":
            if graph is not None:
                raise ParseError("duplicate [graph] section", start)
            graph = _parse_graph_block(body, start)
        elif name == "pre_graph":
            if pre is not None:
                raise ParseError("duplicate [pre_graph] section", start)
            pre = _parse_graph_block(body, start)
        elif name == "initial":
            for n, line in body:
                key, value = _key_value(line, n)
                agent = _int(key, n, "agent id")
                if agent in initial:
                    raise ParseError(f"duplicate initial state for agent {agent}", n)
                initial[agent] = tuple(_float(t, n, "state entry") for t in value.split())
        elif name == "attack":
            attacker, rule = _parse_attack(body, start)
            rules.setdefault(attacker, []).append(rule)
        else:
            raise ParseError(f"unknown section [{name}]", start)
    if graph is None:
        raise ParseError("scenario needs a [graph] section")
    if pre is None:
        pre = DirectedGraph(graph.nodes, graph.weights, undirected=True)

    def get(key, conv, default):
        if key not in settings:
            return default
        n, v = settings[key]
        return conv(v, n, key)

    def word(choices):
        def conv(v, n, key):
            if v not in choices:
                raise ParseError(f"unknown {key} {v!r}; expected one of {', '.join(choices)}", n)
            return v
        return conv

    def ints(v, n, key):
        return tuple(_int(t, n, key) for t in v.split())

    def text_value(v, n, key):
        return v

    try:
        scripts = {a: AttackScript(a, tuple(r)) for a, r in sorted(rules.items())}
        policy = SelectionPolicy(
            get("policy", word(("minimum", "flexible")), "minimum"),
            get("degree", _int, 1),
        )
    except ConfigError as exc:
        raise ParseError(str(exc)) from None

    s = Scenario(
        graph=graph,
        pre_graph=pre,
        initial=initial,
        epsilon=get("epsilon", _float, None),
        dimension=get("dimension", _int, 1),
        F=get("F", _int, 0),
        defense=get("defense", word(DEFENSES), "asns"),
        policy=policy,
        leaders=get("leaders", ints, ()),
        admissible=frozenset(get("admissible", ints, ())),
        scripts=scripts,
        horizon=get("horizon", _int, 1000),
        detection=get("detection", word(DETECTION_MODES), "two-hop"),
        seed=get("seed", _int, 0),
        tolerance=get("tolerance", _float, DEFAULT_TOLERANCE),
        stop_on_convergence=get("stop_on_convergence", _bool, True),
        name=get("name", text_value, "scenario"),
    )
    if s.epsilon is None:
        raise ParseError("scenario needs 'epsilon'")
    if validate:
        validate_scenario(s)
    return s


# --------------------------------------------------------------------------
# serialization

def _num(x: float) -> str:
    return repr(float(x))


def format_graph(g: DirectedGraph) -> str:
    lines = [f"nodes: {len(g)}", f"undirected: {'true' if g.undirected else 'false'}"]
    if g.nodes != tuple(range(1, len(g) + 1)):
        raise ConfigError("graph literals require node ids 1..N")
    for (j, i), w in g.weights.items():
        if g.undirected and j > i:
            continue
        lines.append(f"{j} -> {i}" if w == 1.0 else f"{j} -> {i} {_num(w)}")
    return "\n".join(lines) + "\n"


def format_vector(v: ModulatedVector) -> str:
    return ",".join(_num(c) + (f"*{m}" if m else "") for c, m in zip(v.coeffs, v.mods))


def format_function(f) -> str:
    if isinstance(f, Constant):
        return f"constant value={format_vector(f.value)}"
    if isinstance(f, Replay):
        return f"replay delay={f.delay}"
    return f"affine gains={format_vector(f.gains)} offset={format_vector(f.offset)} delay={f.delay}"


def format_scenario(s: Scenario) -> str:
    out = [
        f"name: {s.name}",
        f"dimension: {s.dimension}",
        f"epsilon: {_num(s.epsilon)}",
        f"F: {s.F}",
        f"defense: {s.defense}",
        f"policy: {s.policy.kind}",
        f"degree: {s.policy.degree}",
    ]
    if s.leaders:
        out.append("leaders: " + " ".join(map(str, s.leaders)))
    if s.admissible:
        out.append("admissible: " + " ".join(map(str, sorted(s.admissible))))
    out += [
        f"horizon: {s.horizon}",
        f"detection: {s.detection}",
        f"seed: {s.seed}",
        f"tolerance: {_num(s.tolerance)}",
        f"stop_on_convergence: {'true' if s.stop_on_convergence else 'false'}",
        "",
        "[graph]",
        format_graph(s.graph),
        "[pre_graph]",
        format_graph(s.pre_graph),
        "[initial]",
    ]
    for v in sorted(s.initial):
        out.append(f"{v}: " + " ".join(_num(x) for x in s.initial[v]))
    for attacker in sorted(s.scripts):
        for rule in s.scripts[attacker].rules:
            out += [
                "",
                "[attack]",
                f"attacker: {attacker}",
                f"receiver: {'*' if rule.receiver is None else rule.receiver}",
                f"window: {rule.start} {'inf' if rule.end is None else rule.end}",
                f"function: {format_function(rule.function)}",
            ]
    return "\n".join(out) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
