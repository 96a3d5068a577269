"""Shared fixtures-by-function for the test modules."""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from asnsim.graph import DirectedGraph
from asnsim.scenario import Scenario, load_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
MAIN_SCENARIO = SCENARIO_DIR / "ten_agent_attack.scn"
PAIR_SCENARIO = SCENARIO_DIR / "ten_agent_pair.scn"


def main_scenario(**changes) -> Scenario:
    return replace(load_scenario(MAIN_SCENARIO), **changes)


def truthful_scenario(g: DirectedGraph, pre: DirectedGraph, rng: np.random.Generator, **changes) -> Scenario:
    """No scripts, random initial states, epsilon at half the step bound."""
    top = max(g.in_degree_weight(v) for v in g.nodes) or 1.0
    base = Scenario(
        graph=g,
        pre_graph=pre,
        initial={v: tuple(rng.uniform(-3, 3, 2)) for v in g.nodes},
        epsilon=0.5 / top,
        dimension=2,
        name="truthful",
    )
    return replace(base, **changes)

# PASS/FAIL lines of the acceptance suite, echoed in the terminal summary
ACCEPT_LINES: list[str] = []
