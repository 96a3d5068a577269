"""CSV and JSON trace output.

Frozen column layout of ``<stem>.states.csv`` (one row per step per agent)::

    k, agent, epoch, role, isolated, x1 .. xn, sigma, hull_width

``role`` is normal / byzantine-active / byzantine-dormant, ``isolated`` is 1
once the agent belongs to the cumulative Byzantine set, ``hull_width`` is
the widest coordinate of the normal-agent hull at that step.

``<stem>.flags.csv``::

    k, observer, flagged, residual

``<stem>.summary.json`` holds :meth:`SimTrace.summary`.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .simulate import SimTrace, role_at

FLAG_COLUMNS = ["k", "observer", "flagged", "residual"]


def state_columns(n: int) -> list[str]:
    return ["k", "agent", "epoch", "role", "isolated", *[f"x{l + 1}" for l in range(n)], "sigma", "hull_width"]


def _num(v: float) -> str:
    return repr(float(v))


def write_trace(trace: SimTrace, out_dir, stem: str | None = None) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = trace.scenario
    stem = stem or s.name
    paths = {
        "states": out / f"{stem}.states.csv",
        "flags": out / f"{stem}.flags.csv",
        "summary": out / f"{stem}.summary.json",
    }
    widths = trace.hull_width
    with open(paths["states"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(state_columns(s.dimension))
        for k in range(len(trace.states)):
            isolated = trace.byzantine_of_row[k]
            for n, v in enumerate(trace.nodes):
                w.writerow([
                    k, v, trace.epoch_of_row[k], role_at(s, v, k).value, int(v in isolated),
                    *(_num(c) for c in trace.states[k, n]),
                    _num(trace.sigma[k, n]), _num(widths[k]),
                ])
    with open(paths["flags"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLAG_COLUMNS)
        for f in trace.flags:
            w.writerow([f.k, f.observer, f.flagged, _num(f.residual)])
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(trace.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
