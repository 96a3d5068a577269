"""Command line entry point.

Exit codes: 0 converged, 2 not converged (or defense failure), 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import AsnsError
from .generators import random_robust_graph
from .graph import has_rooted_spanning_tree, max_robustness
from .scenario import DEFENSES, format_graph, load_scenario, parse_graph
from .simulate import run_scenario
from .trace import write_trace

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


def _run_one(path: str, out: str | None, defense: str | None, horizon: int | None) -> tuple[str, int, dict]:
    try:
        scenario = load_scenario(path).with_overrides(defense, horizon)
        trace = run_scenario(scenario)
    except (AsnsError, OSError) as exc:
        return path, EXIT_ERROR, {"error": type(exc).__name__, "detail": str(exc), **_step_of(exc)}
    if out is not None:
        write_trace(trace, out, Path(path).stem)
    summary = trace.summary()
    return path, EXIT_OK if trace.converged else EXIT_NOT_CONVERGED, summary


def _step_of(exc) -> dict:
    return {"step": exc.step, "cause": exc.cause} if hasattr(exc, "step") else {}


def _brief(summary: dict) -> dict:
    keys = ("scenario", "defense", "converged", "convergence_step", "steps",
            "final_hull_width", "reconstructions", "isolated", "defense_failure")
    return {k: summary[k] for k in keys if k in summary}


def cmd_run(args) -> int:
    path, code, summary = _run_one(args.scenario, args.out, args.defense, args.horizon)
    print(json.dumps(summary if code == EXIT_ERROR else _brief(summary), indent=2, sort_keys=True))
    return code


def cmd_sweep(args) -> int:
    files = sorted(str(p) for p in Path(args.directory).glob("*.scn"))
    if not files:
        print(f"no *.scn files in {args.directory}", file=sys.stderr)
        return EXIT_ERROR
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_run_one, files, [args.out] * len(files),
                                [args.defense] * len(files), [args.horizon] * len(files)))
    worst = EXIT_OK
    for path, code, summary in results:
        state = {EXIT_OK: "converged", EXIT_NOT_CONVERGED: "not-converged", EXIT_ERROR: "error"}[code]
        extra = summary.get("detail", f"steps={summary.get('steps')} width={summary.get('final_hull_width')}")
        print(f"{Path(path).name}\t{state}\t{extra}")
        if code == EXIT_ERROR or (code == EXIT_NOT_CONVERGED and worst == EXIT_OK):
            worst = code
    return worst


def cmd_robustness(args) -> int:
    try:
        g = parse_graph(Path(args.graph).read_text(encoding="utf-8"))
        r = max_robustness(g, limit=args.limit)
    except (AsnsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    ok, root = has_rooted_spanning_tree(g)
    print(f"max_robustness: {r}")
    print(f"spanning_tree: {'true' if ok else 'false'}" + (f" root={root}" if ok else ""))
    return EXIT_OK


def cmd_gen_robust(args) -> int:
    try:
        g = random_robust_graph(args.n, args.r, np.random.default_rng(args.seed), p=args.p)
    except AsnsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"# certified max_robustness = {max_robustness(g)}")
    sys.stdout.write(format_graph(g))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asnsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", help="directory for CSV/JSON traces")
    p.add_argument("--defense", choices=DEFENSES, help="override the scenario's defense")
    p.add_argument("--horizon", type=int, help="override the scenario's horizon")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every *.scn file in a directory in parallel")
    p.add_argument("directory")
    p.add_argument("--out")
    p.add_argument("--defense", choices=DEFENSES)
    p.add_argument("--horizon", type=int)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("robustness", help="certify max r-robustness of a graph literal")
    p.add_argument("graph")
    p.add_argument("--limit", type=int, default=12)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("gen-robust", help="random search for a certified r-robust graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=None, help="edge probability (adaptive if omitted)")
    p.set_defaults(func=cmd_gen_robust)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
