"""Command-line front end.

Exit codes: ``plan`` returns 0 SOLVED, 3 UNSOLVABLE, 4 UNKNOWN; controllability
failures return 2; bad input, I/O errors and resource caps return 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controllability import check_all
from .decomposition import ResourceCapExceeded, decompose, max_cells_default
from .geometry import SCENE_VERSION, SceneError, load_scene
from .grasp_graph import GraphError, build_graph
from .planner import SOLVED, UNKNOWN, UNSOLVABLE, Query, QueryError, plan
from .scenes import BUILTIN, random_suite
from .strata import ContactSet, Leaf
from .svg import render

EXIT_CODES = {SOLVED: 0, UNSOLVABLE: 3, UNKNOWN: 4}
EXIT_ERROR = 1
EXIT_NOT_CONTROLLABLE = 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    eps: float
    m: int
    max_cells: int
    seed: int = 0

    def __post_init__(self):
        if not self.eps > 0:
            raise UsageError("--eps must be positive")
        if self.m < 1:
            raise UsageError("--m must be at least 1")


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _read_scene(path: str):
    return load_scene(Path(path).read_bytes())


def load_query(text: str | bytes, m: int | None = None) -> Query:
    doc = json.loads(text)
    if not isinstance(doc, dict) or "start" not in doc or "goal" not in doc:
        raise QueryError("query must be an object with start and goal")
    mm = m if m is not None else doc.get("m")
    if mm is None:
        raise QueryError("m missing from both the query file and --m")
    return Query(np.array(doc["start"], dtype=float), np.array(doc["goal"], dtype=float), int(mm))


def query_doc(start, goal, m: int | None = None) -> dict:
    doc = {"version": SCENE_VERSION, "start": [float(v) for v in start], "goal": [float(v) for v in goal]}
    if m is not None:
        doc["m"] = m
    return doc


def cmd_check_controllability(args) -> int:
    if args.scene:
        n = _read_scene(args.scene).n
    elif args.n is not None:
        n = args.n
    else:
        raise UsageError("give --scene or --n")
    m = args.m if args.m is not None else n
    report = check_all(n, m, ambient=args.ambient)
    _write(args.out, _dump(report))
    return 0 if report["controllable"] else EXIT_NOT_CONTROLLABLE


def cmd_plan(args) -> int:
    scene = _read_scene(args.scene)
    query = load_query(Path(args.query).read_bytes(), args.m)
    cfg = RunConfig(args.eps, query.m, args.max_cells)
    query.check(scene)
    verdict = check_all(scene.n, cfg.m)
    if not verdict["controllable"]:
        print("error: system is not stratified controllable; refusing to plan", file=sys.stderr)
        return EXIT_NOT_CONTROLLABLE
    outcome = plan(scene, query, cfg.eps, max_cells=cfg.max_cells)
    _write(args.out, _dump(outcome.to_dict(scene)))
    if args.svg:
        leaf = Leaf.through(scene, ContactSet(()), query.start)
        try:
            cx = decompose(scene, ContactSet(()), cfg.eps, leaf=leaf, max_cells=cfg.max_cells)
        except ResourceCapExceeded:
            cx = None
        configs = [] if outcome.path is not None else [query.start, query.goal]
        Path(args.svg).write_text(render(scene, outcome.path, configs, cx), encoding="utf-8")
    print(f"{outcome.kind}" + (f": {outcome.reason}" if outcome.reason else ""), file=sys.stderr)
    return EXIT_CODES[outcome.kind]


def cmd_graph(args) -> int:
    scene = _read_scene(args.scene)
    m = args.m if args.m is not None else scene.n
    cfg = RunConfig(args.eps, m, args.max_cells)
    graph = build_graph(scene, cfg.eps, cfg.m, max_cells=cfg.max_cells)
    _write(args.out, graph.dumps() + "\n")
    comp = graph.components()
    counts = {
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "components": int(comp.max()) + 1 if len(comp) else 0,
    }
    print(json.dumps(counts, sort_keys=True), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_suite(args) -> int:
    """Write the randomized suite (scenes, queries and oracle answers)."""
    from .oracle import grid_reachable

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for prob in random_suite(args.count, args.seed):
        m = prob.scene.n
        (out / f"{prob.name}.scene.json").write_text(_dump(prob.scene.to_dict()), encoding="utf-8")
        (out / f"{prob.name}.query.json").write_text(_dump(query_doc(prob.start, prob.goal, m)), encoding="utf-8")
        entry = {"name": prob.name, "n": prob.scene.n, "m": m}
        if not args.no_oracle:
            entry["oracle"] = bool(grid_reachable(prob.scene, prob.start, prob.goal, m, args.h))
        index.append(entry)
    (out / "index.json").write_text(_dump(index), encoding="utf-8")
    return 0


def cmd_builtin(args) -> int:
    """Write a built-in scene and its query."""
    if args.name not in BUILTIN:
        raise UsageError(f"unknown scene {args.name}; choose from {', '.join(sorted(BUILTIN))}")
    prob = BUILTIN[args.name]()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{prob.name}.scene.json").write_text(_dump(prob.scene.to_dict()), encoding="utf-8")
    (out / f"{prob.name}.query.json").write_text(_dump(query_doc(prob.start, prob.goal)), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratmanip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cap(p):
        p.add_argument("--max-cells", type=int, default=max_cells_default(), help="cell cap (env STRATMANIP_MAX_CELLS)")

    p = sub.add_parser("check-controllability", help="verify stratified controllability")
    p.add_argument("--scene")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--ambient", choices=["leaf", "full"], default="leaf")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_controllability)

    p = sub.add_parser("plan", help="answer a planning query")
    p.add_argument("--scene", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--m", type=int)
    p.add_argument("--out")
    p.add_argument("--svg")
    cap(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("graph", help="build and dump the manipulation graph")
    p.add_argument("--scene", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--m", type=int)
    p.add_argument("--out")
    cap(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("suite", help=argparse.SUPPRESS)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=0.025)
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("builtin", help="write a built-in scene and query")
    p.add_argument("name")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_builtin)
    # Keep the suite generator out of the command listing.
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "suite"]
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, SceneError, QueryError, GraphError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
