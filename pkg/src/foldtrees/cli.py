"""Command-line entry point.

Exit status: 0 when every check passes (INCONCLUSIVE is reported but does not
fail the run), 1 when any check fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import thompson as V
from .amalgam import britton_demo
from .bassserre import TransversalOracle
from .dyadic import Dyadic, Interval
from .foldengine import Pipeline, check_edge_stab, check_morph_summary, fold_history
from .limitprobe import (PreconditionError, arc_stabilizer, limit_distance, limit_point,
                         probes_to_csv)
from .permsys import CHAINS, condition51, finite_psystem
from .psystem import (FAIL, INCONCLUSIVE, PASS, CheckReport, GuardExceeded, PSystem, ThompsonSystem,
                      check_P1, check_P2, check_P4_search, intersection_law)

OUTPUT_ENV = "FOLDTREES_OUTPUT_DIR"
SYSTEMS = ("thompson", "sym6", "sym7")


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``"3"``, ``"1..4"`` or ``"1,3,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"bad index range {text!r}") from None
    if not out or min(out) < 1:
        raise UsageError(f"index range {text!r} must be non-empty and positive")
    return out


def make_system(name: str) -> PSystem:
    if name == "thompson":
        return ThompsonSystem()
    if name == "sym6":
        return finite_psystem(6)
    if name == "sym7":
        return finite_psystem(7)
    if name in CHAINS:
        raise UsageError(f"{name} is a subgroup chain; use the condition51 command")
    raise UsageError(f"unknown system {name!r} (choose from {', '.join(SYSTEMS)})")


# -- subcommands -------------------------------------------------------------

def cmd_verify_psystem(args) -> list[CheckReport]:
    sysm = make_system(args.system)
    reports = []
    for i in parse_range(args.i):
        reports.append(check_P1(sysm, i, args.samples, args.seed))
        reports.append(check_P2(sysm, i))
        if sysm.depth is None or i <= sysm.depth:
            reports.append(intersection_law(sysm, i, args.samples, args.seed))
    return reports


def _single_edge_isometry(pipe: Pipeline, i: int, j_max: int, samples: int, seed: int) -> CheckReport:
    rng = random.Random(seed)
    tree = pipe.tree(i)
    calc = tree.calc
    params = {"system": pipe.sys.name, "i": i, "j_max": j_max}
    top = j_max if pipe.sys.max_stage() is None else min(j_max, pipe.sys.max_stage())
    for _ in range(samples):
        rep = calc.reduce(calc.word((0, pipe.sys.sample(rng)), (i, pipe.sys.sample(rng))))
        lo, hi = (tree.vertex_point(v) for v in tree.endpoints(tree.edge(rep)))
        dists = pipe.distances(i, lo, hi, top)
        for j, d in enumerate(dists, start=i):
            if d != tree.length or d.exp > j - 1:
                return CheckReport("edge-isometry", params, FAIL, witness={"edge": calc.to_json(rep), "stage": j,
                                                                    "distance": str(d)}, samples=samples, seed=seed)
    return CheckReport("edge-isometry", params, PASS, samples=samples, seed=seed,
                       note=f"verified on {samples} edges: image length stays {tree.length}")


def _fold_bound(pipe: Pipeline, pairs: int, j_max: int, seed: int) -> CheckReport:
    params = {"system": pipe.sys.name, "pairs": pairs, "j_max": j_max}
    counts = fold_counts(pipe, pairs, j_max, seed)
    worst = max(counts, default=0)
    status = PASS if worst <= 4 else FAIL
    return CheckReport("fold-count-bound", params, status, witness={"counts": counts}, samples=pairs, seed=seed,
                       note=f"largest number of growth stages {worst}")


def random_edge_pair(pipe: Pipeline, rng: random.Random):
    """Two edges of T_1: a random edge and a neighbour of it (sharing an endpoint) or a random edge."""
    sysm = pipe.sys
    calc = pipe.calc(1)
    tags = [rng.choice([0, 1])]
    for _ in range(rng.randint(0, 2)):
        tags.append(1 - tags[-1])
    x = calc.reduce(calc.word(*[(t, sysm.sample(rng)) for t in tags]))
    if rng.random() < 0.75:
        top = sysm.depth if sysm.depth is not None else 4
        lvl = rng.randint(0, top)
        g = sysm.sample_level(rng, lvl) if rng.random() < 0.7 else sysm.sample(rng)
        y = calc.mul(x, calc.word((rng.choice([0, 1]), g)))
    else:
        y = calc.reduce(calc.word((0, sysm.sample(rng)), (1, sysm.sample(rng))))
    tree = pipe.tree(1)
    return tree.edge(x), tree.edge(y)


def fold_counts(pipe: Pipeline, pairs: int, j_max: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    tree = pipe.tree(1)
    top = j_max if pipe.sys.max_stage() is None else min(j_max, pipe.sys.max_stage())
    counts = []
    while len(counts) < pairs:
        a, b = random_edge_pair(pipe, rng)
        if tree.same_edge(a, b):
            continue
        counts.append(fold_history(pipe, 1, a, b, top).count)
    return counts


def cmd_verify_folds(args) -> list[CheckReport]:
    sysm = make_system(args.system)
    pipe = Pipeline(sysm)
    reports = []
    for i in parse_range(args.i):
        if sysm.depth is not None and i > sysm.depth:
            reports.append(CheckReport("fold-step", {"system": sysm.name, "i": i}, INCONCLUSIVE,
                                       note=f"no stage map at depth {sysm.depth}"))
            continue
        reports.append(check_morph_summary(pipe, i, args.samples, args.seed))
    reports.append(_single_edge_isometry(pipe, 1, args.j_max, min(args.samples, 20), args.seed))
    reports.append(_fold_bound(pipe, args.pairs, args.j_max, args.seed))
    return reports


def cmd_verify_edge_stab(args) -> list[CheckReport]:
    sysm = make_system(args.system)
    pipe = Pipeline(sysm)
    j = args.j
    top = sysm.max_stage()
    if top is not None and j > top:
        raise UsageError(f"stage {j} does not exist for {sysm.name} (largest is {top})")
    return [check_edge_stab(pipe, i, j, None, args.samples, args.seed) for i in parse_range(args.i) if i <= j]


def worked_pair(pipe: Pipeline, name: str):
    """Named stage-1 point pairs used in the documentation."""
    calc = pipe.calc(1)
    sysm = pipe.sys
    if name == "fundamental":
        return limit_point(pipe), limit_point(pipe, None, 1)
    if name == "same":
        return limit_point(pipe), limit_point(pipe)
    if isinstance(sysm, ThompsonSystem):
        if name == "folding":
            g = V.swap_halves(Interval(Dyadic(1, 2), Dyadic(1, 1)))
        elif name == "p4":
            g = V.p4_counterexample(1)[0]
        else:
            raise UsageError(f"unknown pair {name!r}")
    else:
        if name == "folding":
            g = next(h for h in sysm.level_elements(1) if not sysm.in_level(h, 0))
        else:
            raise UsageError(f"unknown pair {name!r} for {sysm.name}")
    return limit_point(pipe), limit_point(pipe, calc.word((1, g)))


def cmd_probe_distance(args) -> list:
    sysm = make_system(args.system)
    pipe = Pipeline(sysm)
    rows = []
    names = args.pair or ["fundamental", "folding"]
    calc = pipe.calc(1)
    for name in names:
        x, y = worked_pair(pipe, name)
        res = limit_distance(pipe, x, y, args.j_max, args.window)
        rows.append(res.row(f"{name}:x", f"{name}:y"))
    rng = random.Random(args.seed)
    for k in range(args.random):
        w = calc.reduce(calc.word((1, sysm.sample(rng)), (0, sysm.sample(rng))))
        res = limit_distance(pipe, limit_point(pipe), limit_point(pipe, w), args.j_max, args.window)
        rows.append(res.row("M", calc.describe(w) if args.format == "text" else f"random{k}"))
    return rows


def _arcs(pipe: Pipeline, count: int, seed: int, j_max: int, window: int):
    rng = random.Random(seed)
    calc = pipe.calc(1)
    sysm = pipe.sys
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count:
        tries += 1
        if sysm.elements() is None:
            w = calc.reduce(calc.word((0, sysm.sample(rng)), (1, sysm.sample(rng))))
            x, y = limit_point(pipe, w, 0), limit_point(pipe, w, 1)
        else:
            w = calc.reduce(calc.word((1, sysm.sample(rng)), (0, sysm.sample(rng)), (1, sysm.sample(rng))))
            x, y = limit_point(pipe), limit_point(pipe, w)
        try:
            out.append(arc_stabilizer(pipe, x, y, j_max, window))
        except PreconditionError:
            continue
    return out


def cmd_arc_stab(args) -> list[CheckReport]:
    sysm = make_system(args.system)
    pipe = Pipeline(sysm)
    finite = sysm.elements() is not None
    j_max = args.j_max if not finite else sysm.max_stage()
    window = args.window if not finite else 2
    reports = []
    rng = random.Random(args.seed)
    for n, arc in enumerate(_arcs(pipe, args.arcs, args.seed, j_max, window)):
        params = {"system": sysm.name, "arc": n, "m": arc.m}
        bad = None
        for _ in range(args.samples):
            g = arc.sample_member(rng)
            if not arc.fixes_edge_images(g, j_max):
                bad = g
                break
        status = PASS if bad is None else FAIL
        witness = arc.descriptor()
        if bad is not None:
            witness["member"] = pipe.calc(arc.m).to_json(bad)
        reports.append(CheckReport("arc_stab", params, status, witness=witness, samples=args.samples,
                                   seed=args.seed, note=f"probe {arc.probe}"))
    return reports


def cmd_ball(args) -> object:
    sysm = make_system(args.system)
    oracle = TransversalOracle(sysm, args.stage)
    return oracle.ball(args.radius)


def cmd_condition51(args) -> list[CheckReport]:
    if args.chain not in CHAINS:
        raise UsageError(f"unknown chain {args.chain!r} (choose from {', '.join(CHAINS)})")
    chain = CHAINS[args.chain]()
    levels = args.i or ("1" if args.chain == "custom" else "1..3")
    return [condition51(chain, i) for i in parse_range(levels)]


def cmd_p4_search(args) -> list[CheckReport]:
    sysm = make_system(args.system)
    return [check_P4_search(sysm, i, args.budget, args.seed) for i in parse_range(args.i)]


def cmd_britton(args) -> list[CheckReport]:
    demo = britton_demo(5, args.max_pow)
    calc = demo["calc"]
    scan = CheckReport("britton-intersection", {"n": 5}, PASS if demo["scan_equals_previous"] else FAIL,
                       witness={"scan_size": len(demo["scan"]), "expected_size": len(demo["expected"])},
                       samples=120, note="G_n meets its t-conjugate exactly in G_{n-1}")
    probe = demo["probe"]
    order = CheckReport("britton-order", {"max_pow": args.max_pow}, FAIL if probe.exact else PASS,
                        witness={"word": calc.describe(demo["word"]), "result": str(probe)},
                        samples=args.max_pow, note=str(probe))
    return [scan, order]


def cmd_verify_all(args) -> list[CheckReport]:
    reports: list[CheckReport] = []
    thompson = ThompsonSystem()
    for i in range(1, 5):
        reports.append(check_P1(thompson, i, args.samples, args.seed))
        reports.append(check_P2(thompson, i))
        reports.append(intersection_law(thompson, i, args.samples, args.seed))
    for i in (1, 2):
        rep = check_P4_search(thompson, i, 50, args.seed)
        # the failure of (P4) for V is the expected outcome
        expected = CheckReport("P4-fails-for-V", rep.params, PASS if rep.status == FAIL else FAIL,
                               witness=rep.witness, samples=rep.samples, seed=rep.seed, note=rep.note)
        reports.append(expected)
    for chain in ("alt-chain", "ut-chain"):
        for i in range(1, 4):
            reports.append(condition51(CHAINS[chain](), i))
    ctrl = condition51(CHAINS["custom"](), 1)
    reports.append(CheckReport("condition51-control", ctrl.params, PASS if ctrl.status == FAIL else FAIL,
                               witness=ctrl.witness, note="C2 < C4 must fail"))
    sym6 = finite_psystem(6)
    reports += [check_P1(sym6, 1), check_P2(sym6, 1)]
    for sysm, stages in ((thompson, (1, 2, 3)), (sym6, (1,))):
        pipe = Pipeline(sysm)
        for i in stages:
            reports.append(check_morph_summary(pipe, i, args.samples, args.seed))
        reports.append(check_edge_stab(pipe, 1, 3 if sysm is thompson else 2, None, args.samples, args.seed))
    reports += cmd_britton(argparse.Namespace(max_pow=50))
    return reports


# -- output ------------------------------------------------------------------

def _emit(text: str, args, ext: str) -> None:
    path = args.output
    if path is None and os.environ.get(OUTPUT_ENV):
        path = str(Path(os.environ[OUTPUT_ENV]) / f"{args.command}.{ext}")
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
    print(f"wrote {path}")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output")}


def _document(args, body_key: str, body) -> dict:
    doc = {"config": _config(args), body_key: body}
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    return doc


def render_reports(reports: list[CheckReport], args) -> int:
    if args.format == "json":
        _emit(json.dumps(_document(args, "reports", [r.to_json() for r in reports]), indent=2, sort_keys=True) + "\n",
              args, "json")
    elif args.format == "csv":
        lines = ["check,status,samples,seed,params,note"]
        for r in reports:
            params = ";".join(f"{k}={v}" for k, v in r.params.items())
            lines.append(f"{r.check},{r.status},{r.samples},{r.seed},{params},\"{r.note}\"")
        _emit("\n".join(lines) + "\n", args, "csv")
    elif args.format == "dot":
        raise UsageError("dot output is only available for the ball command")
    else:
        lines = [r.line() for r in reports]
        for r in reports:
            if r.status == FAIL and r.witness is not None:
                lines.append(f"  witness for {r.check}: {json.dumps(r.witness, sort_keys=True)}")
        flagged = sum(r.status == INCONCLUSIVE for r in reports)
        if flagged:
            lines.append(f"note: {flagged} check(s) INCONCLUSIVE")
        _emit("\n".join(lines) + "\n", args, "txt")
    return 1 if any(r.status == FAIL for r in reports) else 0


def render_probe(rows: list[dict], args) -> int:
    if args.format == "json":
        _emit(json.dumps(_document(args, "probes", rows), indent=2, sort_keys=True) + "\n", args, "json")
    elif args.format == "csv":
        _emit(probes_to_csv(rows), args, "csv")
    elif args.format == "dot":
        raise UsageError("dot output is only available for the ball command")
    else:
        out = []
        for r in rows:
            if r["value"] is None:
                verdict = f"no stable value ({r['status']})"
            else:
                verdict = f"{r['value']} {r['status']}({r['stage']})"
            out.append(f"{r['x']} .. {r['y']}: d = {' '.join(r['values'])} -> {verdict}")
        _emit("\n".join(out) + "\n", args, "txt")
    return 0


def render_ball(ball, args) -> int:
    if args.format == "dot":
        _emit(ball.to_dot(), args, "dot")
    elif args.format == "json":
        _emit(json.dumps(_document(args, "ball", ball.to_json()), indent=2, sort_keys=True) + "\n", args, "json")
    elif args.format == "csv":
        data = ball.to_json()
        lines = ["stage,radius,vertices,edges", f"{data['stage']},{data['radius']},{len(data['vertices'])},{data['edges']}"]
        _emit("\n".join(lines) + "\n", args, "csv")
    else:
        _emit(f"ball of radius {ball.radius} in the stage-{ball.oracle.stage} tree: {ball.vertex_count} vertices, "
              f"{ball.edge_count} edges\n", args, "txt")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foldtrees", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json", "dot", "csv"), default="text")
    common.add_argument("--output", default=None,
                        help=f"output file (default: stdout, or a file in ${OUTPUT_ENV} when set)")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-identical output")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, system=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if system:
            p.add_argument("--system", default="thompson", help=f"one of {', '.join(SYSTEMS)}")
        p.set_defaults(func=func)
        return p

    p = add("verify-psystem", cmd_verify_psystem, "check (P1), (P2) and the intersection law")
    p.add_argument("--i", default="1..4")
    p.add_argument("--samples", type=int, default=100)

    p = add("verify-folds", cmd_verify_folds, "check the one-step fold properties, edge isometry and fold bound")
    p.add_argument("--i", default="1..3")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--j-max", type=int, default=6)
    p.add_argument("--pairs", type=int, default=10)

    p = add("verify-edge-stab", cmd_verify_edge_stab, "transport of edge stabilizers to later stages")
    p.add_argument("--i", default="1")
    p.add_argument("--j", type=int, default=3)
    p.add_argument("--samples", type=int, default=100)

    p = add("probe-distance", cmd_probe_distance, "stabilized distances between stage-1 points")
    p.add_argument("--pair", action="append", choices=("fundamental", "folding", "p4", "same"))
    p.add_argument("--random", type=int, default=0, help="number of extra random pairs")
    p.add_argument("--j-max", type=int, default=6)
    p.add_argument("--window", type=int, default=3)

    p = add("arc-stab", cmd_arc_stab, "stabilizer descriptors of stabilized arcs")
    p.add_argument("--arcs", type=int, default=5)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--j-max", type=int, default=6)
    p.add_argument("--window", type=int, default=3)

    p = add("ball", cmd_ball, "BFS ball of a finite system's tree")
    p.set_defaults(system="sym6")
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--stage", type=int, default=1)

    p = add("condition51", cmd_condition51, "no normal subgroup of G_i inside G_{i-1}", system=False)
    p.add_argument("--chain", "--system", dest="chain", default="alt-chain", help=f"one of {', '.join(CHAINS)}")
    p.add_argument("--i", default=None, help="levels (default 1..3, or 1 for the custom chain)")

    p = add("p4-search", cmd_p4_search, "search for a (P4) containment violation")
    p.add_argument("--i", default="1")
    p.add_argument("--budget", type=int, default=200)

    p = add("britton-demo", cmd_britton, "Britton reduction checks on a finite HNN analog", system=False)
    p.add_argument("--max-pow", type=int, default=50)

    p = add("verify-all", cmd_verify_all, "run the verification matrix", system=False)
    p.add_argument("--samples", type=int, default=100)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        result = args.func(args)
        if args.command == "ball":
            return render_ball(result, args)
        if args.command == "probe-distance":
            return render_probe(result, args)
        return render_reports(result, args)
    except (UsageError, GuardExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
