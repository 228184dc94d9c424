"""Command line entry point: ``treeforge run | sweep | export-dot``.

Exit status: 0 when every verdict passes, 1 on a failed verdict, 2 when an
input cannot be parsed or validated.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema

from . import __version__
from .baire import EnumerationError, block_counts, dominates_window, set_from_json, weakly_dominates_at
from .dot import to_dot
from .namecraft import AntichainFamily, FinitePoset, PhiError, PosetError, build_phi, check_phi, verify_star
from .qforcing import (
    ForbiddenList,
    QError,
    RunAborted,
    condition_from_json,
    condition_to_json,
    q_generic_run,
    q_leq,
    q_validate,
    trace_to_json,
)
from .registry import RegistryError, resolve_silver, resolve_tree
from .surgery import (
    ColoringError,
    ThinPlan,
    antichain_build,
    audit_omega_thin,
    audit_silver_thin,
    audit_thin,
    intersection_tree,
    laver_thin,
    miller_thin,
    omega_antichain,
    sacks_thin,
    silver_antichain,
    silver_thin,
)
from .surgery.silver import SilverError
from .trees import OMEGA, FiniteTree, TreeError, is_skew, ramification_points, truncate

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
REPORT_SCHEMA = "treeforge/report/v1"
DEFAULT_CERT_DEPTH = 12
DEFAULT_QRUN_HORIZON = 64
DOT_DEPTH = 6

# raised while turning scenario JSON into objects
INPUT_ERRORS = (RegistryError, ColoringError, EnumerationError, PosetError, SilverError, QError, TreeError, KeyError, TypeError, ValueError)
# raised by a pipeline on well-formed input whose claim does not hold
RUN_ERRORS = (TreeError, QError, PhiError, EnumerationError, ColoringError)


class InvalidScenario(Exception):
    pass


@lru_cache(maxsize=None)
def scenario_schema() -> dict:
    text = resources.files("treeforge").joinpath("schemas/scenario.v1.json").read_text(encoding="utf-8")
    return json.loads(text)


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(scenario: dict) -> str:
    return hashlib.sha256(canonical(scenario).encode("utf-8")).hexdigest()


def validate(scenario: Any) -> None:
    try:
        jsonschema.validate(scenario, scenario_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise InvalidScenario(f"{where}: {exc.message}") from exc


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("TREEFORGE_JOBS", "1")))
    except ValueError:
        return 1


class Outcome:
    """Accumulates verdicts, certificates, results and side files for one scenario."""

    def __init__(self) -> None:
        self.verdicts: list[dict] = []
        self.certificates: list[dict] = []
        self.results: dict = {}
        self.files: dict[str, str] = {}

    def verdict(self, name: str, ok: bool, detail: Any = None) -> None:
        entry = {"name": name, "ok": bool(ok)}
        if detail is not None:
            entry["detail"] = detail
        self.verdicts.append(entry)

    @property
    def ok(self) -> bool:
        return all(v["ok"] for v in self.verdicts)


# scenario kinds


def _horizon(scenario: dict, key: str, default: int | None = None) -> int:
    value = scenario.get("horizons", {}).get(key, default)
    if value is None:
        raise InvalidScenario(f"horizons.{key} is required for this scenario")
    return value


def _thin(scenario: dict, out: Outcome, jobs: int, seed: int) -> None:
    params = scenario["params"]
    forcing = params.get("forcing", "sacks")
    plan = ThinPlan.from_json(params["plan"])
    D = _horizon(scenario, "depth")
    want_dot = scenario.get("dot", False)
    if forcing == "silver":
        if "condition" not in params:
            raise InvalidScenario("silver thinning needs params.condition")
        p = resolve_silver(params["condition"])
        q = _guard(out, "thin", lambda: silver_thin(p, plan))
        if q is None:
            return
        audit = audit_silver_thin(p, q, plan, D)
        out.verdict("thin-audit", audit.ok, audit.to_json())
        out.results["free_positions"] = q.free_positions(0, D)
        return
    if "tree" not in params:
        raise InvalidScenario(f"{forcing} thinning needs params.tree")
    T = resolve_tree(params["tree"])
    if forcing == "sacks":
        if T.width != 2:
            raise InvalidScenario("sacks thinning needs a binary tree")
        S = _guard(out, "thin", lambda: sacks_thin(T, plan))
        if S is None:
            return
        audit = _guard(out, "thin", lambda: audit_thin(T, S, plan, D))
        if audit is None:
            return
        out.verdict("thin-audit", audit.ok, audit.to_json())
        F = truncate(S, D)
        out.results["ramification_levels"] = sorted({len(t) for t in ramification_points(F) if len(t) < D})
        out.results["enforced_blocks"] = [list(b) for b in plan.enforced_blocks()]
        out.results["nodes"] = len(F.nodes)
        if want_dot:
            out.files["dot"] = to_dot(F, "thinned", plan.enforced_blocks())
        return
    if T.width != OMEGA:
        raise InvalidScenario(f"{forcing} thinning needs a tree on omega")
    vb = _horizon(scenario, "value")
    thin = (lambda: laver_thin(T, plan)) if forcing == "laver" else (lambda: miller_thin(T, plan, D))
    S = _guard(out, "thin", thin)
    if S is None:
        return
    audit = _guard(out, "thin", lambda: audit_omega_thin(T, S, plan, D, vb))
    if audit is None:
        return
    out.verdict("thin-audit", audit.ok, audit.to_json())
    out.results["enforced_blocks"] = [list(b) for b in plan.enforced_blocks()]
    if want_dot:
        out.files["dot"] = to_dot(truncate(S, D, vb), "thinned", plan.enforced_blocks())


def _antichain(scenario: dict, out: Outcome, jobs: int, seed: int) -> None:
    params = scenario["params"]
    forcing = params.get("forcing", "sacks")
    X = set_from_json(params["X"])
    i_max = _horizon(scenario, "index")
    D = scenario.get("horizons", {}).get("depth")
    low = params.get("low_policy", "keep")
    if forcing == "sacks":
        if "trees" in params:
            trees = [resolve_tree(r) for r in params["trees"]]
        elif "tree" in params:
            trees = [resolve_tree(params["tree"])] * params.get("count", 2)
        else:
            raise InvalidScenario("sacks antichain needs params.trees or params.tree")
        if any(T.width != 2 for T in trees):
            raise InvalidScenario("sacks antichain needs binary trees")
        result = _guard(out, "build", lambda: antichain_build(X, trees, i_max, D, low, jobs))
    elif forcing == "silver":
        if "condition" not in params:
            raise InvalidScenario("silver antichain needs params.condition")
        p = resolve_silver(params["condition"])
        result = _guard(out, "build", lambda: silver_antichain(X, p, params.get("count", 2), i_max, D, low, jobs))
    else:
        if "tree" not in params:
            raise InvalidScenario(f"{forcing} antichain needs params.tree")
        T = resolve_tree(params["tree"])
        if T.width != OMEGA:
            raise InvalidScenario(f"{forcing} antichain needs a tree on omega")
        vb = _horizon(scenario, "value", 2 * X.mu(2 ** (i_max + 1)))
        count = params.get("count", 2)
        result = _guard(out, "build", lambda: omega_antichain(X, T, count, i_max, D, vb, forcing, jobs))
    if result is None:
        return
    out.results["members"] = [plan.to_json() for _, plan in result.members]
    for (a, b), cert in sorted(result.certificates.items()):
        out.certificates.append({"pair": [a, b], **cert.to_json()})
        out.verdict(f"incompatible[{a},{b}]", cert.ok)
    out.results["pairs"] = len(result.certificates)
    if scenario.get("dot", False) and forcing == "sacks" and len(result.members) >= 2:
        c = result.certificates[(0, 1)]
        inter = intersection_tree(result.members[0][0], result.members[1][0], c.checked_to)
        out.files["dot"] = to_dot(inter, "intersection-0-1", highlight_from=c.divergence_level)


def _random_schedule(rng: random.Random, length: int, forbidden: int) -> list[dict]:
    kinds = ["grow-split", "ensure-compatible"] + (["avoid"] if forbidden else [])
    tasks = []
    for _ in range(length):
        kind = rng.choice(kinds)
        tasks.append({kind: rng.randrange(forbidden) if kind == "avoid" else rng.randrange(8)})
    return tasks


def _qrun(scenario: dict, out: Outcome, jobs: int, seed: int) -> None:
    params = scenario["params"]
    start = condition_from_json(params["seed"], resolve_tree)
    forbidden = ForbiddenList(
        tuple(resolve_tree(r) for r in params.get("forbidden", [])),
        params.get("certificate_depth", DEFAULT_CERT_DEPTH),
    )
    horizon = _horizon(scenario, "depth", DEFAULT_QRUN_HORIZON)
    schedule = params["schedule"]
    if isinstance(schedule, dict):
        schedule = _random_schedule(random.Random(seed), schedule["random"]["length"], len(forbidden.trees))
        out.results["seed"] = seed
    out.results["schedule"] = schedule
    shape = q_validate(start)
    if not shape.ok:
        raise InvalidScenario("seed condition: " + "; ".join(shape.errors))
    certified = q_validate(start, forbidden)
    out.verdict("seed-certified", certified.ok, list(certified.errors) or None)
    try:
        run = q_generic_run(start, forbidden, schedule, horizon)
        trace, aborted = list(run.trace), None
    except RunAborted as exc:
        trace, aborted = exc.trace, str(exc.cause)
    out.verdict("run-completed", aborted is None, aborted)
    out.results["trace"] = trace_to_json(trace)
    conds = [start] + [step.condition for step in trace]
    out.verdict("skew", all(is_skew(c.F) for c in conds))
    out.verdict("monotone", all(q_leq(a, b) for a, b in zip(conds, conds[1:])))
    avoided = []
    for step in trace:
        if "avoid" in step.task:
            T_alpha = forbidden.trees[step.task["avoid"]]
            avoided.append(all(t not in T_alpha for t in step.condition.leaves))
    if avoided:
        out.verdict("avoids", all(avoided))
    for step in trace:
        out.certificates.extend(c if isinstance(c, dict) else c.to_json() for c in step.certificates)
    final = conds[-1]
    out.results["final"] = condition_to_json(final)
    if scenario.get("dot", False):
        out.files["dot"] = to_dot(final.F, "generic-tree")


def _name(scenario: dict, out: Outcome, jobs: int, seed: int) -> None:
    params = scenario["params"]
    P = FinitePoset.from_json(params["poset"])
    fam = AntichainFamily(P, params["antichains"])
    targets = params["targets"]
    threshold = params["threshold"]
    # maximal elements of a finite poset never have two members above them, so
    # the star condition is reported rather than judged
    star = verify_star(P, fam, targets, threshold)
    out.results["star"] = {
        "witnesses": [[p, z] for p, z in star.witnesses.items()],
        "unwitnessed": list(star.unwitnessed),
    }
    phis = []
    for z in params.get("phi_for", range(len(fam))):
        if not 0 <= z < len(fam):
            raise InvalidScenario(f"phi_for names antichain {z}, family has {len(fam)}")
        A = fam[z]
        try:
            assignment = build_phi(P, A, targets, threshold)
        except PhiError as exc:
            out.verdict(f"phi[{z}]", False, {"starved": list(exc.pair), "message": str(exc)})
            continue
        ok = check_phi(P, A, assignment.phi, targets, threshold)
        out.verdict(f"phi[{z}]", ok)
        phis.append({"antichain": z, "phi": [[q, assignment.phi[q]] for q in A]})
    out.results["phi"] = phis


def sweep_rows(predicate: str, X, Y, lo: int, hi: int, jobs: int = 1) -> list[tuple[int, bool, str]]:
    """One ``(index, verdict, counts)`` row per index in ``[lo, hi]``."""

    def cell(k: int):
        if predicate == "dominates":
            return k, dominates_window(X, Y, k), str(Y.count_in(X.mu(k), X.mu(k + 1)))
        counts = block_counts(X, Y, k)
        return k, weakly_dominates_at(X, Y, k), ";".join(map(str, counts))

    ks = range(lo, hi + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(cell, ks))
    return [cell(k) for k in ks]


def rows_to_csv(predicate: str, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n" if predicate == "dominates" else "i", "verdict", "counts"])
    for k, ok, counts in rows:
        writer.writerow([k, "true" if ok else "false", counts])
    return buf.getvalue()


def _sweep(scenario: dict, out: Outcome, jobs: int, seed: int) -> None:
    params = scenario["params"]
    X, Y = set_from_json(params["X"]), set_from_json(params["Y"])
    lo, hi = params["range"]
    if lo > hi:
        raise InvalidScenario("range must be [lo, hi] with lo <= hi")
    pred = params["predicate"]
    rows = _guard(out, "sweep", lambda: sweep_rows(pred, X, Y, lo, hi, jobs))
    if rows is None:
        return
    out.results["rows"] = [[k, ok, c] for k, ok, c in rows]
    out.files["csv"] = rows_to_csv(pred, rows)
    expect = params.get("expect")
    if expect is not None:
        want = expect == "all-true"
        out.verdict(expect, all(ok == want for _, ok, _ in rows))


def _guard(out: Outcome, name: str, fn: Callable):
    try:
        return fn()
    except RUN_ERRORS as exc:
        out.verdict(name, False, f"{type(exc).__name__}: {exc}")
        return None


KINDS: dict[str, Callable] = {
    "thin": _thin,
    "antichain": _antichain,
    "qrun": _qrun,
    "name": _name,
    "predicate-sweep": _sweep,
}


def run_scenario(scenario: Any, jobs: int = 1, seed: int = 0) -> tuple[dict, dict[str, str]]:
    """Validate and execute one scenario; returns the report and side files.

    Raises ``InvalidScenario`` for anything that should exit with status 2.
    """
    validate(scenario)
    out = Outcome()
    start = time.perf_counter()
    try:
        KINDS[scenario["kind"]](scenario, out, jobs, seed)
    except InvalidScenario:
        raise
    except INPUT_ERRORS as exc:
        raise InvalidScenario(f"{type(exc).__name__}: {exc}") from exc
    elapsed = time.perf_counter() - start
    report = {
        "schema": REPORT_SCHEMA,
        "tool": {"name": "treeforge", "version": __version__},
        "scenario": {
            "digest": digest(scenario),
            "kind": scenario["kind"],
            "horizons": scenario.get("horizons", {}),
            "params": scenario["params"],
        },
        "ok": out.ok,
        "verdicts": out.verdicts,
        "certificates": out.certificates,
        "results": out.results,
        "timings": {"seconds": round(elapsed, 6)},
    }
    return report, out.files


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def scenario_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return files


def cmd_run(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for path in scenario_files(args.files):
        stem = path.stem
        try:
            try:
                scenario = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidScenario(f"cannot read scenario: {exc}") from exc
            report, files = run_scenario(scenario, args.jobs, args.seed)
        except InvalidScenario as exc:
            error = {"schema": REPORT_SCHEMA, "tool": {"name": "treeforge", "version": __version__}, "ok": False, "error": str(exc)}
            write_text(out_dir / f"{stem}.report.json", json.dumps(error, indent=2, sort_keys=True) + "\n")
            print(f"{path}: invalid: {exc}", file=sys.stderr)
            status = max(status, EXIT_INVALID)
            continue
        write_text(out_dir / f"{stem}.report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
        for ext, text in sorted(files.items()):
            write_text(out_dir / f"{stem}.{ext}", text)
        print(f"{path}: {'pass' if report['ok'] else 'FAIL'}")
        if not report["ok"]:
            status = max(status, EXIT_FAIL)
    return status


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        X, Y = set_from_json(json.loads(args.X)), set_from_json(json.loads(args.Y))
    except (json.JSONDecodeError, EnumerationError) as exc:
        print(f"invalid set: {exc}", file=sys.stderr)
        return EXIT_INVALID
    lo, hi = args.range
    if lo < 0 or lo > hi:
        print("range must satisfy 0 <= lo <= hi", file=sys.stderr)
        return EXIT_INVALID
    try:
        rows = sweep_rows(args.predicate, X, Y, lo, hi, args.jobs)
    except EnumerationError as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = rows_to_csv(args.predicate, rows)
    if args.out:
        write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def dot_for_ref(ref: Any, depth: int, value_bound: int | None) -> str:
    """DOT text for a tree reference, a condition, or an intersection of two trees."""
    if isinstance(ref, dict) and "condition" in ref:
        c = condition_from_json(ref["condition"], resolve_tree)
        return to_dot(c.F, "condition")
    if isinstance(ref, dict) and "intersection" in ref:
        a, b = (resolve_tree(r) for r in ref["intersection"])
        div = ref.get("divergence_level")
        D = ref.get("depth", depth)
        return to_dot(intersection_tree(a, b, D, value_bound), "intersection", highlight_from=div)
    if isinstance(ref, dict) and "nodes" in ref:
        return to_dot(FiniteTree.from_json(ref), "tree")
    T = resolve_tree(ref)
    if T.width == OMEGA and value_bound is None:
        raise InvalidScenario("trees on omega need --value-bound")
    enforced = ()
    if isinstance(ref, dict) and "thinned" in ref and "plan" in ref["thinned"]:
        enforced = ThinPlan.from_json(ref["thinned"]["plan"]).enforced_blocks()
    return to_dot(truncate(T, depth, value_bound), "tree", enforced)


def cmd_export_dot(args: argparse.Namespace) -> int:
    text = args.ref
    try:
        if text.startswith("@"):
            text = Path(text[1:]).read_text(encoding="utf-8")
        try:
            ref = json.loads(text)
        except json.JSONDecodeError:
            ref = text  # a bare registry name
        dot = dot_for_ref(ref, args.depth, args.value_bound)
    except (InvalidScenario, OSError, *INPUT_ERRORS) as exc:
        print(f"cannot export: {exc}", file=sys.stderr)
        return EXIT_INVALID
    write_text(Path(args.path), dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeforge", description="Tree surgery and finite forcing verification batches.")
    parser.add_argument("--version", action="version", version=f"treeforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenario files (or directories of them)")
    run.add_argument("files", nargs="+")
    run.add_argument("--out", required=True, help="directory for reports and side files")
    run.add_argument("--jobs", type=int, default=default_jobs(), help="parallelism (default: $TREEFORGE_JOBS or 1)")
    run.add_argument("--seed", type=int, default=0, help="seed for randomly generated schedules")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="tabulate a window predicate as CSV")
    sw.add_argument("predicate", choices=["dominates", "weakly-dominates"])
    sw.add_argument("--X", required=True, help="EnumeratedSet JSON")
    sw.add_argument("--Y", required=True, help="EnumeratedSet JSON")
    sw.add_argument("--range", type=int, nargs=2, required=True, metavar=("LO", "HI"))
    sw.add_argument("--out", help="CSV path (default: stdout)")
    sw.add_argument("--jobs", type=int, default=default_jobs())
    sw.set_defaults(func=cmd_sweep)

    ex = sub.add_parser("export-dot", help="write a DOT figure of a tree, condition or intersection")
    ex.add_argument("ref", help="JSON reference, @file, or registry name such as full-binary")
    ex.add_argument("path")
    ex.add_argument("--depth", type=int, default=DOT_DEPTH)
    ex.add_argument("--value-bound", type=int)
    ex.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
