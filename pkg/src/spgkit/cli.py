"""Command-line entry point: ``spgkit <subcommand> ...``.

Exit codes: 0 success, 1 a requested property failed, 2 construction
failure, 64 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .construction1 import Pipeline1Config, pipeline1
from .construction2 import SectionedConfig, pipeline2
from .core import LayerFamily, diameter, hirsch_ratio
from .covering import build_disjoint_covering_designs
from .diagrams import diagram_pipeline1, diagram_pipeline2
from .errors import BudgetExceededError, ConstructionFailure, SPGError
from .io import RunManifest, dumps, graph_to_json, load_structure, read_json, sha256_text, write_json
from .polytope import (
    PolytopeIncidence,
    cube,
    layered_spg,
    simplex,
    spg_from_incidence,
    to_dot,
    to_path,
    to_singletons,
)
from .properties import (
    DEFAULT_BUDGET,
    PROPERTY_ALIASES,
    check_covering_family,
    run_property,
)
from .random_sets import concentration_check

log = logging.getLogger("spgkit")

EXIT_OK, EXIT_FAIL, EXIT_CONSTRUCTION, EXIT_USAGE = 0, 1, 2, 64

# arguments that do not affect output bytes
_NON_CONFIG = {"out", "report", "manifest", "jobs", "diagram", "dot", "func", "verbose"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# verification fan-out ----------------------------------------------------------

def _check_one(payload):
    G, name, m, budget = payload
    return run_property(G, name, m=m, budget=budget)


def verify_properties(G, names: list[str], m: int = 1, budget: int = DEFAULT_BUDGET,
                      jobs: int | None = None) -> dict:
    """Run the named checks, in parallel when ``jobs`` > 1; result order follows ``names``."""
    names = [PROPERTY_ALIASES.get(n, n) for n in names]
    jobs = jobs or os.cpu_count() or 1
    payloads = [(G, n, m, budget) for n in names]
    if jobs <= 1 or len(names) <= 1:
        results = [_check_one(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(names))) as ex:
            results = list(ex.map(_check_one, payloads))
    return dict(zip(names, results))


def _reports_json(results: dict) -> dict:
    return {k: v.to_json() for k, v in results.items()}


def _all_passed(results) -> bool:
    return all(r.passed for r in results.values())


# subcommands --------------------------------------------------------------------

def cmd_covering(ns) -> tuple[int, dict, dict | None]:
    fam = build_disjoint_covering_designs(ns.n, ns.d, ns.seed, restarts=ns.restarts,
                                          budget=ns.set_budget)
    L = fam.to_layer_family()
    checks = {
        "completeness": check_covering_family(L, "completeness", budget=ns.budget),
        "covering": check_covering_family(L, "covering", budget=ns.budget),
    }
    report = {"covering_designs": fam.report(), "reports": _reports_json(checks)}
    return (EXIT_OK if _all_passed(checks) else EXIT_FAIL), report, L.to_json()


def _c1_config(ns) -> Pipeline1Config:
    return Pipeline1Config(ns.n, ns.d, ns.m, ns.seed, strict=ns.strict,
                           separation_bound=ns.separation_bound, retry_budget=ns.retry_budget,
                           covering_restarts=ns.restarts, set_budget=ns.set_budget,
                           check_budget=ns.budget)


def cmd_build_c1(ns):
    result = pipeline1(_c1_config(ns), verify=False)
    result.reports = verify_properties(result.Z, ["dr", "adj", "sa", "ec", "wc"],
                                       budget=ns.budget, jobs=ns.jobs)
    if ns.diagram:
        Path(ns.diagram).write_text(diagram_pipeline1(result))
    return (EXIT_OK if _all_passed(result.reports) else EXIT_FAIL), result.report_json(), result.Z.to_json()


def _c2_config(ns) -> SectionedConfig:
    return SectionedConfig(ns.n, ns.m, ns.epsilon, ns.seed, mode=ns.mode,
                           min_difference=ns.min_difference, four_union=ns.four_union,
                           retry_budget=ns.retry_budget, full_range=ns.full_range,
                           covering_restarts=ns.restarts, set_budget=ns.set_budget,
                           check_budget=ns.budget)


def cmd_build_c2(ns):
    result = pipeline2(_c2_config(ns), verify=False)
    result.reports = verify_properties(result.Z, ["dr", "adj", "sa", "ec"], budget=ns.budget,
                                       jobs=ns.jobs)
    if ns.diagram:
        Path(ns.diagram).write_text(diagram_pipeline2(result))
    return (EXIT_OK if _all_passed(result.reports) else EXIT_FAIL), result.report_json(), result.Z.to_json()


def _polytope_source(ns) -> PolytopeIncidence:
    given = [x is not None for x in (ns.input, ns.cube, ns.simplex)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --in, --cube, --simplex")
    if ns.input:
        data = load_structure(read_json(ns.input))
        if not isinstance(data, PolytopeIncidence):
            raise UsageError("--in must hold an incidence JSON {n, d, vertices}")
        return data
    return cube(ns.cube) if ns.cube is not None else simplex(ns.simplex)


def cmd_polytope(ns):
    P = _polytope_source(ns)
    G = spg_from_incidence(P)
    report: dict = {"polytope": {"n": P.n, "d": P.d, "vertices": len(P.vertices),
                                 "edges": len(G.edges)},
                    "diameter": diameter(G), "hirsch_ratio": str(hirsch_ratio(G))}
    out = G
    if ns.layered_from is not None:
        out = layered_spg(G, ns.layered_from)
    elif ns.to_path:
        out = to_path(G)
    if ns.singletons:
        out = to_singletons(out)
    if isinstance(out, LayerFamily):
        report["layer_sizes"] = [len(l) for l in out.layers]
    report["result_diameter"] = diameter(out)
    if ns.dot:
        Path(ns.dot).write_text(to_dot(G))
    code = EXIT_OK
    if ns.verify:
        results = verify_properties(out, ["dr", "sa", "ec"], budget=ns.budget, jobs=ns.jobs)
        report["reports"] = _reports_json(results)
        code = EXIT_OK if _all_passed(results) else EXIT_FAIL
    family = out.to_json() if isinstance(out, LayerFamily) else graph_to_json(out)
    return code, report, family


def cmd_verify(ns):
    G = load_structure(read_json(ns.input))
    if isinstance(G, PolytopeIncidence):
        G = spg_from_incidence(G)
    names = [p.strip() for p in ns.props.split(",") if p.strip()]
    valid = set(PROPERTY_ALIASES) | set(PROPERTY_ALIASES.values()) | {"m_covering"}
    unknown = [p for p in names if p not in valid]
    if unknown:
        raise UsageError(f"unknown properties: {', '.join(unknown)}")
    results = verify_properties(G, names, m=ns.m, budget=ns.budget, jobs=ns.jobs)
    report = {"input_sha256": sha256_text(Path(ns.input).read_text()), "reports": _reports_json(results)}
    return (EXIT_OK if _all_passed(results) else EXIT_FAIL), report, None


def cmd_rand_check(ns):
    mode = "monte_carlo" if ns.mode == "mc" else ns.mode
    report = concentration_check(ns.N, ns.p1, ns.p2, ns.eps, mode=mode, trials=ns.trials,
                                 seed=ns.seed, ell=ns.ell)
    ok = report["right_ok"] and report["left_ok"]
    return (EXIT_OK if ok else EXIT_FAIL), report, None


def cmd_diagram(ns):
    data = read_json(ns.report_in)
    kind = data.get("pipeline")
    cfg = dict(data["config"])
    if kind == "c1":
        cfg["strict"] = cfg.pop("mode") == "strict"
        result = pipeline1(Pipeline1Config(**cfg), verify=False)
        text = diagram_pipeline1(result)
    elif kind == "c2":
        cfg.pop("jl"), cfg.pop("jr")
        cfg.pop("d", None)
        result = pipeline2(SectionedConfig(**cfg), verify=False)
        text = diagram_pipeline2(result)
    else:
        raise UsageError("--report must be a build-c1 or build-c2 report")
    if ns.out:
        Path(ns.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK, None, None


HANDLERS = {
    "covering": cmd_covering,
    "build-c1": cmd_build_c1,
    "build-c2": cmd_build_c2,
    "polytope": cmd_polytope,
    "verify": cmd_verify,
    "rand-check": cmd_rand_check,
    "diagram": cmd_diagram,
}


# parser -------------------------------------------------------------------------

def _common(p, outputs: bool = True, family: bool = True):
    if outputs:
        if family:
            p.add_argument("--out", help="family JSON output path")
        p.add_argument("--report", help="report JSON output path")
        p.add_argument("--manifest", help="run manifest output path")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="candidate budget for checkers")
    p.add_argument("--jobs", type=int, default=None, help="parallel verification workers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spgkit", description="Subset partition graph constructions and checkers")
    parser.add_argument("--version", action="version", version=f"spgkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("covering", help="disjoint covering designs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--set-budget", type=int, default=250_000)
    _common(p)

    p = sub.add_parser("build-c1", help="doubled sublinear pipeline")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true")
    g.add_argument("--relaxed", dest="strict", action="store_false")
    p.add_argument("--separation-bound", type=int, default=None)
    p.add_argument("--retry-budget", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--set-budget", type=int, default=250_000)
    p.add_argument("--diagram", help="write two-row diagrams to this path")
    _common(p)

    p = sub.add_parser("build-c2", help="sectioned superlinear pipeline")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--epsilon", default="1/4")
    p.add_argument("--seed", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--desk", dest="mode", action="store_const", const="desk")
    g.add_argument("--strict", dest="mode", action="store_const", const="strict")
    g.add_argument("--theorem", dest="mode", action="store_const", const="theorem")
    p.set_defaults(mode="desk")
    p.add_argument("--min-difference", type=int, default=5)
    p.add_argument("--four-union", type=int, default=None)
    p.add_argument("--retry-budget", type=int, default=2000)
    p.add_argument("--full-range", action="store_true")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--set-budget", type=int, default=250_000)
    p.add_argument("--diagram", help="write two-row diagrams to this path")
    _common(p)

    p = sub.add_parser("polytope", help="SPGs of simple polytopes")
    p.add_argument("--in", dest="input")
    p.add_argument("--cube", type=int)
    p.add_argument("--simplex", type=int)
    p.add_argument("--layered-from", type=int)
    p.add_argument("--to-path", action="store_true")
    p.add_argument("--singletons", action="store_true")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--dot", help="write the DOT graph of G_P here")
    _common(p)

    p = sub.add_parser("verify", help="run property checkers on a JSON structure")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--props", default="dr,adj,sa,ec")
    p.add_argument("--m", type=int, default=1)
    _common(p, family=False)

    p = sub.add_parser("rand-check", help="hypergeometric concentration checks")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p1", default="1/2")
    p.add_argument("--p2", default="1/2")
    p.add_argument("--eps", default="1/8")
    p.add_argument("--mode", choices=("exact", "mc", "monte_carlo"), default="exact")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ell", type=int, default=2)
    _common(p, family=False)

    p = sub.add_parser("diagram", help="two-row diagrams from a build report")
    p.add_argument("--report", dest="report_in", required=True)
    p.add_argument("--out")

    p = sub.add_parser("replay", help="re-run a manifest and compare output bytes")
    p.add_argument("--manifest", dest="manifest_in", required=True)
    p.add_argument("--out-dir", default=None)
    return parser


# driver ------------------------------------------------------------------------

def _config_of(ns) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in _NON_CONFIG and k != "command"}


def execute(command: str, ns) -> tuple[int, dict]:
    """Run one subcommand, write its outputs, and return (exit code, outputs)."""
    code, report, family = HANDLERS[command](ns)
    outputs = {}
    if family is not None and getattr(ns, "out", None):
        outputs["family"] = {"path": ns.out, "sha256": write_json(ns.out, family)}
    if report is not None:
        if getattr(ns, "report", None):
            outputs["report"] = {"path": ns.report, "sha256": write_json(ns.report, report)}
        else:
            sys.stdout.write(dumps(report))
    if getattr(ns, "manifest", None):
        waived = report.get("waived", []) if report else []
        m = RunManifest(command, _config_of(ns), outputs, waived)
        write_json(ns.manifest, m.to_json())
    return code, outputs


def replay(manifest_path: str, out_dir: str | None = None) -> tuple[int, dict]:
    """Re-run a manifest; exit 0 iff every recorded output is reproduced byte for byte."""
    m = RunManifest.from_json(read_json(manifest_path))
    if m.command not in HANDLERS:
        raise UsageError(f"manifest names unknown command {m.command!r}")
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(out_dir or tmp)
        base.mkdir(parents=True, exist_ok=True)
        ns = argparse.Namespace(**m.config, jobs=1, diagram=None, dot=None, manifest=None,
                                out=None, report=None)
        for key in ("family", "report"):
            if key in m.outputs:
                setattr(ns, "out" if key == "family" else "report", str(base / f"replay_{key}.json"))
        _, outputs = execute(m.command, ns)
    comparison = {}
    for key, rec in m.outputs.items():
        got = outputs.get(key, {}).get("sha256")
        comparison[key] = {"expected": rec["sha256"], "actual": got, "identical": got == rec["sha256"]}
    ok = bool(comparison) and all(c["identical"] for c in comparison.values())
    return (EXIT_OK if ok else EXIT_FAIL), comparison


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spgkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "replay":
            code, comparison = replay(ns.manifest_in, ns.out_dir)
            sys.stdout.write(dumps(comparison))
            return code
        code, _ = execute(ns.command, ns)
        return code
    except UsageError as exc:
        print(f"spgkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionFailure, BudgetExceededError) as exc:
        detail = getattr(exc, "constraint", None)
        print(f"spgkit: construction failed: {exc}", file=sys.stderr)
        if detail:
            print(f"spgkit: constraint: {dumps(detail).strip()}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (ValueError, FileNotFoundError) as exc:
        print(f"spgkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SPGError as exc:
        print(f"spgkit: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
