"""Command-line surface: solve, gen, verify, bench.

Exit codes: 0 success, 1 usage or parse failure, 2 verification mismatch,
3 simulation caps exceeded.  Configuration precedence is built-in defaults,
then the config file (``--config`` or ``$SPARK_SIM_CONFIG``), then flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import generators
from .cost import CostConfig, attribution_report
from .driver import SimConfig, SimReport, run, to_csv
from .oracle import UnboundedBoxError, brute_force_ilp
from .pim import CacheGeometry
from .problem import IlpProblem, ProblemError, Status, dumps, parse_problem

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISMATCH = 2
EXIT_CAPPED = 3


def _load_config_file(path: str) -> dict:
    """Plain-text ``key = value`` pairs; dotted keys reach into geometry.*
    and cost.*; '#' starts a comment."""
    values: dict[str, dict | str] = {"geometry": {}, "cost": {}}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProblemError(f"{path}:{lineno}: expected key = value")
        key, _, value = (t.strip() for t in line.partition("="))
        if key.startswith("geometry."):
            values["geometry"][key[len("geometry."):]] = value
        elif key.startswith("cost."):
            values["cost"][key[len("cost."):]] = value
        else:
            values[key] = value
    return values


def _coerce(value: str, target_type):
    if target_type is bool:
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ProblemError(f"not a boolean: {value!r}")
    return target_type(value)


def _build_config(args) -> SimConfig:
    overrides: dict = {}
    geometry_kv: dict = {}
    cost_kv: dict = {}
    config_path = args.config or os.environ.get("SPARK_SIM_CONFIG")
    if config_path:
        filed = _load_config_file(config_path)
        geometry_kv.update(filed.pop("geometry"))
        cost_kv.update(filed.pop("cost"))
        overrides.update(filed)

    sim_fields = {f.name: f for f in dataclasses.fields(SimConfig)}
    parsed: dict = {}
    for key, value in overrides.items():
        if key not in sim_fields:
            raise ProblemError(f"unknown config key {key!r}")
        ftype = sim_fields[key].type
        pytype = {"int": int, "float": float, "bool": bool, "str": str,
                  "float | None": float}.get(str(ftype), str)
        parsed[key] = _coerce(value, pytype)

    if geometry_kv:
        geo_fields = {f.name: f for f in dataclasses.fields(CacheGeometry)}
        kv = {}
        for key, value in geometry_kv.items():
            if key not in geo_fields:
                raise ProblemError(f"unknown geometry key {key!r}")
            kv[key] = _coerce(value, int)
        parsed["geometry"] = CacheGeometry(**kv)
    if cost_kv:
        cost_fields = {f.name: f for f in dataclasses.fields(CostConfig)}
        kv = {}
        for key, value in cost_kv.items():
            if key not in cost_fields:
                raise ProblemError(f"unknown cost key {key!r}")
            target = cost_fields[key].type
            kv[key] = _coerce(value, int if str(target) == "int" else float)
        parsed["cost"] = CostConfig(**kv)

    # flags override the file
    if getattr(args, "no_sa", False):
        parsed["sa_enabled"] = False
    if getattr(args, "no_prefetch", False):
        parsed["prefetch_enabled"] = False
    if getattr(args, "serial_pim", False):
        parsed["serial_pim"] = True
    if getattr(args, "exact_div", False):
        parsed["approx_div_enabled"] = False
    if getattr(args, "verify_sa", False):
        parsed["verify_sa"] = True
    if getattr(args, "oracle", False):
        parsed["verify_with_oracle"] = True
    for flag in ("epsilon", "max_iters", "depth_cap", "node_cap"):
        value = getattr(args, flag, None)
        if value is not None:
            parsed[flag] = value
    return SimConfig(**parsed)


def _read_problem(path: str) -> IlpProblem:
    return parse_problem(Path(path).read_text(), name=Path(path).stem)


def _summarize(report: SimReport) -> str:
    sol = report.solution
    lines = [
        f"instance:  {report.instance}",
        f"verdict:   {report.verdict}"
        + (" (fell back to dense)" if "fallback_dense" in report.flags else ""),
        f"status:    {sol.status.value}",
    ]
    if sol.objective is not None:
        lines.append(f"objective: {sol.objective}")
    if sol.x is not None:
        lines.append("x:         " + " ".join(str(v) for v in sol.x))
    lines.append(f"cycles:    {report.ledger.cycles_total()}"
                 f"  (stall {report.ledger.cycles['fill_stall']})")
    lines.append(f"energy:    {report.ledger.energy_pj_total():.2f} pJ")
    if report.iterations:
        lines.append(f"iterations: {report.iterations}")
    if report.bnb_stats:
        lines.append(f"bnb nodes: {report.bnb_stats.get('created', 0)}")
    if report.oracle is not None:
        lines.append(f"oracle:    {report.oracle}")
    return "\n".join(lines)


def cmd_solve(args) -> int:
    try:
        problem = _read_problem(args.path)
        config = _build_config(args)
    except (ProblemError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run(problem, config)
    if args.json:
        out = report.to_json()
    elif args.csv:
        out = to_csv([report])
    else:
        out = _summarize(report) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    if report.oracle is not None and report.oracle.get("checked") \
            and not report.oracle.get("match"):
        return EXIT_MISMATCH
    if report.solution.status is Status.NOT_CONVERGED:
        return EXIT_CAPPED
    return EXIT_OK


def cmd_gen(args) -> int:
    kind = {"random": "random_dense"}.get(args.kind, args.kind)
    params: dict = {}
    if kind == "investment":
        params["n"] = args.n or 3
    elif kind == "transportation":
        params["sources"] = args.sources or 2
        params["dests"] = args.dests or 3
    elif kind == "random_dense":
        if args.n:
            params["n"] = args.n
        if args.m:
            params["m"] = args.m
    else:
        print(f"error: unknown kind {args.kind!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        problem = generators.gen_instance(kind, seed=args.seed, **params)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = dumps(problem)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _engine_objective(problem: IlpProblem, config: SimConfig):
    """Solve path used by verification; patchable in tests."""
    from .bnb import BnbConfig, solve_ilp
    solution, _ = solve_ilp(problem, BnbConfig(
        depth_cap=config.depth_cap, node_cap=config.node_cap))
    return solution


def cmd_verify(args) -> int:
    try:
        config = _build_config(args)
        if args.path:
            problems = [_read_problem(args.path)]
        elif args.suite == "dense":
            problems = generators.dense_suite(args.count)
        elif args.suite == "sparse":
            problems = generators.sparse_suite(args.count)
        else:
            print("error: give a problem file or --suite", file=sys.stderr)
            return EXIT_USAGE
    except (ProblemError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    mismatches = 0
    skipped = 0
    print(f"{'instance':28} {'engine':>12} {'oracle':>12} result")
    for problem in problems:
        try:
            truth = brute_force_ilp(problem)
        except UnboundedBoxError:
            skipped += 1
            print(f"{problem.name:28} {'-':>12} {'-':>12} skipped (no finite box)")
            continue
        engine = _engine_objective(problem, config)
        ok = engine.status == truth.status and engine.objective == truth.objective
        mismatches += 0 if ok else 1
        print(f"{problem.name:28} {str(engine.objective):>12} "
              f"{str(truth.objective):>12} {'ok' if ok else 'MISMATCH'}")
    print(f"checked={len(problems) - skipped} skipped={skipped} "
          f"mismatches={mismatches}")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def cmd_bench(args) -> int:
    try:
        spec = json.loads(Path(args.spec).read_text())
        base = _build_config(args)
        problems = []
        for entry in spec.get("instances", []):
            if isinstance(entry, str):
                problems.append(_read_problem(entry))
            else:
                problems.append(generators.gen_instance(
                    entry["kind"], seed=entry.get("seed", 0),
                    **entry.get("params", {})))
        config_rows = spec.get("configs", [{"label": "full"}])
        labeled: list[tuple[str, SimConfig]] = []
        for row in config_rows:
            label = row.get("label", "config")
            kv = {k: v for k, v in row.items() if k != "label"}
            labeled.append((label, dataclasses.replace(base, **kv)))
    except (json.JSONDecodeError, FileNotFoundError, ProblemError, KeyError,
            TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    reports: dict[tuple[str, str], SimReport] = {}
    ordered: list[SimReport] = []
    failures = 0
    for problem in problems:
        for label, config in labeled:
            try:
                report = run(problem, config)
            except Exception as exc:  # isolate per-row failures
                failures += 1
                print(f"# failed: {problem.name} [{label}]: {exc}",
                      file=sys.stderr)
                continue
            reports[(problem.name, label)] = report
            ordered.append(report)
    out = to_csv(ordered)

    attribution_labels = {"full", "no_sa", "serial_pim"}
    if attribution_labels <= {label for label, _ in labeled}:
        rows = []
        for problem in problems:
            try:
                rows.append(attribution_report(
                    reports[(problem.name, "full")].cycle_summary(),
                    reports[(problem.name, "no_sa")].cycle_summary(),
                    reports[(problem.name, "serial_pim")].cycle_summary()))
            except KeyError:
                continue
        if rows:
            header = ["instance", "cycles_full", "cycles_no_sa",
                      "cycles_serial_pim", "pct_data_movement",
                      "pct_parallel_compute", "pct_sparsity_aware"]
            out += "\n" + ",".join(header) + "\n"
            for problem, row in zip(problems, rows):
                row = dict(row, instance=problem.name)
                out += ",".join(_fmt(row[h]) for h in header) + "\n"

    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_USAGE if failures else EXIT_OK


def _fmt(v) -> str:
    return f"{v:.2f}" if isinstance(v, float) else str(v)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--no-sa", action="store_true",
                   help="force the dense path even for sparse instances")
    p.add_argument("--no-prefetch", action="store_true")
    p.add_argument("--serial-pim", action="store_true",
                   help="cap array throughput at one op per cycle")
    p.add_argument("--exact-div", action="store_true",
                   help="use exact division instead of the approximate divider")
    p.add_argument("--verify-sa", action="store_true",
                   help="double-check the sparse path with a dense solve")
    p.add_argument("--oracle", action="store_true",
                   help="compare the answer against brute force")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--depth-cap", type=int)
    p.add_argument("--node-cap", type=int)
    p.add_argument("--seed", type=int, default=0)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="spark-sim",
        description="Near-cache ILP accelerator model: solve, generate, "
                    "verify, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="simulate one instance")
    p_solve.add_argument("path")
    p_solve.add_argument("--json", action="store_true",
                         help="emit the full report as JSON")
    p_solve.add_argument("--csv", action="store_true",
                         help="emit one CSV row")
    p_solve.add_argument("--out")
    _add_config_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("kind",
                       choices=["investment", "transportation", "random"])
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--m", type=int)
    p_gen.add_argument("--sources", type=int)
    p_gen.add_argument("--dests", type=int)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out")
    p_gen.set_defaults(func=cmd_gen)

    p_verify = sub.add_parser("verify",
                              help="compare the engine against brute force")
    p_verify.add_argument("path", nargs="?")
    p_verify.add_argument("--suite", choices=["dense", "sparse"])
    p_verify.add_argument("--count", type=int, default=200)
    _add_config_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="run an instances x configs matrix")
    p_bench.add_argument("spec", help="JSON matrix spec")
    p_bench.add_argument("--out")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
