"""Batch command line: solve, verify, check-oracle, serve.

Exit codes
    0  success (exact or eps solve; exact solution verified; checks pass)
    1  solver exhausted its budget (status "failed")
    2  malformed input (schema violation, bad flags, variant mismatch)
    3  verification or assumption check failed
    4  eps solution: not independently verifiable at a point, but the cell
       certificate checked out
    5  eps solution whose certificate failed to check

Set FAIRRENT_LOG=debug|info|warning|error for log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

from fairrent.oracles import check_axioms
from fairrent.problems import (
    ProblemError,
    REPORT_FORMAT,
    VERIFY_EPS_CERTIFIED,
    VERIFY_EPS_FAILED,
    VERIFY_FAILED,
    VERIFY_OK,
    build_oracles,
    collect_elicited,
    dumps_canonical,
    load_problem,
    point_rationals,
    resolve_config,
    solution_to_dict,
    solve_spec,
    verify_solution_dict,
)

log = logging.getLogger("fairrent")

EXIT_OK = 0
EXIT_SOLVE_FAILED = 1
EXIT_INPUT = 2
EXIT_CHECK_FAILED = 3


def _setup_logging() -> None:
    level = os.environ.get("FAIRRENT_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairrent",
        description="Envy-free room assignment and rent division",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a problem file and write a solution file")
    solve.add_argument("--input", required=True, help="problem JSON path")
    solve.add_argument("--variant", choices=["rental", "cake", "exchange"])
    solve.add_argument("--mesh-start", type=int, dest="initial_mesh")
    solve.add_argument("--epsilon", type=str, help="target cell diameter, e.g. 1/1000")
    solve.add_argument("--max-doublings", type=int, dest="max_doublings")
    solve.add_argument("--beam", type=int, dest="beam_width")
    solve.add_argument("--seed", type=int)
    solve.add_argument("--offset", choices=["on", "off"], help="seeded initial-mesh offset")
    solve.add_argument("--workers", type=int, help="concurrent vertex evaluation")
    solve.add_argument("--budget", type=int, dest="query_budget", help="oracle query budget")
    solve.add_argument("--output", help="solution JSON path (default: stdout)")

    verify = sub.add_parser("verify", help="re-check a solution file against its problem")
    verify.add_argument("--solution", required=True)
    verify.add_argument("--problem", required=True)

    check = sub.add_parser("check-oracle", help="sample the declared assumption set per agent")
    check.add_argument("--input", required=True, help="problem JSON path")
    check.add_argument("--samples", type=int, default=200)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--output", help="report JSON path (default: stdout)")

    serve = sub.add_parser("serve", help="run the interactive elicitation session server")
    serve.add_argument("--port", type=int, required=True, help="TCP port (0 = pick a free one)")
    serve.add_argument("--input", required=True, help="problem JSON path")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--once", action="store_true", help="exit after the first session ends")
    return parser


def _solver_overrides(args) -> dict:
    overrides = {
        key: getattr(args, key)
        for key in (
            "initial_mesh",
            "max_doublings",
            "beam_width",
            "seed",
            "workers",
            "query_budget",
        )
    }
    if args.epsilon is not None:
        overrides["epsilon"] = Fraction(args.epsilon)
    if args.offset is not None:
        overrides["mesh_offset"] = args.offset == "on"
    return overrides


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    spec = load_problem(args.input, variant_override=args.variant)
    if spec.interactive_agents:
        raise ProblemError(
            "/agents",
            f"interactive agents {list(spec.interactive_agents)} need `fairrent serve`",
        )
    config = resolve_config(spec, _solver_overrides(args))
    log.info("solving %s (%s, %d agents)", args.input, spec.variant, len(spec.agents))
    solution, oracles = solve_spec(spec, config)
    payload = solution_to_dict(solution, spec, config, elicited=collect_elicited(oracles) or None)
    _emit(dumps_canonical(payload), args.output)
    log.info("status=%s queries=%d", solution.status, solution.stats.oracle_queries)
    return EXIT_OK if solution.succeeded else EXIT_SOLVE_FAILED


def cmd_verify(args) -> int:
    spec = load_problem(args.problem)
    with open(args.solution) as fh:
        data = json.load(fh)
    code, report = verify_solution_dict(spec, data)
    label = {
        VERIFY_OK: "exact solution verified",
        VERIFY_FAILED: "verification FAILED",
        VERIFY_EPS_CERTIFIED: "eps solution: certificate checked (not verifiable at a point)",
        VERIFY_EPS_FAILED: "eps certificate FAILED",
    }[code]
    print(label)
    if code in (VERIFY_FAILED, VERIFY_EPS_FAILED):
        print(json.dumps(report, indent=2, default=str))
    return code


def cmd_check_oracle(args) -> int:
    spec = load_problem(args.input)
    if spec.interactive_agents:
        raise ProblemError("/agents", "interactive agents cannot be batch-checked")
    oracles = build_oracles(spec)
    rows = []
    for oracle in oracles:
        report = check_axioms(oracle, spec.variant, samples=args.samples, seed=args.seed)
        rows.append(
            {
                "agent": report.agent,
                "assumption_set": report.assumption_set,
                "passed": report.passed,
                "checks": [
                    {
                        "name": c.name,
                        "verdict": c.verdict,
                        "samples": c.samples,
                        **(
                            {
                                "counterexample": {
                                    "price": point_rationals(c.counterexample["price"]),
                                    "demand": sorted(c.counterexample["demand"]),
                                    "detail": c.counterexample["detail"],
                                }
                            }
                            if c.counterexample
                            else {}
                        ),
                    }
                    for c in report.checks
                ],
            }
        )
    payload = {
        "format": REPORT_FORMAT,
        "variant": spec.variant,
        "samples": args.samples,
        "seed": args.seed,
        "all_pass": all(r["passed"] for r in rows),
        "agents": rows,
    }
    _emit(dumps_canonical(payload), args.output)
    return EXIT_OK if payload["all_pass"] else EXIT_CHECK_FAILED


def cmd_serve(args) -> int:
    from fairrent.session import SessionServer

    spec = load_problem(args.input)
    config = resolve_config(spec)
    server = SessionServer(spec, config, host=args.host, port=args.port, once=args.once)
    server.start()
    print(f"listening on {server.host}:{server.port}", flush=True)
    try:
        server.wait()
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "solve": cmd_solve,
        "verify": cmd_verify,
        "check-oracle": cmd_check_oracle,
        "serve": cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except ProblemError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
