"""Command-line front end.

Every subcommand except ``serve`` is a thin client of the HTTP service:
requests are posted either to an in-process application instance (default)
or to a running server given with ``--server``.  Options can come from an
INI config file (sections [problem], [solver], [schedule], [run], [output]);
command-line flags override file values, which override built-in defaults.

Exit codes: 0 converged / all checks passed, 2 partial progress, 1 error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from .traceio import (
    dumps_canonical,
    write_compare_csv,
    write_plot_csv,
    write_summary,
    write_text,
)

_PROBLEM_KEYS = {
    "kind": str, "m": int, "n": int, "q": int, "r": float, "c": float,
    "instance": str,
}
_SOLVER_KEYS = {
    "method": str, "step_mode": str, "beta": float, "alpha_floor": float,
    "h_min": float, "h_max": float, "kappa_min": float, "kappa_max": float,
    "max_inner_iters": int, "procedures": str, "l0": float, "l1": float,
    "l2": float,
}
_SCHEDULE_KEYS = {
    "mu_init": float, "mu_min": float, "max_outer_iters": int, "nu_fixed": float,
}
_RUN_KEYS = {
    "seed": int, "seeds": str, "budget": int, "workers": int, "points": int,
    "pairs": int,
}
_OUTPUT_KEYS = {
    "trace": str, "summary": str, "csv": str, "plot_dir": str, "report": str,
}


def _parse_procedures(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _parse_seeds(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _read_config(path: str | None) -> dict[str, dict]:
    """INI file -> {section: {key: typed value}}."""
    out: dict[str, dict] = {}
    if path is None:
        return out
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as handle:
        parser.read_file(handle)
    schema = {
        "problem": _PROBLEM_KEYS, "solver": _SOLVER_KEYS,
        "schedule": _SCHEDULE_KEYS, "run": _RUN_KEYS, "output": _OUTPUT_KEYS,
    }
    for section, keys in schema.items():
        if not parser.has_section(section):
            continue
        values = {}
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in keys:
                raise ValueError(f"unknown config key [{section}] {key}")
            values[key] = keys[key](raw)
        out[section] = values
    return out


def _merged(section: dict, args: argparse.Namespace, names: list[str]) -> dict:
    """Config-file values overridden by any flag the user actually passed."""
    out = dict(section)
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def _problem_payload(conf: dict) -> dict:
    payload = {
        "kind": conf.get("kind", "psf"),
        "m": conf.get("m", 5), "n": conf.get("n", 5),
        "q": conf.get("q", 4), "r": conf.get("r", 0.3),
        "c": conf.get("c", 1.0),
    }
    instance = conf.get("instance")
    if payload["kind"] == "file":
        if instance is None:
            raise ValueError("--instance is required with --problem file")
        with open(instance, encoding="utf-8") as handle:
            payload["content"] = handle.read()
    return payload


def _solver_payload(conf: dict) -> dict:
    payload = {key: conf[key] for key in _SOLVER_KEYS if key in conf}
    payload.pop("procedures", None)
    procs = conf.get("procedures")
    if procs is not None:
        payload["procedures"] = (
            _parse_procedures(procs) if isinstance(procs, str) else list(procs)
        )
    return payload


def _schedule_payload(conf: dict) -> dict:
    return {key: conf[key] for key in _SCHEDULE_KEYS if key in conf}


def _resolve_seed(run_conf: dict) -> int:
    if "seed" in run_conf:
        return run_conf["seed"]
    env = os.environ.get("NC_SDP_SEED")
    if env is not None:
        return int(env)
    return 1


def _client(server: str | None):
    if server is not None:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # the test-client shim warns about its own dependency stack
        warnings.simplefilter("ignore", Warning)
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app, raise_server_exceptions=False)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise RuntimeError(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


# --- subcommands ------------------------------------------------------------

def cmd_solve(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    problem = _problem_payload(
        _merged(config.get("problem", {}), args, list(_PROBLEM_KEYS))
    )
    solver = _solver_payload(
        _merged(config.get("solver", {}), args, list(_SOLVER_KEYS))
    )
    schedule = _schedule_payload(
        _merged(config.get("schedule", {}), args, list(_SCHEDULE_KEYS))
    )
    run_conf = _merged(config.get("run", {}), args, ["seed", "budget"])
    out_conf = _merged(config.get("output", {}), args, ["trace", "summary"])
    request = {
        "problem": problem,
        "solver": solver,
        "schedule": schedule,
        "seed": _resolve_seed(run_conf),
        "include_trace": True,
    }
    budget = run_conf.get("budget")
    if budget is not None:
        request["total_iteration_budget"] = budget

    with _client(args.server) as client:
        body = _post(client, "/solve", request)

    summary = body["summary"]
    trace_path = out_conf.get("trace", "trace.jsonl")
    summary_path = out_conf.get("summary", "summary.json")
    write_text(
        trace_path,
        "".join(dumps_canonical(obj) + "\n" for obj in body.get("trace", [])),
    )
    write_summary(summary_path, summary)
    print(
        f"status={summary['status']} stop={summary['stop_reason']} "
        f"f={summary['final_f']:.6e} outer={summary['outer_iters']} "
        f"inner={summary['inner_iters_total']} nc={summary['nc_count']} "
        f"wall={summary['wall_time_s']:.2f}s"
    )
    print(f"trace -> {trace_path}")
    print(f"summary -> {summary_path}")
    return 0 if summary["status"] == "converged" else 2


def cmd_compare(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    problem = _problem_payload(
        _merged(config.get("problem", {}), args, list(_PROBLEM_KEYS))
    )
    solver = _solver_payload(
        _merged(config.get("solver", {}), args, list(_SOLVER_KEYS))
    )
    solver.pop("method", None)
    schedule = _schedule_payload(
        _merged(config.get("schedule", {}), args, list(_SCHEDULE_KEYS))
    )
    run_conf = _merged(config.get("run", {}), args, ["seeds", "budget", "workers"])
    out_conf = _merged(config.get("output", {}), args, ["csv", "plot_dir"])

    seeds = run_conf.get("seeds", [1, 2, 3, 4, 5, 6])
    if isinstance(seeds, str):
        seeds = _parse_seeds(seeds)
    request = {
        "problem": problem,
        "solver": solver,
        "schedule": schedule,
        "seeds": seeds,
        "methods": args.methods,
        "total_iteration_budget": run_conf.get("budget", 300),
        "workers": run_conf.get("workers", 4),
    }
    with _client(args.server) as client:
        body = _post(client, "/compare", request)

    csv_path = out_conf.get("csv", "compare.csv")
    plot_dir = out_conf.get("plot_dir", os.path.dirname(csv_path) or ".")
    write_compare_csv(csv_path, body["rows"])
    for key, points in body["plots"].items():
        write_plot_csv(
            os.path.join(plot_dir, f"plot_{key}.csv"),
            [(int(it), f, proc) for it, f, proc in points],
        )
    print(f"{'seed':>6} {'method':>12} {'nc_count':>9} {'final_f':>14} {'wall_s':>8}")
    for row in body["rows"]:
        print(
            f"{row['seed']:>6} {row['method']:>12} {row['nc_count']:>9} "
            f"{row['final_f']:>14.6e} {row['wall_time_s']:>8.2f}"
        )
    print(f"csv -> {csv_path}")
    print(f"plots -> {plot_dir}/plot_*.csv")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    problem = _problem_payload(
        _merged(config.get("problem", {}), args, list(_PROBLEM_KEYS))
    )
    run_conf = _merged(config.get("run", {}), args, ["seed", "points", "pairs"])
    out_conf = _merged(config.get("output", {}), args, ["report"])
    request = {
        "problem": problem,
        "seed": _resolve_seed(run_conf),
    }
    if "points" in run_conf:
        request["points"] = run_conf["points"]
    if "pairs" in run_conf:
        request["pairs"] = run_conf["pairs"]
    if args.inject_fault is not None:
        request["fault"] = args.inject_fault

    with _client(args.server) as client:
        body = _post(client, "/verify", request)

    for check in body["checks"]:
        tag = "PASS" if check["passed"] else "FAIL"
        if not check["ran"]:
            tag = "SKIP"
        print(f"{tag:4} {check['name']}: {check['detail']}")
    report_path = out_conf.get("report")
    if report_path:
        write_text(report_path, json.dumps(body, indent=2, sort_keys=True) + "\n")
        print(f"report -> {report_path}")
    return 0 if body["all_passed"] else 1


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# --- parser -----------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file; flags override it")
    sub.add_argument("--server", help="base URL of a running service "
                                      "(default: run in-process)")


def _add_problem_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("problem")
    group.add_argument("--problem", dest="kind",
                       choices=["psf", "scalar", "file"])
    group.add_argument("--m", type=int)
    group.add_argument("--n", type=int)
    group.add_argument("--q", type=int)
    group.add_argument("--r", type=float)
    group.add_argument("--c", type=float, help="scalar model slope")
    group.add_argument("--instance", help="instance file for --problem file")


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("solver")
    group.add_argument("--method", choices=["pdipm", "primal", "pdipm-no-nc"])
    group.add_argument("--step-mode", dest="step_mode",
                       choices=["backtracking", "fixed"])
    group.add_argument("--beta", type=float)
    group.add_argument("--alpha-floor", dest="alpha_floor", type=float)
    group.add_argument("--h-min", dest="h_min", type=float)
    group.add_argument("--h-max", dest="h_max", type=float)
    group.add_argument("--kappa-min", dest="kappa_min", type=float)
    group.add_argument("--kappa-max", dest="kappa_max", type=float)
    group.add_argument("--max-inner-iterations", dest="max_inner_iters", type=int)
    group.add_argument("--procedures", help="inner update order, e.g. 1,2,3")
    group.add_argument("--l0", type=float)
    group.add_argument("--l1", type=float)
    group.add_argument("--l2", type=float)


def _add_schedule_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("schedule")
    group.add_argument("--mu-init", dest="mu_init", type=float)
    group.add_argument("--mu-min", dest="mu_min", type=float)
    group.add_argument("--max-outer-iterations", dest="max_outer_iters", type=int)
    group.add_argument("--nu-fixed", dest="nu_fixed", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncsdp",
        description="Interior-point solver for nonlinear semidefinite programs",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="run one solve, write trace + summary")
    _add_common(solve)
    _add_problem_flags(solve)
    _add_solver_flags(solve)
    _add_schedule_flags(solve)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--max-outer-iterations-as-total", dest="budget", type=int,
                       help="total inner-step budget summed over outer rounds")
    solve.add_argument("--trace", help="trace output path (default trace.jsonl)")
    solve.add_argument("--summary", help="summary output path (default summary.json)")
    solve.set_defaults(func=cmd_solve)

    compare = subs.add_parser("compare", help="run methods across seeds, emit CSV")
    _add_common(compare)
    _add_problem_flags(compare)
    _add_solver_flags(compare)
    _add_schedule_flags(compare)
    compare.add_argument("--seeds", type=int, nargs="+")
    compare.add_argument("--methods", nargs="+",
                         choices=["pdipm", "primal", "pdipm-no-nc"],
                         default=["pdipm", "pdipm-no-nc"])
    compare.add_argument("--max-outer-iterations-as-total", dest="budget", type=int)
    compare.add_argument("--workers", type=int)
    compare.add_argument("--csv", help="comparison table path (default compare.csv)")
    compare.add_argument("--plot-dir", dest="plot_dir",
                         help="directory for per-run plot CSVs")
    compare.set_defaults(func=cmd_compare)

    verify = subs.add_parser("verify", help="run the self-check suite")
    _add_common(verify)
    _add_problem_flags(verify)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--points", type=int)
    verify.add_argument("--pairs", type=int)
    verify.add_argument("--inject-fault", dest="inject_fault", choices=["grad-f"],
                        help="corrupt the problem on purpose (negative control)")
    verify.add_argument("--report", help="write the JSON report here")
    verify.set_defaults(func=cmd_verify)

    serve = subs.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
