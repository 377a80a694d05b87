"""Run orchestration shared by the HTTP service and the command line.

Builds problems from plain descriptions, picks the solver configuration for
a named method, executes solves/comparisons/verification, and shapes the
results into JSON-ready dictionaries.  No HTTP or argument parsing lives
here.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .benchmarks import (
    PsfConfig,
    analytic_scalar_problem,
    generate_psf,
    loads_instance,
    psf_as_nsdp,
    psf_initial_point,
)
from .certificates import (
    complementarity_gaps,
    fj_scaled_multipliers,
    kkt_residuals,
    wsosp_curvature_check,
)
from .errors import InvalidInput
from .inner import PROC_NC, Backtracking, FixedLipschitz, IpmParams, check_eps_sosp
from .merit import lambda_surrogate, merit_value
from .outer import OuterResult, Schedule, default_schedule, run_outer
from .primal import primal_start, run_outer_primal
from .problem import Iterate, LipschitzConstants, NsdpProblem
from .traceio import sanitize, trace_objects
from .verify import run_verification

__all__ = [
    "METHODS",
    "ProblemChoice",
    "SolverChoice",
    "ScheduleChoice",
    "build_problem",
    "build_start",
    "build_ipm",
    "build_schedule",
    "run_solve",
    "run_compare",
    "run_verify",
]

METHODS = ("pdipm", "primal", "pdipm-no-nc")


@dataclass(frozen=True)
class ProblemChoice:
    """What to solve: a generated benchmark, the scalar model, or a file."""

    kind: str = "psf"
    m: int = 5
    n: int = 5
    q: int = 4
    r: float = 0.3
    c: float = 1.0
    content: str | None = None


@dataclass(frozen=True)
class SolverChoice:
    method: str = "pdipm"
    step_mode: str = "backtracking"
    beta: float = 0.5
    alpha_floor: float = 1e-16
    h_min: float = 1.0
    h_max: float = 1.0
    kappa_min: float = 1.0
    kappa_max: float = 1.0
    max_inner_iters: int = 10000
    procedures: tuple[int, ...] | None = None
    l0: float | None = None
    l1: float | None = None
    l2: float | None = None


@dataclass(frozen=True)
class ScheduleChoice:
    mu_init: float = 0.3
    mu_min: float = 1e-8
    max_outer_iters: int = 60
    nu_fixed: float | None = None


def build_problem(choice: ProblemChoice, seed: int) -> tuple[NsdpProblem, dict]:
    if choice.kind == "psf":
        config = PsfConfig(m=choice.m, n=choice.n, q=choice.q, r=choice.r)
        instance = generate_psf(config, seed=seed)
        prob = psf_as_nsdp(instance)
        echo = {"kind": "psf", "m": choice.m, "n": choice.n, "q": choice.q,
                "r": choice.r, "seed": seed, "n_var": prob.n, "matrix_order": prob.m}
        return prob, echo
    if choice.kind == "scalar":
        prob = analytic_scalar_problem(choice.c)
        return prob, {"kind": "scalar", "c": choice.c}
    if choice.kind == "file":
        if choice.content is None:
            raise InvalidInput("file problems need the instance text as 'content'")
        instance = loads_instance(choice.content)
        prob = psf_as_nsdp(instance)
        cfg = instance.config
        echo = {"kind": "file", "m": cfg.m, "n": cfg.n, "q": cfg.q, "r": cfg.r,
                "n_var": prob.n, "matrix_order": prob.m}
        return prob, echo
    raise InvalidInput(f"unknown problem kind {choice.kind!r}")


def build_start(prob: NsdpProblem, choice: ProblemChoice, seed: int,
                mu_init: float) -> Iterate:
    if choice.kind in ("psf", "file"):
        return psf_initial_point(prob, seed=seed, mu1=mu_init)
    return primal_start(prob, np.array([1.0]), mu_init)


def _method_procedures(method: str) -> tuple[int, ...] | None:
    if method == "pdipm-no-nc":
        return (1, 2)
    if method in ("pdipm", "primal"):
        return None
    raise InvalidInput(f"unknown method {method!r} (expected one of {METHODS})")


def build_ipm(solver: SolverChoice, schedule: Schedule) -> IpmParams:
    if solver.step_mode == "backtracking":
        mode = Backtracking(beta=solver.beta, alpha_floor=solver.alpha_floor)
    elif solver.step_mode == "fixed":
        mode = FixedLipschitz()
    else:
        raise InvalidInput(f"unknown step mode {solver.step_mode!r}")
    procedures = solver.procedures or _method_procedures(solver.method) or (1, 2, 3)
    mu0 = schedule.mu_init
    # placeholder tolerances; the outer loop re-derives them every round
    return IpmParams(
        mu=mu0, nu=schedule.nu(mu0), eps_g=mu0, eps_mu=mu0, eps_H=mu0,
        h_min=solver.h_min, h_max=solver.h_max,
        kappa_min=solver.kappa_min, kappa_max=solver.kappa_max,
        max_inner_iters=solver.max_inner_iters,
        step_mode=mode, procedures=tuple(procedures),
    )


def build_schedule(choice: ScheduleChoice) -> Schedule:
    return default_schedule(
        mu_init=choice.mu_init, mu_min=choice.mu_min,
        max_outer_iters=choice.max_outer_iters, nu_fixed=choice.nu_fixed,
    )


def _lipschitz_override(solver: SolverChoice) -> LipschitzConstants | None:
    if solver.l0 is None and solver.l1 is None and solver.l2 is None:
        return None
    return LipschitzConstants(L0=solver.l0, L1=solver.l1, L2=solver.l2)


def _certificates(prob: NsdpProblem, result: OuterResult,
                  ipm: IpmParams) -> dict:
    if not result.outer:
        return {}
    last = result.outer[-1]
    params = replace(ipm, mu=last.mu, nu=last.nu, eps_g=last.eps_g,
                     eps_mu=last.eps_mu, eps_H=last.eps_H)
    it = result.iterate
    p = params.merit
    lam = lambda_surrogate(it, p)
    sosp = check_eps_sosp(prob, it, params)
    kkt = kkt_residuals(prob, it.x, lam)
    fj = fj_scaled_multipliers(prob, it, p)
    dual_decay, multiplier_gap = complementarity_gaps(it, p)
    wsosp = wsosp_curvature_check(prob, it.x, lam)
    ratios = {"stationarity": None if sosp.r_g is None else sosp.r_g / params.eps_g,
              "complementarity": None if sosp.r_mu is None else sosp.r_mu / params.eps_mu,
              "curvature": None if sosp.r_H is None else -sosp.r_H / params.eps_H}
    return {
        "sosp": {
            "satisfied": sosp.satisfied,
            "r_g": sosp.r_g, "r_mu": sosp.r_mu, "r_H": sosp.r_H,
            "eps_g": params.eps_g, "eps_mu": params.eps_mu, "eps_H": params.eps_H,
            "ratios": ratios,
            "primal_scale": sosp.primal_scale, "dual_scale": sosp.dual_scale,
        },
        "kkt": asdict(kkt),
        "fj": {
            "lambda_k": fj.lambda_k,
            "omega_norm": fj.omega.frobenius_norm(),
            "scale": fj.scale,
            "scaled_stationarity": fj.scaled_stationarity,
        },
        "gaps": {"dual_decay": dual_decay, "multiplier_gap": multiplier_gap},
        "wsosp": {
            "min_restricted_curvature": wsosp.min_restricted_curvature,
            "subspace_dim": wsosp.subspace_dim,
            "kernel_dim_X": wsosp.kernel_dim_X,
        },
        "final_merit": merit_value(prob, it, p),
        "final_mu": last.mu,
        "final_nu": last.nu,
    }


def _execute(prob: NsdpProblem, start: Iterate, solver: SolverChoice,
             schedule: Schedule, budget: int | None) -> tuple[OuterResult, float, IpmParams]:
    ipm = build_ipm(solver, schedule)
    lip = _lipschitz_override(solver)
    t0 = time.perf_counter()
    if solver.method == "primal":
        result = run_outer_primal(prob, start.x, schedule, ipm,
                                  lipschitz=lip, total_step_budget=budget)
    else:
        result = run_outer(prob, start, schedule, ipm,
                           lipschitz=lip, total_step_budget=budget)
    wall = time.perf_counter() - t0
    return result, wall, ipm


def run_solve(
    problem: ProblemChoice = ProblemChoice(),
    solver: SolverChoice = SolverChoice(),
    schedule: ScheduleChoice = ScheduleChoice(),
    seed: int = 1,
    total_iteration_budget: int | None = None,
    include_trace: bool = False,
) -> dict:
    """Solve one instance and return the JSON-ready summary."""
    prob, echo = build_problem(problem, seed)
    sched = build_schedule(schedule)
    start = build_start(prob, problem, seed, sched.mu_init)
    result, wall, ipm = _execute(prob, start, solver, sched, total_iteration_budget)

    counts = result.counts
    summary = {
        "status": result.status,
        "stop_reason": result.stop_reason,
        "method": solver.method,
        "seed": seed,
        "problem": echo,
        "final_f": prob.eval_f(result.iterate.x),
        "final_x": [float(v) for v in result.iterate.x],
        "outer_iters": len(result.outer),
        "inner_iters_total": result.total_inner_iters,
        "counts": counts,
        "nc_count": counts.get(PROC_NC, 0),
        "wall_time_s": wall,
        "certificates": _certificates(prob, result, ipm),
        "outer": [asdict(rec) for rec in result.outer],
        "schedule": asdict(schedule),
        "solver": asdict(solver),
    }
    out = {"summary": sanitize(summary)}
    if include_trace:
        out["trace"] = trace_objects(result.steps)
    return out


def _compare_one(problem: ProblemChoice, solver: SolverChoice,
                 schedule: ScheduleChoice, seed: int, method: str,
                 budget: int | None) -> tuple[dict, list]:
    prob, _ = build_problem(problem, seed)
    sched = build_schedule(schedule)
    start = build_start(prob, problem, seed, sched.mu_init)
    chosen = replace(solver, method=method, procedures=None)
    result, wall, _ = _execute(prob, start, chosen, sched, budget)
    row = {
        "seed": seed,
        "method": method,
        "nc_count": result.counts.get(PROC_NC, 0),
        "final_f": prob.eval_f(result.iterate.x),
        "wall_time_s": wall,
    }
    points = [
        (obj["global_iter"], obj["objective"], obj["procedure"])
        for obj in trace_objects(result.steps)
        if obj["procedure"] != "terminated"
    ]
    return row, points


def run_compare(
    problem: ProblemChoice = ProblemChoice(),
    solver: SolverChoice = SolverChoice(),
    schedule: ScheduleChoice = ScheduleChoice(),
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5, 6),
    methods: tuple[str, ...] = ("pdipm", "pdipm-no-nc"),
    total_iteration_budget: int | None = 300,
    workers: int = 4,
) -> dict:
    """Solve seeds x methods under a shared step budget.

    Row order is deterministic (seed-major, then method order as given)
    regardless of worker scheduling.
    """
    if not seeds:
        raise InvalidInput("compare needs at least one seed")
    for method in methods:
        _method_procedures(method)
    tasks = [(seed, method) for seed in seeds for method in methods]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(
            pool.map(
                lambda sm: _compare_one(problem, solver, schedule, sm[0], sm[1],
                                        total_iteration_budget),
                tasks,
            )
        )
    rows = [sanitize(row) for row, _ in outcomes]
    plots = {
        f"seed{seed}_{method}": [[it, sanitize(f), proc] for it, f, proc in points]
        for (seed, method), (_, points) in zip(tasks, outcomes)
    }
    return {"rows": rows, "plots": plots}


def run_verify(
    problem: ProblemChoice = ProblemChoice(),
    seed: int = 1,
    points: int = 6,
    pairs: int = 20,
    fault: str | None = None,
) -> dict:
    """Run the self-check suite against one problem instance."""
    prob, echo = build_problem(problem, seed)
    report = run_verification(prob, seed=seed, points=points, pairs=pairs, fault=fault)
    obj = report.to_obj()
    obj["problem"] = echo
    obj["fault"] = fault
    return obj
