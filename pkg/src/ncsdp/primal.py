"""Purely primal variant: nu = 0 with the dual kept on the central path.

With nu = 0 the merit reduces to the log-det barrier and its Z-gradient
vanishes identically, so the dual trigger can never fire.  Instead of
carrying a free Z, this variant pins Z = mu * X(x)^{-1} after every primal or
curvature step.  It is a configuration of the shared solvers, not a separate
implementation: procedures are restricted to (2, 3) and the inner loop's
dual-sync flag does the bookkeeping.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .inner import InnerResult, IpmParams, ScalingOps, run_inner
from .linalg import SymMat
from .outer import OuterResult, Schedule, run_outer
from .problem import Iterate, LipschitzConstants, NsdpProblem

__all__ = ["primal_start", "primal_params", "run_inner_primal", "run_outer_primal"]


def primal_start(prob: NsdpProblem, x_start: np.ndarray, mu: float) -> Iterate:
    """Iterate at x_start with the dual pinned to mu * X^{-1}."""
    x_mat = prob.eval_X(prob.check_x(x_start))
    return Iterate(x=x_start, X=x_mat, Z=SymMat(mu * x_mat.inv().mat))


def primal_params(params: IpmParams) -> IpmParams:
    procedures = tuple(p for p in params.procedures if p != 1) or (2, 3)
    return replace(params, nu=0.0, sync_dual=True, procedures=procedures)


def run_inner_primal(
    prob: NsdpProblem,
    x_start: np.ndarray,
    params: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
) -> InnerResult:
    """Inner solve in x only; Z tracks mu * X^{-1} throughout."""
    params = primal_params(params)
    start = primal_start(prob, x_start, params.mu)
    return run_inner(prob, start, params, scaling=scaling, lipschitz=lipschitz)


def run_outer_primal(
    prob: NsdpProblem,
    x_start: np.ndarray,
    schedule: Schedule,
    ipm: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
    total_step_budget: int | None = None,
) -> OuterResult:
    """Outer continuation of the primal variant (nu pinned to zero)."""
    schedule = replace(schedule, nu_fixed=0.0)
    start = primal_start(prob, x_start, schedule.mu_init)
    return run_outer(
        prob,
        start,
        schedule,
        primal_params(ipm),
        scaling=scaling,
        lipschitz=lipschitz,
        total_step_budget=total_step_budget,
    )
