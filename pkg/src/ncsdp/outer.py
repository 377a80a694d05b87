"""Outer loop: drive the barrier parameter down a schedule.

Each outer round k first shrinks mu, derives (nu, eps_g, eps_mu, eps_H) from
the new value, then warm-starts the inner solver from the previous iterate.
The loop stops once the next mu would cross the floor (that round is not
run: merit differences stop being resolvable in double precision well below
it), the round cap is hit, or an inner solve (or a total step budget) runs
out of iterations; the last case is reported as partial progress with the
trace intact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .certificates import complementarity_gaps, kkt_residuals
from .errors import InvalidInput, NumericalFailure
from .inner import InnerResult, IpmParams, ScalingOps, StepRecord, run_inner
from .merit import lambda_surrogate, require_interior
from .problem import Iterate, LipschitzConstants, NsdpProblem

__all__ = [
    "Schedule",
    "default_schedule",
    "OuterRecord",
    "TracedStep",
    "OuterResult",
    "run_outer",
]

# Barrier values at which a schedule's admissibility is probed.
_SCHEDULE_SAMPLES = (0.3, 0.1, 0.01, 1e-4)


def _default_mu_update(mu: float) -> float:
    return min(0.8 * mu, 10.0 * mu**1.5)


@dataclass(frozen=True)
class Schedule:
    """Barrier continuation rules.

    ``mu_update`` maps mu_k to mu_{k+1} (strictly smaller, positive); the
    four *_of_mu maps set the inner tolerances and the complementarity weight
    from the new mu.  ``nu_fixed`` pins nu to a constant for ablations (zero
    selects the purely primal merit).
    """

    mu_init: float = 0.3
    mu_min: float = 1e-8
    max_outer_iters: int = 60
    mu_update: Callable[[float], float] = _default_mu_update
    nu_of_mu: Callable[[float], float] = lambda mu: mu**0.1
    eps_g_of_mu: Callable[[float], float] = lambda mu: mu
    eps_mu_of_mu: Callable[[float], float] = lambda mu: mu**1.2
    eps_H_of_mu: Callable[[float], float] = lambda mu: mu
    nu_fixed: float | None = None

    def nu(self, mu: float) -> float:
        return self.nu_fixed if self.nu_fixed is not None else self.nu_of_mu(mu)

    def validate(self) -> None:
        """Probe the schedule at a few barrier values and reject bad ones."""
        if not (np.isfinite(self.mu_init) and self.mu_init > 0.0):
            raise InvalidInput(f"mu_init must be positive, got {self.mu_init}")
        if not (0.0 < self.mu_min < self.mu_init):
            raise InvalidInput("need 0 < mu_min < mu_init")
        if self.max_outer_iters < 1:
            raise InvalidInput("max_outer_iters must be at least 1")
        if self.nu_fixed is not None and not (
            np.isfinite(self.nu_fixed) and self.nu_fixed >= 0.0
        ):
            raise InvalidInput(f"nu_fixed must be nonnegative, got {self.nu_fixed}")
        prev: dict[str, float] = {}
        for mu in _SCHEDULE_SAMPLES:
            nxt = self.mu_update(mu)
            if not (np.isfinite(nxt) and 0.0 < nxt < mu):
                raise InvalidInput(
                    f"mu_update must map to (0, mu); got {nxt} at mu={mu}"
                )
            values = {
                "nu": self.nu(mu),
                "eps_g": self.eps_g_of_mu(mu),
                "eps_mu": self.eps_mu_of_mu(mu),
                "eps_H": self.eps_H_of_mu(mu),
            }
            for name, v in values.items():
                if name == "nu" and self.nu_fixed is not None:
                    continue
                if not (np.isfinite(v) and v > 0.0):
                    raise InvalidInput(f"{name}(mu) must be positive; got {v} at mu={mu}")
                if name in prev and v >= prev[name]:
                    raise InvalidInput(
                        f"{name}(mu) must decrease with mu; "
                        f"got {v} at mu={mu} after {prev[name]}"
                    )
                prev[name] = v


def default_schedule(
    mu_init: float = 0.3,
    mu_min: float = 1e-8,
    max_outer_iters: int = 60,
    nu_fixed: float | None = None,
) -> Schedule:
    """The reference schedule: geometric-then-superlinear mu decay with
    nu = mu^0.1, eps_g = eps_H = mu, eps_mu = mu^1.2."""
    return Schedule(
        mu_init=mu_init,
        mu_min=mu_min,
        max_outer_iters=max_outer_iters,
        nu_fixed=nu_fixed,
    )


@dataclass
class OuterRecord:
    """Summary of one outer round, taken at the inner solve's exit."""

    k: int
    mu: float
    nu: float
    eps_g: float
    eps_mu: float
    eps_H: float
    inner_status: str
    inner_iters: int
    counts: dict[str, int]
    merit: float
    objective: float
    r_g: float | None
    r_mu: float | None
    r_H: float | None
    kkt_stationarity: float
    kkt_complementarity: float
    dual_gap: float
    multiplier_gap: float
    nu_ratio: float | None


@dataclass(frozen=True)
class TracedStep:
    """Inner step record annotated with its outer round's parameters."""

    k: int
    mu: float
    nu: float
    record: StepRecord


@dataclass
class OuterResult:
    iterate: Iterate
    status: str  # "converged" | "partial_progress"
    stop_reason: str  # "mu_min" | "max_outer_iters" | "inner_iter_limit" | "budget_exhausted"
    outer: list[OuterRecord] = field(default_factory=list)
    steps: list[TracedStep] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        total: dict[str, int] = {}
        for rec in self.outer:
            for name, c in rec.counts.items():
                total[name] = total.get(name, 0) + c
        return total

    @property
    def total_inner_iters(self) -> int:
        return sum(rec.inner_iters for rec in self.outer)


def _outer_record(
    prob: NsdpProblem, k: int, params: IpmParams, res: InnerResult
) -> OuterRecord:
    it = res.iterate
    terminal = res.trace[-1] if res.trace else None
    lam = lambda_surrogate(it, params.merit)
    kkt = kkt_residuals(prob, it.x, lam)
    dual_gap, multiplier_gap = complementarity_gaps(it, params.merit)
    return OuterRecord(
        k=k,
        mu=params.mu,
        nu=params.nu,
        eps_g=params.eps_g,
        eps_mu=params.eps_mu,
        eps_H=params.eps_H,
        inner_status=res.status,
        inner_iters=res.steps,
        counts=res.counts,
        merit=terminal.merit_after if terminal else math.nan,
        objective=prob.eval_f(it.x),
        r_g=terminal.r_g if terminal else None,
        r_mu=terminal.r_mu if terminal else None,
        r_H=terminal.r_H if terminal else None,
        kkt_stationarity=kkt.stationarity,
        kkt_complementarity=kkt.complementarity,
        dual_gap=dual_gap,
        multiplier_gap=multiplier_gap,
        nu_ratio=params.eps_mu / (params.nu * params.mu) if params.nu > 0.0 else None,
    )


def run_outer(
    prob: NsdpProblem,
    start: Iterate,
    schedule: Schedule,
    ipm: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
    total_step_budget: int | None = None,
) -> OuterResult:
    """Run inner solves along the schedule, warm-starting each round.

    ``total_step_budget`` caps the number of inner steps summed over all
    rounds (the budget used by the benchmark comparisons); exhausting it ends
    the run as partial progress.
    """
    schedule.validate()
    require_interior(start)
    if total_step_budget is not None and total_step_budget < 1:
        raise InvalidInput("total_step_budget must be at least 1")

    it = start
    mu = schedule.mu_init
    result = OuterResult(iterate=it, status="converged", stop_reason="max_outer_iters")
    used = 0
    for k in range(1, schedule.max_outer_iters + 1):
        mu_next = schedule.mu_update(mu)
        if not (np.isfinite(mu_next) and 0.0 < mu_next < mu):
            raise NumericalFailure(f"mu_update produced {mu_next} from {mu}")
        if mu_next <= schedule.mu_min:
            result.stop_reason = "mu_min"
            break
        mu = mu_next
        params_k = replace(
            ipm,
            mu=mu,
            nu=schedule.nu(mu),
            eps_g=schedule.eps_g_of_mu(mu),
            eps_mu=schedule.eps_mu_of_mu(mu),
            eps_H=schedule.eps_H_of_mu(mu),
        )
        if total_step_budget is not None:
            remaining = total_step_budget - used
            if remaining <= 0:
                result.status = "partial_progress"
                result.stop_reason = "budget_exhausted"
                break
            params_k = replace(
                params_k, max_inner_iters=min(params_k.max_inner_iters, remaining)
            )
        res = run_inner(prob, it, params_k, scaling=scaling, lipschitz=lipschitz)
        it = res.iterate
        used += res.steps
        result.steps.extend(
            TracedStep(k=k, mu=params_k.mu, nu=params_k.nu, record=rec)
            for rec in res.trace
        )
        result.outer.append(_outer_record(prob, k, params_k, res))
        if res.status == "iter_limit":
            result.status = "partial_progress"
            if total_step_budget is not None and used >= total_step_budget:
                result.stop_reason = "budget_exhausted"
            else:
                result.stop_reason = "inner_iter_limit"
            break
    result.iterate = it
    return result
