"""Inner loop at fixed barrier parameters.

Each iteration evaluates up to three trigger conditions in a configurable
order and fires the first one that holds:

  1. dual gradient step in Z      (complementarity residual too large),
  2. scaled gradient step in x    (stationarity residual too large),
  3. negative-curvature step in x (merit Hessian has a too-negative eigenvalue).

If no trigger fires, the iterate is an approximate second-order stationary
point of the merit and the loop reports convergence.  Trigger thresholds are
scaled by 1 + mu*||X^{-1}||_F + ||Z||_F (primal side, squared for the
curvature test) and 1 + mu*||Z^{-1}||_F (dual side).

Step sizes come in two modes.  FixedLipschitz uses closed-form steps from the
local smoothness bounds and carries a per-step guaranteed merit decrease
(recorded on each step).  Backtracking starts from the interiority cap of the
step-capped neighborhood and halves until a sufficient-decrease target is met,
rejecting any trial that leaves the cone's interior.

The trigger conditions are evaluated lazily: the merit Hessian is only formed
once the cheaper gradient conditions pass (or when procedure 3 comes first in
a custom order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import (
    ConstantsRequired,
    InvalidInput,
    LineSearchStall,
    NumericalFailure,
    PreconditionViolated,
)
from .linalg import SymMat
from .merit import (
    MeritParams,
    interiority_floor,
    local_lipschitz_x,
    local_lipschitz_xx,
    local_lipschitz_Z,
    merit_grad_x,
    merit_grad_Z,
    merit_hess_xx,
    merit_value,
    require_interior,
)
from .problem import Iterate, LipschitzConstants, NsdpProblem

__all__ = [
    "PROC_DUAL",
    "PROC_PRIMAL",
    "PROC_NC",
    "PROC_TERMINATED",
    "FixedLipschitz",
    "Backtracking",
    "ScalingOps",
    "identity_scaling",
    "validate_scaling",
    "IpmParams",
    "StepRecord",
    "SospCheck",
    "Sigmas",
    "sigma_guarantees",
    "check_eps_sosp",
    "backtrack_step",
    "update1_dual",
    "update2_primal",
    "update3_negcurv",
    "InnerResult",
    "run_inner",
]

PROC_DUAL = "dual_grad"
PROC_PRIMAL = "primal_grad"
PROC_NC = "neg_curvature"
PROC_TERMINATED = "terminated"

_PROC_NAMES = {1: PROC_DUAL, 2: PROC_PRIMAL, 3: PROC_NC}


@dataclass(frozen=True)
class FixedLipschitz:
    """Closed-form step sizes; requires complete Lipschitz constants."""


@dataclass(frozen=True)
class Backtracking:
    """Halving line search from the interiority cap.

    ``alpha_floor`` is relative to the initial trial step: the search aborts
    once alpha drops below alpha_floor * alpha0.
    """

    beta: float = 0.5
    alpha_floor: float = 1e-16

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise InvalidInput(f"beta must lie in (0, 1), got {self.beta}")
        if not (self.alpha_floor > 0.0):
            raise InvalidInput(f"alpha_floor must be positive, got {self.alpha_floor}")


StepMode = Union[FixedLipschitz, Backtracking]


@dataclass(frozen=True)
class ScalingOps:
    """Scaling operators for the two gradient steps.

    ``apply_x`` maps an n-vector to an n-vector; ``apply_Z`` maps a symmetric
    matrix (as an ndarray) to a symmetric matrix.  Both must be self-adjoint
    with Rayleigh quotients inside [h_min, h_max] / [kappa_min, kappa_max].
    """

    apply_x: Callable[[np.ndarray], np.ndarray]
    apply_Z: Callable[[np.ndarray], np.ndarray]


def identity_scaling() -> ScalingOps:
    return ScalingOps(apply_x=lambda v: v, apply_Z=lambda m: m)


def validate_scaling(
    scaling: ScalingOps,
    params: "IpmParams",
    n: int,
    m: int,
    rng: np.random.Generator | None = None,
    probes: int = 8,
    tol: float = 1e-10,
) -> list[str]:
    """Probe self-adjointness and spectral bounds; returns failure messages."""
    rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
    failures: list[str] = []
    for t in range(probes):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        left = float(u @ scaling.apply_x(v))
        right = float(scaling.apply_x(u) @ v)
        scale = 1.0 + abs(left) + abs(right)
        if abs(left - right) > tol * scale:
            failures.append(f"apply_x not self-adjoint on probe {t}")
        w = u / np.linalg.norm(u)
        q = float(w @ scaling.apply_x(w))
        if not (params.h_min - tol <= q <= params.h_max + tol):
            failures.append(f"apply_x Rayleigh quotient {q:.6g} outside bounds")
        a = rng.standard_normal((m, m))
        a = 0.5 * (a + a.T)
        b = rng.standard_normal((m, m))
        b = 0.5 * (b + b.T)
        left = float(np.sum(a * scaling.apply_Z(b)))
        right = float(np.sum(scaling.apply_Z(a) * b))
        scale = 1.0 + abs(left) + abs(right)
        if abs(left - right) > tol * scale:
            failures.append(f"apply_Z not self-adjoint on probe {t}")
        a = a / np.linalg.norm(a, "fro")
        q = float(np.sum(a * scaling.apply_Z(a)))
        if not (params.kappa_min - tol <= q <= params.kappa_max + tol):
            failures.append(f"apply_Z Rayleigh quotient {q:.6g} outside bounds")
    return failures


@dataclass(frozen=True)
class IpmParams:
    """Everything the inner loop needs at one barrier setting."""

    mu: float
    nu: float
    eps_g: float
    eps_mu: float
    eps_H: float
    h_min: float = 1.0
    h_max: float = 1.0
    kappa_min: float = 1.0
    kappa_max: float = 1.0
    max_inner_iters: int = 10000
    step_mode: StepMode = field(default_factory=Backtracking)
    # Trigger evaluation order; procedures absent from the tuple are disabled.
    procedures: tuple[int, ...] = (1, 2, 3)
    # Primal-only variant: rebuild Z = mu * X^{-1} after every x step.
    sync_dual: bool = False

    def __post_init__(self):
        MeritParams(self.mu, self.nu)
        for name in ("eps_g", "eps_mu", "eps_H"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                raise InvalidInput(f"{name} must be finite and positive, got {v}")
        if not (0.0 < self.h_min <= self.h_max):
            raise InvalidInput("need 0 < h_min <= h_max")
        if not (0.0 < self.kappa_min <= self.kappa_max):
            raise InvalidInput("need 0 < kappa_min <= kappa_max")
        if self.max_inner_iters < 1:
            raise InvalidInput("max_inner_iters must be at least 1")
        if (
            not self.procedures
            or len(set(self.procedures)) != len(self.procedures)
            or any(p not in (1, 2, 3) for p in self.procedures)
        ):
            raise InvalidInput(
                f"procedures must be distinct values from (1, 2, 3), got {self.procedures}"
            )
        if self.sync_dual and self.nu != 0.0:
            raise InvalidInput("sync_dual requires nu = 0")

    @property
    def merit(self) -> MeritParams:
        return MeritParams(self.mu, self.nu)


@dataclass
class StepRecord:
    """One inner iteration: what fired, how far it moved, what it bought."""

    iter: int
    procedure: str
    merit_before: float
    merit_after: float
    objective: float
    alpha: float | None = None
    guaranteed_sigma: float | None = None
    achieved_target: float | None = None
    r_g: float | None = None
    r_mu: float | None = None
    r_H: float | None = None
    step_norm: float | None = None
    step_cap: float | None = None
    eig_ratio_lo: float | None = None
    eig_ratio_hi: float | None = None
    lambda_min_X: float = math.nan
    lambda_min_Z: float = math.nan

    @property
    def residuals(self) -> tuple[float | None, float | None, float | None]:
        return (self.r_g, self.r_mu, self.r_H)


@dataclass(frozen=True)
class SospCheck:
    """Approximate second-order stationarity test at one iterate.

    Residuals are the raw condition left-hand sides divided by their scale
    factors, so the conditions read r_g <= eps_g, r_mu <= eps_mu and
    r_H >= -eps_H.  The curvature entries are None when the gradient
    conditions already failed (the Hessian is then never formed).
    """

    satisfied: bool
    stationarity_ok: bool
    complementarity_ok: bool
    curvature_ok: bool | None
    r_g: float
    r_mu: float
    r_H: float | None
    primal_scale: float
    dual_scale: float


@dataclass(frozen=True)
class Sigmas:
    """Guaranteed per-step merit decreases in fixed step-size mode."""

    sigma1: float
    sigma2: float
    sigma3: float

    def for_procedure(self, proc: int) -> float:
        return {1: self.sigma2, 2: self.sigma1, 3: self.sigma3}[proc]

    def floor_for(self, procedures: tuple[int, ...]) -> float:
        return min(self.for_procedure(p) for p in procedures)


def _div(num: float, den: float) -> float:
    return num / den if den > 0.0 else math.inf


def sigma_guarantees(params: IpmParams, lip: LipschitzConstants) -> Sigmas:
    """Closed-form decrease guarantees for the three procedures.

    Terms whose denominator vanishes (nu = 0 or a zero Lipschitz constant)
    drop out as +inf; sigma2 is +inf outright at nu = 0 because the dual
    trigger can never fire there.
    """
    lip.require_complete()
    mu, nu = params.mu, params.nu
    eg, em, eh = params.eps_g, params.eps_mu, params.eps_H
    hmin, hmax = params.h_min, params.h_max
    kmin, kmax = params.kappa_min, params.kappa_max
    l0, l1, l2 = lip.L0, lip.L1, lip.L2

    sigma1 = min(
        _div(mu * eg * hmin, 4.0 * l0 * hmax),
        _div(eg**2 * hmin**2, 8.0 * l1 * hmax**2),
        _div(eg**2 * hmin**2, 4.0 * nu * l1 * hmax**2),
        _div(mu * eg**2 * hmin**2, 16.0 * (1.0 + nu) * l0**2 * hmax**2),
        _div(eg**2 * hmin**2, 4.0 * (1.0 + nu) * l1 * hmax**2),
    )
    if nu == 0.0:
        sigma2 = math.inf
    else:
        sigma2 = min(
            mu * em * kmin / (4.0 * kmax),
            mu * em**2 * kmin**2 / (4.0 * nu * kmax**2),
        )
    sigma3 = min(
        _div(mu**2 * eh, 24.0 * l0**2),
        _div(2.0 * eh**3, 75.0 * l2**2),
        _div(2.0 * eh**3, 5.0 * nu**2 * l2**2),
        _div(2.0 * eh**3, 5.0 * (1.0 + nu) ** 2 * l2**2),
        _div(mu**2 * eh**3, 40.0 * (1.0 + nu) ** 2 * l1**2 * l0**2),
        _div(mu**4 * eh**3, 1350.0 * (1.0 + nu) ** 2 * l0**6),
    )
    return Sigmas(sigma1=sigma1, sigma2=sigma2, sigma3=sigma3)


class _Snapshot:
    """Lazily evaluated merit quantities at one iterate."""

    def __init__(self, prob: NsdpProblem, it: Iterate, params: IpmParams):
        self.prob = prob
        self.it = it
        self.params = params
        self.mp = params.merit

    @cached_property
    def merit(self) -> float:
        return merit_value(self.prob, self.it, self.mp)

    @cached_property
    def xinv_fro(self) -> float:
        return self.it.X.inv_frobenius_norm()

    @cached_property
    def zinv_fro(self) -> float:
        return self.it.Z.inv_frobenius_norm()

    @cached_property
    def primal_scale(self) -> float:
        return 1.0 + self.params.mu * self.xinv_fro + self.it.Z.frobenius_norm()

    @cached_property
    def dual_scale(self) -> float:
        return 1.0 + self.params.mu * self.zinv_fro

    @cached_property
    def grad_Z(self) -> SymMat:
        return merit_grad_Z(self.prob, self.it, self.mp)

    @cached_property
    def grad_Z_fro(self) -> float:
        return self.grad_Z.frobenius_norm()

    @cached_property
    def grad_x(self) -> np.ndarray:
        return merit_grad_x(self.prob, self.it, self.mp)

    @cached_property
    def grad_x_norm(self) -> float:
        return float(np.linalg.norm(self.grad_x))

    @cached_property
    def hess(self) -> SymMat:
        return merit_hess_xx(self.prob, self.it, self.mp)

    @cached_property
    def hess_min_pair(self) -> tuple[float, np.ndarray]:
        return self.hess.min_eigenpair()

    # --- triggers -------------------------------------------------------

    def trigger(self, proc: int) -> bool:
        if proc == 1:
            return self.grad_Z_fro > self.params.eps_mu * self.dual_scale
        if proc == 2:
            return self.grad_x_norm > self.params.eps_g * self.primal_scale
        if proc == 3:
            return self.hess_min_pair[0] < -self.params.eps_H * self.primal_scale**2
        raise InvalidInput(f"unknown procedure {proc}")

    def known_residuals(self) -> dict[str, float | None]:
        d = self.__dict__
        return {
            "r_g": self.grad_x_norm / self.primal_scale if "grad_x_norm" in d else None,
            "r_mu": self.grad_Z_fro / self.dual_scale if "grad_Z_fro" in d else None,
            "r_H": (
                self.hess_min_pair[0] / self.primal_scale**2
                if "hess_min_pair" in d
                else None
            ),
        }


def check_eps_sosp(prob: NsdpProblem, it: Iterate, params: IpmParams) -> SospCheck:
    """Test the three stationarity conditions at an iterate.

    The gradient residuals are always evaluated; the Hessian only once both
    gradient conditions hold, mirroring the solver's lazy trigger order.
    """
    require_interior(it)
    snap = _Snapshot(prob, it, params)
    r_g = snap.grad_x_norm / snap.primal_scale
    r_mu = snap.grad_Z_fro / snap.dual_scale
    stationarity_ok = r_g <= params.eps_g
    complementarity_ok = r_mu <= params.eps_mu
    r_h: float | None = None
    curvature_ok: bool | None = None
    if stationarity_ok and complementarity_ok:
        r_h = snap.hess_min_pair[0] / snap.primal_scale**2
        curvature_ok = r_h >= -params.eps_H
    return SospCheck(
        satisfied=bool(stationarity_ok and complementarity_ok and curvature_ok),
        stationarity_ok=stationarity_ok,
        complementarity_ok=complementarity_ok,
        curvature_ok=curvature_ok,
        r_g=r_g,
        r_mu=r_mu,
        r_H=r_h,
        primal_scale=snap.primal_scale,
        dual_scale=snap.dual_scale,
    )


def backtrack_step(
    eval_fn: Callable[[float], float],
    alpha0: float,
    target_decrease_fn: Callable[[float], float],
    beta: float = 0.5,
    alpha_floor: float = 1e-300,
) -> float:
    """Largest alpha in {alpha0 * beta^j} meeting the decrease target.

    ``eval_fn(alpha)`` returns the trial merit value (+inf for a trial outside
    the domain, which is always rejected); ``eval_fn(0.0)`` must return the
    current merit.  Raises LineSearchStall once alpha falls below alpha_floor.
    """
    if not (np.isfinite(alpha0) and alpha0 > 0.0):
        raise InvalidInput(f"alpha0 must be finite and positive, got {alpha0}")
    if not (0.0 < beta < 1.0):
        raise InvalidInput(f"beta must lie in (0, 1), got {beta}")
    if not (alpha_floor > 0.0):
        raise InvalidInput(f"alpha_floor must be positive, got {alpha_floor}")
    current = eval_fn(0.0)
    alpha = alpha0
    while alpha >= alpha_floor:
        trial = eval_fn(alpha)
        if current - trial >= target_decrease_fn(alpha):
            return alpha
        alpha *= beta
    raise LineSearchStall(
        f"no acceptable step above floor {alpha_floor:.3e} (started at {alpha0:.3e})"
    )


def _is_fixed(params: IpmParams) -> bool:
    return isinstance(params.step_mode, FixedLipschitz)


def _resolve_constants(
    prob: NsdpProblem, params: IpmParams, lipschitz: LipschitzConstants | None
) -> LipschitzConstants:
    lip = lipschitz if lipschitz is not None else prob.lipschitz
    if _is_fixed(params) and not lip.complete:
        raise ConstantsRequired(
            "fixed step-size mode needs complete Lipschitz constants; "
            "pass them explicitly or use backtracking"
        )
    return lip


def _cap_l0(lip: LipschitzConstants) -> float:
    # Interiority caps fall back to a unit constraint slope when L0 is unknown.
    return lip.L0 if lip.L0 is not None else 1.0


def _trial_interior(mat: SymMat) -> bool:
    return mat.lambda_min > interiority_floor(mat)


def _sorted_eig_ratios(new: SymMat, old: SymMat) -> tuple[float, float]:
    ratios = new.spectrum.eigenvalues / old.spectrum.eigenvalues
    return float(ratios.min()), float(ratios.max())


def _step_dual(
    prob: NsdpProblem,
    snap: _Snapshot,
    scaling: ScalingOps,
    sigmas: Sigmas | None,
) -> tuple[Iterate, StepRecord]:
    params = snap.params
    it = snap.it
    gz = snap.grad_Z
    direction = -(params.kappa_min / params.kappa_max**2) * scaling.apply_Z(gz.mat)
    direction = 0.5 * (direction + direction.T)
    d_fro = float(np.linalg.norm(direction, "fro"))
    cap = it.Z.lambda_min / (2.0 * d_fro)
    target_rate = params.kappa_min**2 / (2.0 * params.kappa_max**2) * snap.grad_Z_fro**2

    trials: dict[float, tuple[float, Iterate]] = {}

    def eval_fn(alpha: float) -> float:
        if alpha == 0.0:
            return snap.merit
        z_trial = SymMat(it.Z.mat + alpha * direction)
        if not _trial_interior(z_trial):
            return math.inf
        cand = it.with_Z(z_trial)
        value = merit_value(prob, cand, snap.mp)
        trials[alpha] = (value, cand)
        return value

    if _is_fixed(params):
        l_z = local_lipschitz_Z(it, snap.mp)
        alpha = min(_div(1.0, l_z), cap)
        merit_after = eval_fn(alpha)
        if alpha not in trials:
            raise NumericalFailure("fixed dual step left the domain")
        new_it = trials[alpha][1]
        guaranteed = sigmas.sigma2 if sigmas is not None else None
        achieved = None
    else:
        mode = params.step_mode
        alpha = backtrack_step(
            eval_fn,
            cap,
            lambda a: a * target_rate,
            beta=mode.beta,
            alpha_floor=mode.alpha_floor * cap,
        )
        merit_after, new_it = trials[alpha]
        guaranteed = None
        achieved = alpha * target_rate

    rec = StepRecord(
        iter=0,
        procedure=PROC_DUAL,
        merit_before=snap.merit,
        merit_after=merit_after,
        objective=prob.eval_f(new_it.x),
        alpha=alpha,
        guaranteed_sigma=guaranteed,
        achieved_target=achieved,
        step_norm=alpha * d_fro,
        step_cap=it.Z.lambda_min / 2.0,
        lambda_min_X=new_it.X.lambda_min,
        lambda_min_Z=new_it.Z.lambda_min,
        **snap.known_residuals(),
    )
    return new_it, rec


def _step_primal(
    prob: NsdpProblem,
    snap: _Snapshot,
    scaling: ScalingOps,
    sigmas: Sigmas | None,
    lip: LipschitzConstants,
) -> tuple[Iterate, StepRecord]:
    params = snap.params
    it = snap.it
    gx = snap.grad_x
    direction = -(params.h_min / params.h_max**2) * scaling.apply_x(gx)
    d_norm = float(np.linalg.norm(direction))
    cap_l0 = _cap_l0(lip)
    cap = it.X.lambda_min / (2.0 * cap_l0 * d_norm)
    target_rate = params.h_min**2 / (2.0 * params.h_max**2) * snap.grad_x_norm**2

    trials: dict[float, tuple[float, Iterate]] = {}

    def eval_fn(alpha: float) -> float:
        if alpha == 0.0:
            return snap.merit
        cand_x = it.x + alpha * direction
        x_mat = prob.eval_X(cand_x)
        if not _trial_interior(x_mat):
            return math.inf
        cand = Iterate(x=cand_x, X=x_mat, Z=it.Z)
        value = merit_value(prob, cand, snap.mp)
        trials[alpha] = (value, cand)
        return value

    if _is_fixed(params):
        l_x = local_lipschitz_x(prob, it, snap.mp, lip)
        alpha = min(cap, _div(1.0, l_x))
        merit_after = eval_fn(alpha)
        if alpha not in trials:
            raise NumericalFailure("fixed primal step left the domain")
        new_it = trials[alpha][1]
        guaranteed = sigmas.sigma1 if sigmas is not None else None
        achieved = None
    else:
        mode = params.step_mode
        alpha = backtrack_step(
            eval_fn,
            cap,
            lambda a: a * target_rate,
            beta=mode.beta,
            alpha_floor=mode.alpha_floor * cap,
        )
        merit_after, new_it = trials[alpha]
        guaranteed = None
        achieved = alpha * target_rate

    lo, hi = _sorted_eig_ratios(new_it.X, it.X)
    rec = StepRecord(
        iter=0,
        procedure=PROC_PRIMAL,
        merit_before=snap.merit,
        merit_after=merit_after,
        objective=prob.eval_f(new_it.x),
        alpha=alpha,
        guaranteed_sigma=guaranteed,
        achieved_target=achieved,
        step_norm=alpha * d_norm,
        step_cap=it.X.lambda_min / (2.0 * cap_l0),
        eig_ratio_lo=lo,
        eig_ratio_hi=hi,
        lambda_min_X=new_it.X.lambda_min,
        lambda_min_Z=new_it.Z.lambda_min,
        **snap.known_residuals(),
    )
    return new_it, rec


def _step_nc(
    prob: NsdpProblem,
    snap: _Snapshot,
    sigmas: Sigmas | None,
    lip: LipschitzConstants,
) -> tuple[Iterate, StepRecord]:
    params = snap.params
    it = snap.it
    lam_min, direction = snap.hess_min_pair
    # Orient the unit curvature direction against the gradient.
    if float(direction @ snap.grad_x) > 0.0:
        direction = -direction
    cap_l0 = _cap_l0(lip)
    cap = it.X.lambda_min / (2.0 * cap_l0)

    trials: dict[float, tuple[float, Iterate]] = {}

    def eval_fn(alpha: float) -> float:
        if alpha == 0.0:
            return snap.merit
        cand_x = it.x + alpha * direction
        x_mat = prob.eval_X(cand_x)
        if not _trial_interior(x_mat):
            return math.inf
        cand = Iterate(x=cand_x, X=x_mat, Z=it.Z)
        value = merit_value(prob, cand, snap.mp)
        trials[alpha] = (value, cand)
        return value

    if _is_fixed(params):
        l_xx = local_lipschitz_xx(prob, it, snap.mp, lip)
        alpha = min(_div(-2.0 * lam_min, l_xx), cap)
        merit_after = eval_fn(alpha)
        if alpha not in trials:
            raise NumericalFailure("fixed curvature step left the domain")
        new_it = trials[alpha][1]
        guaranteed = sigmas.sigma3 if sigmas is not None else None
        achieved = None
    else:
        mode = params.step_mode
        alpha = backtrack_step(
            eval_fn,
            cap,
            lambda a: -(a**2) * lam_min / 6.0,
            beta=mode.beta,
            alpha_floor=mode.alpha_floor * cap,
        )
        merit_after, new_it = trials[alpha]
        guaranteed = None
        achieved = -(alpha**2) * lam_min / 6.0

    lo, hi = _sorted_eig_ratios(new_it.X, it.X)
    rec = StepRecord(
        iter=0,
        procedure=PROC_NC,
        merit_before=snap.merit,
        merit_after=merit_after,
        objective=prob.eval_f(new_it.x),
        alpha=alpha,
        guaranteed_sigma=guaranteed,
        achieved_target=achieved,
        step_norm=alpha,
        step_cap=cap,
        eig_ratio_lo=lo,
        eig_ratio_hi=hi,
        lambda_min_X=new_it.X.lambda_min,
        lambda_min_Z=new_it.Z.lambda_min,
        **snap.known_residuals(),
    )
    return new_it, rec


def _public_step(
    proc: int,
    prob: NsdpProblem,
    it: Iterate,
    params: IpmParams,
    scaling: ScalingOps | None,
    lipschitz: LipschitzConstants | None,
) -> tuple[Iterate, StepRecord]:
    scaling = scaling if scaling is not None else identity_scaling()
    lip = _resolve_constants(prob, params, lipschitz)
    require_interior(it)
    snap = _Snapshot(prob, it, params)
    if proc == 1 and params.nu == 0.0:
        raise PreconditionViolated("dual step is undefined at nu = 0")
    if not snap.trigger(proc):
        raise PreconditionViolated(
            f"trigger for procedure {proc} ({_PROC_NAMES[proc]}) does not hold"
        )
    sigmas = sigma_guarantees(params, lip) if _is_fixed(params) else None
    if proc == 1:
        new_it, rec = _step_dual(prob, snap, scaling, sigmas)
    elif proc == 2:
        new_it, rec = _step_primal(prob, snap, scaling, sigmas, lip)
    else:
        new_it, rec = _step_nc(prob, snap, sigmas, lip)
    rec.iter = 1
    return new_it, rec


def update1_dual(
    prob: NsdpProblem,
    it: Iterate,
    params: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
) -> tuple[Iterate, StepRecord]:
    """One dual gradient step; x is unchanged.  Trigger must hold."""
    return _public_step(1, prob, it, params, scaling, lipschitz)


def update2_primal(
    prob: NsdpProblem,
    it: Iterate,
    params: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
) -> tuple[Iterate, StepRecord]:
    """One scaled primal gradient step; Z is unchanged.  Trigger must hold."""
    return _public_step(2, prob, it, params, scaling, lipschitz)


def update3_negcurv(
    prob: NsdpProblem,
    it: Iterate,
    params: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
) -> tuple[Iterate, StepRecord]:
    """One negative-curvature step along the Hessian's bottom eigenvector."""
    return _public_step(3, prob, it, params, scaling, lipschitz)


@dataclass
class InnerResult:
    iterate: Iterate
    trace: list[StepRecord]
    status: str  # "converged" | "iter_limit"

    @property
    def steps(self) -> int:
        return sum(1 for r in self.trace if r.procedure != PROC_TERMINATED)

    @property
    def counts(self) -> dict[str, int]:
        out = {PROC_DUAL: 0, PROC_PRIMAL: 0, PROC_NC: 0}
        for r in self.trace:
            if r.procedure in out:
                out[r.procedure] += 1
        return out


def _sync_dual_iterate(it: Iterate, mu: float) -> Iterate:
    return it.with_Z(SymMat(mu * it.X.inv().mat))


def run_inner(
    prob: NsdpProblem,
    start: Iterate,
    params: IpmParams,
    scaling: ScalingOps | None = None,
    lipschitz: LipschitzConstants | None = None,
) -> InnerResult:
    """Iterate the trigger cascade until no condition fires or the cap hits.

    Returns the final iterate, the per-step trace (with a closing
    "terminated" record when converged), and the status.  The merit value is
    nonincreasing along the trace by construction.
    """
    scaling = scaling if scaling is not None else identity_scaling()
    lip = _resolve_constants(prob, params, lipschitz)
    sigmas = sigma_guarantees(params, lip) if _is_fixed(params) else None
    require_interior(start)

    it = start
    if params.sync_dual:
        it = _sync_dual_iterate(it, params.mu)
    trace: list[StepRecord] = []
    for ell in range(1, params.max_inner_iters + 1):
        snap = _Snapshot(prob, it, params)
        fired = next((p for p in params.procedures if snap.trigger(p)), None)
        if fired is None:
            trace.append(
                StepRecord(
                    iter=ell,
                    procedure=PROC_TERMINATED,
                    merit_before=snap.merit,
                    merit_after=snap.merit,
                    objective=prob.eval_f(it.x),
                    lambda_min_X=it.X.lambda_min,
                    lambda_min_Z=it.Z.lambda_min,
                    **snap.known_residuals(),
                )
            )
            return InnerResult(iterate=it, trace=trace, status="converged")
        if fired == 1:
            it, rec = _step_dual(prob, snap, scaling, sigmas)
        elif fired == 2:
            it, rec = _step_primal(prob, snap, scaling, sigmas, lip)
        else:
            it, rec = _step_nc(prob, snap, sigmas, lip)
        if params.sync_dual and fired in (2, 3):
            it = _sync_dual_iterate(it, params.mu)
            rec.lambda_min_Z = it.Z.lambda_min
        rec.iter = ell
        trace.append(rec)
    return InnerResult(iterate=it, trace=trace, status="iter_limit")
