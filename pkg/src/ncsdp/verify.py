"""Self-checks: finite-difference oracles and run invariants.

Everything here validates the analytic code paths against independent
computations: central finite differences for every derivative the problem
and merit layers expose, the multiplier identities that tie the merit
derivatives to the Lagrangian, sampled local smoothness bounds, guaranteed
per-step decreases in fixed mode, and the feasibility invariants a trace
must satisfy.  The finite-difference helpers are deliberately naive (no
reuse of analytic code) so they stay independent of what they test.

``run_verification`` packages the checks into a machine-readable report.
A fault can be injected to confirm the harness actually fails when the
derivatives are wrong.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .benchmarks import PsfProblem, psf_box_lipschitz, psf_initial_point
from .certificates import grad_lagrangian, hess_lagrangian
from .errors import InvalidInput
from .inner import (
    Backtracking,
    FixedLipschitz,
    IpmParams,
    StepRecord,
    identity_scaling,
    run_inner,
    sigma_guarantees,
    validate_scaling,
)
from .linalg import SymMat
from .merit import (
    MeritParams,
    lambda_surrogate,
    merit_grad_x,
    merit_grad_Z,
    merit_hess_xx,
    merit_value,
)
from .outer import default_schedule
from .problem import Iterate, LipschitzConstants, NsdpProblem

__all__ = [
    "fd_gradient",
    "fd_hessian",
    "fd_matrix_deriv",
    "rel_err",
    "random_spd",
    "random_interior_x",
    "sample_iterate",
    "barrier_curvature_matrix",
    "step_invariant_violations",
    "lipschitz_violations",
    "constants_for_sampling",
    "CheckOutcome",
    "VerifyReport",
    "run_verification",
    "inject_fault",
]

FD_STEP = 1e-6


# --- finite-difference oracles ------------------------------------------

def fd_gradient(fun, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return out


def fd_hessian(gradfun, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((gradfun(x + e) - gradfun(x - e)) / (2.0 * h))
    return np.column_stack(cols)


def fd_matrix_deriv(matfun, x: np.ndarray, i: int, h: float = FD_STEP) -> np.ndarray:
    e = np.zeros_like(np.asarray(x, dtype=float))
    e[i] = h
    return (matfun(x + e) - matfun(x - e)) / (2.0 * h)


def rel_err(approx: np.ndarray, ref: np.ndarray) -> float:
    approx = np.atleast_1d(np.asarray(approx, dtype=float))
    ref = np.atleast_1d(np.asarray(ref, dtype=float))
    return float(np.linalg.norm(approx - ref) / (1.0 + np.linalg.norm(ref)))


# --- samplers -------------------------------------------------------------

def random_spd(rng: np.random.Generator, dim: int,
               eig_low: float = 0.4, eig_high: float = 2.5) -> SymMat:
    qmat, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = rng.uniform(eig_low, eig_high, size=dim)
    return SymMat((qmat * eigs) @ qmat.T)


def random_interior_x(prob: NsdpProblem, rng: np.random.Generator) -> np.ndarray:
    """Strictly feasible x for the shipped problems; rejection sampling
    around the origin otherwise."""
    if isinstance(prob, PsfProblem):
        # Entrywise bound keeps every block's spectral radius under r/2.
        half = prob.r / (2.0 * prob.q)
        return rng.uniform(-half, half, size=prob.n)
    if prob.n == 1 and prob.m == 1:
        return rng.uniform(0.2, 3.0, size=1)
    sigma = 0.5
    for _ in range(60):
        x = rng.normal(0.0, sigma, size=prob.n)
        if prob.eval_X(x).lambda_min > 1e-8:
            return x
        sigma *= 0.7
    raise InvalidInput("could not sample a strictly interior point")


def sample_iterate(prob: NsdpProblem, rng: np.random.Generator) -> Iterate:
    x = random_interior_x(prob, rng)
    return Iterate.create(prob, x, random_spd(rng, prob.m))


# --- independent assemblies for the identity checks -----------------------

def barrier_curvature_matrix(prob: NsdpProblem, x: np.ndarray, xinv: SymMat) -> np.ndarray:
    """[tr(dX_i X^{-1} dX_j X^{-1})]_ij assembled from scratch."""
    n = prob.n
    mats = np.stack([prob.eval_dX(x, i).mat @ xinv.mat for i in range(n)])
    if n <= 8:
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = float(np.trace(mats[i] @ mats[j]))
        return out
    return np.einsum("iab,jba->ij", mats, mats)


# --- run invariants --------------------------------------------------------

def step_invariant_violations(
    records: list[StepRecord], constraint_slope_known: bool = True
) -> list[str]:
    """Feasibility, monotonicity, step caps and the eigenvalue sandwich.

    The [1/2, 3/2] ratio bounds after an x-move are only a theorem when the
    step cap was built from a true constraint slope bound.  Pass
    ``constraint_slope_known=False`` for runs that used the unit-slope
    fallback; interiority, monotonicity and cap conformance are still
    enforced."""
    bad: list[str] = []
    for rec in records:
        if rec.procedure == "terminated":
            continue
        slack = 1e-12 * (1.0 + abs(rec.merit_before))
        if rec.merit_after > rec.merit_before + slack:
            bad.append(f"iter {rec.iter}: merit increased by "
                       f"{rec.merit_after - rec.merit_before:.3e}")
        if not (rec.lambda_min_X > 0.0):
            bad.append(f"iter {rec.iter}: X left the cone interior")
        if not (rec.lambda_min_Z > 0.0):
            bad.append(f"iter {rec.iter}: Z left the cone interior")
        if rec.step_norm is not None and rec.step_cap is not None:
            if rec.step_norm > rec.step_cap * (1.0 + 1e-12):
                bad.append(f"iter {rec.iter}: step {rec.step_norm:.3e} "
                           f"exceeds cap {rec.step_cap:.3e}")
        if not constraint_slope_known:
            continue
        if rec.eig_ratio_lo is not None and rec.eig_ratio_lo < 0.5 - 1e-10:
            bad.append(f"iter {rec.iter}: eigenvalue ratio {rec.eig_ratio_lo:.6f} < 1/2")
        if rec.eig_ratio_hi is not None and rec.eig_ratio_hi > 1.5 + 1e-10:
            bad.append(f"iter {rec.iter}: eigenvalue ratio {rec.eig_ratio_hi:.6f} > 3/2")
    return bad


def constants_for_sampling(
    prob: NsdpProblem, anchors: list[Iterate]
) -> LipschitzConstants:
    """Constants valid on a ball covering the anchors and their step caps."""
    if isinstance(prob, PsfProblem):
        l0 = psf_box_lipschitz(prob, 1.0).L0
        rho = max(
            float(np.linalg.norm(it.x)) + it.X.lambda_min / (2.0 * l0)
            for it in anchors
        )
        return psf_box_lipschitz(prob, 1.05 * rho)
    if prob.lipschitz.complete:
        return prob.lipschitz
    raise InvalidInput("no smoothness constants available for this problem")


def lipschitz_violations(
    prob: NsdpProblem,
    p: MeritParams,
    rng: np.random.Generator,
    pairs: int = 20,
) -> list[str]:
    """Sample anchor/probe pairs inside the step-capped neighborhoods and
    test the four local Lipschitz bounds (inverse, x-gradient, Z-gradient,
    x-Hessian in the spectral norm)."""
    from .merit import local_lipschitz_x, local_lipschitz_xx, local_lipschitz_Z

    anchors = [sample_iterate(prob, rng) for _ in range(pairs)]
    lip = constants_for_sampling(prob, anchors)
    bad: list[str] = []
    for idx, it in enumerate(anchors):
        radius_x = it.X.lambda_min / (2.0 * lip.L0)
        direction = rng.standard_normal(prob.n)
        direction /= np.linalg.norm(direction)
        dx = rng.uniform(0.1, 1.0) * radius_x
        probe = Iterate.create(prob, it.x + dx * direction, it.Z)

        lhs = SymMat(it.X.inv().mat - probe.X.inv().mat).frobenius_norm()
        rhs = 2.0 * lip.L0 * it.X.inv_frobenius_norm() ** 2 * dx
        if lhs > rhs * (1.0 + 1e-9):
            bad.append(f"pair {idx}: inverse bound {lhs:.3e} > {rhs:.3e}")

        lhs = float(np.linalg.norm(merit_grad_x(prob, it, p) - merit_grad_x(prob, probe, p)))
        rhs = local_lipschitz_x(prob, it, p, lip) * dx
        if lhs > rhs * (1.0 + 1e-9):
            bad.append(f"pair {idx}: x-gradient bound {lhs:.3e} > {rhs:.3e}")

        diff = merit_hess_xx(prob, it, p).mat - merit_hess_xx(prob, probe, p).mat
        lhs = float(np.linalg.norm(diff, 2))
        rhs = local_lipschitz_xx(prob, it, p, lip) * dx
        if lhs > rhs * (1.0 + 1e-9):
            bad.append(f"pair {idx}: x-Hessian bound {lhs:.3e} > {rhs:.3e}")

        zdir = rng.standard_normal((prob.m, prob.m))
        zdir = 0.5 * (zdir + zdir.T)
        zdir /= np.linalg.norm(zdir, "fro")
        dz = rng.uniform(0.1, 1.0) * it.Z.lambda_min / 2.0
        zprobe = it.with_Z(SymMat(it.Z.mat + dz * zdir))
        lhs = SymMat(
            merit_grad_Z(prob, it, p).mat - merit_grad_Z(prob, zprobe, p).mat
        ).frobenius_norm()
        rhs = local_lipschitz_Z(it, p) * dz
        if lhs > rhs * (1.0 + 1e-9):
            bad.append(f"pair {idx}: Z-gradient bound {lhs:.3e} > {rhs:.3e}")
    return bad


# --- fault injection -------------------------------------------------------

class _BiasedGradient(NsdpProblem):
    """Delegating wrapper whose objective gradient carries a constant bias."""

    def __init__(self, inner: NsdpProblem, bias: float = 1e-3):
        self._inner = inner
        self._bias = bias
        self.n = inner.n
        self.m = inner.m
        self.lipschitz = inner.lipschitz
        self.constraint_is_affine = inner.constraint_is_affine

    def eval_f(self, x):
        return self._inner.eval_f(x)

    def eval_grad_f(self, x):
        return self._inner.eval_grad_f(x) + self._bias

    def eval_hess_f(self, x):
        return self._inner.eval_hess_f(x)

    def eval_X(self, x):
        return self._inner.eval_X(x)

    def eval_dX(self, x, i):
        return self._inner.eval_dX(x, i)

    def eval_d2X(self, x, i, j):
        return self._inner.eval_d2X(x, i, j)

    def eval_dX_stack(self, x):
        return self._inner.eval_dX_stack(x)


def inject_fault(prob: NsdpProblem, kind: str) -> NsdpProblem:
    """Deliberately corrupt a problem; negative control for the harness."""
    if kind == "grad-f":
        return _BiasedGradient(prob)
    raise InvalidInput(f"unknown fault kind {kind!r} (expected 'grad-f')")


# --- the report ------------------------------------------------------------

@dataclass
class CheckOutcome:
    name: str
    passed: bool
    ran: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[CheckOutcome] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.ran)

    def to_obj(self) -> dict:
        # comparisons against numpy scalars produce numpy bools; keep the
        # payload plain JSON types
        return {
            "all_passed": bool(self.all_passed),
            "checks": [
                {"name": c.name, "passed": bool(c.passed), "ran": bool(c.ran),
                 "detail": c.detail}
                for c in self.checks
            ],
        }


def _merit_params_for(prob: NsdpProblem) -> MeritParams:
    return MeritParams(mu=0.4, nu=0.6)


def _check_objective_derivatives(prob, rng, points) -> CheckOutcome:
    worst = 0.0
    for _ in range(points):
        x = random_interior_x(prob, rng)
        worst = max(worst, rel_err(fd_gradient(prob.eval_f, x), prob.eval_grad_f(x)))
        worst = max(
            worst, rel_err(fd_hessian(prob.eval_grad_f, x), prob.eval_hess_f(x))
        )
    return CheckOutcome(
        "objective-derivatives", worst <= 1e-5, True, f"max rel err {worst:.3e}"
    )


def _check_constraint_derivatives(prob, rng, points) -> CheckOutcome:
    worst = 0.0
    sym_ok = True
    for _ in range(points):
        x = random_interior_x(prob, rng)
        for i in range(prob.n):
            fd = fd_matrix_deriv(lambda y: prob.eval_X(y).mat, x, i)
            worst = max(worst, rel_err(fd, prob.eval_dX(x, i).mat))
        if not prob.constraint_is_affine:
            for i in range(prob.n):
                for j in range(prob.n):
                    d_ij = prob.eval_d2X(x, i, j).mat
                    d_ji = prob.eval_d2X(x, j, i).mat
                    if rel_err(d_ij, d_ji) > 1e-12:
                        sym_ok = False
                    fd = fd_matrix_deriv(lambda y: prob.eval_dX(y, i).mat, x, j)
                    worst = max(worst, rel_err(fd, d_ij))
    passed = worst <= 1e-5 and sym_ok
    return CheckOutcome(
        "constraint-derivatives", passed, True,
        f"max rel err {worst:.3e}, second-derivative symmetry {'ok' if sym_ok else 'broken'}",
    )


def _check_merit_gradients(prob, rng, points) -> CheckOutcome:
    p = _merit_params_for(prob)
    worst = 0.0
    for _ in range(points):
        it = sample_iterate(prob, rng)

        def psi_of_x(y):
            return merit_value(prob, Iterate.create(prob, y, it.Z), p)

        worst = max(worst, rel_err(fd_gradient(psi_of_x, it.x), merit_grad_x(prob, it, p)))
        gz = merit_grad_Z(prob, it, p)
        for _ in range(6):
            d = rng.standard_normal((prob.m, prob.m))
            d = 0.5 * (d + d.T)
            d /= np.linalg.norm(d, "fro")

            def psi_of_t(t):
                return merit_value(
                    prob, it.with_Z(SymMat(it.Z.mat + t[0] * d)), p
                )

            fd = fd_gradient(psi_of_t, np.zeros(1))[0]
            worst = max(worst, abs(fd - float(np.sum(gz.mat * d))) / (1.0 + abs(fd)))
    return CheckOutcome("merit-gradients", worst <= 1e-5, True, f"max rel err {worst:.3e}")


def _check_merit_hessian(prob, rng, points) -> CheckOutcome:
    p = _merit_params_for(prob)
    worst = 0.0
    for _ in range(points):
        it = sample_iterate(prob, rng)

        def grad_of_x(y):
            return merit_grad_x(prob, Iterate.create(prob, y, it.Z), p)

        worst = max(
            worst, rel_err(fd_hessian(grad_of_x, it.x), merit_hess_xx(prob, it, p).mat)
        )
    return CheckOutcome("merit-hessian", worst <= 1e-4, True, f"max rel err {worst:.3e}")


def _check_multiplier_identities(prob, rng, points) -> CheckOutcome:
    p = _merit_params_for(prob)
    worst = 0.0
    for _ in range(points):
        it = sample_iterate(prob, rng)
        lam = lambda_surrogate(it, p)
        worst = max(
            worst,
            rel_err(merit_grad_x(prob, it, p), grad_lagrangian(prob, it.x, lam)),
        )
        curv = barrier_curvature_matrix(prob, it.x, it.X.inv())
        alt = hess_lagrangian(prob, it.x, lam).mat + (1.0 + p.nu) * p.mu * curv
        worst = max(worst, rel_err(merit_hess_xx(prob, it, p).mat, alt))
    return CheckOutcome(
        "multiplier-identities", worst <= 1e-10, True, f"max rel err {worst:.3e}"
    )


def _check_smoothness_bounds(prob, rng, pairs) -> CheckOutcome:
    p = _merit_params_for(prob)
    try:
        bad = lipschitz_violations(prob, p, rng, pairs=pairs)
    except InvalidInput as exc:
        return CheckOutcome("smoothness-bounds", True, False, str(exc))
    return CheckOutcome(
        "smoothness-bounds", not bad, True,
        "; ".join(bad[:3]) if bad else f"{pairs} pairs, no violations",
    )


def _fixed_mode_setup(prob, rng):
    """A fixed-mode configuration with valid constants, or None."""
    if isinstance(prob, PsfProblem):
        start = psf_initial_point(prob, seed=7, mu1=0.3)
        start = start.with_Z(SymMat(2.0 * start.Z.mat))
        lip = psf_box_lipschitz(prob, 3.0)
        return start, lip, 3.0
    if prob.lipschitz.complete:
        return sample_iterate(prob, rng), prob.lipschitz, None
    return None


def _check_fixed_step_descent(prob, rng) -> CheckOutcome:
    setup = _fixed_mode_setup(prob, rng)
    if setup is None:
        return CheckOutcome("fixed-step-descent", True, False, "no constants available")
    start, lip, radius = setup
    params = IpmParams(
        mu=0.1, nu=0.5, eps_g=0.05, eps_mu=0.05, eps_H=0.05,
        max_inner_iters=40, step_mode=FixedLipschitz(),
    )
    res = run_inner(prob, start, params, lipschitz=lip)
    sig = sigma_guarantees(params, lip)
    bad = step_invariant_violations(res.trace)
    if radius is not None:
        end_norm = float(np.linalg.norm(res.iterate.x))
        if end_norm > radius:
            bad.append(f"iterates left the constants' ball ({end_norm:.3f} > {radius})")
    proc_to_num = {"dual_grad": 1, "primal_grad": 2, "neg_curvature": 3}
    for rec in res.trace:
        if rec.procedure == "terminated":
            continue
        floor = sig.for_procedure(proc_to_num[rec.procedure])
        slack = 1e-12 * (1.0 + abs(rec.merit_before))
        if rec.merit_before - rec.merit_after < floor - slack:
            bad.append(
                f"iter {rec.iter}: decrease "
                f"{rec.merit_before - rec.merit_after:.3e} < sigma {floor:.3e}"
            )
    return CheckOutcome(
        "fixed-step-descent", not bad, True,
        "; ".join(bad[:3]) if bad else f"{res.steps} steps, all above their sigma",
    )


def _check_feasibility_invariants(prob, rng) -> CheckOutcome:
    if isinstance(prob, PsfProblem):
        start = psf_initial_point(prob, seed=3, mu1=0.3)
    else:
        start = sample_iterate(prob, rng)
    params = IpmParams(
        mu=0.1, nu=0.5, eps_g=0.02, eps_mu=0.02, eps_H=0.02,
        max_inner_iters=60, step_mode=Backtracking(),
    )
    res = run_inner(prob, start, params)
    slope_known = prob.lipschitz.L0 is not None
    bad = step_invariant_violations(res.trace, constraint_slope_known=slope_known)
    note = "" if slope_known else " (ratio bounds unchecked: slope constant unknown)"
    return CheckOutcome(
        "feasibility-invariants", not bad, True,
        "; ".join(bad[:3]) if bad else f"{res.steps} steps, no violations{note}",
    )


def _check_scaling(prob, rng) -> CheckOutcome:
    params = IpmParams(mu=0.1, nu=0.5, eps_g=0.1, eps_mu=0.1, eps_H=0.1)
    failures = validate_scaling(identity_scaling(), params, prob.n, prob.m, rng)
    return CheckOutcome(
        "scaling-operators", not failures, True,
        "; ".join(failures[:3]) if failures else "self-adjoint, bounds hold",
    )


def _check_schedule() -> CheckOutcome:
    try:
        default_schedule().validate()
    except InvalidInput as exc:
        return CheckOutcome("schedule-admissibility", False, True, str(exc))
    return CheckOutcome("schedule-admissibility", True, True, "default schedule admissible")


def run_verification(
    prob: NsdpProblem,
    seed: int = 0,
    points: int = 6,
    pairs: int = 20,
    fault: str | None = None,
) -> VerifyReport:
    """Run every applicable check against a problem; optionally corrupted."""
    if fault is not None:
        prob = inject_fault(prob, fault)
    rng = np.random.Generator(np.random.Philox(key=seed))
    report = VerifyReport()
    report.checks.append(_check_objective_derivatives(prob, rng, points))
    report.checks.append(_check_constraint_derivatives(prob, rng, points))
    report.checks.append(_check_merit_gradients(prob, rng, points))
    report.checks.append(_check_merit_hessian(prob, rng, points))
    report.checks.append(_check_multiplier_identities(prob, rng, points))
    report.checks.append(_check_smoothness_bounds(prob, rng, pairs))
    report.checks.append(_check_fixed_step_descent(prob, rng))
    report.checks.append(_check_feasibility_invariants(prob, rng))
    report.checks.append(_check_scaling(prob, rng))
    report.checks.append(_check_schedule())
    return report
