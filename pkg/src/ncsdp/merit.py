"""Barrier merit function and its derivatives.

The solver decreases one scalar merit at a time: the primal log-det barrier
plus nu times a primal-dual complementarity barrier,

    merit(x, Z) = f(x) - mu*logdet X(x)
                  + nu*( <X(x), Z> - mu*logdet X(x) - mu*logdet Z ).

Stationarity of the merit in x coincides with Lagrangian stationarity at the
multiplier surrogate  Lambda = (1+nu)*mu*X^{-1} - nu*Z,  which is what the
certificate layer exploits.  nu = 0 collapses everything to the pure primal
barrier and the Z-gradient vanishes identically.

All operations demand strict interiority of X and Z; eigenvalues at or below
a small floor relative to the matrix scale raise DomainViolation rather than
feeding garbage into logs and inverses.

Local smoothness bounds (Lipschitz constants of the merit derivatives on the
step-capped neighborhoods around an iterate) are computed here as well; the
fixed step-size rules in the inner solver are their reciprocals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantsRequired, DomainViolation, InvalidInput
from .linalg import SymMat
from .problem import Iterate, LipschitzConstants, NsdpProblem, adjoint_map

__all__ = [
    "MeritParams",
    "INTERIORITY_FLOOR",
    "interiority_floor",
    "is_strictly_interior",
    "require_interior",
    "merit_value",
    "merit_grad_x",
    "merit_grad_Z",
    "merit_hess_xx",
    "lambda_surrogate",
    "local_lipschitz_x",
    "local_lipschitz_Z",
    "local_lipschitz_xx",
]

# Relative eigenvalue floor below which a matrix no longer counts as interior.
INTERIORITY_FLOOR = 1e-14


@dataclass(frozen=True)
class MeritParams:
    """Barrier parameter mu > 0 and complementarity weight nu >= 0."""

    mu: float
    nu: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0.0):
            raise InvalidInput(f"mu must be finite and positive, got {self.mu}")
        if not (np.isfinite(self.nu) and self.nu >= 0.0):
            raise InvalidInput(f"nu must be finite and nonnegative, got {self.nu}")


def interiority_floor(mat: SymMat) -> float:
    return INTERIORITY_FLOOR * (1.0 + mat.frobenius_norm())


def is_strictly_interior(mat: SymMat) -> bool:
    return mat.lambda_min > interiority_floor(mat)


def require_interior(it: Iterate) -> None:
    if not is_strictly_interior(it.X):
        raise DomainViolation(
            f"X is not strictly interior (lambda_min={it.X.lambda_min:.3e})"
        )
    if not is_strictly_interior(it.Z):
        raise DomainViolation(
            f"Z is not strictly interior (lambda_min={it.Z.lambda_min:.3e})"
        )


def merit_value(prob: NsdpProblem, it: Iterate, p: MeritParams) -> float:
    require_interior(it)
    logdet_X = it.X.logdet()
    value = prob.eval_f(it.x) - p.mu * logdet_X
    if p.nu > 0.0:
        value += p.nu * (it.X.inner(it.Z) - p.mu * logdet_X - p.mu * it.Z.logdet())
    return float(value)


def lambda_surrogate(it: Iterate, p: MeritParams) -> SymMat:
    """Multiplier surrogate (1+nu)*mu*X^{-1} - nu*Z."""
    require_interior(it)
    lam = (1.0 + p.nu) * p.mu * it.X.inv().mat
    if p.nu > 0.0:
        lam = lam - p.nu * it.Z.mat
    return SymMat(lam)


def merit_grad_x(prob: NsdpProblem, it: Iterate, p: MeritParams) -> np.ndarray:
    """Gradient in x: grad f(x) minus the adjoint at the multiplier surrogate."""
    lam = lambda_surrogate(it, p)
    return prob.eval_grad_f(it.x) - adjoint_map(prob, it.x, lam)


def merit_grad_Z(prob: NsdpProblem, it: Iterate, p: MeritParams) -> SymMat:
    """Gradient in Z: nu*(X - mu*Z^{-1}); identically zero when nu = 0."""
    require_interior(it)
    if p.nu == 0.0:
        return SymMat.zeros(it.Z.dim)
    return SymMat(p.nu * (it.X.mat - p.mu * it.Z.inv().mat))


def merit_hess_xx(prob: NsdpProblem, it: Iterate, p: MeritParams) -> SymMat:
    """Hessian in x of the merit.

    Entry (i, j) is the objective Hessian, minus the multiplier surrogate
    paired with the constraint's second derivative, plus the barrier
    curvature (1+nu)*mu*tr(dX_i X^{-1} dX_j X^{-1}).
    """
    require_interior(it)
    x = it.x
    xinv = it.X.inv().mat
    stack = prob.eval_dX_stack(x)
    n = prob.n
    c = stack @ xinv
    barrier = c.reshape(n, -1) @ c.transpose(0, 2, 1).reshape(n, -1).T
    hess = prob.eval_hess_f(x) + (1.0 + p.nu) * p.mu * barrier
    if not prob.constraint_is_affine:
        lam = lambda_surrogate(it, p).mat
        for i in range(n):
            for j in range(i, n):
                corr = float(np.sum(lam * prob.eval_d2X(x, i, j).mat))
                hess[i, j] -= corr
                if j > i:
                    hess[j, i] -= corr
    return SymMat(hess)


def _require_constants(lip: LipschitzConstants, need_l2: bool = False) -> LipschitzConstants:
    if lip.L0 is None or lip.L1 is None or (need_l2 and lip.L2 is None):
        raise ConstantsRequired("local smoothness bound needs known Lipschitz constants")
    return lip


def local_lipschitz_Z(it: Iterate, p: MeritParams) -> float:
    """Lipschitz bound for the Z-gradient on the dual step neighborhood."""
    require_interior(it)
    return 2.0 * p.mu * p.nu * it.Z.inv_frobenius_norm() ** 2


def local_lipschitz_x(
    prob: NsdpProblem, it: Iterate, p: MeritParams, lip: LipschitzConstants | None = None
) -> float:
    """Lipschitz bound for the x-gradient on the primal step neighborhood."""
    require_interior(it)
    lip = _require_constants(lip if lip is not None else prob.lipschitz)
    xinv_fro = it.X.inv_frobenius_norm()
    z_fro = it.Z.frobenius_norm()
    return (
        lip.L1
        + p.nu * lip.L1 * z_fro
        + 2.0 * (1.0 + p.nu) * p.mu * lip.L0**2 * xinv_fro**2
        + (1.0 + p.nu) * p.mu * lip.L1 * xinv_fro
    )


def local_lipschitz_xx(
    prob: NsdpProblem, it: Iterate, p: MeritParams, lip: LipschitzConstants | None = None
) -> float:
    """Lipschitz bound for the x-Hessian on the primal step neighborhood."""
    require_interior(it)
    lip = _require_constants(lip if lip is not None else prob.lipschitz, need_l2=True)
    xinv_fro = it.X.inv_frobenius_norm()
    z_fro = it.Z.frobenius_norm()
    return (
        lip.L2
        + p.nu * lip.L2 * z_fro
        + (1.0 + p.nu)
        * p.mu
        * (
            lip.L2 * xinv_fro
            + 4.0 * lip.L1 * lip.L0 * xinv_fro**2
            + 6.0 * lip.L0**3 * xinv_fro**3
        )
    )
