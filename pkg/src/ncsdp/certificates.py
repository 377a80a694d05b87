"""Optimality certificates at and near the cone boundary.

The solver's iterates stay strictly interior, so classical KKT and
second-order conditions are only reached in the limit.  This module measures
how close an iterate is: raw KKT residuals at a given multiplier, scaled
Fritz-John multipliers that stay bounded along the barrier path, the
curvature correction term that strengthens the Lagrangian Hessian on the
cone's tangent directions, and the restricted curvature test over the
subspace where the constraint's kernel is preserved to first order.

Rank decisions use a relative eigenvalue threshold with a unit floor on the
reference scale, so near-zero matrices still report a kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .linalg import SymMat, spectral_decompose
from .merit import MeritParams, lambda_surrogate, require_interior
from .problem import Iterate, NsdpProblem, adjoint_map

__all__ = [
    "KktResiduals",
    "kkt_residuals",
    "grad_lagrangian",
    "hess_lagrangian",
    "FjScaled",
    "fj_scaled_multipliers",
    "complementarity_gaps",
    "SigmaTerm",
    "sigma_term",
    "WsospReport",
    "wsosp_curvature_check",
]

DEFAULT_RANK_TOL = 1e-7


def _rank_threshold(lambda_max: float, rank_tol: float) -> float:
    # Relative to the top eigenvalue, floored at unit scale so that matrices
    # with uniformly tiny spectra are treated as rank deficient.
    return rank_tol * max(lambda_max, 1.0)


def _check_rank_tol(rank_tol: float) -> None:
    if not (0.0 < rank_tol < 1.0):
        raise InvalidInput(f"rank_tol must lie in (0, 1), got {rank_tol}")


@dataclass(frozen=True)
class KktResiduals:
    """Residuals of the four first-order conditions at (x, Lambda)."""

    stationarity: float  # ||grad f(x) - adjoint(Lambda)||
    primal_feasibility: float  # max(0, -lambda_min(X(x)))
    dual_feasibility: float  # max(0, -lambda_min(Lambda))
    complementarity: float  # ||X(x) Lambda||_F


def grad_lagrangian(prob: NsdpProblem, x: np.ndarray, lam: SymMat) -> np.ndarray:
    return prob.eval_grad_f(x) - adjoint_map(prob, x, lam)


def hess_lagrangian(prob: NsdpProblem, x: np.ndarray, lam: SymMat) -> SymMat:
    """Hessian in x of f(x) - <X(x), Lambda> at frozen Lambda."""
    hess = np.array(prob.eval_hess_f(x), dtype=float)
    if not prob.constraint_is_affine:
        for i in range(prob.n):
            for j in range(i, prob.n):
                corr = float(np.sum(lam.mat * prob.eval_d2X(x, i, j).mat))
                hess[i, j] -= corr
                if j > i:
                    hess[j, i] -= corr
    return SymMat(hess)


def kkt_residuals(prob: NsdpProblem, x: np.ndarray, lam: SymMat) -> KktResiduals:
    x = prob.check_x(x)
    x_mat = prob.eval_X(x)
    return KktResiduals(
        stationarity=float(np.linalg.norm(grad_lagrangian(prob, x, lam))),
        primal_feasibility=max(0.0, -x_mat.lambda_min),
        dual_feasibility=max(0.0, -lam.lambda_min),
        complementarity=float(np.linalg.norm(x_mat.mat @ lam.mat, "fro")),
    )


@dataclass(frozen=True)
class FjScaled:
    """Fritz-John style multipliers normalized by the barrier-path scale."""

    lambda_k: float  # objective weight 1 / scale
    omega: SymMat  # scaled matrix multiplier
    scale: float  # 1 + mu*||X^{-1}||_F + ||Z||_F
    scaled_stationarity: float


def fj_scaled_multipliers(prob: NsdpProblem, it: Iterate, p: MeritParams) -> FjScaled:
    require_interior(it)
    scale = 1.0 + p.mu * it.X.inv_frobenius_norm() + it.Z.frobenius_norm()
    lam = lambda_surrogate(it, p)
    lambda_k = 1.0 / scale
    omega = SymMat(lambda_k * lam.mat)
    stationarity = float(np.linalg.norm(grad_lagrangian(prob, it.x, lam)))
    return FjScaled(
        lambda_k=lambda_k,
        omega=omega,
        scale=scale,
        scaled_stationarity=lambda_k * stationarity,
    )


def complementarity_gaps(it: Iterate, p: MeritParams) -> tuple[float, float]:
    """(||mu X^{-1} - Z||_F, ||Lambda - Z||_F): both decay along the path."""
    require_interior(it)
    gap = SymMat(p.mu * it.X.inv().mat - it.Z.mat).frobenius_norm()
    return gap, (1.0 + p.nu) * gap


def _psd_pseudo_inverse(mat: SymMat, rank_tol: float) -> tuple[np.ndarray, int]:
    """Pseudo-inverse of the positive part; returns (matrix, numerical rank)."""
    s = mat.spectrum
    thresh = _rank_threshold(s.lambda_max, rank_tol)
    keep = s.eigenvalues > thresh
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        return np.zeros_like(mat.mat), 0
    u = s.eigenvectors[:, keep]
    return (u / s.eigenvalues[keep]) @ u.T, rank


@dataclass(frozen=True)
class SigmaTerm:
    """Curvature correction H(i, j) = 2 tr(dX_i X^+ dX_j Lambda)."""

    matrix: SymMat
    rank_X: int


def sigma_term(
    prob: NsdpProblem,
    x: np.ndarray,
    lam: SymMat,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> SigmaTerm:
    _check_rank_tol(rank_tol)
    x = prob.check_x(x)
    x_mat = prob.eval_X(x)
    pinv, rank = _psd_pseudo_inverse(x_mat, rank_tol)
    stack = prob.eval_dX_stack(x)
    n = prob.n
    c = stack @ pinv
    d = stack @ lam.mat
    h = 2.0 * (c.reshape(n, -1) @ d.transpose(0, 2, 1).reshape(n, -1).T)
    return SigmaTerm(matrix=SymMat(h), rank_X=rank)


@dataclass(frozen=True)
class WsospReport:
    """Restricted curvature over directions keeping the kernel feasible."""

    min_restricted_curvature: float  # +inf when the subspace is trivial
    subspace_dim: int
    kernel_dim_X: int


def wsosp_curvature_check(
    prob: NsdpProblem,
    x: np.ndarray,
    lam: SymMat,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> WsospReport:
    """Minimum eigenvalue of the corrected Lagrangian Hessian restricted to
    directions whose constraint differential vanishes on the kernel of X."""
    _check_rank_tol(rank_tol)
    x = prob.check_x(x)
    x_mat = prob.eval_X(x)
    s = x_mat.spectrum
    thresh = _rank_threshold(s.lambda_max, rank_tol)
    kernel_cols = s.eigenvalues <= thresh
    kernel_dim = int(np.count_nonzero(kernel_cols))
    n = prob.n

    if kernel_dim == 0:
        basis = np.eye(n)
    else:
        u = s.eigenvectors[:, kernel_cols]
        stack = prob.eval_dX_stack(x)
        # proj[i, :, b] = dX_i @ u_b; dotting with u_a yields u_a^T dX_i u_b
        # for every i at once.
        proj = stack @ u
        rows = []
        for a in range(kernel_dim):
            for b in range(a, kernel_dim):
                rows.append(proj[:, :, b] @ u[:, a])
        g = np.asarray(rows)
        gram = spectral_decompose(g.T @ g)
        g_thresh = _rank_threshold(gram.lambda_max, rank_tol)
        null_cols = gram.eigenvalues <= g_thresh
        if not np.any(null_cols):
            return WsospReport(
                min_restricted_curvature=float("inf"),
                subspace_dim=0,
                kernel_dim_X=kernel_dim,
            )
        basis = gram.eigenvectors[:, null_cols]

    corrected = hess_lagrangian(prob, x, lam).mat + sigma_term(
        prob, x, lam, rank_tol
    ).matrix.mat
    reduced = SymMat(basis.T @ corrected @ basis)
    return WsospReport(
        min_restricted_curvature=reduced.lambda_min,
        subspace_dim=basis.shape[1],
        kernel_dim_X=kernel_dim,
    )
