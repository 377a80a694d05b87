"""Problem interface: minimize f(x) subject to X(x) in the semidefinite cone.

A problem supplies the objective with two derivative orders and the matrix
constraint map with its first and second coordinate derivatives.  Solvers only
talk to this interface; the benchmark problems and any user problem implement
it.  Smoothness constants, when known, ride along so that fixed step-size mode
can compute its guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantsRequired, InvalidInput
from .linalg import SymMat

__all__ = [
    "LipschitzConstants",
    "NsdpProblem",
    "Iterate",
    "adjoint_map",
    "delta_X",
]


@dataclass(frozen=True)
class LipschitzConstants:
    """Smoothness constants (L0, L1, L2); None marks an unknown constant.

    L0 bounds the constraint slope (sum of Frobenius norms of the coordinate
    derivatives, which also bounds the map's Lipschitz constant), L1 the
    first-order and L2 the second-order Lipschitz constants of objective and
    constraint jointly.  Fixed step-size mode requires all three.
    """

    L0: float | None = None
    L1: float | None = None
    L2: float | None = None

    @property
    def complete(self) -> bool:
        return self.L0 is not None and self.L1 is not None and self.L2 is not None

    def require_complete(self) -> "LipschitzConstants":
        if not self.complete:
            raise ConstantsRequired(
                "operation needs all of (L0, L1, L2); "
                f"got ({self.L0}, {self.L1}, {self.L2})"
            )
        return self


class NsdpProblem:
    """Base class for nonlinear semidefinite programs.

    Subclasses set ``n`` (variable count), ``m`` (constraint matrix order),
    optionally ``lipschitz`` and ``constraint_is_affine``, and implement the
    eval methods.  ``eval_dX_stack`` has a generic fallback; problems with
    constant derivatives should override it with a cached array.
    """

    n: int = 0
    m: int = 0
    lipschitz: LipschitzConstants = LipschitzConstants()
    # True when all second derivatives of X vanish; lets the merit Hessian
    # skip the n^2 second-derivative sweep.
    constraint_is_affine: bool = False

    def eval_f(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def eval_grad_f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval_hess_f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval_X(self, x: np.ndarray) -> SymMat:
        raise NotImplementedError

    def eval_dX(self, x: np.ndarray, i: int) -> SymMat:
        """Derivative of the constraint map with respect to coordinate i."""
        raise NotImplementedError

    def eval_d2X(self, x: np.ndarray, i: int, j: int) -> SymMat:
        """Second derivative of the constraint map; symmetric in (i, j)."""
        raise NotImplementedError

    def eval_dX_stack(self, x: np.ndarray) -> np.ndarray:
        """All first derivatives as an (n, m, m) array."""
        out = np.empty((self.n, self.m, self.m))
        for i in range(self.n):
            out[i] = self.eval_dX(x, i).mat
        return out

    def check_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise InvalidInput(f"expected x of shape ({self.n},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("x has non-finite entries")
        return x


@dataclass(frozen=True)
class Iterate:
    """Primal-dual point (x, Z) with the evaluated constraint matrix X(x)."""

    x: np.ndarray
    X: SymMat
    Z: SymMat

    @classmethod
    def create(cls, prob: NsdpProblem, x: np.ndarray, Z: SymMat) -> "Iterate":
        x = prob.check_x(x)
        if Z.dim != prob.m:
            raise InvalidInput(f"expected Z of order {prob.m}, got {Z.dim}")
        return cls(x=x, X=prob.eval_X(x), Z=Z)

    def with_x(self, prob: NsdpProblem, x: np.ndarray) -> "Iterate":
        return Iterate.create(prob, x, self.Z)

    def with_Z(self, Z: SymMat) -> "Iterate":
        return Iterate(x=self.x, X=self.X, Z=Z)


def adjoint_map(prob: NsdpProblem, x: np.ndarray, w: SymMat) -> np.ndarray:
    """Adjoint of the constraint differential: component i is <dX_i(x), W>."""
    if w.dim != prob.m:
        raise InvalidInput(f"expected W of order {prob.m}, got {w.dim}")
    stack = prob.eval_dX_stack(x)
    return stack.reshape(prob.n, -1) @ w.mat.ravel()


def delta_X(prob: NsdpProblem, x: np.ndarray, d: np.ndarray) -> SymMat:
    """Directional derivative of the constraint map along d."""
    d = np.asarray(d, dtype=float)
    if d.shape != (prob.n,):
        raise InvalidInput(f"expected direction of shape ({prob.n},), got {d.shape}")
    stack = prob.eval_dX_stack(x)
    return SymMat(np.tensordot(d, stack, axes=(0, 0)))
