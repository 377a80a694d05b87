"""Dense symmetric-matrix helpers built on a cached eigendecomposition.

Every matrix the solver touches is real symmetric, and nearly every formula
needs its spectrum (inverses, log-determinants, extreme eigenvalues, step
caps).  ``SymMat`` therefore stores the dense entries, symmetrized on
construction, and computes one eigendecomposition lazily that all derived
quantities share.  Inverses are always formed from the spectrum, never by a
triangular factorization, so the same decomposition backs both the inverse
and the interiority checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, InvalidInput, NumericalFailure

__all__ = ["Spectrum", "SymMat", "spectral_decompose"]


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``.  The column order is
    whatever the LAPACK driver returns (reversed to descending), which is
    deterministic for a given platform; ties are broken by that output order.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def spectral_decompose(mat: np.ndarray) -> Spectrum:
    """Full symmetric eigendecomposition with eigenvalues sorted descending."""
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    w, u = np.linalg.eigh(a)
    return Spectrum(eigenvalues=w[::-1].copy(), eigenvectors=u[:, ::-1].copy())


class SymMat:
    """Real symmetric matrix; entries symmetrized on write, spectrum cached."""

    __slots__ = ("mat", "_spectrum")

    def __init__(self, entries: np.ndarray):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("matrix has non-finite entries")
        self.mat = 0.5 * (a + a.T)
        self._spectrum: Spectrum | None = None

    @classmethod
    def identity(cls, dim: int) -> "SymMat":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "SymMat":
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = spectral_decompose(self.mat)
        return self._spectrum

    @property
    def lambda_min(self) -> float:
        return self.spectrum.lambda_min

    @property
    def lambda_max(self) -> float:
        return self.spectrum.lambda_max

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.mat, "fro"))

    def inner(self, other: "SymMat") -> float:
        """Trace inner product <A, B>."""
        return float(np.sum(self.mat * other.mat))

    def inv(self) -> "SymMat":
        """Inverse rebuilt from the spectrum as U diag(1/lambda) U^T."""
        s = self.spectrum
        if s.lambda_min <= 0.0:
            raise DomainViolation(
                f"matrix is not positive definite (lambda_min={s.lambda_min:.3e})"
            )
        u = s.eigenvectors
        return SymMat((u / s.eigenvalues) @ u.T)

    def inv_frobenius_norm(self) -> float:
        """Frobenius norm of the inverse, straight from the eigenvalues."""
        s = self.spectrum
        if s.lambda_min <= 0.0:
            raise DomainViolation(
                f"matrix is not positive definite (lambda_min={s.lambda_min:.3e})"
            )
        return float(np.sqrt(np.sum(1.0 / s.eigenvalues**2)))

    def logdet(self) -> float:
        """Sum of eigenvalue logs; requires strictly positive spectrum."""
        s = self.spectrum
        if s.lambda_min <= 0.0:
            raise DomainViolation(
                f"log-det undefined (lambda_min={s.lambda_min:.3e})"
            )
        return float(np.sum(np.log(s.eigenvalues)))

    def min_eigenpair(self) -> tuple[float, np.ndarray]:
        """Smallest eigenvalue and a matching unit eigenvector."""
        s = self.spectrum
        return s.lambda_min, s.eigenvectors[:, -1].copy()

    def __add__(self, other: "SymMat") -> "SymMat":
        return SymMat(self.mat + other.mat)

    def __sub__(self, other: "SymMat") -> "SymMat":
        return SymMat(self.mat - other.mat)

    def __rmul__(self, scalar: float) -> "SymMat":
        return SymMat(float(scalar) * self.mat)

    def __repr__(self) -> str:
        return f"SymMat(dim={self.dim})"
