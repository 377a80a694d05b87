"""Shared fixtures: benchmark instances and a small curved-constraint toy."""

import numpy as np
import pytest

from ncsdp import (
    Iterate,
    LipschitzConstants,
    NsdpProblem,
    PsfConfig,
    SymMat,
    analytic_scalar_problem,
    generate_psf,
    psf_as_nsdp,
    psf_initial_point,
)


class LineProblem(NsdpProblem):
    """X(x) = [x] on the half-line with a pluggable polynomial objective."""

    n = 1
    m = 1
    constraint_is_affine = True

    def __init__(self, f=None, grad=None, hess=None, lipschitz=None):
        self._f = f or (lambda x: 0.0)
        self._grad = grad or (lambda x: np.zeros(1))
        self._hess = hess or (lambda x: np.zeros((1, 1)))
        if lipschitz is not None:
            self.lipschitz = lipschitz

    def eval_f(self, x):
        return float(self._f(float(x[0])))

    def eval_grad_f(self, x):
        return np.asarray(self._grad(float(x[0])), dtype=float)

    def eval_hess_f(self, x):
        return np.asarray(self._hess(float(x[0])), dtype=float)

    def eval_X(self, x):
        return SymMat(np.array([[float(x[0])]]))

    def eval_dX(self, x, i):
        return SymMat(np.ones((1, 1)))

    def eval_d2X(self, x, i, j):
        return SymMat.zeros(1)


class CurvedProblem(NsdpProblem):
    """f = x0^2 x1 + x1^2 + x0 with X(x) = I + x x^T (interior everywhere).

    The constraint map is genuinely nonlinear, so it exercises the
    second-derivative code paths that the affine benchmarks skip.  No global
    smoothness constants are attached on purpose.
    """

    n = 2
    m = 2
    lipschitz = LipschitzConstants()
    constraint_is_affine = False

    def eval_f(self, x):
        return float(x[0] ** 2 * x[1] + x[1] ** 2 + x[0])

    def eval_grad_f(self, x):
        return np.array([2.0 * x[0] * x[1] + 1.0, x[0] ** 2 + 2.0 * x[1]])

    def eval_hess_f(self, x):
        return np.array([[2.0 * x[1], 2.0 * x[0]], [2.0 * x[0], 2.0]])

    def eval_X(self, x):
        return SymMat(np.eye(2) + np.outer(x, x))

    def eval_dX(self, x, i):
        d = np.zeros((2, 2))
        d[i, :] += x
        d[:, i] += x
        return SymMat(d)

    def eval_d2X(self, x, i, j):
        d = np.zeros((2, 2))
        d[i, j] += 1.0
        d[j, i] += 1.0
        return SymMat(d)


@pytest.fixture
def curved():
    return CurvedProblem()


@pytest.fixture
def scalar2():
    # slope 2, exact constants (1, 0, 0)
    return analytic_scalar_problem(2.0)


@pytest.fixture(scope="session")
def psf_default():
    """The (5, 5, 4, 0.3) benchmark instance at seed 1."""
    return psf_as_nsdp(generate_psf(PsfConfig(), seed=1))


@pytest.fixture(scope="session")
def psf_default_start(psf_default):
    return psf_initial_point(psf_default, seed=1, mu1=0.3)


@pytest.fixture(scope="session")
def psf_small():
    """A (3, 3, 2, 0.3) instance; 18 variables, order-12 constraint."""
    return psf_as_nsdp(generate_psf(PsfConfig(m=3, n=3, q=2, r=0.3), seed=5))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=42))


def make_iterate(prob, x, Z=None):
    """Iterate at x; Z defaults to the identity."""
    x = np.asarray(x, dtype=float)
    if Z is None:
        Z = SymMat.identity(prob.m)
    elif not isinstance(Z, SymMat):
        Z = SymMat(np.asarray(Z, dtype=float))
    return Iterate.create(prob, x, Z)
