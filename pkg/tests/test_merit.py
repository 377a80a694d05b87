"""Merit function layer: values, derivatives, surrogate, smoothness bounds."""

import numpy as np
import pytest

from ncsdp import (
    ConstantsRequired,
    DomainViolation,
    Iterate,
    LipschitzConstants,
    MeritParams,
    NsdpProblem,
    SymMat,
    adjoint_map,
    lambda_surrogate,
    local_lipschitz_Z,
    local_lipschitz_x,
    local_lipschitz_xx,
    merit_grad_Z,
    merit_grad_x,
    merit_hess_xx,
    merit_value,
)
from ncsdp.errors import InvalidInput
from ncsdp.merit import is_strictly_interior, require_interior

from conftest import LineProblem, make_iterate


class ConstantIdentity(NsdpProblem):
    """Zero objective with the constant constraint X(x) = I_m."""

    n = 1
    constraint_is_affine = True

    def __init__(self, m):
        self.m = m

    def eval_f(self, x):
        return 0.0

    def eval_grad_f(self, x):
        return np.zeros(1)

    def eval_hess_f(self, x):
        return np.zeros((1, 1))

    def eval_X(self, x):
        return SymMat.identity(self.m)

    def eval_dX(self, x, i):
        return SymMat.zeros(self.m)

    def eval_d2X(self, x, i, j):
        return SymMat.zeros(self.m)


def square_line():
    return LineProblem(
        f=lambda x: x**2,
        grad=lambda x: np.array([2.0 * x]),
        hess=lambda x: np.array([[2.0]]),
    )


class TestMeritParams:
    def test_validation(self):
        MeritParams(0.5, 0.0)
        with pytest.raises(InvalidInput):
            MeritParams(0.0, 0.0)
        with pytest.raises(InvalidInput):
            MeritParams(0.5, -0.1)
        with pytest.raises(InvalidInput):
            MeritParams(np.inf, 0.0)


class TestInteriority:
    def test_floor_is_relative(self):
        assert is_strictly_interior(SymMat(np.diag([1.0, 1e-10])))
        assert not is_strictly_interior(SymMat(np.diag([1.0, 1e-15])))
        assert not is_strictly_interior(SymMat(np.diag([1.0, -0.1])))

    def test_require_interior_raises_on_either_factor(self, curved):
        good = make_iterate(curved, [0.1, 0.2])
        require_interior(good)
        with pytest.raises(DomainViolation):
            require_interior(good.with_Z(SymMat(np.diag([1.0, -1.0]))))
        bad_x = LineProblem()
        with pytest.raises(DomainViolation):
            require_interior(make_iterate(bad_x, [-1.0]))


class TestMeritValue:
    def test_constant_identity_closed_form(self):
        """f=0, X=I_m, Z=mu*I_m gives nu*mu*m*(1 - log mu)."""
        for m, mu, nu in [(3, 0.5, 0.7), (2, 1.0, 0.3), (4, 2.0, 1.0)]:
            prob = ConstantIdentity(m)
            it = make_iterate(prob, [0.0], Z=mu * np.eye(m))
            val = merit_value(prob, it, MeritParams(mu, nu))
            np.testing.assert_allclose(val, nu * mu * m * (1.0 - np.log(mu)))

    def test_mu_one_reduces_to_nu_m(self):
        prob = ConstantIdentity(5)
        it = make_iterate(prob, [0.0], Z=np.eye(5))
        np.testing.assert_allclose(merit_value(prob, it, MeritParams(1.0, 0.4)), 2.0)

    def test_nu_zero_is_pure_barrier(self, curved, rng):
        x = rng.standard_normal(2) * 0.5
        it = make_iterate(curved, x, Z=np.diag([2.0, 3.0]))
        p = MeritParams(0.7, 0.0)
        expected = curved.eval_f(x) - 0.7 * it.X.logdet()
        np.testing.assert_allclose(merit_value(curved, it, p), expected, rtol=1e-14)

    def test_scalar_worked_example(self):
        """x=2, z=1, mu=nu=1, f=x^2: 4 - log2 + (2 - log2 - 0) = 6 - 2 log2."""
        it = make_iterate(square_line(), [2.0], Z=np.array([[1.0]]))
        val = merit_value(square_line(), it, MeritParams(1.0, 1.0))
        np.testing.assert_allclose(val, 6.0 - 2.0 * np.log(2.0), rtol=1e-15)

    def test_noninterior_raises(self):
        prob = LineProblem()
        with pytest.raises(DomainViolation):
            merit_value(prob, make_iterate(prob, [-0.5]), MeritParams(1.0, 1.0))
        it = make_iterate(prob, [1.0], Z=np.array([[-1.0]]))
        with pytest.raises(DomainViolation):
            merit_value(prob, it, MeritParams(1.0, 1.0))


class TestLambdaSurrogate:
    def test_nu_zero(self, curved):
        it = make_iterate(curved, [0.3, -0.2], Z=np.diag([5.0, 5.0]))
        lam = lambda_surrogate(it, MeritParams(0.4, 0.0))
        np.testing.assert_allclose(lam.mat, 0.4 * it.X.inv().mat, atol=1e-14)

    def test_central_path_any_nu(self, curved):
        it = make_iterate(curved, [0.3, -0.2])
        it = it.with_Z(SymMat(0.4 * it.X.inv().mat))
        for nu in (0.0, 0.5, 2.0):
            lam = lambda_surrogate(it, MeritParams(0.4, nu))
            np.testing.assert_allclose(lam.mat, 0.4 * it.X.inv().mat, atol=1e-13)

    def test_diagonal_worked_example(self):
        """X=diag(1,2), Z=I, mu=nu=1: Lambda = diag(2-1, 1-1) = diag(1, 0)."""
        it = Iterate(
            x=np.zeros(1), X=SymMat(np.diag([1.0, 2.0])), Z=SymMat(np.eye(2))
        )
        lam = lambda_surrogate(it, MeritParams(1.0, 1.0))
        np.testing.assert_allclose(lam.mat, np.diag([1.0, 0.0]), atol=1e-15)


class TestMeritGradX:
    def test_scalar_cancellation(self):
        """At Z = mu/x with f=0 the gradient is exactly -mu."""
        prob = LineProblem()
        for mu, nu in [(0.4, 0.6), (1.0, 0.0), (0.2, 2.0)]:
            it = make_iterate(prob, [1.0], Z=np.array([[mu]]))
            g = merit_grad_x(prob, it, MeritParams(mu, nu))
            np.testing.assert_allclose(g, [-mu], rtol=1e-14)

    def test_central_path_reduction(self, curved, rng):
        x = 0.4 * rng.standard_normal(2)
        it = make_iterate(curved, x)
        mu = 0.3
        it = it.with_Z(SymMat(mu * it.X.inv().mat))
        for nu in (0.0, 0.9):
            g = merit_grad_x(curved, it, MeritParams(mu, nu))
            expected = curved.eval_grad_f(x) - mu * adjoint_map(curved, x, it.X.inv())
            np.testing.assert_allclose(g, expected, atol=1e-12)

    def test_matches_finite_differences(self, curved, rng):
        p = MeritParams(0.5, 0.8)
        z = SymMat(np.diag([1.5, 0.8]))
        x0 = np.array([0.3, -0.4])
        it = make_iterate(curved, x0, Z=z.mat)
        g = merit_grad_x(curved, it, p)
        h = 1e-6
        fd = np.zeros(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            hi = merit_value(curved, make_iterate(curved, x0 + e, z.mat), p)
            lo = merit_value(curved, make_iterate(curved, x0 - e, z.mat), p)
            fd[i] = (hi - lo) / (2.0 * h)
        np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-8)


class TestMeritGradZ:
    def test_central_path_zero(self, curved):
        it = make_iterate(curved, [0.2, 0.5])
        it = it.with_Z(SymMat(0.6 * it.X.inv().mat))
        gz = merit_grad_Z(curved, it, MeritParams(0.6, 0.7))
        np.testing.assert_allclose(gz.mat, np.zeros((2, 2)), atol=1e-14)

    def test_nu_zero_exact_zero(self, curved):
        it = make_iterate(curved, [0.2, 0.5], Z=np.diag([2.0, 7.0]))
        gz = merit_grad_Z(curved, it, MeritParams(0.6, 0.0))
        assert np.all(gz.mat == 0.0)

    def test_scalar_worked_example(self):
        """x=2, z=1, mu=nu=1: nu*(x - mu/z) = [1]."""
        prob = LineProblem()
        it = make_iterate(prob, [2.0], Z=np.array([[1.0]]))
        gz = merit_grad_Z(prob, it, MeritParams(1.0, 1.0))
        np.testing.assert_allclose(gz.mat, [[1.0]], rtol=1e-15)


class TestMeritHessXX:
    def test_scalar_barrier_curvature(self):
        """f=0, X=x at x=1: Hessian is (1+nu)*mu."""
        prob = LineProblem()
        for mu, nu in [(1.0, 1.0), (0.3, 0.0), (0.5, 1.7)]:
            it = make_iterate(prob, [1.0], Z=np.array([[2.0]]))
            h = merit_hess_xx(prob, it, MeritParams(mu, nu))
            np.testing.assert_allclose(h.mat, [[(1.0 + nu) * mu]], rtol=1e-14)

    def test_affine_constraint_away_from_one(self):
        prob = square_line()
        mu, nu, x = 0.4, 0.9, 1.7
        it = make_iterate(prob, [x], Z=np.array([[0.8]]))
        h = merit_hess_xx(prob, it, MeritParams(mu, nu))
        np.testing.assert_allclose(h.mat, [[2.0 + (1.0 + nu) * mu / x**2]], rtol=1e-14)

    def test_matches_finite_differences_of_gradient(self, curved):
        p = MeritParams(0.5, 0.8)
        z = np.diag([1.2, 0.9])
        x0 = np.array([0.25, -0.3])
        analytic = merit_hess_xx(curved, make_iterate(curved, x0, z), p).mat
        h = 1e-6
        cols = []
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            hi = merit_grad_x(curved, make_iterate(curved, x0 + e, z), p)
            lo = merit_grad_x(curved, make_iterate(curved, x0 - e, z), p)
            cols.append((hi - lo) / (2.0 * h))
        np.testing.assert_allclose(analytic, np.column_stack(cols), rtol=1e-5, atol=1e-7)


class TestLocalLipschitz:
    def test_dual_bound_identity(self):
        """Z=I_m, mu=nu=1 gives 2m."""
        for m in (1, 3):
            prob = ConstantIdentity(m)
            it = make_iterate(prob, [0.0], Z=np.eye(m))
            np.testing.assert_allclose(
                local_lipschitz_Z(it, MeritParams(1.0, 1.0)), 2.0 * m
            )

    def test_dual_bound_vanishes_at_nu_zero(self, curved):
        it = make_iterate(curved, [0.1, 0.1])
        assert local_lipschitz_Z(it, MeritParams(1.0, 0.0)) == 0.0

    def test_primal_gradient_bound_scalar(self):
        """X=1, Z=1, mu=nu=1, L0=L1=1: 1 + 1 + 4 + 2 = 8."""
        prob = LineProblem()
        it = make_iterate(prob, [1.0], Z=np.array([[1.0]]))
        lip = LipschitzConstants(1.0, 1.0, 1.0)
        val = local_lipschitz_x(prob, it, MeritParams(1.0, 1.0), lip)
        np.testing.assert_allclose(val, 8.0, rtol=1e-15)

    def test_primal_gradient_bound_nu_zero(self):
        prob = LineProblem()
        mu, x = 0.4, 2.0
        it = make_iterate(prob, [x], Z=np.array([[9.0]]))
        lip = LipschitzConstants(1.5, 0.7, 0.0)
        val = local_lipschitz_x(prob, it, MeritParams(mu, 0.0), lip)
        expected = 0.7 + 2.0 * mu * 1.5**2 / x**2 + mu * 0.7 / x
        np.testing.assert_allclose(val, expected, rtol=1e-14)

    def test_hessian_bound_scalar(self):
        """X=1, Z=1, mu=nu=1, unit constants: 1 + 1 + 2*(1+4+6) = 24."""
        prob = LineProblem()
        it = make_iterate(prob, [1.0], Z=np.array([[1.0]]))
        lip = LipschitzConstants(1.0, 1.0, 1.0)
        val = local_lipschitz_xx(prob, it, MeritParams(1.0, 1.0), lip)
        np.testing.assert_allclose(val, 24.0, rtol=1e-15)

    def test_hessian_bound_barrier_free_limit(self):
        """nu=0, mu -> 0 leaves only L2."""
        prob = LineProblem()
        it = make_iterate(prob, [1.0], Z=np.array([[1.0]]))
        lip = LipschitzConstants(1.0, 1.0, 3.5)
        val = local_lipschitz_xx(prob, it, MeritParams(1e-13, 0.0), lip)
        np.testing.assert_allclose(val, 3.5, atol=1e-11)

    def test_unknown_constants_raise(self, curved):
        it = make_iterate(curved, [0.1, 0.1])
        p = MeritParams(0.5, 0.5)
        with pytest.raises(ConstantsRequired):
            local_lipschitz_x(curved, it, p)
        with pytest.raises(ConstantsRequired):
            local_lipschitz_xx(curved, it, p)
        partial = LipschitzConstants(1.0, 1.0, None)
        with pytest.raises(ConstantsRequired):
            local_lipschitz_xx(curved, it, p, partial)
