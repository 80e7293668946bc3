"""Multispace reduced-basis preconditioner and its training loop."""

import numpy as np
import pytest
import scipy.sparse as sp

from rbws.kernels import Smoother
from rbws.krylov import pcg_solve
from rbws.msrb import (MsrbHierarchy, msrb_apply, msrb_richardson, msrb_train,
                       msrbcg_solve)
from rbws.rb import PodBasis, pod_build, rbm_pod_solve


def small_spd(n=3, seed=0):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return sp.csr_matrix(M @ M.T + n * np.eye(n))


def empty_hierarchy(n):
    init = PodBasis(basis=np.zeros((n, 0)), eigenvalues=np.zeros(1),
                    n_snapshots=0)
    return MsrbHierarchy(init_basis=init, bases=(), N=0, K_max=0)


def test_apply_zero_rhs():
    A = small_spd()
    W = np.linalg.qr(np.random.default_rng(1).standard_normal((3, 2)))[0]
    assert np.allclose(msrb_apply(np.zeros(3), A, W), 0.0)


def test_apply_full_space_exact():
    A = small_spd()
    b = np.array([1.0, -2.0, 0.5])
    out = msrb_apply(b, A, np.eye(3))
    assert np.allclose(out, np.linalg.solve(A.toarray(), b), atol=1e-12)


def test_apply_empty_basis_is_smoother_sweep():
    A = small_spd()
    b = np.array([1.0, 2.0, 3.0])
    out = msrb_apply(b, A, np.zeros((3, 0)))
    ref = Smoother(A).sweep(np.zeros(3), b, "gauss-seidel-symmetric", 1)
    assert np.allclose(out, ref, atol=1e-14)


def test_apply_linearity():
    A = small_spd(6, 2)
    rng = np.random.default_rng(3)
    W = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    x, y = rng.standard_normal(6), rng.standard_normal(6)
    lhs = msrb_apply(2.0 * x - 3.0 * y, A, W)
    rhs = 2.0 * msrb_apply(x, A, W) - 3.0 * msrb_apply(y, A, W)
    assert np.allclose(lhs, rhs, rtol=1e-11, atol=1e-12)


def test_correction_is_a_orthogonal_projection_of_error():
    # the reduced correction cannot beat the best A-norm approximation of
    # the post-smoothing error in span(W); Galerkin attains it exactly
    A = small_spd(8, 4)
    Ad = A.toarray()
    rng = np.random.default_rng(5)
    W = np.linalg.qr(rng.standard_normal((8, 3)))[0]
    b = rng.standard_normal(8)
    x_star = np.linalg.solve(Ad, b)
    u_half = Smoother(A).sweep(np.zeros(8), b, "gauss-seidel-symmetric", 1)
    e_half = x_star - u_half
    u_after = msrb_apply(b, A, W)
    e_after = x_star - u_after

    AW = Ad @ W
    proj = W @ np.linalg.solve(W.T @ AW, AW.T @ e_half)
    best = e_half - proj
    a_norm = lambda v: np.sqrt(v @ (Ad @ v))
    assert a_norm(e_after) >= a_norm(best) - 1e-12
    assert a_norm(e_after) == pytest.approx(a_norm(best), rel=1e-10)


def test_empty_hierarchy_reduces_to_smoother_preconditioned_cg():
    A = small_spd(12, 6)
    rng = np.random.default_rng(7)
    f = rng.standard_normal(12)
    hier = empty_hierarchy(12)
    x1, rep1 = msrbcg_solve(A, f, np.zeros(12), hier, delta=1e-10)
    sm = Smoother(A)
    precond = lambda r, k: sm.sweep(np.zeros(12), r, "gauss-seidel-symmetric", 1)
    x2, rep2 = pcg_solve(A, f, np.zeros(12), precond=precond, delta=1e-10)
    assert rep1.iterations == rep2.iterations
    assert np.allclose(rep1.history, rep2.history, rtol=1e-12)


class TestTraining:
    def test_kmax_zero_keeps_only_init_space(self, ex1_desk, ex1_train, ex1_hf):
        hier = msrb_train(ex1_train[:6], 3, 0, ex1_hf, ex1_desk.operator,
                          ex1_desk.rhs)
        assert hier.bases == ()
        assert hier.init_basis.dim == 3
        assert hier.basis_for(0).shape[1] == 0

    def test_trained_hierarchy_shape(self, ex1_msrb10):
        assert ex1_msrb10.N == 10
        assert ex1_msrb10.K_max == 8
        assert len(ex1_msrb10.bases) == 8
        assert len(ex1_msrb10.spectra) == 8
        for W in ex1_msrb10.bases:
            assert np.allclose(W.T @ W, np.eye(W.shape[1]), atol=1e-11)
        # index past the last trained space reuses the final basis
        assert ex1_msrb10.basis_for(50) is ex1_msrb10.bases[-1]

    def test_error_equation_consistency(self, ex1_desk, ex1_hf):
        mu = np.array([1.0, 0.5])
        A = ex1_desk.operator(mu)
        rng = np.random.default_rng(8)
        r = rng.standard_normal(A.shape[0])
        e = ex1_hf(mu, r)
        assert np.linalg.norm(A @ e - r) / np.linalg.norm(r) < 1e-10

    def test_negative_kmax_rejected(self, ex1_desk, ex1_train, ex1_hf):
        with pytest.raises(ValueError):
            msrb_train(ex1_train[:4], 2, -1, ex1_hf, ex1_desk.operator,
                       ex1_desk.rhs)


class TestRichardson:
    def test_exact_bases_converge_in_one_iteration(self):
        A = small_spd(5, 9)
        rng = np.random.default_rng(10)
        f = rng.standard_normal(5)
        init = PodBasis(basis=np.eye(5), eigenvalues=np.ones(5), n_snapshots=5)
        hier = MsrbHierarchy(init_basis=init, bases=(np.eye(5),), N=5, K_max=1)
        x, history, halves = msrb_richardson(A, f, hier, delta=1e-12, l_max=5)
        assert history[0] <= 1e-12 or len(history) <= 2
        assert np.allclose(x, np.linalg.solve(A.toarray(), f), atol=1e-10)

    def test_history_non_increasing_until_stagnation(self, ex1_desk,
                                                     ex1_msrb10, ex1_test):
        mu = ex1_test[0]
        A, f = ex1_desk.operator(mu), ex1_desk.rhs(mu)
        x, history, halves = msrb_richardson(A, f, ex1_msrb10, delta=1e-14,
                                             l_max=15)
        floor = 1e-12
        for a, b in zip(history, history[1:]):
            if a > floor:
                assert b <= a * (1 + 1e-10)

    def test_half_residual_definition(self, ex1_desk, ex1_msrb10, ex1_test):
        mu = ex1_test[1]
        A, f = ex1_desk.operator(mu), ex1_desk.rhs(mu)
        x, history, halves = msrb_richardson(A, f, ex1_msrb10, delta=1e-14,
                                             l_max=6, record_half_residuals=True)
        # replay the first step independently
        sm = Smoother(A)
        u0 = rbm_pod_solve(A, f, ex1_msrb10.init_basis.basis)
        r0 = f - A @ u0
        u_half = u0 + sm.sweep(np.zeros_like(f), r0, "gauss-seidel-symmetric", 1)
        r_half = f - A @ u_half
        assert np.linalg.norm(halves[0] - r_half) <= 1e-12 * np.linalg.norm(r_half)
