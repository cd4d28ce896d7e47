import cmath

import numpy as np
import pytest

from conftest import make_params, rel_dev, rng
from sovxxz import observables as obs
from sovxxz.errors import ParameterError
from sovxxz.lattice import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    local_op,
    monodromy_entries,
)
from sovxxz.linalg import det_lu
from sovxxz.model import HalfPeriodTrigPoly
from sovxxz.sov import matrix_element, overlap, separate_state


def random_poly(g, n, box=1.0):
    return HalfPeriodTrigPoly.from_roots(
        [complex(g.uniform(-box, box), g.uniform(-box, box)) for _ in range(n)])


class TestScalarProductDirect:
    def test_n1_closed_form(self):
        params = make_params(1)
        g = rng(51)
        p = random_poly(g, 1)
        q = random_poly(g, 1)
        alpha = 0.7 - 0.2j
        x, eta = params.xi[0], params.eta
        expected = 1 + alpha * p(x) * q(x) / (p(x - eta) * q(x - eta))
        assert rel_dev(obs.sp_direct(params, p, q, alpha), expected) < 1e-13

    def test_matches_exhaustive_sum(self, params3):
        g = rng(52)
        p = random_poly(g, 3)
        q = random_poly(g, 3)
        alpha = complex(g.uniform(-1, 1), g.uniform(-1, 1))
        a = obs.sp_direct(params3, p, q, alpha)
        b = obs.sp_sov_sum(params3, p, q, alpha)
        assert rel_dev(a, b) < 1e-10

    def test_matches_embedded_inner_product(self, params3):
        g = rng(53)
        p = random_poly(g, 3)
        q = random_poly(g, 3)
        kappa, kappa2, eps, eps2 = params3.kappa, params3.kappa2, 1, -1
        alpha = eps * eps2 * kappa2 / kappa
        bra = separate_state(params3, p, kappa, eps, "bra")
        ket = separate_state(params3, q, kappa2, eps2, "ket")
        assert rel_dev(obs.sp_direct(params3, p, q, alpha),
                       overlap(bra, ket)) < 1e-9


class TestScalarProductIzergin:
    def test_alpha_zero_is_one(self, params3):
        g = rng(54)
        p = random_poly(g, 3)
        q = random_poly(g, 3)
        assert obs.sp_izergin(params3, p, q, 0.0) == pytest.approx(1.0)

    def test_agrees_with_direct_for_generic_functions(self, params3):
        # only the root-location condition is needed here, not eigen data
        g = rng(55)
        for _ in range(3):
            p = random_poly(g, 3)
            q = random_poly(g, 3)
            alpha = complex(g.uniform(-1, 1), g.uniform(-1, 1))
            a = obs.sp_direct(params3, p, q, alpha)
            b = obs.sp_izergin(params3, p, q, alpha)
            assert rel_dev(a, b) < 1e-9

    def test_equal_functions_reduce_to_twisted_izergin(self, params3, records3):
        # the weight collapses to -1 at the nodes, leaving the plain
        # alpha-twisted kernel evaluated by sp_same_q
        alpha = 0.4 + 0.9j
        for rec in records3[:3]:
            a = obs.sp_izergin(params3, rec.q_poly, rec.q_poly, alpha)
            b, _ = obs.sp_same_q(params3, rec.q_poly, alpha)
            assert rel_dev(a, b) < 1e-10


class TestScalarProductSlavnov:
    def test_requires_compatibility_condition(self, params3):
        g = rng(56)
        p = random_poly(g, 3)
        q = random_poly(g, 3)
        with pytest.raises(ParameterError):
            obs.sp_slavnov(params3, p, q, 0.5)

    def test_synthetic_shifted_pair(self, params3):
        # P carrying the i*pi-shifted roots of Q satisfies the compatibility
        # condition identically, without any eigen data
        g = rng(57)
        q = random_poly(g, 3)
        p = q.shifted_ipi()
        assert obs.cond_pq_residual(params3, p, q) < 1e-12
        for alpha in (0.3 + 0.4j, -1.2j):
            a = obs.sp_izergin(params3, p, q, alpha)
            b = obs.sp_slavnov(params3, p, q, alpha)
            assert rel_dev(a, b) < 1e-10

    def test_eigen_pairs_all_representations(self, params3, records3, states3):
        bras, _, kets2 = states3
        alpha = params3.kappa2 / params3.kappa
        for ip in (0, 3, 5):
            for iq in (1, 4, 5, 7):
                rp, rq = records3[ip], records3[iq]
                dense = overlap(bras[ip], kets2[iq])
                scale = bras[ip].norm2() * kets2[iq].norm2()
                vals = [
                    obs.sp_direct(params3, rp.q_poly, rq.q_poly, alpha),
                    obs.sp_izergin(params3, rp.q_poly, rq.q_poly, alpha),
                    obs.sp_slavnov(params3, rp.q_poly, rq.q_poly, alpha),
                    *obs.sp_tau(params3, rp, rq, params3.kappa, params3.kappa2),
                    dense,
                ]
                for a in vals:
                    for b in vals:
                        assert rel_dev(a, b, scale) < 1e-7

    def test_gamma_deformation(self, params3, records3):
        g = rng(58)
        rp, rq = records3[0], records3[2]
        alpha = params3.kappa2 / params3.kappa
        base = obs.sp_slavnov(params3, rp.q_poly, rq.q_poly, alpha)
        for _ in range(3):
            gamma = complex(g.uniform(-1, 1), g.uniform(-1, 1))
            val = obs.sp_slavnov(params3, rp.q_poly, rq.q_poly, alpha, gamma=gamma)
            assert rel_dev(val, base) < 1e-8

    def test_denominator_closed_form(self, params3, records3):
        for rp, rq in [(records3[0], records3[1]), (records3[2], records3[6])]:
            det = det_lu(obs.coth_cauchy_matrix(params3, rp.q_poly, rq.q_poly))
            closed = obs.coth_cauchy_closed_form(params3, rp.q_poly, rq.q_poly)
            assert rel_dev(det, closed) < 1e-10

    def test_equal_function_limit_against_perturbation(self, params3, records3):
        # diagonal entries use an analytic limit; perturbing the column roots
        # must converge to the same value
        rec = records3[1]
        alpha = 0.8 + 0.1j
        exact = obs.sp_slavnov(params3, rec.q_poly, rec.q_poly, alpha)
        eps_roots = [q + 1e-6 for q in rec.q_poly.roots]
        near = obs.sp_slavnov(params3, HalfPeriodTrigPoly.from_roots(eps_roots),
                              rec.q_poly, alpha, cond_tol=1e-4)
        assert rel_dev(exact, near) < 1e-4


class TestProductIdentity:
    def test_identity_on_eigen_pairs(self, params3, records3):
        g = rng(59)
        for ip, iq in [(0, 1), (2, 6), (3, 4)]:
            p_poly, q_poly = records3[ip].q_poly, records3[iq].q_poly
            for _ in range(5):
                alpha = complex(g.uniform(-1, 1), g.uniform(-1, 1))
                beta = complex(g.uniform(-1, 1), g.uniform(-1, 1))
                lhs, rhs, dev = obs.sp_product_check(params3, p_poly, q_poly,
                                                     alpha, beta)
                assert dev < 1e-7

    def test_equal_parameters_square(self, params3, records3):
        p_poly, q_poly = records3[0].q_poly, records3[5].q_poly
        alpha = 0.6 - 0.9j
        lhs, rhs, dev = obs.sp_product_check(params3, p_poly, q_poly, alpha, alpha)
        square = obs.sp_slavnov(params3, p_poly, q_poly, alpha) ** 2
        assert dev < 1e-7
        assert rel_dev(rhs, square) < 1e-7

    def test_bethe_cancellation_of_last_line(self, params3, records3):
        alpha = 0.7 - 0.4j
        beta = cmath.exp(params3.eta) / alpha
        _, last, scale = obs.product_matrix(
            params3, records3[0].q_poly, records3[1].q_poly, alpha, beta)
        assert np.max(np.abs(last)) < 1e-8 * scale


class TestTauRepresentations:
    def test_z_independence(self, params3, records3):
        rp, rq = records3[1], records3[6]
        _, with_q = obs.sp_tau(params3, rp, rq, params3.kappa, params3.kappa2,
                               z=list(rq.q_poly.roots))
        _, with_p = obs.sp_tau(params3, rp, rq, params3.kappa, params3.kappa2,
                               z=list(rp.q_poly.roots))
        assert rel_dev(with_q, with_p) < 1e-8

    def test_diagonal_specialization_matches_same_q(self, params3, records3):
        rec = records3[2]
        alpha = 1.0
        ize, slav = obs.sp_tau(params3, rec, rec, params3.kappa, params3.kappa)
        ize2, compact = obs.sp_same_q(params3, rec.q_poly, alpha)
        assert rel_dev(ize, ize2) < 1e-9
        assert rel_dev(slav, compact) < 1e-8


class TestSameQ:
    def test_forms_agree_on_certified_q(self, params3, records3):
        alpha = params3.kappa2 / params3.kappa
        for rec in records3[:4]:
            a, b = obs.sp_same_q(params3, rec.q_poly, alpha)
            assert rel_dev(a, b) < 1e-9

    def test_alpha_zero(self, params3, records3):
        a, b = obs.sp_same_q(params3, records3[0].q_poly, 0.0)
        assert a == pytest.approx(1.0)
        assert b == pytest.approx(1.0)

    def test_matches_dense_norm(self, params3, records3):
        kappa, kappa2, eps, eps2 = params3.kappa, params3.kappa2, 1, 1
        alpha = eps * eps2 * kappa2 / kappa
        for rec in records3[:4]:
            bra = separate_state(params3, rec.q_poly, kappa, eps, "bra")
            ket = separate_state(params3, rec.q_poly, kappa2, eps2, "ket")
            dense = overlap(bra, ket)
            a, b = obs.sp_same_q(params3, rec.q_poly, alpha)
            assert rel_dev(a, dense) < 1e-9
            assert rel_dev(b, dense) < 1e-9


class TestFormFactors:
    def test_sigma_z_against_dense(self, params3, records3, states3):
        bras, kets, _ = states3
        for ip in (0, 2, 5):
            for iq in (1, 2, 7):
                scale = bras[ip].norm2() * kets[iq].norm2()
                for site in (1, 2, 3):
                    bf = matrix_element(bras[ip], local_op(SIGMA_Z, site, 3),
                                        kets[iq])
                    roots_v = obs.ff_sigma_z(params3, records3[ip], records3[iq],
                                             site, "roots")
                    tau_v = obs.ff_sigma_z(params3, records3[ip], records3[iq],
                                           site, "tau")
                    assert rel_dev(roots_v, bf, scale) < 1e-7
                    assert rel_dev(tau_v, bf, scale) < 1e-7
                    assert rel_dev(roots_v, tau_v, scale) < 1e-8

    def test_spin_flip_against_dense_lowering(self, params3, records3, states3):
        bras, kets, _ = states3
        for ip in (0, 3, 6):
            for iq in (0, 4, 5):
                scale = bras[ip].norm2() * kets[iq].norm2()
                for site in (1, 2, 3):
                    bf = matrix_element(bras[ip], local_op(SIGMA_MINUS, site, 3),
                                        kets[iq])
                    roots_v = obs.ff_sigma_pm(params3, records3[ip], records3[iq],
                                              params3.kappa, 1, site, "roots")
                    tau_v = obs.ff_sigma_pm(params3, records3[ip], records3[iq],
                                            params3.kappa, 1, site, "tau")
                    assert rel_dev(roots_v, bf, scale) < 1e-7
                    assert rel_dev(tau_v, bf, scale) < 1e-7
                    assert rel_dev(roots_v, tau_v, scale) < 1e-8

    def test_raising_lowering_ratio_structure(self, params3, records3, states3):
        # the raising and lowering matrix elements differ by kappa^{-2} times
        # a pair-dependent sign; at kappa = 1 the two agree up to sign
        bras, kets, _ = states3
        for ip in (0, 1):
            for iq in (0, 1, 7):
                scale = bras[ip].norm2() * kets[iq].norm2()
                for site in (1, 2):
                    plus = matrix_element(bras[ip], local_op(SIGMA_PLUS, site, 3),
                                          kets[iq])
                    minus = matrix_element(bras[ip], local_op(SIGMA_MINUS, site, 3),
                                           kets[iq])
                    if abs(minus) > 1e-6 * scale:
                        ratio = plus / minus
                        assert min(abs(ratio - 1), abs(ratio + 1)) < 1e-8

    def test_diagonal_sigma_z_reality_in_hermitian_class(self):
        # twist kappa = 1, imaginary eta, real nodes: diagonal expectation
        # values divided by the state norm are real (here structurally zero)
        params = make_params(3, eta=0.75j, kappa=1.0, kappa2=1.0)
        from sovxxz.spectrum import solve_spectrum
        records = solve_spectrum(params)
        for rec in records[:4]:
            norm = obs.sp_same_q(params, rec.q_poly, 1.0)[0]
            val = obs.ff_sigma_z(params, rec, rec, 2, "roots") / norm
            assert abs(val.imag) < 1e-8

    def test_rank1_decomposition_structure(self, params3, records3):
        # det(S - P) = det(S) (1 - v^T S^{-1} u) for the rank-1 P = u v^T
        rp, rq = records3[0], records3[3]
        s_mat = obs.slavnov_matrix(params3, rp.q_poly, rq.q_poly, 1.0)
        p_mat = obs._rank1_sigma_z(params3, rp.q_poly, rq.q_poly, 2)
        assert np.linalg.matrix_rank(p_mat, tol=1e-10) == 1
        direct = det_lu(s_mat - p_mat)
        u, s, vh = np.linalg.svd(p_mat)
        col = u[:, 0] * s[0]
        row = vh[0]
        woodbury = det_lu(s_mat) * (1 - row @ np.linalg.solve(s_mat, col))
        assert rel_dev(direct, woodbury) < 1e-8


class TestGenericArgumentMatrixElements:
    def test_b_element_against_dense(self, params3, records3):
        g = rng(60)
        kappa, kappa2 = params3.kappa, params3.kappa2
        bras = [separate_state(params3, r.q_poly, kappa, 1, "bra")
                for r in records3[:4]]
        kets2 = [separate_state(params3, r.q_poly, kappa2, 1, "ket")
                 for r in records3[:4]]
        for _ in range(3):
            mu = complex(g.uniform(-0.8, 0.8), g.uniform(-0.8, 0.8))
            blocks = monodromy_entries(params3, mu)
            for ip, iq in [(0, 1), (2, 3), (1, 1)]:
                bf = matrix_element(bras[ip], blocks.b, kets2[iq])
                val = obs.matel_b(params3, records3[ip], records3[iq],
                                  kappa, kappa2, 1, 1, mu)
                scale = bras[ip].norm2() * kets2[iq].norm2()
                assert rel_dev(val, bf, scale) < 1e-7

    def test_d_element_against_dense(self, params3, records3, states3):
        g = rng(61)
        bras, kets, _ = states3
        for _ in range(3):
            mu = complex(g.uniform(-0.8, 0.8), g.uniform(-0.8, 0.8))
            blocks = monodromy_entries(params3, mu)
            for ip, iq in [(0, 1), (3, 6), (4, 4)]:
                bf = matrix_element(bras[ip], blocks.d, kets[iq])
                val = obs.matel_d(params3, records3[ip], records3[iq], mu)
                scale = bras[ip].norm2() * kets[iq].norm2()
                assert rel_dev(val, bf, scale) < 1e-7


class TestIdentityBench:
    def test_all_residuals(self, params3, records3):
        bench = obs.identity_bench(params3, records=records3)
        for name, value in bench.items():
            tol = 1e-6 if name.startswith("extension") else 1e-9
            assert value < tol, f"{name}: {value:.3e}"
