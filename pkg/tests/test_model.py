import numpy as np
import pytest

from conftest import make_params, rel_dev, rng
from sovxxz.errors import ParameterError, SingularEvaluationError
from sovxxz.model import (
    IPI,
    HalfPeriodTrigPoly,
    ModelParams,
    TrigInterpolation,
    a_frak,
    eval_half_poly,
    eval_model_fns,
    eval_ratios,
    q_structure_residuals,
    wrap_to_strip,
)


class TestHalfPeriodTrigPoly:
    def test_vanishes_at_root(self):
        poly = HalfPeriodTrigPoly.from_roots([0.3 + 0.2j, -0.5 - 0.1j])
        assert abs(eval_half_poly(poly, 0.3 + 0.2j)) < 1e-15

    def test_vanishes_at_root_plus_2pi_i(self):
        poly = HalfPeriodTrigPoly.from_roots([0.3 + 0.2j, -0.5 - 0.1j])
        assert abs(poly(0.3 + 0.2j + 2j * np.pi)) < 1e-12

    def test_double_periodicity(self):
        g = rng(1)
        poly = HalfPeriodTrigPoly.from_roots(
            [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(2)])
        lam = complex(g.uniform(-1, 1), g.uniform(-1, 1))
        assert rel_dev(poly(lam + 2j * np.pi), poly(lam)) < 1e-12

    def test_roots_wrapped_and_sorted(self):
        poly = HalfPeriodTrigPoly.from_roots([0.1 + 4.0j, -0.2 - 3.5j])
        assert all(-np.pi < q.imag <= np.pi for q in poly.roots)
        assert list(poly.roots) == sorted(poly.roots, key=lambda z: (z.real, z.imag))

    def test_log_deriv_matches_finite_difference(self):
        poly = HalfPeriodTrigPoly.from_roots([0.3 + 0.2j, -0.5 - 0.1j, 0.9j])
        lam, h = 0.7 - 0.4j, 1e-6
        fd = (poly(lam + h) - poly(lam - h)) / (2 * h * poly(lam))
        assert abs(poly.log_deriv(lam) - fd) < 1e-6


class TestModelParams:
    def test_commensurate_eta_rejected(self):
        with pytest.raises(ParameterError):
            make_params(2, eta=1j * np.pi / 2)

    def test_coincident_xi_rejected(self):
        with pytest.raises(ParameterError):
            ModelParams(n=2, eta=0.6 + 0.35j, xi=(0.1 + 0.0j, 0.1 + 0.0j))

    def test_xi_collision_mod_ipi_rejected(self):
        with pytest.raises(ParameterError):
            ModelParams(n=2, eta=0.6 + 0.35j,
                        xi=(0.1 + 0.2j, 0.1 + 0.2j + 1j * np.pi))

    def test_zero_twist_rejected(self):
        with pytest.raises(ParameterError):
            make_params(2, kappa=0.0)

    def test_model_fn_zeros(self, params3):
        a, d = eval_model_fns(params3, params3.xi[0])
        assert abs(d) < 1e-15
        a2, _ = eval_model_fns(params3, params3.xi[0] - params3.eta)
        assert abs(a2) < 1e-15

    def test_d_equals_shifted_a(self, params3):
        lam = 0.37 + 0.21j
        a, _ = eval_model_fns(params3, lam - params3.eta)
        _, d = eval_model_fns(params3, lam)
        assert rel_dev(a, d) < 1e-14

    def test_prime_matches_finite_difference(self, params3):
        lam, h = 0.4 - 0.3j, 1e-6
        fd_a = (params3.a_fn(lam + h) - params3.a_fn(lam - h)) / (2 * h)
        fd_d = (params3.d_fn(lam + h) - params3.d_fn(lam - h)) / (2 * h)
        assert abs(params3.a_prime(lam) - fd_a) < 1e-6
        assert abs(params3.d_prime(lam) - fd_d) < 1e-6


class TestRatios:
    def test_ratios_match_direct_products(self, params3):
        g = rng(2)
        p = HalfPeriodTrigPoly.from_roots(
            [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(3)])
        q = HalfPeriodTrigPoly.from_roots(
            [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(3)])
        u = 0.9 - 0.55j
        r = eval_ratios(p, q, params3, u)
        eta = params3.eta
        f_pq = p(u) * q(u) / (p(u - eta) * q(u - eta))
        f_t = p(u - eta + IPI) * q(u) / (p(u + IPI) * q(u - eta))
        af = params3.d_fn(u) * q(u + eta) / (params3.a_fn(u) * q(u - eta))
        assert rel_dev(r.f_pq, f_pq) < 1e-12
        assert rel_dev(r.f_tilde, f_t) < 1e-12
        assert rel_dev(r.a_frak, af) < 1e-12

    def test_f_tilde_vanishes_at_q_root(self, params3, records3):
        q = records3[0].q_poly
        p = records3[1].q_poly
        r = eval_ratios(p, q, params3, q.roots[0])
        assert abs(r.f_tilde) < 1e-12

    def test_f_tilde_equal_functions_is_minus_one_at_nodes(self, params3, records3):
        q = records3[2].q_poly
        for x in params3.xi:
            r = eval_ratios(q, q, params3, x)
            assert abs(r.f_tilde + 1.0) < 1e-10

    def test_singular_denominator_raises(self, params3):
        q = HalfPeriodTrigPoly.from_roots([0.2, -0.3, 0.5])
        with pytest.raises(SingularEvaluationError):
            eval_ratios(q, q, params3, q.roots[0] + params3.eta)

    def test_bethe_ratio_is_one_on_certified_roots(self, params3, records3):
        for rec in records3:
            for root in rec.q_poly.roots:
                assert abs(a_frak(params3, rec.q_poly, root) - 1.0) < 1e-7

    def test_bra_ket_ratio_identity_at_nodes(self, params3, records3):
        # Q(xi - eta)/Q(xi) = -Qhat(xi - eta)/Qhat(xi) for certified pairs
        for rec in records3:
            for x in params3.xi:
                lhs = rec.q_poly(x - params3.eta) / rec.q_poly(x)
                rhs = -rec.qhat_poly(x - params3.eta) / rec.qhat_poly(x)
                assert rel_dev(lhs, rhs) < 1e-8


class TestStructureResiduals:
    def test_certified_q_passes_wronskian_and_sum_rule(self, params3, records3):
        for rec in records3:
            report = q_structure_residuals(rec.q_poly, params3)
            assert report.wronskian_residual < 1e-8
            assert report.sum_rule_defect < 1e-8
            assert report.wronskian_sign in (-1, 1)

    def test_random_roots_violate_bra_ket_compat(self, params3):
        g = rng(4)
        poly = HalfPeriodTrigPoly.from_roots(
            [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(3)])
        report = q_structure_residuals(poly, params3)
        assert report.pq_prop_residual > 1e-3

    def test_n1_midpoint_root_has_zero_defect(self):
        params = make_params(1)
        poly = HalfPeriodTrigPoly.from_roots([params.xi[0] - params.eta / 2])
        report = q_structure_residuals(poly, params)
        assert report.sum_rule_defect < 1e-14
        assert report.sum_rule_k == 0


class TestTrigInterpolation:
    def test_reproduces_nodes_and_derivative(self, params3):
        g = rng(6)
        vals = [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(3)]
        interp = TrigInterpolation(params3.xi, vals)
        for x, v in zip(params3.xi, vals):
            assert rel_dev(interp(x), v) < 1e-12
        lam, h = 0.3 + 0.4j, 1e-6
        fd = (interp(lam + h) - interp(lam - h)) / (2 * h)
        assert abs(interp.deriv(lam) - fd) < 1e-6

    def test_quasi_periodicity(self, params3):
        g = rng(8)
        vals = [complex(g.uniform(-1, 1), g.uniform(-1, 1)) for _ in range(3)]
        interp = TrigInterpolation(params3.xi, vals)
        lam = 0.21 - 0.13j
        assert rel_dev(interp(lam + 1j * np.pi),
                       (-1.0) ** (params3.n - 1) * interp(lam)) < 1e-12


def test_wrap_to_strip():
    assert abs(wrap_to_strip(0.5 + 7j) - (0.5 + (7 - 2 * np.pi) * 1j)) < 1e-15
    assert wrap_to_strip(0.5 + 1j * np.pi) == 0.5 + 1j * np.pi
    assert abs(wrap_to_strip(0.5 - 1j * np.pi) - (0.5 + 1j * np.pi)) < 1e-15
