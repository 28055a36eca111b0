import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equip import InvalidArgumentError, eval_basis, gauss_legendre_rule, legendre_basis
from equip.legendre import MAX_STAGES, exact_inner_product, shifted_legendre


def gram_schmidt_rational(s):
    """Monic orthogonal polynomials on [0, 1] and their squared norms, in exact rationals."""

    def inner(u, v):
        return sum(Fraction(a * b) / (i + j + 1) for i, a in enumerate(u) for j, b in enumerate(v))

    polys, norms = [], []
    for k in range(s):
        p = [Fraction(0)] * k + [Fraction(1)]
        for q, nq in zip(polys, norms):
            coef = inner(p, q) / nq
            p = [pi - coef * (q[i] if i < len(q) else 0) for i, pi in enumerate(p)]
        polys.append(p)
        norms.append(inner(p, p))
    return polys, norms


class TestGaussRule:
    def test_midpoint(self):
        r = gauss_legendre_rule(1)
        np.testing.assert_array_equal(r.c, [0.5])
        np.testing.assert_array_equal(r.b, [1.0])

    def test_two_point_matches_quadratic_formula(self):
        # roots of 6 t^2 - 6 t + 1
        disc = math.sqrt(36 - 24)
        expect = sorted([(6 - disc) / 12, (6 + disc) / 12])
        r = gauss_legendre_rule(2)
        np.testing.assert_allclose(r.c, expect, rtol=0, atol=1e-15)
        np.testing.assert_allclose(r.c, [0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6], atol=1e-15)
        np.testing.assert_allclose(r.b, [0.5, 0.5], atol=1e-15)

    def test_three_point_is_mapped_classical_rule(self):
        x = np.array([-math.sqrt(3 / 5), 0.0, math.sqrt(3 / 5)])
        w = np.array([5 / 9, 8 / 9, 5 / 9])
        r = gauss_legendre_rule(3)
        np.testing.assert_allclose(r.c, (x + 1) / 2, atol=1e-15)
        np.testing.assert_allclose(r.b, w / 2, atol=1e-15)
        np.testing.assert_allclose(r.c, [0.5 - math.sqrt(15) / 10, 0.5, 0.5 + math.sqrt(15) / 10], atol=1e-15)

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_matches_numpy_leggauss(self, s):
        x, w = np.polynomial.legendre.leggauss(s)
        r = gauss_legendre_rule(s)
        np.testing.assert_allclose(r.c, (x + 1) / 2, atol=1e-14)
        np.testing.assert_allclose(r.b, w / 2, atol=1e-14)

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_exact_on_monomials(self, s):
        r = gauss_legendre_rule(s)
        for k in range(2 * s):
            assert abs(np.dot(r.b, r.c**k) - 1 / (k + 1)) <= 1e-13

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_nodes_are_polished_roots(self, s):
        r = gauss_legendre_rule(s)
        assert np.max(np.abs(shifted_legendre(s, r.c))) <= 1e-14

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_structure(self, s):
        r = gauss_legendre_rule(s)
        assert np.all(np.diff(r.c) > 0) and r.c[0] > 0 and r.c[-1] < 1
        assert np.all(r.b > 0)
        assert abs(r.b.sum() - 1) <= 1e-14
        np.testing.assert_allclose(r.c + r.c[::-1], 1.0, atol=1e-15)
        np.testing.assert_allclose(r.b, r.b[::-1], atol=1e-15)

    def test_rule_arrays_are_read_only(self):
        r = gauss_legendre_rule(3)
        with pytest.raises(ValueError):
            r.c[0] = 0.0

    def test_integrate_helper(self):
        assert gauss_legendre_rule(3).integrate(lambda t: t**5) == pytest.approx(1 / 6, abs=1e-15)

    @pytest.mark.parametrize("s", [0, -1, MAX_STAGES + 1])
    def test_out_of_range(self, s):
        with pytest.raises(InvalidArgumentError, match=f"1.*{MAX_STAGES}"):
            gauss_legendre_rule(s)
        with pytest.raises(InvalidArgumentError):
            legendre_basis(s)

    def test_non_integer_stage_count(self):
        with pytest.raises(InvalidArgumentError):
            gauss_legendre_rule(2.5)


class TestBasis:
    def test_closed_forms(self):
        np.testing.assert_array_equal(legendre_basis(1).coefficients, [[1.0]])
        c3 = legendre_basis(3).coefficients
        np.testing.assert_allclose(c3[1, :2], [-math.sqrt(3), 2 * math.sqrt(3)], atol=1e-15)
        np.testing.assert_allclose(c3[2], math.sqrt(5) * np.array([1, -6, 6]), atol=1e-14)

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_matches_gram_schmidt_oracle(self, s):
        polys, norms = gram_schmidt_rational(s)
        basis = legendre_basis(s)
        for j, (p, n2) in enumerate(zip(polys, norms)):
            expect = np.array([float(a) for a in p]) / math.sqrt(float(n2))
            # the basis is normalised with a positive leading coefficient
            np.testing.assert_allclose(basis.coefficients[j, : j + 1], expect, rtol=1e-13, atol=1e-13)
            assert np.all(basis.coefficients[j, j + 1 :] == 0)

    @pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
    def test_exact_orthonormality(self, s):
        basis = legendre_basis(s)
        for i in range(1, s + 1):
            for j in range(1, s + 1):
                assert exact_inner_product(basis, i, j) == pytest.approx(float(i == j), abs=1e-15)

    @pytest.mark.parametrize("s", range(1, 7))
    def test_discrete_orthonormality(self, s):
        r = gauss_legendre_rule(s)
        P = eval_basis(legendre_basis(s), r.c)
        np.testing.assert_allclose(P.T @ np.diag(r.b) @ P, np.eye(s), atol=1e-12)

    def test_eval_examples(self):
        b2, b3 = legendre_basis(2), legendre_basis(3)
        np.testing.assert_allclose(eval_basis(b2, 0.5), [1, 0], atol=1e-15)
        np.testing.assert_allclose(eval_basis(b2, 1.0), [1, math.sqrt(3)], atol=1e-15)
        np.testing.assert_allclose(eval_basis(b3, 0.0), [1, -math.sqrt(3), math.sqrt(5)], atol=1e-15)

    def test_eval_shapes(self):
        b = legendre_basis(4)
        assert eval_basis(b, 0.3).shape == (4,)
        assert eval_basis(b, np.zeros((2, 5))).shape == (2, 5, 4)
        np.testing.assert_array_equal(b(0.3), eval_basis(b, 0.3))

    @settings(max_examples=200, deadline=None)
    @given(s=st.integers(1, MAX_STAGES), tau=st.floats(-1.0, 2.0))
    def test_recurrence_matches_coefficient_table(self, s, tau):
        b = legendre_basis(s)
        table = np.array([np.polynomial.polynomial.polyval(tau, row) for row in b.coefficients])
        np.testing.assert_allclose(eval_basis(b, tau), table, rtol=1e-9, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(s=st.integers(1, MAX_STAGES), tau=st.floats(0.0, 1.0))
    def test_parity_about_one_half(self, s, tau):
        # P_j(1 - tau) = (-1)^(j-1) P_j(tau)
        b = legendre_basis(s)
        signs = (-1.0) ** np.arange(s)
        np.testing.assert_allclose(eval_basis(b, 1 - tau), signs * eval_basis(b, tau), atol=1e-11)
