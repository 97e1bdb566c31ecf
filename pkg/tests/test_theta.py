import itertools
import math

import numpy as np
import pytest
from scipy.special import gamma

from thetakernels.errors import (NotPositiveDefinite, PointOnTheta,
                                 ToleranceTooSmall)
from thetakernels.theta import (Characteristic, RiemannMatrix, ScaledComplex,
                                ThetaRequest, lattice_points,
                                log_theta_hessian, second_order_theta_basis,
                                theta, theta_value)


def brute_theta(z, omega, char=None, deriv=None, box=10):
    """Independent oracle: direct sum over the integer box |n_i| <= box."""
    omega = np.asarray(omega, dtype=complex)
    g = omega.shape[0]
    z = np.asarray(z, dtype=complex).reshape(-1)
    if char is None:
        alpha = beta = np.zeros(g)
    else:
        alpha = np.asarray(char.alpha, float) / 2
        beta = np.asarray(char.beta, float) / 2
    if deriv is None:
        deriv = (0,) * g
    total = 0j
    for n in itertools.product(range(-box, box + 1), repeat=g):
        na = np.asarray(n, float) + alpha
        term = np.exp(1j * np.pi * na @ omega @ na
                      + 2j * np.pi * na @ (z + beta))
        for k, dk in enumerate(deriv):
            if dk:
                term *= (2j * np.pi * na[k]) ** dk
        total += term
    return total


def sc_value(x: ScaledComplex) -> complex:
    return x.value


def random_riemann(rng, g):
    """Random moderately reduced Riemann matrix with Im eigenvalues ~ 1."""
    a = rng.standard_normal((g, g))
    y = 0.25 * (a @ a.T) + np.eye(g)
    x = rng.uniform(-0.5, 0.5, (g, g))
    x = 0.5 * (x + x.T)
    return RiemannMatrix(x + 1j * y)


class TestRiemannMatrix:
    def test_symmetrized_and_pd(self):
        om = RiemannMatrix([[1e-3 + 1j, 0.2], [0.2 + 1e-12, 0.1 + 1.5j]])
        assert np.allclose(om.entries, om.entries.T, atol=0)
        assert np.all(np.linalg.eigvalsh(om.im) > 0)

    def test_rejects_non_pd(self):
        with pytest.raises(NotPositiveDefinite):
            RiemannMatrix([[1 - 1j]])
        with pytest.raises(NotPositiveDefinite):
            RiemannMatrix(np.array([[1j, 2j], [2j, 1j]]))


class TestLatticePoints:
    def test_g1_radius_pi(self):
        om = RiemannMatrix([[1j]])
        pts = lattice_points(om, [0.0], math.pi)
        assert [int(p[0]) for p in pts] == [-1, 0, 1]

    def test_empty_ellipsoid(self):
        om = RiemannMatrix([[1j]])
        pts = lattice_points(om, [0.5], 0.5)  # ||T * 0.5|| = sqrt(pi)/2 > 0.5
        assert pts == []

    def test_g2_unit_ball(self):
        om = RiemannMatrix(1j * np.eye(2))
        pts = lattice_points(om, [0.0, 0.0], math.sqrt(math.pi))
        got = {tuple(int(c) for c in p) for p in pts}
        # brute force over the |n|_inf <= 3 box
        T = om.chol
        expected = set()
        for n in itertools.product(range(-3, 4), repeat=2):
            if np.linalg.norm(T @ np.asarray(n, float)) <= math.sqrt(math.pi):
                expected.add(n)
        assert got == expected and len(got) == 5

    def test_lexicographic_order(self):
        om = RiemannMatrix(1j * np.eye(2))
        pts = lattice_points(om, [0.1, -0.2], 4.0)
        tups = [tuple(int(c) for c in p) for p in pts]
        assert tups == sorted(tups)


class TestThetaValues:
    def test_g1_lemniscatic_value(self):
        om = RiemannMatrix([[1j]])
        val = sc_value(theta_value([0.0], om))
        oracle = brute_theta([0.0], [[1j]])
        assert abs(val - oracle) < 1e-12
        # closed form: pi^(1/4) / Gamma(3/4)
        assert abs(val - math.pi ** 0.25 / gamma(0.75)) < 1e-12
        assert abs(val - 1.08643481121331) < 1e-12

    def test_matches_brute_force_g2(self):
        rng = np.random.default_rng(7)
        om = random_riemann(rng, 2)
        for _ in range(4):
            z = rng.standard_normal(2) + 1j * rng.uniform(-0.4, 0.4, 2)
            got = sc_value(theta_value(z, om))
            assert abs(got - brute_theta(z, om.entries)) < 1e-10

    def test_odd_characteristic_vanishes(self):
        rng = np.random.default_rng(3)
        for g in (1, 2):
            om = random_riemann(rng, g)
            for char in Characteristic.all(g):
                if char.parity == 1:
                    v = theta_value([0.0] * g, om, char=char)
                    assert abs(v.mantissa) * math.exp(min(v.exponent, 0.0)) < 1e-10

    def test_quasi_periodicity(self):
        rng = np.random.default_rng(11)
        for g in (1, 2):
            om = random_riemann(rng, g)
            z = rng.standard_normal(g) + 1j * rng.uniform(-0.3, 0.3, g)
            m = np.ones(g)
            n = np.ones(g)
            lhs = theta_value(z + om.entries @ m + n, om)
            factor = np.exp(-1j * np.pi * m @ om.entries @ m
                            - 2j * np.pi * m @ z)
            rhs = theta_value(z, om)
            ratio = lhs.ratio(rhs)
            assert abs(ratio - factor) / abs(factor) < 1e-10

    def test_parity(self):
        rng = np.random.default_rng(5)
        for g in (1, 2):
            om = random_riemann(rng, g)
            z = rng.standard_normal(g) + 1j * rng.uniform(-0.3, 0.3, g)
            for char in Characteristic.all(g):
                plus = theta_value(z, om, char=char)
                minus = theta_value(-z, om, char=char)
                sign = -1.0 if char.parity else 1.0
                num = minus.ratio(plus)
                assert abs(num - sign) < 1e-10

    def test_derivatives_match_finite_differences(self):
        rng = np.random.default_rng(13)
        om = random_riemann(rng, 2)
        z = rng.standard_normal(2) + 1j * rng.uniform(-0.2, 0.2, 2)
        h = 1e-4
        for k in range(2):
            dz = np.zeros(2)
            dz[k] = h
            fd = (sc_value(theta_value(z + dz, om))
                  - sc_value(theta_value(z - dz, om))) / (2 * h)
            d = [0, 0]
            d[k] = 1
            an = sc_value(theta_value(z, om, deriv=d))
            assert abs(fd - an) / abs(an) < 1e-6

    def test_third_derivative_against_brute(self):
        om = RiemannMatrix([[0.3 + 1.1j]])
        z = [0.17 + 0.05j]
        got = sc_value(theta_value(z, om, deriv=(3,)))
        assert abs(got - brute_theta(z, om.entries, deriv=(3,))) < 1e-9

    def test_truncation_certificate(self):
        # doubling the radius beyond the error-bound radius changes the
        # (scaled) sum by no more than tol, over 50 random (z, Omega)
        from thetakernels.theta import (_enumerate_ellipsoid,
                                        _truncation_radius)
        rng = np.random.default_rng(17)
        tol = 1e-12
        for g in (1, 2, 3):
            for _ in range(17 if g == 1 else 17 if g == 2 else 16):
                om = random_riemann(rng, g)
                z = rng.standard_normal(g) + 1j * rng.uniform(-0.5, 0.5, g)
                a = theta_value(z, om, tol=tol)
                y = z.imag
                c = om.im_inv @ y
                exponent = math.pi * float(y @ c)
                radius = 2 * _truncation_radius(om, 0, tol, float(np.linalg.norm(c)))
                pts = np.array(_enumerate_ellipsoid(om.chol, c, radius), float)
                quad = np.einsum("ij,jk,ik->i", pts, om.entries, pts)
                big = np.sum(np.exp(1j * np.pi * quad + 2j * np.pi * (pts @ z)
                                    - exponent))
                assert abs(a.mantissa * math.exp(a.exponent - exponent) - big) <= tol

    def test_tol_too_small(self):
        om = RiemannMatrix([[1j]])
        with pytest.raises(ToleranceTooSmall):
            theta(ThetaRequest((0j,), Characteristic.zero(1), (0,), 1e-16), om)

    def test_request_validation(self):
        with pytest.raises(ValueError):
            ThetaRequest((0j,), Characteristic.zero(1), (4,), 1e-10)
        with pytest.raises(ValueError):
            ThetaRequest((0j,), Characteristic.zero(1), (0,), -1.0)


class TestScaledComplex:
    def test_normalization(self):
        x = ScaledComplex.make(123.456 - 7j, 2.0)
        assert 0.5 <= abs(x.mantissa) < 2
        assert abs(x.value - (123.456 - 7j) * math.exp(2.0)) < 1e-9

    def test_zero(self):
        assert ScaledComplex.make(0j).mantissa == 0

    def test_no_overflow_deep_in_jacobian(self):
        # Im(Omega) eigenvalues spanning [1e-2, 1e2], ||Im z|| <= 10
        om = RiemannMatrix(np.diag([1e-2j, 1e2j]))
        z = np.array([7j, 7j])
        v = theta_value(z, om)
        assert np.isfinite(v.mantissa.real) and np.isfinite(v.mantissa.imag)
        assert 0.5 <= abs(v.mantissa) < 2
        w = (v * v) / v
        assert np.isfinite(w.mantissa.real)


class TestLogThetaHessian:
    def test_g1_against_finite_differences(self):
        om = RiemannMatrix([[1j]])
        e = np.array([0.5 + 0j])
        c = log_theta_hessian(e, om)

        def logtheta(x):
            return np.log(sc_value(theta_value([x], om)))

        h = 1e-4
        fd2 = (logtheta(0.5 + h) - 2 * logtheta(0.5) + logtheta(0.5 - h)) / h ** 2
        fd2h = (logtheta(0.5 + 2 * h) - 2 * logtheta(0.5) + logtheta(0.5 - 2 * h)) / (2 * h) ** 2
        richardson = (4 * fd2 - fd2h) / 3
        assert abs(c[0, 0] - richardson) < 1e-7

    def test_even(self):
        rng = np.random.default_rng(23)
        om = random_riemann(rng, 2)
        e = rng.standard_normal(2) + 1j * rng.uniform(-0.3, 0.3, 2)
        c1 = log_theta_hessian(e, om)
        c2 = log_theta_hessian(-e, om)
        assert np.max(np.abs(c1 - c2)) < 1e-9
        assert np.max(np.abs(c1 - c1.T)) == 0

    def test_on_theta_raises(self):
        om = RiemannMatrix([[1j]])
        zero = np.array([(1 + 1j) / 2])  # theta zero in genus 1
        with pytest.raises(PointOnTheta):
            log_theta_hessian(zero, om)


class TestSecondOrderBasis:
    def test_g1_components_against_brute(self):
        om = RiemannMatrix([[1j]])
        vals = second_order_theta_basis([0.0], om)
        assert len(vals) == 2
        b0 = brute_theta([0.0], [[2j]])
        b1 = brute_theta([0.0], [[2j]], char=Characteristic((1,), (0,)))
        assert abs(sc_value(vals[0]) - b0) < 1e-12
        assert abs(sc_value(vals[1]) - b1) < 1e-12

    def test_even(self):
        rng = np.random.default_rng(29)
        om = random_riemann(rng, 2)
        z = rng.standard_normal(2) + 1j * rng.uniform(-0.3, 0.3, 2)
        plus = second_order_theta_basis(z, om)
        minus = second_order_theta_basis(-z, om)
        for p, m in zip(plus, minus):
            assert abs(m.ratio(p) - 1) < 1e-10

    @pytest.mark.parametrize("g", [1, 2])
    def test_riemann_quadratic_identity(self, g):
        rng = np.random.default_rng(31 + g)
        om = random_riemann(rng, g)
        ratios = []
        for _ in range(10):
            z = rng.standard_normal(g) + 1j * rng.uniform(-0.3, 0.3, g)
            w = rng.standard_normal(g) + 1j * rng.uniform(-0.3, 0.3, g)
            lhs = (sc_value(theta_value(z + w, om))
                   * sc_value(theta_value(z - w, om)))
            tz = second_order_theta_basis(z, om)
            tw = second_order_theta_basis(w, om)
            rhs = sum(sc_value(a) * sc_value(b) for a, b in zip(tz, tw))
            ratios.append(lhs / rhs)
        ratios = np.array(ratios)
        const = ratios.mean()
        assert np.max(np.abs(ratios - const)) / abs(const) < 1e-8
        # the proportionality constant for this basis is 1
        assert abs(const - 1.0) < 1e-8
