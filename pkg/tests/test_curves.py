import math

import numpy as np
import pytest

from thetakernels.curves import (build_curve, curve_from_spec,
                                 lattice_coordinates, reduce_mod_lattice)
from thetakernels.errors import (DegreeTooSmall, InadmissiblePoint,
                                 NonSquarefree)
from thetakernels.series import Series


def agm(a, b):
    for _ in range(80):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def integrality(v, omega):
    a, b = lattice_coordinates(v, omega)
    allc = np.concatenate([a, b])
    return float(np.max(np.abs(allc - np.round(allc))))


class TestBuildCurve:
    def test_genus1_branch_points(self, lemniscatic):
        c = lemniscatic
        assert c.genus == 1
        assert np.allclose(c.branch_points, [-1, 0, 1])
        assert c.odd_degree  # infinity is a branch point

    def test_genus2_branch_points(self, genus2):
        c = genus2
        assert c.genus == 2
        expected = sorted([0, 1, -1, 1j, -1j], key=lambda z: (z.real, z.imag))
        assert np.allclose(c.branch_points, expected)

    def test_double_root_rejected(self):
        with pytest.raises(NonSquarefree):
            build_curve([0, 1, -2, 1])  # x^3 - 2x^2 + x = x (x-1)^2

    def test_degree_too_small(self):
        with pytest.raises(DegreeTooSmall):
            build_curve([1, 0, 1])

    def test_from_spec(self):
        c = curve_from_spec({"f": [[0, 0], -1, 0, 1]})
        assert c.genus == 1

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            curve_from_spec({"g": [1, 2]})
        with pytest.raises(ValueError):
            curve_from_spec({"f": [[1, 2, 3], 0, 0, 1]})


class TestDifferentials:
    def test_raw_basis_is_monomial(self, genus2):
        raw = genus2.raw_differential_coeffs()
        assert np.allclose(raw, np.eye(2))

    def test_normalized_a_periods_are_identity(self, lemniscatic, genus2):
        # recompute A-periods of the normalized basis by quadrature,
        # on test curves up to genus 3
        genus3 = build_curve([0, -1, 0, 0, 0, 0, 0, 1])  # y^2 = x^7 - x
        for c in (lemniscatic, genus2, genus3):
            g = c.genus
            seg = c._segment_integrals(1024)
            A_raw = np.empty((g, g), dtype=complex)
            for k in range(1, g + 1):
                A_raw[:, k - 1] = 2.0 * seg[2 * (k - 1)]
            normalized = c.diff_norm @ A_raw
            assert np.max(np.abs(normalized - np.eye(g))) < 1e-9


class TestPeriods:
    def test_square_lattice(self, lemniscatic):
        tau = lemniscatic.omega.entries[0, 0]
        assert abs(tau - 1j) < 1e-9

    def test_hexagonal_lattice(self, hexagonal):
        tau = hexagonal.omega.entries[0, 0]
        assert abs(abs(tau) - 1.0) < 1e-9
        assert abs(tau.real - 0.5) < 1e-9

    def test_riemann_relations(self, genus2):
        om = genus2.omega.entries
        assert genus2.symmetry_residual < 1e-9
        assert np.max(np.abs(om - om.T)) == 0
        assert np.min(np.linalg.eigvalsh(om.imag)) > 0

    def test_even_degree_curve(self):
        # deg f = 2g + 2: no branch point at infinity, one extra finite cut
        c = build_curve([2, 1, 0, 0, 0, 0, 1])  # y^2 = x^6 + x + 2, genus 2
        assert c.genus == 2 and not c.odd_degree
        assert len(c.branch_points) == 6
        om = c.omega.entries
        assert np.max(np.abs(om - om.T)) == 0
        assert np.min(np.linalg.eigvalsh(om.imag)) > 0
        images = [c.abel_branch_point(i) for i in range(6)]
        for i in range(6):
            for j in range(i + 1, 6):
                assert integrality(2.0 * (images[i] - images[j]), c.omega) < 1e-8

    def test_agm_cross_check(self):
        rng = np.random.default_rng(0)
        done = 0
        while done < 5:
            r = np.sort(rng.uniform(-3, 3, 3))
            if np.min(np.diff(r)) < 0.3:
                continue
            coeffs = np.poly(r)[::-1]
            c = build_curve(list(coeffs))
            tau = c.omega.entries[0, 0]
            b0, b1, b2 = r
            tau_agm = 1j * agm(math.sqrt(b2 - b0), math.sqrt(b2 - b1)) \
                / agm(math.sqrt(b2 - b0), math.sqrt(b1 - b0))
            assert abs(tau - tau_agm) < 1e-9
            done += 1


class TestSurfacePoints:
    def test_point_on_curve(self, lemniscatic):
        p = lemniscatic.point(2.0, 1)
        assert abs(p.y ** 2 - 6.0) < 1e-12
        m = lemniscatic.point(2.0, -1)
        assert abs(m.y + p.y) < 1e-12

    def test_margin_enforced(self, lemniscatic):
        with pytest.raises(InadmissiblePoint):
            lemniscatic.point(1.0 + 1e-5, 1)

    def test_point_with_y(self, lemniscatic):
        p = lemniscatic.point(2.0, -1)
        q = lemniscatic.point_with_y(2.0, p.y)
        assert q.sheet == -1
        with pytest.raises(InadmissiblePoint):
            lemniscatic.point_with_y(2.0, 1.234)


class TestAbelMap:
    def test_zero_path(self, lemniscatic):
        p = lemniscatic.point(2.0, 1)
        assert np.max(np.abs(lemniscatic.abel_map(p, base=p))) == 0

    def test_involution(self, lemniscatic, genus2):
        for c in (lemniscatic, genus2):
            for xv, sh in [(2.0, 1), (0.5 + 1.3j, -1)]:
                p = c.point(xv, sh)
                ip = c.point(xv, -sh)
                s = c.abel_map(p) + c.abel_map(ip)
                assert integrality(s, c.omega) < 1e-9

    def test_path_independence(self, lemniscatic):
        c = lemniscatic
        p = c.point(2.0, 1)
        q = c.point(-0.4 + 1.1j, -1)
        # difference of base-anchored images vs a direct path
        d1 = c.abel_map(p) - c.abel_map(q)
        d2 = c.abel_map(p, base=q)
        assert integrality(d1 - d2, c.omega) < 1e-9

    def test_homotopic_paths_agree(self, lemniscatic):
        # same endpoints, slightly different waypoints in the same class
        c = lemniscatic
        p = c.point(2.0 + 0.5j, 1)
        q = c.point(2.5 - 0.4j, 1)
        direct, _ = c._integrate_path([q.x, p.x], q.y, 1e-13)
        mid = 0.5 * (q.x + p.x) + 0.15j
        bent, _ = c._integrate_path([q.x, mid, p.x], q.y, 1e-13)
        assert np.max(np.abs(direct - bent)) < 1e-9

    def test_weierstrass_two_torsion(self, lemniscatic, genus2):
        for c in (lemniscatic, genus2):
            n = len(c.branch_points)
            images = [c.abel_branch_point(i) for i in range(n)]
            for i in range(n):
                for j in range(i + 1, n):
                    v = 2.0 * (images[i] - images[j])
                    assert integrality(v, c.omega) < 1e-8

    def test_sheet_detour(self, lemniscatic):
        # target on the other sheet than naive tracking forces a detour
        c = lemniscatic
        base = c.point(2.0, 1)
        tgt = c.point(2.5, -1)
        v = c.abel_map(tgt, base=base)
        w = c.abel_map(tgt) - c.abel_map(base)
        assert integrality(v - w, c.omega) < 1e-9


class TestReduceModLattice:
    def test_zero(self, lemniscatic):
        assert np.max(np.abs(reduce_mod_lattice([0j], lemniscatic.omega))) == 0

    def test_lattice_vector(self, genus2):
        om = genus2.omega
        z = om.entries @ np.ones(2)
        assert np.max(np.abs(reduce_mod_lattice(z, om))) < 1e-12

    def test_coefficients_in_half_open_box(self, genus2):
        rng = np.random.default_rng(1)
        om = genus2.omega
        for _ in range(20):
            z = rng.standard_normal(2) * 3 + 1j * rng.standard_normal(2) * 3
            red = reduce_mod_lattice(z, om)
            a, b = lattice_coordinates(red, om)
            assert np.all(a >= -0.5 - 1e-12) and np.all(a < 0.5 + 1e-12)
            assert np.all(b >= -0.5 - 1e-12) and np.all(b < 0.5 + 1e-12)
            assert integrality(z - red, om) < 1e-12


class TestLocalExpansion:
    def test_defining_relation(self, lemniscatic, genus2):
        for c, x0 in ((lemniscatic, 2.0), (genus2, 1.7 + 0.4j)):
            p = c.point(x0, 1)
            le = c.local_expansion(p, 10)
            f = Series.const(complex(c.coeffs[-1]), 10, exact=False)
            for co in c.coeffs[-2::-1]:
                f = f * le.x + complex(co)
            resid = le.y * le.y - f
            assert max(abs(v) for v in resid.c) < 1e-10

    def test_abel_derivative_is_differential(self, genus2):
        p = genus2.point(1.7 + 0.4j, -1)
        le = genus2.local_expansion(p, 10)
        for i in range(genus2.genus):
            d = le.abel[i].derivative()
            err = max(abs(d.c[k] - le.omega[i].c[k]) for k in range(9))
            assert err < 1e-12
        a0 = genus2.abel_map(p)
        assert abs(le.abel[0].c[0] - a0[0]) == 0

    def test_leading_value(self, lemniscatic):
        p = lemniscatic.point(2.0, 1)
        le = lemniscatic.local_expansion(p, 6)
        expect = 1.0 / (lemniscatic.A[0, 0] * math.sqrt(6.0))
        assert abs(le.omega[0].c[0] - expect) < 1e-12

    def test_chart_scale(self, lemniscatic):
        p = lemniscatic.point(2.0, 1, chart_scale=2.0)
        le = lemniscatic.local_expansion(p, 6)
        q = lemniscatic.point(2.0, 1)
        le1 = lemniscatic.local_expansion(q, 6)
        assert abs(le.omega[0].c[0] - 2.0 * le1.omega[0].c[0]) < 1e-12


class TestCycleContour:
    def test_contour_closes_and_circles_cut(self, genus2):
        x, ys, dx = genus2.cycle_contour(0, 128)
        assert len(x) == 128
        assert np.max(np.abs(ys ** 2 - genus2.f(x))) < 1e-8
        # winding of the contour around the cut endpoints is 1, and 0
        # around every other branch point
        xc = np.concatenate([x, x[:1]])
        for i, b in enumerate(genus2.branch_points):
            winding = np.sum(np.angle((xc[1:] - b) / (xc[:-1] - b))) / (2 * math.pi)
            expect = 1.0 if i < 2 else 0.0
            assert abs(winding - expect) < 1e-6
