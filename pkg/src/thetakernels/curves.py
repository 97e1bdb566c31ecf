"""Hyperelliptic curves y^2 = f(x): periods, Abel map, local expansions.

Branch points are sorted lexicographically by (Re, Im) and paired
consecutively into cuts (b_0 b_1), (b_2 b_3), ...; the k-th A-cycle
encircles the k-th cut and the k-th B-cycle runs through cuts k..g+1 on
both sheets.  Cycle integrals reduce to integrals over the cut and gap
segments with Gauss-Chebyshev quadrature (the square-root endpoint
singularity is exactly the Chebyshev weight); a single analytic branch
of y is continued along the whole chain of segments, with the
continuation through each branch point fixed by a small detour whose
side is chosen deterministically.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import (DegreeTooSmall, InadmissiblePoint, NonSquarefree,
                     PathThroughBranchPoint, QuadratureNonConvergent)
from .series import Series
from .theta import RiemannMatrix

DEFAULT_QUADRATURE_TOL = 1e-11
DEFAULT_MARGIN_FACTOR = 1e-3
_MIN_NODES = 32
_MAX_NODES = 4096


# ----------------------------------------------------------------------
# Square-root continuation along ordered sample points
# ----------------------------------------------------------------------

def _continued_sqrt(values, anchor=None, max_ref=24):
    """Continued square root along a 1-d array of nonzero samples.

    ``values[k]`` are samples of an analytic nonvanishing function along
    an ordered path.  Returns sqrt values continued from the principal
    branch at the first sample (or from ``anchor``).  The caller must
    supply samples dense enough that consecutive ratios stay off the
    negative real axis; density is the caller's responsibility (this
    routine only verifies it).
    """
    values = np.asarray(values, dtype=complex)
    ratios = values[1:] / values[:-1]
    if np.any(np.abs(np.angle(ratios)) > 0.75 * math.pi):
        raise PathThroughBranchPoint("square-root continuation lost track")
    start = cmath.sqrt(values[0]) if anchor is None else anchor
    out = np.empty(len(values), dtype=complex)
    out[0] = start
    out[1:] = start * np.cumprod(np.sqrt(ratios))
    return out


def _refine_samples(func, ts, max_iter=40, max_angle=0.5 * math.pi):
    """Insert midpoints until consecutive func-ratios wind by < max_angle."""
    ts = np.asarray(ts, dtype=float)
    vals = func(ts)
    for _ in range(max_iter):
        ratios = vals[1:] / vals[:-1]
        bad = np.abs(np.angle(ratios)) > max_angle
        if not np.any(bad):
            return ts, vals
        mids = 0.5 * (ts[:-1][bad] + ts[1:][bad])
        ts = np.sort(np.concatenate([ts, mids]))
        vals = func(ts)
    raise PathThroughBranchPoint("sample refinement failed to resolve winding")


# ----------------------------------------------------------------------
# Surface points and local data
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    """A point (x, y) on the curve with a chart t: x = x0 + chart_scale * t."""

    x: complex
    sheet: int
    y: complex
    chart_scale: float = 1.0

    def key(self):
        return (round(self.x.real, 12), round(self.x.imag, 12), self.sheet)


@dataclass
class LocalExpansion:
    """Series data at a point: x(t), y(t), differentials and Abel map."""

    point: SurfacePoint
    order: int
    x: Series
    y: Series
    omega: list          # omega_i(t)/dt as Series
    abel: list           # A_i(t) as Series, A_i(0) = abel image of the point


class HyperellipticCurve:
    """Immutable curve data: branch points, homology chain, periods, caches."""

    def __init__(self, coeffs, quadrature_tol=DEFAULT_QUADRATURE_TOL,
                 margin_factor=DEFAULT_MARGIN_FACTOR):
        coeffs = np.asarray(coeffs, dtype=complex)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        degree = len(coeffs) - 1
        if degree < 3:
            raise DegreeTooSmall(f"deg f = {degree} < 3")
        self.coeffs = coeffs
        self.degree = degree
        self.genus = (degree - 1) // 2
        self.lead = coeffs[-1]
        roots = self._polished_roots()
        self.scale = max(1.0, float(np.max(np.abs(roots))))
        dmin = min(abs(a - b) for i, a in enumerate(roots)
                   for b in roots[i + 1:])
        if dmin <= 1e-10 * self.scale:
            raise NonSquarefree(f"min root separation {dmin:.2e}")
        order = np.lexsort((roots.imag, roots.real))
        self.branch_points = roots[order]
        self.odd_degree = (degree % 2 == 1)
        self.margin = margin_factor * self.scale
        self.quadrature_tol = quadrature_tol
        self._lock = threading.Lock()
        self._abel_cache = {}
        self._h_branch_cache = {}
        self._compute_periods()

    # -- construction -----------------------------------------------------

    def _polished_roots(self):
        roots = np.roots(self.coeffs[::-1])
        dpoly = np.polyder(self.coeffs[::-1])
        for _ in range(3):
            num = np.polyval(self.coeffs[::-1], roots)
            den = np.polyval(dpoly, roots)
            step = np.where(np.abs(den) > 0, num / np.where(den == 0, 1, den), 0)
            roots = roots - step
        return roots

    def f(self, x):
        return np.polyval(self.coeffs[::-1], x)

    # -- segment chain -----------------------------------------------------

    def _segment_data(self, j):
        b = self.branch_points
        p, q = b[j], b[j + 1]
        mid, e = 0.5 * (p + q), 0.5 * (q - p)
        others = np.delete(b, [j, j + 1])
        return p, q, mid, e, others

    def _h_on_segment(self, j):
        _, _, mid, e, others = self._segment_data(j)
        lead = self.lead

        def h(ts):
            x = mid + e * np.asarray(ts, dtype=complex)
            return lead * np.prod(x[:, None] - others[None, :], axis=1) \
                if len(others) else lead * np.ones(len(x), complex)

        return h

    def _segment_integrals(self, n_nodes):
        """Per-segment integrals of x^(i-1) dx / y_chain and the chain signs."""
        g = self.genus
        nseg = 2 * g if self.odd_degree else 2 * g + 1
        k = np.arange(1, n_nodes + 1)
        s_nodes = np.cos((2 * k - 1) * math.pi / (2 * n_nodes))[::-1]
        seg_int = []
        w_minus = []
        w_plus = []
        for j in range(nseg):
            _, _, mid, e, _ = self._segment_data(j)
            h = self._h_on_segment(j)
            ts = np.concatenate(([-1.0], s_nodes, [1.0]))
            ts, vals = _refine_samples(h, ts)
            w = _continued_sqrt(vals)
            w_minus.append(w[0])
            w_plus.append(w[-1])
            sel = np.searchsorted(ts, s_nodes)
            wn = w[sel]
            x = mid + e * s_nodes
            powers = np.vander(x, g, increasing=True).T  # rows: x^0..x^(g-1)
            seg_int.append((math.pi / n_nodes) * (powers / wn).sum(axis=1))
        signs = self._chain_signs(w_minus, w_plus, nseg)
        return [(-1j) * signs[j] * seg_int[j] for j in range(nseg)]

    def _chain_signs(self, w_minus, w_plus, nseg):
        """Branch and side signs for each segment of the chain.

        The continuation through branch point b passes around it on an
        arc sweeping the principal angle between the outgoing and the
        incoming directions (ties resolved to +pi); the germ matching
        through the arc propagates the branch sign, and the side of each
        segment on which the continuation runs (relative to a fixed
        reference side used by the cycle orientations) flips whenever
        the swept angle is negative.
        """
        eps = 1.0
        side = 1.0
        out = [1.0]
        for j in range(nseg - 1):
            _, _, _, e_in, _ = self._segment_data(j)
            _, _, _, e_out, _ = self._segment_data(j + 1)
            th_in = cmath.phase(-e_in)
            delta = cmath.phase(e_out) - th_in
            while delta <= -math.pi:
                delta += 2 * math.pi
            while delta > math.pi:
                delta -= 2 * math.pi
            if abs(abs(delta) - math.pi) < 1e-12:
                delta = math.pi
            th_out = th_in + delta
            num = e_in * w_plus[j] * abs(e_in) ** -0.5 \
                * cmath.exp(-0.5j * th_in)
            den = e_out * w_minus[j + 1] * abs(e_out) ** -0.5 \
                * cmath.exp(-0.5j * th_out)
            rho = num / den
            if abs(abs(rho) - 1.0) > 1e-6 or abs(rho.imag) > 1e-6:
                raise QuadratureNonConvergent(
                    f"joint matching failed at branch point {j + 1}: rho={rho}")
            eps = eps * (1.0 if rho.real > 0 else -1.0)
            side = side * (1.0 if delta > 0 else -1.0)
            out.append(eps * side)
        return out

    def _compute_periods(self):
        g = self.genus
        prev = None
        n = _MIN_NODES
        while n <= _MAX_NODES:
            seg = self._segment_integrals(n)
            A = np.empty((g, g), dtype=complex)
            B = np.empty((g, g), dtype=complex)
            for c in range(1, g + 1):
                A[:, c - 1] = 2.0 * seg[2 * (c - 1)]
            for k in range(1, g + 1):
                B[:, k - 1] = 2.0 * sum(seg[2 * j - 1] for j in range(k, g + 1))
            cur = np.concatenate([A.ravel(), B.ravel()])
            if prev is not None:
                err = np.max(np.abs(cur - prev)) / max(1.0, np.max(np.abs(cur)))
                if err <= self.quadrature_tol:
                    break
            prev = cur
            n *= 2
        else:
            raise QuadratureNonConvergent(
                f"period quadrature did not converge at {_MAX_NODES} nodes")
        self._segments_cache = self._segment_integrals(n)
        omega = np.linalg.solve(A, B)
        self.symmetry_residual = float(np.max(np.abs(omega - omega.T)))
        omega = 0.5 * (omega + omega.T)
        eig = np.linalg.eigvalsh(omega.imag)
        if np.all(eig < 0):
            # opposite global orientation of the B-cycles; the segment
            # integrals themselves (hence Abel images) are unaffected
            B = -B
            omega = -omega
        elif not np.all(eig > 0):
            raise QuadratureNonConvergent(
                "period matrix imaginary part is indefinite; "
                "homology convention failed for this branch configuration")
        self.A = A
        self.B = B
        self.omega = RiemannMatrix(omega)
        self.diff_norm = np.linalg.inv(A)  # rows: normalized differentials

    # -- differentials ------------------------------------------------------

    def raw_differential_coeffs(self):
        """Rows of coefficients of the basis x^(i-1) dx / y."""
        return np.eye(self.genus, dtype=complex)

    def normalized_differential_coeffs(self):
        """Rows C with omega_i = sum_j C_ij x^(j-1) dx / y; A-periods = Id."""
        return self.diff_norm.copy()

    def eval_differentials(self, p: SurfacePoint):
        """Values omega_i(p)/dt in the chart of p."""
        powers = np.array([p.x ** j for j in range(self.genus)])
        return self.diff_norm @ powers / p.y * p.chart_scale

    # -- points -------------------------------------------------------------

    def point(self, x, sheet=1, chart_scale=1.0) -> SurfacePoint:
        x = complex(x)
        if min(abs(x - b) for b in self.branch_points) < self.margin:
            raise InadmissiblePoint(
                f"x={x} within margin {self.margin:.2e} of a branch point")
        y = sheet * np.sqrt(complex(self.f(x)))
        return SurfacePoint(x=x, sheet=int(sheet), y=complex(y),
                            chart_scale=float(chart_scale))

    def point_with_y(self, x, y, chart_scale=1.0) -> SurfacePoint:
        x, y = complex(x), complex(y)
        fx = complex(self.f(x))
        if abs(y * y - fx) > 1e-8 * max(1.0, abs(fx)):
            raise InadmissiblePoint("y^2 != f(x)")
        if min(abs(x - b) for b in self.branch_points) < self.margin:
            raise InadmissiblePoint("within branch-point margin")
        principal = np.sqrt(fx)
        sheet = 1 if abs(y - principal) <= abs(y + principal) else -1
        return SurfacePoint(x=x, sheet=sheet, y=y, chart_scale=float(chart_scale))

    # -- path routing and tracked integration --------------------------------

    @property
    def _clearance(self):
        sep = min(abs(a - b) for i, a in enumerate(self.branch_points)
                  for b in self.branch_points[i + 1:])
        return max(3.0 * self.margin, min(0.25 * sep, 0.1 * self.scale))

    def _route(self, a, b, depth=0):
        if depth > 12:
            raise PathThroughBranchPoint("no admissible detour found")
        a, b = complex(a), complex(b)
        d = b - a
        L2 = abs(d) ** 2
        clear = self._clearance
        worst, worst_dist = None, math.inf
        for r in self.branch_points:
            if abs(r - a) < 1e-14 or abs(r - b) < 1e-14:
                continue  # endpoint handled by singular quadrature
            t = ((r - a).real * d.real + (r - a).imag * d.imag) / L2 if L2 > 0 else 0.0
            if not 0.0 < t < 1.0:
                continue
            dist = abs(a + t * d - r)
            if dist < worst_dist:
                worst, worst_dist = (r, t), dist
        if worst is None or worst_dist >= 0.95 * clear:
            return [a, b]
        r, t = worst
        foot = a + t * d
        nvec = foot - r
        if abs(nvec) < 1e-13:
            nvec = 1j * d / abs(d)
        nvec = nvec / abs(nvec)
        detour = r + nvec * clear
        left = self._route(a, detour, depth + 1)
        right = self._route(detour, b, depth + 1)
        return left + right[1:]

    def _track_y(self, z0, z1, y0, ts):
        """Continuation of y along the straight piece z0 -> z1 from y(0) = y0.

        Sample spacing is refined until the winding of f between
        consecutive samples is resolved, which subsumes the step-halving
        continuity criterion.
        """
        def fvals(taus):
            return self.f(z0 + np.asarray(taus) * (z1 - z0)).astype(complex)

        grid = np.unique(np.concatenate([[0.0, 1.0], np.asarray(ts, float)]))
        grid, vals = _refine_samples(fvals, grid)
        ys = _continued_sqrt(vals, anchor=y0)
        sel = np.searchsorted(grid, ts)
        return ys[sel], ys[-1]

    def _integrate_piece(self, z0, z1, y0, tol, depth=0):
        """Integral of the normalized differentials over one straight piece.

        Node counts double until two successive values agree; pieces are
        split in half when plain doubling stalls (nearby branch points).
        """
        prev = None
        m = 12
        while m <= 384:
            nodes, weights = np.polynomial.legendre.leggauss(m)
            ts = 0.5 * (nodes + 1.0)
            ys, y_end = self._track_y(z0, z1, y0, ts)
            x = z0 + ts * (z1 - z0)
            powers = np.vander(x, self.genus, increasing=True).T
            vals = (self.diff_norm @ powers) / ys
            integral = 0.5 * (z1 - z0) * (vals @ weights)
            if prev is not None and np.max(np.abs(integral - prev)) <= tol:
                return integral, y_end
            prev = integral
            m *= 2
        if depth >= 10:
            raise QuadratureNonConvergent("path quadrature did not converge")
        mid = 0.5 * (z0 + z1)
        left, y_mid = self._integrate_piece(z0, mid, y0, 0.5 * tol, depth + 1)
        right, y_end = self._integrate_piece(mid, z1, y_mid, 0.5 * tol, depth + 1)
        return left + right, y_end

    def _integrate_path(self, waypoints, y0, tol):
        total = np.zeros(self.genus, dtype=complex)
        y = y0
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            part, y = self._integrate_piece(a, b, y, tol)
            total += part
        return total, y

    def _first_piece_from_branch(self, b0, x1, tol):
        """Singular piece from the base branch point, Gauss-Jacobi quadrature."""
        others = self.branch_points[np.abs(self.branch_points - b0) > 1e-14]
        lead = self.lead

        def h(taus):
            x = b0 + np.asarray(taus, dtype=complex) * (x1 - b0)
            if len(others) == 0:
                return lead * np.ones(len(x), complex)
            return lead * np.prod(x[:, None] - others[None, :], axis=1)

        prev = None
        m = 16
        while m <= 2048:
            nodes, weights = roots_jacobi(m, 0.0, -0.5)
            taus = 0.5 * (nodes + 1.0)
            ts, vals = _refine_samples(h, np.concatenate(([0.0], taus, [1.0])))
            gvals = _continued_sqrt(vals)
            sel = np.searchsorted(ts, taus)
            gv = gvals[sel]
            x = b0 + taus * (x1 - b0)
            powers = np.vander(x, self.genus, increasing=True).T
            root_pref = np.sqrt(complex(x1 - b0))
            integrand = (self.diff_norm @ powers) / (root_pref * gv)
            # int_0^1 tau^(-1/2) F dtau = (1/sqrt 2) sum w_i F((1+s_i)/2)
            integral = (x1 - b0) / math.sqrt(2.0) * (integrand @ weights)
            y_end = root_pref * gvals[-1]
            if prev is not None and np.max(np.abs(integral - prev)) <= tol:
                return integral, y_end
            prev = integral
            m *= 2
        raise QuadratureNonConvergent("branch-base quadrature did not converge")

    # -- Abel map -------------------------------------------------------------

    def abel_map(self, p: SurfacePoint, base: SurfacePoint = None):
        """Abel image of p (minus base), modulo the period lattice.

        With ``base=None``, integration starts at the first branch point.
        """
        if base is None:
            key = p.key()
            with self._lock:
                if key in self._abel_cache:
                    return self._abel_cache[key].copy()
            b0 = self.branch_points[0]
            waypoints = self._route(b0, p.x)
            tol = max(self.quadrature_tol, 1e-13)
            # keep the endpoint-singular piece short, clear of other branch points
            leg = waypoints[1] - b0
            step = min(1.0, self._clearance / abs(leg))
            x1 = b0 + step * leg
            first, y1 = self._first_piece_from_branch(b0, x1, tol)
            rest, y_end = self._integrate_path([x1] + waypoints[1:], y1, tol)
            total = first + rest
            d_plus = abs(y_end - p.y)
            d_minus = abs(y_end + p.y)
            if min(d_plus, d_minus) > 1e-4 * max(1.0, abs(p.y)):
                raise PathThroughBranchPoint("sheet tracking inconsistent at target")
            if d_minus < d_plus:
                total = -total
            with self._lock:
                self._abel_cache[key] = total.copy()
            return total
        waypoints = self._route(base.x, p.x)
        tol = max(self.quadrature_tol, 1e-13)
        total, y_end = self._integrate_path(waypoints, base.y, tol)
        if abs(y_end - p.y) <= abs(y_end + p.y):
            return total
        # wrong sheet: prepend a loop around the first branch point
        b0 = self.branch_points[0]
        r = max(3.0 * self.margin,
                0.4 * min(abs(b - b0) for b in self.branch_points[1:]))
        corners = [b0 + r, b0 + 1j * r, b0 - r, b0 - 1j * r, b0 + r]
        loop = self._route(base.x, corners[0])
        for a, b in zip(corners[:-1], corners[1:]):
            loop += self._route(a, b)[1:]
        loop += self._route(corners[0], p.x)[1:]
        total, y_end = self._integrate_path(loop, base.y, tol)
        if abs(y_end - p.y) > 1e-4 * max(1.0, abs(p.y)):
            raise PathThroughBranchPoint("sheet tracking inconsistent after detour")
        return total

    def abel_branch_point(self, i: int):
        """Abel image of the i-th branch point along the segment chain."""
        if i == 0:
            return np.zeros(self.genus, dtype=complex)
        total = sum(self._segments_cache[j] for j in range(i))
        return self.diff_norm @ np.asarray(total)

    # -- lattice reduction ------------------------------------------------------

    def reduce_mod_lattice(self, z):
        return reduce_mod_lattice(z, self.omega)

    # -- local expansions ---------------------------------------------------------

    def local_expansion(self, p: SurfacePoint, order: int) -> LocalExpansion:
        if order > 32:
            raise ValueError("expansion order capped at 32")
        lam = p.chart_scale
        xs = Series.from_coeffs([p.x, lam], order, exact=False)
        fser = Series.const(complex(self.coeffs[-1]), order, exact=False)
        for c in self.coeffs[-2::-1]:
            fser = fser * xs + complex(c)
        ys = Series.const(p.y, order, exact=False)
        for _ in range(order.bit_length() + 2):
            ys = (ys + fser / ys) * 0.5
        resid = ys * ys - fser
        if any(abs(c) > 1e-8 * max(1.0, abs(p.y)) for c in resid.c):
            raise InadmissiblePoint("series square root failed; point too singular")
        powers = [Series.const(1.0, order, exact=False)]
        for _ in range(self.genus - 1):
            powers.append(powers[-1] * xs)
        omega = []
        for i in range(self.genus):
            num = Series.zero(order, exact=False)
            for j in range(self.genus):
                num = num + powers[j] * complex(self.diff_norm[i, j])
            omega.append(num / ys * lam)
        a0 = self.abel_map(p)
        abel = []
        for i in range(self.genus):
            ser = omega[i].integrate().truncate(order)
            ser.c[0] = complex(a0[i])
            abel.append(ser)
        return LocalExpansion(point=p, order=order, x=xs, y=ys,
                              omega=omega, abel=abel)

    # -- closed contours around cuts ------------------------------------------------

    def cycle_contour(self, cut_index: int, n_nodes: int = 256):
        """Points, y-values and dx/dtheta on an ellipse around the cut.

        The ellipse has foci at the cut endpoints and clears all other
        branch points; y is continued around by continuity (an even
        number of enclosed branch points makes it close up).
        """
        j = 2 * cut_index
        p, q, mid, e, others = self._segment_data(j)
        clear = min(abs(r - mid) - abs(e) for r in others) if len(others) \
            else 10 * self.margin
        clear = max(min(0.5 * clear, abs(e)), 2 * self.margin)
        mu = math.asinh(clear / abs(e))
        theta = 2 * math.pi * np.arange(n_nodes) / n_nodes

        def fv(ths):
            return self.f(mid + e * np.cosh(mu + 1j * np.asarray(ths))).astype(complex)

        grid, vals = _refine_samples(fv, np.concatenate([theta, [2 * math.pi]]))
        ys_all = _continued_sqrt(vals)
        if abs(ys_all[-1] - ys_all[0]) > 1e-6 * max(abs(ys_all[0]), 1e-30):
            raise PathThroughBranchPoint("cycle contour did not close up")
        sel = np.searchsorted(grid, theta)
        x = mid + e * np.cosh(mu + 1j * theta)
        dx = e * np.sinh(mu + 1j * theta) * 1j
        return x, ys_all[sel], dx

    def __repr__(self):
        return (f"HyperellipticCurve(degree={self.degree}, genus={self.genus})")


# ----------------------------------------------------------------------
# Public constructors and helpers
# ----------------------------------------------------------------------

def build_curve(f_coeffs, quadrature_tol=DEFAULT_QUADRATURE_TOL,
                margin_factor=DEFAULT_MARGIN_FACTOR) -> HyperellipticCurve:
    """Curve y^2 = f(x) from ascending coefficients of a squarefree f."""
    return HyperellipticCurve(f_coeffs, quadrature_tol, margin_factor)


def curve_from_spec(spec: dict, **kwargs) -> HyperellipticCurve:
    """Curve from the JSON form {"f": [c0, c1, ...]}; entries may be
    plain numbers or [re, im] pairs."""
    if "f" not in spec:
        raise ValueError('curve spec must contain key "f"')
    coeffs = [_parse_complex(c) for c in spec["f"]]
    return build_curve(coeffs, **kwargs)


def _parse_complex(c):
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise ValueError(f"complex entries must be [re, im], got {c}")
        return complex(float(c[0]), float(c[1]))
    return complex(c)


def period_matrices(curve: HyperellipticCurve):
    """(A, B, Omega) of the curve in the package homology convention."""
    return curve.A.copy(), curve.B.copy(), curve.omega


def differentials(curve: HyperellipticCurve, normalized: bool = True):
    """Coefficient rows of the differential basis in x^(j-1) dx / y."""
    if normalized:
        return curve.normalized_differential_coeffs()
    return curve.raw_differential_coeffs()


def abel_map(curve: HyperellipticCurve, p: SurfacePoint,
             base: SurfacePoint = None):
    """Abel image of p; see :meth:`HyperellipticCurve.abel_map`."""
    return curve.abel_map(p, base)


def local_expansion(curve: HyperellipticCurve, p: SurfacePoint,
                    order: int) -> LocalExpansion:
    """Series data at p; see :meth:`HyperellipticCurve.local_expansion`."""
    return curve.local_expansion(p, order)


def reduce_mod_lattice(z, omega: RiemannMatrix):
    """Representative of z with both lattice coordinates in [-1/2, 1/2)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    b = omega.im_inv @ z.imag
    a = z.real - omega.entries.real @ b
    shift = np.floor(b + 0.5)
    z = z - omega.entries @ shift - np.floor(a + 0.5)
    return z


def lattice_coordinates(z, omega: RiemannMatrix):
    """Real coordinates (a, b) with z = a + Omega b."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    b = omega.im_inv @ z.imag
    a = z.real - omega.entries.real @ b
    return a, b
