"""Analytic kernels on a hyperelliptic curve.

Prime form, Bergman kernel, Szego kernels of line bundles off the theta
divisor, rank-n Klein kernels of split bundles, the Klein coordinate map
(second logarithmic derivatives of theta), the Wirtinger projective
connection extracted from diagonal jets, the squared-Gauss-map limit at
smooth theta zeros, and a sampling probe for fibers of the Klein
coordinate map.

Kernel values are densities with respect to the chart parameters of the
two surface points; weights record the transformation law (a section of
weight (w1, w2) picks up chart_scale^w1 * chart_scale^w2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .curves import (HyperellipticCurve, SurfacePoint,
                     lattice_coordinates)
from .errors import (ConstraintViolation, NoNonsingularOddCharacteristic,
                     NotOnThetaSmoothLocus, OnDiagonal, PointOnTheta,
                     SeriesOrderInsufficient, SquareRootBranchUnresolvable)
from .series import Series
from .theta import (Characteristic, RiemannMatrix, ScaledComplex,
                    log_theta_hessian, theta_batch, theta_gradient)

DEFAULT_TOL = 1e-12
THETA_FLOOR = 1e-8
GRADIENT_FLOOR = 1e-8


@dataclass(frozen=True)
class KernelValue:
    """Kernel density in the charts of the two evaluation points."""

    value: complex
    weight: tuple
    chart_x: tuple   # (x, sheet, chart_scale)
    chart_y: tuple


@dataclass(frozen=True)
class KleinCoordinates:
    """Symmetric matrix of second logarithmic theta derivatives at a point."""

    matrix: np.ndarray

    @property
    def vector(self):
        g = self.matrix.shape[0]
        return np.array([self.matrix[i, j]
                         for i in range(g) for j in range(i, g)])


@dataclass(frozen=True)
class JacobianPoint:
    """Degree-zero class represented by a vector e in C^g."""

    e: tuple

    @staticmethod
    def of(e):
        return JacobianPoint(tuple(np.asarray(e, dtype=complex).reshape(-1)))

    @property
    def vec(self):
        return np.asarray(self.e, dtype=complex)


def _chart(p: SurfacePoint):
    return (p.x, p.sheet, p.chart_scale)


def _class_vector(e):
    if isinstance(e, JacobianPoint):
        return e.vec
    return np.asarray(e, dtype=complex).reshape(-1)


def _theta_char_value(v, omega, char, tol=DEFAULT_TOL):
    vals, expo, scale = theta_batch(v, omega, char, [(0,) * omega.dim], tol)
    return ScaledComplex.make(vals[0], expo), scale


def is_on_theta(e, omega: RiemannMatrix, tol=DEFAULT_TOL, floor=THETA_FLOOR) -> bool:
    vals, expo, scale = theta_batch(e, omega, Characteristic.zero(omega.dim),
                                    [(0,) * omega.dim], tol)
    return abs(vals[0]) < floor * scale


def select_odd_characteristic(curve: HyperellipticCurve,
                              tol=DEFAULT_TOL) -> Characteristic:
    """First odd characteristic (lexicographic) with nonsingular gradient."""
    omega = curve.omega
    g = omega.dim
    for char in Characteristic.all(g):
        if char.parity != 1:
            continue
        th, grad, _, scale = theta_gradient(np.zeros(g, complex), omega,
                                            char=char, tol=tol)
        if np.linalg.norm(grad) > GRADIENT_FLOOR * max(scale, 1.0):
            return char
    raise NoNonsingularOddCharacteristic(
        "all odd characteristics have vanishing gradient")


def _abel(curve, p):
    return curve.abel_map(p)


def _omega_values(curve, p):
    return curve.eval_differentials(p)


def _h_factor(curve, delta: Characteristic, p: SurfacePoint, tol=DEFAULT_TOL):
    """Square root of sum_i d_i theta[delta](0) omega_i(p), branch cached.

    The branch is fixed per (characteristic, point) at first use; nearby
    cached points force the continuous branch, so limit families along a
    path get a consistent half-density.
    """
    _, grad, _, scale = theta_gradient(np.zeros(curve.genus, complex),
                                       curve.omega, char=delta, tol=tol)
    om_raw = curve.eval_differentials(
        SurfacePoint(p.x, p.sheet, p.y, chart_scale=1.0))
    s2 = complex(grad @ om_raw)
    if abs(s2) < 1e-14 * max(1.0, float(np.linalg.norm(grad))):
        raise SquareRootBranchUnresolvable(
            f"gradient half-density vanishes at x={p.x}")
    h = complex(np.sqrt(s2))
    key_char = (tuple(delta.alpha), tuple(delta.beta))
    cache = curve._h_branch_cache.setdefault(key_char, {})
    key = (round(p.x.real, 10), round(p.x.imag, 10), p.sheet)
    with curve._lock:
        cached = cache.get(key)
    if cached is not None:
        h = cached
    else:
        best = None
        best_d = 0.25 * curve.scale
        for (xr, xi, sh), hv in list(cache.items()):
            if sh != p.sheet:
                continue
            d = abs(complex(xr, xi) - p.x)
            if d < best_d:
                best, best_d = hv, d
        if best is not None and abs(-h - best) < abs(h - best):
            h = -h
        with curve._lock:
            cache[key] = h
    return h * math.sqrt(p.chart_scale)


def prime_form(curve: HyperellipticCurve, delta: Characteristic,
               x: SurfacePoint, y: SurfacePoint, tol=DEFAULT_TOL) -> KernelValue:
    """Prime form E(x,y) = theta[delta](A(x)-A(y)) / (h(x) h(y)).

    Antisymmetric, vanishing only on the diagonal, with
    E(x,y)/(t(x)-t(y)) -> 1 along the diagonal.  Weight (-1/2, -1/2).
    """
    if abs(x.x - y.x) < 1e-13 and x.sheet == y.sheet:
        raise OnDiagonal("prime form evaluated at coinciding points")
    w = _abel(curve, x) - _abel(curve, y)
    th, _ = _theta_char_value(w, curve.omega, delta, tol)
    hx = _h_factor(curve, delta, x, tol)
    hy = _h_factor(curve, delta, y, tol)
    val = th.mantissa * math.exp(th.exponent) / (hx * hy)
    return KernelValue(value=complex(val), weight=(-0.5, -0.5),
                       chart_x=_chart(x), chart_y=_chart(y))


def log_theta_hessian_char(e, omega: RiemannMatrix, char: Characteristic,
                           tol=DEFAULT_TOL, floor=THETA_FLOOR):
    """Hessian of log theta[char] at e (see theta.log_theta_hessian)."""
    g = omega.dim
    derivs = [(0,) * g]
    for i in range(g):
        d = [0] * g
        d[i] = 1
        derivs.append(tuple(d))
    pairs = []
    for i in range(g):
        for j in range(i, g):
            d = [0] * g
            d[i] += 1
            d[j] += 1
            derivs.append(tuple(d))
            pairs.append((i, j))
    vals, _, scale = theta_batch(e, omega, char, derivs, tol)
    th = vals[0]
    if abs(th) < floor * scale:
        raise PointOnTheta("argument on the divisor of theta[char]")
    grad = np.array(vals[1:1 + g])
    c = np.empty((g, g), dtype=complex)
    for (i, j), v in zip(pairs, vals[1 + g:]):
        cij = (th * v - grad[i] * grad[j]) / (th * th)
        c[i, j] = cij
        c[j, i] = cij
    return c


def bergman_kernel(curve: HyperellipticCurve, x: SurfacePoint,
                   y: SurfacePoint, delta: Characteristic = None,
                   tol=DEFAULT_TOL) -> KernelValue:
    """Symmetric bidifferential with biresidue 1 and vanishing A-periods.

    Computed as the double diagonal derivative of log theta[delta] of
    the Abel difference; independent of the odd characteristic used.
    Weight (1, 1).
    """
    if abs(x.x - y.x) < 1e-13 and x.sheet == y.sheet:
        raise OnDiagonal("Bergman kernel evaluated at coinciding points")
    if delta is None:
        delta = select_odd_characteristic(curve, tol)
    w = _abel(curve, x) - _abel(curve, y)
    hess = log_theta_hessian_char(w, curve.omega, delta, tol)
    ox = _omega_values(curve, x)
    oy = _omega_values(curve, y)
    val = -complex(ox @ hess @ oy)
    return KernelValue(value=val, weight=(1.0, 1.0),
                       chart_x=_chart(x), chart_y=_chart(y))


def szego_kernel(curve: HyperellipticCurve, e, x: SurfacePoint,
                 y: SurfacePoint, delta: Characteristic = None,
                 tol=DEFAULT_TOL, floor=THETA_FLOOR) -> KernelValue:
    """Szego kernel theta(A(y)-A(x)+e) / (theta(e) E(x,y)) of the class e.

    Requires e off the theta divisor; has a simple diagonal pole with
    residue normalization 1.  Weight (1/2, 1/2).
    """
    e = _class_vector(e)
    omega = curve.omega
    char0 = Characteristic.zero(omega.dim)
    vals, expo_e, scale = theta_batch(e, omega, char0, [(0,) * omega.dim], tol)
    if abs(vals[0]) < floor * scale:
        raise PointOnTheta("Szego kernel undefined on the theta divisor")
    theta_e = ScaledComplex.make(vals[0], expo_e)
    if delta is None:
        delta = select_odd_characteristic(curve, tol)
    w = _abel(curve, y) - _abel(curve, x)
    num, _ = _theta_char_value(w + e, omega, char0, tol)
    ef = prime_form(curve, delta, x, y, tol)
    val = num.ratio(theta_e) / ef.value
    return KernelValue(value=complex(val), weight=(0.5, 0.5),
                       chart_x=_chart(x), chart_y=_chart(y))


def klein_kernel(curve: HyperellipticCurve, e_list, x: SurfacePoint,
                 y: SurfacePoint, delta: Characteristic = None,
                 tol=DEFAULT_TOL, lattice_tol=1e-8) -> KernelValue:
    """Determinant kernel of a split bundle: the product of Szego kernels.

    ``e_list`` must sum to zero modulo the period lattice.  The result
    has an order-n diagonal pole with unit leading coefficient and
    weight (n/2, n/2).
    """
    es = [_class_vector(e) for e in e_list]
    total = sum(es)
    a, b = lattice_coordinates(total, curve.omega)
    coords = np.concatenate([a, b])
    if np.max(np.abs(coords - np.round(coords))) > lattice_tol:
        raise ConstraintViolation("classes do not sum to zero in the Jacobian")
    if delta is None:
        delta = select_odd_characteristic(curve, tol)
    val = 1.0 + 0.0j
    for e in es:
        val *= szego_kernel(curve, e, x, y, delta=delta, tol=tol).value
    n = len(es)
    return KernelValue(value=val, weight=(n / 2.0, n / 2.0),
                       chart_x=_chart(x), chart_y=_chart(y))


def klein_coordinates(curve: HyperellipticCurve, e, tol=DEFAULT_TOL,
                      floor=THETA_FLOOR) -> KleinCoordinates:
    """Coordinates of the Klein kernel of e relative to the Bergman kernel."""
    c = log_theta_hessian(_class_vector(e), curve.omega, tol=tol, floor=floor)
    return KleinCoordinates(matrix=c)


# ----------------------------------------------------------------------
# Wirtinger projective connection by diagonal series extraction
# ----------------------------------------------------------------------

def _theta_compose(v0, omega, char, zser, order, tol=DEFAULT_TOL):
    """Series of theta[char](v0 + z(t)) for a vector of series z with z(0)=0.

    Uses the exact third-order Taylor jet of theta at v0; the neglected
    fourth-order remainder only affects series coefficients beyond t^3.
    """
    g = omega.dim
    derivs = []
    index_list = []
    for total in range(4):
        for comb in itertools.combinations_with_replacement(range(g), total):
            d = [0] * g
            for i in comb:
                d[i] += 1
            derivs.append(tuple(d))
            index_list.append(comb)
    vals, expo, _ = theta_batch(v0, omega, char, derivs, tol)
    out = Series.zero(order, exact=False)
    for comb, v in zip(index_list, vals):
        mult = 1.0
        counts = {}
        for i in comb:
            counts[i] = counts.get(i, 0) + 1
        for c in counts.values():
            mult *= math.factorial(c)
        term = Series.const(v / mult, order, exact=False)
        for i in comb:
            term = term * zser[i]
        out = out + term
    return out, expo


def wirtinger_connection(curve: HyperellipticCurve, e, p: SurfacePoint,
                         order: int = 8, tol=DEFAULT_TOL,
                         floor=THETA_FLOOR) -> complex:
    """Projective-connection value at p of the Klein kernel of (e, -e).

    Expands the kernel at (x, y) = (p(t), p(-t)) as
    1/(t1-t2)^2 + R/6 + O(t1stuff) and returns R, extracted exactly from
    truncated series (never finite differences).
    """
    if order < 6:
        raise SeriesOrderInsufficient("need series order >= 6")
    e = _class_vector(e)
    omega = curve.omega
    char0 = Characteristic.zero(omega.dim)
    vals, expo_e, scale = theta_batch(e, omega, char0, [(0,) * omega.dim], tol)
    if abs(vals[0]) < floor * scale:
        raise PointOnTheta("Wirtinger connection undefined on the divisor")
    theta_e2 = ScaledComplex.make(vals[0] ** 2, 2 * expo_e)
    delta = select_odd_characteristic(curve, tol)
    le = curve.local_expansion(p, order)
    # w(t) = A(p(-t)) - A(p(t)): twice the odd part of the Abel series
    w = []
    for ser in le.abel:
        c = [0j] * (order + 1)
        for k in range(1, order + 1, 2):
            c[k] = -2.0 * ser.c[k]
        w.append(Series(c, order))
    num_plus, ep = _theta_compose(e, omega, char0, w, order, tol)
    num_minus, em = _theta_compose(-e, omega, char0, w, order, tol)
    # H(t) = sum_i d_i theta[delta](0) omega_i(t): the squared half-density
    _, grad, _, _ = theta_gradient(np.zeros(curve.genus, complex), omega,
                                   char=delta, tol=tol)
    hplus = Series.zero(order, exact=False)
    hminus = Series.zero(order, exact=False)
    for i in range(curve.genus):
        hplus = hplus + le.omega[i] * complex(grad[i])
        flip = Series([le.omega[i].c[k] * (-1.0) ** k
                       for k in range(order + 1)], order)
        hminus = hminus + flip * complex(grad[i])
    tdelta, ed = _theta_compose(np.zeros(curve.genus, complex), omega, delta,
                                w, order, tol)
    # F(t) = num_plus num_minus H(t) H(-t) / (theta(e)^2 tdelta^2)
    numer = num_plus * num_minus * hplus * hminus
    denom = tdelta * tdelta
    # strip the double zero of tdelta^2 at t=0 (the low coefficients are
    # roundoff from theta[delta](0) ~ 0)
    lead = abs(denom.c[2])
    if abs(denom.c[0]) > 1e-10 * lead or abs(denom.c[1]) > 1e-10 * lead:
        raise SeriesOrderInsufficient("odd theta composition lost its zero")
    dstrip = Series(denom.c[2:], order - 2)
    nstrip = Series(numer.c[:order - 1], order - 2)
    gser = nstrip / dstrip
    # F(t) = gser(t) exp(ep + em - 2 ed) / theta(e)^2 / t^2
    #      = 1/(4 t^2) + R/6 + O(t): the leading 1/4 checks all factors
    pref = math.exp(ep + em - 2 * ed - theta_e2.exponent) / theta_e2.mantissa
    g0 = gser.c[0] * pref
    g2 = gser.c[2] * pref
    if abs(g0 - 0.25) > 1e-6:
        raise SeriesOrderInsufficient(
            f"diagonal normalization check failed: leading {g0}")
    return complex(6.0 * g2)


# ----------------------------------------------------------------------
# Gauss limit at smooth theta zeros
# ----------------------------------------------------------------------

@dataclass
class GaussLimitReport:
    limit: np.ndarray
    target: np.ndarray
    max_relative_deviation: float
    singular_value_ratio: float
    steps: list


def find_theta_zero(omega: RiemannMatrix, start, direction, tol=DEFAULT_TOL):
    """Newton solve for s with theta(start + s*direction) = 0."""
    start = np.asarray(start, dtype=complex)
    direction = np.asarray(direction, dtype=complex)
    s = 0j
    for _ in range(80):
        e = start + s * direction
        th, grad, _, scale = theta_gradient(e, omega, tol=tol)
        if abs(th) < 1e-13 * max(scale, 1e-300):
            return e
        ds = th / complex(grad @ direction)
        s = s - ds
    raise NotOnThetaSmoothLocus("Newton iteration for a theta zero failed")


def gauss_limit_check(omega_or_curve, e0, direction, steps: int = 6,
                      t0: float = 1e-2, tol=DEFAULT_TOL) -> GaussLimitReport:
    """Limit of theta(e_t)^2 * c(e_t) along e_t = e0 + t * direction.

    At a smooth zero e0 of theta the limit is the rank-one matrix
    -(grad theta)(grad theta)^T; the report carries the Richardson
    extrapolation of the matrix family, the target and deviation
    measures.
    """
    omega = omega_or_curve.omega if hasattr(omega_or_curve, "omega") \
        else omega_or_curve
    e0 = np.asarray(e0, dtype=complex)
    direction = np.asarray(direction, dtype=complex)
    g = omega.dim
    th0, grad0, _, scale = theta_gradient(e0, omega, tol=tol)
    if abs(th0) > 1e-6 * max(scale, 1e-300):
        raise NotOnThetaSmoothLocus("e0 is not a theta zero")
    if np.linalg.norm(grad0) < GRADIENT_FLOOR * max(scale, 1.0):
        raise NotOnThetaSmoothLocus("theta gradient vanishes at e0")
    target = -np.outer(grad0, grad0)

    def m_matrix(t):
        e = e0 + t * direction
        derivs = [(0,) * g]
        for i in range(g):
            d = [0] * g
            d[i] = 1
            derivs.append(tuple(d))
        pairs = []
        for i in range(g):
            for j in range(i, g):
                d = [0] * g
                d[i] += 1
                d[j] += 1
                derivs.append(tuple(d))
                pairs.append((i, j))
        vals, _, _ = theta_batch(e, omega, Characteristic.zero(g), derivs, tol)
        th = vals[0]
        grad = np.array(vals[1:1 + g])
        m = np.empty((g, g), dtype=complex)
        for (i, j), v in zip(pairs, vals[1 + g:]):
            mij = th * v - grad[i] * grad[j]
            m[i, j] = mij
            m[j, i] = mij
        return m

    ts = [t0 * 0.5 ** k for k in range(steps)]
    mats = [m_matrix(t) for t in ts]
    extrapolated = 2.0 * mats[-1] - mats[-2]
    sv = np.linalg.svd(extrapolated, compute_uv=False)
    ratio = float(sv[1] / sv[0]) if g > 1 else 0.0
    dev = float(np.max(np.abs(extrapolated - target))
                / max(np.max(np.abs(target)), 1e-300))
    return GaussLimitReport(limit=extrapolated, target=target,
                            max_relative_deviation=dev,
                            singular_value_ratio=ratio, steps=ts)


# ----------------------------------------------------------------------
# Finiteness probe
# ----------------------------------------------------------------------

@dataclass
class Collision:
    i: int
    j: int
    relative_distance: float
    trivial: bool
    kind: str   # "equal" | "negation" | "nontrivial"


@dataclass
class ProbeReport:
    genus: int
    n_samples: int
    seed: int
    collision_tol: float
    floor: float
    n_rejected: int
    points: list          # list of g-vectors (as lists of complex)
    coordinates: list     # list of Klein coordinate vectors
    collisions: list
    n_nontrivial: int

    def to_dict(self):
        def cplx(z):
            return [z.real, z.imag]

        return {
            "genus": self.genus,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "collision_tol": self.collision_tol,
            "floor": self.floor,
            "n_rejected": self.n_rejected,
            "points": [[cplx(z) for z in p] for p in self.points],
            "coordinates": [[cplx(z) for z in c] for c in self.coordinates],
            "collisions": [{
                "i": c.i, "j": c.j,
                "relative_distance": c.relative_distance,
                "trivial": c.trivial, "kind": c.kind,
            } for c in self.collisions],
            "n_nontrivial": self.n_nontrivial,
        }


def finiteness_probe(curve: HyperellipticCurve, n_samples: int,
                     collision_tol: float = 1e-6, seed: int = 0,
                     floor: float = THETA_FLOOR, tol=DEFAULT_TOL,
                     extra_points=None, lattice_tol: float = 1e-6) -> ProbeReport:
    """Sample the Klein coordinate map and report near-coincident values.

    Points e = a + Omega b are drawn uniformly from the fundamental
    domain (a, b in [-1/2, 1/2)^g), rejecting points on the theta
    divisor.  Every pair closer than ``collision_tol`` relative to the
    coordinate norms is reported and classified as trivial when
    e' = +-e modulo the lattice within ``lattice_tol``.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    omega = curve.omega
    g = omega.dim
    rng = np.random.default_rng(seed)
    points = []
    coords = []
    rejected = 0
    while len(points) < n_samples:
        a = rng.uniform(-0.5, 0.5, g)
        b = rng.uniform(-0.5, 0.5, g)
        e = a + omega.entries @ b
        try:
            c = log_theta_hessian(e, omega, tol=tol, floor=floor)
        except PointOnTheta:
            rejected += 1
            continue
        points.append(e)
        coords.append(np.array([c[i, j] for i in range(g)
                                for j in range(i, g)]))
    if extra_points is not None:
        for e in extra_points:
            e = np.asarray(e, dtype=complex).reshape(-1)
            c = log_theta_hessian(e, omega, tol=tol, floor=floor)
            points.append(e)
            coords.append(np.array([c[i, j] for i in range(g)
                                    for j in range(i, g)]))
    collisions = []
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            norm = max(np.linalg.norm(coords[i]), np.linalg.norm(coords[j]))
            dist = float(np.linalg.norm(coords[i] - coords[j]))
            if dist >= collision_tol * max(norm, 1e-300):
                continue
            kind = "nontrivial"
            for sign, name in ((-1.0, "equal"), (1.0, "negation")):
                v = points[i] + sign * points[j]
                a, b = lattice_coordinates(v, omega)
                allc = np.concatenate([a, b])
                if np.max(np.abs(allc - np.round(allc))) < lattice_tol:
                    kind = name
                    break
            collisions.append(Collision(
                i=i, j=j, relative_distance=dist / max(norm, 1e-300),
                trivial=kind != "nontrivial", kind=kind))
    return ProbeReport(
        genus=g, n_samples=n_samples, seed=seed,
        collision_tol=collision_tol, floor=floor, n_rejected=rejected,
        points=[list(p) for p in points],
        coordinates=[list(c) for c in coords],
        collisions=collisions,
        n_nontrivial=sum(1 for c in collisions if not c.trivial))


# ----------------------------------------------------------------------
# A-periods of the Bergman kernel (verification helper)
# ----------------------------------------------------------------------

def bergman_a_period(curve: HyperellipticCurve, x: SurfacePoint,
                     cut_index: int, n_nodes: int = 256,
                     delta: Characteristic = None, tol=DEFAULT_TOL) -> complex:
    """A-period in the second argument of the Bergman kernel (expected 0)."""
    xs, ys, dxs = curve.cycle_contour(cut_index, n_nodes)
    if delta is None:
        delta = select_odd_characteristic(curve, tol)
    total = 0j
    for xv, yv, dxv in zip(xs, ys, dxs):
        q = SurfacePoint(x=complex(xv), sheet=1, y=complex(yv), chart_scale=1.0)
        val = bergman_kernel(curve, x, q, delta=delta, tol=tol).value
        total += val * dxv
    return total * (2 * math.pi / n_nodes) / (2 * math.pi)
