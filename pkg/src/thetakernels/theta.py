"""Riemann theta functions with half-integer characteristics.

Evaluates

    theta[a,b](z, Omega) = sum_n exp(i pi (n+a)^T Omega (n+a)
                                      + 2 pi i (n+a)^T (z+b))

and its partial derivatives up to total order 3, with a certified
truncation bound.  The exponential growth factor exp(pi y^T Y^{-1} y)
(y = Im z, Y = Im Omega) is split off into the exponent of a
:class:`ScaledComplex`, so the lattice sum itself is uniformly bounded
and never overflows.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import NotPositiveDefinite, PointOnTheta, ToleranceTooSmall

_TWO_PI_I = 2j * math.pi
_LN2 = math.log(2.0)
_EPS = float(np.finfo(float).eps)

DEFAULT_TOL = 1e-12

#: |theta| below ``floor * max_term`` counts as "on the theta divisor".
THETA_FLOOR = 1e-8


class RiemannMatrix:
    """A symmetric g x g complex matrix with positive definite imaginary part.

    The matrix is symmetrized on construction; positive definiteness of
    the imaginary part is certified by a Cholesky factorization.  Derived
    data used by the theta sums (Cholesky factor of pi*Im(Omega), inverse
    of Im(Omega), shortest lattice vector) is precomputed and immutable.
    """

    __slots__ = ("entries", "dim", "im", "im_inv", "chol",
                 "shortest", "sigma_min")

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NotPositiveDefinite("period matrix must be square")
        m = 0.5 * (m + m.T)
        g = m.shape[0]
        y = m.imag
        try:
            lower = np.linalg.cholesky(math.pi * y)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite(
                "imaginary part is not positive definite") from None
        self.entries = m
        self.dim = g
        self.im = y
        self.im_inv = np.linalg.inv(y)
        self.chol = lower.T  # upper triangular T with T^T T = pi * Im(Omega)
        self.sigma_min = float(np.linalg.svd(self.chol, compute_uv=False)[-1])
        self.shortest = self._shortest_vector()

    def _shortest_vector(self) -> float:
        r0 = float(min(np.linalg.norm(self.chol[:, j]) for j in range(self.dim)))
        pts = _enumerate_ellipsoid(self.chol, np.zeros(self.dim), r0 * (1 + 1e-12))
        best = r0
        for n in pts:
            if any(n):
                best = min(best, float(np.linalg.norm(self.chol @ np.asarray(n, float))))
        return best

    def __repr__(self):
        return f"RiemannMatrix(g={self.dim})"


@dataclass(frozen=True)
class Characteristic:
    """Half-integer theta characteristic.

    ``alpha`` and ``beta`` hold the doubled entries, i.e. integers in
    {0, 1}; the actual characteristic is (alpha/2, beta/2).  Keeping
    integers makes the parity arithmetic exact.
    """

    alpha: tuple
    beta: tuple

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have equal length")
        if not all(a in (0, 1) for a in self.alpha + self.beta):
            raise ValueError("characteristic entries must be 0 or 1 (doubled halves)")

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def parity(self) -> int:
        """0 for even, 1 for odd (= 4 a.b mod 2)."""
        return sum(a * b for a, b in zip(self.alpha, self.beta)) % 2

    @staticmethod
    def zero(g: int) -> "Characteristic":
        return Characteristic((0,) * g, (0,) * g)

    @staticmethod
    def all(g: int):
        """All 2^(2g) characteristics in lexicographic (alpha, beta) order."""
        for bits in itertools.product((0, 1), repeat=2 * g):
            yield Characteristic(bits[:g], bits[g:])


@dataclass(frozen=True)
class ThetaRequest:
    """One theta evaluation: argument, characteristic, derivative, tolerance."""

    z: tuple
    char: Characteristic
    deriv: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if sum(self.deriv) > 3 or any(d < 0 for d in self.deriv):
            raise ValueError("derivative multi-index must have total order <= 3")


@dataclass(frozen=True)
class ScaledComplex:
    """A complex number stored as mantissa * exp(exponent).

    The mantissa is kept in [0.5, 2) in absolute value (unless the value
    is exactly zero), so products and quotients of theta values never
    overflow even deep in the Jacobian.
    """

    mantissa: complex
    exponent: float

    @staticmethod
    def make(mantissa: complex, exponent: float = 0.0) -> "ScaledComplex":
        if mantissa == 0:
            return ScaledComplex(0j, 0.0)
        k = math.floor(math.log2(abs(mantissa)))
        return ScaledComplex(mantissa / (2.0 ** k), exponent + k * _LN2)

    @property
    def value(self) -> complex:
        """Plain complex value; may overflow if the exponent is huge."""
        return self.mantissa * math.exp(self.exponent)

    @property
    def log_abs(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.exponent

    def __mul__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex.make(self.mantissa * other.mantissa,
                                      self.exponent + other.exponent)
        return ScaledComplex.make(self.mantissa * other, self.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex.make(self.mantissa / other.mantissa,
                                      self.exponent - other.exponent)
        return ScaledComplex.make(self.mantissa / other, self.exponent)

    def __neg__(self):
        return ScaledComplex(-self.mantissa, self.exponent)

    def ratio(self, other: "ScaledComplex") -> complex:
        """self / other as a plain complex number."""
        return (self.mantissa / other.mantissa) * math.exp(self.exponent - other.exponent)


# ----------------------------------------------------------------------
# Lattice enumeration
# ----------------------------------------------------------------------

def _enumerate_ellipsoid(T, center, radius):
    """Integer vectors n with ||T (n + center)|| <= radius, T upper triangular."""
    g = T.shape[0]
    out = []
    vec = [0] * g

    def descend(i, rem2, partial):
        # partial[k] = sum_{j>i} T[k, j] * (n_j + center_j) for k <= i
        if rem2 < 0:
            return
        t = T[i, i]
        s = partial[i]
        c = center[i]
        rad = math.sqrt(rem2) / abs(t)
        mid = -s / t - c
        lo = math.ceil(mid - rad - 1e-12)
        hi = math.floor(mid + rad + 1e-12)
        for n in range(lo, hi + 1):
            u = t * (n + c) + s
            rem2_next = rem2 - u * u
            if rem2_next < -1e-12 * max(1.0, rem2):
                continue
            vec[i] = n
            if i == 0:
                out.append(tuple(vec))
            else:
                nxt = partial.copy()
                nxt[:i] += T[:i, i] * (n + c)
                descend(i - 1, max(rem2_next, 0.0), nxt)

    descend(g - 1, radius * radius, np.zeros(g))
    out.sort()
    return out


def lattice_points(omega: RiemannMatrix, center, radius: float):
    """Integer vectors n with ||T (n + center)|| <= radius.

    T is the Cholesky factor of pi * Im(Omega).  The list is returned in
    lexicographic order, so downstream sums are deterministic.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float)
    return [np.array(p, dtype=int) for p in
            _enumerate_ellipsoid(omega.chol, center, radius)]


# ----------------------------------------------------------------------
# Truncation radius from the Gaussian tail bound
# ----------------------------------------------------------------------

def _tail_bound(omega: RiemannMatrix, R: float, order: int, norm_c: float) -> float:
    """Upper bound for the truncated tail of the (derivative) theta sum.

    Bounds sum_{||T(n+a)|| > R} (2 pi)^N ||n+alpha||^N exp(-||T(n+a)||^2)
    via disjoint balls of radius rho/2 around the lattice points and the
    radial incomplete-gamma integral.
    """
    g, rho, smin = omega.dim, omega.shortest, omega.sigma_min
    r0 = R - rho / 2.0
    if r0 <= 0:
        return math.inf
    total = 0.0
    pref = 0.5 * g * (2.0 / rho) ** g
    for j in range(order + 1):
        s = 0.5 * (g + j)
        gam = _sp.gammaincc(s, r0 * r0) * _sp.gamma(s)
        shift = (R / r0) ** j          # (||u|| + rho/2)^j vs ||u||^j slack
        comb = math.comb(order, j) * (norm_c ** (order - j) if order > j else 1.0)
        total += comb * smin ** (-j) * shift * pref * gam
    return (2.0 * math.pi) ** order * total


def _truncation_radius(omega: RiemannMatrix, order: int, tol: float,
                       norm_c: float) -> float:
    g, rho = omega.dim, omega.shortest
    R = rho / 2.0 + math.sqrt(0.5 * (g + order)) + 0.5
    while _tail_bound(omega, R, order, norm_c) > tol:
        R += 0.25
        if R > 80.0:
            raise ToleranceTooSmall(
                f"cannot certify tol={tol:g} within radius 80")
    return R


# ----------------------------------------------------------------------
# Core batched sum
# ----------------------------------------------------------------------

def theta_batch(z, omega: RiemannMatrix, char: Characteristic, derivs,
                tol: float = DEFAULT_TOL):
    """Evaluate several partial derivatives of theta[char] at one point.

    All derivatives share a single lattice enumeration.  Returns
    ``(mantissas, exponent, scale)`` where ``value_k = mantissas[k] *
    exp(exponent)`` and ``scale`` is the largest term magnitude of the
    order-zero sum (useful as a reference for divisor-proximity floors).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tol < 1e3 * _EPS:
        raise ToleranceTooSmall(
            f"tol={tol:g} below 1e3 * machine epsilon of the accumulated sum")
    z = np.asarray(z, dtype=complex).reshape(-1)
    g = omega.dim
    if len(z) != g or char.dim != g:
        raise ValueError("dimension mismatch between z, char and Omega")
    alpha = np.asarray(char.alpha, float) / 2.0
    beta = np.asarray(char.beta, float) / 2.0
    y = z.imag
    c = omega.im_inv @ y
    exponent = math.pi * float(y @ c)
    order = max(int(sum(d)) for d in derivs)
    radius = _truncation_radius(omega, order, tol, float(np.linalg.norm(c)))
    pts = _enumerate_ellipsoid(omega.chol, alpha + c, radius)
    if not pts:
        return [0j for _ in derivs], exponent, 0.0
    na = np.array(pts, dtype=float) + alpha
    quad = np.einsum("ij,jk,ik->i", na, omega.entries, na)
    lin = na @ (z + beta)
    terms = np.exp(1j * math.pi * quad + _TWO_PI_I * lin - exponent)
    out = []
    for d in derivs:
        fac = np.ones(len(na), dtype=complex)
        for k, dk in enumerate(d):
            if dk:
                fac = fac * (_TWO_PI_I * na[:, k]) ** dk
        out.append(complex(np.sum(fac * terms)))
    return out, exponent, float(np.abs(terms).max())


def theta(req: ThetaRequest, omega: RiemannMatrix) -> ScaledComplex:
    """Theta with characteristic, differentiated per ``req.deriv``.

    The absolute truncation error is at most ``req.tol * exp(exponent)``.
    """
    vals, exponent, _ = theta_batch(req.z, omega, req.char, [req.deriv], req.tol)
    return ScaledComplex.make(vals[0], exponent)


def theta_value(z, omega: RiemannMatrix, char: Characteristic = None,
                deriv=None, tol: float = DEFAULT_TOL) -> ScaledComplex:
    """Convenience wrapper building the request inline."""
    z = tuple(np.asarray(z, dtype=complex).reshape(-1))
    g = omega.dim
    if char is None:
        char = Characteristic.zero(g)
    if deriv is None:
        deriv = (0,) * g
    return theta(ThetaRequest(z, char, tuple(deriv), tol), omega)


def _hessian_derivs(g: int):
    """Multi-indices: value, gradient, upper-triangle Hessian (in order)."""
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
    return derivs, pairs


def log_theta_hessian(e, omega: RiemannMatrix, tol: float = DEFAULT_TOL,
                      floor: float = THETA_FLOOR):
    """Matrix of second logarithmic derivatives of theta at e.

    c_ij = (theta * theta_ij - theta_i * theta_j) / theta^2.  Raises
    :class:`PointOnTheta` when |theta(e)| is below ``floor`` times the
    largest term of the sum, i.e. when e lies on the theta divisor to
    working precision.
    """
    g = omega.dim
    derivs, pairs = _hessian_derivs(g)
    vals, _, scale = theta_batch(e, omega, Characteristic.zero(g), derivs, tol)
    th = vals[0]
    if abs(th) < floor * scale:
        raise PointOnTheta(f"|theta(e)| = {abs(th):.3e} under floor "
                           f"{floor:g} * {scale:.3e}")
    grad = np.array(vals[1:1 + g])
    c = np.empty((g, g), dtype=complex)
    for (i, j), v in zip(pairs, vals[1 + g:]):
        cij = (th * v - grad[i] * grad[j]) / (th * th)
        c[i, j] = cij
        c[j, i] = cij
    return c


def theta_gradient(e, omega: RiemannMatrix, char: Characteristic = None,
                   tol: float = DEFAULT_TOL):
    """(theta(e), grad theta(e), scale) sharing one lattice enumeration."""
    g = omega.dim
    if char is None:
        char = Characteristic.zero(g)
    derivs = [(0,) * g]
    for i in range(g):
        d = [0] * g
        d[i] = 1
        derivs.append(tuple(d))
    vals, exponent, scale = theta_batch(e, omega, char, derivs, tol)
    return vals[0], np.array(vals[1:]), exponent, scale


def second_order_theta_basis(z, omega: RiemannMatrix, tol: float = DEFAULT_TOL):
    """The 2^g second-order theta functions Theta[sigma](z) = theta[(sigma,0)](2z, 2 Omega).

    Components are ordered lexicographically in sigma over {0, 1/2}^g.
    """
    g = omega.dim
    omega2 = RiemannMatrix(2.0 * omega.entries)
    z2 = 2.0 * np.asarray(z, dtype=complex).reshape(-1)
    out = []
    for bits in itertools.product((0, 1), repeat=g):
        char = Characteristic(bits, (0,) * g)
        vals, exponent, _ = theta_batch(z2, omega2, char, [(0,) * g], tol)
        out.append(ScaledComplex.make(vals[0], exponent))
    return out
