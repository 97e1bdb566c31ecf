"""Exact jet calculus for kernel functions near the diagonal.

A kernel jet is a truncated expansion

    s = sum_{j=0}^{m-1} a_j(z1) * (z1 - z2)^(j - pole)
        * (dz1)^(weight/2) (dz2)^(weight/2)

of a two-point section on a formal disk, where the a_j are r x r
matrices of truncated power series in z1.  All operations (the
differential-operator dictionary, flat extensions of connections,
projective-structure kernels, matrix opers, trace/determinant maps and
the quadratic projection) are exact over Gaussian-rational coefficients.

Index conventions: ``u = z1 - z2``; the restriction to the diagonal in
the canonical trivialization is the coefficient a_d with d = pole -
weight, so "monic" means a_j = 0 for j < d and a_d = Id.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (DiagonalValueMismatch, NonInvertibleChart, NotMonic,
                     NotMonicOn2Delta, TraceNotZero, TruncationUnderflow,
                     WeightMismatch)
from .series import QC, Series, _scalar_like

DEFAULT_ORDER = 16


# ----------------------------------------------------------------------
# Small matrix helpers (entries are Series; ranks are tiny)
# ----------------------------------------------------------------------

def _mat_zero(r, n, exact=True):
    return [[Series.zero(n, exact) for _ in range(r)] for _ in range(r)]

def _mat_id(r, n, exact=True, value=1):
    m = _mat_zero(r, n, exact)
    for i in range(r):
        m[i][i] = Series.const(value, n, exact)
    return m

def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]

def _mat_scale(a, s):
    return [[x * s for x in row] for row in a]

def _mat_mul(a, b):
    r = len(a)
    q = len(b[0])
    inner = len(b)
    out = []
    for i in range(r):
        row = []
        for j in range(q):
            acc = a[i][0] * b[0][j]
            for k in range(1, inner):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out

def _mat_transpose(a):
    r = len(a)
    return [[a[j][i] for j in range(r)] for i in range(r)]

def _mat_deriv(a):
    return [[x.derivative() for x in row] for row in a]

def _mat_trace(a):
    acc = a[0][0]
    for i in range(1, len(a)):
        acc = acc + a[i][i]
    return acc

def _mat_is_zero(a):
    return all(x.is_zero() for row in a for x in row)

def _mat_eq(a, b):
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


# ----------------------------------------------------------------------
# u-jets: truncated expansions sum_k b_k(z) u^k with Series coefficients
# ----------------------------------------------------------------------

def _uj_mul(a, b, m):
    out = [None] * m
    for i, ai in enumerate(a[:m]):
        for j, bj in enumerate(b):
            if i + j >= m:
                break
            prod = ai * bj
            out[i + j] = prod if out[i + j] is None else out[i + j] + prod
    n = a[0].n
    exact = a[0].exact
    return [Series.zero(n, exact) if x is None else x for x in out]

def _uj_one(m, n, exact=True):
    return [Series.const(1, n, exact)] + [Series.zero(n, exact)] * (m - 1)

def _uj_scale(a, s):
    return [x * s for x in a]

def _uj_add(a, b):
    return [x + y for x, y in zip(a, b)]

def _uj_reciprocal(a, m):
    lead = a[0].reciprocal()
    n, exact = a[0].n, a[0].exact
    out = [lead] + [Series.zero(n, exact)] * (m - 1)
    for k in range(1, m):
        acc = Series.zero(n, exact)
        for j in range(1, k + 1):
            if j < len(a):
                acc = acc + a[j] * out[k - j]
        out[k] = -(lead * acc)
    return out

def _uj_pow(a, k, m):
    if k < 0:
        return _uj_pow(_uj_reciprocal(a, m), -k, m)
    out = _uj_one(m, a[0].n, a[0].exact)
    base = list(a)
    while k:
        if k & 1:
            out = _uj_mul(out, base, m)
        base = _uj_mul(base, base, m)
        k >>= 1
    return out

def _uj_pow_fraction(a, alpha: Fraction, m):
    """a^alpha for a u-jet whose leading Series is 1."""
    one = Series.const(1, a[0].n, a[0].exact)
    if not (a[0] == one):
        raise ValueError("fractional u-jet powers need leading coefficient 1")
    x = list(a)
    x[0] = a[0] - one
    out = _uj_one(m, a[0].n, a[0].exact)
    term = _uj_one(m, a[0].n, a[0].exact)
    coeff = Fraction(alpha)
    fact = 1
    for k in range(1, m):
        term = _uj_mul(term, x, m)
        fact *= k
        scalar = _scalar_like(a[0].c[0], coeff / fact)
        out = _uj_add(out, _uj_scale(term, scalar))
        coeff *= (alpha - k)
    return out


def _shifted_series(w: Series, m):
    """u-jet of w(z - u): coefficients w^(k)(z) (-1)^k / k!."""
    out = []
    d = w
    fact = 1
    for k in range(m):
        if k:
            d = d.derivative()
            fact *= k
        sign = Fraction((-1) ** k, fact)
        out.append(d * _scalar_like(w.c[0], sign))
    return out


def _delta_series(w: Series, m):
    """u-jet of (w(z) - w(z-u))/u; leading coefficient is w'(z)."""
    out = []
    d = w.derivative()
    fact = 1
    for k in range(m):
        if k:
            d = d.derivative()
            fact *= (k + 1)
        sign = Fraction((-1) ** k, fact)
        out.append(d * _scalar_like(w.c[0], sign))
    return out


# ----------------------------------------------------------------------
# Jet kernels
# ----------------------------------------------------------------------

class JetKernel:
    """Truncated kernel expansion along the diagonal (see module docstring)."""

    __slots__ = ("rank", "weight", "pole", "coeffs")

    def __init__(self, rank, weight, pole, coeffs):
        self.rank = rank
        self.weight = weight
        self.pole = pole
        self.coeffs = coeffs   # list (length m) of r x r matrices of Series

    @property
    def order(self):
        return len(self.coeffs)

    @property
    def diag_index(self):
        return self.pole - self.weight

    @property
    def series_order(self):
        return self.coeffs[0][0][0].n

    @property
    def exact(self):
        return self.coeffs[0][0][0].exact

    def copy(self):
        return JetKernel(self.rank, self.weight, self.pole,
                         [[[s.copy() for s in row] for row in mat]
                          for mat in self.coeffs])

    def coeff(self, j):
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return _mat_zero(self.rank, self.series_order, self.exact)

    def scalar_coeff(self, j):
        return self.coeff(j)[0][0]

    def restrict(self, m):
        """Restriction to the m-th order neighborhood (coefficient truncation)."""
        if m > self.order:
            raise TruncationUnderflow(
                f"jet of order {self.order} cannot be restricted to {m}")
        return JetKernel(self.rank, self.weight, self.pole, self.coeffs[:m])

    def diagonal(self):
        """Restriction to the diagonal in the canonical trivialization."""
        d = self.diag_index
        if d < 0:
            raise WeightMismatch("pole smaller than weight has no diagonal value")
        return self.coeff(d)

    def is_monic(self):
        d = self.diag_index
        if d < 0 or d >= self.order:
            return False
        for j in range(d):
            if not _mat_is_zero(self.coeffs[j]):
                return False
        return _mat_eq(self.coeffs[d], _mat_id(self.rank, self.series_order, self.exact))

    def require_monic(self):
        if not self.is_monic():
            raise NotMonic("kernel does not restrict to the identity on the diagonal")

    # -- algebra ----------------------------------------------------------

    def __add__(self, other):
        p = max(self.pole, other.pole)
        a = self._with_pole(p)
        b = other._with_pole(p)
        if a.weight != b.weight:
            raise WeightMismatch("cannot add kernels of different weights")
        m = min(a.order, b.order)
        return JetKernel(a.rank, a.weight, p,
                         [_mat_add(a.coeffs[j], b.coeffs[j]) for j in range(m)])

    def __sub__(self, other):
        return self + other.scale(-1)

    def _with_pole(self, p):
        if p == self.pole:
            return self
        if p < self.pole:
            raise WeightMismatch("cannot lower the pole order")
        shift = p - self.pole
        pad = [_mat_zero(self.rank, self.series_order, self.exact)
               for _ in range(shift)]
        return JetKernel(self.rank, self.weight, p, pad + self.coeffs)

    def scale(self, s):
        return JetKernel(self.rank, self.weight, self.pole,
                         [_mat_scale(mat, s) for mat in self.coeffs])

    def __mul__(self, other):
        """Tensor product of kernels: weights and poles add."""
        if not isinstance(other, JetKernel):
            return self.scale(other)
        m = min(self.order, other.order)
        r1, r2 = self.rank, other.rank
        if r1 != r2 and 1 not in (r1, r2):
            raise WeightMismatch("rank mismatch in kernel product")
        rank = max(r1, r2)
        out = [_mat_zero(rank, self.series_order, self.exact) for _ in range(m)]
        for i in range(m):
            ai = self.coeffs[i] if i < self.order else None
            if ai is None or _mat_is_zero(ai):
                continue
            for j in range(m - i):
                bj = other.coeffs[j]
                if _mat_is_zero(bj):
                    continue
                if r1 == r2:
                    prod = _mat_mul(ai, bj)
                elif r1 == 1:
                    prod = _mat_scale(bj, ai[0][0])
                else:
                    prod = _mat_scale(ai, bj[0][0])
                out[i + j] = _mat_add(out[i + j], prod)
        return JetKernel(rank, self.weight + other.weight,
                         self.pole + other.pole, out)

    def swap(self):
        """Pullback under (z1, z2) -> (z2, z1), no matrix transpose."""
        m = self.order
        out = [_mat_zero(self.rank, self.series_order, self.exact)
               for _ in range(m)]
        for j in range(m):
            mat = self.coeffs[j]
            if _mat_is_zero(mat):
                continue
            sign_j = (-1) ** ((j - self.pole) % 2)
            d = mat
            fact = 1
            for k in range(m - j):
                if k:
                    d = _mat_deriv(d)
                    fact *= k
                scalar = Fraction(sign_j * (-1) ** k, fact)
                term = _mat_scale(d, _scalar_like(mat[0][0].c[0], scalar))
                out[j + k] = _mat_add(out[j + k], term)
        return JetKernel(self.rank, self.weight, self.pole, out)

    def transpose(self):
        """sigma-pullback combined with the matrix transpose."""
        sw = self.swap()
        return JetKernel(self.rank, self.weight, self.pole,
                         [_mat_transpose(mat) for mat in sw.coeffs])

    def trace(self, normalized=True):
        """Scalar kernel of (normalized) traces of the coefficients."""
        out = []
        for mat in self.coeffs:
            t = _mat_trace(mat)
            if normalized and self.rank > 1:
                t = t * _scalar_like(t.c[0], Fraction(1, self.rank))
            out.append([[t]])
        return JetKernel(1, self.weight, self.pole, out)

    def __eq__(self, other):
        if not isinstance(other, JetKernel):
            return NotImplemented
        if self.rank != other.rank or self.weight != other.weight:
            return False
        p = max(self.pole, other.pole)
        a, b = self._with_pole(p), other._with_pole(p)
        m = min(a.order, b.order)
        return all(_mat_eq(a.coeffs[j], b.coeffs[j]) for j in range(m))

    def __repr__(self):
        return (f"JetKernel(rank={self.rank}, weight={self.weight}, "
                f"pole={self.pole}, order={self.order})")


def mu_nu(nu: int, m: int, order: int = DEFAULT_ORDER, exact: bool = True) -> JetKernel:
    """The canonical rank-1 jet dz^(nu/2) x dz^(nu/2) / (z1-z2)^nu on m-th order."""
    if m < 1:
        raise ValueError("m must be >= 1")
    coeffs = [_mat_id(1, order, exact)]
    coeffs += [_mat_zero(1, order, exact) for _ in range(m - 1)]
    return JetKernel(1, nu, nu, coeffs)


def from_scalar_jet(ujet, weight, pole):
    """Rank-1 JetKernel from a u-jet (list of Series)."""
    return JetKernel(1, weight, pole, [[[s]] for s in ujet])


def tensor_power(s: JetKernel, k: int) -> JetKernel:
    out = s
    for _ in range(k - 1):
        out = out * s
    return out


# ----------------------------------------------------------------------
# Differential operators
# ----------------------------------------------------------------------

@dataclass
class DiffOperator:
    """Monic operator D^n - q_1 D^(n-1) - ... - q_n with matrix coefficients.

    ``q`` is the list [q_1, ..., q_n] of r x r matrices of Series.  The
    operator acts between the weight-(1-n)/2 and weight-(1+n)/2 twists;
    only the order matters for the formal calculus here.
    """

    order: int
    rank: int
    q: list

    @property
    def is_sl(self) -> bool:
        return _mat_trace(self.q[0]).is_zero() if self.q else True

    def apply(self, f):
        """Apply to a Series (rank 1) or a list of Series (column vector)."""
        scalar = not isinstance(f, list)
        vec = [f] if scalar else f
        derivs = [vec]
        for _ in range(self.order):
            derivs.append([s.derivative() for s in derivs[-1]])
        out = derivs[self.order]
        for i, qi in enumerate(self.q, start=1):
            term = [_sum_series([qi[a][b] * derivs[self.order - i][b]
                                 for b in range(self.rank)])
                    for a in range(self.rank)]
            out = [x - y for x, y in zip(out, term)]
        return out[0] if scalar else out

    def solve(self, initial, order_n: int):
        """Series solution with given jet (f(0), f'(0), ..., f^(n-1)(0)); rank 1."""
        if self.rank != 1:
            raise ValueError("series solve implemented for scalar operators")
        n = self.order
        exact = self.q[0][0][0].exact if self.q else True
        conv = QC.of if exact else complex
        c = [conv(v) for v in initial]
        facts = [1]
        for k in range(1, order_n + n + 1):
            facts.append(facts[-1] * k)
        # Taylor coefficients of f up to order_n; c[k] = f^(k)(0)/k!
        c = [ci * _scalar_like_ring(exact, Fraction(1, facts[k]))
             for k, ci in enumerate(c)]
        for j in range(order_n - n + 1):
            # t^j coefficient of f^(n) equals sum_i [q_i f^(n-i)]_j
            rhs = _zero_ring(exact)
            for i in range(1, n + 1):
                qi = self.q[i - 1][0][0]
                acc = _zero_ring(exact)
                for a in range(j + 1):
                    if a > qi.n:
                        break
                    b = j - a
                    # [f^(n-i)]_b = c[b + n - i] * (b+n-i)! / b!
                    idx = b + n - i
                    if idx < len(c):
                        acc = acc + qi.c[a] * c[idx] * _scalar_like_ring(
                            exact, Fraction(facts[idx], facts[b]))
                rhs = rhs + acc
            # c[j + n] = rhs * j! / (j+n)!
            c.append(rhs * _scalar_like_ring(exact, Fraction(facts[j], facts[j + n])))
        return Series(c[:order_n + 1], order_n)


def _sum_series(items):
    acc = items[0]
    for x in items[1:]:
        acc = acc + x
    return acc


def _zero_ring(exact):
    return QC() if exact else 0j


def _scalar_like_ring(exact, frac: Fraction):
    return QC(frac) if exact else complex(frac)


# ----------------------------------------------------------------------
# Kernel <-> operator dictionary
# ----------------------------------------------------------------------

def kernel_to_operator(s: JetKernel) -> DiffOperator:
    """Operator of order n = pole - 1 from a kernel jet via the residue pairing.

    Normalized so that the canonical weight-2 jet maps to the first
    derivative; with that calibration monic kernels give monic operators.
    """
    if s.pole != s.weight:
        raise WeightMismatch("operator extraction needs pole == weight")
    n = s.pole - 1
    if s.order < n + 1:
        raise TruncationUnderflow(f"need jet order {n + 1}, have {s.order}")
    r = s.rank
    # c_i = sum_j n!/(n-j)! * binom(n-j, i) * a_j^{(n-j-i)}
    cs = []
    for i in range(n + 1):
        acc = _mat_zero(r, s.series_order, s.exact)
        for j in range(n - i + 1):
            mat = s.coeff(j)
            k = n - j - i
            d = mat
            for _ in range(k):
                d = _mat_deriv(d)
            factor = Fraction(_factorial(n), _factorial(n - j)) * _binom(n - j, i)
            acc = _mat_add(acc, _mat_scale(d, _scalar_like(
                mat[0][0].c[0], factor)))
        cs.append(acc)
    lead = cs[n]
    if not _mat_eq(lead, _mat_id(r, s.series_order, s.exact)):
        raise NotMonic("kernel is not monic; leading operator coefficient != Id")
    q = [_mat_scale(cs[n - i], -1) for i in range(1, n + 1)]
    return DiffOperator(order=n, rank=r, q=q)


def operator_to_kernel(L: DiffOperator, order: int = None) -> JetKernel:
    """Inverse of :func:`kernel_to_operator` on (n+1)-order jets."""
    n = L.order
    r = L.rank
    some = L.q[0][0][0] if L.q else Series.zero(DEFAULT_ORDER)
    nser = max((q[i][k].n for q in L.q for i in range(r) for k in range(r)),
               default=DEFAULT_ORDER)
    exact = some.exact
    cs = [_mat_scale(L.q[n - 1 - i], -1) for i in range(n)]
    # monicity is exact, so the identity row carries extra series order
    # and its derivatives never degrade the reconstruction
    cs.append(_mat_id(r, nser + n, exact))
    a = [_mat_id(r, nser + n, exact)]
    for j in range(1, n + 1):
        # c_{n-j} = (n!/(n-j)!) a_j + contributions from a_{j'} with j' < j
        acc = cs[n - j]
        for jp in range(j):
            d = a[jp]
            for _ in range(j - jp):
                d = _mat_deriv(d)
            factor = (Fraction(_factorial(n), _factorial(n - jp))
                      * _binom(n - jp, n - j))
            acc = _mat_add(acc, _mat_scale(d, _scalar_like(
                some.c[0], -factor)))
        a.append(_mat_scale(acc, _scalar_like(
            some.c[0], Fraction(_factorial(n - j), _factorial(n)))))
    m = order or (n + 1)
    while len(a) < m:
        a.append(_mat_zero(r, nser, exact))
    return JetKernel(r, n + 1, n + 1, a[:m])


def _factorial(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def _binom(n, k):
    if k < 0 or k > n:
        return 0
    return _factorial(n) // (_factorial(k) * _factorial(n - k))


# ----------------------------------------------------------------------
# Connections
# ----------------------------------------------------------------------

@dataclass
class ConnectionJet:
    """Connection nabla = d - Gamma dz on a formal disk; Gamma is r x r Series."""

    rank: int
    gamma: list

    def solve(self, initial, order_n: int):
        """Flat section v with v(0) = initial, v' = Gamma v."""
        exact = self.gamma[0][0].exact
        conv = QC.of if exact else complex
        cols = [[conv(v)] for v in initial]   # cols[a] = coeff list of v_a
        for k in range(order_n):
            new = []
            for a in range(self.rank):
                acc = _zero_ring(exact)
                for b in range(self.rank):
                    gab = self.gamma[a][b]
                    for i in range(min(k, gab.n) + 1):
                        acc = acc + gab.c[i] * cols[b][k - i]
                new.append(acc * _scalar_like_ring(exact, Fraction(1, k + 1)))
            for a in range(self.rank):
                cols[a].append(new[a])
        return [Series(col, order_n) for col in cols]


def connection_from_kernel(s: JetKernel) -> ConnectionJet:
    """Extract the connection from the order-1 jet of a monic kernel."""
    s.require_monic()
    d = s.diag_index
    return ConnectionJet(rank=s.rank, gamma=s.coeff(d + 1))


def flat_extension(conn: ConnectionJet, m: int) -> JetKernel:
    """Flat kernel kappa_m with kappa|_Delta = Id, solving the connection.

    Satisfies d/du kappa = kappa * Gamma(z1 - u); the nonlinearity in
    Gamma is exact over the rationals.
    """
    r = conn.rank
    some = conn.gamma[0][0]
    nser, exact = some.n, some.exact
    if m - 1 > nser:
        raise TruncationUnderflow("series order too small for flat extension")
    gs = []   # u-jet of Gamma(z1 - u): matrices
    d = conn.gamma
    fact = 1
    for k in range(m):
        if k:
            d = _mat_deriv(d)
            fact *= k
        gs.append(_mat_scale(d, _scalar_like(some.c[0],
                                             Fraction((-1) ** k, fact))))
    a = [_mat_id(r, nser, exact)]
    for j in range(m - 1):
        acc = _mat_zero(r, nser, exact)
        for i in range(j + 1):
            acc = _mat_add(acc, _mat_mul(a[i], gs[j - i]))
        a.append(_mat_scale(acc, _scalar_like(some.c[0], Fraction(1, j + 1))))
    return JetKernel(r, 0, 0, a)


def companion_connection(L: DiffOperator) -> ConnectionJet:
    """Rank-n companion form: q_i across the first row, 1s on the subdiagonal."""
    if L.rank != 1:
        raise ValueError("companion form applies to scalar operators")
    n = L.order
    some = L.q[0][0][0]
    nser, exact = some.n, some.exact
    gamma = _mat_zero(n, nser, exact)
    for i in range(n):
        gamma[0][i] = L.q[i][0][0].copy()
    for i in range(n - 1):
        gamma[i + 1][i] = Series.const(1, nser, exact)
    return ConnectionJet(rank=n, gamma=gamma)


# ----------------------------------------------------------------------
# Coordinate changes
# ----------------------------------------------------------------------

def change_coordinate(s: JetKernel, w: Series) -> JetKernel:
    """Re-expand a rank-1 kernel in a new chart t with z = w(t).

    ``w`` must fix the center (w(0) = 0) and be invertible (w'(0) != 0).
    Only integer powers of w' and rational-coefficient correction series
    occur, so the result is exact over exact coefficients.
    """
    if s.rank != 1:
        raise WeightMismatch("coordinate changes implemented for rank-1 kernels")
    if bool(w.c[0]) or not bool(w.c[1]):
        raise NonInvertibleChart("need w(0) = 0 and w'(0) != 0")
    m = s.order
    nu = s.weight
    nser = w.n
    dw = _delta_series(w, m)                  # (w(t1) - w(t2)) / v
    dwi = _uj_reciprocal(dw, m)
    wp = w.derivative()
    # (w'(t1) w'(t2))^(nu/2) = w'(t1)^nu * [w'(t1 - v)/w'(t1)]^(nu/2)
    ratio = [x / wp for x in _shifted_series(wp, m)]
    prefactor = _uj_pow_fraction(ratio, Fraction(nu, 2), m)
    wp_pow = wp ** nu
    total = [Series.zero(nser, s.exact) for _ in range(m)]
    for j in range(m):
        aj = s.scalar_coeff(j)
        if aj.is_zero():
            continue
        comp = aj.compose(w)
        rel = j - s.pole
        base = _uj_pow(dw, rel, m) if rel >= 0 else _uj_pow(dwi, -rel, m)
        term = _uj_scale(base, comp)
        # the v^(j-pole) prefactor shifts the expansion up by j slots
        for k in range(m - j):
            total[k + j] = total[k + j] + term[k]
    total = _uj_mul(total, prefactor, m)
    total = [x * wp_pow for x in total]
    return from_scalar_jet(total, nu, s.pole)


# ----------------------------------------------------------------------
# Projective structures and opers
# ----------------------------------------------------------------------

def sturm_liouville_solutions(q: Series, order_n: int):
    """Fundamental series solutions of f'' = q f with jets (1,0) and (0,1)."""
    L = DiffOperator(order=2, rank=1, q=[[[Series.zero(q.n, q.exact)]], [[q]]])
    f1 = L.solve([1, 0], order_n)
    f2 = L.solve([0, 1], order_n)
    return f1, f2


def projective_chart(q: Series, order_n: int) -> Series:
    """Developing coordinate w = f2/f1 of the projective structure d^2 - q."""
    f1, f2 = sturm_liouville_solutions(q, order_n)
    return f2 / f1


def gamma_from_projective(q: Series, nu: int, m: int) -> JetKernel:
    """Kernel dw^(nu/2) x dw^(nu/2) / (w1 - w2)^nu of the structure d^2 - q.

    ``w`` is the ratio of two independent solutions of the
    Sturm-Liouville operator; the result is independent of the chosen
    solution pair (Moebius invariance of the construction).
    """
    w = projective_chart(q, q.n)
    return _gamma_from_chart(w, nu, m)


def _gamma_from_chart(w: Series, nu: int, m: int) -> JetKernel:
    nser = w.n
    exact = w.exact
    dw = _delta_series(w, m)
    wp = w.derivative()
    ratio = [x / wp for x in _shifted_series(wp, m)]
    prefactor = _uj_pow_fraction(ratio, Fraction(nu, 2), m)
    core = _uj_pow(_uj_reciprocal(dw, m), nu, m) if nu >= 0 else _uj_pow(dw, -nu, m)
    total = _uj_mul(core, prefactor, m)
    wp_pow = wp ** nu
    total = [x * wp_pow for x in total]
    return from_scalar_jet(total, nu, nu)


def rescale_shift(s: JetKernel, k: int) -> Series:
    """Projective-connection data of a third-order jet, normalized from scale k.

    Requires the jet to agree with the canonical jet up to second order
    (monic on 2 Delta); returns q with deviation = -k q / 6, the
    normalization in which the rank-1 kernel of d^2 - q has q itself as
    its projective data.
    """
    if s.rank != 1:
        raise WeightMismatch("projective extraction needs a rank-1 kernel")
    d = s.diag_index
    if s.order < d + 3:
        raise TruncationUnderflow("need a jet on the third-order neighborhood")
    one = Series.const(1, s.series_order, s.exact)
    if not (s.scalar_coeff(d) == one) or not s.scalar_coeff(d + 1).is_zero():
        raise NotMonicOn2Delta("jet does not restrict to the canonical jet on 2 Delta")
    for j in range(d):
        if not s.scalar_coeff(j).is_zero():
            raise NotMonicOn2Delta("jet has extra singular terms")
    dev = s.scalar_coeff(d + 2)
    return dev * _scalar_like(dev.c[0], Fraction(-6, k))


def projective_jet(q: Series, k: int, nu: int = None, m: int = 3) -> JetKernel:
    """Inverse of :func:`rescale_shift`: the canonical jet plus deviation -k q/6."""
    nu = k if nu is None else nu
    base = mu_nu(nu, m, q.n, q.exact)
    dev = q * _scalar_like(q.c[0], Fraction(-k, 6))
    out = base.copy()
    out.coeffs[2][0][0] = out.coeffs[2][0][0] + dev
    return out


def build_oper(q: Series, v: dict, n: int, m: int) -> JetKernel:
    """SL_n-oper kernel over the projective structure d^2 - q.

    ``v`` maps slot degrees i (3 <= i <= n) to Series v_i, the
    polydifferential slots written in the base chart; degree-2 slots are
    carried by q itself and must not appear.  The jet restricts to the
    canonical jet on the second-order neighborhood and to the projective
    structure on the third-order one, and the slots act additively.
    """
    if any(i == 2 and not vi.is_zero() for i, vi in v.items()):
        raise ValueError("the degree-2 slot is carried by the projective structure")
    if any(i < 2 or i > n for i in v):
        raise ValueError(f"slot degrees must lie in 2..{n}")
    w = projective_chart(q, q.n)
    gamma = _gamma_from_chart(w, n + 1, m)
    nser, exact = w.n, gamma.exact
    dw = _delta_series(w, m)
    wp = w.derivative()
    mult = _uj_one(m, nser, exact)
    for i, vi in sorted(v.items()):
        if i == 2 or vi.is_zero():
            continue
        transported = vi / (wp ** i)          # v_i dz^i = (v_i / w'^i) dw^i
        base = _uj_pow(dw, i, m)
        term = _uj_scale(base, transported)
        shifted = [Series.zero(nser, exact) for _ in range(m)]
        for k in range(m - i):
            shifted[k + i] = term[k]
        mult = _uj_add(mult, shifted)
    return gamma * from_scalar_jet(mult, 0, 0)


# ----------------------------------------------------------------------
# Matrix opers, trace and determinant maps
# ----------------------------------------------------------------------

def matrix_oper(conn: ConnectionJet, oper: JetKernel, eta: dict) -> JetKernel:
    """Matrix oper from a connection, a scalar oper kernel and traceless slots.

    ``eta`` maps slot degrees i (2 <= i <= n) to traceless r x r matrices
    of Series.  The kernel is kappa * (oper + slot corrections) in the
    flat frame of the connection: restriction to the diagonal is the
    identity, the induced connection is ``conn``, and the normalized
    trace with all slots zero returns ``oper``.
    """
    oper.require_monic()
    if oper.rank != 1:
        raise WeightMismatch("the oper factor must have rank 1")
    m = oper.order
    r = conn.rank
    kappa = flat_extension(conn, m)
    scalar_part = oper.copy()
    out = kappa * scalar_part
    nser, exact = out.series_order, out.exact
    for i, mat in sorted(eta.items()):
        if not _mat_trace(mat).is_zero():
            raise TraceNotZero(f"slot {i} has nonzero trace")
        corr = [_mat_zero(r, nser, exact) for _ in range(m)]
        idx = oper.diag_index + i
        if idx < m:
            corr[idx] = mat
            corr_jet = JetKernel(r, oper.weight, oper.pole, corr)
            out = out + kappa * corr_jet
    return out


def trace_map(s: JetKernel, p: str = "trace") -> JetKernel:
    """Scalar (shifted) oper jet from a matrix oper via an invariant polynomial.

    The kernel is transported to an End-valued jet with the flat kernel
    of its own induced connection; ``p`` is then applied valuewise
    ('trace' = normalized trace, 'det' = determinant of the End factor).
    """
    conn = connection_from_kernel(s)
    kappa = flat_extension(conn, s.order)
    g = s * kappa.swap()
    if p == "trace":
        return g.trace(normalized=True)
    if p == "det":
        # determinant of the End-factor: strip the canonical u-power first
        return _det_of_coefficients(g, g.pole, g.weight)
    raise ValueError(f"unknown invariant polynomial selector {p!r}")


def _entry_ujet(s: JetKernel, i, k):
    return [s.coeffs[j][i][k] for j in range(s.order)]


def _permutations_with_sign(r):
    import itertools as _it
    base = list(range(r))
    for perm in _it.permutations(base):
        inv = sum(1 for a in range(r) for b in range(a + 1, r)
                  if perm[a] > perm[b])
        yield perm, (-1) ** (inv % 2)


def _det_of_coefficients(s: JetKernel, out_pole, out_weight) -> JetKernel:
    """Leibniz determinant of the coefficient matrix as a function jet."""
    m = s.order
    r = s.rank
    nser, exact = s.series_order, s.exact
    total = [Series.zero(nser, exact) for _ in range(m)]
    for perm, sign in _permutations_with_sign(r):
        prod = _uj_one(m, nser, exact)
        for i in range(r):
            prod = _uj_mul(prod, _entry_ujet(s, i, perm[i]), m)
        total = _uj_add(total, _uj_scale(prod, sign))
    return from_scalar_jet(total, out_weight, out_pole)


def det_kernel(s: JetKernel) -> JetKernel:
    """Exterior-power determinant: weight and pole multiply by the rank."""
    if s.order < 1:
        raise TruncationUnderflow("empty jet")
    r = s.rank
    return _det_of_coefficients(s, r * s.pole, r * s.weight)


# ----------------------------------------------------------------------
# The quadratic map and its deformation
# ----------------------------------------------------------------------

def quadratic_S(s: JetKernel, lam):
    """Trace of the square of a third-order kernel jet.

    Computes S(s) = (-1)^weight tr[s(z1,z2) s(z2,z1)] / rank on the
    third-order neighborhood (the sign makes S monic for every weight,
    compensating the swap parity of the canonical jet).  For lam != 0
    the second-order deviation is returned as a projective connection,
    renormalized by the torsor rescaling 2 lam (n+1); for lam = 0 the
    result is the quadratic differential tr(eta^2) of the underlying
    traceless slot.
    """
    lam_c = QC.of(lam) if s.exact else complex(lam)
    d = s.diag_index
    if s.order < d + 3:
        raise TruncationUnderflow("need a jet on the third-order neighborhood")
    diag = s.diagonal()
    expect = _mat_id(s.rank, s.series_order, s.exact, value=lam_c)
    if not _mat_eq(diag, expect):
        raise DiagonalValueMismatch("s|_Delta != lam * Id")
    for j in range(d):
        if not _mat_is_zero(s.coeffs[j]):
            raise DiagonalValueMismatch("extra singular terms below the diagonal order")
    big = (s * s.swap()).trace(normalized=False)
    sign = (-1) ** (s.weight % 2)
    big = big.scale(_scalar_like(big.scalar_coeff(big.diag_index).c[0],
                                 Fraction(sign, s.rank)))
    dev = big.scalar_coeff(big.diag_index + 2)
    if not bool(lam_c):
        # quadratic Hitchin map: the raw deviation is -tr(eta^2)/rank
        return dev * _scalar_like(dev.c[0], Fraction(-s.rank))
    # S|_2Delta = lam^2 * canonical jet; the square-root identification
    # back to Proj(lam (n+1)) divides the deviation by 2 lam (n+1)
    q = dev * _scalar_like(dev.c[0], Fraction(-6, 2 * s.pole))
    return q * (_one_of(dev) / lam_c)


def quadratic_S_jet(s: JetKernel) -> JetKernel:
    """The full (sign-normalized) kernel jet of the quadratic map."""
    big = (s * s.swap()).trace(normalized=False)
    sign = (-1) ** (s.weight % 2)
    return big.scale(_scalar_like(big.scalar_coeff(0).c[0],
                                  Fraction(sign, s.rank)))


def _one_of(series: Series):
    return QC(1) if series.exact else (1 + 0j)
