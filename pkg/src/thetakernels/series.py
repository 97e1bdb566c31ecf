"""Truncated power series over exact rational-complex or float coefficients.

A :class:`Series` holds coefficients c_0..c_n of a function germ modulo
t^(n+1).  The default coefficient field is :class:`QC` (Gaussian
rationals, exact); plain ``complex`` coefficients give a floating mode
for interoperability with numerically computed curve data.  Arithmetic
truncates at the minimum order of the operands.
"""

from __future__ import annotations

from fractions import Fraction


class QC:
    """Gaussian rational: exact complex number with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(x) -> "QC":
        if isinstance(x, QC):
            return x
        if isinstance(x, complex):
            return QC(Fraction(x.real), Fraction(x.imag))
        return QC(Fraction(x))

    def __add__(self, other):
        o = QC.of(other)
        return QC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = QC.of(other)
        return QC(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return QC.of(other) - self

    def __mul__(self, other):
        o = QC.of(other)
        return QC(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QC.of(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero QC")
        return QC((self.re * o.re + self.im * o.im) / d,
                  (o.re * self.im - o.im * self.re) / d)

    def __rtruediv__(self, other):
        return QC.of(other) / self

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __pow__(self, n: int):
        if n < 0:
            return QC(1) / self ** (-n)
        out = QC(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        try:
            o = QC.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QC({self.re})"
        return f"QC({self.re}, {self.im})"


def _zero_like(c):
    return QC() if isinstance(c, QC) else 0j


def _one_like(c):
    return QC(1) if isinstance(c, QC) else (1 + 0j)


def _scalar_like(c, frac: Fraction):
    """Embed an exact rational into the coefficient field of ``c``."""
    return QC(frac) if isinstance(c, QC) else complex(frac)


class Series:
    """Coefficients c[0..n] of a germ modulo t^(n+1)."""

    __slots__ = ("c", "n")

    def __init__(self, coeffs, n=None):
        coeffs = list(coeffs)
        if n is None:
            n = len(coeffs) - 1
        if len(coeffs) < n + 1:
            pad = _zero_like(coeffs[0]) if coeffs else QC()
            coeffs = coeffs + [pad] * (n + 1 - len(coeffs))
        self.c = coeffs[:n + 1]
        self.n = n

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(n, exact=True):
        z = QC() if exact else 0j
        return Series([z] * (n + 1), n)

    @staticmethod
    def const(value, n, exact=True):
        s = Series.zero(n, exact)
        s.c[0] = QC.of(value) if exact else complex(value)
        return s

    @staticmethod
    def variable(n, exact=True):
        s = Series.zero(n, exact)
        if n >= 1:
            s.c[1] = QC(1) if exact else (1 + 0j)
        return s

    @staticmethod
    def from_coeffs(coeffs, n, exact=True):
        conv = QC.of if exact else complex
        out = [conv(c) for c in coeffs[:n + 1]]
        return Series(out, n)

    @property
    def exact(self) -> bool:
        return isinstance(self.c[0], QC)

    def copy(self):
        return Series(list(self.c), self.n)

    def truncate(self, m):
        if m > self.n:
            raise ValueError(f"cannot extend truncation order {self.n} to {m}")
        return Series(self.c[:m + 1], m)

    def __getitem__(self, k):
        return self.c[k] if k <= self.n else _zero_like(self.c[0])

    def is_zero(self) -> bool:
        return all(not _nonzero(x) for x in self.c)

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Series):
            out = self.copy()
            out.c[0] = out.c[0] + other
            return out
        n = min(self.n, other.n)
        return Series([self.c[k] + other.c[k] for k in range(n + 1)], n)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Series([-x for x in self.c], self.n)

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series([x * other for x in self.c], self.n)
        n = min(self.n, other.n)
        zero = _zero_like(self.c[0])
        out = [zero] * (n + 1)
        for i in range(n + 1):
            ci = self.c[i]
            if not _nonzero(ci):
                continue
            for j in range(n + 1 - i):
                cj = other.c[j]
                if _nonzero(cj):
                    out[i + j] = out[i + j] + ci * cj
        return Series(out, n)

    __rmul__ = __mul__

    def reciprocal(self):
        c0 = self.c[0]
        if not _nonzero(c0):
            raise ZeroDivisionError("series with zero constant term is not invertible")
        n = self.n
        inv0 = _one_like(c0) / c0
        out = [inv0] + [_zero_like(c0)] * n
        for k in range(1, n + 1):
            acc = _zero_like(c0)
            for j in range(1, k + 1):
                acc = acc + self.c[j] * out[k - j]
            out[k] = -inv0 * acc
        return Series(out, n)

    def __truediv__(self, other):
        if not isinstance(other, Series):
            inv = _one_like(self.c[0]) / (QC.of(other) if self.exact else complex(other))
            return self * inv
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = Series.const(1, self.n, self.exact)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def pow_fraction(self, alpha: Fraction):
        """(1 + x)^alpha by the binomial series; requires constant term 1."""
        one = _one_like(self.c[0])
        if self.c[0] != one:
            raise ValueError("fractional powers need constant term 1")
        x = self - one
        n = self.n
        out = Series.const(1, n, self.exact)
        term = Series.const(1, n, self.exact)
        coeff = Fraction(alpha)
        for k in range(1, n + 1):
            term = term * x
            if term.is_zero():
                break
            out = out + term * _scalar_like(self.c[0], coeff / math_factorial(k))
            coeff *= (alpha - k)
        return out

    # -- calculus ---------------------------------------------------------

    def derivative(self):
        n = self.n
        if n == 0:
            return Series([_zero_like(self.c[0])], 0)
        return Series([self.c[k + 1] * (k + 1) for k in range(n)], n - 1)

    def integrate(self):
        """Antiderivative with zero constant term; order grows by one."""
        out = [_zero_like(self.c[0])]
        for k, x in enumerate(self.c):
            out.append(x * _scalar_like(x, Fraction(1, k + 1)))
        return Series(out, self.n + 1)

    def compose(self, inner: "Series"):
        """self(inner(t)); requires inner(0) = 0."""
        if _nonzero(inner.c[0]):
            raise ValueError("composition requires inner constant term 0")
        n = min(self.n, inner.n)
        out = Series.const(self.c[0], n, self.exact)
        power = Series.const(1, n, self.exact)
        for k in range(1, n + 1):
            power = power * inner
            if power.is_zero():
                break
            out = out + power * self.c[k]
        return out

    def reversion(self):
        """Functional inverse w with self(w(t)) = t; needs c0=0, c1 != 0."""
        if _nonzero(self.c[0]) or not _nonzero(self.c[1]):
            raise ValueError("reversion requires c0 = 0 and c1 != 0")
        n = self.n
        one = _one_like(self.c[1])
        inv1 = one / self.c[1]
        w = Series.zero(n, self.exact)
        if n >= 1:
            w.c[1] = inv1
        for k in range(2, n + 1):
            # choose w_k so that [t^k] self(w(t)) = 0
            comp = self.compose(w)
            w.c[k] = -comp.c[k] * inv1
        return w

    def evaluate(self, t):
        acc = self.c[self.n]
        for k in range(self.n - 1, -1, -1):
            acc = acc * t + self.c[k]
        return acc

    def shift_argument(self, a):
        """Series of f(t + a) to the same truncation order (a in the field)."""
        n = self.n
        out = [_zero_like(self.c[0])] * (n + 1)
        # Horner in (t + a)
        for k in range(n, -1, -1):
            carry = out[:]
            out[0] = carry[0] * a + self.c[k]
            for j in range(1, n + 1):
                out[j] = carry[j] * a + carry[j - 1]
        return Series(out, n)

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        n = min(self.n, other.n)
        return all(self.c[k] == other.c[k] for k in range(n + 1))

    def __repr__(self):
        shown = ", ".join(repr(x) for x in self.c[:5])
        more = ", ..." if self.n > 4 else ""
        return f"Series([{shown}{more}], n={self.n})"


def math_factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def _nonzero(x) -> bool:
    return bool(x)
