"""Exact Gaussian rationals, i.e. elements of Q(i)."""

from fractions import Fraction
from math import gcd
import numbers


class GaussianRational:
    """Exact number ``(a + b*i) / d`` with integers ``a, b`` and ``d > 0``.

    Stored in lowest terms, so equal values have equal representations and
    hash identically.  Mixed arithmetic with ``int`` and ``Fraction`` is
    supported.
    """

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, re=0, im=0):
        re = Fraction(re)
        im = Fraction(im)
        d = re.denominator * im.denominator // gcd(re.denominator, im.denominator)
        self._set(re.numerator * (d // re.denominator), im.numerator * (d // im.denominator), d)

    def _set(self, a, b, d):
        if d < 0:
            a, b, d = -a, -b, -d
        g = gcd(gcd(a, b), d)
        if g > 1:
            a //= g
            b //= g
            d //= g
        self._a, self._b, self._d = a, b, d

    @classmethod
    def _raw(cls, a, b, d):
        obj = cls.__new__(cls)
        obj._set(a, b, d)
        return obj

    @classmethod
    def coerce(cls, x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            return cls._raw(x, 0, 1)
        if isinstance(x, Fraction):
            return cls._raw(x.numerator, 0, x.denominator)
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, numbers.Real):
            return cls(Fraction(x))
        if isinstance(x, numbers.Complex):
            return cls(Fraction(float(x.real)), Fraction(float(x.imag)))
        raise TypeError(f"cannot convert {type(x).__name__} to GaussianRational")

    # --- parts -----------------------------------------------------------
    @property
    def re(self):
        return Fraction(self._a, self._d)

    @property
    def im(self):
        return Fraction(self._b, self._d)

    def is_zero(self):
        return self._a == 0 and self._b == 0

    def is_real(self):
        return self._b == 0

    def conjugate(self):
        return GaussianRational._raw(self._a, -self._b, self._d)

    def norm(self):
        """Squared modulus as a Fraction."""
        return Fraction(self._a * self._a + self._b * self._b, self._d * self._d)

    # --- arithmetic ------------------------------------------------------
    def __add__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        d1, d2 = self._d, o._d
        if d1 == d2:
            return GaussianRational._raw(self._a + o._a, self._b + o._b, d1)
        return GaussianRational._raw(self._a * d2 + o._a * d1, self._b * d2 + o._b * d1, d1 * d2)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._raw(-self._a, -self._b, self._d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        a1, b1, a2, b2 = self._a, self._b, o._a, o._b
        return GaussianRational._raw(a1 * a2 - b1 * b2, a1 * b2 + a2 * b1, self._d * o._d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("division by zero GaussianRational")
        # (a1+b1 i)/d1 * d2 (a2-b2 i) / (a2^2+b2^2)
        a1, b1, a2, b2 = self._a, self._b, o._a, o._b
        n2 = a2 * a2 + b2 * b2
        return GaussianRational._raw(
            (a1 * a2 + b1 * b2) * o._d, (b1 * a2 - a1 * b2) * o._d, self._d * n2
        )

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return (GaussianRational._raw(1, 0, 1) / self) ** (-k)
        result = GaussianRational._raw(1, 0, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # --- comparison / conversion ----------------------------------------
    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self._a == o._a and self._b == o._b and self._d == o._d

    def __hash__(self):
        if self._b == 0:
            return hash(Fraction(self._a, self._d))
        return hash((self._a, self._b, self._d))

    def __bool__(self):
        return not self.is_zero()

    def __complex__(self):
        return complex(Fraction(self._a, self._d), Fraction(self._b, self._d))

    def __repr__(self):
        return f"GaussianRational({self.re!s}, {self.im!s})"

    def __str__(self):
        return self.to_text()

    def to_text(self):
        """Render in the polynomial grammar: ``3``, ``-1/2``, ``2i``, ``(1+2i)/3``."""
        a, b, d = self._a, self._b, self._d
        if b == 0:
            return str(a) if d == 1 else f"{a}/{d}"
        if a == 0:
            core = f"{b}i"
            if d == 1:
                return core
            return f"({core})/{d}"
        sign = "+" if b > 0 else "-"
        core = f"({a}{sign}{abs(b)}i)"
        return core if d == 1 else f"{core}/{d}"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)
