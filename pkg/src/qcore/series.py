"""Exact truncated Laurent series in one variable q.

A series is known exactly on the exponent window ``[min_exp, prec)``; every
exponent below ``min_exp`` carries a zero coefficient and every exponent at or
above ``prec`` is unknown.  Coefficients are stored as integer numerators over a
single positive common denominator, which keeps large products in integer
arithmetic while still representing arbitrary rationals exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Union

try:  # GMP multiplication is much faster than CPython's Karatsuba on huge ints
    from gmpy2 import f_mod_2exp as _mod_2exp
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _mpz = None

Scalar = Union[int, Fraction]

# below this length Kronecker packing costs more than it saves
SCHOOLBOOK_CUTOFF = 24


class SeriesError(ArithmeticError):
    """Base class for series arithmetic failures."""


class PrecisionError(SeriesError):
    """A coefficient outside the known window was requested."""


class NotInvertibleError(SeriesError, ZeroDivisionError):
    """Inversion of a series with no known nonzero coefficient."""


# -- integer convolution ---------------------------------------------------


def convolve_schoolbook(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    """First ``n`` coefficients of the product of two integer sequences."""
    out = [0] * n
    lb = len(b)
    for i, x in enumerate(a[:n]):
        if not x:
            continue
        top = min(lb, n - i)
        for j in range(top):
            y = b[j]
            if y:
                out[i + j] += x * y
    return out


def _pack(c: Sequence[int], nbytes: int) -> int:
    zero = bytes(nbytes)
    pos = b"".join(x.to_bytes(nbytes, "little") if x > 0 else zero for x in c)
    neg = b"".join((-x).to_bytes(nbytes, "little") if x < 0 else zero for x in c)
    return int.from_bytes(pos, "little") - int.from_bytes(neg, "little")


def _unpack(value, nbytes: int, n: int) -> list[int]:
    # balanced digits: every true coefficient lies in (-2^(s-1), 2^(s-1))
    bits = 8 * nbytes
    if _mpz is not None:
        residue = int(_mod_2exp(value, bits * n))
    else:
        residue = value & ((1 << (bits * n)) - 1)
    raw = memoryview(residue.to_bytes(nbytes * n, "little"))
    full = 1 << bits
    half = full >> 1
    out = []
    borrow = 0
    from_bytes = int.from_bytes
    for i in range(0, nbytes * n, nbytes):
        v = from_bytes(raw[i:i + nbytes], "little") + borrow
        if v >= half:
            out.append(v - full)
            borrow = 1
        else:
            out.append(v)
            borrow = 0
    return out


def convolve(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    """First ``n`` coefficients of ``a * b``; bit-identical to the schoolbook
    product, computed by Kronecker substitution for long inputs."""
    a = a[:n]
    b = b[:n]
    if n <= 0:
        return []
    if not a or not b:
        return [0] * n
    if min(len(a), len(b)) <= SCHOOLBOOK_CUTOFF:
        return convolve_schoolbook(a, b, n)
    ma = max(map(abs, a))
    mb = max(map(abs, b))
    if not ma or not mb:
        return [0] * n
    bound = ma * mb * min(len(a), len(b))
    nbytes = (bound.bit_length() + 1 + 7) // 8
    x = _pack(a, nbytes)
    y = _pack(b, nbytes)
    if _mpz is not None:
        prod = _mpz(x) * _mpz(y) if x is not y else _mpz(x) ** 2
    else:
        prod = x * y
    return _unpack(prod, nbytes, n)


# -- the series type -------------------------------------------------------


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficient must be int or Fraction, not {type(c).__name__}")


class LaurentSeries:
    """Immutable truncated Laurent series with exact rational coefficients.

    After construction the window is normalized: leading zeros are trimmed so
    that ``min_exp`` is the valuation of a nonzero series, and the zero series
    has an empty window with ``min_exp == prec``.
    """

    __slots__ = ("min_exp", "prec", "_num", "_den")

    def __init__(self, coeffs: Iterable = (), min_exp: int = 0, prec: int | None = None):
        fracs = [_as_fraction(c) for c in coeffs]
        if prec is None:
            prec = min_exp + len(fracs)
        if prec < min_exp + len(fracs):
            fracs = fracs[: max(prec - min_exp, 0)]
        den = 1
        for f in fracs:
            den = den * f.denominator // math.gcd(den, f.denominator)
        num = [f.numerator * (den // f.denominator) for f in fracs]
        num.extend([0] * (prec - min_exp - len(num)))
        self._set(num, den, min_exp, prec)

    def _set(self, num: list[int], den: int, min_exp: int, prec: int) -> None:
        if prec < min_exp:
            num, min_exp = [], prec
        size = prec - min_exp
        if len(num) != size:
            num = list(num[:size]) + [0] * (size - len(num))
        start = 0
        for start, c in enumerate(num):
            if c:
                break
        else:
            start = len(num)
        if start:
            num = num[start:]
            min_exp += start
        if not num:
            min_exp, den = prec, 1
        elif den != 1:
            g = math.gcd(den, *num)
            if g != 1:
                num = [c // g for c in num]
                den //= g
        self.min_exp = min_exp
        self.prec = prec
        self._num = tuple(num)
        self._den = den

    @classmethod
    def _raw(cls, num: list[int], den: int, min_exp: int, prec: int) -> "LaurentSeries":
        if den < 0:
            num = [-c for c in num]
            den = -den
        obj = cls.__new__(cls)
        obj._set(num, den, min_exp, prec)
        return obj

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, prec: int) -> "LaurentSeries":
        return cls._raw([], 1, prec, prec)

    @classmethod
    def constant(cls, c: Scalar, prec: int) -> "LaurentSeries":
        return cls.monomial(0, prec, c)

    @classmethod
    def one(cls, prec: int) -> "LaurentSeries":
        return cls.monomial(0, prec, 1)

    @classmethod
    def monomial(cls, k: int, prec: int, c: Scalar = 1) -> "LaurentSeries":
        """``c * q**k`` known up to ``prec``."""
        c = _as_fraction(c)
        if k >= prec or not c:
            return cls.zero(prec)
        num = [0] * (prec - k)
        num[0] = c.numerator
        return cls._raw(num, c.denominator, k, prec)

    @classmethod
    def from_dict(cls, terms: dict, prec: int) -> "LaurentSeries":
        lo = min(terms, default=prec)
        lo = min(lo, prec)
        coeffs = [0] * (prec - lo)
        for k, c in terms.items():
            if k < prec:
                coeffs[k - lo] = c
        return cls(coeffs, lo, prec)

    # -- inspection --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self._num

    @property
    def valuation(self) -> int:
        if not self._num:
            raise SeriesError("valuation of the zero series is undefined")
        return self.min_exp

    @property
    def numerators(self) -> tuple[int, ...]:
        return self._num

    @property
    def denominator(self) -> int:
        return self._den

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        d = self._den
        return tuple(Fraction(c, d) for c in self._num)

    @property
    def is_integral(self) -> bool:
        return self._den == 1

    def __getitem__(self, n: int) -> Fraction:
        if n >= self.prec:
            raise PrecisionError(f"coefficient of q^{n} requested but series is known only below q^{self.prec}")
        if n < self.min_exp:
            return Fraction(0)
        return Fraction(self._num[n - self.min_exp], self._den)

    def coefficients(self, lo: int, hi: int) -> list[Fraction]:
        """Coefficients of ``q^lo .. q^(hi-1)``."""
        if hi > self.prec:
            raise PrecisionError(f"window end {hi} exceeds precision {self.prec}")
        return [self[n] for n in range(lo, hi)]

    def terms(self) -> list[tuple[int, Fraction]]:
        return [(self.min_exp + i, Fraction(c, self._den)) for i, c in enumerate(self._num) if c]

    def _window_num(self, lo: int, hi: int) -> list[int]:
        # numerators on [lo, hi), zero-padded below min_exp; hi <= prec
        pad = max(self.min_exp - lo, 0)
        start = max(lo - self.min_exp, 0)
        return [0] * min(pad, hi - lo) + list(self._num[start:max(hi - self.min_exp, start)])

    def __len__(self) -> int:
        return self.prec - self.min_exp

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.min_exp, self.prec, self._den, self._num) == (
            other.min_exp, other.prec, other._den, other._num)

    def __hash__(self) -> int:
        return hash((self.min_exp, self.prec, self._den, self._num))

    def __repr__(self) -> str:
        shown = self.terms()[:6]
        body = " + ".join(f"({c})*q^{k}" for k, c in shown) or "0"
        more = " + ..." if len(self.terms()) > 6 else ""
        return f"LaurentSeries({body}{more} + O(q^{self.prec}))"

    # -- ring operations ---------------------------------------------------

    def truncate(self, prec: int) -> "LaurentSeries":
        """Forget every coefficient at or above ``prec``."""
        if prec >= self.prec:
            return self
        return LaurentSeries._raw(list(self._num[: max(prec - self.min_exp, 0)]), self._den,
                                  self.min_exp, prec)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries._raw([-c for c in self._num], self._den, self.min_exp, self.prec)

    def __add__(self, other) -> "LaurentSeries":
        if isinstance(other, (int, Fraction)):
            other = LaurentSeries.constant(other, self.prec)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        prec = min(self.prec, other.prec)
        lo = min(self.min_exp, other.min_exp, prec)
        a = self._window_num(lo, prec)
        b = other._window_num(lo, prec)
        if self._den == other._den:
            den = self._den
            num = [x + y for x, y in zip(a, b)]
        else:
            den = self._den * other._den // math.gcd(self._den, other._den)
            fa = den // self._den
            fb = den // other._den
            num = [x * fa + y * fb for x, y in zip(a, b)]
        return LaurentSeries._raw(num, den, lo, prec)

    __radd__ = __add__

    def __sub__(self, other) -> "LaurentSeries":
        if isinstance(other, (int, Fraction)):
            return self + (-other)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "LaurentSeries":
        return (-self) + other

    def scale(self, c: Scalar) -> "LaurentSeries":
        c = _as_fraction(c)
        return LaurentSeries._raw([x * c.numerator for x in self._num], self._den * c.denominator,
                                  self.min_exp, self.prec)

    def _val_bound(self) -> int:
        # the zero series is known to vanish below prec
        return self.min_exp

    def __mul__(self, other) -> "LaurentSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self._mul(other, convolve)

    __rmul__ = __mul__

    def _mul(self, other: "LaurentSeries", conv) -> "LaurentSeries":
        va, vb = self._val_bound(), other._val_bound()
        prec = min(self.prec + vb, other.prec + va)
        if self.is_zero or other.is_zero:
            return LaurentSeries.zero(prec)
        n = prec - va - vb
        num = conv(self._num, other._num, n)
        return LaurentSeries._raw(num, self._den * other._den, va + vb, prec)

    def invert(self) -> "LaurentSeries":
        """Multiplicative inverse; valuation negates and the relative window
        length ``prec - valuation`` is preserved."""
        if self.is_zero:
            raise NotInvertibleError("cannot invert a series with no known nonzero coefficient")
        v = self.min_exp
        length = self.prec - v
        u = self._num
        ud = self._den
        # Newton iteration w <- w + w(1 - u w), doubling the known length
        wn, wd = [ud], u[0]
        if wd < 0:
            wn, wd = [-ud], -wd
        m = 1
        while m < length:
            m = min(2 * m, length)
            t = convolve(u, wn, m)
            scale = ud * wd
            err = [-c for c in t]
            err[0] += scale
            corr = convolve(wn, err, m)
            wn = [c * scale for c in wn] + [0] * (m - len(wn))
            wn = [x + y for x, y in zip(wn, corr)]
            wd = wd * scale
            if wd != 1:
                g = math.gcd(wd, *wn)
                if g != 1:
                    wn = [c // g for c in wn]
                    wd //= g
        return LaurentSeries._raw(wn, wd, -v, -v + length)

    def __truediv__(self, other) -> "LaurentSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(1 / _as_fraction(other))
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self * other.invert()

    def __rtruediv__(self, other) -> "LaurentSeries":
        return self.invert() * other

    def __pow__(self, e: int) -> "LaurentSeries":
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.invert() ** (-e)
        if e == 0:
            length = len(self) if not self.is_zero else max(self.prec, 1)
            return LaurentSeries.one(max(length, 1))
        result = None
        base = self
        while True:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if not e:
                return result
            base = base * base

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by ``q**k``."""
        return LaurentSeries._raw(list(self._num), self._den, self.min_exp + k, self.prec + k)

    def substitute_qpow(self, m: int) -> "LaurentSeries":
        """Replace ``q`` by ``q**m``."""
        if m < 1:
            raise ValueError("substitution power must be positive")
        if m == 1 or self.is_zero:
            return LaurentSeries._raw(list(self._num), self._den, m * self.min_exp, m * self.prec)
        num = [0] * ((len(self._num) - 1) * m + 1)
        num[::m] = self._num
        return LaurentSeries._raw(num, self._den, m * self.min_exp, m * self.prec)


# -- free functions mirroring the operator surface -------------------------


def add(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    return a + b


def mul(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    return a * b


def mul_schoolbook(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    """Reference product using quadratic convolution only."""
    return a._mul(b, convolve_schoolbook)


def invert(a: LaurentSeries) -> LaurentSeries:
    return a.invert()


def power(a: LaurentSeries, e: int) -> LaurentSeries:
    return a ** e


def shift(a: LaurentSeries, k: int) -> LaurentSeries:
    return a.shift(k)


def substitute_qpow(a: LaurentSeries, m: int) -> LaurentSeries:
    return a.substitute_qpow(m)


def _check_window(s: LaurentSeries, hi: int, name: str) -> None:
    if s.prec < hi:
        raise PrecisionError(f"{name} is known only below q^{s.prec}; comparison needs hi={hi}")


def first_difference(a: LaurentSeries, b: LaurentSeries, lo: int, hi: int) -> int | None:
    """Smallest exponent in ``[lo, hi)`` where ``a`` and ``b`` differ, or None."""
    _check_window(a, hi, "left series")
    _check_window(b, hi, "right series")
    if lo >= hi:
        return None
    x = a._window_num(lo, hi)
    y = b._window_num(lo, hi)
    da, db = a._den, b._den
    for i, (p, r) in enumerate(zip(x, y)):
        if p * db != r * da:
            return lo + i
    return None


def equal_on(a: LaurentSeries, b: LaurentSeries, lo: int, hi: int) -> bool:
    """True iff ``a`` and ``b`` agree exactly on exponents ``lo <= n < hi``."""
    return first_difference(a, b, lo, hi) is None
