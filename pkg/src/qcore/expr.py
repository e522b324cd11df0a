"""Expression language for q-series formulas.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ['^' exponent]
    exponent := ['-'] INT | '(' ['-'] INT ')'
    atom     := INT | 'q' | 'f' INT | 'C(' qarg ')' | 'h(' qarg ')'
              | 'P(' INT ',' INT ')' | '(' expr ')'
    qarg     := 'q' ['^' INT]

``f<m>`` is the product over n >= 1 of (1 - q^(mn)); ``P(m,r)`` is the
product of (1 - q^n) over n = r (mod m); ``C(q^k)`` is the cubic continued
fraction f_k f_6k^3 / (f_2k f_3k^3) and ``h(q^k)`` the level-12 continued
fraction q^k P(12k,k) P(12k,11k) / (P(12k,5k) P(12k,7k)).

Division desugars to a negative power, ``q^k`` folds into a single monomial
node and ``^`` does not chain: ``f1^2^3`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

from .series import LaurentSeries, NotInvertibleError, SeriesError


class QExprError(ValueError):
    """Base class for expression errors."""


class QSyntaxError(QExprError):
    def __init__(self, message: str, text: str, pos: int):
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.text = text
        super().__init__(f"{message} at line {self.line}, column {self.column}")


class QDomainError(QExprError):
    """A syntactically valid atom with arguments outside its domain."""


class ExpansionError(SeriesError):
    """Expansion failed at a specific subexpression."""


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class QPow:
    k: int


@dataclass(frozen=True)
class Eta:
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise QDomainError(f"eta modulus must be positive, got f{self.m}")


@dataclass(frozen=True)
class ResidueProduct:
    m: int
    r: int

    def __post_init__(self):
        if self.m < 1 or not 1 <= self.r <= self.m:
            raise QDomainError(f"P({self.m},{self.r}): residue must satisfy 1 <= r <= m")


@dataclass(frozen=True)
class CubicCF:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise QDomainError("C(q^k) needs k >= 1")


@dataclass(frozen=True)
class LevelTwelveCF:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise QDomainError("h(q^k) needs k >= 1")


@dataclass(frozen=True)
class Add:
    children: tuple


@dataclass(frozen=True)
class Mul:
    children: tuple


@dataclass(frozen=True)
class Pow:
    base: "QExpr"
    exp: int


@dataclass(frozen=True)
class Neg:
    child: "QExpr"


QExpr = Union[Const, QPow, Eta, ResidueProduct, CubicCF, LevelTwelveCF, Add, Mul, Pow, Neg]
_ATOMS = (Const, QPow, Eta, ResidueProduct, CubicCF, LevelTwelveCF)


# -- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<eta>f\d+)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise QSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "name" and value not in ("q", "C", "h", "P"):
            raise QSyntaxError(f"unknown name {value!r}", text, start)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# -- parser ----------------------------------------------------------------


def _reciprocal(node):
    if isinstance(node, Pow):
        return Pow(node.base, -node.exp)
    if isinstance(node, QPow):
        return QPow(-node.k)
    return Pow(node, -1)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise QSyntaxError(f"{message}, found {found}", self.text, tok[2])

    def expect(self, value: str):
        tok = self.peek()
        if tok[1] != value or tok[0] not in ("op", "name"):
            self.error(f"expected {value!r}")
        return self.next()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token")
        return node

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            rhs = self.term()
            terms.append(rhs if op == "+" else Neg(rhs))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self):
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()[1]
            rhs = self.unary()
            factors.append(rhs if op == "*" else _reciprocal(rhs))
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def unary(self):
        if self.peek() == ("op", "-", self.peek()[2]):
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.next()
            e = self.exponent()
            if self.peek()[1] == "^" and self.peek()[0] == "op":
                self.error("'^' is non-associative; parenthesize the base")
            if isinstance(base, QPow):
                return QPow(base.k * e)
            return Pow(base, e)
        return base

    def signed_int(self) -> int:
        sign = 1
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.next()
            sign = -1
        tok = self.peek()
        if tok[0] != "int":
            self.error("exponent must be an integer")
        self.next()
        return sign * int(tok[1])

    def exponent(self) -> int:
        if self.peek()[1] == "(" and self.peek()[0] == "op":
            self.next()
            e = self.signed_int()
            self.expect(")")
            return e
        return self.signed_int()

    def int_literal(self) -> int:
        tok = self.peek()
        if tok[0] != "int":
            self.error("expected an integer")
        self.next()
        return int(tok[1])

    def qarg(self) -> int:
        self.expect("q")
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.next()
            return self.int_literal()
        return 1

    def atom(self):
        tok = self.peek()
        kind, value, pos = tok
        if kind == "int":
            self.next()
            return Const(Fraction(int(value)))
        if kind == "eta":
            self.next()
            m = int(value[1:])
            if m < 1:
                raise QDomainError(f"eta modulus must be positive: {value} at column {pos + 1}")
            return Eta(m)
        if kind == "name":
            self.next()
            if value == "q":
                return QPow(1)
            self.expect("(")
            if value == "P":
                m = self.int_literal()
                self.expect(",")
                r = self.int_literal()
                self.expect(")")
                if m < 1 or not 1 <= r <= m:
                    raise QDomainError(f"P({m},{r}) at column {pos + 1}: residue must satisfy 1 <= r <= m")
                return ResidueProduct(m, r)
            k = self.qarg()
            self.expect(")")
            if k < 1:
                raise QDomainError(f"{value}(q^{k}) at column {pos + 1}: argument power must be >= 1")
            return CubicCF(k) if value == "C" else LevelTwelveCF(k)
        if kind == "op" and value == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected an operand")


def parse(text: str) -> QExpr:
    """Parse a q-series formula into an expression tree."""
    return _Parser(text).parse()


# -- printer ---------------------------------------------------------------

# binding levels: sum < product < unary minus < power < atom
_SUM, _PRODUCT, _UNARY, _POWER, _ATOM = range(5)


def _level(node) -> int:
    if isinstance(node, Add):
        return _SUM
    if isinstance(node, Mul):
        return _PRODUCT
    if isinstance(node, Neg):
        return _UNARY
    if isinstance(node, Pow):
        return _POWER
    if isinstance(node, Const) and (node.value.denominator != 1 or node.value < 0):
        return _SUM
    if isinstance(node, QPow) and node.k != 1:
        return _POWER
    return _ATOM


def _wrap(node, min_level: int) -> str:
    s = to_string(node)
    return s if _level(node) >= min_level else f"({s})"


def to_string(node) -> str:
    """Canonical text form; ``parse(to_string(e)) == e`` for parsed trees."""
    if isinstance(node, Const):
        v = node.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(node, QPow):
        return "q" if node.k == 1 else f"q^{node.k}"
    if isinstance(node, Eta):
        return f"f{node.m}"
    if isinstance(node, ResidueProduct):
        return f"P({node.m},{node.r})"
    if isinstance(node, (CubicCF, LevelTwelveCF)):
        name = "C" if isinstance(node, CubicCF) else "h"
        return f"{name}(q)" if node.k == 1 else f"{name}(q^{node.k})"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, _ATOM)}^{node.exp}"
    if isinstance(node, Neg):
        return "-" + _wrap(node.child, _UNARY)
    if isinstance(node, Mul):
        parts = [_wrap(node.children[0], _UNARY)]
        for c in node.children[1:]:
            if isinstance(c, Pow) and c.exp < 0 and not isinstance(c.base, (Pow, QPow)):
                denom = c.base if c.exp == -1 else Pow(c.base, -c.exp)
                parts.append("/" + _wrap(denom, _POWER))
            elif isinstance(c, QPow) and c.k < 0:
                parts.append("/" + to_string(QPow(-c.k)))
            else:
                parts.append("*" + _wrap(c, _UNARY))
        return "".join(parts)
    if isinstance(node, Add):
        out = to_string(node.children[0]) if not isinstance(node.children[0], Add) else f"({to_string(node.children[0])})"
        for c in node.children[1:]:
            if isinstance(c, Neg):
                out += " - " + _wrap(c.child, _PRODUCT)
            else:
                out += " + " + _wrap(c, _PRODUCT)
        return out
    raise TypeError(f"not an expression node: {node!r}")


# -- expansion -------------------------------------------------------------


def eta_series(m: int, prec: int) -> LaurentSeries:
    """f_m to precision ``prec`` via the pentagonal number theorem."""
    if prec <= 0:
        return LaurentSeries.zero(prec) if prec < 0 else LaurentSeries.zero(0)
    c = [0] * prec
    k = 0
    while True:
        placed = False
        for j in ((k, -k) if k else (0,)):
            e = m * (j * (3 * j - 1) // 2)
            if e < prec:
                c[e] = -1 if j % 2 else 1
                placed = True
        if not placed:
            break
        k += 1
    return LaurentSeries._raw(c, 1, 0, prec)


def residue_product(m: int, r: int, prec: int) -> LaurentSeries:
    """Product of (1 - q^n) over 1 <= n < prec with n = r (mod m)."""
    if prec <= 0:
        return LaurentSeries.zero(min(prec, 0))
    c = [0] * prec
    c[0] = 1
    for n in range(r, prec, m):
        c = c[:n] + [c[i] - c[i - n] for i in range(n, prec)]
    return LaurentSeries._raw(c, 1, 0, prec)


@lru_cache(maxsize=None)
def _definition(node):
    if isinstance(node, CubicCF):
        k = node.k
        return Mul((Eta(k), Pow(Eta(6 * k), 3), Pow(Eta(2 * k), -1), Pow(Eta(3 * k), -3)))
    k = node.k
    m = 12 * k
    return Mul((QPow(k), ResidueProduct(m, k), ResidueProduct(m, 11 * k),
                Pow(ResidueProduct(m, 5 * k), -1), Pow(ResidueProduct(m, 7 * k), -1)))


@lru_cache(maxsize=None)
def valuation_bound(node) -> int:
    """Static estimate of the valuation, used to size child precisions.

    Exact for every atom and for sums and products without cancellation;
    the evaluator corrects any shortfall at run time."""
    if isinstance(node, QPow):
        return node.k
    if isinstance(node, (Const, Eta, ResidueProduct)):
        return 0
    if isinstance(node, (CubicCF, LevelTwelveCF)):
        return valuation_bound(_definition(node))
    if isinstance(node, Add):
        return min(valuation_bound(c) for c in node.children)
    if isinstance(node, Mul):
        return sum(valuation_bound(c) for c in node.children)
    if isinstance(node, Pow):
        return node.exp * valuation_bound(node.base)
    if isinstance(node, Neg):
        return valuation_bound(node.child)
    raise TypeError(f"not an expression node: {node!r}")


_MAX_RETRIES = 8


class Evaluator:
    """Expands expression trees, memoizing subtrees by requested precision.

    Results never depend on memo contents.  An instance is not thread-safe;
    give each concurrent task its own evaluator.
    """

    def __init__(self):
        self._memo: dict = {}

    def expand(self, node, order: int) -> LaurentSeries:
        if isinstance(node, str):
            node = parse(node)
        if order < 1:
            raise ValueError("expansion order must be >= 1")
        return self.eval(node, order)

    def eval(self, node, prec: int) -> LaurentSeries:
        hit = self._memo.get(node)
        if hit is not None and hit.prec >= prec:
            return hit.truncate(prec)
        request = prec
        for _ in range(_MAX_RETRIES):
            result = self._eval_once(node, request)
            if result.prec >= prec:
                if hit is None or result.prec > hit.prec:
                    self._memo[node] = result
                return result.truncate(prec)
            request += prec - result.prec
        raise ExpansionError(f"precision underflow expanding {to_string(node)} to q^{prec}")

    def _eval_once(self, node, prec: int) -> LaurentSeries:
        if isinstance(node, Const):
            return LaurentSeries.constant(node.value, prec)
        if isinstance(node, QPow):
            return LaurentSeries.monomial(node.k, prec)
        if isinstance(node, Eta):
            return eta_series(node.m, prec)
        if isinstance(node, ResidueProduct):
            return residue_product(node.m, node.r, prec)
        if isinstance(node, (CubicCF, LevelTwelveCF)):
            return self.eval(_definition(node), prec)
        if isinstance(node, Neg):
            return -self.eval(node.child, prec)
        if isinstance(node, Add):
            total = None
            for c in node.children:
                s = self.eval(c, prec)
                total = s if total is None else total + s
            return total
        if isinstance(node, Mul):
            bounds = [valuation_bound(c) for c in node.children]
            whole = sum(bounds)
            product = None
            for c, b in zip(node.children, bounds):
                s = self.eval(c, prec - (whole - b))
                product = s if product is None else product * s
            return product
        if isinstance(node, Pow):
            return self._eval_pow(node, prec)
        raise TypeError(f"not an expression node: {node!r}")

    def _eval_pow(self, node: Pow, prec: int) -> LaurentSeries:
        e = node.exp
        if e == 0:
            return LaurentSeries.one(prec)
        v = valuation_bound(node.base)
        if e > 0:
            return self.eval(node.base, prec - (e - 1) * v) ** e
        n = -e
        request = prec + (n - 1) * v + 2 * v
        for _ in range(_MAX_RETRIES):
            s = self.eval(node.base, request)
            if s.is_zero:
                request = 2 * request + 8 if request > 0 else 8
                continue
            va = s.min_exp
            needed = prec + (n - 1) * va + 2 * va
            if s.prec >= needed:
                try:
                    return s.truncate(needed).invert() ** n
                except NotInvertibleError as exc:  # pragma: no cover - guarded above
                    raise ExpansionError(f"cannot invert {to_string(node.base)}") from exc
            request = needed
        raise ExpansionError(f"cannot invert {to_string(node.base)}: no nonzero coefficient found "
                             f"below q^{request}")


def expand(node, order: int) -> LaurentSeries:
    """Exact expansion of ``node`` (tree or formula text) known below ``q^order``."""
    return Evaluator().expand(node, order)
