"""Data-driven registry of identities, congruence families and coefficient
relations, stored in a line-oriented sectioned text file.

File layout: a header line ``qcore-catalog <version>`` followed by INI-style
sections ``[identity <id>]``, ``[congruence <id>]`` and ``[relation <id>]``.
See ``docs/catalog.md`` for the field reference.
"""

from __future__ import annotations

import ast
import configparser
import io
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Union

from .dissect import ProgressionSelector, ceil_div, extract
from .expr import QExprError, parse
from .series import LaurentSeries

FORMAT_NAME = "qcore-catalog"
FORMAT_VERSION = 1
ENV_CATALOG = "QCORE_CATALOG"
SIDE_CONDITIONS = ("none", "3!|n")


class CatalogError(ValueError):
    def __init__(self, message: str, record: str | None = None, field_name: str | None = None):
        self.record = record
        self.field = field_name
        where = ""
        if record:
            where = f"[{record}]" + (f" {field_name}: " if field_name else ": ")
        super().__init__(where + message)


# -- pipeline transforms ---------------------------------------------------


@dataclass(frozen=True)
class Transform:
    kind: str
    args: tuple[int, ...]

    def __post_init__(self):
        if self.kind == "shift" and len(self.args) == 1:
            return
        if self.kind == "substitute" and len(self.args) == 1:
            if self.args[0] < 1:
                raise ValueError("substitute(m) needs m >= 1")
            return
        if self.kind == "extract" and len(self.args) == 2:
            ProgressionSelector(*self.args)
            return
        raise ValueError(f"malformed transform {self.kind}{self.args}")

    def apply(self, s: LaurentSeries) -> LaurentSeries:
        if self.kind == "shift":
            return s.shift(self.args[0])
        if self.kind == "substitute":
            return s.substitute_qpow(self.args[0])
        return extract(s, ProgressionSelector(*self.args))

    def source_prec(self, target: int) -> int:
        """Smallest input precision that yields output precision >= target."""
        if self.kind == "shift":
            return target - self.args[0]
        if self.kind == "substitute":
            return ceil_div(target, self.args[0])
        t, r = self.args
        return t * (target - 1) + r + 1

    def __str__(self) -> str:
        return f"{self.kind}({','.join(map(str, self.args))})"


_TRANSFORM = re.compile(r"(shift|extract|substitute)\(\s*(-?\d+)\s*(?:,\s*(-?\d+)\s*)?\)")


def parse_pipeline(text: str) -> tuple[Transform, ...]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TRANSFORM.match(text, pos)
        if not m:
            raise ValueError(f"cannot read transform at {text[pos:]!r}")
        args = tuple(int(g) for g in m.groups()[1:] if g is not None)
        out.append(Transform(m.group(1), args))
        pos = m.end()
    return tuple(out)


def apply_pipeline(s: LaurentSeries, pipeline) -> LaurentSeries:
    for step in pipeline:
        s = step.apply(s)
    return s


def pipeline_source_prec(pipeline, target: int) -> int:
    for step in reversed(pipeline):
        target = step.source_prec(target)
    return target


# -- integer expressions in the family parameter ---------------------------

_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Add, ast.Sub,
            ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load)


@dataclass(frozen=True)
class IntFormula:
    """Closed-form integer expression in ``k`` (``^`` is exponentiation)."""

    text: str

    def __post_init__(self):
        tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED):
                raise ValueError(f"unsupported syntax in {self.text!r}")
            if isinstance(node, ast.Name) and node.id != "k":
                raise ValueError(f"unknown name {node.id!r} in {self.text!r}")
            if isinstance(node, ast.Constant) and not isinstance(node.value, int):
                raise ValueError(f"only integer literals allowed in {self.text!r}")

    def __call__(self, k: int) -> int:
        value = _eval_int(ast.parse(self.text.replace("^", "**"), mode="eval").body, k)
        if value.denominator != 1:
            raise ValueError(f"{self.text} is not an integer at k={k}: {value}")
        return int(value)


def _eval_int(node, k: int) -> Fraction:
    if isinstance(node, ast.Constant):
        return Fraction(node.value)
    if isinstance(node, ast.Name):
        return Fraction(k)
    if isinstance(node, ast.UnaryOp):
        v = _eval_int(node.operand, k)
        return -v if isinstance(node.op, ast.USub) else v
    a = _eval_int(node.left, k)
    b = _eval_int(node.right, k)
    if isinstance(node.op, ast.Add):
        return a + b
    if isinstance(node.op, ast.Sub):
        return a - b
    if isinstance(node.op, ast.Mult):
        return a * b
    if isinstance(node.op, ast.Div):
        return a / b
    if b.denominator != 1:
        raise ValueError("non-integer exponent")
    return a ** int(b)


# -- record types ----------------------------------------------------------


@dataclass(frozen=True)
class IdentityRecord:
    id: str
    lhs: str
    rhs: str
    pipeline: tuple[Transform, ...] = ()
    window: tuple[int, int] = (0, 300)
    ref: str = ""

    def __post_init__(self):
        for name in ("lhs", "rhs"):
            try:
                parse(getattr(self, name))
            except QExprError as exc:
                raise CatalogError(str(exc), self.id, name) from exc
        if self.window[0] >= self.window[1]:
            raise CatalogError("window needs lo < hi", self.id, "window")

    @property
    def lhs_expr(self):
        return parse(self.lhs)

    @property
    def rhs_expr(self):
        return parse(self.rhs)


def _side_ok(side: str, n: int) -> bool:
    return side == "none" or n % 3 != 0


@dataclass(frozen=True)
class CongruenceFamily:
    """m(k) divides the coefficient of q^(a(k) n + b(k)) for n, k in range."""

    id: str
    series: str
    index_a: IntFormula
    index_b: IntFormula
    modulus: IntFormula
    side: str = "none"
    k_range: tuple[int, int] = (0, 0)
    n_range: tuple[int, int] = (0, 100)
    ref: str = ""

    def __post_init__(self):
        try:
            parse(self.series)
        except QExprError as exc:
            raise CatalogError(str(exc), self.id, "series") from exc
        if self.side not in SIDE_CONDITIONS:
            raise CatalogError(f"unknown side condition {self.side!r}", self.id, "side")
        for k in range(self.k_range[0], self.k_range[1] + 1):
            for name, least in (("index_a", 1), ("index_b", 0), ("modulus", 1)):
                try:
                    value = getattr(self, name)(k)
                except (ValueError, ZeroDivisionError) as exc:
                    raise CatalogError(str(exc), self.id, name) from exc
                if value < least:
                    raise CatalogError(f"must be >= {least} at k={k}, got {value}", self.id, name)

    def applies(self, n: int) -> bool:
        return _side_ok(self.side, n)


@dataclass(frozen=True)
class LinearRelation:
    """sum of coeff * a(coeff_a * n + coeff_b) over terms is zero."""

    id: str
    series: str
    terms: tuple[tuple[Fraction, int, int], ...]
    side: str = "none"
    n_range: tuple[int, int] = (0, 100)
    ref: str = ""

    def __post_init__(self):
        try:
            parse(self.series)
        except QExprError as exc:
            raise CatalogError(str(exc), self.id, "series") from exc
        if self.side not in SIDE_CONDITIONS:
            raise CatalogError(f"unknown side condition {self.side!r}", self.id, "side")
        if not self.terms or any(a < 1 or b < 0 for _, a, b in self.terms):
            raise CatalogError("each term needs a >= 1 and b >= 0", self.id, "terms")

    def applies(self, n: int) -> bool:
        return _side_ok(self.side, n)


Record = Union[IdentityRecord, CongruenceFamily, LinearRelation]
_KINDS = {IdentityRecord: "identity", CongruenceFamily: "congruence", LinearRelation: "relation"}


@dataclass
class Catalog:
    records: list = field(default_factory=list)

    @property
    def identities(self) -> list[IdentityRecord]:
        return [r for r in self.records if isinstance(r, IdentityRecord)]

    @property
    def congruences(self) -> list[CongruenceFamily]:
        return [r for r in self.records if isinstance(r, CongruenceFamily)]

    @property
    def relations(self) -> list[LinearRelation]:
        return [r for r in self.records if isinstance(r, LinearRelation)]

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def get(self, rid: str) -> Record:
        for r in self.records:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# -- reading ---------------------------------------------------------------

_FIELDS = {
    "identity": ({"lhs", "rhs", "window"}, {"pipeline", "ref"}),
    "congruence": ({"series", "index_a", "index_b", "modulus", "k", "n"}, {"side", "ref"}),
    "relation": ({"series", "terms", "n"}, {"side", "ref"}),
}


def _int_pair(text: str, rid: str, name: str) -> tuple[int, int]:
    parts = text.split()
    try:
        lo, hi = (int(x) for x in parts)
    except ValueError:
        raise CatalogError(f"expected two integers, got {text!r}", rid, name) from None
    if lo > hi:
        raise CatalogError(f"range {lo} {hi} is empty", rid, name)
    return lo, hi


def _terms(text: str, rid: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        bits = chunk.split()
        if len(bits) != 3:
            raise CatalogError(f"term {chunk.strip()!r} must read 'coeff a b'", rid, "terms")
        try:
            out.append((Fraction(bits[0]), int(bits[1]), int(bits[2])))
        except ValueError:
            raise CatalogError(f"bad term {chunk.strip()!r}", rid, "terms") from None
    return tuple(out)


def _record(kind: str, rid: str, sec) -> Record:
    required, optional = _FIELDS[kind]
    keys = set(sec.keys())
    missing = required - keys
    if missing:
        raise CatalogError("missing field", rid, sorted(missing)[0])
    extra = keys - required - optional
    if extra:
        raise CatalogError("unknown field", rid, sorted(extra)[0])
    ref = sec.get("ref", "")
    if kind == "identity":
        try:
            pipeline = parse_pipeline(sec.get("pipeline", ""))
        except ValueError as exc:
            raise CatalogError(str(exc), rid, "pipeline") from None
        return IdentityRecord(rid, sec["lhs"], sec["rhs"], pipeline,
                              _int_pair(sec["window"], rid, "window"), ref)
    side = sec.get("side", "none")
    if kind == "congruence":
        formulas = {}
        for name in ("index_a", "index_b", "modulus"):
            try:
                formulas[name] = IntFormula(sec[name])
            except (ValueError, SyntaxError) as exc:
                raise CatalogError(str(exc), rid, name) from None
        fam = CongruenceFamily(rid, sec["series"], side=side, k_range=_int_pair(sec["k"], rid, "k"),
                               n_range=_int_pair(sec["n"], rid, "n"), ref=ref, **formulas)
        # a stored family must say something: modulus 1 is rejected here, not in the type
        for k in range(fam.k_range[0], fam.k_range[1] + 1):
            if fam.modulus(k) < 2:
                raise CatalogError(f"must be >= 2 at k={k}, got {fam.modulus(k)}", rid, "modulus")
        return fam
    return LinearRelation(rid, sec["series"], _terms(sec["terms"], rid), side,
                          _int_pair(sec["n"], rid, "n"), ref)


def loads(text: str) -> Catalog:
    lines = text.splitlines()
    body_start = 0
    header = None
    for i, line in enumerate(lines):
        s = line.strip()
        if s and not s.startswith("#"):
            header = s
            body_start = i + 1
            break
    m = re.fullmatch(rf"{FORMAT_NAME}\s+(\d+)", header or "")
    if not m:
        raise CatalogError(f"first line must be '{FORMAT_NAME} {FORMAT_VERSION}', got {header!r}")
    if int(m.group(1)) != FORMAT_VERSION:
        raise CatalogError(f"unsupported catalog version {m.group(1)}")
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("\n".join(lines[body_start:]))
    except configparser.Error as exc:
        raise CatalogError(f"malformed catalog: {exc}") from None
    catalog = Catalog()
    seen = set()
    for name in cp.sections():
        bits = name.split()
        if len(bits) != 2 or bits[0] not in _FIELDS:
            raise CatalogError(f"section header [{name}] must read '<identity|congruence|relation> <id>'")
        kind, rid = bits
        if rid in seen:
            raise CatalogError("duplicate id", rid)
        seen.add(rid)
        catalog.records.append(_record(kind, rid, cp[name]))
    return catalog


def default_path() -> Path:
    env = os.environ.get(ENV_CATALOG)
    if env:
        return Path(env)
    return Path(str(resources.files("qcore") / "data" / "identities.qcat"))


def load(path: str | os.PathLike | None = None) -> Catalog:
    """Load a catalog file (default: the shipped catalog, or $QCORE_CATALOG)."""
    path = Path(path) if path is not None else default_path()
    return loads(path.read_text(encoding="utf-8"))


# -- writing ---------------------------------------------------------------


def dumps(catalog: Catalog) -> str:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    for r in catalog.records:
        name = f"{_KINDS[type(r)]} {r.id}"
        if isinstance(r, IdentityRecord):
            sec = {"lhs": r.lhs, "rhs": r.rhs}
            if r.pipeline:
                sec["pipeline"] = " ".join(map(str, r.pipeline))
            sec["window"] = f"{r.window[0]} {r.window[1]}"
        elif isinstance(r, CongruenceFamily):
            sec = {"series": r.series, "index_a": r.index_a.text, "index_b": r.index_b.text,
                   "modulus": r.modulus.text, "side": r.side,
                   "k": f"{r.k_range[0]} {r.k_range[1]}", "n": f"{r.n_range[0]} {r.n_range[1]}"}
        else:
            sec = {"series": r.series, "terms": "; ".join(f"{c} {a} {b}" for c, a, b in r.terms),
                   "side": r.side, "n": f"{r.n_range[0]} {r.n_range[1]}"}
        if r.ref:
            sec["ref"] = r.ref
        cp[name] = sec
    buf = io.StringIO()
    buf.write(f"{FORMAT_NAME} {FORMAT_VERSION}\n\n")
    cp.write(buf)
    return buf.getvalue()
