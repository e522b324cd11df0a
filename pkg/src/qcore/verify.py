"""Verification engine: catalog identities, the parameterized A4 families and
congruence scans, all compared in exact arithmetic."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .catalog import (Catalog, CongruenceFamily, IdentityRecord, LinearRelation, Transform,
                      apply_pipeline, pipeline_source_prec)
from .dissect import ProgressionSelector, extract
from .expr import Add, Const, Evaluator, Mul, parse
from .series import LaurentSeries, PrecisionError, first_difference

log = logging.getLogger(__name__)

A4_SERIES = "f4^8/f1^2"
DEFAULT_ORDER = 300
DEFAULT_BUDGET = 50_000

PASS, FAIL, INSUFFICIENT = "pass", "fail", "insufficient-precision"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3


class BudgetExceededError(PrecisionError):
    def __init__(self, required: int, budget: int, what: str = "series"):
        self.required = required
        self.budget = budget
        super().__init__(f"{what} needs {required} coefficients, over the budget of {budget}")


class IntegralityError(ArithmeticError):
    pass


@dataclass
class CheckResult:
    id: str
    status: str
    window: tuple[int, int] | None = None
    witness: int | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    seconds: float = 0.0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        # wall time is left out so that repeated runs serialize identically
        return {
            "id": self.id,
            "status": self.status,
            "window": list(self.window) if self.window else None,
            "witness": self.witness,
            "lhs": None if self.lhs is None else str(self.lhs),
            "rhs": None if self.rhs is None else str(self.rhs),
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    items: list[CheckResult] = field(default_factory=list)

    def extend(self, items: Iterable[CheckResult]) -> None:
        self.items.extend(items)

    @property
    def ok(self) -> bool:
        return all(i.ok for i in self.items)

    @property
    def exit_code(self) -> int:
        if any(i.status == FAIL for i in self.items):
            return EXIT_FAIL
        if any(i.status == INSUFFICIENT for i in self.items):
            return EXIT_PRECISION
        return EXIT_OK


@dataclass(frozen=True)
class FamilyParams:
    """Constants of the k-th member of the A4 family."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        for name in ("offset", "multiplier", "modulus"):
            value = getattr(self, "_" + name)
            if value.denominator != 1:
                raise IntegralityError(f"{name} is not an integer at k={self.k}: {value}")

    @property
    def step(self) -> int:
        return 3 ** (2 * self.k + 1)

    @property
    def _offset(self) -> Fraction:
        return Fraction(3 ** (2 * self.k + 2) - 5, 4)

    @property
    def _multiplier(self) -> Fraction:
        return Fraction(3 ** (4 * self.k + 4) - 1, 80)

    @property
    def _modulus(self) -> Fraction:
        return Fraction(3 * (3 ** (4 * self.k + 4) - 1), 40)

    @property
    def offset(self) -> int:
        return int(self._offset)

    @property
    def multiplier(self) -> int:
        return int(self._multiplier)

    @property
    def modulus(self) -> int:
        return int(self._modulus)

    @property
    def r(self) -> Fraction:
        x, y = 3 ** (2 * self.k), 3 ** (2 * self.k + 2)
        return Fraction((x - 1) * (y - 1), 640)

    @property
    def s(self) -> Fraction:
        x, y = 3 ** (2 * self.k), 3 ** (2 * self.k + 2)
        return Fraction(-(x - 9) * (y - 1), 64)

    @property
    def t(self) -> Fraction:
        x = 3 ** (2 * self.k)
        return Fraction(81 * (x - 1) * (x - 9), 640)

    # coefficients of the three-term closed form
    @property
    def lead(self) -> Fraction:
        return Fraction(3 ** (2 * self.k + 2) - 1, 4)

    @property
    def middle(self) -> Fraction:
        return Fraction(27 * (3 ** (2 * self.k) - 1) * (3 ** (2 * self.k + 2) - 1), 320)

    @property
    def tail(self) -> int:
        return 3 ** (2 * self.k + 2)


_G0 = "f2^12/f1^6"
_PAIR = "3*f2^2*f3^10/(f1^4*f6^2) + 4*q*f3*f6^7/(f1*f2)"
_TAIL = "q^3*f12^8/f3^2"


def _combo(*pairs) -> Add:
    return Add(tuple(Mul((Const(Fraction(c)), parse(text))) for c, text in pairs))


def closed_form(k: int):
    """Three-term closed form of sum A4(3^(2k+1) n + (3^(2k+2)-5)/4) q^n."""
    p = FamilyParams(k)
    return _combo((p.lead, _G0), (p.middle, _PAIR), (p.tail, _TAIL))


def step_closed_form(m: int):
    """Closed form of the m-th member after shift(-3) and extract(3,0)."""
    a = 3 ** (2 * m + 2) - 1
    b = 3 ** (2 * m + 4) - 1
    return _combo((Fraction(a * b, 320), "f2^6*f3^12/(q*f1^6*f6^6) + 20*f2^3*f3^3*f6^3/f1^3"),
                  (Fraction(a, 4), "q*f6^12/f3^6"),
                  (3 ** (2 * m + 2), "f4^8/f1^2"))


_ROUND = (Transform("shift", (-3,)), Transform("extract", (3, 0)), Transform("extract", (3, 1)))


def family_pipeline(k: int) -> tuple[Transform, ...]:
    return (Transform("extract", (3, 1)),) + _ROUND * k


def assert_integral(s: LaurentSeries) -> bool:
    """True iff every stored coefficient is an integer."""
    return s.is_integral


def _compare(cid: str, lhs: LaurentSeries, rhs: LaurentSeries, lo: int, hi: int, start: float,
             detail: str = "") -> CheckResult:
    w = first_difference(lhs, rhs, lo, hi)
    if w is None:
        return CheckResult(cid, PASS, (lo, hi), seconds=time.perf_counter() - start, detail=detail)
    return CheckResult(cid, FAIL, (lo, hi), w, lhs[w], rhs[w], time.perf_counter() - start, detail)


class Verifier:
    """Runs checks against one shared evaluator and a coefficient budget."""

    def __init__(self, budget: int = DEFAULT_BUDGET, evaluator: Evaluator | None = None):
        self.budget = budget
        self.evaluator = evaluator or Evaluator()

    def series(self, expr, prec: int, what: str | None = None) -> LaurentSeries:
        if prec > self.budget:
            raise BudgetExceededError(prec, self.budget, what or (expr if isinstance(expr, str) else "series"))
        return self.evaluator.expand(expr, max(prec, 1))

    def a4(self, count: int) -> LaurentSeries:
        """A4 series known for exponents below ``count``."""
        s = self.series(A4_SERIES, count, "A4 series")
        if not s.is_integral:
            raise IntegralityError("A4 series has a non-integer coefficient")
        return s

    # -- identities ----------------------------------------------------

    def check_identity(self, rec: IdentityRecord, order: int | None = None) -> CheckResult:
        start = time.perf_counter()
        lo = rec.window[0]
        hi = rec.window[1] if order is None else order
        if hi <= lo:
            raise ValueError(f"{rec.id}: order {hi} leaves an empty window above {lo}")
        need = pipeline_source_prec(rec.pipeline, hi)
        try:
            lhs = apply_pipeline(self.series(rec.lhs, need, f"{rec.id} lhs"), rec.pipeline)
            rhs = self.series(rec.rhs, hi, f"{rec.id} rhs")
        except PrecisionError as exc:
            return CheckResult(rec.id, INSUFFICIENT, (lo, hi), seconds=time.perf_counter() - start,
                               detail=str(exc))
        return _compare(rec.id, lhs, rhs, lo, hi, start)

    def check_relation(self, rel: LinearRelation) -> CheckResult:
        start = time.perf_counter()
        lo, hi = rel.n_range
        need = max(a * hi + b for _, a, b in rel.terms) + 1
        try:
            s = self.series(rel.series, need, f"{rel.id} series")
        except PrecisionError as exc:
            return CheckResult(rel.id, INSUFFICIENT, (lo, hi + 1), detail=str(exc))
        off = []
        for n in range(lo, hi + 1):
            total = sum(c * s[a * n + b] for c, a, b in rel.terms)
            if not rel.applies(n):
                if total:
                    off.append(n)
                continue
            if total:
                c0, a0, b0 = rel.terms[0]
                first = c0 * s[a0 * n + b0]
                return CheckResult(rel.id, FAIL, (lo, hi + 1), n, first, first - total,
                                   time.perf_counter() - start)
        detail = _side_note(rel.side, off, lo, hi)
        return CheckResult(rel.id, PASS, (lo, hi + 1), seconds=time.perf_counter() - start, detail=detail)

    # -- families ------------------------------------------------------

    def check_theorem_1_1(self, k: int, order: int) -> CheckResult:
        """Iterated dissection of the A4 series against its closed form."""
        start = time.perf_counter()
        pipeline = family_pipeline(k)
        need = pipeline_source_prec(pipeline, order)
        lhs = apply_pipeline(self.a4(need), pipeline)
        rhs = self.series(closed_form(k), order, "closed form")
        result = _compare(f"thm1.1 k={k}", lhs, rhs, 0, order, start)
        if result.ok and not assert_integral(rhs):
            result.status = FAIL
            result.detail = "closed form has a non-integer coefficient"
        return result

    def check_induction_step(self, k: int, order: int) -> CheckResult:
        """The (k-1)-th member after shift(-3) and extract(3,0), against its closed form."""
        if k < 1:
            raise ValueError("the induction step starts at k = 1")
        start = time.perf_counter()
        pipeline = family_pipeline(k - 1) + _ROUND[:2]
        need = pipeline_source_prec(pipeline, order)
        lhs = apply_pipeline(self.a4(need), pipeline)
        rhs = self.series(step_closed_form(k - 1), order, "closed form")
        return _compare(f"thm1.1 step m={k - 1}", lhs, rhs, -1, order, start)

    def check_theorem_1_2(self, k: int, n_max: int) -> list[CheckResult]:
        """Linear identity, congruence and the three-series decomposition for member k."""
        p = FamilyParams(k)
        need = max(p.step * n_max + p.offset, 27 * n_max + 19) + 1
        a = self.a4(need)
        window = (0, n_max + 1)

        start = time.perf_counter()
        items = []
        bad_eq = bad_cong = bad_dec = None
        off = []
        for n in range(n_max + 1):
            value = a[p.step * n + p.offset]
            base = a[3 * n + 1]
            if n % 3 == 0:
                if value != p.multiplier * base:
                    off.append(n)
                continue
            if bad_eq is None and value != p.multiplier * base:
                bad_eq = (n, value, p.multiplier * base)
            if bad_cong is None and value % p.modulus:
                bad_cong = (n, value, value % p.modulus)
            dec = p.r * a[27 * n + 19] + p.s * base
            if bad_dec is None and value != dec:
                bad_dec = (n, value, dec)
        took = time.perf_counter() - start
        for label, bad, note in (
                ("identity", bad_eq, _side_note("3!|n", off, 0, n_max)),
                ("congruence", bad_cong, f"modulus {p.modulus}"),
                ("decomposition", bad_dec, f"R={p.r} S={p.s}")):
            cid = f"thm1.2 k={k} {label}"
            if bad is None:
                items.append(CheckResult(cid, PASS, window, seconds=took, detail=note))
            else:
                items.append(CheckResult(cid, FAIL, window, bad[0], bad[1], bad[2], took, note))

        start = time.perf_counter()
        gk = extract(a, ProgressionSelector(p.step, p.offset))
        g1 = extract(a, ProgressionSelector(27, 19))
        g0 = extract(a, ProgressionSelector(3, 1))
        lhs = gk - g1 * p.r - g0 * p.s
        rhs = self.series(parse(_TAIL), n_max + 1).scale(p.t)
        items.append(_compare(f"thm1.2 k={k} series", lhs, rhs, 0, n_max + 1, start, f"T={p.t}"))
        return items

    def check_theorem_4_1(self, k: int, n_max: int) -> CheckResult:
        """Three-term linear identity valid for every n, no side condition."""
        start = time.perf_counter()
        p = FamilyParams(k)
        step = 3 ** (2 * k + 2)
        offset = 5 * (step - 1) // 4
        a = self.a4(max(step * n_max + offset, 81 * n_max + 100) + 1)
        for n in range(n_max + 1):
            lhs = a[step * n + offset]
            rhs = p.r * a[81 * n + 100] + p.s * a[9 * n + 10] + p.t * a[n]
            if lhs != rhs:
                return CheckResult(f"thm4.1 k={k}", FAIL, (0, n_max + 1), n, lhs, rhs,
                                   time.perf_counter() - start)
        return CheckResult(f"thm4.1 k={k}", PASS, (0, n_max + 1), seconds=time.perf_counter() - start)

    def check_remark_4_2(self, k_max: int = 20) -> CheckResult:
        """The three coefficients of the k-th identity sum to 1."""
        start = time.perf_counter()
        for k in range(k_max + 1):
            p = FamilyParams(k)
            total = p.r + p.s + p.t
            if total != 1:
                return CheckResult("rem4.2", FAIL, (0, k_max + 1), k, total, Fraction(1),
                                   time.perf_counter() - start)
        return CheckResult("rem4.2", PASS, (0, k_max + 1), seconds=time.perf_counter() - start)

    # -- congruences ---------------------------------------------------

    def scan_congruence(self, fam: CongruenceFamily, series: LaurentSeries | None = None) -> list[CheckResult]:
        items = []
        lo, hi = fam.n_range
        for k in range(fam.k_range[0], fam.k_range[1] + 1):
            start = time.perf_counter()
            a, b, m = fam.index_a(k), fam.index_b(k), fam.modulus(k)
            cid = fam.id if fam.k_range == (0, 0) else f"{fam.id} k={k}"
            need = a * hi + b + 1
            try:
                s = series if series is not None else self.series(fam.series, need, f"{fam.id} series")
                if s.prec < need:
                    raise PrecisionError(f"series known below q^{s.prec}, scan needs q^{need - 1}")
            except PrecisionError as exc:
                items.append(CheckResult(cid, INSUFFICIENT, (lo, hi + 1), detail=str(exc)))
                continue
            failure = None
            off = []
            for n in range(lo, hi + 1):
                c = s[a * n + b]
                if c.denominator != 1:
                    raise IntegralityError(f"{cid}: coefficient of q^{a * n + b} is {c}")
                if not fam.applies(n):
                    if c.numerator % m:
                        off.append(n)
                    continue
                if c.numerator % m:
                    failure = (n, c)
                    break
            detail = f"modulus {m}, index {a}n+{b}"
            if fam.side != "none" and failure is None:
                detail += "; " + _side_note(fam.side, off, lo, hi, "divisibility")
            if failure is None:
                items.append(CheckResult(cid, PASS, (lo, hi + 1), seconds=time.perf_counter() - start,
                                         detail=detail))
            else:
                n, c = failure
                items.append(CheckResult(cid, FAIL, (lo, hi + 1), n, c, Fraction(c.numerator % m),
                                         time.perf_counter() - start, detail))
        return items

    # -- whole catalog -------------------------------------------------

    def check_record(self, rec, order: int | None = None) -> list[CheckResult]:
        if isinstance(rec, IdentityRecord):
            return [self.check_identity(rec, order)]
        if isinstance(rec, LinearRelation):
            return [self.check_relation(rec)]
        return self.scan_congruence(rec)


def _side_note(side: str, off: list[int], lo: int, hi: int, what: str = "equality") -> str:
    if side == "none":
        return ""
    total = sum(1 for n in range(lo, hi + 1) if n % 3 == 0)
    note = f"not asserted for 3|n: {what} fails at {len(off)} of {total}"
    if off:
        note += f" (first n={off[0]})"
    return note


def _worker(args) -> list[CheckResult]:
    rec, order, budget = args
    return Verifier(budget).check_record(rec, order)


def run_catalog(catalog: Catalog, order: int | None = DEFAULT_ORDER, ids: list[str] | None = None,
                jobs: int = 1, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Check the selected records; the report is in catalog order whatever ``jobs`` is."""
    records = list(catalog) if ids is None else [catalog.get(i) for i in ids]
    report = VerificationReport()
    if jobs <= 1 or len(records) <= 1:
        verifier = Verifier(budget)
        for rec in records:
            report.extend(verifier.check_record(rec, order))
            log.info("checked %s", rec.id)
        return report
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for items in pool.map(_worker, [(rec, order, budget) for rec in records]):
            report.extend(items)
    return report


def run_family(name: str, k_max: int, n_max: int, budget: int = DEFAULT_BUDGET,
               catalog: Catalog | None = None) -> VerificationReport:
    verifier = Verifier(budget)
    report = VerificationReport()
    if name == "thm1.1":
        for k in range(k_max + 1):
            report.items.append(verifier.check_theorem_1_1(k, n_max))
            if k >= 1:
                report.items.append(verifier.check_induction_step(k, n_max))
    elif name == "thm1.2":
        for k in range(k_max + 1):
            report.extend(verifier.check_theorem_1_2(k, n_max))
    elif name == "thm4.1":
        for k in range(k_max + 1):
            report.items.append(verifier.check_theorem_4_1(k, n_max))
        report.items.append(verifier.check_remark_4_2(max(k_max, 20)))
    elif name.startswith("cong"):
        if catalog is None:
            raise ValueError("congruence families come from a catalog")
        fam = catalog.get(name)
        if not isinstance(fam, CongruenceFamily):
            raise KeyError(name)
        k_hi = fam.k_range[1] if k_max is None else k_max
        n_hi = fam.n_range[1] if n_max is None else n_max
        fam = CongruenceFamily(fam.id, fam.series, fam.index_a, fam.index_b, fam.modulus, fam.side,
                               (fam.k_range[0], k_hi), (fam.n_range[0], n_hi), fam.ref)
        report.extend(verifier.scan_congruence(fam))
    else:
        raise KeyError(name)
    return report


FAMILIES = ("thm1.1", "thm1.2", "thm4.1", "cong3.2", "cong3.7", "cong1.3")


# module-level forms of the checks, each on a fresh verifier

def check_identity(rec: IdentityRecord, order: int | None = None, budget: int = DEFAULT_BUDGET) -> CheckResult:
    return Verifier(budget).check_identity(rec, order)


def check_theorem_1_1(k: int, order: int, budget: int = DEFAULT_BUDGET) -> CheckResult:
    return Verifier(budget).check_theorem_1_1(k, order)


def check_theorem_1_2(k: int, n_max: int, budget: int = DEFAULT_BUDGET) -> list[CheckResult]:
    return Verifier(budget).check_theorem_1_2(k, n_max)


def check_theorem_4_1(k: int, n_max: int, budget: int = DEFAULT_BUDGET) -> CheckResult:
    return Verifier(budget).check_theorem_4_1(k, n_max)


def scan_congruence(fam: CongruenceFamily, series: LaurentSeries | None = None,
                    budget: int = DEFAULT_BUDGET) -> list[CheckResult]:
    return Verifier(budget).scan_congruence(fam, series)
