"""Arithmetic-progression extraction and its inverse."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .series import LaurentSeries


def ceil_div(a: int, b: int) -> int:
    """Mathematical ceiling of a/b for b > 0 (ceil_div(-5, 3) == -1)."""
    return -((-a) // b)


@dataclass(frozen=True)
class ProgressionSelector:
    """Selects the exponents t*n + r and re-indexes them to n."""

    t: int
    r: int

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"modulus must be >= 1, got {self.t}")
        if not 0 <= self.r < self.t:
            raise ValueError(f"residue must satisfy 0 <= r < {self.t}, got {self.r}")


def extract(s: LaurentSeries, sel: ProgressionSelector | tuple[int, int]) -> LaurentSeries:
    """Series whose coefficient of q^n is the coefficient of q^(t*n + r) in ``s``."""
    if not isinstance(sel, ProgressionSelector):
        sel = ProgressionSelector(*sel)
    t, r = sel.t, sel.r
    prec = ceil_div(s.prec - r, t)
    if s.is_zero:
        return LaurentSeries.zero(prec)
    lo = ceil_div(s.min_exp - r, t)
    offset = t * lo + r - s.min_exp
    num = list(s.numerators[offset::t])[: max(prec - lo, 0)]
    return LaurentSeries._raw(num, s.denominator, lo, prec)


def reassemble(parts: Sequence[LaurentSeries], t: int) -> LaurentSeries:
    """Inverse of extraction: sum of q^r * parts[r](q^t) over r."""
    if len(parts) != t:
        raise ValueError(f"expected {t} residue parts, got {len(parts)}")
    total = None
    for r, part in enumerate(parts):
        piece = part.substitute_qpow(t).shift(r)
        total = piece if total is None else total + piece
    return total


def split(s: LaurentSeries, t: int) -> list[LaurentSeries]:
    """All ``t`` residue parts of ``s``."""
    return [extract(s, ProgressionSelector(t, r)) for r in range(t)]
