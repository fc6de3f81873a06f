"""Continued fractions and certified rational approximation.

Irrationals are never held in floating point here. Every statement about
alpha is decided against a sandwich p/q < alpha < p'/q' built from two
consecutive convergents, using exact Fractions and big integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .errors import IndeterminateComparison, PrecisionExhausted, SearchExhausted

KINDS = ("sqrt_int", "golden", "euler_e", "explicit_cf")
DEFAULT_PRECISION = 5000
R_CAP = 10**9


@dataclass(frozen=True)
class IrrationalSpec:
    kind: str
    payload: int | tuple[int, ...] | None = None
    precision: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown irrational kind {self.kind!r}")
        if self.kind == "sqrt_int":
            n = self.payload
            if not isinstance(n, int) or n < 2 or math.isqrt(n) ** 2 == n:
                raise ValueError("sqrt_int needs a positive non-square integer")
        if self.kind == "explicit_cf":
            cf = tuple(self.payload or ())
            if len(cf) < 2 or any(a < 1 for a in cf[1:]):
                raise ValueError("explicit_cf needs a0 followed by positive partial quotients")
            object.__setattr__(self, "payload", cf)
        if self.precision is None:
            prec = len(self.payload) if self.kind == "explicit_cf" else DEFAULT_PRECISION
            object.__setattr__(self, "precision", prec)

    def __str__(self):
        if self.kind == "sqrt_int":
            return f"sqrt({self.payload})"
        if self.kind == "explicit_cf":
            return "cf[" + ",".join(map(str, self.payload[:6])) + ("...]" if len(self.payload) > 6 else "]")
        return self.kind


def sqrt_int(n: int, precision: int | None = None) -> IrrationalSpec:
    return IrrationalSpec("sqrt_int", n, precision)


GOLDEN = IrrationalSpec("golden")
EULER_E = IrrationalSpec("euler_e")
SQRT2 = sqrt_int(2)


def _sqrt_cf(n: int) -> Iterator[int]:
    a0 = math.isqrt(n)
    m, d, a = 0, 1, a0
    yield a0
    while True:
        m = d * a - m
        d = (n - m * m) // d
        a = (a0 + m) // d
        yield a


def _quotient_stream(alpha: IrrationalSpec) -> Iterator[int]:
    if alpha.kind == "sqrt_int":
        yield from _sqrt_cf(alpha.payload)
    elif alpha.kind == "golden":
        while True:
            yield 1
    elif alpha.kind == "euler_e":
        yield 2
        i = 1
        while True:
            yield 2 * (i + 1) // 3 if i % 3 == 2 else 1
            i += 1
    else:
        yield from alpha.payload


@lru_cache(maxsize=64)
def _quotients(alpha: IrrationalSpec, count: int) -> tuple[int, ...]:
    out = []
    for a in _quotient_stream(alpha):
        if len(out) == count:
            break
        out.append(a)
    return tuple(out)


def partial_quotients(alpha: IrrationalSpec, count: int) -> tuple[int, ...]:
    if count > alpha.precision:
        raise PrecisionExhausted(f"{count} partial quotients requested, {alpha.precision} available")
    return _quotients(alpha, count)


def convergents(alpha: IrrationalSpec, depth: int) -> list[tuple[int, int]]:
    """The first ``depth`` convergents p_i/q_i, in lowest terms."""
    if depth < 1:
        raise ValueError("depth must be positive")
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in partial_quotients(alpha, depth):
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        out.append((p0, q0))
    return out


def _iter_convergents(alpha: IrrationalSpec) -> Iterator[tuple[int, int, int]]:
    """Yields (p_i, q_i, a_i), checking the precision budget lazily."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    for i, a in enumerate(_quotient_stream(alpha)):
        if i >= alpha.precision:
            raise PrecisionExhausted(f"more than {alpha.precision} partial quotients needed")
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        yield p0, q0, a


def sandwich(alpha: IrrationalSpec, min_den: int) -> tuple[Fraction, Fraction]:
    """Exact (lo, hi) with lo < alpha < hi and hi - lo < 1/min_den^2.

    Uses the first pair of consecutive convergents whose smaller denominator
    exceeds ``min_den``.
    """
    prev = None
    for p, q, _ in _iter_convergents(alpha):
        if prev is not None and prev[1] > min_den:
            a, b = Fraction(*prev), Fraction(p, q)
            return (a, b) if a < b else (b, a)
        prev = (p, q)
    raise PrecisionExhausted(f"explicit continued fraction too short for denominator {min_den}")


def _abs_error_bound(alpha: IrrationalSpec, b: int, r: int) -> Fraction:
    lo, hi = sandwich(alpha, 10 * r * r)
    x = Fraction(b, r)
    return max(abs(lo - x), abs(hi - x))


@dataclass(frozen=True)
class RationalApprox:
    a: int
    q: int
    quality: Fraction

    def row(self) -> dict:
        return {"a": self.a, "q": self.q, "quality": str(self.quality),
                "quality_float": float(self.quality)}


def _candidates(alpha: IrrationalSpec, r_cap: int) -> Iterator[tuple[int, int]]:
    """Intermediate fractions (p_{i-1} + m p_i)/(q_{i-1} + m q_i), 1 <= m < a_{i+1}, by increasing r."""
    prev = (1, 0)
    cur = None
    for p, q, a in _iter_convergents(alpha):
        if cur is not None:
            for m in range(1, a):
                r = prev[1] + m * cur[1]
                if r > r_cap:
                    return
                yield prev[0] + m * cur[0], r
            prev = cur
        if q > r_cap:
            return
        cur = (p, q)


def _accept(alpha, b, r, d, r_min) -> Fraction | None:
    if r <= r_min or math.gcd(r, b * d) != 1:
        return None
    bound = Fraction(6 * d * d, r * r)
    err = _abs_error_bound(alpha, b, r)
    return err if err <= bound else None


def find_coprime_approx(alpha: IrrationalSpec, d: int, r_min: int, r_cap: int = R_CAP
                        ) -> tuple[int, int]:
    """(b, r) with r > r_min, gcd(r, b d) = 1 and |alpha - b/r| <= 6 d^2 / r^2, certified exactly.

    Convergents are tried first in order of denominator; if none below
    ``r_cap`` qualifies, intermediate fractions are scanned.
    """
    return _find(alpha, d, r_min, r_cap)[:2]


def _find(alpha, d, r_min, r_cap):
    if d < 1:
        raise ValueError("d must be positive")
    for p, q, _ in _iter_convergents(alpha):
        if q > r_cap:
            break
        err = _accept(alpha, p, q, d, r_min)
        if err is not None:
            return p, q, err
    for b, r in _candidates(alpha, r_cap):
        err = _accept(alpha, b, r, d, r_min)
        if err is not None:
            return b, r, err
    raise SearchExhausted(f"no admissible pair with {r_min} < r <= {r_cap}")


def theorem_pairs(alpha: IrrationalSpec, q_min: int, q_max: int) -> list[RationalApprox]:
    """Successive outputs of the d = 2 search with q_min <= q <= q_max."""
    if q_min > q_max:
        raise ValueError("q_min must not exceed q_max")
    out = []
    r_min = max(q_min, 1) - 1
    while True:
        try:
            a, q, _ = _find(alpha, 2, r_min, q_max)
        except SearchExhausted:
            return out
        quality = _abs_error_bound(alpha, a, q)
        # independent recheck of the two constraints that matter downstream
        assert math.gcd(2 * a, q) == 1 and quality < Fraction(24, q * q)
        out.append(RationalApprox(a, q, quality))
        r_min = q


# ------------------------------------------------------------ ||n alpha||

@dataclass(frozen=True)
class DistanceInterval:
    lo: Fraction
    hi: Fraction

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


def _dist(x: Fraction) -> Fraction:
    f = x - math.floor(x)
    return min(f, 1 - f)


def _interval_norm(A: Fraction, B: Fraction) -> DistanceInterval:
    lo = Fraction(0) if math.floor(B) > math.floor(A) or A.denominator == 1 else min(_dist(A), _dist(B))
    half_A, half_B = A - Fraction(1, 2), B - Fraction(1, 2)
    contains_half = math.floor(half_B) > math.floor(half_A) or half_A.denominator == 1
    hi = Fraction(1, 2) if contains_half else max(_dist(A), _dist(B))
    return DistanceInterval(lo, hi)


def distance_to_nearest_integer(alpha: IrrationalSpec, n: int, refine: int = 0) -> DistanceInterval:
    """Exact interval containing ||n alpha||, of width below 1/(10 n).

    ``refine`` multiplies the sandwich denominator by (10 n)^refine for a tighter interval.
    """
    if n < 1:
        raise ValueError("n must be positive")
    lo, hi = sandwich(alpha, 10 * n * n * (10 * n) ** refine)
    return _interval_norm(n * lo, n * hi)


def _below(x: Fraction, C1: Fraction, n: int, gamma: Fraction) -> bool:
    """x < C1 n^-gamma for x >= 0, decided exactly: x^den n^num < C1^den."""
    if C1 <= 0:
        return False
    num, den = gamma.numerator, gamma.denominator
    if num >= 0:
        return x**den * Fraction(n) ** num < C1**den
    return x**den < C1**den * Fraction(n) ** (-num)


def compare_distance(alpha: IrrationalSpec, n: int, C1, gamma, refine: int = 0) -> bool:
    """Decides ||n alpha|| < C1 n^-gamma, or raises IndeterminateComparison."""
    C1, gamma = Fraction(C1), Fraction(gamma)
    iv = distance_to_nearest_integer(alpha, n, refine)
    if _below(iv.hi, C1, n, gamma):
        return True
    if not _below(iv.lo, C1, n, gamma):
        return False
    raise IndeterminateComparison(f"threshold inside [{float(iv.lo)}, {float(iv.hi)}] for n={n}")


def distance_below(alpha: IrrationalSpec, n: int, C1, gamma, max_refine: int = 8) -> bool:
    """compare_distance with automatic precision refinement."""
    for refine in range(max_refine + 1):
        try:
            return compare_distance(alpha, n, C1, gamma, refine)
        except IndeterminateComparison:
            continue
    raise PrecisionExhausted(f"comparison for n={n} undecided after {max_refine} refinements")
