"""A quick invariant suite, run by ``twosq selftest``. Takes a few seconds."""
from __future__ import annotations

import math
import random
from fractions import Fraction


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # report, never crash the suite
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return {"check": name, "passed": bool(ok), "detail": str(detail)}


def run_selftest(rng: random.Random | None = None) -> list[dict]:
    from .analysis import SmoothWindow, j0, integral_of
    from .arith import r2, r2_sieve, ramanujan_sum, ramanujan_sum_direct
    from .dioph import SQRT2, convergents, distance_to_nearest_integer, theorem_pairs
    from .expsums import gauss_sum, gauss_sum_kronecker, kloosterman, verify_shifted_identity
    from .quadforms import SUM_OF_TWO_SQUARES, make_form, smith_normal_form
    from .voronoi import verify

    rng = rng or random.Random(0)
    Q = SUM_OF_TWO_SQUARES

    def sieve_vs_formula():
        a = r2_sieve(2000)
        bad = [n for n in range(2001) if a[n] != (r2(n) if n else 1)]
        return not bad, f"{len(bad)} mismatches"

    def ramanujan():
        worst = max(abs(ramanujan_sum(k, n) - ramanujan_sum_direct(k, n))
                    for k in range(1, 40) for n in range(0, 40))
        return worst < 1e-9, f"max residual {worst:.2e}"

    def gauss_kronecker():
        worst = max(abs(gauss_sum(Q, k, h) - gauss_sum_kronecker(Q, k, h))
                    for k in range(1, 40, 2) for h in range(1, k + 1) if math.gcd(h, k) == 1)
        return worst < 1e-8, f"max residual {worst:.2e}"

    def shifted():
        worst = 0.0
        for _ in range(20):
            k = rng.randrange(1, 30, 2)
            h = rng.choice([h for h in range(1, k + 1) if math.gcd(h, k) == 1])
            a = (rng.randrange(-50, 50), rng.randrange(-50, 50))
            worst = max(worst, verify_shifted_identity(Q, k, h, a))
        return worst < 1e-9, f"max residual {worst:.2e}"

    def weil():
        worst = max(abs(kloosterman(m, n, p)) / (2 * math.sqrt(p))
                    for p in (5, 7, 11, 13) for m in range(1, p) for n in range(1, p))
        return worst <= 1 + 1e-12, f"max |S|/(2 sqrt p) = {worst:.4f}"

    def snf():
        sd = smith_normal_form(((2, 4), (6, 8)))
        return (sd.s1, sd.s2) == (2, 4), f"diag ({sd.s1}, {sd.s2})"

    def window_mass():
        v = integral_of(SmoothWindow("plateau_w", 2000.0)).value
        return abs(v - 1500.0) < 1e-8, f"integral {v!r}"

    def bessel():
        x = [0.0, 2.404825557695773, 10.0, 50.0]
        ref = [1.0, 0.0, -0.2459357644513483, 0.05581232766925181]
        worst = max(abs(float(j0(a)) - b) for a, b in zip(x, ref))
        return worst < 1e-11, f"max error {worst:.2e}"

    def voronoi():
        rep = verify(Q, 15, 4, SmoothWindow("plateau_w", 500.0))
        return rep.passed, f"gap {rep.abs_gap:.2e}"

    def voronoi_general():
        rep = verify(make_form(1, 1, 1), 7, 2, SmoothWindow("plateau_w", 500.0))
        return rep.abs_gap <= 1e-5 * abs(rep.lhs), f"relative gap {rep.abs_gap / abs(rep.lhs):.2e}"

    def pell():
        bad = [(p, q) for p, q in convergents(SQRT2, 30) if abs(p * p - 2 * q * q) != 1]
        return not bad, f"{len(bad)} failures"

    def pairs():
        got = {(p.a, p.q) for p in theorem_pairs(SQRT2, 20, 200)}
        return {(41, 29), (239, 169)} <= got, sorted(got)

    def distance():
        iv = distance_to_nearest_integer(SQRT2, 29)
        return iv.lo <= Fraction(122, 10000) <= iv.hi or abs(float(iv.lo) - 0.0122) < 1e-3, \
            f"[{float(iv.lo):.6f}, {float(iv.hi):.6f}]"

    checks = [
        ("r2 sieve matches multiplicative formula", sieve_vs_formula),
        ("Ramanujan closed form matches direct sum", ramanujan),
        ("Gauss sum Kronecker evaluation", gauss_kronecker),
        ("shifted Gauss sum identity", shifted),
        ("Weil bound for Kloosterman sums", weil),
        ("Smith normal form example", snf),
        ("plateau window mass", window_mass),
        ("Bessel J0 reference values", bessel),
        ("Voronoi identity, x^2+y^2", voronoi),
        ("Voronoi identity, x^2+xy+y^2", voronoi_general),
        ("Pell identity for sqrt 2 convergents", pell),
        ("admissible pairs for sqrt 2", pairs),
        ("distance to nearest integer", distance),
    ]
    return [_check(name, fn) for name, fn in checks]
