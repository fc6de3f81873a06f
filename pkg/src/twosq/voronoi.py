"""Two-sided numerical verification of the Voronoi summation formula.

The left side sum_n r_Q(n) e_k(nh) f(n) is evaluated directly from lattice
counts. The right side is a main term from the Gauss sum and a dual sum of
J0-transforms of f, truncated at sqrt(n' X)/k <= R_max (n' = 4n/Delta0).
Every dual side carries the rigorous integration-by-parts bound for the
discarded tail, an observed tail (the change between cutoffs R_max/sqrt 2
and R_max) and the quadrature error budget.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .analysis import (
    SmoothWindow,
    derivative_moments,
    integral_of,
    j0_transform,
    window_eval,
)
from .arith import mod_inverse, r2_sieve
from .errors import EvenModulus, LimitExceeded, NotCoprime
from .expsums import gauss_sum, lemma_inverse, twisted_inner_sums
from .quadforms import SUM_OF_TWO_SQUARES, BinaryQuadraticForm, matmul, star_form

R_MAX = 250.0
TERM_CAP = 10**6
MAX_J = 20
REL_TOL = 1e-6


@dataclass
class DualSide:
    main: complex
    dual: complex
    truncation_bound: float
    quad_error: float = 0.0
    observed_tail: float = 0.0
    terms: int = 0
    n_max: int = 0


@dataclass
class VoronoiReport:
    form: str
    k: int
    h: int
    X: float
    lhs: complex
    rhs_main: complex
    rhs_dual: complex
    rhs_truncation_bound: float
    quad_error: float
    observed_tail: float
    abs_gap: float
    terms_used: int
    passed: bool
    extras: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        for key in ("lhs", "rhs_main", "rhs_dual"):
            v = d.pop(key)
            d[f"{key}_re"] = v.real
            d[f"{key}_im"] = v.imag
        d.pop("extras")
        return d


def _support_int_range(f: SmoothWindow) -> tuple[int, int]:
    lo, hi = f.support
    if lo < 0:
        raise ValueError("f must be supported in the positive reals")
    return max(1, math.floor(lo)), math.ceil(hi)


def representation_counts(form: BinaryQuadraticForm, N: int) -> np.ndarray:
    """r_Q(n) for 0 <= n <= N by enumerating lattice points with Q(x) <= N."""
    if form == SUM_OF_TWO_SQUARES:
        return r2_sieve(N)
    a, b, c = form.a1, form.b1, form.c1
    Delta = form.Delta
    # Q(x, y) <= N forces x^2 <= 4cN/Delta and y^2 <= 4aN/Delta
    xmax = math.isqrt(4 * c * N // Delta) + 1
    ymax = math.isqrt(4 * a * N // Delta) + 1
    counts = np.zeros(N + 1, dtype=np.int64)
    ys = np.arange(-ymax, ymax + 1, dtype=np.int64)
    for x in range(-xmax, xmax + 1):
        vals = a * x * x + b * x * ys + c * ys * ys
        vals = vals[vals <= N]
        counts += np.bincount(vals, minlength=N + 1)
    return counts


def voronoi_lhs(form: BinaryQuadraticForm, k: int, h: int, f: SmoothWindow) -> complex:
    """sum_n r_Q(n) e_k(nh) f(n) over the support of f."""
    if math.gcd(h, k) != 1:
        raise NotCoprime(f"gcd({h}, {k}) != 1")
    lo, hi = _support_int_range(f)
    r = representation_counts(form, hi)
    n = np.arange(lo, hi + 1)
    weights = r[lo:hi + 1] * window_eval(f, n.astype(float))
    keep = weights != 0
    n, weights = n[keep], weights[keep]
    ang = 2.0 * math.pi * ((n * h) % k) / k
    return complex(math.fsum(weights * np.cos(ang)), math.fsum(weights * np.sin(ang)))


@lru_cache(maxsize=64)
def _moments(f: SmoothWindow) -> tuple[float, ...]:
    return tuple(derivative_moments(f, MAX_J)[1:])


LANDAU_C = 0.7858  # sup over nu > 0, x > 0 of x^(1/3) |J_nu(x)|


def tail_bound(f: SmoothWindow, N: float, kappa: float, point_density: float = math.pi,
               ) -> float:
    """Bound for sum over lattice n > N of c(n) |integral J0(2 pi sqrt(kappa n x)) f(x) dx|.

    Here c(n) counts lattice points on the level set n of a form whose
    counting function satisfies #{Q <= t} <= point_density * (sqrt t + 1)^2.
    Integrating by parts j times gives
    |integral| <= (pi sqrt(kappa n))^-j M_j sup |J_j|, and
    |J_j(y)| <= LANDAU_C y^(-1/3) with y >= 2 pi sqrt(kappa N x_lo).
    The best j in 3..MAX_J is used.
    """
    if f.kind == "zero":
        return 0.0
    if N < 1:
        N = 1.0
    x_lo = f.support[0]
    bessel = 1.0
    if x_lo > 0:
        bessel = min(1.0, LANDAU_C * (2 * math.pi * math.sqrt(kappa * N * x_lo)) ** (-1 / 3))
    best = math.inf
    for j, M in enumerate(_moments(f), start=1):
        if j < 3:
            continue
        s = j / 2.0
        # partial summation against #{Q <= t} <= density (sqrt t + 1)^2 <= density t (1 + N^-1/2)^2
        lattice_tail = s * point_density * (1 + N**-0.5) ** 2 * N ** (1 - s) / (s - 1)
        val = (1.0 / (math.pi * math.sqrt(kappa))) ** j * M * lattice_tail * bessel
        best = min(best, val)
    return best


def dual_cutoff(k: int, f: SmoothWindow, Delta0: int = 4, R_max: float = R_MAX) -> int:
    """Largest n with sqrt(4 n X / Delta0) / k <= R_max, X the left end of the support."""
    X = f.support[0]
    return int(math.floor(R_max**2 * k * k * Delta0 / (4.0 * X)))


@lru_cache(maxsize=256)
def _two_squares_table(k: int, f: SmoothWindow, R_max: float):
    N = dual_cutoff(k, f, 4, R_max)
    if N < 1:
        return np.zeros(0, np.int64), np.zeros(0), np.zeros(0), np.zeros(0), N
    r = r2_sieve(N)
    n = np.nonzero(r[1:])[0] + 1
    if n.size > TERM_CAP:
        raise LimitExceeded(f"dual sum needs {n.size} terms, cap {TERM_CAP}")
    vals, errs = j0_transform(f, np.sqrt(n) / k)
    return n, r[n].astype(float), vals, errs, N


def voronoi_rhs_two_squares(k: int, h: int, f: SmoothWindow, R_max: float = R_MAX) -> DualSide:
    """Main term and dual sum for x^2 + y^2 with odd k."""
    if k % 2 == 0:
        raise EvenModulus(f"k={k} is even")
    if math.gcd(h, k) != 1:
        raise NotCoprime(f"gcd({h}, {k}) != 1")
    G = gauss_sum(SUM_OF_TWO_SQUARES, k, 1)
    pref = math.pi / (k * k) * G
    main = pref * integral_of(f).value if f.kind != "zero" else 0j
    n, r, vals, errs, N = _two_squares_table(k, f, R_max)
    if n.size == 0:
        dual = 0j
        qerr = 0.0
        observed = 0.0
    else:
        c = (mod_inverse(h, k) * mod_inverse(4, k)) % k
        ang = -2.0 * math.pi * ((c * n) % k) / k
        terms = r * vals * np.exp(1j * ang)
        dual = pref * terms.sum()
        half = n <= N / 2
        observed = abs(pref * terms[~half].sum())
        qerr = abs(pref) * float(np.sum(r * errs))
    # integral J0(2 pi sqrt(n x)/k) f: kappa = 1/k^2
    trunc = abs(pref) * tail_bound(f, N, 1.0 / (k * k))
    return DualSide(main, complex(dual), trunc, qerr, observed, int(n.size), N)


def voronoi_rhs_general(form: BinaryQuadraticForm, k: int, h: int, f: SmoothWindow,
                        R_max: float = R_MAX) -> DualSide:
    """Main term and dual sum of the general formula via r~ over the lattice of Q*."""
    if math.gcd(h, k) != 1:
        raise NotCoprime(f"gcd({h}, {k}) != 1")
    Delta = form.Delta
    star = star_form(form, k)
    split = star.split
    G = gauss_sum(form, k, h)
    main = 2 * math.pi / (math.sqrt(Delta) * k * k) * G
    main = main * integral_of(f).value if f.kind != "zero" else 0j
    N = dual_cutoff(k, f, split.Delta0, R_max)
    dbar = lemma_inverse(Delta, k, split.Delta0)
    hbar = mod_inverse(h, split.k1)
    shift = hbar * (dbar // split.delta1) % split.k1 if split.k1 > 1 else 0

    A = star.Astar
    det = A[0][0] * A[1][1] - A[0][1] ** 2
    inner = twisted_inner_sums(form, k, h, star)
    gVB = matmul(star.smith.V, star.B)
    d1 = split.delta1
    coeff: dict[int, complex] = {}
    if N >= 1 and f.kind != "zero":
        xmax = math.isqrt(2 * N * A[1][1] // det) + 1
        ymax = math.isqrt(2 * N * A[0][0] // det) + 1
        ys = np.arange(-ymax, ymax + 1, dtype=np.int64)
        for x in range(-xmax, xmax + 1):
            twice = A[0][0] * x * x + 2 * A[0][1] * x * ys + A[1][1] * ys * ys
            sel = (twice > 0) & (twice <= 2 * N) & (twice % 2 == 0)
            for y, t2 in zip(ys[sel].tolist(), twice[sel].tolist()):
                v0 = split.g * (gVB[0][0] * x + gVB[0][1] * y) % d1
                v1 = split.g * (gVB[1][0] * x + gVB[1][1] * y) % d1
                n = t2 // 2
                coeff[n] = coeff.get(n, 0j) + inner[(v0, v1)]
    ns = np.array(sorted(coeff), dtype=np.int64)
    if ns.size > TERM_CAP:
        raise LimitExceeded(f"dual sum needs {ns.size} terms, cap {TERM_CAP}")
    pref = 2 * math.pi / (k * math.sqrt(Delta))
    if ns.size:
        rt = np.array([coeff[n] for n in ns.tolist()]) / k
        vals, errs = j0_transform(f, 2.0 * np.sqrt(ns / split.Delta0) / k)
        phase = np.exp(-2j * math.pi * ((shift * ns) % max(split.k1, 1)) / max(split.k1, 1))
        terms = rt * phase * vals
        dual = pref * terms.sum()
        observed = abs(pref * terms[ns > N / 2].sum())
        qerr = pref * float(np.sum(np.abs(rt) * errs))
        rt_max = float(np.max(np.abs(rt)))
    else:
        dual, observed, qerr = 0j, 0.0, 0.0
        rt_max = max(abs(v) for v in inner.values()) / k
    # #{Q* <= t} <= pi (sqrt(2t/lambda_min) + 1)^2 with lambda_min >= det / trace
    lam = det / (A[0][0] + A[1][1])
    density = math.pi * 2.0 / lam
    kappa = 4.0 / (split.Delta0 * k * k)
    trunc = pref * rt_max * tail_bound(f, max(N, 1), kappa, point_density=density)
    return DualSide(main, complex(dual), trunc, qerr, observed, int(ns.size), N)


def verify(form: BinaryQuadraticForm, k: int, h: int, f: SmoothWindow, R_max: float = R_MAX,
           rel_tol: float = REL_TOL) -> VoronoiReport:
    """Both sides of the formula; pass iff gap <= rel_tol |lhs| + truncation + quadrature budget."""
    lhs = voronoi_lhs(form, k, h, f)
    if form == SUM_OF_TWO_SQUARES and k % 2:
        side = voronoi_rhs_two_squares(k, h, f, R_max)
    else:
        side = voronoi_rhs_general(form, k, h, f, R_max)
    gap = abs(lhs - side.main - side.dual)
    rounding = 1e-12 * (abs(lhs) + abs(side.main) + 1.0)
    budget = side.truncation_bound + side.quad_error + rounding
    passed = gap <= rel_tol * abs(lhs) + budget
    return VoronoiReport(
        form=str(form), k=k, h=h, X=f.support[0], lhs=lhs, rhs_main=side.main,
        rhs_dual=side.dual, rhs_truncation_bound=side.truncation_bound,
        quad_error=side.quad_error, observed_tail=side.observed_tail, abs_gap=gap,
        terms_used=side.terms, passed=bool(passed),
        extras={"n_max": side.n_max},
    )
