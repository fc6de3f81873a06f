"""Complete exponential sums: Gauss sums, Kloosterman sums and the twisted count r~.

Every sum is evaluated by first counting the integer residues
``r = phase mod k`` exactly and then summing ``count[r] * e(r/k)`` over
the k residues with correctly rounded (``math.fsum``) accumulation.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
from sympy import kronecker_symbol

from .arith import mod_inverse
from .errors import EvenModulus, LimitExceeded, NotCoprime, NoValidInverse
from .quadforms import (
    BinaryQuadraticForm,
    adjoint,
    adjoint_form,
    count_kernel,
    delta_split,
    matmul,
    matvec,
    star_form,
)

GAUSS_LIMIT = 10**4
KLOOSTERMAN_LIMIT = 10**6
R_TILDE_LIMIT = 10**9


def e(x: float) -> complex:
    return cmath.exp(2j * math.pi * x)


def phase_sum(counts: np.ndarray, k: int) -> complex:
    """sum_r counts[r] * e(r / k) with exactly rounded real and imaginary parts."""
    r = np.nonzero(counts)[0]
    c = counts[r].astype(float)
    ang = 2.0 * math.pi * r / k
    return complex(math.fsum(c * np.cos(ang)), math.fsum(c * np.sin(ang)))


def _residue_grid(k: int):
    x = np.arange(k, dtype=np.int64)
    return x[:, None], x[None, :]


def _quadratic_residues(form: BinaryQuadraticForm, k: int, h: int, a=(0, 0), shift=(0, 0)):
    """Histogram of h Q(x) + a.x + k*(shift.x)/... reduced mod k (shift used by callers as needed)."""
    x, y = _residue_grid(k)
    val = h * (form.a1 * x * x + form.b1 * x * y + form.c1 * y * y) + a[0] * x + a[1] * y
    val = val + shift[0] * x + shift[1] * y
    return np.bincount((val % k).ravel(), minlength=k)


def _check_gauss_args(k: int, h: int):
    if k < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(h, k) != 1:
        raise NotCoprime(f"gcd({h}, {k}) != 1")
    if k > GAUSS_LIMIT:
        raise LimitExceeded(f"k={k} exceeds {GAUSS_LIMIT}")


def gauss_sum(form: BinaryQuadraticForm, k: int, h: int = 1) -> complex:
    """G_Q(k, h) = sum over x, y mod k of e_k(h Q(x, y))."""
    _check_gauss_args(k, h)
    return phase_sum(_quadratic_residues(form, k, h % k), k)


def gauss_sum_shifted(form: BinaryQuadraticForm, k: int, h: int, avec) -> complex:
    """G_Q(k, h, a) = sum over x mod k of e_k(h Q(x) + a . x)."""
    _check_gauss_args(k, h)
    a = (avec[0] % k, avec[1] % k)
    return phase_sum(_quadratic_residues(form, k, h % k, a), k)


def lemma_inverse(Delta: int, k: int, modulus_value: int | None = None) -> int:
    """Inverse of ``modulus_value`` (default Delta) mod k1 that is divisible by delta1.

    Built by CRT from the inverse mod k1 and 0 mod delta1; the least
    nonnegative such residue mod k is returned.
    """
    split = delta_split(Delta, k)
    target = Delta if modulus_value is None else modulus_value
    k1, d1 = split.k1, split.delta1
    if math.gcd(target, k1) != 1:
        raise NoValidInverse(f"{target} is not invertible modulo k1={k1}")
    inv = mod_inverse(target, k1)
    # x = inv mod k1, x = 0 mod d1 (gcd(k1, d1) = 1)
    return (inv * d1 * mod_inverse(d1, k1)) % (k1 * d1) if k1 > 1 else 0


def shifted_identity_rhs(form: BinaryQuadraticForm, k: int, h: int, avec) -> complex:
    """Closed-form side of the shifted Gauss sum evaluation, summed directly."""
    _check_gauss_args(k, h)
    split = delta_split(form.Delta, k)
    adag = adjoint(form).Adag
    a = (int(avec[0]), int(avec[1]))
    av = matvec(adag, a)
    if av[0] % split.delta0 or av[1] % split.delta0:
        return 0j
    dbar = lemma_inverse(form.Delta, k)
    hbar = mod_inverse(h, split.k1)
    qdag = adjoint_form(form)(*a)
    prefactor = e(-(hbar * (dbar // split.delta1) * qdag % split.k1) / split.k1) if split.k1 > 1 else 1.0
    # e_{delta1}(x . g a) = e_k(k1 * g * (a . x))
    shift = (split.k1 * split.g * a[0], split.k1 * split.g * a[1])
    inner = phase_sum(_quadratic_residues(form, k, h % k, (0, 0), shift), k)
    return prefactor * inner


def verify_shifted_identity(form: BinaryQuadraticForm, k: int, h: int, avec) -> float:
    """|G_Q(k, h, a) - closed form|, both sides by direct summation."""
    return abs(gauss_sum_shifted(form, k, h, avec) - shifted_identity_rhs(form, k, h, avec))


def gauss_sum_kronecker(form: BinaryQuadraticForm, k: int, h: int) -> complex:
    """(h / N(k, Q)) * G_Q(k, 1) for odd k."""
    if k % 2 == 0:
        raise EvenModulus(f"k={k} is even")
    _check_gauss_args(k, h)
    N = count_kernel(form, k)
    return int(kronecker_symbol(h, N)) * gauss_sum(form, k, 1)


def gauss_multiplicativity_check(form: BinaryQuadraticForm, k1: int, k2: int) -> float:
    if k1 % 2 == 0 or k2 % 2 == 0:
        raise EvenModulus("both moduli must be odd")
    if math.gcd(k1, k2) != 1:
        raise NotCoprime(f"gcd({k1}, {k2}) != 1")
    return abs(gauss_sum(form, k1 * k2) - gauss_sum(form, k1) * gauss_sum(form, k2))


def kloosterman(m: int, n: int, k: int) -> complex:
    """S(m, n; k) = sum over units x mod k of e((m x + n xbar) / k); S(m, n; 1) = 1."""
    if k < 1:
        raise ValueError("modulus must be positive")
    if k > KLOOSTERMAN_LIMIT:
        raise LimitExceeded(f"k={k} exceeds {KLOOSTERMAN_LIMIT}")
    if k == 1:
        return 1 + 0j
    units, inverses = unit_table(k)
    val = (m * units + n * inverses) % k
    return phase_sum(np.bincount(val, minlength=k), k)


def unit_table(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Units x mod k with their inverses, as int64 arrays."""
    units = [x for x in range(k) if math.gcd(x, k) == 1]
    inverses = [pow(x, -1, k) if k > 1 else 0 for x in units]
    return np.array(units, dtype=np.int64), np.array(inverses, dtype=np.int64)


def kloosterman_twist_identity_check(d: int, r: int, x: int, k: int) -> float:
    """Compare sum_{c mod k} e(rc/k) S(cd, x; k) with k * sum_{u unit, du = r} e(-x ubar / k)."""
    lhs = 0j
    for c in range(1, k + 1):
        lhs += e(r * c / k) * kloosterman(c * d, x, k)
    units, inverses = unit_table(k) if k > 1 else (np.array([0]), np.array([0]))
    rhs = 0j
    for u, ubar in zip(units.tolist(), inverses.tolist()):
        if (d * u - r) % k == 0:
            rhs += e(-x * ubar / k)
    return abs(lhs - k * rhs)


def ellipse_points(Amat, n: int):
    """All integer x with (1/2) x^T A x = n, A positive definite symmetric."""
    (a, b), (_, c) = Amat
    det = a * c - b * b
    pts = []
    xmax = math.isqrt(2 * n * c // det) + 1
    for x in range(-xmax, xmax + 1):
        disc = 2 * n * c - det * x * x
        if disc < 0:
            continue
        s = math.isqrt(disc)
        if s * s != disc:
            continue
        for num in {-b * x + s, -b * x - s}:
            if num % c == 0:
                pts.append((x, num // c))
    return pts


def r_tilde(form: BinaryQuadraticForm, n: int, k: int, h: int) -> complex:
    """k^{-1} sum_{Q*(x) = n} sum_{y mod k} e_k(h Q(y)) e_{delta1}(y . g V B x)."""
    _check_gauss_args(k, h)
    if n < 1:
        raise ValueError("r_tilde needs n >= 1")
    if n * k * k > R_TILDE_LIMIT:
        raise LimitExceeded(f"n*k^2 = {n * k * k} exceeds {R_TILDE_LIMIT}")
    star = star_form(form, k)
    inner = twisted_inner_sums(form, k, h, star)
    d1 = star.split.delta1
    gVB = matmul(star.smith.V, star.B)
    total = 0j
    for pt in ellipse_points(star.Astar, n):
        v = matvec(gVB, pt)
        total += inner[(star.split.g * v[0] % d1, star.split.g * v[1] % d1)]
    return total / k


def twisted_inner_sums(form: BinaryQuadraticForm, k: int, h: int, star=None) -> dict:
    """Map v mod delta1 to sum_{y mod k} e_k(h Q(y)) e_{delta1}(y . v)."""
    if star is None:
        star = star_form(form, k)
    d1, k1 = star.split.delta1, star.split.k1
    out = {}
    for v0 in range(d1):
        for v1 in range(d1):
            shift = (k1 * v0, k1 * v1)
            out[(v0, v1)] = phase_sum(_quadratic_residues(form, k, h % k, (0, 0), shift), k)
    return out
