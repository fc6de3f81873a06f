"""Exact integer utilities: factorization, inverses, r2, Ramanujan sums."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sympy import factorint

from .errors import LimitExceeded, NotCoprime

MAX_INT64 = 2**63
R2_SIEVE_LIMIT = 10**8

# chi_4 indexed by n mod 4
CHI4 = (0, 1, 0, -1)


def chi4(n: int) -> int:
    return CHI4[n % 4]


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def ord(self, p: int) -> int:
        """Exponent of ``p`` in ``n`` (0 if ``p`` does not divide ``n``)."""
        for prime, e in self.factors:
            if prime == p:
                return e
        return 0

    def __iter__(self):
        return iter(self.factors)


def check_int64(*values: int) -> None:
    for v in values:
        if abs(v) >= MAX_INT64:
            raise OverflowError(f"{v} does not fit in a signed 64-bit integer")


def factorize(n: int) -> Factorization:
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    check_int64(n)
    return Factorization(n, tuple(sorted(factorint(n).items())))


def ord_p(n: int, p: int) -> int:
    """Largest e with p**e | n, for n != 0."""
    if n == 0:
        raise ValueError("ord_p(0) is undefined")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def mod_inverse(a: int, m: int) -> int:
    if m < 1:
        raise ValueError("modulus must be positive")
    if m == 1:
        return 0
    if math.gcd(a, m) != 1:
        raise NotCoprime(f"gcd({a}, {m}) = {math.gcd(a, m)}")
    return pow(a, -1, m)


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f.factors) % 2 else 1


def num_divisors(n: int) -> int:
    return math.prod(e + 1 for _, e in factorize(n))


def r2(n: int) -> int:
    """Number of (x, y) in Z^2 with x^2 + y^2 = n, via 4 * sum_{d|n} chi_4(d)."""
    if n < 1:
        raise ValueError("r2 needs n >= 1")
    # multiplicative form of the divisor sum
    total = 4
    for p, e in factorize(n):
        if p == 2:
            continue
        if p % 4 == 1:
            total *= e + 1
        elif e % 2:
            return 0
    return total


def r2_sieve(N: int) -> np.ndarray:
    """Array ``a`` of length N + 1 with ``a[n] = r2(n)`` (``a[0] = 1``).

    Built by accumulating lattice points of the quarter disk x >= 0, y >= 0
    and applying the sign multiplicities.
    """
    if N < 1:
        raise ValueError("r2_sieve needs N >= 1")
    if N > R2_SIEVE_LIMIT:
        raise LimitExceeded(f"N={N} exceeds the sieve guard {R2_SIEVE_LIMIT}")
    counts = np.zeros(N + 1, dtype=np.int64)
    xmax = math.isqrt(N)
    chunk = max(1, 4_000_000 // (xmax + 1))
    for x0 in range(0, xmax + 1, chunk):
        xs = np.arange(x0, min(xmax, x0 + chunk - 1) + 1, dtype=np.int64)
        ys = np.arange(0, xmax + 1, dtype=np.int64)
        n = xs[:, None] ** 2 + ys[None, :] ** 2
        # (x, y) with both nonzero stands for 4 points, one zero coordinate for 2
        mult = np.where(xs[:, None] > 0, 2, 1) * np.where(ys[None, :] > 0, 2, 1)
        keep = n <= N
        counts += np.bincount(n[keep], weights=mult[keep], minlength=N + 1).astype(np.int64)
    return counts


def ramanujan_sum(k: int, n: int) -> int:
    """c_k(n) = mu(k/g) phi(k) / phi(k/g) with g = gcd(k, n)."""
    if k < 1:
        raise ValueError("ramanujan_sum needs k >= 1")
    g = math.gcd(k, n)
    m = k // g
    return mobius(m) * euler_phi(k) // euler_phi(m)


def ramanujan_sum_direct(k: int, n: int) -> complex:
    """Brute-force sum of e(nh/k) over reduced residues h mod k."""
    return sum(
        complex(math.cos(2 * math.pi * n * h / k), math.sin(2 * math.pi * n * h / k))
        for h in range(k)
        if math.gcd(h, k) == 1
    )


def divisor_bound_check(n: int, c: float = 2.0) -> tuple[int, float]:
    """Return (r2(n), n ** (c / log log n)); the exact claim is r2(n) <= 4 d(n)."""
    if n < 16:
        raise ValueError("divisor_bound_check needs n >= 16 so that log log n > 0")
    return r2(n), n ** (c / math.log(math.log(n)))
