"""Binary quadratic forms, adjoints, 2x2 Smith normal form, the delta split and Q*."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .arith import factorize, mod_inverse, ord_p
from .errors import LimitExceeded, NonIntegralStar, NotPositiveDefinite

Matrix = tuple[tuple[int, int], tuple[int, int]]

COUNT_KERNEL_LIMIT = 10**4


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def transpose(a: Matrix) -> Matrix:
    return ((a[0][0], a[1][0]), (a[0][1], a[1][1]))


def det(a: Matrix) -> int:
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def matvec(a: Matrix, v: tuple[int, int]) -> tuple[int, int]:
    return (a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1])


IDENTITY: Matrix = ((1, 0), (0, 1))


@dataclass(frozen=True)
class BinaryQuadraticForm:
    """Q(x, y) = a1 x^2 + b1 x y + c1 y^2 = (1/2) (x, y) A (x, y)^T."""

    a1: int
    b1: int
    c1: int

    @property
    def A(self) -> Matrix:
        return ((2 * self.a1, self.b1), (self.b1, 2 * self.c1))

    @property
    def Delta(self) -> int:
        return 4 * self.a1 * self.c1 - self.b1 * self.b1

    def __call__(self, x: int, y: int) -> int:
        return self.a1 * x * x + self.b1 * x * y + self.c1 * y * y

    @classmethod
    def from_matrix(cls, A: Matrix) -> "BinaryQuadraticForm":
        """Form associated with a symmetric matrix with even diagonal."""
        if A[0][1] != A[1][0] or A[0][0] % 2 or A[1][1] % 2:
            raise ValueError(f"{A} is not symmetric with even diagonal")
        return cls(A[0][0] // 2, A[0][1], A[1][1] // 2)

    def __str__(self) -> str:
        return f"{self.a1}x^2{self.b1:+d}xy{self.c1:+d}y^2"


def make_form(a1: int, b1: int, c1: int) -> BinaryQuadraticForm:
    if a1 <= 0 or 4 * a1 * c1 - b1 * b1 <= 0:
        raise NotPositiveDefinite(f"({a1}, {b1}, {c1}) is not positive definite")
    return BinaryQuadraticForm(a1, b1, c1)


def parse_form(text: str) -> BinaryQuadraticForm:
    a1, b1, c1 = (int(t) for t in text.split(","))
    return make_form(a1, b1, c1)


SUM_OF_TWO_SQUARES = BinaryQuadraticForm(1, 0, 1)


@dataclass(frozen=True)
class AdjointData:
    Adag: Matrix
    witness: Matrix  # Adag @ A, equal to Delta * I


def adjoint(form: BinaryQuadraticForm) -> AdjointData:
    (a, b), (c, d) = form.A
    adag = ((d, -b), (-c, a))
    return AdjointData(adag, matmul(adag, form.A))


def adjoint_form(form: BinaryQuadraticForm) -> BinaryQuadraticForm:
    """Q-dagger, the form attached to the adjoint matrix."""
    return BinaryQuadraticForm.from_matrix(adjoint(form).Adag)


@dataclass(frozen=True)
class SmithData:
    U: Matrix
    V: Matrix
    s1: int
    s2: int

    @property
    def A1(self) -> Matrix:
        return ((self.s1, 0), (0, self.s2))

    @property
    def det_U(self) -> int:
        return det(self.U)

    @property
    def det_V(self) -> int:
        return det(self.V)


def _pivot(m: list[list[int]], start: int) -> tuple[int, int] | None:
    best = None
    for i in range(start, 2):
        for j in range(start, 2):
            if m[i][j] and (best is None or abs(m[i][j]) < abs(m[best[0]][best[1]])):
                best = (i, j)
    return best


def smith_normal_form(M: Matrix) -> SmithData:
    """Smith normal form U M V = diag(s1, s2) of a nonsingular 2x2 integer matrix.

    Pivot: smallest nonzero |entry|, ties broken in row-major order. The
    result has s1 | s2, s1 >= 1, and det V = +1 (so also det U = +1 when
    det M > 0).
    """
    if det(M) == 0:
        raise ValueError("smith_normal_form needs a nonsingular matrix")
    m = [list(M[0]), list(M[1])]
    U = [[1, 0], [0, 1]]
    V = [[1, 0], [0, 1]]

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in (m, V):
            for row in r:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):  # row_dst += f * row_src
        for r in (m, U):
            r[dst] = [a + f * b for a, b in zip(r[dst], r[src])]

    def add_col(dst, src, f):
        for r in (m, V):
            for row in r:
                row[dst] += f * row[src]

    while True:
        i, j = _pivot(m, 0)
        if i:
            swap_rows(0, 1)
        if j:
            swap_cols(0, 1)
        p = m[0][0]
        changed = False
        if m[1][0]:
            add_row(1, 0, -(m[1][0] // p))
            changed = changed or m[1][0] != 0
        if m[0][1]:
            add_col(1, 0, -(m[0][1] // p))
            changed = changed or m[0][1] != 0
        if changed:
            continue
        if m[1][1] % p:
            # pull the non-divisible entry into the pivot row
            add_row(0, 1, 1)
            continue
        break

    s1, s2 = m[0][0], m[1][1]
    if s1 < 0:
        U[0] = [-a for a in U[0]]
        s1 = -s1
    if s2 < 0:
        U[1] = [-a for a in U[1]]
        s2 = -s2
    if (V[0][0] * V[1][1] - V[0][1] * V[1][0]) < 0:
        # flip column 2 of V, compensate with row 2 of U
        for row in V:
            row[1] = -row[1]
        U[1] = [-a for a in U[1]]
    Ut = (tuple(U[0]), tuple(U[1]))
    Vt = (tuple(V[0]), tuple(V[1]))
    return SmithData(Ut, Vt, s1, s2)


@dataclass(frozen=True)
class DeltaSplit:
    k: int
    delta0: int
    delta1: int
    Delta0: int
    k1: int
    g: int


def delta_split(Delta: int, k: int) -> DeltaSplit:
    if Delta < 1 or k < 1:
        raise ValueError("delta_split needs Delta >= 1 and k >= 1")
    delta0 = delta1 = 1
    for p, e in factorize(Delta):
        ek = ord_p(k, p)
        if e <= ek:
            delta0 *= p**e
        else:
            delta1 *= p**ek
    k1 = k // delta1
    g = 1 if delta1 == 1 else mod_inverse(k1, delta1)
    return DeltaSplit(k, delta0, delta1, Delta // delta0, k1, g)


@dataclass(frozen=True)
class StarForm:
    B: Matrix
    Astar: Matrix
    split: DeltaSplit
    smith: SmithData

    @property
    def Qstar(self) -> BinaryQuadraticForm:
        return BinaryQuadraticForm.from_matrix(self.Astar)

    def qstar(self, x: int, y: int) -> float:
        """Q*(x, y) = (1/2) x^T A* x; exact half-integers are possible for odd diagonals."""
        a = self.Astar
        return (a[0][0] * x * x + 2 * a[0][1] * x * y + a[1][1] * y * y) / 2


def star_form(form: BinaryQuadraticForm, k: int) -> StarForm:
    split = delta_split(form.Delta, k)
    adag = adjoint(form).Adag
    snf = smith_normal_form(adag)
    d0 = split.delta0
    b = (d0 // math.gcd(d0, snf.s1), d0 // math.gcd(d0, snf.s2))
    B = ((b[0], 0), (0, b[1]))
    M = matmul(matmul(matmul(B, transpose(snf.V)), adag), matmul(snf.V, B))
    if any(v % d0 for row in M for v in row):
        raise NonIntegralStar(f"{M} is not divisible by delta0={d0}")
    Astar = tuple(tuple(v // d0 for v in row) for row in M)
    return StarForm(B, Astar, split, snf)


def count_kernel(form: BinaryQuadraticForm, k: int) -> int:
    """N(k, Q) = #{x mod k : A x = 0 mod k}, by enumeration."""
    if k < 1:
        raise ValueError("count_kernel needs k >= 1")
    if k > COUNT_KERNEL_LIMIT:
        raise LimitExceeded(f"k={k} exceeds {COUNT_KERNEL_LIMIT}")
    (a, b), (c, d) = form.A
    count = 0
    for x in range(k):
        for y in range(k):
            if (a * x + b * y) % k == 0 and (c * x + d * y) % k == 0:
                count += 1
    return count
