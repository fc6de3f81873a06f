"""End-to-end computations for the smoothed congruence sum of r2.

S = sum over b coprime to q of Phi(b/L) sum_{a n = b mod q} r2(n) w(n), with
L = q^beta and X = q^(1+beta). Detecting the congruence with additive
characters and applying Voronoi summation splits S = T1 + T2. Here S is
computed directly, T1 in closed form and T2 from Kloosterman sums and
J0-transforms, which gives three independent routes to the same identity.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import SmoothWindow, integral_of, j0_transform, window_eval
from .arith import divisors, euler_phi, factorize, mod_inverse, r2_sieve
from .dioph import SQRT2, IrrationalSpec, distance_below, sandwich, theorem_pairs
from .errors import DecompositionMismatch, LimitExceeded, PrecisionExhausted, ToleranceNotMet
from .expsums import gauss_sum, unit_table
from .quadforms import SUM_OF_TWO_SQUARES
from .voronoi import TERM_CAP, tail_bound

X_GUARD = 10**7
SLACK_C = 50.0
R_LADDER = (150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 500.0)
TAIL_REL = 1e-5
BUDGET_TARGET = 1e-4


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("TWOSQ_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    alpha: IrrationalSpec
    a: int
    q: int
    beta: float
    epsilon: float = 0.01
    C1: float = 1.0
    phi_sharpness: float = 8.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        if math.gcd(2 * self.a, self.q) != 1:
            raise ValueError(f"gcd(2a, q) = gcd({2 * self.a}, {self.q}) != 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (1 / 3 + 6 * self.epsilon < self.beta < 1):
            raise ValueError(f"beta={self.beta} outside (1/3 + 6 eps, 1) with eps={self.epsilon}")
        if not self.C1 > 0:
            raise ValueError("C1 must be positive")
        if self.X > X_GUARD:
            raise LimitExceeded(f"X={self.X:.3g} exceeds {X_GUARD}")

    @property
    def L(self) -> float:
        return self.q ** self.beta

    @property
    def X(self) -> float:
        return self.q ** (1 + self.beta)

    @property
    def gamma(self) -> Fraction:
        b = Fraction(str(self.beta))
        return (1 - b) / (1 + b)

    @property
    def w(self) -> SmoothWindow:
        return SmoothWindow("plateau_w", self.X)

    @property
    def phi(self) -> SmoothWindow:
        return SmoothWindow("bump_phi", 1.0, self.phi_sharpness)

    @classmethod
    def auto(cls, alpha: IrrationalSpec, q_min: int, q_max: int, beta: float, **kw):
        """First theorem pair with q in [q_min, q_max]."""
        pairs = theorem_pairs(alpha, q_min, q_max)
        if not pairs:
            raise ValueError(f"no admissible (a, q) with {q_min} <= q <= {q_max}")
        return cls(alpha, pairs[0].a, pairs[0].q, beta, **kw)


def _b_weights(cfg: ExperimentConfig, phi: SmoothWindow | None = None):
    """b with |b| < L, gcd(b, q) = 1, and Phi(b/L)."""
    phi = phi or cfg.phi
    L = cfg.L
    B = math.ceil(L)
    bs = np.arange(-B, B + 1)
    bs = bs[np.gcd(bs, cfg.q) == 1]
    wts = window_eval(phi, bs / L)
    keep = wts != 0
    return bs[keep], wts[keep]


def compute_S_direct(cfg: ExperimentConfig, w: SmoothWindow | None = None,
                     phi: SmoothWindow | None = None) -> float:
    """Direct double sum over b and the progression n = abar b mod q in [X, 2X]."""
    w = w or cfg.w
    phi = phi or cfg.phi
    if w.kind == "zero" or phi.kind == "zero":
        return 0.0
    lo, hi = w.support
    n_lo, n_hi = max(1, math.ceil(lo)), math.floor(hi)
    r = r2_sieve(n_hi)
    abar = mod_inverse(cfg.a, cfg.q)
    bs, wts = _b_weights(cfg, phi)
    total = []
    for b, pb in zip(bs.tolist(), wts.tolist()):
        res = (abar * b) % cfg.q
        start = n_lo + ((res - n_lo) % cfg.q)
        n = np.arange(start, n_hi + 1, cfg.q)
        total.append(pb * math.fsum(r[n] * window_eval(w, n.astype(float))))
    return math.fsum(total)


@dataclass
class T1Result:
    exact: float
    lemma_form: float
    b_mass: float
    euler_product: float
    integral_w: float


def euler_product(q: int) -> float:
    prod = 1.0
    for p in factorize(q).primes():
        prod *= 1.0 - gauss_sum(SUM_OF_TWO_SQUARES, p, 1).real / (p * p)
    return prod


def compute_T1(cfg: ExperimentConfig) -> T1Result:
    """Main term. ``exact`` keeps the finite b-sum, ``lemma_form`` is the asymptotic closed form.

    With c_k(abar b) = mu(k) for gcd(b, q) = 1 the k-sum factors as an Euler
    product, so exact = (pi/q) (integral w) (sum' Phi(b/L)) prod (1 - G(p,1)/p^2).
    The asymptotic form replaces the b-sum by L Phi^(0) phi(q)/q and carries
    a factor 2 pi in place of pi.
    """
    q = cfg.q
    Iw = integral_of(cfg.w).value
    _, wts = _b_weights(cfg)
    mass = math.fsum(wts.tolist())
    prod = euler_product(q)
    exact = math.pi / q * Iw * mass * prod
    phi_hat0 = integral_of(cfg.phi).value
    lemma = 2 * math.pi * phi_hat0 * cfg.L * euler_phi(q) / q**2 * prod * Iw
    return T1Result(exact, lemma, mass, prod, Iw)


def kloosterman_b_table(cfg: ExperimentConfig, k: int) -> np.ndarray:
    """K_k(m) = sum_b Phi(b/L) S(m, Delta0bar abar b; k) for m = 0..k-1, Delta0 = 4."""
    bs, wts = _b_weights(cfg)
    if k == 1:
        return np.array([math.fsum(wts.tolist())], dtype=complex)
    c = mod_inverse(4, k) * mod_inverse(cfg.a % k, k) % k
    units, inverses = unit_table(k)
    cb = (c * bs) % k
    # H(x) = sum_b Phi(b/L) e(c_b xbar / k) for units x
    H = np.exp(2j * math.pi * np.outer(inverses, cb) / k) @ wts
    m = np.arange(k)
    return np.exp(2j * math.pi * np.outer(m, units) / k) @ H


@dataclass
class KTerm:
    k: int
    value: complex
    R_max: float
    n_max: int
    terms: int
    truncation_bound: float
    quad_error: float
    observed_tail: float


def _t2_divisor(cfg: ExperimentConfig, k: int, T1_abs: float, tail_rel: float) -> KTerm:
    q, w, X = cfg.q, cfg.w, cfg.X
    G = gauss_sum(SUM_OF_TWO_SQUARES, k, 1)
    K = kloosterman_b_table(cfg, k)
    pref = math.pi / q * G / k / k  # w~_k = (1/k) * J0-transform
    scale = abs(pref) * float(np.max(np.abs(K)))
    R = R_LADDER[0]
    for R in R_LADDER:
        N = int(R * R * k * k / X)
        trunc = scale * tail_bound(w, max(N, 1), 1.0 / (k * k))
        if trunc <= tail_rel * T1_abs:
            break
    if N < 1:
        return KTerm(k, 0j, R, N, 0, trunc, 0.0, 0.0)
    r = r2_sieve(N)
    n = np.nonzero(r[1:])[0] + 1
    if n.size > TERM_CAP:
        raise LimitExceeded(f"k={k}: {n.size} dual terms exceed cap {TERM_CAP}")
    vals, errs = j0_transform(w, np.sqrt(n) / k)
    terms = r[n] * vals * K[n % k]
    value = pref * terms.sum()
    observed = abs(pref * terms[n > N / 2].sum())
    qerr = abs(pref) * float(np.sum(r[n] * errs * np.abs(K[n % k])))
    return KTerm(k, complex(value), R, N, int(n.size), trunc, qerr, observed)


@dataclass
class T2Result:
    value: float
    truncation_bound: float
    quad_error: float
    observed_tail: float
    imag_residual: float
    per_k: list


def compute_T2_spectral(cfg: ExperimentConfig, T1_abs: float | None = None, threads: int | None = None,
                        tail_rel: float = TAIL_REL) -> T2Result:
    """Sum over k | q of the Kloosterman-twisted dual sums, R_max chosen per k.

    For each k the cutoff R = sqrt(n X)/k climbs a fixed ladder until the
    rigorous tail bound falls below tail_rel |T1|; the last rung is used
    otherwise and its bound is reported as is.
    """
    if T1_abs is None:
        T1_abs = abs(compute_T1(cfg).exact)
    threads = threads or default_threads()
    ks = divisors(cfg.q)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_k = list(pool.map(lambda k: _t2_divisor(cfg, k, T1_abs, tail_rel), ks))
    total = sum((t.value for t in per_k), 0j)
    return T2Result(
        value=total.real,
        truncation_bound=math.fsum(t.truncation_bound for t in per_k),
        quad_error=math.fsum(t.quad_error for t in per_k),
        observed_tail=math.fsum(t.observed_tail for t in per_k),
        imag_residual=abs(total.imag),
        per_k=per_k,
    )


@dataclass
class ExperimentReport:
    alpha: str
    a: int
    q: int
    beta: float
    L: float
    X: float
    S_direct: float
    T1_closed: float
    T1_lemma: float
    T2_spectral: float
    ratio_S_over_T1: float
    ratio_S_over_T1_lemma: float
    lower_bound_witness: float
    upper_bound_witness: float
    identity_gap: float
    tolerance_budget: float
    truncation_bound: float
    quad_error: float
    observed_tail: float
    count_A: int
    threads: int
    runtime_s: float
    passed: bool
    per_k: list = field(default_factory=list, repr=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("per_k")
        return d


def verify_decomposition(cfg: ExperimentConfig, threads: int | None = None, count: bool = False,
                         slack: float = SLACK_C) -> ExperimentReport:
    """S_direct against T1 + T2 within the quadrature + truncation + rounding budget.

    Also checks X L / (q log^2 q) <= slack S and S <= slack X L / q.
    Raises DecompositionMismatch with the per-k breakdown on failure.
    """
    threads = threads or default_threads()
    t0 = time.perf_counter()
    S = compute_S_direct(cfg)
    T1 = compute_T1(cfg)
    T2 = compute_T2_spectral(cfg, abs(T1.exact), threads)
    gap = abs(S - T1.exact - T2.value)
    rounding = 1e-12 * (abs(S) + abs(T1.exact) + abs(T2.value)) + T2.imag_residual
    budget = T2.truncation_bound + T2.quad_error + rounding
    q, X, L = cfg.q, cfg.X, cfg.L
    lower = X * L / (q * math.log(q) ** 2) if q > 1 else 0.0
    upper = X * L / q
    n_a = count_approximants(cfg.alpha, X, cfg.C1, cfg.gamma, threads) if count else -1
    report = ExperimentReport(
        alpha=str(cfg.alpha), a=cfg.a, q=q, beta=cfg.beta, L=L, X=X,
        S_direct=S, T1_closed=T1.exact, T1_lemma=T1.lemma_form, T2_spectral=T2.value,
        ratio_S_over_T1=S / T1.exact, ratio_S_over_T1_lemma=S / T1.lemma_form,
        lower_bound_witness=lower, upper_bound_witness=upper, identity_gap=gap,
        tolerance_budget=budget, truncation_bound=T2.truncation_bound, quad_error=T2.quad_error,
        observed_tail=T2.observed_tail, count_A=n_a, threads=threads,
        runtime_s=time.perf_counter() - t0, passed=False, per_k=T2.per_k,
    )
    breakdown = {t.k: {"value": t.value, "R_max": t.R_max, "terms": t.terms,
                       "truncation_bound": t.truncation_bound, "quad_error": t.quad_error}
                 for t in T2.per_k}
    if gap > budget:
        raise DecompositionMismatch(f"|S - T1 - T2| = {gap:.3e} exceeds budget {budget:.3e}", breakdown)
    if not (lower <= slack * S and S <= slack * upper):
        raise DecompositionMismatch(f"S={S:.6g} outside [{lower:.3g}/{slack}, {slack}*{upper:.3g}]",
                                    breakdown)
    report.passed = True
    return report


# ---------------------------------------------------------------- approximants

def _chunk_members(alpha, ns, lo, hi, C1, gamma) -> list[int]:
    """Exact membership test against the sandwich lo < alpha < hi shared by the chunk."""
    p1, q1 = lo.numerator, lo.denominator
    p2, q2 = hi.numerator, hi.denominator
    c_num, c_den = C1.numerator, C1.denominator
    g_num, g_den = gamma.numerator, gamma.denominator
    out = []
    for n in ns:
        a1, a2 = n * p1, n * p2
        # ||n alpha|| is monotone on [n lo, n hi] unless it straddles a multiple of 1/2
        if (2 * a1) // q1 != (2 * a2) // q2:
            if distance_below(alpha, n, C1, gamma):
                out.append(n)
            continue
        r1, r2_ = a1 % q1, a2 % q2
        d1, d2 = min(r1, q1 - r1), min(r2_, q2 - r2_)
        # x = d/q; test x^den n^num < C1^den with integers
        rhs_scale = c_num**g_den
        big1 = d1**g_den * n**g_num * c_den**g_den
        big2 = d2**g_den * n**g_num * c_den**g_den
        below1 = big1 < rhs_scale * q1**g_den
        below2 = big2 < rhs_scale * q2**g_den
        if below1 and below2:
            out.append(n)
        elif below1 != below2:
            if distance_below(alpha, n, C1, gamma):
                out.append(n)
    return out


def approximant_set(alpha: IrrationalSpec, X: float, C1, gamma, threads: int | None = None) -> list[int]:
    """All n <= 2X with r2(n) > 0 and ||n alpha|| < C1 n^-gamma, decided exactly."""
    C1 = Fraction(C1) if not isinstance(C1, float) else Fraction(str(C1))
    gamma = Fraction(gamma) if not isinstance(gamma, float) else Fraction(str(gamma))
    if C1 <= 0:
        return []
    N = math.floor(2 * X)
    if N < 1:
        return []
    if N > 2 * X_GUARD:
        raise LimitExceeded(f"2X={N} exceeds {2 * X_GUARD}")
    ns = (np.nonzero(r2_sieve(N)[1:])[0] + 1).tolist()
    lo, hi = sandwich(alpha, 10 * N * N)
    threads = threads or default_threads()
    size = max(1, -(-len(ns) // (4 * threads)))
    chunks = [ns[i:i + size] for i in range(0, len(ns), size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _chunk_members(alpha, c, lo, hi, C1, gamma), chunks))
    return [n for part in parts for n in part]


def count_approximants(alpha: IrrationalSpec, X: float, C1, gamma, threads: int | None = None) -> int:
    return len(approximant_set(alpha, X, C1, gamma, threads))


# ---------------------------------------------------------------- scaling

@dataclass
class ScalingRow:
    q: int
    a: int
    X: float
    L: float
    S: float
    T1: float
    T1_lemma: float
    ratio_S_over_T1: float
    ratio_S_over_T1_lemma: float
    identity_gap: float
    tolerance_budget: float
    count_A: int
    X_pow_1_minus_gamma: float
    passed: bool


def scaling_study(alpha: IrrationalSpec, beta: float, q_list, threads: int | None = None,
                  count: bool = True, epsilon: float = 0.01, C1: float = 1.0) -> list[ScalingRow]:
    rows = []
    for q in q_list:
        pairs = theorem_pairs(alpha, q, q)
        if not pairs:
            raise ValueError(f"q={q} is not an admissible denominator for {alpha}")
        cfg = ExperimentConfig(alpha, pairs[0].a, q, beta, epsilon=epsilon, C1=C1)
        rep = verify_decomposition(cfg, threads, count=count)
        rows.append(ScalingRow(
            q=q, a=cfg.a, X=cfg.X, L=cfg.L, S=rep.S_direct, T1=rep.T1_closed,
            T1_lemma=rep.T1_lemma, ratio_S_over_T1=rep.ratio_S_over_T1,
            ratio_S_over_T1_lemma=rep.ratio_S_over_T1_lemma, identity_gap=rep.identity_gap,
            tolerance_budget=rep.tolerance_budget, count_A=rep.count_A,
            X_pow_1_minus_gamma=cfg.X ** (1 - float(cfg.gamma)), passed=rep.passed,
        ))
    return rows
