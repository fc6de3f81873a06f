import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from twosq.analysis import SmoothWindow, window_eval
from twosq.arith import r2
from twosq.dioph import GOLDEN, SQRT2, distance_below
from twosq.errors import LimitExceeded
from twosq.experiments import (
    ExperimentConfig, approximant_set, compute_S_direct, compute_T1, compute_T2_spectral,
    count_approximants, euler_product, kloosterman_b_table, scaling_study, verify_decomposition,
)
from twosq.expsums import kloosterman

from oracles import r2_lattice


def cfg29(beta=0.5):
    return ExperimentConfig(SQRT2, 41, 29, beta)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(SQRT2, 41, 29, 0.35)  # below 1/3 + 6 eps
    with pytest.raises(ValueError):
        ExperimentConfig(SQRT2, 41, 29, 1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(SQRT2, 3, 27, 0.5)
    with pytest.raises(ValueError):
        ExperimentConfig(SQRT2, 1, 12, 0.5)  # 2a shares 2 with q
    with pytest.raises(ValueError):
        ExperimentConfig(SQRT2, 41, 29, 0.5, epsilon=0.1)
    with pytest.raises(LimitExceeded):
        ExperimentConfig(SQRT2, 1, 10**5 + 3, 0.5)
    c = cfg29()
    assert c.gamma == Fraction(1, 3)
    assert math.isclose(c.X, 29**1.5) and math.isclose(c.L, 29**0.5)


def test_auto_picks_theorem_pair():
    c = ExperimentConfig.auto(SQRT2, 100, 200, 0.5)
    assert (c.a, c.q) == (239, 169)
    with pytest.raises(ValueError):
        ExperimentConfig.auto(SQRT2, 70, 71, 0.5)


def test_S_direct_matches_brute_force():
    c = cfg29()
    lo, hi = c.w.support
    abar = pow(c.a, -1, c.q)
    total = 0.0
    for b in range(-math.ceil(c.L), math.ceil(c.L) + 1):
        if math.gcd(b, c.q) != 1:
            continue
        pb = float(window_eval(c.phi, np.array([b / c.L]))[0])
        for n in range(max(1, math.ceil(lo)), math.floor(hi) + 1):
            if (n - abar * b) % c.q == 0:
                total += pb * r2_lattice(n) * float(window_eval(c.w, np.array([float(n)]))[0])
    assert math.isclose(compute_S_direct(c), total, rel_tol=1e-12)


def test_S_zero_windows():
    c = cfg29()
    assert compute_S_direct(c, phi=SmoothWindow("zero", 1.0)) == 0.0
    assert compute_S_direct(c, w=SmoothWindow("zero", c.X)) == 0.0


@pytest.mark.parametrize("q,expected", [(1, 1.0), (29, 1 - 1 / 29), (9, 1 + 1 / 3), (5, 1 - 1 / 5),
                                        (7, 1 + 1 / 7), (45, (1 + 1 / 3) * (1 - 1 / 5))])
def test_euler_product(q, expected):
    assert math.isclose(euler_product(q), expected, rel_tol=1e-14)


def test_T1_forms():
    t = compute_T1(cfg29())
    assert math.isclose(t.exact, math.pi / 29 * t.integral_w * t.b_mass * t.euler_product, rel_tol=1e-14)
    assert t.lemma_form > t.exact > 0


@pytest.mark.parametrize("k", [1, 29])
def test_kloosterman_b_table_direct(k):
    c = cfg29()
    table = kloosterman_b_table(c, k)
    B = math.ceil(c.L)
    for m in range(k):
        ref = 0j
        for b in range(-B, B + 1):
            if math.gcd(b, c.q) != 1:
                continue
            pb = float(window_eval(c.phi, np.array([b / c.L]))[0])
            if k == 1:
                ref += pb
            else:
                ref += pb * kloosterman(m, pow(4 * c.a, -1, k) * b % k, k)
        assert abs(table[m] - ref) < 1e-10 * max(1.0, abs(ref))


@pytest.mark.parametrize("beta", [0.5, 0.6])
def test_small_decomposition(beta):
    rep = verify_decomposition(cfg29(beta), threads=2)
    assert rep.passed
    assert rep.identity_gap <= rep.tolerance_budget
    assert rep.tolerance_budget <= 1e-4 * abs(rep.T1_closed)
    assert math.isclose(rep.S_direct, rep.T1_closed + rep.T2_spectral, rel_tol=1e-4)
    assert rep.lower_bound_witness <= 50 * rep.S_direct <= 2500 * rep.upper_bound_witness
    row = rep.row()
    assert "per_k" not in row and row["q"] == 29


def test_T2_thread_independent():
    c = cfg29()
    a = compute_T2_spectral(c, threads=1)
    b = compute_T2_spectral(c, threads=4)
    assert a.value == b.value
    assert a.imag_residual < 1e-9 * max(1.0, abs(a.value))


def _oracle_members(x, N, gamma, C1=1):
    out = []
    for n in range(1, N + 1):
        if r2(n) == 0:
            continue
        y = n * x
        if abs(y - mpmath.nint(y)) < C1 * mpmath.mpf(n) ** (-gamma):
            out.append(n)
    return out


def test_count_exhaustive_oracle():
    mpmath.mp.dps = 50
    got = approximant_set(SQRT2, 1e4, 1, Fraction(1, 2))
    assert got == _oracle_members(mpmath.sqrt(2), 20000, mpmath.mpf(1) / 2)
    assert len(got) == 162
    got = approximant_set(GOLDEN, 2e3, 1, Fraction(3, 7))
    assert got == _oracle_members((1 + mpmath.sqrt(5)) / 2, 4000, mpmath.mpf(3) / 7)


def test_count_members_reverified():
    for n in approximant_set(SQRT2, 5e4, 1, Fraction(1, 2)):
        assert r2(n) > 0
        assert distance_below(SQRT2, n, 1, Fraction(1, 2))


def test_count_edge_cases_and_monotonicity():
    assert count_approximants(SQRT2, 1e3, 0, Fraction(1, 2)) == 0
    assert count_approximants(SQRT2, 0.2, 1, Fraction(1, 2)) == 0
    everything = sum(1 for n in range(1, 2001) if r2(n) > 0)
    assert count_approximants(SQRT2, 1e3, 10**6, Fraction(1, 2)) == everything
    cs = [count_approximants(SQRT2, 1e4, c, Fraction(1, 2)) for c in (0.25, 0.5, 1, 2)]
    assert cs == sorted(cs)
    xs = [count_approximants(SQRT2, x, 1, Fraction(1, 2)) for x in (1e3, 1e4, 1e5)]
    assert xs == sorted(xs)
    assert 1682 not in approximant_set(SQRT2, 1e4, 1, Fraction(1, 2))


def test_count_thread_independent():
    a = approximant_set(SQRT2, 1e5, 1, Fraction(3, 7), threads=1)
    b = approximant_set(SQRT2, 1e5, 1, Fraction(3, 7), threads=8)
    assert a == b


def test_scaling_study():
    assert scaling_study(SQRT2, 0.5, []) == []
    rows = scaling_study(SQRT2, 0.5, [29], threads=2)
    assert len(rows) == 1 and rows[0].passed and rows[0].count_A > 0
    with pytest.raises(ValueError):
        scaling_study(SQRT2, 0.5, [70])
