import cmath
import math

import numpy as np
import pytest

from oracles import r2_lattice, representations
from twosq.analysis import SmoothWindow, window_eval
from twosq.errors import EvenModulus, NotCoprime
from twosq.quadforms import SUM_OF_TWO_SQUARES, make_form
from twosq.voronoi import (
    representation_counts, tail_bound, verify, voronoi_lhs, voronoi_rhs_general,
    voronoi_rhs_two_squares,
)

Q = SUM_OF_TWO_SQUARES


def test_representation_counts_match_enumeration():
    for t in ((1, 0, 1), (1, 1, 1), (1, 0, 2), (2, 1, 3), (3, 2, 5)):
        F = make_form(*t)
        r = representation_counts(F, 150)
        assert [int(v) for v in r[1:]] == [len(representations(*t, n)) for n in range(1, 151)]


def test_lhs_against_direct_sum():
    X = 200.0
    f = SmoothWindow("plateau_w", X)
    direct = sum(r2_lattice(n) * cmath.exp(2j * math.pi * n / 3) * float(window_eval(f, n))
                 for n in range(201, 400))
    assert abs(voronoi_lhs(Q, 3, 1, f) - direct) < 1e-9 * abs(direct)


def test_lhs_trivial_character():
    f = SmoothWindow("plateau_w", 300.0)
    plain = sum(r2_lattice(n) * float(window_eval(f, n)) for n in range(300, 601))
    assert abs(voronoi_lhs(Q, 1, 1, f) - plain) < 1e-9 * plain


def test_lhs_zero_window_and_coprimality():
    assert voronoi_lhs(Q, 9, 1, SmoothWindow("zero", 500.0)) == 0
    with pytest.raises(NotCoprime):
        voronoi_lhs(Q, 9, 3, SmoothWindow("plateau_w", 500.0))


@pytest.mark.parametrize("k, h, X", [(45, 2, 2000.0), (15, 4, 500.0), (1, 1, 500.0), (21, 5, 2000.0)])
def test_verify_examples(k, h, X):
    rep = verify(Q, k, h, SmoothWindow("plateau_w", X))
    assert rep.passed
    assert rep.abs_gap <= 1e-6 * abs(rep.lhs)
    assert rep.abs_gap == pytest.approx(abs(rep.lhs - rep.rhs_main - rep.rhs_dual))


def test_verify_zero_window():
    rep = verify(Q, 9, 1, SmoothWindow("zero", 500.0))
    assert rep.passed and rep.lhs == 0 and rep.rhs_main == 0 and rep.rhs_dual == 0


def test_main_term_sign_and_h_independence():
    f = SmoothWindow("plateau_w", 500.0)
    m = voronoi_rhs_two_squares(3, 1, f).main
    assert m.real < 0
    assert voronoi_rhs_two_squares(3, 2, f).main == m
    for h in (1, 2, 4, 7, 8):
        assert voronoi_rhs_two_squares(15, h, f).main == voronoi_rhs_two_squares(15, 1, f).main


def test_two_squares_preconditions():
    f = SmoothWindow("plateau_w", 500.0)
    with pytest.raises(EvenModulus):
        voronoi_rhs_two_squares(4, 1, f)
    with pytest.raises(NotCoprime):
        voronoi_rhs_two_squares(9, 6, f)


@pytest.mark.parametrize("k, h", [(1, 1), (9, 2), (15, 7)])
def test_general_formula_reduces_to_two_squares(k, h):
    f = SmoothWindow("plateau_w", 500.0)
    a = voronoi_rhs_two_squares(k, h, f)
    b = voronoi_rhs_general(Q, k, h, f)
    assert abs(a.main - b.main) <= 1e-9 * abs(a.main)
    assert abs(a.dual - b.dual) <= 1e-9 * max(1.0, abs(a.dual))


def test_general_zero_window():
    side = voronoi_rhs_general(make_form(1, 1, 1), 5, 1, SmoothWindow("zero", 500.0))
    assert side.main == 0 and side.dual == 0


@pytest.mark.parametrize("form", [(1, 1, 1), (1, 0, 2)])
@pytest.mark.parametrize("k", [5, 7, 11])
def test_general_identity_coprime(form, k):
    rep = verify(make_form(*form), k, 1, SmoothWindow("plateau_w", 500.0))
    assert rep.abs_gap <= 1e-5 * abs(rep.lhs)


@pytest.mark.parametrize("form, k, h", [((1, 0, 1), 2, 1), ((1, 0, 1), 4, 3), ((1, 0, 1), 6, 5),
                                        ((1, 1, 1), 3, 1), ((1, 1, 1), 6, 1), ((1, 0, 2), 8, 3),
                                        ((2, 1, 3), 23, 2), ((1, 0, 3), 12, 7)])
def test_general_identity_with_shared_factors(form, k, h):
    """Levels sharing primes with Delta, where delta0 or delta1 exceeds 1."""
    rep = verify(make_form(*form), k, h, SmoothWindow("plateau_w", 300.0))
    assert rep.abs_gap <= 1e-5 * abs(rep.lhs)


def test_truncation_doubling():
    f = SmoothWindow("plateau_w", 500.0)
    a = voronoi_rhs_two_squares(9, 2, f, R_max=150.0)
    b = voronoi_rhs_two_squares(9, 2, f, R_max=150.0 * math.sqrt(2))
    assert abs(a.dual - b.dual) <= a.truncation_bound
    assert b.n_max >= 2 * a.n_max - 1


def test_tail_bound_monotone():
    f = SmoothWindow("plateau_w", 1000.0)
    vals = [tail_bound(f, N, 1 / 81) for N in (1e3, 1e4, 1e5, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert tail_bound(SmoothWindow("zero", 10.0), 100, 1.0) == 0.0


def test_report_row_is_flat():
    row = verify(Q, 5, 2, SmoothWindow("plateau_w", 500.0)).row()
    assert {"lhs_re", "lhs_im", "rhs_main_re", "rhs_dual_im", "passed"} <= set(row)
    assert all(not isinstance(v, complex) for v in row.values())
