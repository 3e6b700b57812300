import json
import math
from fractions import Fraction

import pytest
from gmpy2 import mpfr
from hypothesis import given, strategies as st

from cfruns.cf_engine import cylinder_of
from cfruns.errors import InvalidInterval
from cfruns.gauss_model import (centering, check_assumption2, check_assumption3,
                                constant_word, cylinder_measure, gauss_measure_interval,
                                growth_constants, sharper_sum_constant)

# frozen at 40 significant digits from an independent evaluation
MU_1 = mpfr("0.4150374992788438185462610560521834912402", 140)      # log2(4/3)
MU_12 = mpfr("0.07038932789139794102538883169025714153600", 140)    # log2(21/20)
MU_2 = mpfr("0.1699250014423123629074778878956330175196", 140)      # log2(9/8)
F_HALF = mpfr("0.5849625007211561814537389439478165087598", 140)    # log2(3/2)
C_MINUS_1 = mpfr("0.4458172853351493492648311062947189507198", 140)
C_PLUS_1 = mpfr("4.458172853351493492648311062947189507198", 140)
C_MINUS_2 = mpfr("0.5100697232983947408741395527661313845775", 140)
C_PLUS_2 = mpfr("2.040278893193578963496558211064525538310", 140)
PROOF_K = mpfr("0.9053599303097582357036190987937684932282", 140)


def close(m, ref, tol=Fraction(1, 10**30)):
    # exact rational comparisons; the default mpfr context is only 53 bits
    lo, hi, r = Fraction(*m.lower.as_integer_ratio()), Fraction(*m.upper.as_integer_ratio()), \
        Fraction(*ref.as_integer_ratio())
    return hi - lo <= 2 * tol and lo - tol <= r <= hi + tol


def test_measure_examples():
    assert close(cylinder_measure([1]), MU_1)
    assert close(cylinder_measure([2]), MU_2)
    assert close(cylinder_measure([1, 2]), MU_12)
    assert close(gauss_measure_interval(0, Fraction(1, 2)), F_HALF)
    m = gauss_measure_interval(0, 1)
    assert m.lower <= 1 <= m.upper and m.within(1e-30)


def test_invalid_interval():
    for a, b in [(Fraction(1, 2), Fraction(1, 2)), (Fraction(-1, 2), Fraction(1, 2)), (0, 2)]:
        with pytest.raises(InvalidInterval):
            gauss_measure_interval(a, b)


def test_deep_cylinder_keeps_relative_accuracy():
    m = cylinder_measure(constant_word(1, 40))
    assert m.value < 1e-16
    assert m.error / m.value < 1e-30


def test_growth_constants_frozen():
    g1, g2 = growth_constants(1), growth_constants(2)
    assert abs(g1.c_minus.mid - C_MINUS_1) < 1e-35
    assert abs(g1.c_plus.mid - C_PLUS_1) < 1e-35
    assert abs(g2.c_minus.mid - C_MINUS_2) < 1e-35
    assert abs(g2.c_plus.mid - C_PLUS_2) < 1e-35
    assert abs(float(g1.tau) - (1 + math.sqrt(5)) / 2) < 1e-15


def test_proof_constant_frozen():
    k = sharper_sum_constant()
    assert k.lo <= PROOF_K <= k.hi or abs(k.mid - PROOF_K) < 1e-36


def test_centering():
    assert centering(4, 2) == pytest.approx(1.0)
    assert centering(2**16, math.sqrt(2)) == pytest.approx(16.0, rel=1e-14)
    with pytest.raises(ValueError):
        centering(1, 2)
    with pytest.raises(ValueError):
        centering(10, 1.0)


@given(st.integers(1, 10**6))
def test_tau_quadratic(lam):
    g = growth_constants(lam)
    lo, hi = (Fraction(*v.as_integer_ratio()) for v in g.tau)
    assert lo <= hi
    for t in (lo, hi):
        assert abs(t * t - lam * t - 1) < Fraction(1, 10**25)
    # and the enclosure straddles the root
    assert (lo * lo - lam * lo - 1) <= 0 <= (hi * hi - lam * hi - 1)


@given(st.lists(st.integers(1, 30), min_size=1, max_size=6))
def test_children_partition_parent(w):
    # the children [w, d] for d <= D plus the leftover tail sum to the parent
    parent = cylinder_measure(w)
    D = 40
    total = sum(float(cylinder_measure(list(w) + [d]).value) for d in range(1, D + 1))
    cyl = cylinder_of(list(w) + [D])
    whole = cylinder_of(w)
    # remaining children fill the gap between the last child and the parent end
    gap_lo, gap_hi = sorted([cyl.left, cyl.right])
    if len(w) % 2 == 0:
        rest = gauss_measure_interval(whole.left, gap_lo) if gap_lo > whole.left else None
    else:
        rest = gauss_measure_interval(gap_hi, whole.right) if gap_hi < whole.right else None
    total += float(rest.value) if rest else 0.0
    assert total == pytest.approx(float(parent.value), rel=1e-9)


def test_assumption2_suite_small():
    r = check_assumption2(3, 12)
    assert r.all_pass and len(r.rows) == 12
    assert r.columns == ["k", "lambda", "lower_bound", "measure", "upper_bound", "pass"]
    lines = r.to_csv().splitlines()
    assert lines[0] == "k,lambda,lower_bound,measure,upper_bound,pass"
    assert lines[1].startswith("1,3,") and lines[1].endswith(",1")
    assert json.loads(r.dumps())["all_pass"] is True
    with pytest.raises(ValueError):
        check_assumption2(1, 0)


def test_assumption2_lower_bound_fails_with_smaller_constants():
    # sanity: the report detects a violated bound
    r = check_assumption2(1, 5)
    lower, meas, upper = r.rows[0]["enclosures"]
    assert lower.le(meas) and meas.le(upper)
    assert not upper.le(meas)


def test_assumption3_small_truncation():
    r = check_assumption3(8, 500)
    assert r.all_pass
    assert r.rows[0]["pass_proof"] is None
    assert all(row["pass_proof"] for row in r.rows[1:])
    # k = 2: partial sum is a lower bound for the true sum
    assert 0.196 < float(r.rows[1]["partial_sum"]) < 0.1966


def test_assumption3_truncation_converges():
    a = check_assumption3(3, 200).rows[1]["certified_upper"]
    b = check_assumption3(3, 2000).rows[1]["certified_upper"]
    assert b <= a
