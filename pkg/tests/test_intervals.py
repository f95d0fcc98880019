import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavitypress import Interval, ProbInterval
from cavitypress.errors import InvariantViolation

finite = st.floats(-1e6, 1e6, allow_nan=False)


def ordered(a, b):
    return Interval(min(a, b), max(a, b))


@given(finite, finite, finite, finite, st.floats(0, 1), st.floats(0, 1))
def test_sum_encloses_pointwise_sums(a, b, c, d, s, t):
    x, y = ordered(a, b), ordered(c, d)
    u = x.lo + s * (x.hi - x.lo)
    v = y.lo + t * (y.hi - y.lo)
    assert (x + y).contains(u + v)
    assert (x - y).contains(u - v)


@given(finite, finite, finite, finite)
def test_product_encloses_endpoint_products(a, b, c, d):
    x, y = ordered(a, b), ordered(c, d)
    z = x * y
    for u in (x.lo, x.hi):
        for v in (y.lo, y.hi):
            assert z.contains(u * v)


@given(st.floats(1e-300, 1.0), st.floats(1e-300, 1.0))
def test_neg_log_is_monotone_enclosure(p, q):
    x = ordered(p, q)
    r = x.neg_log()
    assert r.contains(-math.log(p)) and r.contains(-math.log(q))


def test_neg_log_of_zero_is_infinite():
    assert ProbInterval(0.0, 0.5).neg_log().hi == math.inf
    assert ProbInterval(0.0, 0.5).neg_log().to_json()["hi"] is None


def test_interval_rejects_bad_endpoints():
    with pytest.raises(InvariantViolation):
        Interval(1.0, 0.0)
    with pytest.raises(InvariantViolation):
        Interval(float("nan"), 1.0)


@given(st.floats(-1, 2), st.floats(-1, 2))
def test_prob_interval_clipped(a, b):
    p = ProbInterval(min(a, b), max(a, b))
    assert 0.0 <= p.lo <= p.hi <= 1.0


def test_forced_ratios_stay_degenerate():
    assert ProbInterval.from_ratio_bounds(0.0, 0.0).hi == 0.0
    assert ProbInterval.from_ratio_bounds(1.0, 1.0).lo == 1.0
    r = ProbInterval.from_ratio_bounds(0.3, 0.3)
    assert r.lo < 0.3 < r.hi


def test_stderr_combines_in_quadrature():
    s = Interval(0, 1, 0.3) + Interval(0, 1, 0.4)
    assert s.stderr == pytest.approx(0.5)
