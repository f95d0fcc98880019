import math

import numpy as np
import pytest

from cavitypress import FolnerSchedule, Pattern, full_shift, golden_mean, hardcore, ising, zero
from cavitypress.errors import PreconditionError, ZeroProbabilityError
from cavitypress.gibbs_engine import AtomicOracle, PeriodicOracle, exact_markov_1d, glauber_sampler
from cavitypress.group_core import GroupPoint
from cavitypress.potential import ISING
from cavitypress.pressure_lab import (ergodic_average, pressure_sequence, smb_ratio_series, strip_bracket,
                                      strip_pressure_2d, transfer_pressure_1d)
from cavitypress.subshift import pattern_array

from conftest import LOG_PHI

HARD_SQUARES = 0.407495101136928  # tests/oracles/hard_squares_strip.py


def P(*v, k=0):
    return GroupPoint(tuple(v), k)


def hardcore_1d_pressure(lam):
    return math.log((1 + math.sqrt(1 + 4 * lam)) / 2)


def test_pressure_sequence_golden_mean(z1, golden):
    s = pressure_sequence(zero(z1), golden, FolnerSchedule(z1, "corner"), 12)
    assert abs(s.last.mid - LOG_PHI) <= 0.05
    assert s.ns == list(range(1, 13))


def test_pressure_sequence_full_shift(z1, z2):
    for desc in (z1, z2):
        s = pressure_sequence(zero(desc), full_shift(desc), FolnerSchedule(desc), 2)
        for e in s.entries:
            assert e.value.mid == pytest.approx(math.log(2), abs=1e-14)


def test_pressure_sequence_hardcore_tends_to_closed_form(z1, golden):
    for lam in (0.5, 2.0):
        s = pressure_sequence(hardcore(z1, lam), golden, FolnerSchedule(z1, "corner"), 40)
        gaps = [abs(e.value.mid - hardcore_1d_pressure(lam)) for e in s.entries]
        assert gaps[-1] < gaps[9] < gaps[0] and gaps[-1] < 0.03


def test_pressure_sequence_rejects_empty(z1, golden):
    with pytest.raises(PreconditionError):
        pressure_sequence(zero(z1), golden, FolnerSchedule(z1), 0)


def test_pressure_sequence_rate(z1, golden):
    s = pressure_sequence(zero(z1), golden, FolnerSchedule(z1, "corner"), 14)
    assert abs(transfer_pressure_1d(zero(z1), golden) - s.last.mid) <= 5e-2
    C = max(abs(e.value.mid - LOG_PHI) * e.n for e in s.entries)
    assert all(abs(e.value.mid - LOG_PHI) <= C / e.n for e in s.entries)


def test_transfer_pressure_examples(z1, golden):
    assert transfer_pressure_1d(hardcore(z1, 1.0), golden) == pytest.approx(LOG_PHI, abs=1e-12)
    for lam in (0.3, 1.0, 5.0):
        assert transfer_pressure_1d(hardcore(z1, lam), full_shift(z1)) == pytest.approx(math.log(1 + lam), abs=1e-12)
        assert transfer_pressure_1d(hardcore(z1, lam), golden) == pytest.approx(hardcore_1d_pressure(lam), abs=1e-12)
    for beta in (0.1, 0.8, 2.0):
        v = transfer_pressure_1d(ising(z1, beta), full_shift(z1, ISING))
        assert v == pytest.approx(math.log(2 * math.cosh(beta)), abs=1e-12)


def test_strip_bracket_hard_squares(z2):
    br = strip_bracket(hardcore(z2, 1.0), golden_mean(z2), 8)
    assert br.interval.width < 2e-2
    assert br.interval.contains(HARD_SQUARES)


def test_strip_pressure_full_shift(z2):
    for boundary in ("free", "periodic"):
        s = strip_pressure_2d(zero(z2), full_shift(z2), [2, 3, 4], boundary)
        for e in s.entries:
            assert e.value.mid == pytest.approx(math.log(2), abs=1e-13)


def test_strip_pressure_empty_lattice_limit(z2):
    vals = [strip_pressure_2d(hardcore(z2, lam), golden_mean(z2), [4], "periodic").last.mid
            for lam in (1e-1, 1e-3, 1e-6)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-5


def test_smb_ratio_zero_point(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    x = lambda g: 0
    s = smb_ratio_series(mu, x, FolnerSchedule(z1, "corner"), 200, phi=hc1, pressure=LOG_PHI)
    assert abs(s.last.mid - LOG_PHI) < 5e-3
    assert dict(s.entries[-1].extra)["prediction"] == pytest.approx(LOG_PHI)


def test_smb_ratio_atomic_is_zero(z1):
    a = AtomicOracle(z1, 2, 0)
    s = smb_ratio_series(a, lambda g: 0, FolnerSchedule(z1), 6)
    assert all(e.value.mid == 0 for e in s.entries)


def test_smb_ratio_zero_probability(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    with pytest.raises(ZeroProbabilityError) as info:
        smb_ratio_series(mu, lambda g: 1, FolnerSchedule(z1, "corner"), 4)
    assert info.value.n == 2


def test_smb_ratio_on_sampled_points(z1, golden):
    phi = zero(z1)
    mu = exact_markov_1d(phi, golden)
    sched = FolnerSchedule(z1, "corner")
    # exact law of the ratio at n = 10
    arr, sites = pattern_array(golden, sched.T(10))
    lc = mu.log_cylinder_batch(sites, arr)
    p_good = float(np.exp(lc)[np.abs(-lc / 10 - LOG_PHI) < 0.05].sum())
    assert p_good >= 0.9
    emp = glauber_sampler(phi, golden, (64,), 3300, seed=7, burn_in=300, thin=30)
    rows = emp.samples
    assert rows.shape[0] == 100
    good = 0
    for row in rows:
        x = Pattern(tuple((P(j), int(row[j])) for j in range(10)))
        good += abs(smb_ratio_series(mu, x, sched, 10, n_min=10).last.mid - LOG_PHI) < 0.05
    # "at least 90 of 100" is itself random (probability about 0.86 under exact sampling), so the
    # sampled fraction is checked against the exact law with a 3-sigma binomial band
    assert abs(good / 100 - p_good) <= 3 * math.sqrt(p_good * (1 - p_good) / 100)


def test_ergodic_average_examples(z1, hc1, golden):
    sched = FolnerSchedule(z1)
    s = ergodic_average(lambda p: 2.5, [P(0)], lambda g: 0, sched, 5)
    assert all(e.value.mid == 2.5 for e in s.entries)
    per = PeriodicOracle(z1, 2, (2,), {P(0): 0, P(1): 1})
    ind = lambda p: p[P(0)]
    s = ergodic_average(ind, [P(0)], lambda g: g.lattice[0] % 2, FolnerSchedule(z1, "corner"), 8, n_min=2,
                        oracle=per)
    for e in s.entries:
        assert e.value.mid == pytest.approx((e.n // 2) / e.n)
    assert s.reference.contains(0.5)


def test_ergodic_average_markov(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    x = mu.sample_patterns(tuple(P(h) for h in range(-400, 401)), 1, np.random.default_rng(2))[0]
    s = ergodic_average(lambda p: p[P(0)], [P(0)], x, FolnerSchedule(z1), 400, n_min=400)
    assert s.last.mid == pytest.approx(1 / (1 + ((1 + math.sqrt(5)) / 2) ** 2), abs=0.03)
