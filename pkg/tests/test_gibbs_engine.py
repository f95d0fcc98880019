import itertools
import math

import numpy as np
import pytest

from cavitypress import FolnerSchedule, Pattern, full_shift, golden_mean, hardcore, ising, no01_1d, zero
from cavitypress.errors import ReducibleError, ResourceBudgetError, ZeroProbabilityError
from cavitypress.gibbs_engine import (AtomicOracle, BracketOracle, PeriodicOracle, conditional_bracket,
                                      exact_markov_1d, exact_torus, glauber_sampler, partition_boundary,
                                      partition_free, rn_bound, sandwich_check, specification_prob)
from cavitypress.group_core import GroupPoint
from cavitypress.potential import ISING
from cavitypress.subshift import enumerate_patterns

PHI = (1 + math.sqrt(5)) / 2


def P(*v, k=0):
    return GroupPoint(tuple(v), k)


def seg(a, b):
    return frozenset(P(h) for h in range(a, b))


def brute_log_cylinder(word, offset, length, lam=1.0):
    """Windowed brute force: weight of admissible words of ``length`` carrying ``word`` at ``offset``."""
    num = den = 0.0
    for w in itertools.product((0, 1), repeat=length):
        if any(a and b for a, b in zip(w, w[1:])):
            continue
        wt = lam ** sum(w)
        den += wt
        if list(w[offset:offset + len(word)]) == list(word):
            num += wt
    return num / den


# -- partition functions and the specification ------------------------------------------

def test_partition_free_examples(z1, golden):
    for lam in (0.5, 1.0, 2.0):
        assert partition_free(hardcore(z1, lam), golden, seg(0, 2)) == pytest.approx(1 + 2 * lam)
    assert partition_free(ising(z1, 1.0), full_shift(z1), frozenset()) == 1.0
    assert partition_free(zero(z1), full_shift(z1), seg(0, 7)) == pytest.approx(2 ** 7)


def test_partition_free_upper_bound(z2):
    phi = ising(z2, 0.4, 0.1)
    sft = full_shift(z2, ISING)
    for n in (1, 2):
        T = FolnerSchedule(z2, "corner").T(n + 1)
        Z = partition_free(phi, sft, T)
        assert Z <= 2 ** len(T) * math.exp(len(T) * phi.norm())


def test_partition_boundary_examples(z1, golden):
    phi = hardcore(z1, 1.0)
    T = {P(0)}
    assert partition_boundary(phi, golden, T, Pattern.from_dict({P(-1): 0, P(1): 0})) == pytest.approx(2.0)
    assert partition_boundary(phi, golden, T, Pattern.from_dict({P(-1): 1, P(1): 0})) == pytest.approx(1.0)
    beta = 0.35
    z = partition_boundary(ising(z1, beta), full_shift(z1, ISING), T, Pattern.from_dict({P(-1): 1, P(1): 1}))
    assert z == pytest.approx(math.exp(2 * beta) + math.exp(-2 * beta))


def test_specification_prob_examples(z1, golden):
    phi = hardcore(z1, 1.0)
    free = Pattern.from_dict({P(-1): 0, P(1): 0})
    assert specification_prob(phi, golden, Pattern.from_dict({P(0): 0}), free) == pytest.approx(0.5)
    assert specification_prob(phi, golden, Pattern.from_dict({P(0): 1}), free) == pytest.approx(0.5)
    blocked = Pattern.from_dict({P(-1): 1, P(1): 0})
    assert specification_prob(phi, golden, Pattern.from_dict({P(0): 0}), blocked) == 1.0
    lam = 3.0
    p1 = specification_prob(hardcore(z1, lam), golden, Pattern.from_dict({P(0): 1}), free)
    assert p1 == pytest.approx(lam / (1 + lam))


def test_specification_sums_to_one(z1, z2):
    cases = [(hardcore(z1, 2.0), golden_mean(z1), seg(0, 3)),
             (ising(z1, 0.7, 0.2), full_shift(z1, ISING), seg(0, 3)),
             (hardcore(z2, 1.5), golden_mean(z2), frozenset({P(0, 0), P(0, 1)}))]
    rng = np.random.default_rng(0)
    for phi, sft, T in cases:
        rim = sft.group.collar(T, 1)
        for _ in range(5):
            while True:
                y = Pattern(tuple((r, int(rng.integers(2))) for r in rim))
                if partition_boundary(phi, sft, T, y) > 0:
                    break
            total = math.fsum(specification_prob(phi, sft, x, y) for x in enumerate_patterns(sft, T))
            assert total == pytest.approx(1.0, abs=1e-12)


def test_specification_zero_partition(z1):
    # 0 at -1 and 1 at +1 leave no admissible symbol at 0 when 01 is forbidden
    y = Pattern.from_dict({P(-1): 0, P(1): 1})
    with pytest.raises(ZeroProbabilityError):
        specification_prob(zero(z1), no01_1d(z1), Pattern.from_dict({P(0): 1}), y)


# -- conditional brackets -----------------------------------------------------------

def test_conditional_bracket_golden_mean(hc1, golden):
    b = conditional_bracket(hc1, golden, Pattern.from_dict({P(0): 0}), Pattern.from_dict({P(-1): 0}), 3)
    assert b.interval.contains(1 / PHI)
    assert b.width < 0.05


def test_conditional_bracket_forced(hc1, golden):
    b = conditional_bracket(hc1, golden, Pattern.from_dict({P(0): 1}), Pattern.from_dict({P(-1): 1}), 2)
    assert b.interval.lo == b.interval.hi == 0.0
    b = conditional_bracket(hc1, golden, Pattern.from_dict({P(0): 0}), Pattern.from_dict({P(1): 1}), 2)
    assert b.interval.lo == b.interval.hi == 1.0


def test_conditional_bracket_width_monotone(z2):
    phi, sft = hardcore(z2, 1.0), golden_mean(z2)
    rng = np.random.default_rng(11)
    for _ in range(50):
        s = int(rng.integers(2))
        f = P(*map(int, rng.integers(-2, 3, size=2)))
        if f == P(0, 0):
            continue
        cond = Pattern.from_dict({f: int(rng.integers(2))})
        x = Pattern.from_dict({P(0, 0): s})
        w = [conditional_bracket(phi, sft, x, cond, R, mode="monotone").width for R in (1, 3)]
        assert w[1] <= w[0] + 1e-15


def test_bracket_monotone_agrees_with_exhaustive(z1, golden, hc1):
    x = Pattern.from_dict({P(0): 1})
    cond = Pattern.from_dict({P(-2): 0})
    a = conditional_bracket(hc1, golden, x, cond, 2, mode="monotone").interval
    b = conditional_bracket(hc1, golden, x, cond, 2, mode="exhaustive").interval
    assert a.lo == pytest.approx(b.lo, abs=1e-12) and a.hi == pytest.approx(b.hi, abs=1e-12)


def test_bracket_contains_exact_markov(z1):
    rng = np.random.default_rng(5)
    for lam, sft in ((1.0, golden_mean(z1)), (2.5, golden_mean(z1))):
        phi = hardcore(z1, lam)
        mu = exact_markov_1d(phi, sft)
        done = 0
        while done < 100:
            F = sorted({int(v) for v in rng.integers(-4, 5, size=int(rng.integers(1, 4)))} - {0})
            if not F:
                continue
            cond = Pattern(tuple((P(f), int(rng.integers(2))) for f in F))
            if mu.cylinder(cond) == 0:
                continue
            x = Pattern.from_dict({P(0): int(rng.integers(2))})
            exact = mu.conditional(x, cond).lo
            br = conditional_bracket(phi, sft, x, cond, int(rng.integers(1, 4)), mode="exhaustive").interval
            assert br.contains(exact, slack=1e-12)
            done += 1


# -- exact Markov measures ----------------------------------------------------------

def test_exact_markov_golden_mean(hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    p0 = mu.cylinder(Pattern.from_word("0"))
    assert p0 == pytest.approx(PHI ** 2 / (1 + PHI ** 2), abs=1e-14)
    assert p0 + mu.cylinder(Pattern.from_word("1")) == pytest.approx(1.0, abs=1e-12)
    p00 = mu.conditional(Pattern.from_word("0", start=1), Pattern.from_word("0")).lo
    assert p00 == pytest.approx(1 / PHI, abs=1e-14)


def test_exact_markov_matches_windowed_brute_force(hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    brute = brute_log_cylinder((0, 1, 0), 5, 12)
    assert mu.cylinder(Pattern.from_word("010", start=5)) == pytest.approx(brute, abs=1e-3)


def test_exact_markov_full_support(z1):
    for lam in (0.5, 1.0, 4.0):
        mu = exact_markov_1d(hardcore(z1, lam), golden_mean(z1))
        for n in range(1, 11):
            for p in enumerate_patterns(golden_mean(z1), seg(0, n)):
                assert mu.cylinder(p) > 0


def test_exact_markov_layers_sum_to_one(z1):
    mu = exact_markov_1d(ising(z1, 0.6, 0.3), full_shift(z1, ISING))
    for n in (1, 3, 6):
        pats = enumerate_patterns(full_shift(z1, ISING), seg(2, 2 + n))
        assert math.fsum(mu.cylinder(p) for p in pats) == pytest.approx(1.0, abs=1e-12)


def test_exact_markov_shift_invariant(hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    for w in ("0100", "1010", "001"):
        a = mu.log_cylinder(Pattern.from_word(w))
        assert mu.log_cylinder(Pattern.from_word(w, start=17)) == pytest.approx(a, abs=1e-13)


def test_exact_markov_reducible(z1):
    with pytest.raises(ReducibleError):
        exact_markov_1d(zero(z1), no01_1d(z1))


def test_smb_ratio_bound(z1):
    for lam in (0.5, 3.0):
        phi, sft = hardcore(z1, lam), golden_mean(z1)
        mu = exact_markov_1d(phi, sft)
        for n in range(1, 11):
            T = seg(0, n)
            rep = sandwich_check(mu, phi, sft, T, seg(-1, n + 1))
            assert rep.ok and rep.smb_max <= rep.smb_bound


# -- tori -----------------------------------------------------------------------------

def test_exact_torus_examples(z1, hc1, golden):
    t = exact_torus(hc1, golden, (4,))
    assert t.Z == pytest.approx(7.0)
    u = exact_torus(zero(z1), full_shift(z1), (1,))
    assert u.cylinder(Pattern.from_dict({P(0): 0})) == pytest.approx(0.5)
    t6 = exact_torus(hardcore(z1, 2.0), golden, (6,))
    m = [t6.cylinder(Pattern.from_dict({P(h): 1})) for h in range(6)]
    assert max(m) - min(m) <= 1e-15


def test_exact_torus_2d_marginals(z2):
    t = exact_torus(hardcore(z2, 1.3), golden_mean(z2), (3, 4))
    m = [t.cylinder(Pattern.from_dict({P(a, b): 1})) for a in range(3) for b in range(4)]
    assert max(m) - min(m) <= 1e-14


def test_exact_torus_budget(z2):
    with pytest.raises(ResourceBudgetError):
        exact_torus(hardcore(z2, 1.0), golden_mean(z2), (5, 5))


def test_torus_dlr_consistency(z1, golden):
    phi = hardcore(z1, 1.7)
    t = exact_torus(phi, golden, (7,))
    for y in itertools.product((0, 1), repeat=2):
        cond = Pattern.from_dict({P(-1 % 7): y[0], P(1): y[1]})
        if t.cylinder(cond) == 0:
            continue
        for s in (0, 1):
            x = Pattern.from_dict({P(0): s})
            want = specification_prob(phi, golden, x, Pattern.from_dict({P(-1): y[0], P(1): y[1]}))
            assert t.conditional(x, cond).lo == pytest.approx(want, abs=1e-13)


# -- sampler ------------------------------------------------------------------------------

def test_glauber_density(hc1, golden):
    emp = glauber_sampler(hc1, golden, (64,), 10_000, seed=3)
    density = float(emp.samples.mean())
    assert abs(density - 1 / (1 + PHI ** 2)) <= 0.02


def test_glauber_zero_sweeps_and_determinism(hc1, golden):
    emp = glauber_sampler(hc1, golden, (8,), 0, seed=1)
    assert emp.samples.shape == (1, 8) and not emp.samples.any()
    a = glauber_sampler(hc1, golden, (10,), 50, seed=9).samples
    b = glauber_sampler(hc1, golden, (10,), 50, seed=9).samples
    assert np.array_equal(a, b)


def test_glauber_respects_constraints(z2):
    emp = glauber_sampler(hardcore(z2, 3.0), golden_mean(z2), (4, 4), 40, seed=2)
    grid = emp.samples.reshape(-1, 4, 4)
    assert not np.any(grid & np.roll(grid, 1, axis=1)) and not np.any(grid & np.roll(grid, 1, axis=2))


# -- point measures ------------------------------------------------------------------------

def test_atomic_and_periodic(z1):
    a = AtomicOracle(z1, 2, 0)
    assert a.cylinder(Pattern.from_word("000", start=-5)) == 1.0
    assert a.cylinder(Pattern.from_word("010")) == 0.0
    per = PeriodicOracle(z1, 2, (2,), {P(0): 0, P(1): 1})
    assert per.cylinder(Pattern.from_word("01")) == pytest.approx(0.5)
    assert per.cylinder(Pattern.from_word("0101", start=3)) == pytest.approx(0.5)


def test_bracket_oracle_cylinder_interval(hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    br = BracketOracle(hc1, golden, 4)
    p = Pattern.from_word("010")
    assert br.cylinder_interval(p).contains(mu.cylinder(p), slack=1e-12)


# -- the r_n bound -------------------------------------------------------------------------

def test_rn_bound_full_shift(z1):
    fs = full_shift(z1)
    T = seg(0, 5)
    assert rn_bound(zero(z1), fs, T, T).r == 0
    mu = exact_markov_1d(zero(z1), fs)
    rep = sandwich_check(mu, zero(z1), fs, T, T)
    assert rep.ok and rep.log_ratio_min == pytest.approx(0.0, abs=1e-12)
    assert rep.log_ratio_max == pytest.approx(0.0, abs=1e-12)


def test_rn_bound_golden_mean(hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    for n in range(1, 11):
        rb = rn_bound(hc1, golden, seg(0, n), seg(-1, n + 1))
        assert rb.r == pytest.approx(2 * math.log(2) + 2 * rb.energy_sup)
        assert sandwich_check(mu, hc1, golden, seg(0, n), seg(-1, n + 1))


def test_rn_per_site_vanishes(z2):
    phi, sft = hardcore(z2, 1.0), golden_mean(z2)
    sched = FolnerSchedule(z2, "corner")
    ratios = []
    for n in (5, 10, 20, 40):
        T = sched.T(n)
        T_hat = T | z2.collar(T, 1)
        ratios.append(rn_bound(phi, sft, T, T_hat, check=False).per_site)
    assert ratios == sorted(ratios, reverse=True) and ratios[-1] < 0.1
