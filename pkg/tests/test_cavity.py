import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitypress import FolnerSchedule, GroupDescriptor, Pattern, full_shift, golden_mean, hardcore, zero
from cavitypress.errors import NonConvergenceError, PreconditionError
from cavitypress.gibbs_engine import (AtomicOracle, BracketOracle, MarkovOracle, PeriodicOracle, bernoulli_chain,
                                      chain_from_transition, conditional_bracket, exact_markov_1d)
from cavitypress.group_core import GroupPoint
from cavitypress.pressure_lab import (cavity_at_depth, cavity_pressure, centered_chain, decomposition_check,
                                      decomposition_sweep, entropy_decomposition, first_below, information_net,
                                      l1_defect, l1_defect_series, past_ball, smb_ratio_series, transfer_pressure_1d,
                                      variational_gap, with_partition)
from cavitypress.subshift import enumerate_patterns

from conftest import LOG_PHI


def P(*v, k=0):
    return GroupPoint(tuple(v), k)


def binary_entropy(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


@pytest.fixture(scope="module")
def product():
    """Z x Z/2 with independent golden-mean hardcore(1) layers."""
    desc = GroupDescriptor.direct_product_cyclic(1, 2)
    phi, sft = hardcore(desc, 1.0), golden_mean(desc)
    return desc, phi, sft, exact_markov_1d(phi, sft)


# -- decomposition ---------------------------------------------------------------------

def test_decomposition_golden_mean(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    for shape in ("corner", "box"):
        sched = FolnerSchedule(z1, shape)
        for n in range(1, 9 if shape == "corner" else 5):
            worst, totals = decomposition_sweep(mu, golden, sched, n)
            assert worst <= 1e-12 and totals


def test_product_oracle_is_a_product(product):
    desc, phi, sft, mu = product
    z1 = GroupDescriptor.lattice(1)
    layer = exact_markov_1d(hardcore(z1, 1.0), golden_mean(z1))
    for a, b in itertools.product(enumerate_patterns(golden_mean(z1), {P(h) for h in range(3)}), repeat=2):
        joint = Pattern(tuple((P(g.lattice[0], k=0), s) for g, s in a.items)
                        + tuple((P(g.lattice[0], k=1), s) for g, s in b.items))
        assert mu.log_cylinder(joint) == pytest.approx(layer.log_cylinder(a) + layer.log_cylinder(b), abs=1e-13)


def test_decomposition_product_partitions(product):
    desc, phi, sft, mu = product
    two = FolnerSchedule(desc, "corner")
    one = FolnerSchedule(with_partition(desc, [("k0", "k1")]), "corner")
    mu1 = MarkovOracle(mu.chain)
    assert one.group.n_blocks == 1 and two.group.n_blocks == 2
    for n in range(1, 6):
        w2, t2 = decomposition_sweep(mu, sft, two, n)
        w1, t1 = decomposition_sweep(mu1, sft, one, n)
        assert w2 <= 1e-12 and w1 <= 1e-12
        assert np.max(np.abs(np.array(t1) - np.array(t2))) <= 1e-12


def test_decomposition_uses_translates(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    sched = FolnerSchedule(z1)
    x = Pattern.from_word("0100101", start=-3)
    r = decomposition_check(mu, x, sched, 3)
    assert r.residual <= 1e-12 and r.blocks == 1


def test_decomposition_rejects_other_group(product, golden, hc1):
    mu = exact_markov_1d(hc1, golden)
    with pytest.raises(PreconditionError):
        decomposition_check(mu, lambda g: 0, FolnerSchedule(product[0]), 2)


# -- information nets -----------------------------------------------------------------------

def test_information_net_zero_point(z1, hc1, golden):
    sched = FolnerSchedule(z1)
    nu = AtomicOracle(z1, 2, 0)
    br = BracketOracle(hc1, golden, 30)
    res = information_net(br, nu, sched, 1, [(30, P(0))])
    assert res.limit.contains(LOG_PHI) and res.limit.width < 1e-6
    exact = information_net(exact_markov_1d(hc1, golden), nu, sched, 1, centered_chain(sched, 12))
    assert exact.limit.lo == pytest.approx(LOG_PHI, abs=1e-13)
    assert exact.cauchy_defect <= 1e-13


def test_information_net_full_shift(z1):
    fs = full_shift(z1)
    mu = exact_markov_1d(zero(z1), fs)
    sched = FolnerSchedule(z1)
    res = information_net(mu, PeriodicOracle(z1, 2, (3,), {P(0): 0, P(1): 1, P(2): 1}), sched, 1,
                          centered_chain(sched, 6))
    for e in res.series.entries:
        assert e.value.lo == pytest.approx(math.log(2), abs=1e-14)
    assert res.cauchy_defect <= 1e-14


def test_information_net_rejects_non_chain(z1, hc1, golden):
    sched = FolnerSchedule(z1)
    with pytest.raises(PreconditionError):
        information_net(exact_markov_1d(hc1, golden), AtomicOracle(z1, 2, 0), sched, 1, [(5, P(0)), (2, P(0))])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=4, unique=True), st.sampled_from([0.5, 1.0, 2.0]))
def test_net_bracket_width_shrinks_along_chains(ns, lam):
    z1 = GroupDescriptor.lattice(1)
    phi, sft = hardcore(z1, lam), golden_mean(z1)
    sched = FolnerSchedule(z1)
    chain = [(n, P(0)) for n in sorted(ns)]
    res = information_net(BracketOracle(phi, sft, 2), AtomicOracle(z1, 2, 0), sched, 1, chain)
    widths = [e.value.width for e in res.series.entries]
    assert all(b <= a + 1e-12 for a, b in zip(widths, widths[1:]))


# -- L1 defects ---------------------------------------------------------------------------

def test_l1_defect_core_vanishes_and_tail_decays(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    nu = AtomicOracle(z1, 2, 0)
    sched = FolnerSchedule(z1)
    prev = None
    for n in (4, 8, 16, 32):
        d = l1_defect(mu, nu, sched, 1, n, LOG_PHI)
        # the Markov property makes every term with a nonempty past exact
        assert d.core.hi <= 1e-12
        assert d.total.hi * n <= abs(-mu.log_cylinder(Pattern.from_word("0")) - LOG_PHI) + 1e-9
        if prev is not None:
            assert d.total.hi < prev
        prev = d.total.hi


def test_l1_defect_offset_tends_to_one(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    nu = AtomicOracle(z1, 2, 0)
    vals = [l1_defect(mu, nu, FolnerSchedule(z1), 1, n, LOG_PHI + 1).total.mid for n in (4, 16, 64)]
    assert abs(vals[-1] - 1) < abs(vals[0] - 1) and abs(vals[-1] - 1) < 0.01


def test_l1_defect_iff_smb_gap(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    nu = AtomicOracle(z1, 2, 0)
    sched = FolnerSchedule(z1, "corner")
    d = l1_defect_series(mu, nu, sched, 1, 40, LOG_PHI)
    smb = smb_ratio_series(mu, lambda g: 0, sched, 40, phi=hc1, pressure=LOG_PHI)
    gap = [abs(e.value.mid - dict(e.extra)["prediction"]) for e in smb.entries]
    l1 = [e.value.mid for e in d.entries]
    assert max(abs(a - b) for a, b in zip(gap, l1)) <= 1e-12
    gap_cross = next(n for n in range(1, 41) if all(g < 1e-2 for g in gap[n - 1:]))
    assert first_below(d, 1e-2, use="mid") == gap_cross
    assert l1[-1] < l1[0] / 20


def test_first_below():
    from cavitypress.pressure_lab import ConvergenceSeries
    s = ConvergenceSeries("t", "", "box")
    for n, v in enumerate([0.5, 0.05, 0.2, 0.04, 0.03], start=1):
        s.append(n, v)
    assert first_below(s, 0.1) == 4
    assert first_below(s, 0.01) is None


# -- cavity pressure ----------------------------------------------------------------------

def test_cavity_zero_point_depth30(z1, hc1, golden):
    est = cavity_pressure(hc1, golden, z1, AtomicOracle(z1, 2, 0), 30)
    assert est.interval.contains(LOG_PHI) and est.interval.width < 1e-6
    assert est.cauchy_defect < 1e-6


def test_cavity_with_nu_equal_mu(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    est = cavity_pressure(hc1, golden, z1, mu, 4, mu=mu, tol=1e-9)
    assert est.interval.contains(LOG_PHI, slack=1e-12)


def test_cavity_product_partitions_overlap(product):
    desc, phi, sft, mu = product
    nu = AtomicOracle(desc, 2, 0)
    a = cavity_pressure(phi, sft, desc, nu, 4, mu=mu, tol=1e-9).interval
    b = cavity_pressure(phi, sft, with_partition(desc, [(0, 1)]), nu, 4, mu=MarkovOracle(mu.chain), tol=1e-9).interval
    assert a.overlaps(b) and a.contains(LOG_PHI, slack=1e-12)


def test_cavity_refuses_unconverged(z1, hc1, golden):
    with pytest.raises(NonConvergenceError) as info:
        cavity_pressure(hc1, golden, z1, AtomicOracle(z1, 2, 0), 4, tol=1e-12)
    assert info.value.estimate.cauchy_defect > 1e-12


def test_cavity_sound_on_hardcore_presets(z1, golden):
    for lam in (0.5, 1.0, 3.0):
        phi = hardcore(z1, lam)
        est = cavity_pressure(phi, golden, z1, AtomicOracle(z1, 2, 0), 24, tol=1e-4)
        assert est.interval.contains(transfer_pressure_1d(phi, golden), slack=1e-12)


def test_cavity_width_controlled_by_brackets(z1, golden):
    phi = hardcore(z1, 2.0)
    depth = 6
    est = cavity_pressure(phi, golden, z1, AtomicOracle(z1, 2, 0), depth, tol=1.0)
    x_L = Pattern.from_dict({P(0): 0})
    cond = Pattern.constant(past_ball(z1, 1, depth), 0)
    b = conditional_bracket(phi, golden, x_L, cond, depth).interval
    eps, c = b.width, b.lo
    assert c > 0
    assert est.interval.width <= math.log1p(eps / c) + 1e-12


def test_cavity_thread_count_independent(product):
    desc, phi, sft, mu = product
    nu = AtomicOracle(desc, 2, 0)
    a = cavity_at_depth(phi, sft, desc, nu, 3, threads=1)
    b = cavity_at_depth(phi, sft, desc, nu, 3, threads=4)
    assert a[0] == b[0] and a[1] == b[1]


# -- entropy and the variational gap ---------------------------------------------------

def test_entropy_decomposition_markov(z1, hc1, golden):
    mu = exact_markov_1d(hc1, golden)
    h = mu.chain.entropy_rate
    assert h == pytest.approx(LOG_PHI, abs=1e-12)
    vals = [entropy_decomposition(mu, z1, d) for d in range(0, 5)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    for v in vals[1:]:
        assert v == pytest.approx(h, abs=1e-12)


def test_entropy_decomposition_iid(z1):
    nu = MarkovOracle(bernoulli_chain(z1, [0.5, 0.5]))
    for d in range(4):
        assert entropy_decomposition(nu, z1, d) == pytest.approx(math.log(2), abs=1e-12)


def test_entropy_decomposition_product_partitions(product):
    desc, phi, sft, mu = product
    one = with_partition(desc, [(0, 1)])
    for d in (2, 3):
        assert entropy_decomposition(mu, desc, d) == pytest.approx(entropy_decomposition(mu, one, d), abs=1e-10)


def test_variational_gap_examples(z1, hc1, golden):
    assert abs(variational_gap(hc1, golden, exact_markov_1d(hc1, golden)).mid) <= 1e-10
    assert variational_gap(zero(z1), golden, AtomicOracle(z1, 2, 0)).mid == pytest.approx(LOG_PHI, abs=1e-12)
    fs = full_shift(z1)
    gap = variational_gap(zero(z1), fs, MarkovOracle(bernoulli_chain(z1, [0.25, 0.75]))).mid
    assert gap == pytest.approx(math.log(2) - binary_entropy(0.75), abs=1e-12)
    assert gap == pytest.approx(0.1308, abs=5e-5)


def test_variational_inequality_on_exact_measures(z1, golden):
    for lam in (0.5, 1.0, 2.0):
        phi = hardcore(z1, lam)
        nus = [AtomicOracle(z1, 2, 0),
               PeriodicOracle(z1, 2, (2,), {P(0): 0, P(1): 1}),
               MarkovOracle(chain_from_transition(z1, 2, [[0.5, 0.5], [1.0, 0.0]])),
               MarkovOracle(chain_from_transition(z1, 2, [[0.8, 0.2], [1.0, 0.0]])),
               exact_markov_1d(hardcore(z1, 1.5), golden)]
        for nu in nus:
            assert variational_gap(phi, golden, nu).lo >= -1e-9
        assert abs(variational_gap(phi, golden, exact_markov_1d(phi, golden)).mid) <= 1e-9
