import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitypress import FolnerSchedule, GroupDescriptor, Pattern, golden_mean, hardcore, ising, zero
from cavitypress.errors import InsufficientCollarError, PreconditionError
from cavitypress.group_core import GroupPoint
from cavitypress.potential import ISING, Interaction, invariance_check
from cavitypress.subshift import enumerate_patterns


def P(*v, k=0):
    return GroupPoint(tuple(v), k)


def test_norm_examples(z1):
    for lam in (0.5, 1.0, 3.0):
        assert hardcore(z1, lam).norm() == pytest.approx(abs(math.log(lam)), abs=1e-15)
    assert zero(z1).norm() == 0
    assert ising(z1, 0.7).norm() == pytest.approx(1.4)


def test_norm_restricted_to_admissible(z1):
    # a pair term whose largest value sits on the forbidden word 11
    phi = Interaction(z1, hardcore(z1, 1).alphabet, (((P(0), P(1)), [0.0, 0.5, 0.5, 9.0]),))
    assert phi.norm() == 18.0
    assert phi.norm(golden_mean(z1)) == 1.0


def test_local_energy_examples(z1):
    lam = 2.5
    phi = hardcore(z1, lam)
    assert phi.local_energy(Pattern.from_dict({P(0): 1})) == pytest.approx(math.log(lam))
    assert phi.local_energy(Pattern.from_dict({P(0): 0})) == 0
    assert hardcore(z1, 1.0).local_energy(Pattern.from_dict({P(0): 1})) == 0
    beta = 0.8
    plus = Pattern.from_word("+++", start=-1, alphabet=ISING)
    assert ising(z1, beta).local_energy(plus) == pytest.approx(beta)


def test_local_energy_underdetermined(z1):
    with pytest.raises(PreconditionError, match="does not determine"):
        ising(z1, 1.0).local_energy(Pattern.from_dict({P(0): 1}))


def test_phi_K_sums_cosets():
    prod = GroupDescriptor.direct_product_cyclic(1, 2)
    phi = hardcore(prod, 3.0)
    p = Pattern.from_dict({P(0, k=0): 1, P(0, k=1): 0})
    assert phi.coset_local_energy(p, 0) == pytest.approx(math.log(3.0))
    assert phi.coset_local_energy(p, 1) == 0
    assert phi.phi_K(p) == pytest.approx(math.log(3.0))


def test_energy_examples(z1):
    lam = 1.7
    assert hardcore(z1, lam).energy(Pattern.from_word("101")) == pytest.approx(-2 * math.log(lam))
    assert ising(z1, 0.3).energy(Pattern()) == 0
    assert ising(z1, 0.5).energy(Pattern.from_word("++-", alphabet=ISING)) == pytest.approx(0.0, abs=1e-15)


def test_boundary_energy_examples(z1, golden):
    lam = 2.0
    phi = hardcore(z1, lam)
    x = Pattern.from_dict({P(0): 1})
    assert phi.boundary_energy(x, Pattern.from_dict({P(-1): 1, P(1): 0}), golden) == math.inf
    assert phi.boundary_energy(x, Pattern.from_dict({P(-1): 0, P(1): 0}), golden) == pytest.approx(-math.log(lam))
    beta = 0.9
    xi = Pattern.from_dict({P(0): 1})
    y = Pattern.from_dict({P(-1): 1, P(1): 0})
    assert ising(z1, beta).boundary_energy(xi, y) == pytest.approx(0.0, abs=1e-15)


def test_boundary_energy_insufficient_collar(z1):
    with pytest.raises(InsufficientCollarError) as info:
        ising(z1, 1.0).boundary_energy(Pattern.from_dict({P(0): 1}), Pattern.from_dict({P(-1): 1}))
    assert info.value.required_radius == 1


def test_invariance_check_examples(z1, z2):
    assert invariance_check(hardcore(z2, 2.0), samples=100)
    assert invariance_check(ising(z1, 0.4), samples=100)
    dih = GroupDescriptor.infinite_dihedral()
    assert invariance_check(ising(dih, 0.4), samples=100)


def test_invariance_check_detects_corruption(z1):
    phi = ising(z1, 0.4)

    def corrupted(sites, x):
        v = phi.evaluate(sites, x)
        return v + 1.0 if min(sites).lattice[0] > 0 else v

    assert not invariance_check(phi, samples=100, evaluator=corrupted)


def test_shape_must_contain_identity(z1):
    with pytest.raises(PreconditionError):
        Interaction(z1, ISING, (((P(1), P(2)), [0, 0, 0, 0]),))


@pytest.mark.parametrize("make", [lambda d: hardcore(d, 2.0), lambda d: ising(d, 0.6, 0.2)])
def test_energy_bounded_by_norm(make, z2):
    phi = make(z2)
    sft = golden_mean(z2) if phi.name == "hardcore" else None
    sched = FolnerSchedule(z2, "corner")
    for n in (1, 2, 3):
        T = sched.T(n)
        pats = enumerate_patterns(sft, T) if sft else None
        if pats is None:
            rng = np.random.default_rng(n)
            pats = [Pattern(tuple((t, int(rng.integers(2))) for t in T)) for _ in range(50)]
        for p in pats:
            assert abs(phi.energy(p)) <= len(T) * phi.norm() + 1e-12


@pytest.mark.parametrize("make", [lambda d: hardcore(d, 2.0), lambda d: ising(d, 0.6)])
def test_energy_matches_local_energy_sum(make, z1):
    phi = make(z1)
    sched = FolnerSchedule(z1)
    rng = np.random.default_rng(4)
    C = 0.0
    for n in range(1, 30):
        T = sched.T(n)
        big = T | z1.collar(T, phi.range)
        x = {t: int(rng.integers(2)) for t in big}
        lhs = -math.fsum(phi._phi(x, g) for g in T)
        E = phi.energy(Pattern.from_dict({t: x[t] for t in T}))
        err = abs(lhs - E) / len(T)
        C = max(C, err * n)
    # boundary terms only: at most two half-bonds per end for nearest-neighbour models
    assert C <= 2 * phi.norm()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=3, max_size=12), st.integers(1, 10), st.floats(-2, 2))
def test_energy_additive_without_straddling(word, cut, beta):
    z1 = GroupDescriptor.lattice(1)
    phi = ising(z1, beta, 0.3)
    cut = min(cut, len(word) - 2)
    # drop site ``cut`` so no bond joins the two parts
    left = Pattern(tuple((P(j), s) for j, s in enumerate(word) if j < cut))
    right = Pattern(tuple((P(j), s) for j, s in enumerate(word) if j > cut))
    union = left.union(right)
    assert phi.energy(union) == pytest.approx(phi.energy(left) + phi.energy(right), abs=1e-12)
