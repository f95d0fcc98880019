"""Entropy from truncated pasts and the variational gap."""

from __future__ import annotations

import math

from ..errors import PreconditionError
from ..group_core import GroupDescriptor, block_points
from ..intervals import Interval
from ..potential import Interaction
from ..subshift import SftSpec
from .cavity import past_ball


def block_entropy(nu, region) -> float:
    """Shannon entropy H_nu(alpha^region) of the marginal on a finite region."""
    integ = nu.integration(tuple(sorted(region)))
    if not integ.exact:
        raise PreconditionError("block entropy needs an exact oracle")
    terms = []
    for p, w in zip(integ.points, integ.weights):
        if w > 0:
            terms.append(-w * math.log(w))
    return math.fsum(terms)


def entropy_decomposition(nu, desc: GroupDescriptor, depth: int) -> float:
    """(1/[G:H]) sum_i H_nu(alpha^{L_i} | alpha^{F_i}) with F_i the depth-ball part of G^-_i."""
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    parts = []
    for i in range(1, desc.n_blocks + 1):
        L = block_points(desc, i)
        F = past_ball(desc, i, depth)
        parts.append(block_entropy(nu, F | L) - block_entropy(nu, F))
    return math.fsum(parts) / desc.index


def variational_gap(phi: Interaction, sft: SftSpec, nu, pressure: float | None = None,
                    rng=None, samples: int = 2000) -> Interval:
    """P(Phi) - (h(nu) + integral of phi d nu), with phi averaged over the transversal.

    The integral of the local energy is E_nu[phi_K] / [G:H].  Without an
    explicit ``pressure`` the exact one-dimensional transfer value is used.
    """
    desc = sft.group
    if pressure is None:
        from .transfer import transfer_pressure_1d
        pressure = transfer_pressure_1d(phi, sft)
    h = nu.entropy_per_site()
    support = tuple(sorted(phi.coset_support()))
    integral = nu.expectation(phi.phi_K, support, rng, samples).scale(1.0 / desc.index)
    return (Interval.point(pressure) - Interval.point(h) - integral).scale(1.0)
