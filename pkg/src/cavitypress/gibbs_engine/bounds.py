"""Boundary-effect bounds relating cylinder probabilities to energies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..potential import Interaction
from ..subshift import SftSpec, condition_d_check, pattern_array
from .specification import log_partition_free


def boundary_energy_sup(phi: Interaction, sft: SftSpec, T) -> float:
    """sup over locally admissible z of |E(z_T | z) - E(z_T)|.

    Only translates that meet T without lying inside it contribute, so the sup
    runs over patterns on the sites those translates touch.
    """
    desc = sft.group
    T = frozenset(T)
    cross = []
    for term in phi.terms:
        for t in T:
            for m in term.shape:
                g = desc.mul(desc.inv(m), t)
                sites = tuple(desc.mul(s, g) for s in term.shape)
                if not set(sites) <= T:
                    cross.append((term, sites))
    if not cross:
        return 0.0
    uniq = {}
    for term, sites in cross:
        uniq.setdefault((id(term), frozenset(sites)), (term, sites))
    region = frozenset(s for _, sites in uniq.values() for s in sites)
    arr, order = pattern_array(sft, region, collar=max(sft.range, 1))
    pos = {s: j for j, s in enumerate(order)}
    total = np.zeros(arr.shape[0])
    q = phi.q
    for term, sites in uniq.values():
        powers = q ** np.arange(len(sites) - 1, -1, -1, dtype=np.int64)
        total += term.table[arr[:, [pos[s] for s in sites]].astype(np.int64) @ powers]
    return float(np.abs(total).max()) if total.size else 0.0


@dataclass(frozen=True)
class RnBound:
    r: float
    boundary_sites: int
    energy_sup: float
    size: int

    @property
    def per_site(self) -> float:
        return self.r / self.size


def rn_bound(phi: Interaction, sft: SftSpec, T, T_hat, check: bool = True) -> RnBound:
    """r_n = |T_hat \\ T| (log|S| + 4||Phi||) + 2 sup_z |E(z_T|z) - E(z_T)|."""
    T, T_hat = frozenset(T), frozenset(T_hat)
    if check and not condition_d_check(sft, T, T_hat, mode="auto"):
        raise PreconditionError("condition (D) fails for this pair of regions")
    sup = boundary_energy_sup(phi, sft, T)
    nb = len(T_hat - T)
    r = nb * (math.log(phi.q) + 4 * phi.norm(sft)) + 2 * sup
    return RnBound(r, nb, sup, len(T))


@dataclass(frozen=True)
class SandwichReport:
    ok: bool
    r: float
    log_ratio_min: float
    log_ratio_max: float
    cylinders: int
    smb_max: float
    smb_bound: float

    def __bool__(self):
        return self.ok


def sandwich_check(oracle, phi: Interaction, sft: SftSpec, T, T_hat) -> SandwichReport:
    """Check exp(-r) <= mu([x_T]) exp(E(x_T)) Z(T) <= exp(r) on every admissible x_T.

    Also reports the largest SMB ratio -log mu([x_T]) / |T| against
    log|S| + 2||Phi|| + r/|T|.
    """
    from ..potential import energy_array

    T = frozenset(T)
    rb = rn_bound(phi, sft, T, T_hat)
    arr, sites = pattern_array(sft, T)
    if hasattr(oracle, "log_cylinder_batch"):
        logmu = oracle.log_cylinder_batch(sites, arr)
    else:
        from ..subshift import Pattern
        logmu = np.array([oracle.log_cylinder(Pattern(tuple(zip(sites, map(int, r))))) for r in arr])
    logZ = log_partition_free(phi, sft, T)
    ratio = logmu + energy_array(phi, sites, arr) + logZ
    tol = 1e-9 * max(1.0, rb.r)
    ok = bool(np.all(ratio >= -rb.r - tol) and np.all(ratio <= rb.r + tol))
    smb = -logmu / len(T)
    bound = math.log(phi.q) + 2 * phi.norm(sft) + rb.per_site
    ok = ok and bool(np.all(smb <= bound + 1e-12))
    return SandwichReport(ok, rb.r, float(ratio.min()), float(ratio.max()), arr.shape[0],
                          float(smb.max()), bound)
