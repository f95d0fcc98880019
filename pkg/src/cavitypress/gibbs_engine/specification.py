"""Partition functions, the Gibbs specification and conditional brackets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _sweep
from ..errors import InsufficientCollarError, PreconditionError, ZeroProbabilityError
from ..intervals import ProbInterval
from ..potential import Interaction, energy_array
from ..subshift import Pattern, SftSpec, pattern_array


def _logsumexp(a: np.ndarray) -> float:
    if a.size == 0:
        return -math.inf
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


def log_partition_free(phi: Interaction, sft: SftSpec, T, collar: int = 0,
                       budget: int = _sweep.DEFAULT_BUDGET) -> float:
    """log Z(T) = log sum over X_T of exp(-E(x_T)).

    With ``collar > 0`` only patterns extendable to the collar are counted.
    """
    T = frozenset(T)
    if not T:
        return 0.0
    if collar == 0:
        res = _sweep.sweep(phi.q, T, {}, sft.factors(T) + phi.factors(T), budget=budget)
        return res.log_total
    arr, sites = pattern_array(sft, T, collar, budget)
    return _logsumexp(-energy_array(phi, sites, arr))


def partition_free(phi, sft, T, collar: int = 0, budget: int = _sweep.DEFAULT_BUDGET) -> float:
    return math.exp(log_partition_free(phi, sft, T, collar, budget))


def _check_collar(phi: Interaction, sft: SftSpec, T, y: Pattern):
    need = phi.required_collar(T) | sft.group.collar(T, sft.range)
    missing = need - y.support
    if missing:
        radius = max(phi.range, sft.range)
        raise InsufficientCollarError(radius, f"boundary condition misses {len(missing)} sites, e.g. {min(missing)}")


def boundary_factors(phi: Interaction, sft: SftSpec, region, free) -> list:
    """Constraints and energy terms inside ``region`` that touch ``free``."""
    return sft.factors_meeting(region, free) + phi.factors(region, meeting=free)


def log_partition_boundary(phi: Interaction, sft: SftSpec, T, y: Pattern,
                           budget: int = _sweep.DEFAULT_BUDGET) -> float:
    """log Z(T | y); -inf when no x_T is compatible with y."""
    T = frozenset(T)
    if T & y.support:
        raise PreconditionError("boundary condition overlaps T")
    _check_collar(phi, sft, T, y)
    region = T | y.support
    res = _sweep.sweep(phi.q, T, y.as_dict(), boundary_factors(phi, sft, region, T), budget=budget)
    return res.log_total


def partition_boundary(phi, sft, T, y, budget: int = _sweep.DEFAULT_BUDGET) -> float:
    lz = log_partition_boundary(phi, sft, T, y, budget)
    return 0.0 if lz == -math.inf else math.exp(lz)


def specification_prob(phi: Interaction, sft: SftSpec, xT: Pattern, y: Pattern) -> float:
    """pi^y_T([x_T]) = exp(-E(x_T | y)) / Z(T | y)."""
    T = xT.support
    lz = log_partition_boundary(phi, sft, T, y)
    if lz == -math.inf:
        raise ZeroProbabilityError("Z(T|y) = 0: the boundary condition admits no pattern on T")
    e = phi.boundary_energy(xT, y, sft)
    if e == math.inf:
        return 0.0
    return math.exp(-e - lz)


@dataclass(frozen=True)
class Bracket:
    interval: ProbInterval
    mode: str
    radius: int
    rims: int
    skipped: int
    region_size: int

    @property
    def width(self) -> float:
        return self.interval.width


def _monotone_applicable(phi: Interaction, sft: SftSpec, M) -> bool:
    if phi.q != 2 or len(M) != 1:
        return False
    if any(len(t.shape) != 1 for t in phi.terms):
        return False
    for c in sft.constraints:
        if len(c.window) != 2 or c.forbidden != frozenset({(1, 1)}):
            return False
    return sft.group.bipartite_parity() is not None


def conditional_bracket(phi: Interaction, sft: SftSpec, x_M: Pattern, cond: Pattern, radius: int,
                        mode: str = "auto", budget: int = _sweep.DEFAULT_BUDGET) -> Bracket:
    """Enclosure of mu([x_M] | [x_F]) over Gibbs measures mu.

    The finite volume is V = M u F u ball_R(M); every boundary condition on
    the rim (the collar of V whose thickness is the interaction range) gives
    one specification value, and the bracket is their hull.  ``mode`` is
    ``"exhaustive"`` (all locally admissible rims), ``"monotone"`` (extremal
    rims of a two-symbol hardcore system on a bipartite Cayley graph) or
    ``"auto"``.
    """
    desc = sft.group
    M = x_M.support
    F = cond.support
    if not M:
        return Bracket(ProbInterval(1.0, 1.0), mode, radius, 0, 0, 0)
    if M & F:
        clash = {p for p in M & F if x_M[p] != cond[p]}
        if clash:
            return Bracket(ProbInterval(0.0, 0.0), mode, radius, 0, 0, 0)
        x_M = x_M.restrict(M - F)
        M = x_M.support
        if not M:
            return Bracket(ProbInterval(1.0, 1.0), mode, radius, 0, 0, 0)
    if radius < max(phi.range, sft.range):
        raise PreconditionError("rim radius must be at least the interaction range")
    V = set(M) | set(F)
    for m in M:
        V |= desc.ball(radius, m)
    V = frozenset(V)
    thick = max(phi.range, sft.range, 1)
    rim = desc.collar(V, thick)
    free = V - F
    if mode == "auto":
        mode = "monotone" if _monotone_applicable(phi, sft, M) else "exhaustive"
    keep_M = tuple(sorted(M))
    target = tuple(x_M[p] for p in keep_M)
    if mode == "monotone":
        if not _monotone_applicable(phi, sft, M):
            raise PreconditionError("monotone rims need a two-symbol hardcore model on a bipartite group")
        parity = desc.bipartite_parity()
        fdict = cond.as_dict()
        occupied_F = {p for p, s in fdict.items() if s == 1}
        blocked = {r for r in rim if any(n in occupied_F for n in desc.neighbors(r))}
        rims = [{r: 0 for r in rim}]
        for par in (0, 1):
            rims.append({r: int(parity(r) == par and r not in blocked) for r in rim})
        values, skipped = [], 0
        region = V | rim
        factors = boundary_factors(phi, sft, region, free)
        for omega in rims:
            fixed = dict(fdict)
            fixed.update(omega)
            res = _sweep.sweep(phi.q, free, fixed, factors, keep=keep_M, budget=budget)
            tot = res.log_total
            if tot == -math.inf:
                skipped += 1
                continue
            values.append(math.exp(res.lookup(target) - tot) if res.lookup(target) > -math.inf else 0.0)
        if not values:
            raise ZeroProbabilityError("no rim condition is compatible with the conditioning pattern")
        return Bracket(ProbInterval.from_ratio_bounds(min(values), max(values)), mode, radius,
                       len(rims), skipped, len(V))
    if mode != "exhaustive":
        raise PreconditionError(f"unknown bracket mode {mode!r}")
    rim_sites = tuple(sorted(rim))
    region = V | rim
    factors = sft.factors_meeting(region, free | rim) + phi.factors(region, meeting=free)
    res = _sweep.sweep(phi.q, free | rim, cond.as_dict(), factors, keep=rim_sites + keep_M, budget=budget)
    if res.empty:
        raise ZeroProbabilityError("no rim condition is compatible with the conditioning pattern")
    k = len(rim_sites)
    q = phi.q
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    rim_code = res.configs[:, :k].astype(np.int64) @ powers if k else np.zeros(res.configs.shape[0], np.int64)
    hit = np.all(res.configs[:, k:] == np.asarray(target, dtype=res.configs.dtype), axis=1)
    m = float(res.log_weights.max())
    w = np.exp(res.log_weights - m)
    uniq, inv = np.unique(rim_code, return_inverse=True)
    tot = np.bincount(inv, weights=w, minlength=len(uniq))
    num = np.bincount(inv, weights=np.where(hit, w, 0.0), minlength=len(uniq))
    ratios = num / tot
    return Bracket(ProbInterval.from_ratio_bounds(float(ratios.min()), float(ratios.max())), mode, radius,
                   len(uniq), 0, len(V))
