"""Information functions along coset pasts, the sequential decomposition and the
cavity pressure estimator.

For block i with labels L_i the information at a point x is
``I(L_i | A)(x) = -log mu([x_{L_i}] | [x_A])`` for a conditioning region A
inside the coset past G^-_i.  The pressure estimate averages, over nu,
``I(L_i | G^-_i) + phi_K / l`` summed over blocks and divided by [G:H].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NonConvergenceError, PreconditionError, ZeroProbabilityError
from ..gibbs_engine.oracles import BracketOracle, MeasureOracle
from ..gibbs_engine.specification import conditional_bracket
from ..group_core import (FolnerSchedule, GroupDescriptor, block_points, coset_past_membership, directed_leq,
                          gamma_schedule, local_past, shrunk_core)
from ..intervals import Interval
from ..potential import Interaction
from ..subshift import Pattern, SftSpec
from .series import ConvergenceSeries, point_pattern


def with_partition(desc: GroupDescriptor, partition) -> GroupDescriptor:
    """The same group with another coset partition (labels or indices)."""
    blocks = tuple(tuple(desc.labels.index(k) if isinstance(k, str) else int(k) for k in b) for b in partition)
    return replace(desc, partition=blocks)


def _same_group(a: GroupDescriptor, b: GroupDescriptor) -> bool:
    return (a.rank, a.labels, a.table, a.actions) == (b.rank, b.labels, b.table, b.actions)


def information(mu, x_M: Pattern, x_F: Pattern) -> Interval:
    """-log mu([x_M] | [x_F]) as an interval (a point for exact oracles)."""
    return mu.conditional(x_M, x_F).neg_log()


def past_ball(desc: GroupDescriptor, i: int, depth: int) -> frozenset:
    """Truncation of G^-_i to the word ball of radius ``depth``."""
    return frozenset(g for g in desc.ball(depth) if coset_past_membership(desc, i, g))


# -- sequential decomposition ------------------------------------------------------

@dataclass(frozen=True)
class DecompositionResult:
    residual: float
    total: float
    terms: float
    blocks: int


def _decomposition_plan(sched: FolnerSchedule, n: int) -> list:
    """(A, A u L) per block and h in F_n, each as (site, site * h) pairs in sorted order."""
    desc = sched.group
    plan = []
    for i in range(1, desc.n_blocks + 1):
        L = block_points(desc, i)
        for h in sorted(sched.F(n)):
            A = local_past(sched, n, h, i)
            pairs = lambda R: tuple((g, desc.mul(g, h)) for g in sorted(R))
            plan.append((i, h, pairs(A), pairs(A | L)))
    return plan


def decomposition_check(mu: MeasureOracle, x, sched: FolnerSchedule, n: int, plan=None) -> DecompositionResult:
    """| -log mu([x_{T_n}]) - sum_i sum_{h in F_n} I(L_i | T^-_{n,h}(i))(h.x) |.

    ``plan`` may carry a precomputed :func:`_decomposition_plan` for repeated calls.
    """
    desc = sched.group
    if not _same_group(desc, mu.group):
        raise PreconditionError("oracle and schedule live on different groups")
    T = sched.T(n)
    xp = point_pattern(x, T)
    total = -mu.log_cylinder(xp)
    if total == math.inf:
        raise ZeroProbabilityError("the cylinder on T_n has probability zero", n)
    xd = x.as_dict() if isinstance(x, Pattern) else {g: int(x(g)) for g in T}
    parts = []
    for i, h, A, AL in plan if plan is not None else _decomposition_plan(sched, n):
        num = mu.log_cylinder(Pattern(tuple((g, xd[gh]) for g, gh in AL)))
        den = mu.log_cylinder(Pattern(tuple((g, xd[gh]) for g, gh in A)))
        if den == -math.inf or num == -math.inf:
            raise ZeroProbabilityError(f"zero conditional at h={h}, block {i}", n)
        parts.append(den - num)
    terms = math.fsum(parts)
    return DecompositionResult(abs(total - terms), total, terms, desc.n_blocks)


def decomposition_sweep(mu: MeasureOracle, sft: SftSpec, sched: FolnerSchedule, n: int) -> tuple:
    """Worst residual over every locally admissible cylinder on T_n and the list of totals."""
    from ..subshift import pattern_array
    plan = _decomposition_plan(sched, n)
    arr, sites = pattern_array(sft, sched.T(n))
    worst, totals = 0.0, []
    for row in arr:
        x = Pattern(tuple(zip(sites, map(int, row))))
        if mu.log_cylinder(x) == -math.inf:
            continue
        r = decomposition_check(mu, x, sched, n, plan)
        worst = max(worst, r.residual)
        totals.append(r.terms)
    return worst, totals


# -- information nets ---------------------------------------------------------------

@dataclass
class NetResult:
    series: ConvergenceSeries
    cauchy_defect: float
    skipped: int
    limit: Interval


def _nu_average(nu: MeasureOracle, region, fn, rng=None, samples: int = 2000):
    """Average fn over nu's integration points; returns (Interval, skipped count)."""
    integ = nu.integration(region, rng, samples)
    lo, hi, mids, ws = [], [], [], []
    skipped = 0
    for p, w in zip(integ.points, integ.weights):
        try:
            v = fn(p)
        except ZeroProbabilityError:
            skipped += 1
            continue
        if isinstance(v, (int, float)):
            v = Interval.point(v)
        if math.isinf(v.hi):
            skipped += 1
            continue
        lo.append(v.lo)
        hi.append(v.hi)
        mids.append(v.mid)
        ws.append(w)
    if not ws:
        raise ZeroProbabilityError("every evaluation point has zero conditional probability")
    ws = np.asarray(ws) / np.sum(ws)
    stderr = 0.0
    if not integ.exact and len(ws) > 1:
        m = np.asarray(mids)
        stderr = float(math.sqrt(np.sum(ws * (m - np.dot(ws, m)) ** 2) / len(ws)))
    return Interval(float(np.dot(ws, lo)), float(np.dot(ws, hi)), stderr).scale(1.0), skipped


def information_net(mu, nu: MeasureOracle, sched: FolnerSchedule, i: int, chain, rng=None,
                    samples: int = 2000, tail: int | None = None) -> NetResult:
    """nu-averages of I(L_i | T^-_{n,h}(i)) along a chain of (n, h) in the directed order."""
    desc = sched.group
    chain = list(chain)
    for a, b in zip(chain, chain[1:]):
        if not directed_leq(sched, a, b):
            raise PreconditionError(f"{a} is not below {b} in the directed order")
    L = block_points(desc, i)
    series = ConvergenceSeries(f"information_net_block{i}", "", sched.name)
    skipped = 0
    for k, (n, h) in enumerate(chain):
        A = local_past(sched, n, h, i)
        def fn(p, A=A):
            return information(mu, p.restrict(L), p.restrict(A))
        val, sk = _nu_average(nu, A | L, fn, rng, samples)
        skipped += sk
        series.append(k + 1, val, len(sched.F(n)), folner_n=n, h=list(h.lattice))
    tail = max(2, len(series) // 2) if tail is None else tail
    ends = [e.value for e in series.entries[-tail:]]
    defect = max(max(abs(a.lo - b.lo), abs(a.hi - b.hi)) for a in ends for b in ends)
    return NetResult(series, defect, skipped, series.last)


def centered_chain(sched: FolnerSchedule, n_max: int, n_min: int = 1) -> list:
    """(n, e) for n_min..n_max, a chain in the directed order for nested schedules."""
    return [(n, sched.group.identity) for n in range(n_min, n_max + 1)]


# -- L1 defects -----------------------------------------------------------------------

@dataclass(frozen=True)
class L1Defect:
    total: Interval
    core: Interval
    tail: Interval
    core_size: int
    n: int


def _abs_interval(v: Interval) -> Interval:
    if v.lo >= 0:
        return v
    if v.hi <= 0:
        return -v
    return Interval(0.0, max(-v.lo, v.hi), v.stderr)


def _h_balls(desc: GroupDescriptor):
    return lambda j: frozenset(g for g in desc.ball(j) if g.coset == 0)


def l1_defect(mu, nu: MeasureOracle, sched: FolnerSchedule, i: int, n: int, f_i, core_radius: int | None = None,
              rng=None, samples: int = 500) -> L1Defect:
    """E_nu | |F_n|^{-1} sum_{h in F_n} (I(L_i | T^-_{n,h}(i)) - f_i)(h.x) |, split into core and tail.

    ``f_i`` is a number or a callable on patterns covering ``f_i.support``.
    The core is the shrunk core F_n^M for M the H-ball of ``core_radius``
    (default: the gamma schedule value at n for the family of H-balls).
    """
    desc = sched.group
    L = block_points(desc, i)
    F = sorted(sched.F(n))
    if core_radius is None:
        core_radius = gamma_schedule(sched, _h_balls(desc), n)[-1]
    M = _h_balls(desc)(core_radius)
    core = shrunk_core(sched, n, M)
    T = sched.T(n)
    f_support = tuple(sorted(getattr(f_i, "support", ())))
    pasts = {}
    for h in F:
        # pairs (g, g h) with g in T_n h^{-1} and in the coset past, read off T_n directly
        hinv = desc.inv(h)
        pasts[h] = tuple(sorted((g, t) for t in T for g in (desc.mul(t, hinv),)
                                if coset_past_membership(desc, i, g)))
    L_pairs = {h: tuple((g, desc.mul(g, h)) for g in sorted(L)) for h in F}

    def per_point(x: Pattern):
        diffs_core, diffs_tail = [], []
        xd = x.as_dict()
        for h in F:
            x_L = Pattern(tuple((g, xd[gh]) for g, gh in L_pairs[h]))
            x_A = Pattern(tuple((g, xd[gh]) for g, gh in pasts[h]))
            val = information(mu, x_L, x_A)
            if callable(f_i):
                fv = f_i(Pattern(tuple((g, xd[desc.mul(g, h)]) for g in f_support)))
            else:
                fv = float(f_i)
            (diffs_core if h in core else diffs_tail).append(val - fv)
        return diffs_core, diffs_tail

    region = set(T)
    if callable(f_i):
        for h in F:
            region |= desc.right_mul(f_support, h)
    integ = nu.integration(tuple(sorted(region)), rng, samples)
    tot_lo, tot_hi, c_lo, c_hi, t_lo, t_hi, mids = [], [], [], [], [], [], []
    for p in integ.points:
        dc, dt = per_point(p)
        s_c = sum(dc, Interval.point(0.0)).scale(1.0 / len(F))
        s_t = sum(dt, Interval.point(0.0)).scale(1.0 / len(F))
        a = _abs_interval(s_c + s_t)
        ac, at = _abs_interval(s_c), _abs_interval(s_t)
        tot_lo.append(a.lo), tot_hi.append(a.hi)
        c_lo.append(ac.lo), c_hi.append(ac.hi)
        t_lo.append(at.lo), t_hi.append(at.hi)
        mids.append(a.mid)
    w = integ.weights
    stderr = 0.0
    if not integ.exact and len(w) > 1:
        m = np.asarray(mids)
        stderr = float(math.sqrt(np.sum(w * (m - np.dot(w, m)) ** 2) / len(w)))
    mk = lambda lo, hi, se=0.0: Interval(float(np.dot(w, lo)), float(np.dot(w, hi)), se).scale(1.0)
    return L1Defect(mk(tot_lo, tot_hi, stderr), mk(c_lo, c_hi), mk(t_lo, t_hi), len(core), n)


def l1_defect_series(mu, nu: MeasureOracle, sched: FolnerSchedule, i: int, n_max: int, f_i, n_min: int = 1,
                     rng=None, samples: int = 500) -> ConvergenceSeries:
    """l1_defect for n_min..n_max with one gamma schedule; core and tail kept as extras."""
    gamma = gamma_schedule(sched, _h_balls(sched.group), n_max)
    series = ConvergenceSeries(f"l1_defect_block{i}", "", sched.name)
    for n in range(n_min, n_max + 1):
        d = l1_defect(mu, nu, sched, i, n, f_i, gamma[n - 1], rng, samples)
        series.append(n, d.total, len(sched.F(n)), core_hi=d.core.hi, tail_hi=d.tail.hi,
                      core_size=d.core_size, gamma=gamma[n - 1])
    return series


def first_below(series: ConvergenceSeries, threshold: float, use: str = "hi") -> int | None:
    """Least n from which every later entry stays below ``threshold``."""
    last = None
    for e in reversed(series.entries):
        v = e.value.hi if use == "hi" else e.value.mid
        if v >= threshold:
            break
        last = e.n
    return last


# -- cavity pressure -------------------------------------------------------------------

@dataclass
class CavityEstimate:
    interval: Interval
    blocks: list
    phi_term: Interval
    depth: int
    cauchy_defect: float
    skipped: int
    previous: Interval | None = None
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "interval": self.interval.to_json(),
            "blocks": [b.to_json() for b in self.blocks],
            "phi_term": self.phi_term.to_json(),
            "depth": self.depth,
            "cauchy_defect": self.cauchy_defect,
            "skipped": self.skipped,
            "trace": [{"depth": d, **v.to_json()} for d, v in self.trace],
        }


def _block_information(phi, sft, mu, desc, i, depth, mode, budget):
    L = block_points(desc, i)
    F = past_ball(desc, i, depth)
    if mu is None:
        def fn(p):
            return conditional_bracket(phi, sft, p.restrict(L), p.restrict(F), depth, mode, budget).interval.neg_log()
    else:
        def fn(p):
            return information(mu, p.restrict(L), p.restrict(F))
    return L | F, fn


def cavity_at_depth(phi: Interaction, sft: SftSpec, desc: GroupDescriptor, nu: MeasureOracle, depth: int,
                    mu=None, mode: str = "auto", rng_seed: int = 0, samples: int = 500, threads: int = 1,
                    budget: int | None = None):
    """(pressure interval, per-block information intervals, phi_K term, skipped)."""
    from .. import _sweep
    budget = budget or _sweep.DEFAULT_BUDGET
    if not _same_group(desc, sft.group):
        raise PreconditionError("partition descriptor and subshift live on different groups")
    ell = desc.n_blocks

    def run_block(i):
        region, fn = _block_information(phi, sft, mu, desc, i, depth, mode, budget)
        rng = np.random.default_rng([rng_seed, i, depth])
        return _nu_average(nu, region, fn, rng, samples)

    from .._parallel import ordered_map
    results = ordered_map(run_block, range(1, ell + 1), threads)
    blocks = [r[0] for r in results]
    skipped = sum(r[1] for r in results)
    support = tuple(sorted(phi.coset_support()))
    phi_term = nu.expectation(phi.phi_K, support, np.random.default_rng([rng_seed, 0, depth]), samples)
    total = sum(blocks, Interval.point(0.0)) + phi_term
    return total.scale(1.0 / desc.index), blocks, phi_term, skipped


def cavity_pressure(phi: Interaction, sft: SftSpec, desc: GroupDescriptor, nu: MeasureOracle, depth: int,
                    mu=None, tol: float = 1e-6, step: int = 2, mode: str = "auto", rng_seed: int = 0,
                    samples: int = 500, threads: int = 1, budget: int | None = None,
                    trace_from: int | None = None) -> CavityEstimate:
    """(1/[G:H]) sum_i E_nu[ I(L_i | G^-_i) + phi_K / l ] with G^-_i truncated to a ball.

    ``mu`` is an exact oracle for the Gibbs measure or None for specification
    brackets (rim at the same radius as the truncation).  The estimate is
    compared with the one at ``depth - step``; a Hausdorff distance above
    ``tol`` raises :class:`NonConvergenceError` carrying the estimate.  With
    ``trace_from`` every depth trace_from, trace_from + step, ... is kept in
    the trace.  Depths are evaluated in parallel with ``threads``.
    """
    from .._parallel import ordered_map
    if depth < 1:
        raise PreconditionError("depth must be >= 1")
    if step < 1:
        raise PreconditionError("step must be >= 1")
    if isinstance(mu, BracketOracle):
        mode = mu.mode
        mu = None
    floor = max(phi.range, sft.range, 1)
    prev_depth = depth - step
    depths = set()
    if trace_from is not None:
        depths |= set(range(depth, max(trace_from, 1) - 1, -step))
    if prev_depth >= floor:
        depths.add(prev_depth)
    depths.add(depth)
    depths = sorted(depths)
    results = ordered_map(
        lambda d: cavity_at_depth(phi, sft, desc, nu, d, mu, mode, rng_seed, samples, 1, budget), depths, threads)
    by_depth = dict(zip(depths, results))
    cur = by_depth[depth]
    prev = by_depth[prev_depth][0] if prev_depth in by_depth else None
    defect = 0.0 if prev is None else max(abs(cur[0].lo - prev.lo), abs(cur[0].hi - prev.hi))
    trace = [(d, by_depth[d][0]) for d in depths]
    est = CavityEstimate(cur[0], cur[1], cur[2], depth, defect, cur[3], prev, trace)
    if defect > tol:
        err = NonConvergenceError(f"Cauchy defect {defect:.3g} between depths {prev_depth} and {depth} "
                                  f"exceeds tolerance {tol:.3g}", defect)
        err.estimate = est
        raise err
    return est
