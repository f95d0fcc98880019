"""Queryable stand-ins for invariant measures on a G-subshift.

Every oracle answers cylinder and conditional-cylinder queries.  Exact kinds
return point intervals; the specification bracket returns certified
enclosures; empirical samples carry a Monte-Carlo standard error.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .. import _sweep
from ..errors import PreconditionError, ResourceBudgetError, ZeroProbabilityError
from ..group_core import GroupDescriptor, GroupPoint
from ..intervals import Interval, ProbInterval
from ..potential import Interaction
from ..subshift import Pattern, SftSpec
from .markov import ColumnChain, gibbs_chain
from .specification import conditional_bracket
from .torus import Torus


@dataclass
class Integration:
    """Points with weights; ``exact`` means the weights are the measure itself."""

    points: list
    weights: np.ndarray
    exact: bool

    def integrate(self, fn) -> Interval:
        vals = [fn(p) for p in self.points]
        lo = np.array([v.lo if isinstance(v, Interval) else float(v) for v in vals])
        hi = np.array([v.hi if isinstance(v, Interval) else float(v) for v in vals])
        w = self.weights
        stderr = 0.0
        if not self.exact and len(vals) > 1:
            mids = 0.5 * (lo + hi)
            stderr = float(np.std(mids, ddof=1) / math.sqrt(len(vals)))
        return Interval(float(np.dot(w, lo)), float(np.dot(w, hi)), stderr).scale(1.0)


class MeasureOracle:
    kind = "abstract"
    exact = True
    ergodic = False

    group: GroupDescriptor
    q: int

    def log_cylinder(self, p: Pattern) -> float:
        raise NotImplementedError

    def cylinder(self, p: Pattern):
        lc = self.log_cylinder(p)
        return 0.0 if lc == -math.inf else math.exp(lc)

    def cylinder_interval(self, p: Pattern) -> ProbInterval:
        return ProbInterval.point(self.cylinder(p))

    def conditional(self, x_M: Pattern, x_F: Pattern) -> ProbInterval:
        den = self.log_cylinder(x_F)
        if den == -math.inf:
            raise ZeroProbabilityError("conditioning cylinder has probability zero")
        try:
            joint = x_M.union(x_F)
        except PreconditionError:
            return ProbInterval(0.0, 0.0)
        num = self.log_cylinder(joint)
        return ProbInterval.point(0.0 if num == -math.inf else math.exp(num - den))

    def integration(self, region, rng=None, samples: int = 2000, max_exact: int = 50_000) -> Integration:
        raise PreconditionError(f"{self.kind} oracle cannot be integrated against")

    def expectation(self, fn, region, rng=None, samples: int = 2000) -> Interval:
        return self.integration(region, rng, samples).integrate(fn)

    def entropy_per_site(self) -> float:
        raise PreconditionError(f"no entropy estimator for {self.kind} oracles")

    def to_json(self) -> dict:
        return {"kind": self.kind}


def _merge_patterns(sites, rows: np.ndarray, weights: np.ndarray):
    rows = np.asarray(rows)
    if rows.shape[0] == 0:
        return [], np.zeros(0)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    w = np.bincount(inv.reshape(-1), weights=weights, minlength=uniq.shape[0])
    pts = [Pattern(tuple(zip(sites, map(int, r)))) for r in uniq]
    return pts, w


class MarkovOracle(MeasureOracle):
    """A stationary Markov chain on columns (exact cylinders by the forward algorithm)."""

    kind = "exact_markov_1d"

    def __init__(self, chain: ColumnChain, ergodic: bool = True):
        self.chain = chain
        self.group = chain.group
        self.q = chain.q
        self.ergodic = ergodic
        self._powers = {1: chain.P}
        self._logP = None
        self._memo = {}

    def _power(self, d: int) -> np.ndarray:
        if d not in self._powers:
            half = self._power(d // 2)
            m = half @ half
            if d % 2:
                m = m @ self.chain.P
            self._powers[d] = m
        return self._powers[d]

    def _masks(self, p: Pattern) -> dict:
        masks = {}
        states = self.chain.states
        for g, s in p.items:
            h = g.lattice[0]
            m = masks.get(h)
            col = states[:, g.coset] == s
            masks[h] = col if m is None else (m & col)
        return masks

    def log_cylinder(self, p: Pattern) -> float:
        if len(p) == 0:
            return 0.0
        # stationarity: cache on the pattern shifted to start at lattice 0
        h0 = p.items[0][0].lattice[0]
        key = tuple((g.lattice[0] - h0, g.coset, s) for g, s in p.items)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._log_cylinder(p)
            if len(self._memo) > 500_000:
                self._memo.clear()
            self._memo[key] = hit
        return hit

    def _log_cylinder(self, p: Pattern) -> float:
        masks = self._masks(p)
        hs = sorted(masks)
        alpha = self.chain.pi * masks[hs[0]]
        logscale = 0.0
        prev = hs[0]
        for h in hs[1:]:
            alpha = (alpha @ self._power(h - prev)) * masks[h]
            prev = h
            s = alpha.sum()
            if s == 0:
                return -math.inf
            if s < 1e-200:
                alpha = alpha / s
                logscale += math.log(s)
        s = alpha.sum()
        return -math.inf if s <= 0 else logscale + math.log(s)

    def log_cylinder_batch(self, sites, arr: np.ndarray) -> np.ndarray:
        """log mu of many patterns on the same ``sites``."""
        sites = tuple(sites)
        arr = np.asarray(arr)
        idx = self.group.index
        hs = sorted({s.lattice[0] for s in sites})
        full = (len(sites) == idx * len(hs) and hs == list(range(hs[0], hs[0] + len(hs))))
        if not full:
            return np.array([self.log_cylinder(Pattern(tuple(zip(sites, map(int, r))))) for r in arr])
        q = self.q
        code_of_state = {}
        for j, st in enumerate(self.chain.states):
            code_of_state[int(sum(int(v) * q ** (idx - 1 - k) for k, v in enumerate(st)))] = j
        lookup = np.full(q ** idx, -1, dtype=np.int64)
        for c, j in code_of_state.items():
            lookup[c] = j
        powers = q ** np.arange(idx - 1, -1, -1, dtype=np.int64)
        cols = []
        for h in hs:
            pos = [sites.index(GroupPoint((h,), k)) for k in range(idx)]
            cols.append(lookup[arr[:, pos].astype(np.int64) @ powers])
        cols = np.stack(cols, axis=1)
        with np.errstate(divide="ignore"):
            logpi = np.log(self.chain.pi)
            logP = np.log(self.chain.P)
        bad = (cols < 0).any(axis=1)
        c = np.where(cols < 0, 0, cols)
        out = logpi[c[:, 0]]
        for j in range(1, c.shape[1]):
            out = out + logP[c[:, j - 1], c[:, j]]
        out[bad] = -np.inf
        return out

    def integration(self, region, rng=None, samples: int = 2000, max_exact: int = 50_000) -> Integration:
        region = tuple(sorted(region))
        if not region:
            return Integration([Pattern()], np.ones(1), True)
        hs = [s.lattice[0] for s in region]
        lo, hi = min(hs), max(hs)
        P, pi = self.chain.P, self.chain.pi
        seqs = np.flatnonzero(pi > 0)[:, None]
        logp = np.log(pi[seqs[:, 0]])
        exact = True
        for _ in range(hi - lo):
            nz = P[seqs[:, -1]] > 0
            rows, nxt = np.nonzero(nz)
            if rows.size > max_exact:
                exact = False
                break
            logp = logp[rows] + np.log(P[seqs[rows, -1], nxt])
            seqs = np.concatenate([seqs[rows], nxt[:, None]], axis=1)
        if exact:
            rows = self._project(seqs, region, lo)
            pts, w = _merge_patterns(region, rows, np.exp(logp))
            return Integration(pts, w / w.sum(), True)
        rng = np.random.default_rng(0) if rng is None else rng
        seqs = self.sample_states(hi - lo + 1, samples, rng)
        rows = self._project(seqs, region, lo)
        pts, w = _merge_patterns(region, rows, np.ones(samples))
        return Integration(pts, w / w.sum(), False)

    def _project(self, seqs: np.ndarray, region, lo: int) -> np.ndarray:
        st = self.chain.states
        return np.stack([st[seqs[:, s.lattice[0] - lo], s.coset] for s in region], axis=1)

    def sample_states(self, length: int, n: int, rng) -> np.ndarray:
        P, pi = self.chain.P, self.chain.pi
        cum = np.cumsum(P, axis=1)
        out = np.empty((n, length), dtype=np.int64)
        out[:, 0] = np.minimum(np.searchsorted(np.cumsum(pi), rng.random(n), side="right"), len(pi) - 1)
        for j in range(1, length):
            u = rng.random(n)
            out[:, j] = np.minimum((cum[out[:, j - 1]] <= u[:, None]).sum(axis=1), len(pi) - 1)
        return out

    def sample_patterns(self, region, n: int, rng) -> list:
        region = tuple(sorted(region))
        hs = [s.lattice[0] for s in region]
        seqs = self.sample_states(max(hs) - min(hs) + 1, n, rng)
        rows = self._project(seqs, region, min(hs))
        return [Pattern(tuple(zip(region, map(int, r)))) for r in rows]

    def entropy_per_site(self) -> float:
        return self.chain.entropy_rate / self.group.index

    def to_json(self) -> dict:
        c = self.chain
        return {
            "kind": self.kind,
            "source": c.source,
            "states": c.states.astype(int).tolist(),
            "transition": c.P.tolist(),
            "stationary": c.pi.tolist(),
            "perron_root": None if math.isnan(c.rho) else c.rho,
        }


def exact_markov_1d(phi: Interaction, sft: SftSpec) -> MarkovOracle:
    """The unique Gibbs measure of a nearest-neighbour model on a rank-one lattice."""
    return MarkovOracle(gibbs_chain(phi, sft))


class TorusOracle(MeasureOracle):
    """Boltzmann distribution on a torus, lifted to G as a periodic measure."""

    kind = "exact_torus"

    def __init__(self, phi: Interaction, sft: SftSpec, sides, max_sites: int = 20):
        self.group = sft.group
        self.q = phi.q
        self.torus = Torus(sft.group, tuple(sides))
        if self.torus.size > max_sites:
            raise ResourceBudgetError(self.torus.size, max_sites, "torus sites")
        res = _sweep.sweep(self.q, self.torus.sites, {}, self.torus.factors(phi, sft), keep=self.torus.sites,
                           order=self.torus.sites, budget=max(_sweep.DEFAULT_BUDGET, self.q ** self.torus.size))
        if res.empty:
            raise ZeroProbabilityError("no admissible torus configuration")
        self.configs = res.configs
        self.log_Z = res.log_total
        self.probs = np.exp(res.log_weights + res.log_offset - self.log_Z)

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    def _match(self, p: Pattern) -> np.ndarray:
        want = {}
        for g, s in p.items:
            j = self.torus.index[self.torus.canon(g)]
            if want.get(j, s) != s:
                return np.zeros(self.configs.shape[0], dtype=bool)
            want[j] = s
        hit = np.ones(self.configs.shape[0], dtype=bool)
        for j, s in want.items():
            hit &= self.configs[:, j] == s
        return hit

    def log_cylinder(self, p: Pattern) -> float:
        s = float(self.probs[self._match(p)].sum())
        return -math.inf if s <= 0 else math.log(s)

    def integration(self, region, rng=None, samples: int = 2000, max_exact: int = 50_000) -> Integration:
        region = tuple(sorted(region))
        rows = self.configs[:, list(self.torus.positions(region))]
        pts, w = _merge_patterns(region, rows, self.probs)
        return Integration(pts, w / w.sum(), True)

    def entropy_per_site(self) -> float:
        # the periodic lift is supported on finitely many points
        return 0.0

    def to_json(self) -> dict:
        return {"kind": self.kind, "sides": list(self.torus.sides), "log_Z": self.log_Z}


def exact_torus(phi: Interaction, sft: SftSpec, sides, max_sites: int = 20) -> TorusOracle:
    return TorusOracle(phi, sft, sides, max_sites)


class PeriodicOracle(MeasureOracle):
    """Uniform measure on the G-orbit of a periodic point."""

    kind = "periodic_orbit"

    def __init__(self, group: GroupDescriptor, q: int, sides, values: dict):
        self.group = group
        self.q = q
        self.torus = Torus(group, tuple(sides))
        base = np.empty(self.torus.size, dtype=np.uint8)
        for s in self.torus.sites:
            if s not in values:
                raise PreconditionError(f"periodic point misses the value at {s}")
            base[self.torus.index[s]] = values[s]
        maps = self.torus.translation_maps()
        self.orbit = base[maps]  # row g: g.x on torus sites
        self.ergodic = True

    def _match(self, p: Pattern) -> np.ndarray:
        hit = np.ones(self.orbit.shape[0], dtype=bool)
        for g, s in p.items:
            hit &= self.orbit[:, self.torus.index[self.torus.canon(g)]] == s
        return hit

    def log_cylinder(self, p: Pattern) -> float:
        frac = float(self._match(p).mean())
        return -math.inf if frac == 0 else math.log(frac)

    def integration(self, region, rng=None, samples: int = 2000, max_exact: int = 50_000) -> Integration:
        region = tuple(sorted(region))
        rows = self.orbit[:, list(self.torus.positions(region))]
        pts, w = _merge_patterns(region, rows, np.ones(rows.shape[0]))
        return Integration(pts, w / w.sum(), True)

    def point(self) -> dict:
        return {s: int(self.orbit[0, j]) for j, s in enumerate(self.torus.sites)}

    def entropy_per_site(self) -> float:
        return 0.0

    def to_json(self) -> dict:
        return {"kind": self.kind, "sides": list(self.torus.sides), "point": self.orbit[0].astype(int).tolist()}


class AtomicOracle(PeriodicOracle):
    """Dirac mass at the constant configuration (a G-fixed point)."""

    kind = "atomic_point"

    def __init__(self, group: GroupDescriptor, q: int, symbol: int = 0):
        super().__init__(group, q, (1,) * group.rank, {s: symbol for s in Torus(group, (1,) * group.rank).sites})
        self.symbol = symbol

    def to_json(self) -> dict:
        return {"kind": self.kind, "symbol": self.symbol}


class EmpiricalOracle(MeasureOracle):
    """Empirical measure of torus samples averaged over all torus translates."""

    kind = "empirical_samples"
    exact = False

    def __init__(self, torus: Torus, q: int, samples: np.ndarray, seed: int, sweeps: int):
        self.group = torus.group
        self.q = q
        self.torus = torus
        self.samples = np.asarray(samples, dtype=np.uint8)
        self.seed = seed
        self.sweeps = sweeps
        self._maps = torus.translation_maps()
        self.ergodic = True

    def _hits(self, p: Pattern) -> np.ndarray:
        """(samples, translates) indicator of the cylinder."""
        hit = np.ones((self.samples.shape[0], self._maps.shape[0]), dtype=bool)
        for g, s in p.items:
            j = self.torus.index[self.torus.canon(g)]
            hit &= self.samples[:, self._maps[:, j]] == s
        return hit

    def cylinder_stats(self, p: Pattern):
        per_sample = self._hits(p).mean(axis=1)
        n = len(per_sample)
        se = float(per_sample.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return float(per_sample.mean()), se

    def log_cylinder(self, p: Pattern) -> float:
        m, _ = self.cylinder_stats(p)
        return -math.inf if m == 0 else math.log(m)

    def cylinder_interval(self, p: Pattern) -> ProbInterval:
        m, se = self.cylinder_stats(p)
        return ProbInterval(m, m, se)

    def integration(self, region, rng=None, samples: int = 2000, max_exact: int = 50_000) -> Integration:
        region = tuple(sorted(region))
        pos = list(self.torus.positions(region))
        rows = self.samples[:, self._maps[:, pos]].reshape(-1, len(pos))
        pts, w = _merge_patterns(region, rows, np.ones(rows.shape[0]))
        return Integration(pts, w / w.sum(), False)

    def entropy_per_site(self, block: int = 4) -> float:
        """Plug-in conditional block entropy H(x_e | x_{-1..-block}); biased low for short runs."""
        warnings.warn("plug-in entropy of empirical samples is biased", stacklevel=2)
        if self.group.rank != 1 or self.group.index != 1:
            raise PreconditionError("plug-in entropy is implemented for Z only")
        def block_entropy(m):
            if m == 0:
                return 0.0
            region = [GroupPoint((j,), 0) for j in range(m)]
            pos = list(self.torus.positions(region))
            rows = self.samples[:, self._maps[:, pos]].reshape(-1, m)
            _, counts = np.unique(rows, axis=0, return_counts=True)
            p = counts / counts.sum()
            return float(-(p * np.log(p)).sum())
        return block_entropy(block + 1) - block_entropy(block)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# cavitypress-samples v1 seed={self.seed} sweeps={self.sweeps} "
                     f"sides={'x'.join(map(str, self.torus.sides))}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample"] + [f"{self.group.labels[s.coset]}@{','.join(map(str, s.lattice))}"
                                     for s in self.torus.sites])
            for j, row in enumerate(self.samples):
                w.writerow([j, *map(int, row)])

    @classmethod
    def from_csv(cls, path, group: GroupDescriptor, q: int) -> "EmpiricalOracle":
        with open(path, encoding="utf-8") as fh:
            head = fh.readline().split()
            meta = dict(tok.split("=", 1) for tok in head if "=" in tok)
            rows = list(csv.reader(fh))
        sides = tuple(int(s) for s in meta["sides"].split("x"))
        samples = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.uint8)
        return cls(Torus(group, sides), q, samples, int(meta["seed"]), int(meta["sweeps"]))

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "sweeps": self.sweeps,
                "sides": list(self.torus.sides), "samples": int(self.samples.shape[0])}


class BracketOracle(MeasureOracle):
    """Enclosures valid for every Gibbs measure, from specification brackets."""

    kind = "gibbs_bracket"
    exact = False

    def __init__(self, phi: Interaction, sft: SftSpec, radius: int, mode: str = "auto"):
        self.phi, self.sft = phi, sft
        self.group = sft.group
        self.q = phi.q
        self.radius = radius
        self.mode = mode

    def conditional(self, x_M: Pattern, x_F: Pattern) -> ProbInterval:
        return conditional_bracket(self.phi, self.sft, x_M, x_F, self.radius, self.mode).interval

    def cylinder_interval(self, p: Pattern) -> ProbInterval:
        lo, hi = 1.0, 1.0
        done = {}
        for g, s in p.items:
            b = self.conditional(Pattern(((g, s),)), Pattern.from_dict(done))
            lo, hi = lo * b.lo, hi * b.hi
            done[g] = s
        return ProbInterval.from_ratio_bounds(lo, hi)

    def log_cylinder(self, p: Pattern) -> float:
        raise PreconditionError("bracket oracles only return intervals; use cylinder_interval")

    def to_json(self) -> dict:
        return {"kind": self.kind, "radius": self.radius, "mode": self.mode}
