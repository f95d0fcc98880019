"""Convergence series and the estimators that produce them."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .. import _sweep
from ..errors import InvariantViolation, PreconditionError, ZeroProbabilityError
from ..gibbs_engine.specification import log_partition_free
from ..group_core import FolnerSchedule, GroupPoint
from ..intervals import Interval
from ..potential import Interaction
from ..subshift import Pattern, SftSpec


@dataclass(frozen=True)
class SeriesEntry:
    n: int
    value: Interval
    h_count: int = 0
    extra: tuple = ()


@dataclass
class ConvergenceSeries:
    estimator: str
    model_hash: str
    schedule: str
    entries: list = field(default_factory=list)
    reference: Interval | None = None

    def append(self, n: int, value, h_count: int = 0, **extra):
        if self.entries and n <= self.entries[-1].n:
            raise InvariantViolation("series indices must increase strictly")
        if not isinstance(value, Interval):
            value = Interval.point(value)
        if math.isnan(value.lo) or math.isinf(value.lo) or math.isinf(value.hi):
            raise InvariantViolation(f"non-finite series value at n={n}")
        self.entries.append(SeriesEntry(n, value, h_count, tuple(sorted(extra.items()))))

    @property
    def ns(self) -> list:
        return [e.n for e in self.entries]

    @property
    def values(self) -> list:
        return [e.value.mid for e in self.entries]

    @property
    def last(self) -> Interval:
        return self.entries[-1].value

    def __len__(self):
        return len(self.entries)

    def rows(self) -> list:
        return [[e.n, e.h_count, e.value.lo, e.value.hi, self.model_hash] for e in self.entries]

    def to_json(self) -> dict:
        return {
            "estimator": self.estimator,
            "model_hash": self.model_hash,
            "schedule": self.schedule,
            "reference": None if self.reference is None else self.reference.to_json(),
            "entries": [dict({"n": e.n, "h_count": e.h_count}, **e.value.to_json(), **dict(e.extra))
                        for e in self.entries],
        }


def model_hash(*parts) -> str:
    """Content hash of model descriptions (dicts with JSON-serialisable values)."""
    blob = json.dumps([p.describe() if hasattr(p, "describe") else p for p in parts], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def pressure_sequence(phi: Interaction, sft: SftSpec, sched: FolnerSchedule, n_max: int,
                      n_min: int = 1, budget: int = _sweep.DEFAULT_BUDGET) -> ConvergenceSeries:
    """|T_n|^{-1} log Z(T_n) for n_min <= n <= n_max, checked against log|S| + ||Phi||."""
    if n_max < n_min or n_max < 1:
        raise PreconditionError("empty schedule: n_max must be >= max(n_min, 1)")
    series = ConvergenceSeries("pressure_sequence", model_hash(sft, phi), sched.name)
    cap = math.log(phi.q) + phi.norm()
    for n in range(max(n_min, 1), n_max + 1):
        T = sched.T(n)
        v = log_partition_free(phi, sft, T, budget=budget) / len(T)
        if v > cap + 1e-12:
            raise InvariantViolation(f"pressure estimate {v} exceeds log|S| + ||Phi|| = {cap}")
        series.append(n, v, len(sched.F(n)))
    return series


def point_pattern(x, region) -> Pattern:
    """Restrict a point (callable or Pattern) to ``region``."""
    if callable(x):
        return Pattern(tuple((g, int(x(g))) for g in region))
    d = x.as_dict()
    missing = [g for g in region if g not in d]
    if missing:
        raise PreconditionError(f"point does not cover {min(missing)}")
    return Pattern(tuple((g, d[g]) for g in region))


def shifted(desc, x, h: GroupPoint):
    """The point h.x as a callable: (h.x)(g) = x(g h)."""
    if callable(x):
        return lambda g: x(desc.mul(g, h))
    d = x.as_dict()
    return lambda g: d[desc.mul(g, h)]


def ergodic_average(f, support, x, sched: FolnerSchedule, n_max: int, n_min: int = 1,
                    oracle=None) -> ConvergenceSeries:
    """|F_n|^{-1} sum over h in F_n of f(h.x), with f reading the sites in ``support``."""
    desc = sched.group
    support = tuple(sorted(support))
    series = ConvergenceSeries("ergodic_average", "", sched.name)
    cache = {}
    for n in range(n_min, n_max + 1):
        vals = []
        for h in sorted(sched.F(n)):
            if h not in cache:
                cache[h] = float(f(point_pattern(shifted(desc, x, h), support)))
            vals.append(cache[h])
        series.append(n, math.fsum(vals) / len(vals), len(vals))
    if oracle is not None:
        series.reference = oracle.expectation(f, support)
    return series


def smb_ratio_series(oracle, x, sched: FolnerSchedule, n_max: int, phi: Interaction | None = None,
                     pressure: float | None = None, n_min: int = 1) -> ConvergenceSeries:
    """-|T_n|^{-1} log nu([x_{T_n}]); with ``phi`` also the prediction P - E[phi_K]/[G:H]."""
    desc = sched.group
    series = ConvergenceSeries("smb_ratio", "", sched.name)
    phik = None
    if phi is not None:
        if pressure is None:
            raise PreconditionError("the prediction needs the pressure value")
        phik = {}
        support = tuple(sorted(phi.coset_support()))
    for n in range(n_min, n_max + 1):
        T = sched.T(n)
        lc = oracle.log_cylinder(point_pattern(x, T))
        if lc == -math.inf:
            raise ZeroProbabilityError(f"cylinder has probability zero at n={n}", n)
        extra = {}
        if phik is not None:
            vals = []
            for h in sorted(sched.F(n)):
                if h not in phik:
                    phik[h] = phi.phi_K(point_pattern(shifted(desc, x, h), support))
                vals.append(phik[h])
            pred = pressure - math.fsum(vals) / len(vals) / desc.index
            extra = {"prediction": pred}
        series.append(n, -lc / len(T), len(sched.F(n)), **extra)
    return series
