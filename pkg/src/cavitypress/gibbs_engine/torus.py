"""Finite quotients G / (sides . Z^d) used for torus measures and sampling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .. import _sweep
from ..errors import PreconditionError
from ..group_core import GroupDescriptor, GroupPoint


@dataclass(frozen=True)
class Torus:
    group: GroupDescriptor
    sides: tuple
    sites: tuple = field(init=False)
    index: dict = field(init=False, compare=False, hash=False, repr=False)

    def __post_init__(self):
        sides = tuple(int(s) for s in self.sides)
        if len(sides) != self.group.rank or any(s < 1 for s in sides):
            raise PreconditionError("torus needs one positive side per lattice coordinate")
        object.__setattr__(self, "sides", sides)
        sites = tuple(sorted(GroupPoint(tuple(v), k)
                             for v in itertools.product(*[range(s) for s in sides])
                             for k in range(self.group.index)))
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "index", {s: j for j, s in enumerate(sites)})

    @property
    def size(self) -> int:
        return len(self.sites)

    def canon(self, g: GroupPoint) -> GroupPoint:
        return GroupPoint(tuple(c % s for c, s in zip(g.lattice, self.sides)), g.coset)

    def _stabilizer(self, shape) -> list:
        desc = self.group
        out = []
        target = frozenset(shape)
        for m in shape:
            s = desc.mul(desc.inv(shape[0]), m)
            if frozenset(desc.mul(t, s) for t in shape) == target:
                out.append(s)
        return out

    def placed(self, shape) -> list:
        """Canonical site tuples of the translates of ``shape``, one per torus translate."""
        desc = self.group
        stab = self._stabilizer(shape)
        seen = set()
        out = []
        for g in self.sites:
            key = min(self.canon(desc.mul(s, g)) for s in stab)
            if key in seen:
                continue
            seen.add(key)
            sites = tuple(self.canon(desc.mul(m, g)) for m in shape)
            if len(set(sites)) != len(sites):
                raise PreconditionError(f"torus {self.sides} is too small for a shape of diameter {desc.diameter(shape)}")
            out.append(sites)
        return out

    def factors(self, phi, sft) -> list:
        out = []
        for c in sft.constraints:
            out += [_sweep.Factor(s, c.table, True) for s in self.placed(c.window)]
        for t in phi.terms:
            out += [_sweep.Factor(s, t.table, False) for s in self.placed(t.shape)]
        return out

    def translation_maps(self) -> np.ndarray:
        """Row g: positions p such that (g.x)[site j] = x[p[j]], for every torus translate g."""
        desc = self.group
        maps = np.empty((self.size, self.size), dtype=np.int64)
        for a, g in enumerate(self.sites):
            maps[a] = [self.index[self.canon(desc.mul(t, g))] for t in self.sites]
        return maps

    def positions(self, region) -> tuple:
        return tuple(self.index[self.canon(p)] for p in region)
