"""Finite-range, translation-invariant potentials.

An :class:`Interaction` lists shapes ``M`` (each containing the identity) with
a value table over symbol assignments on ``M``.  The full potential is the
translation closure ``Phi(M g, x) = Phi(M, g.x)``, and every set is counted
once even when a shape is mapped onto itself by some translate.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import _sweep
from .errors import InsufficientCollarError, PreconditionError
from .group_core import GroupDescriptor, GroupPoint
from .subshift import Alphabet, BINARY, Pattern, SftSpec, _code, placements, translate


@dataclass(frozen=True)
class Term:
    shape: tuple
    table: np.ndarray = field(compare=False, hash=False, repr=False)
    key: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class Interaction:
    group: GroupDescriptor
    alphabet: Alphabet
    terms: tuple = ()
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        q = self.alphabet.size
        e = self.group.identity
        terms = []
        seen = set()
        for t in self.terms:
            shape, table = (t.shape, t.table) if isinstance(t, Term) else t
            shape = tuple(GroupPoint(*p) for p in shape)
            if e not in shape:
                raise PreconditionError("every interaction shape must contain the identity")
            if len(set(shape)) != len(shape):
                raise PreconditionError("interaction shape repeats a site")
            table = np.asarray(table, dtype=float).reshape(-1)
            if table.shape[0] != q ** len(shape):
                raise PreconditionError(f"table for shape {shape} needs {q ** len(shape)} entries")
            if not np.all(np.isfinite(table)):
                raise PreconditionError("interaction values must be finite")
            anchored = self._anchor_sets(shape)
            if anchored & seen:
                raise PreconditionError("two interaction shapes are translates of each other")
            seen |= anchored
            self._check_stabilizer(shape, table, q)
            key = (tuple(shape), tuple(table.tolist()))
            terms.append(Term(shape, table, key))
        object.__setattr__(self, "terms", tuple(terms))

    def __hash__(self):
        return hash((self.group, self.alphabet, tuple(t.key for t in self.terms)))

    def __eq__(self, other):
        return (isinstance(other, Interaction) and self.group == other.group
                and self.alphabet == other.alphabet
                and tuple(t.key for t in self.terms) == tuple(t.key for t in other.terms))

    def _anchor_sets(self, shape) -> set:
        return {frozenset(self.group.right_mul(shape, self.group.inv(m))) for m in shape}

    def _check_stabilizer(self, shape, table, q):
        """A translate mapping the shape onto itself must leave the table invariant."""
        desc = self.group
        for m in shape[1:]:
            g = desc.inv(m)
            moved = tuple(desc.mul(t, g) for t in shape)  # shape . m^{-1}
            if frozenset(moved) != frozenset(shape):
                continue
            perm = [shape.index(s) for s in moved]
            for assign in itertools.product(range(q), repeat=len(shape)):
                # Phi(M m^{-1}, x) evaluated two ways must agree
                a = table[_code(assign, q)]
                b = table[_code([assign[perm[j]] for j in range(len(shape))], q)]
                if a != b:
                    raise PreconditionError("shape is invariant under a translate but its table is not")

    # -- geometry ---------------------------------------------------------------
    @property
    def q(self) -> int:
        return self.alphabet.size

    @property
    def range(self) -> int:
        return max((self.group.diameter(t.shape) for t in self.terms), default=0)

    def anchored(self) -> list:
        """(term, ordered sites of M m^{-1}) for every distinct set containing e."""
        desc = self.group
        out = []
        for term in self.terms:
            got = set()
            for m in term.shape:
                mi = desc.inv(m)
                sites = tuple(desc.mul(t, mi) for t in term.shape)
                key = frozenset(sites)
                if key in got:
                    continue
                got.add(key)
                out.append((term, sites))
        return out

    def anchored_support(self) -> frozenset:
        return frozenset(s for _, sites in self.anchored() for s in sites) | {self.group.identity}

    def coset_support(self) -> frozenset:
        """Sites read by phi_K = sum_i phi(k_i . x)."""
        desc = self.group
        base = self.anchored_support()
        return frozenset(desc.mul(s, desc.point((0,) * desc.rank, i)) for s in base for i in range(desc.index))

    def placed_terms(self, region) -> list:
        """(term, sites) for every translate M g inside ``region``."""
        out = []
        for term in self.terms:
            for sites in placements(self.group, term.shape, region):
                out.append((term, sites))
        return out

    def factors(self, region, meeting=None) -> list:
        meeting = None if meeting is None else frozenset(meeting)
        out = []
        for term, sites in self.placed_terms(region):
            if meeting is None or meeting.intersection(sites):
                out.append(_sweep.Factor(sites, term.table, False))
        return out

    # -- scalar functionals -----------------------------------------------------
    def norm(self, sft: SftSpec | None = None) -> float:
        """sum over sets M containing e of sup |Phi(M, .)|.

        With ``sft`` the sup only ranges over locally admissible assignments.
        """
        total = []
        for term, sites in self.anchored():
            vals = np.abs(term.table)
            if sft is not None and len(vals):
                ok = np.array([_admissible_on(sft, sites, a)
                               for a in itertools.product(range(self.q), repeat=len(sites))])
                vals = vals[ok] if ok.any() else np.zeros(1)
            total.append(float(vals.max()) if len(vals) else 0.0)
        return math.fsum(total)

    def local_energy(self, p: Pattern) -> float:
        """phi(x) = -sum_{M containing e} |M|^{-1} Phi(M, x)."""
        return self._phi(p.as_dict(), self.group.identity)

    def coset_local_energy(self, p: Pattern, i: int) -> float:
        """phi_i(x) = phi(k_i . x) for the 0-based transversal index ``i``."""
        return self._phi(p.as_dict(), self.group.point((0,) * self.group.rank, i))

    def phi_K(self, p: Pattern) -> float:
        d = p.as_dict()
        return math.fsum(self._phi(d, self.group.point((0,) * self.group.rank, i)) for i in range(self.group.index))

    def _phi(self, d: dict, k: GroupPoint) -> float:
        desc = self.group
        parts = []
        for term, sites in self.anchored():
            # (k.x)(s) = x(s k)
            moved = [desc.mul(s, k) for s in sites]
            missing = [s for s in moved if s not in d]
            if missing:
                raise PreconditionError(f"pattern does not determine x at {sorted(missing)}")
            parts.append(term.table[_code((d[s] for s in moved), self.q)] / len(sites))
        return -math.fsum(parts)

    def energy(self, p: Pattern) -> float:
        """E(x_T): sum over translates M g inside the support."""
        d = p.as_dict()
        return math.fsum(term.table[_code((d[s] for s in sites), self.q)]
                         for term, sites in self.placed_terms(d.keys()))

    def required_collar(self, T) -> frozenset:
        """Sites outside T touched by some translate meeting T."""
        desc = self.group
        T = frozenset(T)
        need = set()
        for term in self.terms:
            for t in T:
                for m in term.shape:
                    g = desc.mul(desc.inv(m), t)
                    need.update(desc.mul(s, g) for s in term.shape)
        return frozenset(need - T)

    def boundary_energy(self, p: Pattern, y: Pattern, sft: SftSpec | None = None) -> float:
        """E(x_T | y): translates meeting T; +inf when x_T y is locally inadmissible."""
        T = p.support
        joint = p.union(y)
        d = joint.as_dict()
        if sft is not None:
            # a violation seen on the given sites is final whatever the rest is
            for f in sft.factors_meeting(d.keys(), T):
                if f.table[_code((d[s] for s in f.sites), self.q)]:
                    return math.inf
        need = self.required_collar(T)
        if sft is not None:
            need = need | sft.group.collar(T, sft.range)
        missing = need - d.keys()
        if missing:
            radius = max(self.range, sft.range if sft else 0)
            raise InsufficientCollarError(radius, f"boundary pattern misses {len(missing)} sites, e.g. {min(missing)}")
        return math.fsum(term.table[_code((d[s] for s in sites), self.q)]
                         for term, sites in self.placed_terms(d.keys()) if T.intersection(sites))

    def evaluate(self, sites, x: dict) -> float:
        """Phi(A, x) for a set A given as ordered sites (0 if A is no translate of a shape)."""
        desc = self.group
        A = frozenset(sites)
        for term in self.terms:
            first_inv = desc.inv(term.shape[0])
            for a in A:
                g = desc.mul(first_inv, a)
                placed = tuple(desc.mul(m, g) for m in term.shape)
                if frozenset(placed) == A:
                    return float(term.table[_code((x[s] for s in placed), self.q)])
        return 0.0

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": dict(self.params),
            "terms": [{"shape": [[self.group.labels[p.coset], *p.lattice] for p in t.shape],
                       "table": [float(v) for v in t.table]} for t in self.terms],
        }


def _admissible_on(sft: SftSpec, sites, assign) -> bool:
    d = dict(zip(sites, assign))
    for f in sft.factors(d.keys()):
        if f.table[_code((d[s] for s in f.sites), sft.alphabet.size)]:
            return False
    return True


def energy_array(phi: Interaction, sites, arr: np.ndarray, meeting=None) -> np.ndarray:
    """Energies of many patterns at once: rows of ``arr`` are assignments on ``sites``."""
    pos = {s: j for j, s in enumerate(sites)}
    out = np.zeros(arr.shape[0])
    for f in phi.factors(pos.keys(), meeting):
        powers = phi.q ** np.arange(len(f.sites) - 1, -1, -1, dtype=np.int64)
        out += f.table[arr[:, [pos[s] for s in f.sites]].astype(np.int64) @ powers]
    return out


def zero(group: GroupDescriptor, alphabet: Alphabet = BINARY) -> Interaction:
    return Interaction(group, alphabet, (), "zero")


def hardcore(group: GroupDescriptor, lam: float) -> Interaction:
    """Single-site activity: Phi({e}, x) = -log(lam) when x(e) = 1."""
    if not lam > 0:
        raise PreconditionError("activity must be positive")
    table = np.array([0.0, -math.log(lam)])
    return Interaction(group, BINARY, (((group.identity,), table),), "hardcore", (("lambda", float(lam)),))


ISING = Alphabet(("-", "+"))


def ising(group: GroupDescriptor, beta: float, field_: float = 0.0) -> Interaction:
    """Nearest-neighbour Ising along the lattice generators: -beta s s' and -h s."""
    spins = (-1.0, 1.0)
    e = group.identity
    terms = []
    for s in group.generators:
        if s.coset != 0:
            continue
        terms.append(((e, s), np.array([-beta * a * b for a in spins for b in spins])))
    if field_:
        terms.append(((e,), np.array([-field_ * a for a in spins])))
    return Interaction(group, ISING, tuple(terms), "ising", (("beta", float(beta)), ("field", float(field_))))


def invariance_check(phi: Interaction, samples: int = 100, seed: int = 0, evaluator=None, radius: int = 3) -> bool:
    """Phi(M g, x) == Phi(M, g.x) on random translates and configurations."""
    desc = phi.group
    rng = random.Random(seed)
    ev = evaluator or phi.evaluate
    ball = sorted(desc.ball(radius))
    if not phi.terms:
        return True
    for _ in range(samples):
        term = rng.choice(phi.terms)
        g = rng.choice(ball)
        placed = tuple(desc.mul(m, g) for m in term.shape)
        x = Pattern(tuple((s, rng.randrange(phi.q)) for s in placed))
        gx = translate(desc, x, g).as_dict()
        if ev(placed, x.as_dict()) != ev(term.shape, gx):
            return False
    return True
