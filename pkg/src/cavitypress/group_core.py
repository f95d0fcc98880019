"""Virtually-Z^d groups G = K.H with H = Z^d lexicographically ordered.

A point g = k.h is stored as ``GroupPoint(lattice=h, coset=i)`` where ``i``
indexes the transversal label k_i (label 0 is the identity).  Multiplication
uses an extension table ``k_i k_j = k_m h_ij`` together with an integer action
``k^{-1} h k = A_k h`` describing how lattice elements move past labels.  For
direct products with a finite group every action is the identity.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

from .errors import PreconditionError, ResourceBudgetError

Lattice = tuple  # tuple[int, ...]


class GroupPoint(NamedTuple):
    lattice: tuple
    coset: int = 0


FiniteRegion = frozenset  # frozenset[GroupPoint]


def _vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _vneg(a):
    return tuple(-x for x in a)


def _matvec(m, v):
    return tuple(sum(r * x for r, x in zip(row, v)) for row in m)


def lex_negative(h: Sequence[int]) -> bool:
    """True iff ``h < 0`` in the lexicographic order (first coordinate most significant)."""
    for c in h:
        if c:
            return c < 0
    return False


@dataclass(frozen=True)
class GroupDescriptor:
    rank: int
    labels: tuple
    table: tuple  # ((i, j, m, h), ...)
    actions: tuple = ()
    partition: tuple = ()
    generators: tuple = ()
    _mul: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _plain: bool = field(default=False, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.rank < 1:
            raise PreconditionError("rank must be a positive integer")
        d = len(self.labels)
        if d < 1 or d > 8:
            raise PreconditionError("index must lie in 1..8")
        if len(set(self.labels)) != d:
            raise PreconditionError("transversal labels must be distinct")
        mul = {}
        for i, j, m, h in self.table:
            h = tuple(int(c) for c in h)
            if len(h) != self.rank:
                raise PreconditionError(f"table entry {self.labels[i]}{self.labels[j]} has wrong rank")
            mul[(i, j)] = (m, h)
        if len(mul) != d * d:
            raise PreconditionError("extension table must list every ordered pair of labels")
        ident = tuple(tuple(int(r == c) for c in range(self.rank)) for r in range(self.rank))
        actions = self.actions or tuple(ident for _ in range(d))
        if len(actions) != d or actions[0] != ident:
            raise PreconditionError("actions must have one matrix per label, identity for the unit")
        object.__setattr__(self, "actions", tuple(tuple(tuple(r) for r in a) for a in actions))
        object.__setattr__(self, "_mul", mul)
        object.__setattr__(self, "_plain", all(a == ident for a in actions))
        partition = self.partition or (tuple(range(d)),)
        partition = tuple(tuple(b) for b in partition)
        flat = [i for b in partition for i in b]
        if any(len(b) == 0 for b in partition) or sorted(flat) != list(range(d)):
            raise PreconditionError("partition blocks must be nonempty, disjoint and cover the transversal")
        object.__setattr__(self, "partition", partition)
        if not self.generators:
            gens = [GroupPoint(tuple(int(r == c) for c in range(self.rank)), 0) for r in range(self.rank)]
            gens += [GroupPoint((0,) * self.rank, i) for i in range(1, d)]
            object.__setattr__(self, "generators", tuple(gens))
        self._validate()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def lattice(cls, rank: int) -> "GroupDescriptor":
        return cls(rank=rank, labels=("e",), table=((0, 0, 0, (0,) * rank),))

    @classmethod
    def direct_product_cyclic(cls, rank: int, order: int, partition=None) -> "GroupDescriptor":
        """Z^rank x Z/order with labels k0..k{order-1}; H is central."""
        labels = tuple(f"k{i}" for i in range(order))
        table = tuple((i, j, (i + j) % order, (0,) * rank) for i in range(order) for j in range(order))
        return cls(rank=rank, labels=labels, table=table, partition=tuple(partition or ((i,) for i in range(order))))

    @classmethod
    def infinite_dihedral(cls, partition=None) -> "GroupDescriptor":
        """Z x| Z/2 with the reflection acting by h -> -h."""
        table = ((0, 0, 0, (0,)), (0, 1, 1, (0,)), (1, 0, 1, (0,)), (1, 1, 0, (0,)))
        return cls(rank=1, labels=("e", "r"), table=table, actions=(((1,),), ((-1,),)),
                   partition=tuple(partition or ((0,), (1,))))

    # -- algebra --------------------------------------------------------------
    @property
    def index(self) -> int:
        return len(self.labels)

    @property
    def identity(self) -> GroupPoint:
        return GroupPoint((0,) * self.rank, 0)

    @property
    def n_blocks(self) -> int:
        return len(self.partition)

    def point(self, lattice=0, coset=0) -> GroupPoint:
        if isinstance(lattice, int):
            lattice = (lattice,)
        lattice = tuple(int(c) for c in lattice)
        if len(lattice) != self.rank:
            raise PreconditionError(f"lattice vector {lattice} has rank {len(lattice)}, expected {self.rank}")
        if isinstance(coset, str):
            coset = self.labels.index(coset)
        return GroupPoint(lattice, coset)

    def mul(self, a: GroupPoint, b: GroupPoint) -> GroupPoint:
        m, h = self._mul[(a.coset, b.coset)]
        if self._plain:
            return GroupPoint(tuple(x + y + z for x, y, z in zip(h, a.lattice, b.lattice)), m)
        return GroupPoint(_vadd(_vadd(h, _matvec(self.actions[b.coset], a.lattice)), b.lattice), m)

    def inv(self, g: GroupPoint) -> GroupPoint:
        for j in range(self.index):
            m, h0 = self._mul[(g.coset, j)]
            if m == 0:
                # (k, a)(k_j, b) = (k_1, h0 + A_j a + b) = e
                return GroupPoint(_vneg(_vadd(h0, _matvec(self.actions[j], g.lattice))), j)
        raise PreconditionError("label without inverse")  # unreachable after validation

    def _validate(self):
        d, r = self.index, self.rank
        e = self.identity
        probes = [(0,) * r] + [tuple(int(c == k) for c in range(r)) for k in range(r)]
        probes += [tuple(-x for x in p) for p in probes[1:]]
        pts = [GroupPoint(v, i) for i in range(d) for v in probes]
        for g in pts:
            if self.mul(e, g) != g or self.mul(g, e) != g:
                raise PreconditionError("label 0 with zero lattice vector is not a two-sided unit")
        for a, b, c in itertools.product(pts, repeat=3):
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                raise PreconditionError("extension table is not associative")
        for i in range(d):
            if sum(1 for j in range(d) if self._mul[(i, j)][0] == 0) != 1:
                raise PreconditionError(f"label {self.labels[i]} has no unique inverse")
        for g in pts:
            gi = self.inv(g)
            if self.mul(g, gi) != e or self.mul(gi, g) != e:
                raise PreconditionError("inverse check failed")

    # -- set algebra ------------------------------------------------------------
    def left_mul(self, g: GroupPoint, region: Iterable[GroupPoint]) -> frozenset:
        # g t = (m, h + A_c g + t) depends on t only through its coset c and lattice part
        offs = []
        for c in range(self.index):
            m, h = self._mul[(g.coset, c)]
            a = g.lattice if self._plain else _matvec(self.actions[c], g.lattice)
            offs.append((m, _vadd(h, a)))
        out = []
        for t in region:
            m, off = offs[t.coset]
            out.append(GroupPoint(tuple(x + y for x, y in zip(off, t.lattice)), m))
        return frozenset(out)

    def right_mul(self, region: Iterable[GroupPoint], g: GroupPoint) -> frozenset:
        return frozenset(self.mul(t, g) for t in region)

    def inverse_set(self, region: Iterable[GroupPoint]) -> frozenset:
        return frozenset(self.inv(t) for t in region)

    def product_set(self, a: Iterable[GroupPoint], b: Iterable[GroupPoint]) -> frozenset:
        b = list(b)
        return frozenset(self.mul(x, y) for x in a for y in b)

    def coset_region(self, lattice_points: Iterable[Lattice], labels: Iterable[int] | None = None) -> frozenset:
        """K'.F for a set F of lattice vectors (K' defaults to the whole transversal)."""
        labels = range(self.index) if labels is None else list(labels)
        return frozenset(GroupPoint(tuple(h), i) for h in lattice_points for i in labels)

    # -- word metric ----------------------------------------------------------
    @property
    def symmetric_generators(self) -> tuple:
        gens = set(self.generators)
        gens |= {self.inv(s) for s in self.generators}
        gens.discard(self.identity)
        return tuple(sorted(gens))

    def neighbors(self, g: GroupPoint) -> list:
        return [self.mul(s, g) for s in self.symmetric_generators]

    def ball(self, radius: int, center: GroupPoint | None = None) -> frozenset:
        center = self.identity if center is None else center
        return frozenset(self.mul(w, center) for w in _ball_words(self, radius))

    def collar(self, region: Iterable[GroupPoint], radius: int) -> frozenset:
        """Points at word distance 1..radius from ``region``."""
        region = frozenset(region)
        seen = set(region)
        frontier = list(region)
        for _ in range(radius):
            nxt = []
            for g in frontier:
                for n in self.neighbors(g):
                    if n not in seen:
                        seen.add(n)
                        nxt.append(n)
            frontier = nxt
        return frozenset(seen - region)

    def word_length(self, g: GroupPoint, limit: int = 64) -> int:
        if g == self.identity:
            return 0
        seen = {self.identity}
        frontier = [self.identity]
        for dist in range(1, limit + 1):
            nxt = []
            for x in frontier:
                for s in self.symmetric_generators:
                    y = self.mul(s, x)
                    if y == g:
                        return dist
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        raise ResourceBudgetError(limit, limit, "word-length search radius")

    def distance(self, p: GroupPoint, q: GroupPoint) -> int:
        """Left-invariant Cayley distance: length of q p^{-1}."""
        return self.word_length(self.mul(q, self.inv(p)))

    def diameter(self, region: Iterable[GroupPoint]) -> int:
        pts = list(region)
        return max((self.distance(p, q) for p in pts for q in pts), default=0)

    def set_distance(self, a: Iterable[GroupPoint], b: Iterable[GroupPoint]) -> int:
        b = list(b)
        return min(self.distance(p, q) for p in a for q in b)

    def bipartite_parity(self) -> Callable[[GroupPoint], int] | None:
        """A 2-colouring of the Cayley graph when one is induced by coordinate sums."""
        def parity(g):
            return (sum(g.lattice) + g.coset) % 2
        for s in self.symmetric_generators:
            for g in self.ball(2):
                if parity(self.mul(s, g)) == parity(g):
                    return None
        return parity

    def describe(self) -> dict:
        return {
            "rank": self.rank,
            "labels": list(self.labels),
            "table": [[self.labels[i], self.labels[j], self.labels[m], list(h)] for i, j, m, h in self.table],
            "actions": [[list(r) for r in a] for a in self.actions],
            "partition": [[self.labels[i] for i in b] for b in self.partition],
            "generators": [[list(g.lattice), self.labels[g.coset]] for g in self.generators],
        }


@lru_cache(maxsize=64)
def _ball_words(desc: GroupDescriptor, radius: int) -> frozenset:
    seen = {desc.identity}
    frontier = [desc.identity]
    for _ in range(radius):
        nxt = []
        for g in frontier:
            for s in desc.symmetric_generators:
                y = desc.mul(s, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


# -- Følner schedules ---------------------------------------------------------

@lru_cache(maxsize=512)
def _shape_points(shape: str, rank: int, n: int) -> frozenset:
    if shape == "box":
        rng = range(-n, n + 1)
    elif shape == "corner":
        rng = range(0, n)
    else:
        raise PreconditionError(f"unknown Følner shape {shape!r}")
    return frozenset(GroupPoint(tuple(v), 0) for v in itertools.product(rng, repeat=rank))


@dataclass(frozen=True)
class FolnerSchedule:
    """F_n inside H and T_n = K F_n inside G.

    ``shape`` is ``"box"`` (centered [-n, n]^d), ``"corner"`` ([0, n)^d) or a
    callable returning lattice vectors for each n.
    """

    group: GroupDescriptor
    shape: object = "box"

    def F(self, n: int) -> frozenset:
        if callable(self.shape):
            return frozenset(GroupPoint(tuple(v), 0) for v in self.shape(n))
        return _shape_points(self.shape, self.group.rank, n)

    def T(self, n: int) -> frozenset:
        return _schedule_T(self, n)

    @property
    def name(self) -> str:
        return self.shape if isinstance(self.shape, str) else getattr(self.shape, "__name__", "custom")


@lru_cache(maxsize=128)
def _schedule_T(sched: FolnerSchedule, n: int) -> frozenset:
    return sched.group.coset_region(p.lattice for p in sched.F(n))


def folner_defect(sched: FolnerSchedule, n: int, g: GroupPoint) -> Fraction:
    if n < 1:
        raise PreconditionError("n must be >= 1")
    t = sched.T(n)
    return Fraction(len(sched.group.left_mul(g, t) ^ t), len(t))


def tempered_constant(sched: FolnerSchedule, N: int, regions: Callable[[int], frozenset] | None = None) -> Fraction:
    """max over 2 <= n <= N of |U_{k<n} T_k^{-1} T_n| / |T_n|."""
    if N < 2:
        raise PreconditionError("N must be >= 2")
    desc = sched.group
    regions = regions or sched.T
    best = Fraction(0)
    union = set()
    for n in range(2, N + 1):
        tn = regions(n)
        union |= desc.inverse_set(regions(n - 1))
        # union holds U_{k<n} T_k^{-1}
        prod = desc.product_set(union, tn)
        best = max(best, Fraction(len(prod), len(tn)))
    return best


def inner_core(desc: GroupDescriptor, region: Iterable[GroupPoint]) -> frozenset:
    """{h in H : K h inside region}."""
    region = frozenset(region)
    out = set()
    for t in region:
        h = GroupPoint(t.lattice, 0)
        # t = k h  with lattice part of k.h equal to h only when k is a pure label
        cand = desc.mul(desc.inv(GroupPoint((0,) * desc.rank, t.coset)), t)
        if cand.coset != 0:
            continue
        h = cand
        if all(desc.mul(GroupPoint((0,) * desc.rank, k), h) in region for k in range(desc.index)):
            out.add(h)
    return frozenset(out)


def _check_block(desc: GroupDescriptor, i: int):
    if not 1 <= i <= desc.n_blocks:
        raise PreconditionError(f"block index {i} outside 1..{desc.n_blocks}")


def block_labels(desc: GroupDescriptor, i: int) -> tuple:
    """L_i as label indices (1-based block number)."""
    _check_block(desc, i)
    return desc.partition[i - 1]


def prefix_labels(desc: GroupDescriptor, i: int) -> frozenset:
    """K_i = L_1 u ... u L_i (K_0 is empty)."""
    return frozenset(x for b in desc.partition[:i] for x in b)


def coset_past_membership(desc: GroupDescriptor, i: int, g: GroupPoint) -> bool:
    """g in G^-_i = L_i H^- u K_{i-1} H."""
    _check_block(desc, i)
    if g.coset in prefix_labels(desc, i - 1):
        return True
    return g.coset in desc.partition[i - 1] and lex_negative(g.lattice)


def block_points(desc: GroupDescriptor, i: int) -> frozenset:
    """L_i as group points (labels at the zero lattice vector)."""
    return frozenset(GroupPoint((0,) * desc.rank, k) for k in block_labels(desc, i))


def _require_core(sched: FolnerSchedule, n: int, h: GroupPoint):
    if h not in sched.F(n):
        raise PreconditionError(f"{h} is not in F_{n}")


def local_past(sched: FolnerSchedule, n: int, h: GroupPoint, i: int) -> frozenset:
    """T^-_{n,h}(i) = T_n h^{-1} intersected with G^-_i."""
    _require_core(sched, n, h)
    desc = sched.group
    shifted = desc.right_mul(sched.T(n), desc.inv(h))
    return frozenset(g for g in shifted if coset_past_membership(desc, i, g))


def shrunk_core(sched: FolnerSchedule, n: int, M: Iterable[GroupPoint]) -> frozenset:
    """F_n^M = {h in F_n : M h inside T_n}."""
    M = list(M)
    desc = sched.group
    if any(m.coset != 0 for m in M):
        raise PreconditionError("M must lie in H")
    tn = sched.T(n)
    return frozenset(h for h in sched.F(n) if all(desc.mul(m, h) in tn for m in M))


def gamma_schedule(sched: FolnerSchedule, family: Callable[[int], Iterable[GroupPoint]], n_max: int,
                   cap: int = 10_000) -> list:
    """Increasing gamma(1..n_max) with |F_n^{M_gamma(n)}|/|F_n| >= 1 - 1/gamma(n).

    Thresholds follow the construction n(1) = 1 and n(j) the least n > n(j-1)
    from which the ratio for M_j stays above 1 - 1/j (checked up to n_max).
    """
    memo = {}

    def ratio(n, j):
        if (n, j) not in memo:
            memo[n, j] = Fraction(len(shrunk_core(sched, n, family(j))), len(sched.F(n)))
        return memo[n, j]

    thresholds = [1]
    j = 1
    while True:
        j += 1
        bound = 1 - Fraction(1, j)
        n = thresholds[-1] + 1
        while True:
            if n > cap:
                raise ResourceBudgetError(n, cap, f"gamma threshold scan for j={j}")
            if ratio(n, j) >= bound and all(ratio(m, j) >= bound for m in range(n + 1, n_max + 1)):
                break
            n += 1
        if n > n_max:
            break
        thresholds.append(n)
    gamma = []
    for n in range(1, n_max + 1):
        gamma.append(max(k + 1 for k, t in enumerate(thresholds) if t <= n))
    return gamma


def directed_leq(sched: FolnerSchedule, a: tuple, b: tuple) -> bool:
    (n1, h1), (n2, h2) = a, b
    _require_core(sched, n1, h1)
    _require_core(sched, n2, h2)
    if n1 > n2:
        return False
    return all(local_past(sched, n1, h1, i) <= local_past(sched, n2, h2, i)
               for i in range(1, sched.group.n_blocks + 1))


def directed_upper_bound(sched: FolnerSchedule, a: tuple, b: tuple, n_cap: int = 200) -> tuple:
    """A common upper bound via the shrunk-core construction."""
    desc = sched.group
    (n1, h1), (n2, h2) = a, b
    M = desc.right_mul(sched.F(n1), desc.inv(h1)) | desc.right_mul(sched.F(n2), desc.inv(h2))
    for n in range(max(n1, n2), n_cap + 1):
        core = shrunk_core(sched, n, M)
        if core:
            return n, min(core)
    raise ResourceBudgetError(n_cap, n_cap, "upper-bound search")


def region_rows(desc: GroupDescriptor, region: Iterable[GroupPoint]) -> list:
    return [[desc.labels[p.coset], *p.lattice] for p in sorted(region)]


def write_region_csv(path, desc: GroupDescriptor, region: Iterable[GroupPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coset", *[f"h{j}" for j in range(desc.rank)]])
        w.writerows(region_rows(desc, region))
