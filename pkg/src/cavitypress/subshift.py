"""Alphabets, patterns and shifts of finite type on a group G.

Symbols are stored as integer indices into an :class:`Alphabet`.  The shift
acts by ``(g.x)(h) = x(hg)``, so a window ``M`` sits at ``M g`` and a pattern
on ``T`` translates to a pattern on ``T g^{-1}``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from . import _sweep
from .errors import PreconditionError, ResourceBudgetError
from .group_core import GroupDescriptor, GroupPoint


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        if not self.symbols:
            raise PreconditionError("alphabet must be nonempty")
        if len(set(self.symbols)) != len(self.symbols):
            raise PreconditionError("alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        if isinstance(symbol, (int, np.integer)) and not isinstance(symbol, bool):
            if 0 <= symbol < self.size:
                return int(symbol)
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise PreconditionError(f"unknown symbol {symbol!r}") from None


BINARY = Alphabet(("0", "1"))


@dataclass(frozen=True)
class Pattern:
    """A finitely supported assignment, stored as sorted (point, symbol) pairs."""

    items: tuple = ()

    def __post_init__(self):
        items = tuple(sorted((GroupPoint(*p), int(s)) for p, s in self.items))
        pts = [p for p, _ in items]
        if len(set(pts)) != len(pts):
            raise PreconditionError("pattern assigns a site twice")
        object.__setattr__(self, "items", items)

    @classmethod
    def from_dict(cls, mapping) -> "Pattern":
        return cls(tuple(mapping.items()))

    @classmethod
    def from_word(cls, word, start: int = 0, alphabet: Alphabet = BINARY, coset: int = 0) -> "Pattern":
        """A pattern on consecutive sites of a rank-one lattice."""
        return cls(tuple((GroupPoint((start + j,), coset), alphabet.index(c)) for j, c in enumerate(word)))

    @classmethod
    def constant(cls, region, symbol: int = 0) -> "Pattern":
        return cls(tuple((p, symbol) for p in region))

    @property
    def support(self) -> frozenset:
        return frozenset(p for p, _ in self.items)

    def as_dict(self) -> dict:
        return dict(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, point):
        for p, s in self.items:
            if p == point:
                return s
        raise KeyError(point)

    def values(self, sites) -> tuple:
        d = self.as_dict()
        return tuple(d[s] for s in sites)

    def restrict(self, region) -> "Pattern":
        region = frozenset(region)
        return Pattern(tuple((p, s) for p, s in self.items if p in region))

    def union(self, other: "Pattern") -> "Pattern":
        d = self.as_dict()
        for p, s in other.items:
            if d.get(p, s) != s:
                raise PreconditionError(f"patterns disagree at {p}")
            d[p] = s
        return Pattern.from_dict(d)

    def word(self, alphabet: Alphabet = BINARY) -> str:
        return "".join(alphabet.symbols[s] for _, s in self.items)


def translate(desc: GroupDescriptor, p: Pattern, g: GroupPoint) -> Pattern:
    """g.p: the value at t moves to t g^{-1}."""
    gi = desc.inv(g)
    return Pattern(tuple((desc.mul(t, gi), s) for t, s in p.items))


def placements(desc: GroupDescriptor, shape, region) -> list:
    """Distinct translates ``shape . g`` contained in ``region`` (as ordered site tuples)."""
    shape = tuple(shape)
    region = frozenset(region)
    if not shape:
        return []
    first_inv = desc.inv(shape[0])
    out = {}
    for v in sorted(region):
        g = desc.mul(first_inv, v)
        sites = tuple(desc.mul(m, g) for m in shape)
        if all(s in region for s in sites):
            out.setdefault(frozenset(sites), sites)
    return [out[k] for k in sorted(out, key=lambda k: out[k])]


def shape_range(desc: GroupDescriptor, shape) -> int:
    """Largest word distance between two points of a shape."""
    return desc.diameter(shape)


@dataclass(frozen=True)
class Constraint:
    """Forbidden assignments on one window (symbol tuples aligned with ``window``)."""

    window: tuple
    forbidden: frozenset
    table: np.ndarray = field(default=None, compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class SftSpec:
    """A shift of finite type given by forbidden window assignments.

    Several constraints may be listed; ``window``/``forbidden`` expose their
    merge onto the union window.  Finite regions are checked constraint by
    constraint so that windows poking out of a region do not hide violations
    of their sub-windows.
    """

    group: GroupDescriptor
    alphabet: Alphabet
    constraints: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        q = self.alphabet.size
        cons = []
        for c in self.constraints:
            window, forbidden = (c.window, c.forbidden) if isinstance(c, Constraint) else c
            window = tuple(GroupPoint(*p) for p in window)
            if len(set(window)) != len(window):
                raise PreconditionError("constraint window repeats a site")
            forb = frozenset(tuple(int(v) for v in f) for f in forbidden)
            if not forb:
                continue
            for f in forb:
                if len(f) != len(window) or any(not 0 <= v < q for v in f):
                    raise PreconditionError(f"forbidden pattern {f} does not fit the window")
            table = np.zeros(q ** len(window), dtype=bool)
            for f in forb:
                table[_code(f, q)] = True
            cons.append(Constraint(window, forb, table))
        object.__setattr__(self, "constraints", tuple(cons))

    @classmethod
    def single(cls, group, alphabet, window, forbidden, name="custom") -> "SftSpec":
        return cls(group, alphabet, ((tuple(window), frozenset(forbidden)),), name)

    @property
    def window(self) -> tuple:
        return tuple(sorted({p for c in self.constraints for p in c.window}))

    @property
    def forbidden(self) -> frozenset:
        """Forbidden assignments on the union window."""
        window = self.window
        q = self.alphabet.size
        if q ** len(window) > 1 << 20:
            raise ResourceBudgetError(q ** len(window), 1 << 20, "window assignments")
        pos = {p: j for j, p in enumerate(window)}
        out = set()
        for assign in itertools.product(range(q), repeat=len(window)):
            if any(c.table[_code((assign[pos[p]] for p in c.window), q)] for c in self.constraints):
                out.add(assign)
        return frozenset(out)

    @property
    def range(self) -> int:
        return max((shape_range(self.group, c.window) for c in self.constraints), default=0)

    def factors(self, region) -> list:
        out = []
        for c in self.constraints:
            out += [_sweep.Factor(s, c.table, True) for s in placements(self.group, c.window, region)]
        return out

    def factors_meeting(self, region, free) -> list:
        free = frozenset(free)
        return [f for f in self.factors(region) if free.intersection(f.sites)]

    def describe(self) -> dict:
        syms = self.alphabet.symbols
        return {
            "name": self.name,
            "alphabet": list(syms),
            "constraints": [
                {"window": [[self.group.labels[p.coset], *p.lattice] for p in c.window],
                 "forbidden": sorted("".join(syms[v] for v in f) for f in c.forbidden)}
                for c in self.constraints
            ],
        }


def _code(values, q: int) -> int:
    c = 0
    for v in values:
        c = c * q + int(v)
    return c


def full_shift(group: GroupDescriptor, alphabet: Alphabet = BINARY) -> SftSpec:
    return SftSpec(group, alphabet, (), "full")


def golden_mean(group: GroupDescriptor, along: str = "lattice") -> SftSpec:
    """No two 1s adjacent along the lattice generators (or along every generator)."""
    e = group.identity
    if along == "lattice":
        gens = [g for g in group.generators if g.coset == 0]
    elif along == "all":
        gens = list(group.generators)
    else:
        raise PreconditionError(f"unknown adjacency {along!r}")
    return SftSpec(group, BINARY, tuple(((e, s), {(1, 1)}) for s in gens), "golden_mean")


def no01_1d(group: GroupDescriptor) -> SftSpec:
    if group.rank != 1 or group.index != 1:
        raise PreconditionError("no01_1d lives on Z")
    return SftSpec.single(group, BINARY, (group.point(0), group.point(1)), {(0, 1)}, "no01_1d")


def locally_admissible(sft: SftSpec, p: Pattern) -> bool:
    d = p.as_dict()
    for f in sft.factors(d.keys()):
        if f.table[_code((d[s] for s in f.sites), sft.alphabet.size)]:
            return False
    return True


def enumerate_patterns(sft: SftSpec, T, collar: int = 0, budget: int = _sweep.DEFAULT_BUDGET) -> list:
    """Locally admissible patterns on T that extend to the ``collar``-neighbourhood.

    Lexicographic order over sorted support.
    """
    if collar < 0:
        raise PreconditionError("collar radius must be >= 0")
    T = frozenset(T)
    if not T:
        return [Pattern()]
    arr, sites = pattern_array(sft, T, collar, budget)
    return [Pattern(tuple(zip(sites, row))) for row in arr.tolist()]


def pattern_array(sft: SftSpec, T, collar: int = 0, budget: int = _sweep.DEFAULT_BUDGET):
    """Same as :func:`enumerate_patterns` as a (count, |T|) array plus its site order."""
    T = frozenset(T)
    sites = tuple(sorted(T))
    region = T | sft.group.collar(T, collar) if collar else T
    res = _sweep.sweep(sft.alphabet.size, region, {}, sft.factors(region), keep=sites, budget=budget)
    arr = res.configs.astype(np.int64)
    if arr.shape[0]:
        powers = sft.alphabet.size ** np.arange(arr.shape[1] - 1, -1, -1, dtype=np.int64)
        arr = arr[np.argsort(arr @ powers, kind="stable")] if arr.shape[1] < 40 else arr[np.lexsort(arr.T[::-1])]
    return arr, sites


def count_patterns(sft: SftSpec, T, collar: int = 0, budget: int = _sweep.DEFAULT_BUDGET) -> int:
    return pattern_array(sft, T, collar, budget)[0].shape[0]


def safe_symbol(sft: SftSpec):
    """A symbol that may overwrite any single coordinate without creating a forbidden window."""
    q = sft.alphabet.size
    for s in range(q):
        if all(_safe_in(c, s, q) for c in sft.constraints):
            return s
    return None


def _safe_in(c: Constraint, s: int, q: int) -> bool:
    k = len(c.window)
    for assign in itertools.product(range(q), repeat=k):
        if c.table[_code(assign, q)]:
            continue
        for j in range(k):
            if c.table[_code(assign[:j] + (s,) + assign[j + 1:], q)]:
                return False
    return True


@dataclass(frozen=True)
class GluingResult:
    ok: bool
    witness: tuple | None = None
    checked: int = 0
    collar: int = 0
    note: str = ""

    def __bool__(self):
        return self.ok


def _box_pieces(desc: GroupDescriptor, max_side: int) -> list:
    pieces = []
    for side in range(1, max_side + 1):
        for dims in itertools.product(range(1, side + 1), repeat=desc.rank):
            if max(dims) != side:
                continue
            pts = itertools.product(*[range(a) for a in dims])
            pieces.append(desc.coset_region(pts))
    return pieces


def window_diameter(sft: SftSpec) -> int:
    """Largest word-metric diameter of a constraint window."""
    return max((sft.group.diameter(c.window) for c in sft.constraints), default=0)


def tssm_gap_check(sft: SftSpec, gap: int, max_side: int = 3, reach: int | None = None,
                   collar: int | None = None, budget: int = 200_000, mode: str = "auto") -> GluingResult:
    """Finite-scale gap-gluing certificate.

    Pieces are lattice boxes of side <= ``max_side`` (full transversal over
    each lattice point).  One piece is anchored at the origin; the other ranges
    over translates whose distance from it is between ``gap`` and ``reach``.
    Extendability is judged on a ``collar``-neighbourhood.

    In ``auto`` mode a safe symbol together with ``gap`` larger than every
    window diameter settles the question without enumeration: filling
    everything outside the two pieces with the safe symbol keeps both
    extensions admissible and no window reaches across the gap.
    """
    if gap < 0:
        raise PreconditionError("gap must be >= 0")
    if mode not in ("auto", "exhaustive"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if mode == "auto" and safe_symbol(sft) is not None and gap > window_diameter(sft):
        return GluingResult(True, None, 0, 0, "safe-symbol filling")
    desc = sft.group
    collar = sft.range if collar is None else collar
    reach = gap + max_side + 1 if reach is None else reach
    pieces = _box_pieces(desc, max_side)
    area = desc.ball(reach + max_side * desc.rank + 1)
    shifts = sorted({GroupPoint(p.lattice, 0) for p in area})
    checked = 0
    for U in pieces:
        u_pats = _extendable_codes(sft, U, collar, budget)
        for V0 in pieces:
            for h in shifts:
                V = desc.right_mul(V0, h)
                if V & U:
                    continue
                dist = desc.set_distance(U, V)
                if dist < gap or dist > reach:
                    continue
                checked += 1
                v_pats = _extendable_codes(sft, V, collar, budget)
                joint = _extendable_codes(sft, U | V, collar, budget)
                if len(joint[1]) == len(u_pats[1]) * len(v_pats[1]):
                    continue
                js = set(map(tuple, joint[1]))
                upos = [joint[0].index(s) for s in u_pats[0]]
                vpos = [joint[0].index(s) for s in v_pats[0]]
                for a in u_pats[1]:
                    for b in v_pats[1]:
                        full = [0] * len(joint[0])
                        for p, val in zip(upos, a):
                            full[p] = val
                        for p, val in zip(vpos, b):
                            full[p] = val
                        if tuple(full) not in js:
                            w = (Pattern(tuple(zip(u_pats[0], a))), Pattern(tuple(zip(v_pats[0], b))))
                            return GluingResult(False, w, checked, collar, "finite-scale certificate")
    return GluingResult(True, None, checked, collar, "finite-scale certificate")


def _extendable_codes(sft, region, collar, budget):
    arr, sites = pattern_array(sft, region, collar, budget)
    return list(sites), [tuple(r) for r in arr.tolist()]


def condition_d_check(sft: SftSpec, T, T_hat, mode: str = "exhaustive", collar: int | None = None,
                      samples: int = 200, seed: int = 0, budget: int = _sweep.DEFAULT_BUDGET) -> GluingResult:
    """Can every x on T be glued to every outside y across T_hat \\ T?

    y ranges over patterns on the outer collar C of T_hat (thickness = window
    range), which is all the outside can influence.  ``auto`` first tries the
    safe-symbol filling of T_hat \\ T, valid when T_hat holds every site within
    a window diameter of T, and falls back to ``exhaustive``.
    """
    T, T_hat = frozenset(T), frozenset(T_hat)
    if not T <= T_hat:
        raise PreconditionError("T must be contained in T_hat")
    if mode not in ("exhaustive", "sampled", "auto"):
        raise PreconditionError(f"unknown mode {mode!r}")
    desc = sft.group
    if mode == "auto":
        d = window_diameter(sft)
        if safe_symbol(sft) is not None and (d == 0 or desc.collar(T, d) <= T_hat):
            return GluingResult(True, None, 0, 0, "safe-symbol filling")
        mode = "exhaustive"
    collar = max(sft.range, 1) if collar is None else collar
    C = desc.collar(T_hat, max(sft.range, 1))
    xsites, xs = _extendable_codes(sft, T, collar, budget)
    ysites, ys = _extendable_codes(sft, C, collar, budget)
    # joint: patterns on T u C extendable through T_hat (and beyond by the collar)
    region = T_hat | C
    region = region | desc.collar(region, collar)
    keep = tuple(sorted(T | C))
    res = _sweep.sweep(sft.alphabet.size, region, {}, sft.factors(region), keep=keep, budget=budget)
    joint = set(map(tuple, res.configs.astype(int).tolist()))
    xpos = [keep.index(s) for s in xsites]
    ypos = [keep.index(s) for s in ysites]
    pairs = itertools.product(xs, ys)
    if mode == "sampled":
        rng = random.Random(seed)
        pairs = [(rng.choice(xs), rng.choice(ys)) for _ in range(samples)] if xs and ys else []
    checked = 0
    for a, b in pairs:
        checked += 1
        full = [0] * len(keep)
        for p, v in zip(xpos, a):
            full[p] = v
        for p, v in zip(ypos, b):
            full[p] = v
        if tuple(full) not in joint:
            return GluingResult(False, (Pattern(tuple(zip(xsites, a))), Pattern(tuple(zip(ysites, b)))),
                                checked, collar)
    return GluingResult(True, None, checked, collar)


def parse_forbidden_row(group: GroupDescriptor, alphabet: Alphabet, row: str):
    """Parse ``"0,0=1 1,0=1"`` (space separated ``offset=symbol``; cosets as ``k@h``)."""
    shape, values = [], []
    for tok in row.split():
        if "=" not in tok:
            raise PreconditionError(f"expected offset=symbol, got {tok!r}")
        off, sym = tok.split("=", 1)
        shape.append(parse_point(group, off))
        values.append(alphabet.index(sym))
    return tuple(shape), {tuple(values)}


def parse_point(group: GroupDescriptor, text: str) -> GroupPoint:
    text = text.strip()
    coset = 0
    if "@" in text:
        label, text = text.split("@", 1)
        if label not in group.labels:
            raise PreconditionError(f"unknown coset label {label!r}")
        coset = group.labels.index(label)
    try:
        coords = tuple(int(c) for c in text.split(","))
    except ValueError:
        raise PreconditionError(f"bad lattice vector {text!r}") from None
    return group.point(coords, coset)
