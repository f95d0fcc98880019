"""Plain-text model files: indented key-value blocks.

Example::

    group
      rank 1
    subshift
      preset golden_mean
    potential
      preset hardcore
      lambda 1.0
    schedule
      shape corner
      n_max 12
      depth 30
    measures
      delta_zero
        kind atomic
        symbol 0
    run
      measure delta_zero
      tol 1e-6

Lines are ``key value...``; a key without a value opens a block whose body is
indented deeper.  ``#`` starts a comment.  Unknown keys are errors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import PreconditionError, SpecParseError
from .group_core import FolnerSchedule, GroupDescriptor
from .subshift import Alphabet, SftSpec, full_shift, golden_mean, no01_1d, parse_forbidden_row, parse_point


@dataclass
class Node:
    key: str
    value: str
    line: int
    column: int        # column of the key
    value_column: int
    children: list = field(default_factory=list)


def parse_tree(text: str, path: str | None = None) -> list:
    """Indentation tree of :class:`Node`; tabs are rejected."""
    root = Node("", "", 0, 0, 0)
    stack = [(-1, root)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        if "\t" in body[:len(body) - len(body.lstrip())]:
            raise SpecParseError("tabs are not allowed in indentation", lineno, 1, path)
        indent = len(body) - len(body.lstrip(" "))
        content = body.strip()
        parts = content.split(None, 1)
        key = parts[0]
        value = parts[1] if len(parts) > 1 else ""
        vcol = indent + 1 + (body[indent:].index(value, len(key)) if value else len(key) + 1)
        node = Node(key, value, lineno, indent + 1, vcol)
        while stack[-1][0] >= indent:
            stack.pop()
        parent_indent, parent = stack[-1]
        if parent is not root and parent.value:
            raise SpecParseError(f"key {parent.key!r} has a value and cannot open a block", lineno, indent + 1, path)
        if parent.children and parent_indent >= 0:
            first = parent.children[0]
            if first.column != node.column:
                raise SpecParseError("inconsistent indentation", lineno, indent + 1, path)
        parent.children.append(node)
        stack.append((indent, node))
    return root.children


# -- typed access -------------------------------------------------------------------

class Block:
    """Children of a node with schema checks and typed getters."""

    def __init__(self, node: Node | None, allowed: set, repeatable: set = frozenset(), path=None, name=""):
        self.node = node
        self.path = path
        self.name = name
        self.entries = {}
        self.repeated = {}
        for child in (node.children if node is not None else []):
            if child.key not in allowed:
                raise SpecParseError(f"unknown key {child.key!r} in {name or 'block'}", child.line, child.column, path)
            if child.key in repeatable:
                self.repeated.setdefault(child.key, []).append(child)
            elif child.key in self.entries:
                raise SpecParseError(f"duplicate key {child.key!r}", child.line, child.column, path)
            else:
                self.entries[child.key] = child

    def error(self, node: Node, message: str, at_value: bool = True) -> SpecParseError:
        return SpecParseError(message, node.line, node.value_column if at_value else node.column, self.path)

    def has(self, key: str) -> bool:
        return key in self.entries

    def raw(self, key: str, default=None):
        n = self.entries.get(key)
        return default if n is None else n.value

    def _conv(self, key, conv, what, default, required):
        n = self.entries.get(key)
        if n is None:
            if required:
                where = self.node
                if where is None:
                    raise SpecParseError(f"missing block {self.name!r}", None, None, self.path)
                raise SpecParseError(f"missing key {key!r} in {self.name}", where.line, where.column, self.path)
            return default
        if n.children:
            raise self.error(n, f"key {key!r} takes a value, not a block", at_value=False)
        try:
            return conv(n.value)
        except (ValueError, PreconditionError) as exc:
            raise self.error(n, f"{key}: expected {what}, got {n.value!r} ({exc})") from None

    def int(self, key, default=None, required=False):
        return self._conv(key, int, "an integer", default, required)

    def float(self, key, default=None, required=False):
        return self._conv(key, float, "a number", default, required)

    def str(self, key, default=None, required=False, choices=None):
        v = self._conv(key, str, "a word", default, required)
        if choices is not None and v is not None and v not in choices:
            n = self.entries[key]
            raise self.error(n, f"{key}: expected one of {', '.join(choices)}, got {v!r}")
        return v

    def floats(self, key, default=None, required=False):
        return self._conv(key, lambda s: tuple(float(t) for t in s.split()), "numbers", default, required)

    def ints(self, key, default=None, required=False):
        return self._conv(key, lambda s: tuple(int(t) for t in s.split()), "integers", default, required)


# -- the model ------------------------------------------------------------------------

GROUP_KEYS = {"preset", "rank", "order", "labels", "table", "action", "partition"}
SUBSHIFT_KEYS = {"preset", "alphabet", "along", "forbid"}
POTENTIAL_KEYS = {"preset", "lambda", "beta", "field", "term"}
SCHEDULE_KEYS = {"shape", "n_min", "n_max", "depth", "step", "strip_width", "budget", "collar", "tssm_gap"}
MEASURE_KEYS = {"kind", "symbol", "probs", "sides", "values", "sweeps", "burn_in", "samples", "transition"}
COMMAND_NAMES = ("pressure", "cavity", "smb", "decompose", "check", "entropy")
RUN_KEYS = {"measure", "tol", "seed", "samples", "mode", "source", "out", "threads"} | {f"tol_{c}" for c in COMMAND_NAMES}
TOP_KEYS = {"group", "subshift", "potential", "schedule", "measures", "run"}


@dataclass
class ModelSpec:
    text: str
    path: str | None
    group: GroupDescriptor
    sft: SftSpec
    phi: object
    schedule: dict
    measures: dict
    run: dict

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    def folner(self) -> FolnerSchedule:
        return FolnerSchedule(self.group, self.schedule["shape"])

    def measure(self, name: str | None = None, seed: int = 0):
        from .measures import build_measure
        name = name or self.run.get("measure")
        if name is None:
            raise PreconditionError("no measure selected (run.measure)")
        if name not in self.measures:
            raise PreconditionError(f"unknown measure {name!r}")
        return build_measure(self, name, self.measures[name], seed)


def _parse_group(b: Block) -> GroupDescriptor:
    preset = b.str("preset", None, choices=("lattice", "cyclic", "dihedral"))
    partition_node = b.entries.get("partition")
    if preset is not None or not b.has("table"):
        rank = b.int("rank", 1)
        if preset == "dihedral":
            g = GroupDescriptor.infinite_dihedral()
        elif preset == "cyclic" or b.has("order"):
            g = GroupDescriptor.direct_product_cyclic(rank, b.int("order", required=True))
        else:
            try:
                g = GroupDescriptor.lattice(rank)
            except PreconditionError as exc:
                raise b.error(b.entries["rank"], str(exc)) from None
    else:
        rank = b.int("rank", required=True)
        labels = tuple(b.raw("labels", "e").split())
        pos = {k: j for j, k in enumerate(labels)}
        rows = []
        tnode = b.entries["table"]
        for row in tnode.children:
            text = f"{row.key} {row.value}"
            try:
                lhs, rhs = text.split("=", 1)
                a, c = lhs.split()
                m, h = rhs.split(";", 1)
                vec = tuple(int(t) for t in h.replace(",", " ").split())
                rows.append((pos[a], pos[c], pos[m.strip()], vec))
            except (ValueError, KeyError):
                raise SpecParseError(f"bad table row {text!r}; expected 'a b = c ; h1 h2 ...'",
                                     row.line, row.column, b.path) from None
        actions = [None] * len(labels)
        for an in b.repeated.get("action", []):
            try:
                lab, mat = an.value.split("=", 1)
                m = tuple(tuple(int(t) for t in r.split()) for r in mat.split(";"))
                actions[pos[lab.strip()]] = m
            except (ValueError, KeyError):
                raise b.error(an, f"bad action {an.value!r}; expected 'label = row ; row'") from None
        ident = tuple(tuple(int(r == c) for c in range(rank)) for r in range(rank))
        actions = tuple(a or ident for a in actions)
        try:
            g = GroupDescriptor(rank=rank, labels=labels, table=tuple(rows), actions=actions)
        except PreconditionError as exc:
            raise b.error(tnode, str(exc), at_value=False) from None
    if partition_node is not None:
        from .pressure_lab.cavity import with_partition
        try:
            blocks = [tuple(blk.split()) for blk in partition_node.value.split("|")]
            for blk in blocks:
                for k in blk:
                    if k not in g.labels:
                        raise PreconditionError(f"unknown label {k!r}")
            g = with_partition(g, blocks)
        except PreconditionError as exc:
            raise b.error(partition_node, f"bad partition: {exc}") from None
    return g


def _parse_subshift(b: Block, g: GroupDescriptor) -> SftSpec:
    alphabet = Alphabet(tuple(b.raw("alphabet", "0 1").split()))
    preset = b.str("preset", None, choices=("full", "golden_mean", "no01"))
    if preset == "golden_mean":
        if alphabet.size != 2:
            raise b.error(b.entries["alphabet"], "the golden mean preset is binary")
        return golden_mean(g, b.str("along", "lattice", choices=("lattice", "all")))
    if preset == "no01":
        return no01_1d(g)
    constraints = []
    for fn in b.repeated.get("forbid", []):
        try:
            constraints.append(parse_forbidden_row(g, alphabet, fn.value))
        except PreconditionError as exc:
            raise b.error(fn, str(exc)) from None
    if not constraints:
        return full_shift(g, alphabet)
    try:
        return SftSpec(g, alphabet, tuple(constraints), "custom")
    except PreconditionError as exc:
        raise b.error(b.repeated["forbid"][0], str(exc)) from None


def _parse_potential(b: Block, g: GroupDescriptor, sft: SftSpec):
    from . import potential as pot
    preset = b.str("preset", None, choices=("zero", "hardcore", "ising"))
    try:
        if preset == "hardcore":
            return pot.hardcore(g, b.float("lambda", required=True))
        if preset == "ising":
            if sft.alphabet.size != 2:
                raise PreconditionError("the Ising preset needs a two-letter alphabet")
            return pot.ising(g, b.float("beta", required=True), b.float("field", 0.0))
    except PreconditionError as exc:
        raise b.error(b.entries["preset"], str(exc)) from None
    terms = []
    for tn in b.repeated.get("term", []):
        try:
            sites, table = tn.value.split(":", 1)
            shape = tuple(parse_point(g, s) for s in sites.split())
            terms.append((shape, [float(v) for v in table.split()]))
        except (ValueError, PreconditionError) as exc:
            raise b.error(tn, f"bad term {tn.value!r}; expected 'sites : values' ({exc})") from None
    if not terms:
        return pot.zero(g, sft.alphabet)
    try:
        return pot.Interaction(g, sft.alphabet, tuple(terms), "custom")
    except PreconditionError as exc:
        raise b.error(b.repeated["term"][0], str(exc)) from None


def loads(text: str, path: str | None = None) -> ModelSpec:
    nodes = parse_tree(text, path)
    top = Block(Node("", "", 0, 0, 0, nodes), TOP_KEYS, path=path, name="file")
    for n in nodes:
        if n.value:
            raise SpecParseError(f"block {n.key!r} takes no value", n.line, n.value_column, path)

    def blk(name, allowed, repeatable=frozenset()):
        return Block(top.entries.get(name), allowed, repeatable, path, name)

    gb = blk("group", GROUP_KEYS, {"action"})
    g = _parse_group(gb)
    sb = blk("subshift", SUBSHIFT_KEYS, {"forbid"})
    sft = _parse_subshift(sb, g)
    pb = blk("potential", POTENTIAL_KEYS, {"term"})
    phi = _parse_potential(pb, g, sft)

    sc = blk("schedule", SCHEDULE_KEYS)
    schedule = {
        "shape": sc.str("shape", "box", choices=("box", "corner")),
        "n_min": sc.int("n_min", 1),
        "n_max": sc.int("n_max", 8),
        "depth": sc.int("depth", 8),
        "step": sc.int("step", 2),
        "strip_width": sc.int("strip_width", 8),
        "budget": sc.int("budget", None),
        "collar": sc.int("collar", None),
        "tssm_gap": sc.int("tssm_gap", 2),
    }
    if schedule["n_max"] < 0:
        raise sc.error(sc.entries["n_max"], "n_max must be >= 0")

    measures = {}
    mnode = top.entries.get("measures")
    for child in (mnode.children if mnode else []):
        if child.value:
            raise SpecParseError(f"measure {child.key!r} must be a block", child.line, child.value_column, path)
        mb = Block(child, MEASURE_KEYS, path=path, name=f"measure {child.key}")
        kind = mb.str("kind", required=True,
                      choices=("atomic", "periodic", "bernoulli", "gibbs", "markov", "torus", "empirical"))
        measures[child.key] = {
            "kind": kind,
            "symbol": mb.int("symbol", 0),
            "probs": mb.floats("probs", None),
            "sides": mb.ints("sides", None),
            "values": mb.ints("values", None),
            "sweeps": mb.int("sweeps", 1000),
            "burn_in": mb.int("burn_in", None),
            "samples": mb.int("samples", 200),
            "transition": mb.floats("transition", None),
            "line": child.line,
        }

    rb = blk("run", RUN_KEYS)
    run = {
        "measure": rb.str("measure", None),
        "tol": rb.float("tol", None),
        "seed": rb.int("seed", 0),
        "samples": rb.int("samples", 500),
        "mode": rb.str("mode", "auto", choices=("auto", "exhaustive", "monotone")),
        "source": rb.str("source", "bracket", choices=("bracket", "exact")),
        "out": rb.str("out", None),
        "threads": rb.int("threads", 1),
        "tols": {c: rb.float(f"tol_{c}") for c in COMMAND_NAMES if rb.has(f"tol_{c}")},
    }
    if run["measure"] is not None and run["measure"] not in measures:
        raise rb.error(rb.entries["measure"], f"unknown measure {run['measure']!r}")
    return ModelSpec(text, path, g, sft, phi, schedule, measures, run)


def load(path) -> ModelSpec:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read model file: {exc.strerror}", path=str(p)) from None
    return loads(text, str(p))
