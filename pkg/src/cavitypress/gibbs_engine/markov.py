"""Column transfer matrices and the Markov chains they induce.

For rank-one H a configuration on G = K.Z is a sequence of columns
``c_h = (x(k_1 h), ..., x(k_m h))``.  A nearest-neighbour model (every
window and shape spans at most two consecutive lattice positions) becomes a
weighted graph on columns; its Perron data give the pressure and the unique
Gibbs measure as a stationary Markov chain on columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..errors import PreconditionError, ReducibleError
from ..group_core import GroupDescriptor, GroupPoint
from ..potential import Interaction, energy_array
from ..subshift import SftSpec, pattern_array


def column_sites(desc: GroupDescriptor, h: int) -> tuple:
    return tuple(GroupPoint((h,), k) for k in range(desc.index))


def _lattice_span(desc: GroupDescriptor, shape) -> int:
    xs = [p.lattice[0] for p in shape]
    return max(xs) - min(xs)


@dataclass(frozen=True)
class ColumnTransfer:
    group: GroupDescriptor
    q: int
    states: np.ndarray       # (ns, index) symbols per transversal label
    weights: np.ndarray      # (ns, ns) W[c, c'] = 1[c c' allowed] exp(-(E(c c') - E(c)))
    initial: np.ndarray      # exp(-E(c)) for a single column

    @property
    def n_states(self) -> int:
        return self.states.shape[0]


def column_transfer(phi: Interaction, sft: SftSpec) -> ColumnTransfer:
    desc = sft.group
    if desc.rank != 1:
        raise PreconditionError("column transfer needs a rank-one lattice")
    for c in sft.constraints:
        if _lattice_span(desc, c.window) > 1:
            raise PreconditionError("SFT windows must span at most two consecutive lattice positions")
    for t in phi.terms:
        if _lattice_span(desc, t.shape) > 1:
            raise PreconditionError("interaction shapes must span at most two consecutive lattice positions")
    c0, c1 = column_sites(desc, 0), column_sites(desc, 1)
    arr, sites = pattern_array(sft, c0)
    order = [sites.index(s) for s in c0]
    states = arr[:, order]
    ns = states.shape[0]
    e_col = energy_array(phi, c0, states)
    pair_sites = c0 + c1
    pairs = np.concatenate([np.repeat(states, ns, axis=0), np.tile(states, (ns, 1))], axis=1)
    allowed = np.ones(ns * ns, dtype=bool)
    q = phi.q
    pos = {s: j for j, s in enumerate(pair_sites)}
    for f in sft.factors(pair_sites):
        powers = q ** np.arange(len(f.sites) - 1, -1, -1, dtype=np.int64)
        allowed &= ~f.table[pairs[:, [pos[s] for s in f.sites]].astype(np.int64) @ powers]
    e_pair = energy_array(phi, pair_sites, pairs)
    w = np.where(allowed, np.exp(-(e_pair - np.repeat(e_col, ns))), 0.0).reshape(ns, ns)
    return ColumnTransfer(desc, q, states, w, np.exp(-e_col))


def _trim(w: np.ndarray) -> np.ndarray:
    """Indices of states lying on bi-infinite paths."""
    alive = np.arange(w.shape[0])
    while True:
        sub = w[np.ix_(alive, alive)]
        ok = (sub.sum(axis=1) > 0) & (sub.sum(axis=0) > 0)
        if ok.all():
            return alive
        alive = alive[ok]
        if alive.size == 0:
            raise ReducibleError("the subshift is empty")


@dataclass(frozen=True)
class PerronData:
    rho: float
    left: np.ndarray
    right: np.ndarray
    alive: np.ndarray


def perron(w: np.ndarray) -> PerronData:
    alive = _trim(w)
    sub = w[np.ix_(alive, alive)]
    ncomp, _ = connected_components(sub > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise ReducibleError(f"transfer graph has {ncomp} strongly connected components")
    vals, vecs = np.linalg.eig(sub)
    k = int(np.argmax(vals.real))
    rho = float(vals[k].real)
    right = np.abs(vecs[:, k].real)
    lvals, lvecs = np.linalg.eig(sub.T)
    left = np.abs(lvecs[:, int(np.argmax(lvals.real))].real)
    # one step of power iteration polishes both vectors
    right = sub @ right / rho
    left = sub.T @ left / rho
    return PerronData(rho, left / left.sum(), right / right.sum(), alive)


def log_perron_root(w: np.ndarray) -> float:
    return math.log(perron(w).rho)


@dataclass(frozen=True)
class ColumnChain:
    """Stationary Markov chain on column states."""

    group: GroupDescriptor
    q: int
    states: np.ndarray
    P: np.ndarray
    pi: np.ndarray
    rho: float = float("nan")
    source: str = "gibbs"

    def __post_init__(self):
        if not np.allclose(self.P.sum(axis=1), 1.0, atol=1e-12):
            raise PreconditionError("transition rows must sum to 1")
        if not np.allclose(self.pi @ self.P, self.pi, atol=1e-12):
            raise PreconditionError("initial law is not stationary")

    @property
    def entropy_rate(self) -> float:
        """-sum pi_i P_ij log P_ij per lattice step."""
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(self.P > 0, self.P * np.log(self.P), 0.0)
        return float(-(self.pi @ t.sum(axis=1)))


def gibbs_chain(phi: Interaction, sft: SftSpec) -> ColumnChain:
    ct = column_transfer(phi, sft)
    pd = perron(ct.weights)
    sub = ct.weights[np.ix_(pd.alive, pd.alive)]
    v, u = pd.right, pd.left
    P = sub * v[None, :] / (pd.rho * v[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    pi = u * v
    pi = pi / pi.sum()
    # refine the stationary law against rounding
    for _ in range(3):
        pi = pi @ P
        pi = pi / pi.sum()
    return ColumnChain(sft.group, ct.q, ct.states[pd.alive], P, pi, pd.rho, "gibbs")


def chain_from_transition(group: GroupDescriptor, q: int, P, states=None, source: str = "markov") -> ColumnChain:
    """A stationary chain from an explicit transition matrix (index-one groups use single symbols)."""
    P = np.asarray(P, dtype=float)
    if states is None:
        if group.index != 1:
            raise PreconditionError("column states are required when the index exceeds one")
        states = np.arange(q, dtype=np.uint8)[:, None]
    vals, vecs = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(vecs[:, k].real)
    pi = pi / pi.sum()
    for _ in range(3):
        pi = pi @ P
        pi = pi / pi.sum()
    return ColumnChain(group, q, np.asarray(states, dtype=np.uint8), P, pi, float("nan"), source)


def bernoulli_chain(group: GroupDescriptor, probs) -> ColumnChain:
    probs = np.asarray(probs, dtype=float)
    return chain_from_transition(group, len(probs), np.tile(probs, (len(probs), 1)), source="bernoulli")
