"""Transfer-matrix pressures: exact on rank-one lattices, strip brackets on Z^2."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _sweep
from ..errors import PreconditionError
from ..gibbs_engine.markov import column_transfer, perron
from ..group_core import GroupPoint
from ..intervals import Interval
from ..potential import Interaction
from ..subshift import SftSpec
from .series import ConvergenceSeries, model_hash


def transfer_pressure_1d(phi: Interaction, sft: SftSpec) -> float:
    """log of the Perron root of the column transfer matrix, per site of G."""
    ct = column_transfer(phi, sft)
    return math.log(perron(ct.weights).rho) / sft.group.index


def _strip_factors(phi: Interaction, sft: SftSpec, width: int, columns: int, periodic: bool) -> list:
    """Factors on ``columns`` adjacent columns of a width-``width`` strip of Z^2."""
    desc = sft.group
    out = []
    shapes = [(c.window, c.table, True) for c in sft.constraints] + [(t.shape, t.table, False) for t in phi.terms]
    for shape, table, forbidding in shapes:
        xs = [p.lattice[0] for p in shape]
        ys = [p.lattice[1] for p in shape]
        for a in range(-max(xs), columns - min(xs)):
            if periodic:
                b_range = range(width)
            else:
                b_range = range(-min(ys), width - max(ys))
            for b in b_range:
                g = GroupPoint((a, b), 0)
                placed = [desc.mul(m, g) for m in shape]
                if any(not 0 <= p.lattice[0] < columns for p in placed):
                    continue
                sites = tuple(GroupPoint((p.lattice[0], p.lattice[1] % width), 0) for p in placed)
                if len(set(sites)) != len(sites):
                    raise PreconditionError(f"strip width {width} is too narrow for the interaction")
                out.append(_sweep.Factor(sites, table, forbidding))
    return out


@dataclass(frozen=True)
class StripTransfer:
    width: int
    periodic: bool
    matrix: np.ndarray   # symmetric when the model is reflection symmetric
    states: int

    @property
    def log_rho(self) -> float:
        return math.log(perron(self.matrix).rho)


def strip_transfer(phi: Interaction, sft: SftSpec, width: int, periodic: bool,
                   budget: int = _sweep.DEFAULT_BUDGET) -> StripTransfer:
    desc = sft.group
    if desc.rank != 2 or desc.index != 1:
        raise PreconditionError("strip transfer is implemented for Z^2")
    q = phi.q
    col = tuple(GroupPoint((0, j), 0) for j in range(width))
    col1 = tuple(GroupPoint((1, j), 0) for j in range(width))
    f1 = _strip_factors(phi, sft, width, 1, periodic)
    res = _sweep.sweep(q, col, {}, f1, keep=col, order=col, budget=budget)
    states = res.configs.astype(np.int64)
    e_col = -(res.log_weights + res.log_offset)
    ns = states.shape[0]
    if ns * ns > budget:
        from ..errors import ResourceBudgetError
        raise ResourceBudgetError(ns * ns, budget, "strip transfer entries")
    f2 = _strip_factors(phi, sft, width, 2, periodic)
    pair = np.concatenate([np.repeat(states, ns, axis=0), np.tile(states, (ns, 1))], axis=1)
    pos = {s: j for j, s in enumerate(col + col1)}
    ok = np.ones(ns * ns, dtype=bool)
    energy = np.zeros(ns * ns)
    for f in f2:
        if all(s.lattice[0] == 0 for s in f.sites) or all(s.lattice[0] == 1 for s in f.sites):
            continue
        powers = q ** np.arange(len(f.sites) - 1, -1, -1, dtype=np.int64)
        code = pair[:, [pos[s] for s in f.sites]] @ powers
        if f.forbidding:
            ok &= ~f.table[code]
        else:
            energy += f.table[code]
    half = 0.5 * (np.repeat(e_col, ns) + np.tile(e_col, ns))
    m = np.where(ok, np.exp(-(energy + half)), 0.0).reshape(ns, ns)
    return StripTransfer(width, periodic, m, ns)


def _normal_form(items) -> frozenset:
    out = set()
    for pts, value in items:
        lo = tuple(min(p[0][k] for p in pts) for k in range(len(pts[0][0])))
        out.add((frozenset(((tuple(c - o for c, o in zip(p[0], lo)), p[1]) for p in pts)), value))
    return frozenset(out)


def _swap_form(phi: Interaction, sft: SftSpec, swap: bool) -> frozenset:
    def pt(p):
        return (p.lattice[1], p.lattice[0]) if swap else p.lattice
    items = []
    q = phi.q
    for c in sft.constraints:
        for f in c.forbidden:
            items.append((tuple((pt(p), v) for p, v in zip(c.window, f)), "forbidden"))
    for t in phi.terms:
        for code, val in enumerate(t.table):
            vals = []
            cc = code
            for _ in t.shape:
                vals.append(cc % q)
                cc //= q
            vals.reverse()
            if val != 0:
                items.append((tuple((pt(p), v) for p, v in zip(t.shape, vals)), float(val)))
    return _normal_form(items)


def isotropic(phi: Interaction, sft: SftSpec) -> bool:
    """Invariance of the model under exchanging the two lattice coordinates."""
    return _swap_form(phi, sft, False) == _swap_form(phi, sft, True)


def strip_pressure_2d(phi: Interaction, sft: SftSpec, widths, boundary: str = "free",
                      budget: int = _sweep.DEFAULT_BUDGET) -> ConvergenceSeries:
    """log(rho_w) / w for each strip width (free or periodic across the strip)."""
    if boundary not in ("free", "periodic"):
        raise PreconditionError(f"unknown strip boundary {boundary!r}")
    series = ConvergenceSeries(f"strip_{boundary}", model_hash(sft, phi), "strip")
    for w in sorted(set(widths)):
        st = strip_transfer(phi, sft, w, boundary == "periodic", budget)
        series.append(w, st.log_rho / w, st.states)
    return series


@dataclass(frozen=True)
class StripBracket:
    interval: Interval
    lower_from: tuple
    upper_from: int
    lower_table: tuple
    upper_table: tuple


def strip_bracket(phi: Interaction, sft: SftSpec, max_width: int,
                  budget: int = _sweep.DEFAULT_BUDGET) -> StripBracket:
    """Rigorous two-sided bounds on the pressure from strips of width <= max_width.

    Upper: log(rho_per(2k)) / 2k.  Lower: (log rho_free(w + 2m) - log rho_free(w)) / 2m
    with w odd.  Both need a symmetric transfer matrix and coordinate-swap
    symmetry of the model.
    """
    if not isotropic(phi, sft):
        raise PreconditionError("strip bounds need a model symmetric under swapping coordinates")
    free = {}
    for w in range(1, max_width + 1):
        st = strip_transfer(phi, sft, w, False, budget)
        if not np.allclose(st.matrix, st.matrix.T, rtol=1e-13, atol=0):
            raise PreconditionError("strip transfer matrix is not symmetric")
        free[w] = st.log_rho
    upper = []
    for k in range(1, max_width // 2 + 1):
        try:
            st = strip_transfer(phi, sft, 2 * k, True, budget)
        except PreconditionError:
            continue
        if not np.allclose(st.matrix, st.matrix.T, rtol=1e-13, atol=0):
            raise PreconditionError("strip transfer matrix is not symmetric")
        upper.append((st.log_rho / (2 * k), 2 * k))
    if not upper:
        raise PreconditionError("no even periodic width fits the interaction")
    lower = []
    for w in range(1, max_width + 1, 2):
        for m in range(1, (max_width - w) // 2 + 1):
            lower.append(((free[w + 2 * m] - free[w]) / (2 * m), (w, w + 2 * m)))
    lo = max(lower) if lower else (-math.inf, ())
    hi = min(upper)
    return StripBracket(Interval(lo[0], hi[0]).scale(1.0), lo[1], hi[1], tuple(lower), tuple(upper))
