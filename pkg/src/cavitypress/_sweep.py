"""Sweep contraction of a finite factor graph over a symbol alphabet.

Sites are visited in a fixed order.  A frontier table holds the assignments of
the sites that some later factor (or the caller) still needs, together with
log-weights; sites are dropped as soon as their last factor has been applied
and identical frontier rows are merged.  Keeping every site turns the sweep
into plain enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceBudgetError

DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True)
class Factor:
    """A constraint (bool table, True = forbidden) or an energy table on ``sites``.

    Tables are flat arrays indexed by the code sum_j v_j * q**(k-1-j).
    """

    sites: tuple
    table: np.ndarray
    forbidding: bool


@dataclass
class SweepResult:
    keep: tuple
    configs: np.ndarray
    log_weights: np.ndarray
    log_offset: float = 0.0

    @property
    def empty(self) -> bool:
        return self.configs.shape[0] == 0

    @property
    def log_total(self) -> float:
        if self.empty:
            return -math.inf
        m = float(self.log_weights.max())
        return self.log_offset + m + math.log(float(np.exp(self.log_weights - m).sum()))

    def marginal(self, positions) -> "SweepResult":
        """Sum out every kept column except ``positions``."""
        positions = list(positions)
        cfg = self.configs[:, positions]
        cfg, lw = _merge(cfg, self.log_weights)
        return SweepResult(tuple(self.keep[p] for p in positions), cfg, lw, self.log_offset)

    def lookup(self, values) -> float:
        """Log-weight of one kept assignment (-inf when absent)."""
        if self.empty:
            return -math.inf
        hit = np.all(self.configs == np.asarray(values, dtype=self.configs.dtype), axis=1)
        if not hit.any():
            return -math.inf
        return self.log_offset + float(self.log_weights[hit][0])


def _codes(cfg: np.ndarray, q: int):
    if cfg.shape[1] == 0:
        return np.zeros(cfg.shape[0], dtype=np.int64)
    if cfg.shape[1] * math.log2(max(q, 2)) <= 62:
        powers = q ** np.arange(cfg.shape[1] - 1, -1, -1, dtype=np.int64)
        return cfg.astype(np.int64) @ powers
    return None


def _merge(cfg: np.ndarray, logw: np.ndarray, q: int = 256):
    if cfg.shape[0] <= 1:
        return cfg, logw
    codes = _codes(cfg, int(cfg.max()) + 1 if cfg.size else 2)
    if codes is not None:
        uniq, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        rows = cfg[first]
    else:
        rows, inverse = np.unique(cfg, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    if rows.shape[0] == cfg.shape[0]:
        order = np.argsort(inverse, kind="stable")
        return cfg[order], logw[order]
    m = float(logw.max())
    w = np.bincount(inverse, weights=np.exp(logw - m), minlength=rows.shape[0])
    with np.errstate(divide="ignore"):
        lw = np.log(w) + m
    ok = w > 0
    return rows[ok], lw[ok]


def _restrict(factor: Factor, fixed: dict, q: int):
    """Slice the fixed coordinates out of a factor's table."""
    k = len(factor.sites)
    table = factor.table.reshape((q,) * k) if k else factor.table.reshape(())
    index = []
    free = []
    for s in factor.sites:
        if s in fixed:
            index.append(fixed[s])
        else:
            index.append(slice(None))
            free.append(s)
    sub = table[tuple(index)]
    return tuple(free), np.asarray(sub).reshape(-1)


def sweep(q: int, free_sites, fixed: dict, factors, keep=(), order=None,
          budget: int = DEFAULT_BUDGET, allowed: dict | None = None) -> SweepResult:
    """Contract ``factors`` over ``free_sites`` with ``fixed`` values pinned.

    Returns log-weights (summed over all non-kept free sites) indexed by the
    assignments of ``keep`` (a subset of the free sites).
    """
    order = list(sorted(free_sites) if order is None else order)
    pos = {s: t for t, s in enumerate(order)}
    keep = tuple(keep)
    for s in keep:
        if s not in pos:
            raise ValueError(f"kept site {s} is not free")
    allowed = allowed or {}
    n = len(order)
    log_offset = 0.0
    by_step = [[] for _ in range(n)]
    last_use = {s: -1 for s in order}
    for f in factors:
        free, table = _restrict(f, fixed, q)
        if not free:
            if f.forbidding:
                if bool(table.reshape(-1)[0]):
                    return SweepResult(keep, np.zeros((0, len(keep)), dtype=np.uint8), np.zeros(0))
            else:
                log_offset -= float(table.reshape(-1)[0])
            continue
        for s in free:
            if s not in pos:
                raise ValueError(f"factor site {s} is neither free nor fixed")
        step = max(pos[s] for s in free)
        by_step[step].append((free, table, f.forbidding))
        for s in free:
            last_use[s] = max(last_use[s], step)
    for s in keep:
        last_use[s] = n

    cols: list = []
    cfg = np.zeros((1, 0), dtype=np.uint8)
    logw = np.zeros(1)
    for t, site in enumerate(order):
        syms = np.asarray(allowed.get(site, range(q)), dtype=np.uint8)
        a = len(syms)
        if cfg.shape[0] * a > budget:
            raise ResourceBudgetError(cfg.shape[0] * a, budget)
        k = cfg.shape[0]
        cfg = np.concatenate([np.repeat(cfg, a, axis=0), np.tile(syms, k)[:, None]], axis=1)
        logw = np.repeat(logw, a)
        cols.append(site)
        colpos = {s: j for j, s in enumerate(cols)}
        keep_mask = None
        energy = None
        for free, table, forbidding in by_step[t]:
            idx = [colpos[s] for s in free]
            powers = q ** np.arange(len(idx) - 1, -1, -1, dtype=np.int64)
            code = cfg[:, idx].astype(np.int64) @ powers
            if forbidding:
                bad = table[code]
                keep_mask = ~bad if keep_mask is None else keep_mask & ~bad
            else:
                e = table[code]
                energy = e if energy is None else energy + e
        if energy is not None:
            logw = logw - energy
        if keep_mask is not None:
            cfg, logw = cfg[keep_mask], logw[keep_mask]
        alive = [j for j, s in enumerate(cols) if last_use[s] > t]
        if len(alive) < len(cols):
            cols = [cols[j] for j in alive]
            cfg = cfg[:, alive]
            cfg, logw = _merge(cfg, logw)
        if cfg.shape[0] == 0:
            return SweepResult(keep, np.zeros((0, len(keep)), dtype=np.uint8), np.zeros(0), log_offset)
        m = float(logw.max())
        if abs(m) > 300:
            logw = logw - m
            log_offset += m
    colpos = {s: j for j, s in enumerate(cols)}
    cfg = cfg[:, [colpos[s] for s in keep]] if keep else cfg[:, :0]
    cfg, logw = _merge(cfg, logw)
    return SweepResult(keep, cfg, logw, log_offset)
