"""Single-site heat-bath (Glauber) sampler on a torus, raster-scan order."""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from ..potential import Interaction
from ..subshift import SftSpec, safe_symbol
from .oracles import EmpiricalOracle
from .torus import Torus


def _conditional_tables(torus: Torus, phi: Interaction, sft: SftSpec):
    """Per site: neighbour positions and a table neighbour-code -> cumulative probabilities."""
    q = phi.q
    factors = torus.factors(phi, sft)
    by_site = [[] for _ in range(torus.size)]
    for f in factors:
        for s in set(f.sites):
            by_site[torus.index[s]].append(f)
    out = []
    for j, site in enumerate(torus.sites):
        nbrs = sorted({torus.index[s] for f in by_site[j] for s in f.sites} - {j})
        k = len(nbrs)
        table = np.zeros((q ** k, q))
        for code in range(q ** k):
            vals = {}
            c = code
            for n in reversed(nbrs):
                vals[n] = c % q
                c //= q
            logw = np.zeros(q)
            for a in range(q):
                vals[j] = a
                for f in by_site[j]:
                    fc = 0
                    for s in f.sites:
                        fc = fc * q + vals[torus.index[s]]
                    if f.forbidding:
                        if f.table[fc]:
                            logw[a] = -np.inf
                    else:
                        logw[a] -= f.table[fc]
            if np.all(np.isneginf(logw)):
                table[code] = np.nan
                continue
            w = np.exp(logw - logw.max())
            table[code] = np.cumsum(w / w.sum())
        out.append((np.array(nbrs, dtype=np.int64), q ** np.arange(k - 1, -1, -1), table))
    return out


def glauber_sampler(phi: Interaction, sft: SftSpec, sides, sweeps: int, seed: int,
                    burn_in: int | None = None, thin: int = 1, initial=None) -> EmpiricalOracle:
    """Heat-bath chain; records the configuration after every ``thin`` sweeps past burn-in.

    With ``sweeps == 0`` the single recorded sample is the initial configuration.
    """
    torus = Torus(sft.group, tuple(sides))
    q = phi.q
    if initial is None:
        s0 = safe_symbol(sft)
        if s0 is None:
            raise PreconditionError("an initial configuration is required when no safe symbol exists")
        x = np.full(torus.size, s0, dtype=np.int64)
    else:
        x = np.asarray(initial, dtype=np.int64).copy()
        if x.shape != (torus.size,):
            raise PreconditionError("initial configuration has the wrong size")
    if sweeps == 0:
        return EmpiricalOracle(torus, q, x[None, :].astype(np.uint8), seed, 0)
    burn_in = sweeps // 10 if burn_in is None else burn_in
    tables = _conditional_tables(torus, phi, sft)
    rng = np.random.default_rng(seed)
    recorded = []
    n = torus.size
    for sweep in range(sweeps):
        u = rng.random(n)
        for j in range(n):
            nbrs, powers, table = tables[j]
            code = int(x[nbrs] @ powers) if len(nbrs) else 0
            cum = table[code]
            a = 0
            while a < q - 1 and u[j] >= cum[a]:
                a += 1
            x[j] = a
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            recorded.append(x.astype(np.uint8))
    return EmpiricalOracle(torus, q, np.array(recorded), seed, sweeps)
