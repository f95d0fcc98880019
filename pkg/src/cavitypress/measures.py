"""Build measure oracles from model-file entries."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .gibbs_engine import (AtomicOracle, EmpiricalOracle, MarkovOracle, PeriodicOracle, Torus, bernoulli_chain,
                           chain_from_transition, exact_markov_1d, exact_torus, glauber_sampler)


def build_measure(spec, name: str, cfg: dict, seed: int = 0):
    g, sft, phi = spec.group, spec.sft, spec.phi
    q = sft.alphabet.size
    kind = cfg["kind"]
    if kind == "atomic":
        return AtomicOracle(g, q, cfg["symbol"])
    if kind == "periodic":
        sides = cfg["sides"]
        values = cfg["values"]
        if sides is None or values is None:
            raise PreconditionError(f"measure {name}: periodic needs sides and values")
        torus = Torus(g, sides)
        if len(values) != torus.size:
            raise PreconditionError(f"measure {name}: expected {torus.size} values")
        return PeriodicOracle(g, q, sides, dict(zip(torus.sites, values)))
    if kind == "bernoulli":
        if cfg["probs"] is None or len(cfg["probs"]) != q:
            raise PreconditionError(f"measure {name}: bernoulli needs {q} probabilities")
        return MarkovOracle(bernoulli_chain(g, cfg["probs"]))
    if kind == "markov":
        t = cfg["transition"]
        if t is None or len(t) != q * q:
            raise PreconditionError(f"measure {name}: markov needs a {q}x{q} transition row list")
        return MarkovOracle(chain_from_transition(g, q, np.reshape(t, (q, q))))
    if kind == "gibbs":
        return exact_markov_1d(phi, sft)
    if kind == "torus":
        if cfg["sides"] is None:
            raise PreconditionError(f"measure {name}: torus needs sides")
        return exact_torus(phi, sft, cfg["sides"])
    if kind == "empirical":
        if cfg["sides"] is None:
            raise PreconditionError(f"measure {name}: empirical needs sides")
        samples = glauber_sampler(phi, sft, cfg["sides"], cfg["sweeps"], seed, burn_in=cfg["burn_in"])
        return EmpiricalOracle(Torus(g, cfg["sides"]), q, samples, seed, cfg["sweeps"])
    raise PreconditionError(f"unknown measure kind {kind!r}")


def sample_point(oracle, region, seed: int):
    """A point of the oracle's support covering ``region`` (deterministic in ``seed``)."""
    from .subshift import Pattern
    region = tuple(sorted(region))
    rng = np.random.default_rng(seed)
    if isinstance(oracle, MarkovOracle):
        return oracle.sample_patterns(region, 1, rng)[0]
    if isinstance(oracle, PeriodicOracle):
        row = oracle.orbit[int(rng.integers(oracle.orbit.shape[0]))]
        t = oracle.torus
        return Pattern(tuple((s, int(row[t.index[t.canon(s)]])) for s in region))
    if isinstance(oracle, EmpiricalOracle):
        k = int(rng.integers(oracle.samples.shape[0]))
        t = oracle.torus
        row = oracle.samples[k]
        return Pattern(tuple((s, int(row[t.index[t.canon(s)]])) for s in region))
    integ = oracle.integration(region, rng, 1)
    w = np.asarray(integ.weights, dtype=float)
    return integ.points[int(rng.choice(len(w), p=w / w.sum()))]

