"""Command line front end: ``cavitypress <command> --spec MODEL [options]``.

Each run command writes ``<command>.json`` (stable key order, the wall-clock
time isolated under ``timestamp``), one CSV per series and a PNG figure into
the output directory, then prints a one-line verdict.

Exit codes: 0 pass, 1 parse error, 2 precondition violation, 3 tolerance or
acceptance failure, 4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path

from . import __version__
from ._parallel import ordered_map
from .cache import ResultCache, default_dir
from .errors import (NonConvergenceError, PreconditionError, ResourceBudgetError, SpecParseError)
from .intervals import Interval

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_TOLERANCE, EXIT_BUDGET = 0, 1, 2, 3, 4

RUN_COMMANDS = ("pressure", "cavity", "smb", "decompose", "check", "entropy")


def _num(x):
    """JSON-safe float (infinities become None)."""
    if x is None:
        return None
    x = float(x)
    return None if math.isinf(x) or math.isnan(x) else x


def _series_table(series) -> dict:
    return {
        "estimator": series.estimator,
        "schedule": series.schedule,
        "rows": [[e.n, e.h_count, _num(e.value.lo), _num(e.value.hi), e.value.stderr] for e in series.entries],
    }


def _settings(spec, args, command: str) -> dict:
    tol = spec.run["tols"].get(command, spec.run["tol"])
    if args.tol is not None:
        tol = args.tol
    return {
        "seed": args.seed if args.seed is not None else spec.run["seed"],
        "budget": args.budget if args.budget is not None else (spec.schedule["budget"] or 2_000_000),
        "tol": tol,
        "samples": spec.run["samples"],
        "measure": getattr(args, "measure", None) or spec.run["measure"],
    }


def _require_tol(st: dict) -> float:
    if st["tol"] is None:
        raise PreconditionError("no tolerance given (run.tol or --tol)")
    return float(st["tol"])


def _oracle(spec, budget):
    """Reference pressure: exact transfer value on rank one, strip bracket on isotropic Z^2."""
    from .pressure_lab import isotropic, strip_bracket, transfer_pressure_1d
    g = spec.group
    try:
        if g.rank == 1:
            return {"kind": "transfer_1d", "interval": Interval.point(transfer_pressure_1d(spec.phi, spec.sft))}
        if g.rank == 2 and g.index == 1 and isotropic(spec.phi, spec.sft):
            sb = strip_bracket(spec.phi, spec.sft, spec.schedule["strip_width"], budget)
            return {"kind": f"strip_bracket_w{spec.schedule['strip_width']}", "interval": sb.interval}
    except PreconditionError:
        return None
    return None


def _oracle_json(oracle):
    if oracle is None:
        return None
    return {"kind": oracle["kind"], **oracle["interval"].to_json()}


# -- commands ---------------------------------------------------------------------------

def cmd_pressure(spec, st, threads):
    from .pressure_lab import pressure_sequence
    sc = spec.schedule
    series = pressure_sequence(spec.phi, spec.sft, spec.folner(), sc["n_max"], sc["n_min"], st["budget"])
    tol = _require_tol(st)
    oracle = _oracle(spec, st["budget"])
    last = series.last
    if oracle is None:
        ok, msg = True, "a priori bound held on every entry (no oracle)"
    else:
        o = oracle["interval"]
        dist = max(0.0, o.lo - last.hi, last.lo - o.hi)
        ok = dist <= tol
        msg = f"|P_n - oracle| = {dist:.3g} at n={series.ns[-1]}"
    results = {"series": [_series_table(series)], "last": last.to_json(), "oracle": _oracle_json(oracle),
               "a_priori_bound": math.log(spec.phi.q) + spec.phi.norm()}
    return results, ok, msg, tol


def _mu_source(spec):
    if spec.run["source"] == "exact":
        from .gibbs_engine import exact_markov_1d
        return exact_markov_1d(spec.phi, spec.sft)
    return None


def cmd_cavity(spec, st, threads):
    from .pressure_lab import cavity_pressure
    tol = _require_tol(st)
    sc = spec.schedule
    nu = spec.measure(st["measure"], seed=st["seed"])
    floor = max(spec.phi.range, spec.sft.range, 1)
    try:
        est = cavity_pressure(spec.phi, spec.sft, spec.group, nu, sc["depth"], _mu_source(spec), tol, sc["step"],
                              spec.run["mode"], st["seed"], st["samples"], threads, st["budget"], trace_from=floor)
        converged = True
    except NonConvergenceError as exc:
        est, converged = exc.estimate, False
    oracle = _oracle(spec, st["budget"])
    from .pressure_lab import ConvergenceSeries
    trace = ConvergenceSeries("cavity_trace", "", f"ball depth (step {sc['step']})")
    for d, v in est.trace:
        trace.append(d, v)
    ok = converged
    msg = f"Cauchy defect {est.cauchy_defect:.3g}"
    if oracle is not None:
        o = oracle["interval"]
        dist = max(0.0, o.lo - est.interval.hi, est.interval.lo - o.hi)
        ok = ok and dist <= tol
        msg += f", distance to {oracle['kind']} {dist:.3g}"
    results = {"series": [_series_table(trace)], "estimate": est.to_json(), "oracle": _oracle_json(oracle),
               "measure": nu.to_json(), "converged": converged}
    return results, ok, msg, tol


def cmd_smb(spec, st, threads):
    from .measures import sample_point
    from .pressure_lab import ergodic_average, smb_ratio_series
    tol = _require_tol(st)
    sc = spec.schedule
    sched = spec.folner()
    nu = spec.measure(st["measure"], seed=st["seed"])
    oracle = _oracle(spec, st["budget"])
    pressure = None if oracle is None else oracle["interval"].mid
    phi = spec.phi
    support = tuple(sorted(phi.coset_support()))
    region = set(sched.T(sc["n_max"]))
    for h in sched.F(sc["n_max"]):
        region |= spec.group.right_mul(support, h)
    x = sample_point(nu, region, st["seed"])
    smb = smb_ratio_series(nu, x, sched, sc["n_max"], phi if pressure is not None else None, pressure, sc["n_min"])
    erg = ergodic_average(phi.phi_K, support, x, sched, sc["n_max"], sc["n_min"])
    series = [smb, erg]
    if pressure is not None:
        from .pressure_lab import ConvergenceSeries
        gap = ConvergenceSeries("smb_minus_prediction", "", sched.name)
        for e in smb.entries:
            gap.append(e.n, abs(e.value.mid - dict(e.extra)["prediction"]), e.h_count)
        series.append(gap)
        g_last = gap.last.hi
        ok, msg = g_last <= tol, f"|SMB - prediction| = {g_last:.3g} at n={gap.ns[-1]}"
    else:
        ok, msg = True, "no pressure oracle; ratios reported only"
    results = {"series": [_series_table(s) for s in series], "oracle": _oracle_json(oracle),
               "measure": nu.to_json(), "point": [[list(g.lattice), g.coset, v] for g, v in x.items]}
    return results, ok, msg, tol


def cmd_decompose(spec, st, threads):
    from .group_core import FolnerSchedule
    from .pressure_lab import ConvergenceSeries, decomposition_sweep, with_partition
    tol = _require_tol(st)
    sc = spec.schedule
    mu = spec.measure(st["measure"], seed=st["seed"])
    if not getattr(mu, "exact", False):
        raise PreconditionError("the decomposition check needs an exact oracle")
    sched = spec.folner()
    single = None
    if spec.group.n_blocks > 1:
        single = FolnerSchedule(with_partition(spec.group, [tuple(range(spec.group.index))]), sc["shape"])
    ns = list(range(max(sc["n_min"], 1), sc["n_max"] + 1))
    if not ns:
        raise PreconditionError("empty schedule: n_max must be >= 1")

    def run(n):
        worst, totals = decomposition_sweep(mu, spec.sft, sched, n)
        agree = 0.0
        if single is not None:
            w1, t1 = decomposition_sweep(mu, spec.sft, single, n)
            worst = max(worst, w1)
            agree = max((abs(a - b) for a, b in zip(totals, t1)), default=0.0)
        return worst, agree, len(totals)

    out = ordered_map(run, ns, threads)
    res = ConvergenceSeries("decomposition_residual", "", sched.name)
    agr = ConvergenceSeries("partition_agreement", "", sched.name)
    for n, (w, a, c) in zip(ns, out):
        res.append(n, w, c)
        agr.append(n, a, c)
    worst = max(max(w, a) for w, a, _ in out)
    series = [res] + ([agr] if single is not None else [])
    results = {"series": [_series_table(s) for s in series], "measure": mu.to_json(),
               "worst_residual": worst, "cylinders": sum(c for _, _, c in out)}
    return results, worst <= tol, f"worst residual {worst:.3g}", tol


def cmd_check(spec, st, threads):
    from .group_core import folner_defect, tempered_constant
    from .pressure_lab import ConvergenceSeries
    from .subshift import condition_d_check, safe_symbol, tssm_gap_check
    sc = spec.schedule
    g = spec.group
    sched = spec.folner()
    n_max = max(sc["n_max"], 2)
    folner = {}
    series = []
    for gen in g.generators:
        s = ConvergenceSeries(f"folner_defect_{list(gen.lattice)}@{g.labels[gen.coset]}", "", sched.name)
        for n in range(1, n_max + 1):
            s.append(n, float(folner_defect(sched, n, gen)), len(sched.F(n)))
        folner[s.estimator] = max(n * e.value.hi for n, e in zip(s.ns, s.entries))
        series.append(s)
    tempered = tempered_constant(sched, n_max)
    sym = safe_symbol(spec.sft)
    n_d = min(n_max, 4)
    T = sched.T(n_d)
    collar = sc["collar"] or max(spec.sft.range, 1)
    d = condition_d_check(spec.sft, T, T | g.collar(T, collar), mode="auto", budget=st["budget"])
    tssm = tssm_gap_check(spec.sft, sc["tssm_gap"])
    ok = bool(d) and bool(tssm)
    sym_text = "none" if sym is None else spec.sft.alphabet.symbols[sym]
    msg = (f"safe symbol {sym_text}, condition (D) {'pass' if d else 'fail'}, "
           f"TSSM(g={sc['tssm_gap']}) {'pass' if tssm else 'fail'}, tempered {float(tempered):.4g}")
    results = {
        "series": [_series_table(s) for s in series],
        "folner_constants": {k: _num(v) for k, v in sorted(folner.items())},
        "tempered_constant": {"value": float(tempered), "fraction": str(tempered), "N": n_max},
        "safe_symbol": sym_text,
        "condition_d": {"ok": bool(d), "n": n_d, "collar": collar, "checked": d.checked, "note": d.note},
        "tssm": {"ok": bool(tssm), "gap": sc["tssm_gap"], "checked": tssm.checked, "note": tssm.note,
                 "witness": None if tssm.witness is None else str(tssm.witness)},
    }
    return results, ok, msg, None


def cmd_entropy(spec, st, threads):
    from .pressure_lab import ConvergenceSeries, entropy_decomposition, variational_gap
    tol = _require_tol(st)
    sc = spec.schedule
    nu = spec.measure(st["measure"], seed=st["seed"])
    depths = list(range(0, sc["depth"] + 1))
    values = ordered_map(lambda d: entropy_decomposition(nu, spec.group, d), depths, threads)
    s = ConvergenceSeries("entropy_decomposition", "", "ball depth")
    for d, v in zip(depths, values):
        s.append(d, v)
    oracle = _oracle(spec, st["budget"])
    if oracle is None:
        raise PreconditionError("the variational gap needs a pressure oracle (rank one or isotropic Z^2)")
    o = oracle["interval"]
    gap_lo = variational_gap(spec.phi, spec.sft, nu, o.lo)
    gap_hi = variational_gap(spec.phi, spec.sft, nu, o.hi)
    gap = Interval(min(gap_lo.lo, gap_hi.lo), max(gap_lo.hi, gap_hi.hi), max(gap_lo.stderr, gap_hi.stderr))
    h = nu.entropy_per_site()
    ok = gap.hi >= -tol
    msg = f"variational gap [{gap.lo:.3g}, {gap.hi:.3g}] >= -tol"
    results = {"series": [_series_table(s)], "gap": gap.to_json(), "entropy": _num(h),
               "oracle": _oracle_json(oracle), "measure": nu.to_json()}
    return results, ok, msg, tol


COMMANDS = {"pressure": cmd_pressure, "cavity": cmd_cavity, "smb": cmd_smb, "decompose": cmd_decompose,
            "check": cmd_check, "entropy": cmd_entropy}


# -- running and output ---------------------------------------------------------------------

def compute(recipe: dict) -> dict:
    """Deterministic result document for a recipe (also used to verify cache entries)."""
    from .modelspec import loads
    from .pressure_lab import model_hash
    spec = loads(recipe["spec_text"], recipe.get("spec_name"))
    args = argparse.Namespace(seed=recipe["seed"], budget=recipe["budget"], tol=recipe["tol"],
                              measure=recipe.get("measure"))
    st = _settings(spec, args, recipe["command"])
    results, ok, msg, tol = COMMANDS[recipe["command"]](spec, st, recipe.get("threads", 1))
    return {
        "command": recipe["command"],
        "model_hash": model_hash(spec.sft, spec.phi),
        "spec_hash": spec.content_hash,
        "group": spec.group.describe(),
        "settings": st,
        "results": results,
        "verdict": {"pass": bool(ok), "message": msg, "tol": tol},
        "version": __version__,
    }


def _write_outputs(doc: dict, out: Path, plot: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cmd = doc["command"]
    stamped = dict(doc)
    stamped["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    (out / f"{cmd}.json").write_text(json.dumps(stamped, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    tables = []
    for k, table in enumerate(doc["results"].get("series", [])):
        name = f"{cmd}.csv" if k == 0 else f"{cmd}_{table['estimator']}.csv"
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "h_count", "lo", "hi", "model_hash"])
            for n, hc, lo, hi, _ in table["rows"]:
                w.writerow([n, hc, repr(lo), repr(hi), doc["model_hash"]])
        rows = [r for r in table["rows"] if r[2] is not None and r[3] is not None]
        tables.append({"label": table["estimator"], "n": [r[0] for r in rows], "lo": [r[2] for r in rows],
                       "hi": [r[3] for r in rows]})
    if plot and tables:
        from .plotting import plot_tables
        ref = None
        o = doc["results"].get("oracle")
        if o and o.get("lo") is not None and cmd in ("pressure", "cavity"):
            ref = (o["kind"], o["lo"], o["hi"])
        logy = cmd in ("decompose", "check")
        plot_tables(out / f"{cmd}.png", tables[:5], title=f"{cmd} ({doc['model_hash']})", reference=ref,
                    logy=logy)


def run_command(args) -> int:
    from .modelspec import load
    spec = load(args.spec)
    st = _settings(spec, args, args.command)
    threads = args.threads if args.threads is not None else spec.run["threads"]
    recipe = {"command": args.command, "spec_text": spec.text, "spec_name": Path(args.spec).name,
              "seed": st["seed"], "budget": st["budget"], "tol": st["tol"], "measure": st["measure"]}
    cache_dir = Path(args.cache) if args.cache else default_dir()
    cache = ResultCache(cache_dir) if cache_dir and not args.no_cache else None
    doc = cache.get(recipe) if cache else None
    if doc is None:
        doc = compute(dict(recipe, threads=threads))
        if cache:
            cache.put(recipe, doc)
    out = Path(args.out or spec.run["out"] or "results")
    _write_outputs(doc, out, not args.no_plot)
    v = doc["verdict"]
    tol = "" if v["tol"] is None else f" (tol={v['tol']:g})"
    print(f"{args.command}: {'PASS' if v['pass'] else 'FAIL'} {v['message']}{tol}")
    return EXIT_OK if v["pass"] else EXIT_TOLERANCE


def run_cache(args) -> int:
    d = Path(args.dir) if args.dir else default_dir()
    if d is None:
        raise PreconditionError("no cache directory (--dir or CAVITYPRESS_CACHE)")
    if not d.is_dir():
        raise PreconditionError(f"cache directory {d} does not exist")
    cache = ResultCache(d)
    if args.action == "stats":
        print(json.dumps(cache.stats(), sort_keys=True))
        return EXIT_OK
    if args.action == "gc":
        removed = cache.gc(args.max_age_days * 86400.0)
        print(f"cache gc: removed {removed} entries older than {args.max_age_days:g} days")
        return EXIT_OK
    rep = cache.verify(compute, args.fraction, args.seed or 0)
    bad = sorted(set(rep.corrupt) | set(rep.mismatches))
    print(f"cache verify: {rep.checked} entries, {rep.recomputed} recomputed, {len(rep.corrupt)} corrupt, "
          f"{len(rep.mismatches)} mismatched" + (f": {' '.join(bad)}" if bad else ""))
    return EXIT_OK if rep.ok else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavitypress", description="Pressure and cavity estimators for G-subshifts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUN_COMMANDS:
        s = sub.add_parser(name, help=f"run the {name} estimators")
        s.add_argument("--spec", required=True, help="model file")
        s.add_argument("--out", help="output directory (default: run.out or ./results)")
        s.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
        s.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
        s.add_argument("--budget", type=int, help="state budget for exact sweeps")
        s.add_argument("--tol", type=float, help="controlling tolerance (overrides run.tol)")
        s.add_argument("--measure", help="measure name (overrides run.measure)")
        s.add_argument("--cache", help="cache directory (default: $CAVITYPRESS_CACHE)")
        s.add_argument("--no-cache", action="store_true", help="ignore the cache")
        s.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    c = sub.add_parser("cache", help="inspect or maintain the result cache")
    c.add_argument("action", choices=("verify", "gc", "stats"))
    c.add_argument("--dir", help="cache directory (default: $CAVITYPRESS_CACHE)")
    c.add_argument("--fraction", type=float, default=0.01, help="share of entries recomputed by verify")
    c.add_argument("--max-age-days", type=float, default=30.0, help="gc threshold")
    c.add_argument("--seed", type=int, default=0, help="seed for choosing entries to recompute")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cache":
            return run_cache(args)
        return run_command(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ResourceBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
