"""Timing sweeps, pruning ablation and trend verdicts (CSV out)."""
from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field

from scipy.stats import spearmanr

from .bitruss import QuerySpec
from .engine import Engine, bbd_baseline, candidate_centers
from .pruning import LEMMA_NAMES, PruneConfig, PruneReport, screen_candidate
from .workload import GenConfig, build_graph, gen_queries, generate_workload, stream_items

SCHEMA = 1

# ablation groups: support only, + score, + keyword.  Every group searches
# within the radius (4); that rule only narrows the search, it never counts
# a pruned candidate.
ABLATION_GROUPS = {
    "support": PruneConfig.only(4, 2, 7),
    "support+score": PruneConfig.only(4, 2, 7, 5, 8, early_stop=True),
    "support+score+keyword": PruneConfig.only(4, 2, 7, 5, 8, 1, 6, early_stop=True),
}

# expected direction of continuous wall time as each parameter grows
TREND_SIGNS = {
    "s": +1, "k": -1, "r": +1, "sigma": -1, "q": +1, "domain": -1,
    "kw_per_item": +1, "max_w": +1, "n_items": -1, "n_users": +1,
}
# the sweeps whose direction is asserted by the acceptance suite
ASSERTED_TRENDS = ("s", "k", "sigma", "q", "kw_per_item", "n_items", "n_users")


@dataclass
class BenchRecord:
    dataset: str
    spec: str
    phase: str  # init | slide | snapshot | continuous | bbd
    wall_ms: float
    n_results: int = 0
    counters: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def row(self):
        out = {"dataset": self.dataset, "spec": self.spec, "phase": self.phase,
               "wall_ms": round(self.wall_ms, 4), "n_results": self.n_results}
        out.update(self.extra)
        out.update(self.counters)
        return out


def write_csv(rows, fh=None):
    """Rows (dicts) as CSV preceded by a `# schema=N` line.  Returns the text."""
    rows = [r.row() if isinstance(r, BenchRecord) else r for r in rows]
    cols = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- one measured run ---------------------------------------------------------

@dataclass
class RunParams:
    s: int = 500
    k: int = 4
    r: int = 2
    sigma: int = 3
    q: int = 5
    n_queries: int = 1
    slides: int = 100
    workers: int = 1


def prepare(cfg: GenConfig, rp: RunParams):
    """Engine with the window warmed up, the query specs and the unused stream."""
    wl = generate_workload(cfg)
    g = build_graph(wl.edges, wl.keywords, rp.s)
    eng = Engine(g, synopsis=False, workers=rp.workers)
    items = stream_items(wl.stream)
    warm = min(rp.s, max(0, len(items) - rp.slides))
    for p in items[:warm]:
        eng.slide(p)
    specs = gen_queries(g, rp.n_queries, rp.q, seed=cfg.seed, k=rp.k, r=rp.r, sigma=rp.sigma)
    return eng, specs, items[warm:]


def measure_continuous(cfg: GenConfig, rp: RunParams, with_bbd=0):
    """Mean per-slide ms of the continuous path (and optionally of the baseline)."""
    eng, specs, rest = prepare(cfg, rp)
    for spec in specs:
        eng.register(spec)
    times = []
    for p in rest[:rp.slides]:
        t0 = time.perf_counter()
        eng.slide(p)
        times.append((time.perf_counter() - t0) * 1000)
    out = {"continuous_ms": statistics.fmean(times) if times else 0.0,
           "continuous_median_ms": statistics.median(times) if times else 0.0,
           "slides": len(times),
           "n_results": sum(len(eng.results(s)) for s in specs)}
    if with_bbd:
        bt = []
        for p in rest[rp.slides:rp.slides + with_bbd]:
            t0 = time.perf_counter()
            eng.graph.slide(p)
            for spec in specs:
                bbd_baseline(eng.graph, spec)
            bt.append((time.perf_counter() - t0) * 1000)
        out["bbd_median_ms"] = statistics.median(bt) if bt else 0.0
    return out


def apply_param(cfg: GenConfig, rp: RunParams, name, value):
    """Return (cfg, rp) with one sweep parameter set."""
    from dataclasses import replace
    if name in ("s", "k", "r", "sigma", "q"):
        return cfg, replace(rp, **{name: value})
    key = {"domain": "keyword_domain", "kw_per_item": "keywords_per_item",
           "n_items": "n_items", "n_users": "n_users", "max_w": "max_w"}.get(name)
    if key is None:
        raise ValueError(f"unknown sweep parameter {name!r}")
    return cfg.with_(**{key: value}), rp


def run_bench(cfg: GenConfig, rp: RunParams, vary, values, runs=1, dataset="synthetic"):
    """One row per value, averaged over `runs` seeds."""
    rows = []
    for val in values:
        ms, res = [], []
        for i in range(runs):
            c, p = apply_param(cfg.with_(seed=cfg.seed + i), rp, vary, val)
            m = measure_continuous(c, p)
            ms.append(m["continuous_ms"])
            res.append(m["n_results"])
        rows.append(BenchRecord(dataset, f"{vary}={val}", "continuous", statistics.fmean(ms),
                                round(statistics.fmean(res)), extra={"vary": vary, "value": val,
                                                                   "runs": runs}))
    return rows


# -- ablation -------------------------------------------------------------------

def run_ablation(engine: Engine, specs, dataset="dataset", extract=False):
    """Pruned-candidate counts for the three stacked pruning groups.

    The counts come from screening alone; `extracted` is the number of
    candidates left for peeling.  With `extract` those are peeled too and
    `n_results` counts the distinct communities found.
    """
    if engine.syn is None:
        engine.rebuild_synopsis()
    g, aux = engine.graph, engine.aux
    rows = []
    for name, cfg in ABLATION_GROUPS.items():
        rep = PruneReport()
        sigs = set()
        for spec in specs:
            if extract:
                sigs |= engine.snapshot(spec, cfg, rep).signatures()
                continue
            for c in candidate_centers(g, engine.syn, spec, cfg, rep):
                if screen_candidate(g, aux, spec, c, cfg, rep) is not None:
                    rep.extracted += 1
        rows.append({"dataset": dataset, "group": name, "pruned": rep.candidates_pruned,
                     "extracted": rep.extracted, "n_results": len(sigs) if extract else "",
                     **{f"cand_{LEMMA_NAMES[i]}": rep.pruned_candidates[i] for i in LEMMA_NAMES},
                     "early_stopped": rep.early_stopped})
    return rows


def ablation_monotone(rows) -> bool:
    counts = [r["pruned"] for r in rows]
    return all(a <= b for a, b in zip(counts, counts[1:]))


# -- trend suite --------------------------------------------------------------------

def trend_verdict(xs, ys, expected):
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        rho, p = 0.0, 1.0
    else:
        rho, p = spearmanr(xs, ys)
    ok = (rho > 0) == (expected > 0) and rho != 0 and p < 0.1
    return {"rho": round(float(rho), 4), "p": float(p), "expected": expected, "ok": bool(ok)}


def run_trend_suite(base: GenConfig, rp: RunParams, sweeps: dict, reps=3, log=None):
    """Sweep each parameter, time the continuous path, judge the trend sign.

    Repetition i uses seed base.seed + i for every value, so each value is
    measured on the same graphs and queries; the verdict is taken over the
    per-value means.  `sweeps` maps parameter name -> list of values.
    Returns (rows, verdicts).
    """
    rows, verdicts = [], {}
    for name, values in sweeps.items():
        means = []
        for val in values:
            ms = []
            for rep in range(reps):
                cfg, p = apply_param(base.with_(seed=base.seed + rep), rp, name, val)
                m = measure_continuous(cfg, p)
                ms.append(m["continuous_ms"])
                rows.append({"param": name, "value": val, "rep": rep,
                             "wall_ms": round(m["continuous_ms"], 4), "n_results": m["n_results"]})
                if log:
                    log(f"{name}={val} rep={rep} {m['continuous_ms']:.3f} ms |R|={m['n_results']}")
            means.append(statistics.fmean(ms))
        verdicts[name] = trend_verdict(list(values), means, TREND_SIGNS.get(name, +1))
        rows.append({"param": name, "value": "verdict", "rep": "",
                     "wall_ms": verdicts[name]["rho"], "n_results": verdicts[name]["ok"]})
    return rows, verdicts


def default_spec_list(g, n, rp: RunParams, seed=0):
    return gen_queries(g, n, rp.q, seed=seed, k=rp.k, r=rp.r, sigma=rp.sigma)


def spec_from_flags(keywords, k, r, sigma) -> QuerySpec:
    return QuerySpec(frozenset(keywords), k, r, sigma)
