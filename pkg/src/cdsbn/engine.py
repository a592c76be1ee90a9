"""Snapshot and continuous community queries, plus the decomposition baseline.

A community query is answered per center: the result for center u is fully
determined by the weighted 2r-hop neighbourhood of u (keywords are static).
Snapshot queries walk the synopsis best-first and extract at every center
that survives the screens.  Continuous queries keep the per-center results
and, after each slide, re-extract exactly the centers whose 2r-hop
neighbourhood could have changed: users within 2r-1 hops of the updated
item, measured in the state where the updated edge exists.
"""
from __future__ import annotations

import heapq
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bitruss import Community, QuerySpec, bitruss_numbers, maximal_bitruss
from .graph import StreamingGraph, SubgraphView, item, layered_bfs
from .motifs import AuxStore
from .pruning import PruneConfig, PruneReport, QueryCore, candidate_view, screen_candidate
from .synopsis import Synopsis, entry_prunable

INF = float("inf")

# screens that depend only on the core, hop distances and keywords
VIEW_KEY_CFG = PruneConfig.only(1, 4, 9)


@dataclass
class ResultSet:
    spec: QuerySpec
    as_of: int
    communities: dict = field(default_factory=dict)  # signature -> Community

    def signatures(self):
        return frozenset(self.communities)

    def __len__(self):
        return len(self.communities)

    def same(self, other) -> bool:
        return self.signatures() == other.signatures()

    def records(self):
        return [self.communities[s].record() for s in sorted(self.communities,
                key=lambda s: (self.communities[s].center, s))]


def summary_line(tick, spec, n, wall_ms):
    return f"# tick={tick} spec=[{spec.summary()}] |R|={n} wall_ms={wall_ms:.3f}"


def collapse(per_center: dict) -> dict:
    """signature -> Community, the representative being the smallest center."""
    out = {}
    for c in sorted(per_center):
        comm = per_center[c]
        if comm is not None and comm.signature not in out:
            out[comm.signature] = comm
    return out


def extract_center(g, aux, spec, center, cfg=PruneConfig(), report=None, core=None):
    view = screen_candidate(g, aux, spec, center, cfg, report, core)
    if view is None:
        return None
    if report is not None:
        report.extracted += 1
    comm = maximal_bitruss(view, spec, center, g.item_attrs, copy=False)
    if comm is not None and report is not None:
        report.survived += 1
    return comm


def _extract_many(g, aux, spec, centers, cfg, report, workers, core=None):
    centers = sorted(centers)
    if workers <= 1 or len(centers) < 2:
        return {c: extract_center(g, aux, spec, c, cfg, report, core) for c in centers}
    reports = [PruneReport() for _ in centers] if report is not None else [None] * len(centers)
    with ThreadPoolExecutor(max_workers=min(workers, len(centers))) as pool:
        found = list(pool.map(lambda i: extract_center(g, aux, spec, centers[i], cfg, reports[i],
                                                       core), range(len(centers))))
    if report is not None:
        for r in reports:
            report.merge(r)
    return dict(zip(centers, found))


def candidate_centers(g, syn, spec, cfg=PruneConfig(), report=None):
    """Users reached by the best-first synopsis walk (all users without a synopsis)."""
    if syn is None:
        return sorted(g.user_adj)
    lemmas = cfg.lemmas & {6, 7, 8}
    heap = [(-INF, syn.root)]
    out = []
    while heap:
        key, nid = heapq.heappop(heap)
        if cfg.early_stop and -key < spec.sigma:
            if report is not None:
                report.early_stopped += _count_users(syn, nid) + sum(_count_users(syn, n) for _, n in heap)
            break
        node = syn.nodes[nid]
        if node.leaf:
            for u in node.entries:
                lemma = entry_prunable(syn.user_agg[u], spec, lemmas)
                if lemma is not None:
                    if report is not None:
                        report.pruned_candidates[lemma] += 1
                    continue
                out.append(u)
            continue
        for c in node.entries:
            child = syn.nodes[c]
            lemma = entry_prunable(child.agg, spec, lemmas)
            if lemma is not None:
                if report is not None:
                    report.pruned_entries[lemma] += 1
                    report.pruned_candidates[lemma] += _count_users(syn, c)
                continue
            heapq.heappush(heap, (-child.agg.score[spec.r - 1], c))
    return out


def _count_users(syn, nid):
    node = syn.nodes[nid]
    if node.leaf:
        return len(node.entries)
    return sum(_count_users(syn, c) for c in node.entries)


def make_core(g, aux, spec, cfg):
    return QueryCore(g, aux, spec) if cfg.on(9) else None


def snapshot_per_center(g, syn, aux, spec, cfg=PruneConfig(), report=None, workers=1, core=None):
    if core is None:
        core = make_core(g, aux, spec, cfg)
    centers = candidate_centers(g, syn, spec, cfg, report)
    if core is not None:
        kept = [c for c in centers if c in core]
        if report is not None:
            report.pruned_candidates[9] += len(centers) - len(kept)
        centers = kept
    return _extract_many(g, aux, spec, centers, cfg, report, workers, core)


def snapshot_query(g, syn, aux, spec, cfg=PruneConfig(), report=None, workers=1) -> ResultSet:
    per_center = snapshot_per_center(g, syn, aux, spec, cfg, report, workers)
    return ResultSet(spec, g.tick, collapse(per_center))


class _EdgeSet:
    """Minimal core stand-in for candidate_view: a fixed subgraph."""

    def __init__(self, view):
        self.view = view

    def __contains__(self, u):
        return bool(self.view.user_adj.get(u))


def bbd_baseline(g, spec, workers=1) -> ResultSet:
    """Global bitruss decomposition, then extraction at every user touching a
    keyword-matching edge whose bitruss number reaches k, searching only
    those edges.  Slow on purpose: it recomputes the decomposition over the
    whole graph every time."""
    truss = bitruss_numbers(g)
    attrs = g.item_attrs
    strong = SubgraphView()
    for (u, v), t in truss.items():
        if t >= spec.k and spec.matches_item(v, attrs):
            strong.add_edge(u, v, g.user_adj[u][v])
    edges = _EdgeSet(strong)
    centers = sorted(strong.user_adj)

    def run(c):
        view = candidate_view(g, None, spec, c, VIEW_KEY_CFG, core=edges)
        return maximal_bitruss(view, spec, c, attrs, copy=False)

    if workers > 1 and len(centers) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(centers))) as pool:
            found = dict(zip(centers, pool.map(run, centers)))
    else:
        found = {c: run(c) for c in centers}
    return ResultSet(spec, g.tick, collapse(found))


def touched_centers(g, delta, r, removed=False):
    """Users whose 2r-hop neighbourhood contains the edge of `delta`."""
    extra = (delta.user, delta.item) if removed else None
    du, _ = layered_bfs(g.user_adj, g.item_adj, item(delta.item), 2 * r - 1, extra)
    return set(du)


class ContinuousState:
    """Per-center results of one registered query."""

    def __init__(self, spec: QuerySpec, cfg: PruneConfig):
        self.spec, self.cfg = spec, cfg
        self.by_center: dict[int, Community] = {}
        self.producers: dict[str, set] = {}
        self.as_of = 0
        self.report = PruneReport()
        self.core = None  # QueryCore when the core screen is on
        self.view_keys: dict[int, frozenset] = {}  # center -> edges of its keyed view

    def set(self, center, comm):
        old = self.by_center.pop(center, None)
        if old is not None:
            prod = self.producers[old.signature]
            prod.discard(center)
            if not prod:
                del self.producers[old.signature]
        if comm is not None:
            self.by_center[center] = comm
            self.producers.setdefault(comm.signature, set()).add(center)

    def containing(self, u, v):
        """Centers whose current community holds edge (u, v)."""
        out = set()
        for c, comm in self.by_center.items():
            if u in comm.users and v in comm.items:
                out.add(c)
        return out

    def result_set(self) -> ResultSet:
        comms = {}
        for sig, prod in self.producers.items():
            c = min(prod)
            comms[sig] = self.by_center[c]
        return ResultSet(self.spec, self.as_of, comms)


def view_key(g, aux, spec, center, core):
    """Edges of the center's candidate under the aux-free screens.  Extraction
    gives the same community on any sound narrowing of the hop, so an
    unchanged key means an unchanged result."""
    return frozenset(candidate_view(g, aux, spec, center, VIEW_KEY_CFG, core=core).edges())


def continuous_step(state: ContinuousState, g, aux, expired=(), inserted=(), workers=1):
    """Refresh `state` after a slide.

    `expired` and `inserted` are sets of centers touched by the expiration and
    insertion deltas (see touched_centers).  The expire phase re-extracts every
    center whose community held the expired edge together with every other
    touched center; the insert phase extracts around every user near the new
    edge.  A center is extracted at most once per step.
    """
    spec, cfg = state.spec, state.cfg
    todo = set(expired) | set(inserted)
    if state.core is not None:
        # centers outside the query core cannot hold a community
        outside = {c for c in todo if c not in state.core}
        for c in outside:
            state.set(c, None)
            state.view_keys.pop(c, None)
        state.report.pruned_candidates[9] += len(outside)
        todo -= outside
        # centers whose keyed view did not move keep their community
        same = set()
        for c in todo:
            key = view_key(g, aux, spec, c, state.core)
            if state.view_keys.get(c) == key:
                same.add(c)
            else:
                state.view_keys[c] = key
        state.report.reused += len(same)
        todo -= same
    if todo:
        found = _extract_many(g, aux, spec, todo, cfg, state.report, workers, state.core)
        for c, comm in found.items():
            state.set(c, comm)
    state.as_of = g.tick
    return state.result_set()


class Engine:
    """Graph, auxiliary scores, optional synopsis and registered queries."""

    def __init__(self, graph: StreamingGraph, *, gamma=32, r_max=3, synopsis=True, workers=1):
        self.graph = graph
        self.aux = AuxStore.build(graph)
        self.gamma, self.r_max = gamma, r_max
        self.syn = Synopsis.build(graph, self.aux, gamma, r_max) if synopsis else None
        self.workers = workers
        self.queries: dict[QuerySpec, ContinuousState] = {}
        self.timings = {"graph": 0.0, "aux": 0.0, "synopsis": 0.0, "core": 0.0, "continuous": 0.0}

    # -- updates --------------------------------------------------------------
    def _apply(self, delta, removed, touched):
        t0 = time.perf_counter()
        self.aux.maintain(self.graph, delta)
        t1 = time.perf_counter()
        if self.syn is not None:
            self.syn.maintain(self.graph, self.aux, delta)
        t2 = time.perf_counter()
        for state in self.queries.values():
            if state.core is not None:
                state.core.update(self.graph, self.aux, delta)
        t3 = time.perf_counter()
        if self.queries:
            rmax = max(spec.r for spec in self.queries)
            extra = (delta.user, delta.item) if removed else None
            du, _ = layered_bfs(self.graph.user_adj, self.graph.item_adj, item(delta.item),
                                2 * rmax - 1, extra)
            for spec in self.queries:
                lim = 2 * spec.r - 1
                touched[spec] |= {u for u, d in du.items() if d <= lim}
        self.timings["aux"] += t1 - t0
        self.timings["synopsis"] += t2 - t1
        self.timings["core"] += t3 - t2

    def slide(self, p):
        """Insert p, evict the oldest item if the window overflows, and
        refresh every registered query.  Returns (insert delta, expire delta)."""
        g = self.graph
        t0 = time.perf_counter()
        ins_touch = {spec: set() for spec in self.queries}
        exp_touch = {spec: set() for spec in self.queries}
        ins = g.apply_insert(p)
        self.timings["graph"] += time.perf_counter() - t0
        self._apply(ins, False, ins_touch)
        exp = None
        if len(g.window) > g.window.capacity:
            t0 = time.perf_counter()
            exp = g.apply_expire(g.window.head())
            self.timings["graph"] += time.perf_counter() - t0
            self._apply(exp, exp.removed, exp_touch)
        t0 = time.perf_counter()
        for spec, state in self.queries.items():
            if exp is not None:
                # communities holding the expired edge are refreshed first
                exp_touch[spec] |= state.containing(exp.user, exp.item)
            continuous_step(state, g, self.aux, exp_touch[spec], ins_touch[spec], self.workers)
        self.timings["continuous"] += time.perf_counter() - t0
        return ins, exp

    # -- queries ----------------------------------------------------------------
    def _check_radius(self, spec):
        if self.syn is not None and spec.r > self.r_max:
            raise ValueError(f"query radius {spec.r} exceeds synopsis r_max {self.r_max}")

    def snapshot(self, spec, cfg=PruneConfig(), report=None) -> ResultSet:
        self._check_radius(spec)
        return snapshot_query(self.graph, self.syn, self.aux, spec, cfg, report, self.workers)

    def bbd(self, spec) -> ResultSet:
        return bbd_baseline(self.graph, spec, self.workers)

    def register(self, spec, cfg=PruneConfig()) -> ResultSet:
        if spec not in self.queries:
            self._check_radius(spec)
            state = ContinuousState(spec, cfg)
            state.core = make_core(self.graph, self.aux, spec, cfg)
            for c, comm in snapshot_per_center(self.graph, self.syn, self.aux, spec, cfg,
                                               state.report, self.workers, state.core).items():
                state.set(c, comm)
            if state.core is not None:
                for c in state.core.view.user_adj:
                    state.view_keys[c] = view_key(self.graph, self.aux, spec, c, state.core)
            state.as_of = self.graph.tick
            self.queries[spec] = state
        return self.queries[spec].result_set()

    def unregister(self, spec):
        self.queries.pop(spec, None)

    def results(self, spec) -> ResultSet:
        return self.queries[spec].result_set()

    def rebuild_synopsis(self):
        self.syn = Synopsis.build(self.graph, self.aux, self.gamma, self.r_max)
        return self.syn

    def compact(self):
        self.graph.compact()
        if self.syn is not None:
            self.rebuild_synopsis()
        for spec, state in self.queries.items():
            for c in [c for c in state.by_center if c not in self.graph.user_adj]:
                state.set(c, None)
