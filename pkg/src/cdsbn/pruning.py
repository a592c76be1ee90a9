"""Community-level screens applied to a candidate before peeling.

Every screen only removes elements that cannot belong to the order-free
structural fixpoint of the extraction (or discards a candidate that cannot
yield any community), so enabling or disabling any of them never changes
the extracted result, only the amount of work.

Lemma numbering used for toggles and counters:
  1 keyword, 2 support bound, 3 layer size, 4 radius, 5 score bound,
  6 synopsis keyword bits, 7 synopsis support bound, 8 synopsis score bound,
  9 query core (see QueryCore).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

from .bitruss import QuerySpec, core_fixpoint, trim_radius
from .graph import SubgraphView, layered_bfs, user

LEMMA_NAMES = {
    1: "keyword", 2: "support", 3: "layer_size", 4: "radius", 5: "score",
    6: "syn_keyword", 7: "syn_support", 8: "syn_score", 9: "core",
}


@dataclass(frozen=True)
class PruneConfig:
    lemmas: frozenset = frozenset(range(1, 10))
    early_stop: bool = True  # stop the heap walk once the best key drops below sigma

    def on(self, lemma: int) -> bool:
        return lemma in self.lemmas

    @classmethod
    def all(cls):
        return cls()

    @classmethod
    def none(cls):
        return cls(frozenset(), early_stop=False)

    @classmethod
    def only(cls, *lemmas, early_stop=False):
        return cls(frozenset(lemmas), early_stop)

    def without(self, lemma: int):
        return replace(self, lemmas=self.lemmas - {lemma})


@dataclass
class PruneReport:
    pruned_items: Counter = field(default_factory=Counter)
    pruned_edges: Counter = field(default_factory=Counter)
    pruned_users: Counter = field(default_factory=Counter)
    pruned_candidates: Counter = field(default_factory=Counter)
    pruned_entries: Counter = field(default_factory=Counter)
    early_stopped: int = 0  # candidates never reached because of early termination
    extracted: int = 0  # candidates handed to the peeling step
    survived: int = 0  # candidates that produced a community
    reused: int = 0  # continuous centers whose keyed view was unchanged

    def merge(self, other: "PruneReport"):
        for name in ("pruned_items", "pruned_edges", "pruned_users",
                     "pruned_candidates", "pruned_entries"):
            getattr(self, name).update(getattr(other, name))
        self.early_stopped += other.early_stopped
        self.extracted += other.extracted
        self.survived += other.survived
        self.reused += other.reused

    @property
    def candidates_pruned(self) -> int:
        return sum(self.pruned_candidates.values()) + self.early_stopped

    def row(self):
        out = {"candidates_pruned": self.candidates_pruned, "extracted": self.extracted,
               "survived": self.survived, "early_stopped": self.early_stopped,
               "reused": self.reused}
        for i, name in LEMMA_NAMES.items():
            out[f"cand_{name}"] = self.pruned_candidates[i]
        for i in (1, 2, 5):
            name = LEMMA_NAMES[i]
            out[f"elem_{name}"] = self.pruned_items[i] + self.pruned_edges[i] + self.pruned_users[i]
        return out


def _tick(report, counter, lemma, n=1):
    if report is not None and n:
        getattr(report, counter)[lemma] += n


# -- view-to-view screens (in place; the view is returned for chaining) ----

def keyword_prune(view: SubgraphView, spec: QuerySpec, item_attrs, report=None):
    drop = [v for v in view.item_adj if not spec.matches_item(v, item_attrs)]
    for v in drop:
        view.remove_item(v)
    _tick(report, "pruned_items", 1, len(drop))
    return view


def support_prune(view: SubgraphView, k: int, aux, report=None):
    drop = [(u, v) for u, v, _ in view.edges() if aux.sup(u, v) < k]
    for u, v in drop:
        view.remove_edge(u, v)
    _tick(report, "pruned_edges", 2, len(drop))
    return view


def layer_size_prune(view: SubgraphView, k: int) -> bool:
    """True when the candidate is too small to hold any edge with k butterflies."""
    nu = sum(1 for nb in view.user_adj.values() if nb)
    nl = sum(1 for nb in view.item_adj.values() if nb)
    return max(nu - 1, 0) * max(nl - 1, 0) < k


def radius_prune(view: SubgraphView, center, r: int, report=None):
    before = len(view.user_adj)
    trim_radius(view, center, r)
    _tick(report, "pruned_users", 4, before - len(view.user_adj))
    return view


def score_ub_prune(view: SubgraphView, center, sigma, aux, report=None):
    """Drop users with no partner in the view whose global score reaches sigma.

    Returns None when the center itself has no such partner: any community
    needs the center in a butterfly with a partner scoring at least sigma,
    and global scores bound in-subgraph scores from above.
    """
    members = view.user_adj
    if center in members and not aux.has_partner_at_least(center, sigma, members):
        return None
    drop = [u for u in members if u != center and not aux.has_partner_at_least(u, sigma, members)]
    for u in drop:
        view.remove_user(u)
    _tick(report, "pruned_users", 5, len(drop))
    return view


# -- query core ----------------------------------------------------------------

class QueryCore:
    """Greatest keyword-matching subgraph of g in which every edge lies in at
    least k butterflies and every user has a partner scoring at least sigma,
    both counted inside it.

    Each rule only gets more violated as a subgraph shrinks, so every
    community of every center lies inside the core, and the structural
    fixpoint of a candidate is unchanged when the candidate is cut down to
    the core.  The core is kept current across slides: deltas on
    non-matching items, on edges with global support below k or on users
    without a strong global partner cannot change it; a shrinking edge only
    shrinks it (re-peel the old core); a growing edge forces a rebuild.
    """

    def __init__(self, g, aux, spec: QuerySpec):
        self.spec = spec
        self.rebuilds = 0
        self.view = self._build(g)

    def _build(self, g):
        spec = self.spec
        attrs = g.item_attrs
        view = SubgraphView({}, {})
        for v, nb in g.item_adj.items():
            if nb and spec.matches_item(v, attrs):
                for u, w in nb.items():
                    view.add_edge(u, v, w)
        self.rebuilds += 1
        return core_fixpoint(view, spec.k, spec.sigma)

    def __contains__(self, u):
        return bool(self.view.user_adj.get(u))

    def update(self, g, aux, delta) -> bool:
        """Bring the core up to date after `delta`. True if it may have changed."""
        spec = self.spec
        u, v, old, new = delta
        if old == new or not spec.matches_item(v, g.item_attrs):
            return False
        if new < old:
            if self.view.weight(u, v) == 0:
                return False  # the old core is still valid and nothing can join
            if new == 0:
                self.view.remove_edge(u, v)
            else:
                self.view.add_edge(u, v, new)
            core_fixpoint(self.view, spec.k, spec.sigma)
            return True
        # growth: a new member must be in a valid subgraph holding this edge
        if aux.sup(u, v) < spec.k or aux.best_score(u) < spec.sigma:
            if self.view.weight(u, v):
                self.view.add_edge(u, v, new)  # weight bump inside the core
            return bool(self.view.weight(u, v))
        self.view = self._build(g)
        return True


# -- candidate screening ----------------------------------------------------

def center_screen(g, aux, spec: QuerySpec, center, cfg: PruneConfig, core=None):
    """Cheap checks on the center alone. Returns the lemma that rejects it, or None."""
    if core is not None and cfg.on(9) and center not in core:
        return 9
    nb = g.user_adj.get(center, {})
    attrs = g.item_attrs
    if cfg.on(1):
        nb = [v for v in nb if spec.matches_item(v, attrs)]
        if not nb:
            return 1
    if cfg.on(2) and not any(aux.sup(center, v) >= spec.k for v in nb):
        return 2
    if cfg.on(5) and not aux.has_partner_at_least(center, spec.sigma):
        return 5
    return None


def candidate_view(g, aux, spec: QuerySpec, center, cfg: PruneConfig, report=None, core=None):
    """The 2r-hop candidate around `center`, with enabled screens applied.

    With the radius screen on, the breadth-first search itself skips pruned
    items, edges and users, so the candidate never grows past what the
    screens allow.  Items exactly one hop beyond the last user ring are kept
    only if they lie inside the plain 2r-hop neighbourhood.
    """
    k, r, sigma = spec.k, spec.r, spec.sigma
    use_core = core is not None and cfg.on(9)
    if not cfg.on(4):
        view = g.hop_subgraph(center, 2 * r)
        if use_core:
            cv = core.view
            for u, v, _ in list(view.edges()):
                if not cv.weight(u, v):
                    view.remove_edge(u, v)
        if cfg.on(1):
            keyword_prune(view, spec, g.item_attrs, report)
        if cfg.on(2):
            support_prune(view, k, aux, report)
        return view

    uadj, iadj, attrs = g.user_adj, g.item_adj, g.item_attrs
    if use_core:
        # the search runs inside the core; the full graph is only consulted
        # for hop distances of the outermost items
        uadj, iadj = core.view.user_adj, core.view.item_adj
    use_kw, use_sup, use_score = cfg.on(1), cfg.on(2), cfg.on(5)
    user_ok = {center: True}
    bad_items, bad_edges, bad_users = set(), set(), set()

    def ok_item(v):
        if not use_kw or spec.matches_item(v, attrs):
            return True
        bad_items.add(v)
        return False

    def ok_edge(u, v):
        if use_sup and aux.sup(u, v) < k:
            bad_edges.add((u, v))
            return False
        return True

    def ok_user(u):
        res = user_ok.get(u)
        if res is None:
            res = not use_score or aux.has_partner_at_least(u, sigma)
            user_ok[u] = res
            if not res:
                bad_users.add(u)
        return res

    du = {center: 0}
    dv = {}
    frontier = [center]
    for d in range(0, 2 * r, 2):
        ring = []
        for x in frontier:
            for y in uadj.get(x, ()):
                if y not in dv and ok_item(y) and ok_edge(x, y):
                    dv[y] = d + 1
                    ring.append(y)
        nxt = []
        for y in ring:
            for z in iadj[y]:
                if z not in du and ok_user(z) and ok_edge(z, y):
                    du[z] = d + 2
                    nxt.append(z)
        frontier = nxt
        if not frontier:
            break
    else:
        # users on the outermost ring may reach items at distance 2r+1 here,
        # which belong to the candidate only if some shorter path exists in g
        near = None
        for x in frontier:
            for y in uadj.get(x, ()):
                if y in dv or not ok_item(y) or not ok_edge(x, y):
                    continue
                if near is None:
                    near = layered_bfs(g.user_adj, g.item_adj, user(center), 2 * r - 2)[0]
                if any(z in near for z in g.item_adj[y]):
                    dv[y] = 2 * r + 1

    view = SubgraphView({u: {} for u in du}, {v: {} for v in dv})
    for u in du:
        out = view.user_adj[u]
        for v, w in uadj.get(u, {}).items():
            if v in dv and (not use_sup or aux.sup(u, v) >= k):
                out[v] = w
                view.item_adj[v][u] = w
    if report is not None:
        report.pruned_items[1] += len(bad_items)
        report.pruned_edges[2] += len(bad_edges)
        report.pruned_users[5] += len(bad_users)
    return view


def screen_candidate(g, aux, spec: QuerySpec, center, cfg: PruneConfig, report=None, core=None):
    """Candidate view ready for peeling, or None when a screen discards it."""
    lemma = center_screen(g, aux, spec, center, cfg, core)
    if lemma is not None:
        _tick(report, "pruned_candidates", lemma)
        return None
    view = candidate_view(g, aux, spec, center, cfg, report, core)
    if cfg.on(5):
        view = score_ub_prune(view, center, spec.sigma, aux, report)
        if view is None:
            _tick(report, "pruned_candidates", 5)
            return None
    if cfg.on(3) and layer_size_prune(view, spec.k):
        _tick(report, "pruned_candidates", 3)
        return None
    return view
