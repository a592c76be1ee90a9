"""(k, r, sigma)-bitruss extraction inside a candidate subgraph.

Extraction is a peeling loop in two layers.

The structural layer removes, until nothing changes:
  * edges in fewer than k butterflies of the current subgraph,
  * users farther than 2r hops from the center (or disconnected from it),
  * non-center users with no partner whose in-subgraph score reaches sigma.
Each of these rules only gets more violated as the subgraph shrinks, so the
layer converges to the same greatest subgraph whatever the removal order.

The score layer then looks for user pairs that share an item but score below
sigma inside the subgraph.  One user is removed per round (the partner when
the center is involved, otherwise the lowest summed score, ties by id) and the
structural layer runs again.  This step is not order-free, so it is done one
victim at a time by a fixed rule.

A greedy victim can turn out to be removable only because of later removals,
so a final step re-adds single peeled elements (users, items, edges, tried in
a fixed order) whenever the result stays valid.  Each pass walks the candidate
list once and passes repeat until one adds nothing.  The outcome is maximal: no
adjacent peeled element can be added back.  Candidates come from the
structural fixpoint, which contains every valid subgraph of the view.
"""
from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from .graph import DEFAULT_BITS, EMPTY_ATTRS, SubgraphView, keyword_bitvec, layered_bfs, user
from .motifs import common_counts, edge_supports, pair_key, pair_stats, subgraph_edge_support


@dataclass(frozen=True)
class QuerySpec:
    keywords: frozenset
    k: int
    r: int
    sigma: int
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        object.__setattr__(self, "keywords", frozenset(self.keywords))
        if not self.keywords:
            raise ValueError("query keyword set must be nonempty")
        if self.k < 1 or self.r < 1:
            raise ValueError("k and r must be positive")

    @cached_property
    def qbv(self) -> int:
        return keyword_bitvec(self.keywords, self.bits)

    @cached_property
    def q_digest(self) -> str:
        h = hashlib.sha256("\x1f".join(sorted(self.keywords)).encode()).hexdigest()
        return h[:12]

    def matches(self, attrs) -> bool:
        # bit pretest first, exact set confirm second
        return bool(attrs.bitvec & self.qbv) and not attrs.keywords.isdisjoint(self.keywords)

    @cached_property
    def _item_memo(self) -> dict:
        return {}

    def matches_item(self, v, item_attrs) -> bool:
        """matches() for item v, memoised per item (keyed on the attrs object)."""
        a = item_attrs.get(v, EMPTY_ATTRS)
        hit = self._item_memo.get(v)
        if hit is not None and hit[0] is a:
            return hit[1]
        res = self.matches(a)
        self._item_memo[v] = (a, res)
        return res

    def summary(self):
        q = ",".join(sorted(self.keywords))
        return f"Q={{{q}}} k={self.k} r={self.r} sigma={self.sigma}"


def signature_of(users, items, edges) -> str:
    h = hashlib.sha256()
    h.update(("U" + ",".join(map(str, sorted(users)))).encode())
    h.update(("L" + ",".join(map(str, sorted(items)))).encode())
    h.update(("E" + ";".join(f"{u}-{v}:{w}" for u, v, w in sorted(edges))).encode())
    return h.hexdigest()[:32]


@dataclass(frozen=True)
class Community:
    center: int
    users: frozenset
    items: frozenset
    edges: frozenset  # (u, v, w)
    params: tuple  # (k, r, sigma, q_digest)
    signature: str = field(default="", compare=False)

    @classmethod
    def from_view(cls, view: SubgraphView, center, spec: QuerySpec):
        users = frozenset(u for u, nb in view.user_adj.items() if nb)
        items = frozenset(v for v, nb in view.item_adj.items() if nb)
        edges = frozenset(view.edges())
        return cls(center, users, items, edges, (spec.k, spec.r, spec.sigma, spec.q_digest),
                   signature_of(users, items, edges))

    def with_center(self, center):
        return Community(center, self.users, self.items, self.edges, self.params, self.signature)

    def view(self) -> SubgraphView:
        return SubgraphView.from_edges(self.edges)

    def record(self) -> str:
        us = ",".join(map(str, sorted(self.users)))
        vs = ",".join(map(str, sorted(self.items)))
        es = ",".join(f"{u}-{v}:{w}" for u, v, w in sorted(self.edges))
        k, r, s, _ = self.params
        return f"{self.center}; {us}; {vs}; {es}; {k},{r},{s}; {self.signature}"


def signature(c: Community) -> str:
    return signature_of(c.users, c.items, c.edges)


# -- peeling primitives --------------------------------------------------

def keyword_filter(view: SubgraphView, spec: QuerySpec, item_attrs) -> int:
    drop = [v for v in view.item_adj if not spec.matches_item(v, item_attrs)]
    for v in drop:
        view.remove_item(v)
    return len(drop)


class Peeler:
    """Edge supports and user-pair statistics of a view, kept current while
    elements are removed through it.  With sigma given it also tracks each
    user's summed score, its number of partners reaching sigma and its
    number of partners below it."""

    def __init__(self, view: SubgraphView, k: int, sigma=None):
        self.view, self.k, self.sigma = view, k, sigma
        self.sup = edge_supports(view, common_counts(view))
        self.stats = pair_stats(view)
        self.queue = [e for e, s in self.sup.items() if s < k]
        self.edits = 0
        self.trimmed_at = None  # edits count when the last trim finished
        if sigma is not None:
            self.summed = defaultdict(int)
            self.strong = defaultdict(int)
            self.low = defaultdict(int)
            for key, (X, Y) in self.stats.items():
                sc = (X * X - Y) // 2
                a, b = key
                self.summed[a] += sc
                self.summed[b] += sc
                if sc >= sigma:
                    self.strong[a] += 1
                    self.strong[b] += 1
                else:
                    self.low[a] += 1
                    self.low[b] += 1

    def _rescore(self, key, before, after, gone):
        a, b = key
        self.summed[a] += after - before
        self.summed[b] += after - before
        sigma = self.sigma
        if before >= sigma:
            if gone or after < sigma:
                self.strong[a] -= 1
                self.strong[b] -= 1
                if not gone:
                    self.low[a] += 1
                    self.low[b] += 1
        elif gone:
            self.low[a] -= 1
            self.low[b] -= 1

    def remove_edge(self, u, v):
        uadj, iadj = self.view.user_adj, self.view.item_adj
        sup, stats, k = self.sup, self.stats, self.k
        track = self.sigma is not None
        nu = uadj[u]
        wu = nu[v]
        for w, ww in iadj[v].items():
            if w == u:
                continue
            key = pair_key(u, w)
            m = wu if wu < ww else ww
            p = stats[key]
            if track:
                before = (p[0] * p[0] - p[1]) // 2
            p[0] -= m
            p[1] -= m * m
            gone = not p[0]
            if gone:
                del stats[key]
            if track:
                self._rescore(key, before, (p[0] * p[0] - p[1]) // 2, gone)
            nw = uadj[w]
            small, big = (nu, nw) if len(nu) <= len(nw) else (nw, nu)
            for x in small:
                if x == v or x not in big:
                    continue
                for e in ((w, v), (u, x), (w, x)):
                    c = sup[e] - 1
                    sup[e] = c
                    if c == k - 1:
                        self.queue.append(e)
        del sup[(u, v)]
        self.view.remove_edge(u, v)
        self.edits += 1

    def weak(self, center):
        """(center has no partner reaching sigma, other users without one)."""
        strong = self.strong
        weak = [u for u in self.view.user_adj if not strong.get(u) and u != center]
        return not strong.get(center), weak

    def victim(self, center):
        """User to drop for the lowest-ranked pair below sigma, or None.

        Every non-center user in such a pair is a candidate (the center
        only ever names its partner); the least summed score wins, ties by
        id."""
        low, summed = self.low, self.summed
        best = None
        for u in self.view.user_adj:
            if u != center and low.get(u):
                key = (summed[u], u)
                if best is None or key < best:
                    best = key
        return None if best is None else best[1]

    def remove_user(self, u):
        for v in list(self.view.user_adj.get(u, ())):
            self.remove_edge(u, v)
        self.view.user_adj.pop(u, None)

    def remove_item(self, v):
        for u in list(self.view.item_adj.get(v, ())):
            self.remove_edge(u, v)
        self.view.item_adj.pop(v, None)

    def peel(self) -> int:
        """Remove edges until each lies in >= k butterflies."""
        removed = 0
        queue, sup = self.queue, self.sup
        while queue:
            e = queue.pop()
            if e in sup:
                self.remove_edge(*e)
                removed += 1
        return removed

    def trim(self, center, r) -> int:
        if self.trimmed_at == (self.edits, center, r):
            return 0
        users, items = radius_keep(self.view, center, r)
        drop_u = [u for u in self.view.user_adj if u not in users]
        drop_v = [v for v in self.view.item_adj if v not in items]
        for u in drop_u:
            self.remove_user(u)
        for v in drop_v:
            self.remove_item(v)
        self.trimmed_at = (self.edits, center, r)
        return len(drop_u) + len(drop_v)


def peel_support(view: SubgraphView, k: int) -> int:
    """Remove edges until each lies in >= k butterflies. Returns edges removed."""
    return Peeler(view, k).peel()


def radius_keep(view: SubgraphView, center, r: int):
    """Users within 2r hops of center and the items next to them."""
    uadj, iadj = view.user_adj, view.item_adj
    limit = 2 * r
    du = {center: 0}
    seen_items = set()
    frontier = [center]
    d = 0
    while frontier and d < limit:
        nxt = []
        for x in frontier:
            for y in uadj[x]:
                if y in seen_items:
                    continue
                seen_items.add(y)
                for z in iadj[y]:
                    if z not in du:
                        du[z] = d + 2
                        nxt.append(z)
        frontier = nxt
        d += 2
    for x in frontier:
        seen_items.update(uadj[x])
    return du, seen_items


def trim_radius(view: SubgraphView, center, r: int) -> int:
    """Keep users within 2r hops of center and items next to them.

    Removes everything else (including anything disconnected from center).
    """
    users, items = radius_keep(view, center, r)
    drop_u = [u for u in view.user_adj if u not in users]
    drop_v = [v for v in view.item_adj if v not in items]
    for u in drop_u:
        view.remove_user(u)
    for v in drop_v:
        view.remove_item(v)
    return len(drop_u) + len(drop_v)


def structural_fixpoint(view: SubgraphView, center, k, r, sigma, peeler=None):
    """Run the order-free rules to their fixpoint.

    Returns the pair statistics of the result, or None if the center is lost.
    """
    peeler = peeler or Peeler(view, k, sigma)
    while True:
        peeler.peel()
        if center not in view.user_adj or not view.user_adj[center]:
            return None
        if peeler.trim(center, r):
            continue
        center_weak, weak = peeler.weak(center)
        if center_weak:
            return None
        if not weak:
            return peeler.stats
        for u in weak:
            peeler.remove_user(u)


def is_valid(view: SubgraphView, center, k, r, sigma) -> bool:
    """Every constraint of a community holds on `view` (keywords assumed)."""
    uadj = view.user_adj
    if not uadj.get(center):
        return False
    if any(s < k for s in edge_supports(view, common_counts(view)).values()):
        return False
    # users within 2r; items only need to hang off such a user
    du, dv = layered_bfs(uadj, view.item_adj, user(center), 2 * r + 1)
    if any(du.get(u, 2 * r + 1) > 2 * r for u, nb in uadj.items() if nb):
        return False
    if any(v not in dv for v, nb in view.item_adj.items() if nb):
        return False
    return all((X * X - Y) // 2 >= sigma for X, Y in pair_stats(view).values())


def _pair_score(view: SubgraphView, a, b) -> int:
    na, nb = view.user_adj[a], view.user_adj[b]
    if len(nb) < len(na):
        na, nb = nb, na
    X = Y = 0
    for v, wa in na.items():
        wb = nb.get(v)
        if wb:
            m = wa if wa < wb else wb
            X += m
            Y += m * m
    return (X * X - Y) // 2


def extension_valid(trial: SubgraphView, added, center, k, r, sigma) -> bool:
    """is_valid for `trial` = a valid view plus the edges `added`.

    Supports and pair scores only grow when edges are added, so only the new
    edges, the pairs they touch and the new vertices' distances need checking.
    """
    for u, v, _ in added:
        if subgraph_edge_support(trial, u, v) < k:
            return False
    seen = set()
    for u, v, _ in added:
        for x in trial.item_adj[v]:
            if x != u and pair_key(u, x) not in seen:
                seen.add(pair_key(u, x))
                if _pair_score(trial, u, x) < sigma:
                    return False
    du, dv = layered_bfs(trial.user_adj, trial.item_adj, user(center), 2 * r + 1)
    return all(du.get(u, 2 * r + 1) <= 2 * r and v in dv for u, v, _ in added)


def extension_candidates(view: SubgraphView, base: SubgraphView):
    """Single peeled elements of `base` adjacent to `view`, in canonical order:
    users (with their edges into view items), then items (with their edges to
    view users), then lone edges between view vertices."""
    users = {u for u, nb in view.user_adj.items() if nb}
    items = {v for v, nb in view.item_adj.items() if nb}
    out = []
    for u in sorted(set(base.user_adj) - users):
        es = [(u, v, w) for v, w in base.user_adj[u].items() if v in items]
        if es:
            out.append(es)
    for v in sorted(set(base.item_adj) - items):
        es = [(u, v, w) for u, w in base.item_adj[v].items() if u in users]
        if es:
            out.append(es)
    for u in sorted(users):
        for v, w in sorted(base.user_adj.get(u, {}).items()):
            if v in items and view.weight(u, v) == 0:
                out.append([(u, v, w)])
    return out


def augment(view: SubgraphView, base: SubgraphView, center, k, r, sigma) -> SubgraphView:
    """Re-add peeled elements one at a time while the result stays valid.

    Greedy score peeling can remove a user that would have been fine once
    its neighbours were gone; this pass restores any such single element so
    no adjacent peeled vertex or edge can be added back.
    """
    changed = True
    while changed:
        changed = False
        for es in extension_candidates(view, base):
            for u, v, w in es:
                view.add_edge(u, v, w)
            if extension_valid(view, es, center, k, r, sigma):
                changed = True
                continue
            for u, v, _ in es:
                view.remove_edge(u, v)
    return view


def core_fixpoint(view: SubgraphView, k, sigma) -> SubgraphView:
    """Greatest subgraph of `view` where every edge lies in >= k butterflies
    and every user has a partner scoring >= sigma, both counted inside it.
    No center and no radius: every community of the view lies inside."""
    peeler = Peeler(view, k, sigma)
    while True:
        peeler.peel()
        _, weak = peeler.weak(None)
        weak = [u for u in weak if view.user_adj[u]]
        if not weak:
            break
        for u in weak:
            peeler.remove_user(u)
    for u in [u for u, nb in view.user_adj.items() if not nb]:
        del view.user_adj[u]
    for v in [v for v, nb in view.item_adj.items() if not nb]:
        del view.item_adj[v]
    return view


def peel_view(view: SubgraphView, spec: QuerySpec, center) -> Optional[SubgraphView]:
    """Peel an already keyword-filtered view in place. None if nothing survives.

    The result may be a new view when peeled elements are restored."""
    k, r, sigma = spec.k, spec.r, spec.sigma
    if center not in view.user_adj:
        return None
    base = None  # structural fixpoint before the first score removal
    peeler = Peeler(view, k, sigma)
    while True:
        if structural_fixpoint(view, center, k, r, sigma, peeler) is None:
            return None
        victim = peeler.victim(center)
        if victim is None:
            break
        if base is None:
            base = view.copy()
        peeler.remove_user(victim)
    if base is not None:
        view = augment(view, base, center, k, r, sigma)
    return view


def maximal_bitruss(view: SubgraphView, spec: QuerySpec, center, item_attrs, copy=True) -> Optional[Community]:
    """Maximal keyword-relevant (k, r, sigma)-bitruss around `center` inside `view`."""
    g = view.copy() if copy else view
    keyword_filter(g, spec, item_attrs)
    g = peel_view(g, spec, center)
    if g is None:
        return None
    return Community.from_view(g, center, spec)


# -- certification ---------------------------------------------------------

def certify(c: Community, graph, spec: QuerySpec, item_attrs=None):
    """List every way `c` fails to be a valid community of `graph` (empty if valid).

    Uses only direct enumeration, none of the peeling code above.
    """
    problems = []
    if item_attrs is None:
        item_attrs = getattr(graph, "item_attrs", {})
    if not c.edges:
        problems.append("no edges")
        return problems
    adj_u, adj_v = defaultdict(dict), defaultdict(dict)
    for u, v, w in c.edges:
        if graph.user_adj.get(u, {}).get(v) != w:
            problems.append(f"edge ({u},{v},{w}) not in graph with that weight")
        adj_u[u][v] = w
        adj_v[v][u] = w
    if set(adj_u) != set(c.users) or set(adj_v) != set(c.items):
        problems.append("vertex sets disagree with edges")
    if c.center not in adj_u:
        problems.append("center missing")
        return problems
    # connectivity and radius (users only)
    dist = {("u", c.center): 0}
    order = [("u", c.center)]
    for node in order:
        side, x = node
        nbrs = adj_u[x] if side == "u" else adj_v[x]
        other = "v" if side == "u" else "u"
        for y in nbrs:
            if (other, y) not in dist:
                dist[(other, y)] = dist[node] + 1
                order.append((other, y))
    if len(dist) != len(adj_u) + len(adj_v):
        problems.append("not connected")
    for u in adj_u:
        if dist.get(("u", u), 10**9) > 2 * spec.r:
            problems.append(f"user {u} beyond radius")
    for v in adj_v:
        kws = item_attrs.get(v, EMPTY_ATTRS).keywords
        if kws.isdisjoint(spec.keywords):
            problems.append(f"item {v} misses query keywords")
    for u, v, w in c.edges:
        s = 0
        for u2 in adj_v[v]:
            if u2 == u:
                continue
            for v2 in adj_u[u]:
                if v2 != v and v2 in adj_u[u2]:
                    s += 1
        if s < spec.k:
            problems.append(f"edge ({u},{v}) support {s} < {spec.k}")
    users = sorted(adj_u)
    for i, a in enumerate(users):
        for b in users[i + 1:]:
            common = sorted(set(adj_u[a]) & set(adj_u[b]))
            if not common:
                continue
            score = 0
            for x in range(len(common)):
                for y in range(x + 1, len(common)):
                    va, vb = common[x], common[y]
                    score += min(adj_u[a][va], adj_u[b][va]) * min(adj_u[a][vb], adj_u[b][vb])
            if score < spec.sigma:
                problems.append(f"pair ({a},{b}) score {score} < {spec.sigma}")
    return problems


# -- global bitruss decomposition (used by the baseline) -------------------

def bitruss_numbers(g) -> dict:
    """Largest k such that each edge lies in a subgraph where all edges have
    support >= k.  Bottom-up peeling over a private copy."""
    import heapq

    view = SubgraphView({u: dict(nb) for u, nb in g.user_adj.items()},
                        {v: dict(nb) for v, nb in g.item_adj.items()})
    sup = edge_supports(view)
    heap = [(s, e) for e, s in sup.items()]
    heapq.heapify(heap)
    truss = {}
    level = 0
    uadj, iadj = view.user_adj, view.item_adj
    while heap:
        s, e = heapq.heappop(heap)
        if e in truss or s != sup[e]:
            continue
        level = max(level, s)
        truss[e] = level
        u, v = e
        nu = uadj[u]
        for w in iadj[v]:
            if w == u:
                continue
            nw = uadj[w]
            small, big = (nu, nw) if len(nu) <= len(nw) else (nw, nu)
            for x in small:
                if x == v or x not in big:
                    continue
                for f in ((w, v), (u, x), (w, x)):
                    sup[f] -= 1
                    heapq.heappush(heap, (sup[f], f))
        view.remove_edge(u, v)
    return truss
