"""Naive reference enumeration of all communities, for desk-scale checks.

Shares no code with the optimised path beyond the data types: neighbourhoods,
supports, distances and scores are all recomputed from scratch on every round
by direct enumeration.  The victim rule for score violations is the same
documented rule the extraction uses (it is part of the definition), and so is
the final pass that re-adds single peeled elements while the result stays valid.
"""
from __future__ import annotations

from itertools import combinations

from .bitruss import Community, QuerySpec

DEFAULT_CAP = 300


class OracleCapExceeded(ValueError):
    pass


def _hop(edges, center, depth):
    """Vertices within `depth` hops of user `center` and the induced edges."""
    dist = {("u", center): 0}
    frontier = [("u", center)]
    for d in range(1, depth + 1):
        nxt = []
        for side, x in frontier:
            for (u, v) in edges:
                if side == "u" and u == x and ("v", v) not in dist:
                    dist[("v", v)] = d
                    nxt.append(("v", v))
                elif side == "v" and v == x and ("u", u) not in dist:
                    dist[("u", u)] = d
                    nxt.append(("u", u))
        frontier = nxt
    return {(u, v): w for (u, v), w in edges.items() if ("u", u) in dist and ("v", v) in dist}


def _support(edges, e):
    u, v = e
    s = 0
    for (u2, v2) in edges:
        if u2 != u and v2 == v:
            for (u3, v3) in edges:
                if u3 == u and v3 != v and (u2, v3) in edges:
                    s += 1
    return s


def _user_dist(edges, center):
    dist = {center: 0}
    frontier = [center]
    while frontier:
        nxt = []
        for x in frontier:
            items = {v for (u, v) in edges if u == x}
            for (u, v) in edges:
                if v in items and u not in dist:
                    dist[u] = dist[x] + 2
                    nxt.append(u)
        frontier = nxt
    return dist


def _scores(edges):
    users = sorted({u for u, _ in edges})
    out = {}
    for a, b in combinations(users, 2):
        common = sorted({v for (u, v) in edges if u == a} & {v for (u, v) in edges if u == b})
        if not common:
            continue
        s = 0
        for va, vb in combinations(common, 2):
            s += min(edges[(a, va)], edges[(b, va)]) * min(edges[(a, vb)], edges[(b, vb)])
        out[(a, b)] = s
    return out


def _drop_user(edges, x):
    return {e: w for e, w in edges.items() if e[0] != x}


def oracle_extract(edges, spec: QuerySpec, center, keywords):
    """Community around `center` from the weighted edge dict of its hop view."""
    k, r, sigma = spec.k, spec.r, spec.sigma
    g = {e: w for e, w in edges.items() if not keywords.get(e[1], frozenset()).isdisjoint(spec.keywords)}
    base = None  # structural fixpoint before the first score removal
    while True:
        # structural rules, all violators removed at once each round
        changed = True
        while changed:
            changed = False
            low = [e for e in g if _support(g, e) < k]
            if low:
                for e in low:
                    del g[e]
                changed = True
                continue
            if not any(u == center for u, _ in g):
                return None
            dist = _user_dist(g, center)
            far = {u for u, _ in g if dist.get(u, 10**9) > 2 * r}
            if far:
                g = {e: w for e, w in g.items() if e[0] not in far}
                changed = True
                continue
            sc = _scores(g)
            strong = {x for pair, s in sc.items() if s >= sigma for x in pair}
            if center not in strong:
                return None
            weak = {u for u, _ in g if u not in strong}
            if weak:
                g = {e: w for e, w in g.items() if e[0] not in weak}
                changed = True
        # one score violation resolved per round
        sc = _scores(g)
        summed = {}
        for (a, b), s in sc.items():
            summed[a] = summed.get(a, 0) + s
            summed[b] = summed.get(b, 0) + s
        cands = set()
        for (a, b), s in sc.items():
            if s < sigma:
                if a == center:
                    cands.add(b)
                elif b == center:
                    cands.add(a)
                else:
                    cands.update((a, b))
        if not cands:
            break
        if base is None:
            base = dict(g)
        g = _drop_user(g, min(cands, key=lambda x: (summed[x], x)))
    if not g:
        return None
    if base is not None:
        g = _augment(g, base, spec, center)
    return Community.from_view(_as_view(g), center, spec)


def _valid(edges, spec, center):
    if not any(u == center for u, _ in edges):
        return False
    if any(_support(edges, e) < spec.k for e in edges):
        return False
    dist = _user_dist(edges, center)
    if any(dist.get(u, 10**9) > 2 * spec.r for u, _ in edges):
        return False
    return all(s >= spec.sigma for s in _scores(edges).values())


def _augment(g, base, spec, center):
    """Add back single peeled users, items or edges while g stays valid."""
    while True:
        users = {u for u, _ in g}
        items = {v for _, v in g}
        cands = []
        for u in sorted({u for u, _ in base} - users):
            cands.append({e: w for e, w in base.items() if e[0] == u and e[1] in items})
        for v in sorted({v for _, v in base} - items):
            cands.append({e: w for e, w in base.items() if e[1] == v and e[0] in users})
        for e in sorted(base):
            if e[0] in users and e[1] in items and e not in g:
                cands.append({e: base[e]})
        grew = False
        for extra in cands:
            if extra and _valid({**g, **extra}, spec, center):
                g = {**g, **extra}
                grew = True
        if not grew:
            return g


def _as_view(g):
    from .graph import SubgraphView
    return SubgraphView.from_edges((u, v, w) for (u, v), w in g.items())


def oracle_per_center(graph, spec: QuerySpec, cap=DEFAULT_CAP):
    """center -> Community (or None) for every user of `graph`."""
    edges = {(u, v): w for u, v, w in graph.edges()}
    if len(edges) > cap:
        raise OracleCapExceeded(f"{len(edges)} edges exceeds oracle cap {cap}")
    keywords = {v: a.keywords for v, a in graph.item_attrs.items()}
    out = {}
    for c in sorted(graph.user_adj):
        out[c] = oracle_extract(_hop(edges, c, 2 * spec.r), spec, c, keywords)
    return out


def oracle_enumerate(graph, spec: QuerySpec, cap=DEFAULT_CAP) -> dict:
    """signature -> Community, keeping the smallest center for each signature."""
    found = {}
    for c, comm in oracle_per_center(graph, spec, cap).items():
        if comm is not None and comm.signature not in found:
            found[comm.signature] = comm
    return found
