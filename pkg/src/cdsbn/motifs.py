"""Wedge and butterfly weights, pairwise user scores and support bounds.

Every function here takes anything with `user_adj`/`item_adj` dict-of-dicts
(StreamingGraph or SubgraphView).

The pair score of two users is the sum of butterfly scores over all
unordered pairs of shared items.  Keeping X = sum of wedge weights and
Y = sum of squared wedge weights per pair gives score = (X*X - Y) / 2.
"""
from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import NamedTuple

INT64_MAX = 2**63 - 1


class ConsistencyError(RuntimeError):
    pass


def pair_key(a, b):
    return (a, b) if a < b else (b, a)


def wedge_weight(g, ui, v, uj) -> int:
    nb = g.item_adj.get(v, {})
    wi, wj = nb.get(ui, 0), nb.get(uj, 0)
    if ui == uj or not wi or not wj:
        return 0
    return min(wi, wj)


def butterfly_score(g, ui, uj, va, vb) -> int:
    if va == vb:
        return 0
    return wedge_weight(g, ui, va, uj) * wedge_weight(g, ui, vb, uj)


def relationship_score_direct(g, ui, uj) -> int:
    """Plain enumeration over unordered pairs of common items."""
    if ui == uj:
        return 0
    ni, nj = g.user_adj.get(ui, {}), g.user_adj.get(uj, {})
    common = sorted(set(ni) & set(nj))
    return sum(butterfly_score(g, ui, uj, a, b) for a, b in combinations(common, 2))


class AuxScorePair(NamedTuple):
    X: int
    Y: int

    @property
    def score(self):
        return relationship_score_fast(self)


def relationship_score_fast(aux) -> int:
    X, Y = aux[0], aux[1]
    diff = X * X - Y
    if diff & 1 or diff < 0:
        raise ConsistencyError(f"X={X}, Y={Y} cannot come from integer wedge weights")
    return diff // 2


def pair_stats(g, users=None):
    """X/Y for every user pair sharing an item, computed from scratch."""
    stats: dict[tuple, list] = {}
    for v, nb in g.item_adj.items():
        if len(nb) < 2:
            continue
        us = sorted(nb.items())
        for i, (a, wa) in enumerate(us):
            for b, wb in us[i + 1:]:
                m = wa if wa < wb else wb
                p = stats.get((a, b))
                if p is None:
                    stats[(a, b)] = [m, m * m]
                else:
                    p[0] += m
                    p[1] += m * m
    return stats


def common_counts(g):
    cnt = defaultdict(int)
    for nb in g.item_adj.values():
        if len(nb) < 2:
            continue
        us = sorted(nb)
        for i, a in enumerate(us):
            for b in us[i + 1:]:
                cnt[(a, b)] += 1
    return cnt


def edge_supports(g, common=None):
    """Butterfly count of every edge, via common-neighbour counts.

    For edge (u, v): sum over other users w of N(v) of (|N(u) & N(w)| - 1).
    """
    if common is None:
        common = common_counts(g)
    sup = {}
    for v, nb in g.item_adj.items():
        for u in nb:
            s = 0
            for w in nb:
                if w != u:
                    s += common[pair_key(u, w)] - 1
            sup[(u, v)] = s
    return sup


def subgraph_edge_support(g, u, v) -> int:
    """Butterflies through edge (u, v), counted directly."""
    nu = g.user_adj.get(u, {})
    if v not in nu:
        return 0
    total = 0
    for w in g.item_adj[v]:
        if w == u:
            continue
        nw = g.user_adj[w]
        total += sum(1 for x in nu if x != v and x in nw)
    return total


def compute_ub_sup(g, u, v) -> int:
    """Support upper bound of edge (u, v) evaluated literally on g:
    sum over other items x of u of |N(v) & N(x) - {u}|."""
    nv = g.item_adj.get(v, {})
    total = 0
    for x in g.user_adj.get(u, {}):
        if x == v:
            continue
        nx = g.item_adj[x]
        total += sum(1 for w in nv if w != u and w in nx)
    return total


def lambda_for_update(w_changed: int, w_other: int, direction: int) -> int:
    """Change of min(w_changed, w_other) when w_changed moves by `direction`.

    Weights are pre-update values; creation is 0 -> 1, deletion is 1 -> 0.
    """
    if w_other < 1:
        raise ValueError("other user is not adjacent to the item: no wedge")
    if direction == 1:
        return 1 if w_changed + 1 <= w_other else 0
    if direction == -1:
        if w_changed < 1:
            raise ValueError("cannot decrement an absent edge")
        return -1 if w_changed - 1 < w_other else 0
    raise ValueError("direction must be +1 or -1")


def apply_score_delta(aux, lam: int, w: int) -> AuxScorePair:
    X = aux[0] + lam
    Y = aux[1] + 2 * lam * w + lam * lam
    if X < 0 or Y < 0:
        raise ConsistencyError(f"negative aggregate X={X}, Y={Y}")
    if Y > INT64_MAX:
        raise OverflowError("pair aggregate exceeds 64 bits")
    return AuxScorePair(X, Y)


class AuxStore:
    """Global X/Y per user pair and support upper bound per edge."""

    def __init__(self):
        self.pairs: dict[tuple, AuxScorePair] = {}
        self.partners: dict[int, set] = defaultdict(set)
        self.ub_sup: dict[tuple, int] = {}
        self._best: dict[int, int] = {}  # lazily cached best_score per user

    @classmethod
    def build(cls, g):
        store = cls()
        common = common_counts(g)
        for key, (X, Y) in pair_stats(g).items():
            store.pairs[key] = AuxScorePair(X, Y)
            a, b = key
            store.partners[a].add(b)
            store.partners[b].add(a)
        store.ub_sup = edge_supports(g, common)
        return store

    def pair(self, a, b) -> AuxScorePair:
        return self.pairs.get(pair_key(a, b), AuxScorePair(0, 0))

    def score(self, a, b) -> int:
        p = self.pairs.get(pair_key(a, b))
        return relationship_score_fast(p) if p else 0

    def sup(self, u, v) -> int:
        return self.ub_sup.get((u, v), 0)

    def best_score(self, u) -> int:
        """Largest global score of a pair containing u (0 without partners)."""
        b = self._best.get(u)
        if b is None:
            b = 0
            for w in self.partners.get(u, ()):
                X, Y = self.pairs[(u, w) if u < w else (w, u)]
                s = (X * X - Y) // 2
                if s > b:
                    b = s
            self._best[u] = b
        return b

    def has_partner_at_least(self, u, sigma, among=None) -> bool:
        if self.best_score(u) < sigma:
            return False
        if among is None:
            return True
        for w in self.partners.get(u, ()):
            if among is not None and w not in among:
                continue
            X, Y = self.pairs[pair_key(u, w)]
            if (X * X - Y) // 2 >= sigma:
                return True
        return False

    def _set_pair(self, a, b, p: AuxScorePair):
        key = pair_key(a, b)
        if p.X == 0:
            if p.Y != 0:
                raise ConsistencyError(f"pair {key} has X=0 but Y={p.Y}")
            self.pairs.pop(key, None)
            self.partners[a].discard(b)
            self.partners[b].discard(a)
            if not self.partners[a]:
                del self.partners[a]
            if not self.partners[b]:
                del self.partners[b]
        else:
            self.pairs[key] = p
            self.partners[a].add(b)
            self.partners[b].add(a)

    def maintain(self, g, delta):
        """Apply one edge delta; `g` already holds the post-update state.

        Returns (touched pairs, touched edges).
        """
        ui, va, old, new = delta
        if old == new:
            return [], []
        direction = 1 if new > old else -1
        touched_pairs, touched_edges = [], []
        best = self._best
        best.pop(ui, None)
        nva = g.item_adj.get(va, {})
        for uj, wj in nva.items():
            if uj == ui:
                continue
            lam = lambda_for_update(old, wj, direction)
            if lam:
                w_before = min(old, wj)
                self._set_pair(ui, uj, apply_score_delta(self.pair(ui, uj), lam, w_before))
                touched_pairs.append(pair_key(ui, uj))
                best.pop(uj, None)

        if old == 0 or new == 0:
            step = 1 if old == 0 else -1
            ub = self.ub_sup
            if old == 0:
                ub[(ui, va)] = 0
            nui = g.user_adj.get(ui, {})
            for uj in nva:
                if uj == ui:
                    continue
                nuj = g.user_adj[uj]
                small, big = (nui, nuj) if len(nui) <= len(nuj) else (nuj, nui)
                for vb in small:
                    if vb == va or vb not in big:
                        continue
                    for e in ((ui, va), (uj, va), (ui, vb), (uj, vb)):
                        ub[e] += step
                        touched_edges.append(e)
            if new == 0:
                left = ub.pop((ui, va))
                if left != 0:
                    raise ConsistencyError(f"removed edge ({ui},{va}) kept support {left}")
        return touched_pairs, touched_edges

    def dump(self):
        lines = []
        for (a, b) in sorted(self.pairs):
            X, Y = self.pairs[(a, b)]
            lines.append(f"pair {a} {b} {X} {Y}")
        for (u, v) in sorted(self.ub_sup):
            lines.append(f"edge {u} {v} {self.ub_sup[(u, v)]}")
        return lines

    def same_as(self, other) -> bool:
        return self.pairs == other.pairs and self.ub_sup == other.ub_sup
