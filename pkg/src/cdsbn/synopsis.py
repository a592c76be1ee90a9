"""Hierarchical aggregate tree over users for entry-level pruning.

For every user u and radius r in 1..r_max a leaf entry records, over the
2r-hop neighbourhood of u:
  * bv[r]    OR of item keyword bit vectors,
  * sup[r]   max support upper bound of an edge,
  * score[r] max over users x inside the hop of x's best global pair score,
             an upper bound on the score of any pair inside the hop.
Internal entries hold the OR/max of their children.  All three are maxima
over a ball, so the leaf level is built by iterated neighbour maxima.  Every
depth of that iteration is kept per vertex; after an update only vertices
whose own value, adjacency or a neighbour's previous depth changed are
recomputed, which stops as soon as the maxima stop moving.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .graph import layered_bfs, user
from .motifs import pair_key


class Aggregates:
    __slots__ = ("bv", "sup", "score")

    def __init__(self, bv, sup, score):
        self.bv, self.sup, self.score = bv, sup, score

    @classmethod
    def empty(cls, r_max):
        return cls([0] * r_max, [0] * r_max, [0] * r_max)

    def copy(self):
        return Aggregates(list(self.bv), list(self.sup), list(self.score))

    def __eq__(self, other):
        return (self.bv, self.sup, self.score) == (other.bv, other.sup, other.score)

    def __repr__(self):
        return f"Aggregates(bv={[hex(b) for b in self.bv]}, sup={self.sup}, score={self.score})"

    @property
    def summed_score(self):
        return sum(self.score)

    def absorb(self, other) -> bool:
        """In-place OR/max with `other`; True if anything grew."""
        changed = False
        for i in range(len(self.bv)):
            b = self.bv[i] | other.bv[i]
            if b != self.bv[i]:
                self.bv[i] = b
                changed = True
            if other.sup[i] > self.sup[i]:
                self.sup[i] = other.sup[i]
                changed = True
            if other.score[i] > self.score[i]:
                self.score[i] = other.score[i]
                changed = True
        return changed

    def covers(self, other) -> bool:
        return all((o & ~s) == 0 for s, o in zip(self.bv, other.bv)) and \
            all(s >= o for s, o in zip(self.sup, other.sup)) and \
            all(s >= o for s, o in zip(self.score, other.score))

    def fmt(self):
        return " ".join(f"r{i + 1}:{self.bv[i]:x}/{self.sup[i]}/{self.score[i]}"
                        for i in range(len(self.bv)))


def best_partner_score(aux, x) -> int:
    """Largest global score of a pair containing user x (0 without partners)."""
    best = 0
    for y in aux.partners.get(x, ()):
        X, Y = aux.pairs[pair_key(x, y)]
        s = (X * X - Y) // 2
        if s > best:
            best = s
    return best


def item_support(g, aux, v) -> int:
    """Largest support upper bound of an edge at item v."""
    ub = aux.ub_sup
    return max((ub.get((x, v), 0) for x in g.item_adj.get(v, ())), default=0)


def user_aggregates(g, aux, u, r_max, best=None, item_sup=None) -> Aggregates:
    """Leaf aggregates of user u.

    For radius r the entry covers hop(u, 2r): items within 2r-1 hops and users
    within 2r.  bv and sup are exact over that neighbourhood; score is the
    largest best-partner score of a user inside it, which dominates the score
    of every pair with both users inside.  `best` and `item_sup` are optional
    caches of best_partner_score and item_support.
    """
    du, dv = layered_bfs(g.user_adj, g.item_adj, user(u), 2 * r_max)
    agg = Aggregates.empty(r_max)
    attrs = g.item_attrs
    for v, d in dv.items():
        ri = (d + 1) // 2 - 1
        a = attrs.get(v)
        if a is not None and a.bitvec:
            agg.bv[ri] |= a.bitvec
        s = item_sup[v] if item_sup is not None else item_support(g, aux, v)
        if s > agg.sup[ri]:
            agg.sup[ri] = s
    for x, dx in du.items():
        ri = max(dx // 2, 1) - 1
        s = best[x] if best is not None else best_partner_score(aux, x)
        if s > agg.score[ri]:
            agg.score[ri] = s
    _prefix(agg, r_max)
    return agg


def _prefix(agg, r_max):
    for i in range(1, r_max):
        agg.bv[i] |= agg.bv[i - 1]
        agg.sup[i] = max(agg.sup[i], agg.sup[i - 1])
        agg.score[i] = max(agg.score[i], agg.score[i - 1])


def _combine(own, adj, levels, j):
    """OR/max of `own` with depth j of every vertex in `adj`."""
    b, sp, c = own
    for w in adj:
        wb, ws, wc = levels[w][j]
        b |= wb
        if ws > sp:
            sp = ws
        if wc > c:
            c = wc
    return (b, sp, c)


def _own_item(g, item_sup, v):
    a = g.item_attrs.get(v)
    return (a.bitvec if a is not None else 0, item_sup[v], 0)


def ball_levels(g, best, item_sup, r_max):
    """(ulev, ilev): ulev[x][j] is the (bv, sup, score) maximum over the 2j-hop
    ball of user x, ilev[v][j] over the (2j-1)-hop ball of item v; index 0
    holds the vertex's own value."""
    ulev = {x: [(0, 0, best[x])] for x in g.user_adj}
    ilev = {v: [_own_item(g, item_sup, v)] for v in g.item_adj}
    for j in range(r_max):
        for v, nb in g.item_adj.items():
            ilev[v].append(_combine(ilev[v][j], nb, ulev, j))
        for x, nb in g.user_adj.items():
            ulev[x].append(_combine(ulev[x][j], nb, ilev, j + 1))
    return ulev, ilev


def levels_aggregates(levels) -> Aggregates:
    rest = levels[1:]
    return Aggregates([t[0] for t in rest], [t[1] for t in rest], [t[2] for t in rest])


def all_user_aggregates(g, best, item_sup, r_max) -> dict:
    """user_aggregates for every user at once."""
    ulev, _ = ball_levels(g, best, item_sup, r_max)
    return {x: levels_aggregates(lv) for x, lv in ulev.items()}


@dataclass
class Node:
    id: int
    leaf: bool
    parent: int | None = None
    entries: list = field(default_factory=list)  # user ids (leaf) or child node ids
    agg: Aggregates | None = None


def entry_prunable(agg: Aggregates, spec, lemmas=frozenset((6, 7, 8))):
    """First synopsis lemma that rules out every center under this entry."""
    i = spec.r - 1
    if i >= len(agg.bv):
        raise ValueError(f"query radius {spec.r} exceeds synopsis r_max {len(agg.bv)}")
    if 6 in lemmas and not (agg.bv[i] & spec.qbv):
        return 6
    if 7 in lemmas and agg.sup[i] < spec.k:
        return 7
    if 8 in lemmas and agg.score[i] < spec.sigma:
        return 8
    return None


class Synopsis:
    def __init__(self, gamma=32, r_max=3):
        if gamma < 2:
            raise ValueError("gamma must be at least 2")
        if r_max < 1:
            raise ValueError("r_max must be at least 1")
        self.gamma, self.r_max = gamma, r_max
        self.nodes: dict[int, Node] = {}
        self.root = None
        self.user_agg: dict[int, Aggregates] = {}
        self.leaf_of: dict[int, int] = {}
        self.inv_list: dict[int, list] = {}
        self.best: dict[int, int] = {}  # user -> best_partner_score
        self.item_sup: dict[int, int] = {}  # item -> item_support
        self.ulev: dict[int, list] = {}  # see ball_levels
        self.ilev: dict[int, list] = {}
        self._next = 0

    # -- construction -----------------------------------------------------
    def _new_node(self, leaf, entries):
        node = Node(self._next, leaf, None, list(entries))
        self._next += 1
        self.nodes[node.id] = node
        if leaf:
            for u in node.entries:
                self.leaf_of[u] = node.id
        else:
            for c in node.entries:
                self.nodes[c].parent = node.id
        node.agg = self._aggregate(node)
        return node

    def _entry_agg(self, node, e):
        return self.user_agg[e] if node.leaf else self.nodes[e].agg

    def _aggregate(self, node):
        agg = Aggregates.empty(self.r_max)
        for e in node.entries:
            agg.absorb(self._entry_agg(node, e))
        return agg

    @classmethod
    def build(cls, g, aux, gamma=32, r_max=3):
        syn = cls(gamma, r_max)
        syn.best = {x: aux.best_score(x) for x in g.user_adj}
        syn.item_sup = {v: item_support(g, aux, v) for v in g.item_adj}
        syn.ulev, syn.ilev = ball_levels(g, syn.best, syn.item_sup, r_max)
        syn.user_agg = {x: levels_aggregates(lv) for x, lv in syn.ulev.items()}
        order = sorted(syn.user_agg, key=lambda u: (syn.user_agg[u].summed_score, u))
        level = [syn._new_node(True, order[i:i + gamma]) for i in range(0, len(order), gamma)]
        if not level:
            level = [syn._new_node(True, [])]
        while len(level) > 1:
            level = [syn._new_node(False, [n.id for n in level[i:i + gamma]])
                     for i in range(0, len(level), gamma)]
        syn.root = level[0].id
        syn._reindex(syn.root)
        return syn

    def _reindex(self, node_id):
        """Recompute root-to-leaf paths for every user below node_id."""
        prefix = []
        p = self.nodes[node_id].parent
        while p is not None:
            prefix.append(p)
            p = self.nodes[p].parent
        prefix.reverse()
        stack = [(node_id, prefix)]
        while stack:
            nid, path = stack.pop()
            node = self.nodes[nid]
            path = path + [nid]
            if node.leaf:
                for u in node.entries:
                    self.inv_list[u] = path
            else:
                for c in node.entries:
                    stack.append((c, path))

    # -- queries ------------------------------------------------------------
    def path(self, u):
        return self.inv_list[u]

    def depth(self):
        d, nid = 1, self.root
        while not self.nodes[nid].leaf:
            nid = self.nodes[nid].entries[0]
            d += 1
        return d

    # -- maintenance --------------------------------------------------------
    def _refresh_caches(self, g, aux, delta):
        """Update cached per-vertex values near the delta; return the users and
        items whose own value changed."""
        ui, va = delta.user, delta.item
        # pair scores change only for ui and users on va; ub_sup only on edges
        # at items of ui
        users = {ui} | set(g.item_adj.get(va, ()))
        items = {va} | set(g.user_adj.get(ui, ()))
        changed_u, changed_i = set(), set()
        for x in users:
            val = aux.best_score(x)
            if self.best.get(x) != val:
                self.best[x] = val
                changed_u.add(x)
        for v in items:
            val = item_support(g, aux, v)
            if self.item_sup.get(v) != val:
                self.item_sup[v] = val
                changed_i.add(v)
        return changed_u, changed_i

    def _update_levels(self, g, aux, delta):
        """Re-run the neighbour maxima where an input changed; return the users
        whose leaf aggregates may differ."""
        ulev, ilev, depth = self.ulev, self.ilev, self.r_max + 1
        cu, ci = self._refresh_caches(g, aux, delta)
        for x in cu:
            own = (0, 0, self.best[x])
            if x in ulev:
                ulev[x][0] = own
            else:
                ulev[x] = [own] * depth
        for v in ci:
            own = _own_item(g, self.item_sup, v)
            if v in ilev:
                ilev[v][0] = own
            else:
                ilev[v] = [own] * depth
        # the edge endpoints see a different neighbour set at every depth
        moved = delta.created or delta.removed
        adj_u = {delta.user} if moved else set()
        adj_i = {delta.item} if moved else set()
        touched = set(cu)
        uadj, iadj = g.user_adj, g.item_adj
        for j in range(self.r_max):
            dirty = ci | adj_i
            for x in cu:
                dirty.update(uadj[x])
            ci = set()
            for v in dirty:
                val = _combine(ilev[v][j], iadj[v], ulev, j)
                if val != ilev[v][j + 1]:
                    ilev[v][j + 1] = val
                    ci.add(v)
            dirty = cu | adj_u
            for v in ci:
                dirty.update(iadj[v])
            cu = set()
            for x in dirty:
                val = _combine(ulev[x][j], uadj[x], ilev, j + 1)
                if val != ulev[x][j + 1]:
                    ulev[x][j + 1] = val
                    cu.add(x)
            touched |= cu
        return touched

    def maintain_on_insert(self, g, aux, delta):
        touched = self._update_levels(g, aux, delta)
        fresh = delta.user not in self.user_agg
        grow, shrink = [], []
        for u in touched:
            if u not in self.user_agg:
                continue
            new = levels_aggregates(self.ulev[u])
            old = self.user_agg[u]
            if new == old:
                continue
            self.user_agg[u] = new
            (grow if new.covers(old) else shrink).append(u)
        for u in grow:
            # monotone merge up the path; stop once an ancestor already covers it
            for nid in reversed(self.inv_list[u]):
                if not self.nodes[nid].agg.absorb(self.user_agg[u]):
                    break
        if shrink:
            self._reaggregate({self.leaf_of[u] for u in shrink})
        if fresh:
            self._add_user(delta.user, levels_aggregates(self.ulev[delta.user]))

    def maintain_on_expire(self, g, aux, delta):
        dirty = set()
        for u in self._update_levels(g, aux, delta):
            new = levels_aggregates(self.ulev[u])
            if new != self.user_agg[u]:
                self.user_agg[u] = new
                dirty.add(self.leaf_of[u])
        if dirty:
            self._reaggregate(dirty)

    def maintain(self, g, aux, delta):
        if delta.new_weight > delta.old_weight:
            self.maintain_on_insert(g, aux, delta)
        elif delta.new_weight < delta.old_weight:
            self.maintain_on_expire(g, aux, delta)

    def _reaggregate(self, node_ids):
        """Recompute node aggregates bottom-up, climbing only while they change."""
        pending = set(node_ids)
        while pending:
            # deepest first so parents see final child values
            nid = max(pending, key=lambda n: len(self._ancestors(n)))
            pending.discard(nid)
            node = self.nodes[nid]
            agg = self._aggregate(node)
            if agg != node.agg:
                node.agg = agg
                if node.parent is not None:
                    pending.add(node.parent)

    def _ancestors(self, nid):
        out = []
        p = self.nodes[nid].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def _add_user(self, u, agg):
        target = self.nodes[self.root]
        if self.leaf_of:
            want = agg.summed_score
            near = min(self.leaf_of, key=lambda x: (abs(self.user_agg[x].summed_score - want), x))
            target = self.nodes[self.leaf_of[near]]
        else:
            while not target.leaf:
                target = self.nodes[target.entries[0]]
        self.user_agg[u] = agg
        target.entries.append(u)
        self.leaf_of[u] = target.id
        self.inv_list[u] = self._path_to(target.id)
        for nid in reversed(self.inv_list[u]):
            if not self.nodes[nid].agg.absorb(agg):
                break
        if len(target.entries) > self.gamma:
            self._split(target)

    def _path_to(self, nid):
        return list(reversed(self._ancestors(nid))) + [nid]

    def _split(self, node):
        if node.leaf:
            node.entries.sort(key=lambda x: (self.user_agg[x].summed_score, x))
        half = len(node.entries) // 2
        moved = node.entries[half:]
        node.entries = node.entries[:half]
        sib = self._new_node(node.leaf, moved)
        node.agg = self._aggregate(node)
        if node.parent is None:
            top = self._new_node(False, [node.id, sib.id])
            self.root = top.id
            self._reindex(top.id)
            return
        parent = self.nodes[node.parent]
        parent.entries.insert(parent.entries.index(node.id) + 1, sib.id)
        sib.parent = parent.id
        self._reindex(parent.id)
        if len(parent.entries) > self.gamma:
            self._split(parent)

    # -- checks and dumps -----------------------------------------------------
    def check(self, g=None, aux=None):
        """Raise AssertionError on any structural or aggregate inconsistency.

        With g and aux given, also compare every user's aggregates against a
        fresh computation."""
        seen = set()
        for nid, node in self.nodes.items():
            if nid != self.root and node.parent is None:
                continue  # detached (never happens today, but harmless)
            assert len(node.entries) <= self.gamma, f"node {nid} overfull"
            assert node.agg == self._aggregate(node), f"node {nid} aggregate stale"
            for e in node.entries:
                assert node.agg.covers(self._entry_agg(node, e)), f"node {nid} misses entry {e}"
                if node.leaf:
                    seen.add(e)
                    assert self.leaf_of[e] == nid
                    assert self.inv_list[e] == self._path_to(nid), f"bad path for user {e}"
                else:
                    assert self.nodes[e].parent == nid
            for a in [node.agg] + ([self.user_agg[e] for e in node.entries] if node.leaf else []):
                for i in range(1, self.r_max):
                    assert a.bv[i - 1] & ~a.bv[i] == 0 and a.sup[i - 1] <= a.sup[i] \
                        and a.score[i - 1] <= a.score[i], "aggregates not monotone in r"
        assert seen == set(self.user_agg), "user set mismatch"
        for u, path in self.inv_list.items():
            assert path[0] == self.root
        if g is not None:
            assert set(g.user_adj) == seen, "synopsis users differ from graph users"
            for x in g.user_adj:
                assert self.best.get(x) == best_partner_score(aux, x), f"stale best score of {x}"
            for v in g.item_adj:
                assert self.item_sup.get(v) == item_support(g, aux, v), f"stale support at {v}"
            for u in seen:
                fresh = user_aggregates(g, aux, u, self.r_max)
                assert fresh == self.user_agg[u], f"user {u}: {self.user_agg[u]} != {fresh}"
        return True

    def dump(self):
        lines = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            kind = "leaf" if node.leaf else "internal"
            lines.append(f"{nid} | {kind} | {node.agg.fmt()}")
            if not node.leaf:
                stack.extend(reversed(node.entries))
        return lines
