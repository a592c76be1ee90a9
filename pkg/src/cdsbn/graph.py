"""Streaming weighted bipartite graph over a count-based sliding window.

Users form the upper layer, items the lower layer.  An edge weight is the
number of in-window update items for that (user, item) pair, plus any base
weight loaded with the initial graph (base edges never expire).
"""
from __future__ import annotations

import hashlib
from collections import deque
from enum import Enum
from typing import Iterable, NamedTuple

DEFAULT_BITS = 128


class Layer(Enum):
    UPPER = "user"
    LOWER = "item"


class VertexId(NamedTuple):
    layer: Layer
    index: int


def user(i: int) -> VertexId:
    return VertexId(Layer.UPPER, i)


def item(i: int) -> VertexId:
    return VertexId(Layer.LOWER, i)


class StreamOrderError(ValueError):
    pass


class WindowError(ValueError):
    pass


def keyword_bit(word: str, bits: int = DEFAULT_BITS) -> int:
    # blake2b is stable across processes, unlike the builtin str hash
    h = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(h, "little") % bits


def keyword_bitvec(words: Iterable[str], bits: int = DEFAULT_BITS) -> int:
    bv = 0
    for w in words:
        bv |= 1 << keyword_bit(w, bits)
    return bv


class ItemAttributes(NamedTuple):
    keywords: frozenset
    bitvec: int

    @classmethod
    def of(cls, words, bits=DEFAULT_BITS):
        words = frozenset(words)
        return cls(words, keyword_bitvec(words, bits))


EMPTY_ATTRS = ItemAttributes(frozenset(), 0)


class UpdateItem(NamedTuple):
    user: int
    item: int
    timestamp: int


class EdgeDelta(NamedTuple):
    user: int
    item: int
    old_weight: int
    new_weight: int

    @property
    def created(self):
        return self.old_weight == 0 and self.new_weight > 0

    @property
    def removed(self):
        return self.new_weight == 0 and self.old_weight > 0


class SlidingWindow:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be positive")
        self.capacity = capacity
        self.items: deque = deque()

    def __len__(self):
        return len(self.items)

    @property
    def full(self):
        return len(self.items) >= self.capacity

    def head(self):
        return self.items[0] if self.items else None


class SubgraphView:
    """Mutable bipartite adjacency used for candidate extraction.

    Same dict-of-dicts layout as StreamingGraph so motif helpers work on both.
    A user may be present with no edges (e.g. an isolated center).
    """

    __slots__ = ("user_adj", "item_adj")

    def __init__(self, user_adj=None, item_adj=None):
        self.user_adj = user_adj if user_adj is not None else {}
        self.item_adj = item_adj if item_adj is not None else {}

    @classmethod
    def from_edges(cls, edges, users=()):
        view = cls()
        for u in users:
            view.user_adj.setdefault(u, {})
        for u, v, w in edges:
            view.add_edge(u, v, w)
        return view

    def copy(self):
        return SubgraphView(
            {u: dict(nb) for u, nb in self.user_adj.items()},
            {v: dict(nb) for v, nb in self.item_adj.items()},
        )

    def add_edge(self, u, v, w):
        self.user_adj.setdefault(u, {})[v] = w
        self.item_adj.setdefault(v, {})[u] = w

    def weight(self, u, v):
        return self.user_adj.get(u, {}).get(v, 0)

    def remove_edge(self, u, v):
        del self.user_adj[u][v]
        del self.item_adj[v][u]

    def remove_user(self, u):
        for v in self.user_adj.pop(u, {}):
            del self.item_adj[v][u]

    def remove_item(self, v):
        for u in self.item_adj.pop(v, {}):
            del self.user_adj[u][v]

    def edges(self):
        for u, nb in self.user_adj.items():
            for v, w in nb.items():
                yield u, v, w

    @property
    def num_edges(self):
        return sum(len(nb) for nb in self.user_adj.values())

    def __repr__(self):
        return f"SubgraphView(users={len(self.user_adj)}, items={len(self.item_adj)}, edges={self.num_edges})"


def layered_bfs(user_adj, item_adj, start: VertexId, depth: int, extra_edge=None):
    """Distances from `start` up to `depth` hops, split by layer.

    `extra_edge` (u, v) is treated as present; used to reason about the
    pre-state of an edge that has just been removed.
    """
    du, dv = {}, {}
    if start.layer is Layer.UPPER:
        du[start.index] = 0
        frontier, on_users = [start.index], True
    else:
        dv[start.index] = 0
        frontier, on_users = [start.index], False
    eu = ev = None
    if extra_edge is not None:
        eu, ev = extra_edge
    for d in range(1, depth + 1):
        nxt = []
        if on_users:
            for x in frontier:
                for y in user_adj.get(x, ()):
                    if y not in dv:
                        dv[y] = d
                        nxt.append(y)
                if x == eu and ev not in dv:
                    dv[ev] = d
                    nxt.append(ev)
        else:
            for y in frontier:
                for x in item_adj.get(y, ()):
                    if x not in du:
                        du[x] = d
                        nxt.append(x)
                if y == ev and eu not in du:
                    du[eu] = d
                    nxt.append(eu)
        if not nxt:
            break
        frontier, on_users = nxt, not on_users
    return du, dv


def induced_view(user_adj, users, items) -> SubgraphView:
    view = SubgraphView()
    for u in users:
        view.user_adj[u] = {}
    for v in items:
        view.item_adj[v] = {}
    for u in users:
        nb_out = view.user_adj[u]
        for v, w in user_adj.get(u, {}).items():
            if v in view.item_adj:
                nb_out[v] = w
                view.item_adj[v][u] = w
    return view


class StreamingGraph:
    def __init__(self, capacity: int, bits: int = DEFAULT_BITS):
        self.user_adj: dict[int, dict[int, int]] = {}
        self.item_adj: dict[int, dict[int, int]] = {}
        self.item_attrs: dict[int, ItemAttributes] = {}
        self.window = SlidingWindow(capacity)
        self.bits = bits
        self.base: dict[tuple[int, int], int] = {}
        self.tick = 0  # timestamp of the last applied update item
        self._started = False

    # -- loading --------------------------------------------------------
    def load_initial(self, edges):
        """Load G_0 as (u, v, w) triples; these weights never expire."""
        if self._started:
            raise StreamOrderError("initial graph must be loaded before streaming")
        for u, v, w in edges:
            if w < 1:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (u, v)
            self.base[key] = self.base.get(key, 0) + w
            self._bump(u, v, w)

    def set_keywords(self, v: int, words):
        self.item_attrs[v] = ItemAttributes.of(words, self.bits)

    def attrs(self, v: int) -> ItemAttributes:
        return self.item_attrs.get(v, EMPTY_ATTRS)

    # -- mutation -------------------------------------------------------
    def _bump(self, u, v, dw):
        nb = self.user_adj.setdefault(u, {})
        self.item_adj.setdefault(v, {})
        old = nb.get(v, 0)
        new = old + dw
        if new:
            nb[v] = new
            self.item_adj[v][u] = new
        else:
            del nb[v]
            del self.item_adj[v][u]
        return EdgeDelta(u, v, old, new)

    def apply_insert(self, p: UpdateItem) -> EdgeDelta:
        if self._started and p.timestamp <= self.tick:
            raise StreamOrderError(f"timestamp {p.timestamp} not after {self.tick}")
        self._started = True
        self.tick = p.timestamp
        self.window.items.append(p)
        return self._bump(p.user, p.item, 1)

    def apply_expire(self, p: UpdateItem) -> EdgeDelta:
        if self.window.head() != p:
            raise WindowError(f"{p} is not the oldest window item")
        self.window.items.popleft()
        return self._bump(p.user, p.item, -1)

    def slide(self, p: UpdateItem):
        ins = self.apply_insert(p)
        exp = None
        if len(self.window) > self.window.capacity:
            exp = self.apply_expire(self.window.head())
        return ins, exp

    def compact(self):
        """Drop isolated vertices.  Never called implicitly."""
        for u in [u for u, nb in self.user_adj.items() if not nb]:
            del self.user_adj[u]
        for v in [v for v, nb in self.item_adj.items() if not nb]:
            del self.item_adj[v]

    # -- reads ----------------------------------------------------------
    def users(self):
        return self.user_adj.keys()

    def items(self):
        return self.item_adj.keys()

    def edges(self):
        for u, nb in self.user_adj.items():
            for v, w in nb.items():
                yield u, v, w

    @property
    def num_edges(self):
        return sum(len(nb) for nb in self.user_adj.values())

    def weight(self, u, v):
        return self.user_adj.get(u, {}).get(v, 0)

    def _adj_of(self, v: VertexId):
        table = self.user_adj if v.layer is Layer.UPPER else self.item_adj
        if v.index not in table:
            raise KeyError(f"vertex {v} not in graph")
        return table[v.index]

    def neighbors(self, v: VertexId):
        mk = item if v.layer is Layer.UPPER else user
        return {(mk(x), w) for x, w in self._adj_of(v).items()}

    def degree(self, v: VertexId):
        return len(self._adj_of(v))

    def distances(self, start: VertexId, depth: int, extra_edge=None):
        return layered_bfs(self.user_adj, self.item_adj, start, depth, extra_edge)

    def hop_subgraph(self, center, depth: int) -> SubgraphView:
        if isinstance(center, VertexId):
            if center.layer is not Layer.UPPER:
                raise ValueError("hop_subgraph is centered at a user vertex")
            center = center.index
        if center not in self.user_adj:
            raise KeyError(f"user {center} not in graph")
        if depth < 0:
            raise ValueError("depth must be non-negative")
        du, dv = layered_bfs(self.user_adj, self.item_adj, user(center), depth)
        return induced_view(self.user_adj, du, dv)

    def view(self) -> SubgraphView:
        """Snapshot copy of the whole graph as a SubgraphView."""
        return SubgraphView(
            {u: dict(nb) for u, nb in self.user_adj.items()},
            {v: dict(nb) for v, nb in self.item_adj.items()},
        )

    def recount(self):
        """Expected edge weights from base weights plus the window contents."""
        counts = dict(self.base)
        for p in self.window.items:
            key = (p.user, p.item)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def check_consistency(self):
        expected = self.recount()
        actual = {(u, v): w for u, v, w in self.edges()}
        if expected != actual:
            raise AssertionError("window-consistency violated")
        mirror = {(u, v): w for v, nb in self.item_adj.items() for u, w in nb.items()}
        if mirror != actual:
            raise AssertionError("user_adj and item_adj disagree")
        return True


# -- file formats -----------------------------------------------------------

def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            yield lineno, s.split()


def read_edges(path, fmt="edge-list"):
    """Parse an initial-graph file into (u, v, w) triples.

    `konect` keeps only the first two columns (each line counts 1);
    `edge-list` reads an optional integer weight from column three.
    """
    if fmt not in ("konect", "edge-list"):
        raise ValueError(f"unknown format {fmt!r}")
    out = []
    for lineno, cols in _data_lines(path):
        try:
            u, v = int(cols[0]), int(cols[1])
            w = 1
            if fmt == "edge-list" and len(cols) > 2:
                w = int(cols[2])
        except (ValueError, IndexError):
            raise ValueError(f"{path}:{lineno}: malformed edge line") from None
        if u < 0 or v < 0 or w < 1:
            raise ValueError(f"{path}:{lineno}: ids must be >= 0 and weight >= 1")
        out.append((u, v, w))
    return out


def read_keywords(path):
    kw = {}
    for lineno, cols in _data_lines(path):
        try:
            v = int(cols[0])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed keyword line") from None
        kw[v] = frozenset(cols[1:])
    return kw


def read_stream(path, start_tick=1):
    out = []
    for lineno, cols in _data_lines(path):
        try:
            u, v = int(cols[0]), int(cols[1])
        except (ValueError, IndexError):
            raise ValueError(f"{path}:{lineno}: malformed stream line") from None
        out.append((u, v))
    return [UpdateItem(u, v, start_tick + i) for i, (u, v) in enumerate(out)]


def write_edges(path, edges):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# user item weight\n")
        for u, v, w in edges:
            fh.write(f"{u} {v} {w}\n")


def write_keywords(path, kw):
    with open(path, "w", encoding="utf-8") as fh:
        for v in sorted(kw):
            fh.write(" ".join([str(v), *sorted(kw[v])]) + "\n")


def write_stream(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in pairs:
            fh.write(f"{u} {v}\n")
