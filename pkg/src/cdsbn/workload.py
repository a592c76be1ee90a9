"""Synthetic bipartite streams, dataset loading and query workloads."""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .bitruss import QuerySpec
from .graph import (DEFAULT_BITS, StreamingGraph, UpdateItem, read_edges, read_keywords,
                    read_stream, write_edges, write_keywords, write_stream)

# mean and standard deviation of the weight Gaussian for each weight range
WEIGHT_GAUSS = {(1, 2): (1.5, 0.25), (1, 3): (2.0, 0.5), (1, 4): (2.5, 0.75)}


@dataclass(frozen=True)
class GenConfig:
    n_users: int = 25_000
    n_items: int = 25_000
    degree_dist: str = "powerlaw"  # powerlaw | beta
    alpha: float = 2.5
    beta_a: float = 2.0
    beta_b: float = 5.0
    mean_degree: float = 15.0
    min_w: int = 1
    max_w: int = 2
    weight_mean: float | None = None
    weight_std: float | None = None
    keyword_dist: str = "lognormal"  # lognormal | pareto | uniform
    keyword_domain: int = 500
    keywords_per_item: int = 3
    stream_fraction: float = 0.1  # share of edges replayed as stream items
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1 or self.n_items < 1:
            raise ValueError("layer sizes must be positive")
        if not 1 <= self.min_w <= self.max_w:
            raise ValueError("need 1 <= min_w <= max_w")
        if self.degree_dist not in ("powerlaw", "beta"):
            raise ValueError(f"unknown degree distribution {self.degree_dist!r}")
        if self.keyword_dist not in ("lognormal", "pareto", "uniform"):
            raise ValueError(f"unknown keyword distribution {self.keyword_dist!r}")
        if self.keywords_per_item > self.keyword_domain:
            raise ValueError("keywords_per_item exceeds keyword domain")
        if not 0.0 <= self.stream_fraction <= 1.0:
            raise ValueError("stream_fraction must lie in [0, 1]")

    @property
    def gauss(self):
        if self.weight_mean is not None and self.weight_std is not None:
            return self.weight_mean, self.weight_std
        default = ((self.min_w + self.max_w) / 2, (self.max_w - self.min_w) / 4)
        return WEIGHT_GAUSS.get((self.min_w, self.max_w), default)

    @classmethod
    def from_file(cls, path, **overrides):
        """Flat `key=value` config, `#` comments allowed."""
        kinds = {f.name: f.type for f in fields(cls)}
        vals = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, val = (s.strip() for s in line.split("=", 1))
                if key not in kinds:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                vals[key] = _coerce(kinds[key], val)
        vals.update(overrides)
        return cls(**vals)

    def with_(self, **kw):
        return replace(self, **kw)


def _coerce(kind, val):
    kind = str(kind)
    if val.lower() == "none":
        return None
    if "int" in kind:
        return int(val)
    if "float" in kind:
        return float(val)
    return val


@dataclass
class Workload:
    edges: list  # initial (u, v, w)
    stream: list  # (u, v) in arrival order
    keywords: dict  # item -> frozenset
    stream_edges: dict  # (u, v) -> generated weight of edges replayed as stream


def sample_degrees(cfg: GenConfig, rng) -> np.ndarray:
    n, cap = cfg.n_users, cfg.n_items
    if cfg.degree_dist == "powerlaw":
        # continuous Pareto tail with exponent alpha, scaled to the target mean
        a = cfg.alpha
        xmin = cfg.mean_degree * (a - 2) / (a - 1) if a > 2 else 1.0
        raw = xmin * (1.0 + rng.pareto(a - 1, size=n))
    else:
        scale = cfg.mean_degree * (cfg.beta_a + cfg.beta_b) / cfg.beta_a
        raw = rng.beta(cfg.beta_a, cfg.beta_b, size=n) * scale
    deg = np.maximum(1, np.rint(raw)).astype(np.int64)
    # degrees beyond the item layer are resampled
    for i in np.nonzero(deg > cap)[0]:
        while deg[i] > cap:
            if cfg.degree_dist == "powerlaw":
                x = xmin * (1.0 + rng.pareto(cfg.alpha - 1))
            else:
                x = rng.beta(cfg.beta_a, cfg.beta_b) * scale
            deg[i] = max(1, int(round(x)))
    return deg


def sample_weights(cfg: GenConfig, rng, size) -> np.ndarray:
    mu, sd = cfg.gauss
    w = np.rint(rng.normal(mu, sd, size=size))
    return np.clip(w, cfg.min_w, cfg.max_w).astype(np.int64)


def _keyword_index(cfg: GenConfig, rng, size):
    n = cfg.keyword_domain
    out = np.empty(size, dtype=np.int64)
    filled = 0
    while filled < size:
        m = size - filled
        if cfg.keyword_dist == "uniform":
            x = rng.integers(0, n, size=m)
        elif cfg.keyword_dist == "lognormal":
            x = np.floor(rng.lognormal(0.0, 1.0, size=m) * n / 10).astype(np.int64)
        else:
            x = np.floor(rng.pareto(1.5, size=m) * n / 20).astype(np.int64)
        x = x[x < n]
        out[filled:filled + len(x)] = x
        filled += len(x)
    return out


def sample_keywords(cfg: GenConfig, rng, n_items):
    kw = {}
    want = cfg.keywords_per_item
    for v in range(n_items):
        chosen = set()
        while len(chosen) < want:
            chosen.update(int(i) for i in _keyword_index(cfg, rng, want - len(chosen)))
        kw[v] = frozenset(f"k{i}" for i in chosen)
    return kw


def generate_workload(cfg: GenConfig) -> Workload:
    rng = np.random.default_rng(cfg.seed)
    deg = sample_degrees(cfg, rng)
    edges = []
    for u in range(cfg.n_users):
        items = rng.choice(cfg.n_items, size=int(deg[u]), replace=False)
        edges.extend((u, int(v)) for v in np.sort(items))
    weights = sample_weights(cfg, rng, len(edges))
    keywords = sample_keywords(cfg, rng, cfg.n_items)
    in_stream = rng.random(len(edges)) < cfg.stream_fraction
    initial, stream_edges, stream = [], {}, []
    for (u, v), w, s in zip(edges, weights.tolist(), in_stream.tolist()):
        if s:
            stream_edges[(u, v)] = w
            stream.extend([(u, v)] * w)
        else:
            initial.append((u, v, w))
    order = rng.permutation(len(stream))
    stream = [stream[i] for i in order]
    return Workload(initial, stream, keywords, stream_edges)


def generate(cfg: GenConfig, out_dir):
    """Write initial.txt, stream.txt and keywords.txt under out_dir."""
    wl = generate_workload(cfg)
    os.makedirs(out_dir, exist_ok=True)
    paths = tuple(os.path.join(out_dir, n) for n in ("initial.txt", "stream.txt", "keywords.txt"))
    write_edges(paths[0], wl.edges)
    write_stream(paths[1], wl.stream)
    write_keywords(paths[2], wl.keywords)
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        for k, v in asdict(cfg).items():
            fh.write(f"{k}={v}\n")
    return paths


def synthesize_keywords(items, cfg: GenConfig | None = None, seed=0):
    """Log-normal keyword sets for datasets that ship without keywords."""
    cfg = cfg or GenConfig(n_users=1, n_items=1, seed=seed)
    rng = np.random.default_rng(seed)
    items = sorted(items)
    kw = sample_keywords(cfg, rng, len(items))
    return {v: kw[i] for i, v in enumerate(items)}


def build_graph(edges, keywords, capacity, bits=DEFAULT_BITS) -> StreamingGraph:
    g = StreamingGraph(capacity, bits)
    g.load_initial(edges)
    for v, words in keywords.items():
        g.set_keywords(v, words)
    return g


def load_dataset(path, fmt="edge-list", keywords_path=None, capacity=500, synth_seed=0,
                 bits=DEFAULT_BITS) -> StreamingGraph:
    edges = read_edges(path, fmt)
    if keywords_path:
        kw = read_keywords(keywords_path)
    else:
        kw = synthesize_keywords({v for _, v, _ in edges}, seed=synth_seed)
    return build_graph(edges, kw, capacity, bits)


def stream_items(pairs, start_tick=1):
    return [UpdateItem(u, v, start_tick + i) for i, (u, v) in enumerate(pairs)]


def load_stream(path, start_tick=1):
    return read_stream(path, start_tick)


def keyword_frequencies(g) -> Counter:
    freq = Counter()
    for v in g.item_adj:
        a = g.item_attrs.get(v)
        if a is not None:
            freq.update(a.keywords)
    return freq


def gen_queries(g, count, q_size=5, seed=0, k=4, r=2, sigma=3):
    """Query specs with keywords drawn proportionally to item frequency in g."""
    freq = keyword_frequencies(g)
    if not freq:
        freq = Counter(w for a in g.item_attrs.values() for w in a.keywords)
    words = sorted(freq)
    if q_size > len(words):
        raise ValueError(f"|Q|={q_size} exceeds the {len(words)} keywords present")
    p = np.array([freq[w] for w in words], dtype=float)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        pick = rng.choice(len(words), size=q_size, replace=False, p=p)
        out.append(QuerySpec(frozenset(words[i] for i in pick), k, r, sigma, g.bits))
    return out
