"""Random instances shared by the test modules."""
import random

from cdsbn.bitruss import QuerySpec
from cdsbn.graph import StreamingGraph, UpdateItem

WORKED_EDGES = [(1, 1, 2), (2, 1, 4), (3, 1, 2), (2, 2, 5), (3, 2, 1), (2, 3, 6), (3, 3, 3)]


def worked_graph(capacity=10, keywords=("bank",)):
    g = StreamingGraph(capacity)
    g.load_initial(WORKED_EDGES)
    for v in (1, 2, 3):
        g.set_keywords(v, keywords)
    return g


def random_edges(rng, n_users, n_items, p, max_w=4):
    out = []
    for u in range(n_users):
        for v in range(n_items):
            if rng.random() < p:
                out.append((u, v, rng.randint(1, max_w)))
    return out


def random_keywords(rng, n_items, domain=6, per_item=(1, 3)):
    vocab = [f"w{i}" for i in range(domain)]
    return {v: frozenset(rng.sample(vocab, rng.randint(*per_item))) for v in range(n_items)}


def random_graph(seed, max_edges=300, capacity=50):
    """Dense-ish small graph so that communities actually occur."""
    rng = random.Random(seed)
    nu, ni = rng.randint(4, 14), rng.randint(4, 14)
    p = rng.uniform(0.3, 0.8)
    edges = random_edges(rng, nu, ni, p)[:max_edges]
    g = StreamingGraph(capacity)
    g.load_initial(edges)
    for v, kw in random_keywords(rng, ni).items():
        g.set_keywords(v, kw)
    return g


def random_spec(rng, domain=6):
    vocab = [f"w{i}" for i in range(domain)]
    q = rng.choice([2, 3, 5, 8, 10])
    return QuerySpec(frozenset(rng.sample(vocab, min(q, domain))), rng.choice([3, 4, 5]),
                     rng.choice([1, 2, 3]), rng.randint(1, 5))


def random_stream(seed, n_users=10, n_items=10, length=300, hot=0.6, block=4):
    """Update items biased toward a small hot block so butterflies form."""
    rng = random.Random(seed)
    out = []
    for t in range(1, length + 1):
        if rng.random() < hot:
            u, v = rng.randrange(min(block, n_users)), rng.randrange(min(block, n_items))
        else:
            u, v = rng.randrange(n_users), rng.randrange(n_items)
        out.append(UpdateItem(u, v, t))
    return out
