import random

from hypothesis import given, settings, strategies as st

from cdsbn.graph import StreamingGraph
from cdsbn.motifs import AuxStore
from cdsbn.synopsis import (Aggregates, Synopsis, all_user_aggregates, best_partner_score,
                            entry_prunable, item_support, user_aggregates)

from helpers import random_graph, random_keywords, random_spec, random_stream, worked_graph


def _same_tree_content(a: Synopsis, b: Synopsis):
    assert a.user_agg == b.user_agg
    assert a.best == b.best and a.item_sup == b.item_sup
    assert a.nodes[a.root].agg == b.nodes[b.root].agg


def test_batch_build_equals_per_user():
    for seed in range(25):
        g = random_graph(seed)
        aux = AuxStore.build(g)
        best = {x: best_partner_score(aux, x) for x in g.user_adj}
        isup = {v: item_support(g, aux, v) for v in g.item_adj}
        batch = all_user_aggregates(g, best, isup, 3)
        for u in g.user_adj:
            assert batch[u] == user_aggregates(g, aux, u, 3)


def test_leaf_aggregates_bound_true_values():
    for seed in range(25):
        g = random_graph(seed)
        aux = AuxStore.build(g)
        for u in g.user_adj:
            agg = user_aggregates(g, aux, u, 3)
            for r in (1, 2, 3):
                hop = g.hop_subgraph(u, 2 * r)
                users = [x for x, nb in hop.user_adj.items() if nb]
                for x in users:
                    for y in users:
                        if x < y:
                            assert aux.score(x, y) <= agg.score[r - 1]
                for x, v, _ in hop.edges():
                    assert aux.sup(x, v) <= agg.sup[r - 1]
                    assert g.item_attrs[v].bitvec & ~agg.bv[r - 1] == 0


def test_worked_example_synopsis():
    g = worked_graph()
    aux = AuxStore.build(g)
    syn = Synopsis.build(g, aux, gamma=2, r_max=2)
    syn.check(g, aux)
    assert syn.nodes[syn.root].agg.score[0] == 11
    assert syn.depth() >= 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 3))
def test_maintained_equals_rebuilt(seed, gamma, r_max):
    rng = random.Random(seed)
    g = StreamingGraph(rng.choice([10, 25, 50]))
    for v, kw in random_keywords(rng, 10).items():
        g.set_keywords(v, kw)
    aux = AuxStore.build(g)
    syn = Synopsis.build(g, aux, gamma, r_max)
    for p in random_stream(seed, length=120):
        d = g.apply_insert(p)
        aux.maintain(g, d)
        syn.maintain(g, aux, d)
        if len(g.window) > g.window.capacity:
            d = g.apply_expire(g.window.head())
            aux.maintain(g, d)
            syn.maintain(g, aux, d)
        syn.check(g, aux)
    _same_tree_content(syn, Synopsis.build(g, aux, gamma, r_max))


def test_entry_pruning_is_sound():
    """An entry is pruned only if no user below it can center a community."""
    from cdsbn.oracle import oracle_per_center
    for seed in range(40):
        g = random_graph(seed)
        spec = random_spec(random.Random(seed))
        aux = AuxStore.build(g)
        syn = Synopsis.build(g, aux, gamma=3, r_max=3)
        found = oracle_per_center(g, spec)
        for u, agg in syn.user_agg.items():
            if entry_prunable(agg, spec) is not None:
                assert found[u] is None


def test_absorb_and_covers():
    a = Aggregates([1, 3], [1, 2], [0, 5])
    b = Aggregates([2, 2], [3, 3], [1, 1])
    assert a.absorb(b)
    assert a == Aggregates([3, 3], [3, 3], [1, 5])
    assert a.covers(b) and not b.covers(a)
    assert not a.absorb(b)


def test_splits_keep_paths_valid():
    g = StreamingGraph(400)
    aux = AuxStore.build(g)
    syn = Synopsis.build(g, aux, gamma=2, r_max=1)
    rng = random.Random(5)
    for t in range(1, 120):
        p = type(random_stream(0, length=1)[0])(rng.randrange(40), rng.randrange(8), t)
        d = g.apply_insert(p)
        aux.maintain(g, d)
        syn.maintain(g, aux, d)
    syn.check(g, aux)
    assert len(syn.user_agg) == len(g.user_adj)
    assert syn.depth() >= 3
    for u in syn.user_agg:
        assert syn.path(u)[0] == syn.root
