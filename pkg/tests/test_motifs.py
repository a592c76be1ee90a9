import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from cdsbn.graph import StreamingGraph, SubgraphView
from cdsbn.motifs import (AuxScorePair, AuxStore, ConsistencyError, apply_score_delta,
                          butterfly_score, compute_ub_sup, edge_supports, lambda_for_update,
                          pair_stats, relationship_score_direct, relationship_score_fast,
                          subgraph_edge_support, wedge_weight)

from helpers import random_edges, random_stream, worked_graph


def test_worked_example_values():
    g = worked_graph()
    assert wedge_weight(g, 1, 1, 2) == 2
    assert butterfly_score(g, 2, 3, 2, 3) == 3
    assert relationship_score_direct(g, 2, 3) == 11
    X, Y = pair_stats(g)[(2, 3)]
    assert (X, Y) == (6, 14)
    assert relationship_score_fast(AuxScorePair(X, Y)) == 11


def test_missing_edges_give_zero():
    g = worked_graph()
    assert wedge_weight(g, 1, 2, 2) == 0
    assert butterfly_score(g, 1, 2, 1, 2) == 0
    assert relationship_score_direct(g, 1, 1) == 0


def test_fast_score_rejects_impossible_pairs():
    with pytest.raises(ConsistencyError):
        relationship_score_fast(AuxScorePair(3, 4))  # odd difference
    with pytest.raises(ConsistencyError):
        relationship_score_fast(AuxScorePair(1, 5))  # negative


def _graph(edges):
    g = StreamingGraph(10)
    g.load_initial(edges)
    return g


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_identity_matches_summation(seed):
    rng = random.Random(seed)
    g = _graph(random_edges(rng, rng.randint(1, 9), rng.randint(1, 9), rng.random(), max_w=5))
    stats = pair_stats(g)
    for a, b in combinations(sorted(g.user_adj), 2):
        X, Y = stats.get((a, b), (0, 0))
        assert (X * X - Y) // 2 == relationship_score_direct(g, a, b)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_edge_supports_match_direct_count(seed):
    rng = random.Random(seed)
    g = _graph(random_edges(rng, rng.randint(1, 8), rng.randint(1, 8), rng.random()))
    sup = edge_supports(g)
    for u, v, _ in g.edges():
        assert sup[(u, v)] == subgraph_edge_support(g, u, v) == compute_ub_sup(g, u, v)


def test_lambda_cases():
    assert lambda_for_update(0, 2, 1) == 1   # 0 -> 1 below the other weight
    assert lambda_for_update(2, 2, 1) == 0   # already at the other weight
    assert lambda_for_update(1, 3, -1) == -1
    assert lambda_for_update(4, 3, -1) == 0  # still above the other weight
    with pytest.raises(ValueError):
        lambda_for_update(0, 2, -1)


def test_score_delta_matches_rebuild():
    # wedge at weight 1 rising to 2 on an item where the other side holds 3
    p = apply_score_delta(AuxScorePair(2, 2), 1, 1)
    assert (p.X, p.Y) == (3, 5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 60))
def test_maintained_aux_equals_rebuild(seed, cap):
    g = StreamingGraph(cap)
    aux = AuxStore.build(g)
    for p in random_stream(seed, length=150):
        ins = g.apply_insert(p)
        aux.maintain(g, ins)
        if len(g.window) > cap:
            aux.maintain(g, g.apply_expire(g.window.head()))
    assert aux.same_as(AuxStore.build(g))
    for x in aux.partners:
        for y in aux.partners[x]:
            assert aux.score(x, y) == relationship_score_direct(g, x, y)


def test_pairs_vanish_when_no_common_item_left():
    from cdsbn.graph import UpdateItem
    g = StreamingGraph(2)
    aux = AuxStore.build(g)
    for t, (u, v) in enumerate([(0, 0), (1, 0), (2, 5), (3, 5)], 1):
        aux.maintain(g, g.apply_insert(UpdateItem(u, v, t)))
        if len(g.window) > 2:
            aux.maintain(g, g.apply_expire(g.window.head()))
        if t == 2:
            assert 1 in aux.partners[0]
    assert not aux.partners.get(0) and (0, 1) not in aux.pairs


def test_has_partner_at_least():
    g = worked_graph()
    aux = AuxStore.build(g)
    assert aux.has_partner_at_least(2, 11)
    assert not aux.has_partner_at_least(2, 12)
    assert not aux.has_partner_at_least(2, 11, among={1})


def test_pair_stats_on_view():
    view = SubgraphView.from_edges([(0, 0, 2), (1, 0, 3), (0, 1, 1), (1, 1, 1)])
    assert pair_stats(view)[(0, 1)] == [3, 5]
