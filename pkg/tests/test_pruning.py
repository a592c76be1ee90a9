import random

from hypothesis import given, settings, strategies as st

from cdsbn.bitruss import QuerySpec, maximal_bitruss
from cdsbn.engine import snapshot_query
from cdsbn.motifs import AuxStore
from cdsbn.pruning import (LEMMA_NAMES, PruneConfig, PruneReport, center_screen, keyword_prune,
                           layer_size_prune, screen_candidate, score_ub_prune, support_prune)
from cdsbn.synopsis import Synopsis

from helpers import random_graph, random_spec, worked_graph


def _results(g, aux, syn, spec, cfg, report=None):
    return snapshot_query(g, syn, aux, spec, cfg, report).signatures()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_each_lemma_is_sound(seed):
    g = random_graph(seed % 5000)
    spec = random_spec(random.Random(seed))
    aux = AuxStore.build(g)
    syn = Synopsis.build(g, aux, gamma=3, r_max=3)
    want = _results(g, aux, None, spec, PruneConfig.none())
    assert _results(g, aux, syn, spec, PruneConfig.all()) == want
    for lemma in LEMMA_NAMES:
        assert _results(g, aux, syn, spec, PruneConfig.all().without(lemma)) == want
        assert _results(g, aux, syn, spec, PruneConfig.only(lemma, early_stop=True)) == want


def test_none_config_prunes_nothing():
    g = random_graph(7)
    aux = AuxStore.build(g)
    syn = Synopsis.build(g, aux, gamma=3)
    rep = PruneReport()
    _results(g, aux, syn, random_spec(random.Random(7)), PruneConfig.none(), rep)
    assert rep.candidates_pruned == 0
    assert rep.extracted == len(g.user_adj)


def test_keyword_screen_on_worked_example():
    g = worked_graph()
    aux = AuxStore.build(g)
    spec = QuerySpec({"sports"}, 1, 1, 1)
    assert center_screen(g, aux, spec, 2, PruneConfig.all()) == 1
    view = keyword_prune(g.hop_subgraph(2, 2), spec, g.item_attrs)
    assert view.num_edges == 0


def test_support_screen_uses_upper_bound():
    g = worked_graph()
    aux = AuxStore.build(g)
    assert aux.sup(2, 2) == 2
    view = support_prune(g.hop_subgraph(2, 2), 3, aux)
    assert view.weight(2, 2) == 0 and view.weight(1, 1) == 0


def test_score_screen_discards_weak_center():
    g = worked_graph()
    aux = AuxStore.build(g)
    # user 1 only pairs through item 1: scores with 2 and 3 are 0
    assert score_ub_prune(g.hop_subgraph(1, 4), 1, 1, aux) is None
    view = score_ub_prune(g.hop_subgraph(2, 4), 2, 11, aux)
    assert set(u for u, nb in view.user_adj.items() if nb) == {2, 3}


def test_layer_size_bound():
    g = worked_graph()
    view = g.hop_subgraph(2, 2)  # 3 users x 3 items: at most 4 butterflies per edge
    assert not layer_size_prune(view, 4)
    assert layer_size_prune(view, 5)


def test_report_counts_match_screens():
    g = random_graph(11)
    aux = AuxStore.build(g)
    spec = QuerySpec({"w0"}, 4, 1, 3)
    rep = PruneReport()
    hits = 0
    for c in g.user_adj:
        if screen_candidate(g, aux, spec, c, PruneConfig.all(), rep) is None:
            hits += 1
    assert sum(rep.pruned_candidates.values()) == hits


def test_candidate_view_never_loses_the_community():
    for seed in range(60):
        g = random_graph(seed)
        spec = random_spec(random.Random(seed))
        aux = AuxStore.build(g)
        for c in g.user_adj:
            plain = maximal_bitruss(g.hop_subgraph(c, 2 * spec.r), spec, c, g.item_attrs)
            view = screen_candidate(g, aux, spec, c, PruneConfig.all())
            got = None if view is None else maximal_bitruss(view, spec, c, g.item_attrs)
            assert (got and got.signature) == (plain and plain.signature)
