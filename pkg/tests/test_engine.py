import random

import pytest
from hypothesis import given, settings, strategies as st

from cdsbn.bitruss import QuerySpec
from cdsbn.engine import Engine, bbd_baseline, snapshot_query, touched_centers
from cdsbn.graph import StreamingGraph, UpdateItem
from cdsbn.oracle import oracle_enumerate
from cdsbn.pruning import PruneConfig

from helpers import random_graph, random_keywords, random_spec, random_stream, worked_graph


def test_worked_example_snapshot():
    eng = Engine(worked_graph(), gamma=2, r_max=2)
    res = eng.snapshot(QuerySpec({"bank"}, 2, 1, 11))
    (c,) = res.communities.values()
    assert c.users == {2, 3} and c.items == {1, 2, 3}
    assert len(eng.snapshot(QuerySpec({"bank"}, 2, 1, 12))) == 0
    assert eng.bbd(QuerySpec({"bank"}, 2, 1, 11)).same(res)


def test_empty_graph():
    eng = Engine(StreamingGraph(5))
    spec = QuerySpec({"a"}, 1, 1, 1)
    assert len(eng.snapshot(spec)) == 0
    assert len(eng.register(spec)) == 0
    assert len(eng.bbd(spec)) == 0


def test_radius_beyond_synopsis_is_rejected():
    eng = Engine(worked_graph(), r_max=2)
    with pytest.raises(ValueError, match="r_max"):
        eng.snapshot(QuerySpec({"bank"}, 2, 3, 1))


def test_register_is_idempotent_and_unregister_forgets():
    eng = Engine(worked_graph())
    spec = QuerySpec({"bank"}, 2, 1, 11)
    a = eng.register(spec)
    b = eng.register(spec)
    assert a.same(b) and len(eng.queries) == 1
    eng.unregister(spec)
    eng.unregister(spec)
    assert not eng.queries


def test_snapshot_and_bbd_match_oracle():
    for seed in range(30):
        g = random_graph(seed)
        spec = random_spec(random.Random(seed + 500))
        want = set(oracle_enumerate(g, spec))
        assert snapshot_query(g, None, Engine(g, synopsis=False).aux, spec).signatures() == want
        assert bbd_baseline(g, spec).signatures() == want


def test_threads_do_not_change_results():
    g = random_graph(3)
    spec = random_spec(random.Random(3))
    one = Engine(g, workers=1).snapshot(spec)
    many = Engine(g, workers=4).snapshot(spec)
    assert one.same(many)


def _stream_engine(seed, cap, **kw):
    g = StreamingGraph(cap)
    for v, words in random_keywords(random.Random(seed), 10, domain=4).items():
        g.set_keywords(v, words)
    return Engine(g, gamma=3, r_max=3, **kw)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([15, 30, 60]))
def test_continuous_equals_fresh_snapshot(seed, cap):
    eng = _stream_engine(seed, cap)
    rng = random.Random(seed)
    specs = [random_spec(rng, domain=4) for _ in range(2)]
    for spec in specs:
        eng.register(spec)
    for p in random_stream(seed, length=80):
        eng.slide(p)
        for spec in specs:
            assert eng.results(spec).signatures() == eng.snapshot(spec).signatures()
    assert len(eng.graph.window) <= cap


def test_continuous_with_pruning_off_matches():
    spec = QuerySpec(frozenset({"w0", "w1", "w2"}), 3, 1, 2)
    pruned = _stream_engine(9, 25)
    plain = _stream_engine(9, 25, synopsis=False)
    pruned.register(spec)
    plain.register(spec, PruneConfig.none())
    for p in random_stream(9, length=120):
        pruned.slide(p)
        plain.slide(p)
        assert pruned.results(spec).same(plain.results(spec))


def test_touched_centers_cover_the_edge_neighbourhood():
    g = worked_graph()
    ins = g.apply_insert(UpdateItem(4, 3, 1))
    assert touched_centers(g, ins, 1) == {2, 3, 4}
    assert touched_centers(g, ins, 2) == {1, 2, 3, 4}


def test_result_records_are_sorted_lines():
    eng = Engine(worked_graph())
    res = eng.snapshot(QuerySpec({"bank"}, 2, 1, 11))
    lines = res.records()
    assert len(lines) == 1 and lines[0].startswith("2; 2,3; 1,2,3")
