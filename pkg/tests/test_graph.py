import random

import pytest
from hypothesis import given, settings, strategies as st

from cdsbn.graph import (StreamingGraph, StreamOrderError, SubgraphView, UpdateItem, WindowError,
                         item, keyword_bit, keyword_bitvec, layered_bfs, read_edges, read_keywords,
                         read_stream, user, write_edges, write_keywords, write_stream)

from helpers import WORKED_EDGES, random_stream, worked_graph


def test_keyword_bits_are_stable_and_in_range():
    assert keyword_bit("bank") == keyword_bit("bank")
    assert 0 <= keyword_bit("bank", 64) < 64
    assert keyword_bitvec(["a", "b"]) == (1 << keyword_bit("a")) | (1 << keyword_bit("b"))
    assert keyword_bitvec([]) == 0


def test_insert_then_expire_restores_empty_graph():
    g = StreamingGraph(2)
    d1 = g.apply_insert(UpdateItem(0, 0, 1))
    assert d1.created and g.weight(0, 0) == 1
    d2 = g.apply_insert(UpdateItem(0, 0, 2))
    assert (d2.old_weight, d2.new_weight) == (1, 2) and not d2.created
    d3 = g.apply_expire(UpdateItem(0, 0, 1))
    assert (d3.old_weight, d3.new_weight) == (2, 1)
    d4 = g.apply_expire(UpdateItem(0, 0, 2))
    assert d4.removed and g.weight(0, 0) == 0
    assert g.num_edges == 0


def test_timestamps_must_increase():
    g = StreamingGraph(3)
    g.apply_insert(UpdateItem(0, 0, 5))
    with pytest.raises(StreamOrderError):
        g.apply_insert(UpdateItem(1, 1, 5))


def test_expire_must_take_the_window_head():
    g = StreamingGraph(3)
    g.apply_insert(UpdateItem(0, 0, 1))
    g.apply_insert(UpdateItem(0, 1, 2))
    with pytest.raises(WindowError):
        g.apply_expire(UpdateItem(0, 1, 2))


def test_initial_load_only_before_streaming():
    g = StreamingGraph(3)
    g.apply_insert(UpdateItem(0, 0, 1))
    with pytest.raises(StreamOrderError):
        g.load_initial([(1, 1, 1)])


def test_initial_edges_do_not_expire():
    g = StreamingGraph(1)
    g.load_initial([(0, 0, 3)])
    g.slide(UpdateItem(0, 0, 1))
    g.slide(UpdateItem(1, 0, 2))
    assert g.weight(0, 0) == 3  # the stream copy expired, the base weight stays
    assert g.weight(1, 0) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40))
def test_window_weights_match_recount(seed, cap):
    g = StreamingGraph(cap)
    for p in random_stream(seed, length=120):
        g.slide(p)
        assert len(g.window) <= cap
    g.check_consistency()
    assert g.recount() == {(u, v): w for u, v, w in g.edges()}


def test_layered_bfs_distances_on_worked_example():
    g = worked_graph()
    du, dv = layered_bfs(g.user_adj, g.item_adj, user(1), 4)
    assert du == {1: 0, 2: 2, 3: 2}
    assert dv == {1: 1, 2: 3, 3: 3}
    du, dv = layered_bfs(g.user_adj, g.item_adj, item(2), 1)
    assert set(du) == {2, 3} and dv == {2: 0}


def test_layered_bfs_extra_edge():
    g = StreamingGraph(3)
    g.load_initial([(0, 0, 1), (1, 1, 1)])
    du, _ = layered_bfs(g.user_adj, g.item_adj, user(0), 4, extra_edge=(1, 0))
    assert du == {0: 0, 1: 2}


def test_hop_subgraph_radius():
    g = worked_graph()
    h = g.hop_subgraph(1, 2)
    assert set(h.user_adj) == {1, 2, 3} and set(h.item_adj) == {1}
    h = g.hop_subgraph(1, 4)
    assert h.num_edges == len(WORKED_EDGES)


def test_subgraph_view_mutation():
    view = SubgraphView.from_edges(WORKED_EDGES)
    view.remove_user(2)
    assert 2 not in view.user_adj and all(2 not in nb for nb in view.item_adj.values())
    view.remove_item(1)
    assert view.num_edges == 2


def test_compact_drops_isolated_vertices():
    g = StreamingGraph(1)
    g.slide(UpdateItem(0, 0, 1))
    g.slide(UpdateItem(1, 1, 2))
    g.compact()
    assert set(g.user_adj) == {1} and set(g.item_adj) == {1}


def test_file_round_trip(tmp_path):
    edges = [(0, 1, 2), (3, 4, 1)]
    kw = {1: frozenset({"a", "b"}), 4: frozenset({"c"})}
    write_edges(tmp_path / "e.txt", edges)
    write_keywords(tmp_path / "k.txt", kw)
    write_stream(tmp_path / "s.txt", [(0, 1), (3, 4)])
    assert read_edges(tmp_path / "e.txt") == edges
    assert read_keywords(tmp_path / "k.txt") == kw
    assert read_stream(tmp_path / "s.txt", 5) == [UpdateItem(0, 1, 5), UpdateItem(3, 4, 6)]


def test_konect_ignores_extra_columns(tmp_path):
    p = tmp_path / "out.konect"
    p.write_text("% bip unweighted\n% 3 2 2\n1 2 1 946684800\n2 2 1 946684801\n")
    assert read_edges(p, "konect") == [(1, 2, 1), (2, 2, 1)]


def test_malformed_lines_name_the_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1 2\nzero one\n")
    with pytest.raises(ValueError, match=":2:"):
        read_edges(p)


def test_random_slides_keep_adjacency_symmetric():
    rng = random.Random(3)
    g = StreamingGraph(15)
    for t in range(1, 200):
        g.slide(UpdateItem(rng.randrange(6), rng.randrange(6), t))
        for u, nb in g.user_adj.items():
            for v, w in nb.items():
                assert g.item_adj[v][u] == w > 0
