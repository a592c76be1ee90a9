import numpy as np
import pytest

from cdsbn.graph import StreamingGraph
from cdsbn.workload import (GenConfig, build_graph, gen_queries, generate, generate_workload,
                            load_dataset, load_stream, sample_degrees, sample_weights,
                            synthesize_keywords)

SMALL = GenConfig(n_users=300, n_items=200, seed=4)


def test_generator_is_deterministic():
    a, b = generate_workload(SMALL), generate_workload(SMALL)
    assert a.edges == b.edges and a.stream == b.stream and a.keywords == b.keywords
    assert generate_workload(SMALL.with_(seed=5)).edges != a.edges


def test_stream_replays_generated_weights():
    wl = generate_workload(SMALL.with_(stream_fraction=0.5))
    counts = {}
    for e in wl.stream:
        counts[e] = counts.get(e, 0) + 1
    assert counts == wl.stream_edges
    initial = {(u, v) for u, v, _ in wl.edges}
    assert not initial & set(wl.stream_edges)


def test_weights_stay_in_range():
    rng = np.random.default_rng(0)
    for lo, hi in [(1, 2), (1, 3), (1, 4)]:
        w = sample_weights(SMALL.with_(min_w=lo, max_w=hi), rng, 5000)
        assert w.min() >= lo and w.max() <= hi
        assert len(set(w.tolist())) == hi - lo + 1


@pytest.mark.parametrize("dist", ["powerlaw", "beta"])
def test_degrees_near_target_mean(dist):
    cfg = GenConfig(n_users=20_000, n_items=20_000, degree_dist=dist, seed=1)
    deg = sample_degrees(cfg, np.random.default_rng(1))
    assert deg.min() >= 1 and deg.max() <= cfg.n_items
    assert abs(deg.mean() - cfg.mean_degree) < 0.2 * cfg.mean_degree


@pytest.mark.parametrize("dist", ["lognormal", "pareto", "uniform"])
def test_keyword_sets(dist):
    wl = generate_workload(SMALL.with_(keyword_dist=dist, keyword_domain=40, keywords_per_item=4))
    assert len(wl.keywords) == SMALL.n_items
    for words in wl.keywords.values():
        assert len(words) == 4
        assert all(0 <= int(w[1:]) < 40 for w in words)


def test_bad_configs_are_rejected():
    with pytest.raises(ValueError):
        GenConfig(min_w=3, max_w=2)
    with pytest.raises(ValueError):
        GenConfig(keyword_dist="zipf")
    with pytest.raises(ValueError):
        GenConfig(keyword_domain=2, keywords_per_item=3)


def test_config_file(tmp_path):
    p = tmp_path / "gen.cfg"
    p.write_text("# small\nn_users = 50\nmax_w=3\nweight_mean=none\n")
    cfg = GenConfig.from_file(p, seed=9)
    assert (cfg.n_users, cfg.max_w, cfg.weight_mean, cfg.seed) == (50, 3, None, 9)
    p.write_text("colour=red\n")
    with pytest.raises(ValueError, match="unknown key"):
        GenConfig.from_file(p)


def test_files_round_trip(tmp_path):
    wl = generate_workload(SMALL)
    initial, stream, keywords = generate(SMALL, tmp_path)
    g = load_dataset(initial, keywords_path=keywords, capacity=100)
    assert g.num_edges == len({(u, v) for u, v, _ in wl.edges})
    assert [(p.user, p.item) for p in load_stream(stream)] == wl.stream
    assert (tmp_path / "config.txt").read_text().startswith("n_users=300")


def test_synthesized_keywords_cover_every_item():
    kw = synthesize_keywords({3, 7, 11}, seed=2)
    assert set(kw) == {3, 7, 11} and all(kw.values())
    assert kw == synthesize_keywords({3, 7, 11}, seed=2)


def test_gen_queries():
    wl = generate_workload(SMALL)
    g = build_graph(wl.edges, wl.keywords, 100)
    specs = gen_queries(g, 3, q_size=4, seed=1, k=2, r=1, sigma=5)
    assert len(specs) == 3
    assert all(len(s.keywords) == 4 and (s.k, s.r, s.sigma) == (2, 1, 5) for s in specs)
    assert specs == gen_queries(g, 3, q_size=4, seed=1, k=2, r=1, sigma=5)
    with pytest.raises(ValueError, match="exceeds"):
        gen_queries(StreamingGraph(5), 1, q_size=2)
