import io

from cdsbn.bench import (ABLATION_GROUPS, BenchRecord, RunParams, ablation_monotone,
                         apply_param, measure_continuous, read_csv, run_ablation, trend_verdict,
                         write_csv)
from cdsbn.engine import Engine
from cdsbn.workload import GenConfig, build_graph, gen_queries, generate_workload

TINY = GenConfig(n_users=200, n_items=200, mean_degree=6, keyword_domain=20,
                 stream_fraction=0.3, seed=3)
PARAMS = RunParams(s=100, k=2, r=1, sigma=2, q=3, slides=5)


def test_csv_round_trip():
    rec = BenchRecord("d", "k=2", "slide", 1.23456, 4, counters={"pruned": 7}, extra={"x": 1})
    fh = io.StringIO()
    text = write_csv([rec, {"dataset": "e", "wall_ms": 2}], fh)
    assert fh.getvalue() == text and text.startswith("# schema=1\n")
    rows = read_csv(text)
    assert rows[0]["wall_ms"] == "1.2346" and rows[0]["pruned"] == "7"
    assert rows[1]["dataset"] == "e" and rows[1]["pruned"] == ""


def test_apply_param_routes_names():
    cfg, rp = apply_param(TINY, PARAMS, "k", 5)
    assert rp.k == 5 and cfg == TINY
    cfg, rp = apply_param(TINY, PARAMS, "domain", 30)
    assert cfg.keyword_domain == 30 and rp == PARAMS
    cfg, _ = apply_param(TINY, PARAMS, "kw_per_item", 2)
    assert cfg.keywords_per_item == 2


def test_measure_continuous_reports_both_paths():
    out = measure_continuous(TINY, PARAMS, with_bbd=2)
    assert out["slides"] == 5
    assert out["continuous_ms"] >= 0 and out["bbd_median_ms"] > 0


def test_ablation_is_monotone_and_keeps_results():
    wl = generate_workload(TINY)
    eng = Engine(build_graph(wl.edges, wl.keywords, 100))
    specs = gen_queries(eng.graph, 3, 3, seed=1, k=2, r=1, sigma=2)
    rows = run_ablation(eng, specs, extract=True)
    assert [r["group"] for r in rows] == list(ABLATION_GROUPS)
    assert ablation_monotone(rows)
    assert len({r["n_results"] for r in rows}) == 1
    counted = run_ablation(eng, specs)
    assert [(r["pruned"], r["extracted"]) for r in counted] == \
        [(r["pruned"], r["extracted"]) for r in rows]


def test_trend_verdict_signs():
    xs = [1, 1, 2, 2, 3, 3, 4, 4]
    up = [1.0, 1.1, 2.0, 2.2, 3.1, 3.0, 4.2, 4.0]
    assert trend_verdict(xs, up, +1)["ok"]
    assert not trend_verdict(xs, up, -1)["ok"]
    assert not trend_verdict(xs, [1.0] * 8, +1)["ok"]
