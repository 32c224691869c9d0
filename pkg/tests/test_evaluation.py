import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_band_report, brute_distance, exact_mean_std
from quadnet.evaluation import (
    N_BINS,
    classify_pair,
    emit_histograms,
    evaluate,
    exact_row_distances,
    histogram,
    quad_distances,
    ranking_correct,
    report_from_distances,
)
from quadnet.loss import LossConfig
from quadnet.projector import init_params

CFG = LossConfig()
dist = st.floats(0.0, 2.0)


@pytest.mark.parametrize("ds,expected", [((0.2, 0.4, 0.8), 1), ((0.5, 0.4, 0.8), 0), ((0.2, 0.2, 0.8), 0)])
def test_ranking_correct(ds, expected):
    assert ranking_correct(*ds) == expected


@pytest.mark.parametrize("d,label", [(0.05, "similar"), (0.25, "complementary"), (0.41, "negative"),
                                     (0.1, "similar"), (0.4, "complementary")])
def test_classify_pair(d, label):
    assert classify_pair(d, CFG) == label


def test_single_quad_report():
    r = report_from_distances([0.05], [0.25], [1.0], CFG)
    assert (r.ranking_acc, r.sim_acc, r.comp_acc) == (1.0, 1.0, 1.0)
    assert r.histograms["similar"][2] == 1 and r.histograms["complementary"][12] == 1
    assert r.histograms["negative"][50] == 1


def test_empty_is_error():
    with pytest.raises(Exception, match="empty"):
        report_from_distances([], [], [], CFG)


def test_histogram_edges():
    h = histogram([0.0, 0.019, 0.02, 1.99, 2.0])
    assert len(h) == N_BINS and sum(h) == 5
    assert h[0] == 2 and h[1] == 1 and h[99] == 2


def test_exact_distances_match_brute():
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, 30, 16))
    assert exact_row_distances(u, v) == [brute_distance(a, b) for a, b in zip(u.tolist(), v.tolist())]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(dist, dist, dist), min_size=1, max_size=40))
def test_report_matches_brute_force(rows):
    d_as, d_ac, d_an = (list(c) for c in zip(*rows))
    r = report_from_distances(d_as, d_ac, d_an, CFG)
    assert (r.ranking_acc, r.sim_acc, r.comp_acc) == brute_band_report(d_as, d_ac, d_an, CFG.m_s, CFG.m_c)
    for rel, ds in zip(("similar", "complementary", "negative"), (d_as, d_ac, d_an)):
        mean, std = exact_mean_std(ds)
        assert r.dist_stats[rel] == {"mean": mean, "std_dev": std, "count": len(ds)}
        assert sum(r.histograms[rel]) == len(ds)
    for name in ("ranking_acc", "sim_acc", "comp_acc"):
        assert 0.0 <= getattr(r, name) <= 1.0


@settings(max_examples=300)
@given(dist, dist, dist, st.lists(st.floats(1e-3, 10.0), min_size=3, max_size=3), st.floats(-5, 5))
def test_ranking_invariant_under_monotone_map(a, b, c, steps, offset):
    # random strictly increasing map on {a, b, c}: sorted values get cumulative positive steps
    values = sorted({a, b, c})
    g = dict(zip(values, offset + np.cumsum(steps[:len(values)])))
    assert ranking_correct(a, b, c) == ranking_correct(g[a], g[b], g[c])


def test_evaluate_small(small_sample):
    _, split, store = small_sample
    params = init_params((store.dim, 16, 8), np.random.default_rng(0))
    r = evaluate(split.test, params, store, CFG)
    assert r.count == len(split.test)
    assert {s["count"] for s in r.dist_stats.values()} == {r.count}
    d_as, d_ac, d_an, skipped = quad_distances(split.test, params, store)
    assert skipped == 0 and len(d_as) == r.count


def test_emit_histograms(tmp_path):
    r = report_from_distances([0.05, 0.3], [0.25, 0.26], [1.0, 1.99], CFG)
    r.histograms["negative"] = [0] * N_BINS
    emit_histograms(r, tmp_path / "h.csv")
    first = (tmp_path / "h.csv").read_bytes()
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["bin_low", "bin_high", "count_similar", "count_complementary", "count_negative"]
    assert len(rows) == 101
    assert rows[1][:2] == ["0.00", "0.02"] and rows[-1][:2] == ["1.98", "2.00"]
    assert all(row[4] == "0" for row in rows[1:])
    emit_histograms(r, tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_bytes() == first
