import math

import numpy as np
import pytest

import bruteforce
from ahcbench.exceptions import BudgetMismatch, ParamMismatch
from ahcbench.fingerprint import Fingerprint
from ahcbench.metrics import (
    Features, MetricReport, ScoredMol, auc_series, compute_all, diverse_select, evaluate_stream,
    rank, recording_points, top10_mean,
)
from ahcbench.oracle import OracleRecord
from synthetic import synthetic_log


def _stream(scores):
    recs = [OracleRecord(i + 1, f"m{i}", s, True) for i, s in enumerate(scores)]
    feats = {r.smiles: Features(Fingerprint(64, frozenset({i})), True) for i, r in enumerate(recs)}
    return recs, feats


def test_all_ones_stream():
    recs, feats = _stream([1.0] * 100)
    rep = evaluate_stream(recs, feats, budget=100, record_interval=1)
    assert rep.auc_plain == 0.955


def test_top10_padding():
    pool = [ScoredMol(f"k{i}", s, i) for i, s in enumerate([0.5, 0.4, 0.3])]
    assert top10_mean(pool) == pytest.approx(0.12)
    assert top10_mean([]) == 0.0
    assert top10_mean([ScoredMol(f"k{i}", 1.0, i) for i in range(15)]) == 1.0


def test_rank_tie_break():
    pool = [ScoredMol("b", 0.5, 7), ScoredMol("a", 0.5, 3), ScoredMol("c", 0.9, 9)]
    assert [m.key for m in rank(pool)] == ["c", "a", "b"]


def test_diverse_select_threshold():
    fa = Fingerprint(64, frozenset(range(20)))
    fb = Fingerprint(64, frozenset(range(7)) | frozenset(range(30, 43)))  # 7/33 similar to a
    fc = Fingerprint(64, frozenset(range(10)))                              # 0.5 to a
    ranked = [ScoredMol("a", 0.9, 1, fa), ScoredMol("c", 0.8, 2, fc), ScoredMol("b", 0.7, 3, fb)]
    assert [m.key for m in diverse_select(ranked)] == ["a", "b"]


def test_recording_points():
    assert recording_points(250, 100) == [100, 200, 250]
    assert recording_points(200, 100) == [100, 200]
    assert recording_points(40, 100) == [40]
    assert recording_points(0, 100) == []


def test_auc_series_hold_and_errors():
    assert auc_series([5], [1.0], 10) == 0.6
    assert auc_series([], [], 10) == 0.0
    with pytest.raises(BudgetMismatch):
        auc_series([5, 20], [1.0, 1.0], 10)
    with pytest.raises(BudgetMismatch):
        auc_series([5, 5], [1.0, 1.0], 10)


def test_log_beyond_budget():
    recs, feats = _stream([0.5] * 12)
    with pytest.raises(BudgetMismatch):
        evaluate_stream(recs, feats, budget=10)


def test_invalid_and_repeats_ignored():
    recs = [OracleRecord(1, "a", 0.8, True), OracleRecord(2, "x", 0.0, False), OracleRecord(3, "a", 0.8, True)]
    feats = {"a": Features(Fingerprint(64, frozenset({1})), True)}
    rep = evaluate_stream(recs, feats, budget=3, record_interval=1)
    assert rep.series["plain"] == [0.08, 0.08, 0.08]


def test_filter_changes_filtered_only():
    recs, feats = _stream([0.9, 0.8])
    feats["m0"] = Features(feats["m0"].fingerprint, False)
    rep = evaluate_stream(recs, feats, budget=2, record_interval=1)
    assert rep.auc_plain > rep.auc_filtered
    assert rep.selected["filtered"] == ["m1"] and rep.selected["combined"] == ["m1"]


def test_matches_bruteforce():
    rng = np.random.default_rng(2024)
    for _ in range(15):
        records, features, bits, passes, budget, interval = synthetic_log(rng, 120)
        rep = evaluate_stream(records, features, budget, interval)
        ref = bruteforce.evaluate(records, bits, passes, budget, interval)
        assert rep.aucs() == ref


def test_report_round_trip(tmp_path):
    recs, feats = _stream([0.1, 0.7, 0.3])
    rep = evaluate_stream(recs, feats, budget=5, record_interval=2)
    p = tmp_path / "r.json"
    rep.save(p)
    assert MetricReport.load(p) == rep


def test_compute_all_on_real_keys(small_stats, corpus_smiles):
    recs = [OracleRecord(i + 1, s, (i % 7) / 7, True) for i, s in enumerate(corpus_smiles[:60])]
    recs.append(OracleRecord(61, "not a smiles", 0.0, False))
    rep = compute_all(recs, small_stats, budget=100, record_interval=10)
    assert rep.ordering_holds()
    with pytest.raises(ParamMismatch):
        compute_all(recs, small_stats, budget=100, fp_radius=3)
    assert compute_all([], small_stats, budget=100).aucs() == {m: 0.0 for m in rep.aucs()}


def test_ordering_counterexample_is_real():
    # a strong molecule that fails the filter blocks its neighbours from the
    # diverse list but not from the combined list
    a = frozenset(range(10))
    recs = [OracleRecord(1, "A", 1.0, True)]
    feats = {"A": Features(Fingerprint(128, a), False)}
    for i in range(10):
        key = f"B{i}"
        bits = frozenset(range(6)) | frozenset(range(20 + 6 * i, 26 + 6 * i))
        recs.append(OracleRecord(i + 2, key, 0.9, True))
        feats[key] = Features(Fingerprint(128, bits), True)
    rep = evaluate_stream(recs, feats, budget=11, record_interval=11)
    assert rep.series["diverse"] == [0.1]
    assert rep.series["combined"] == [pytest.approx(0.9)]
    assert not rep.ordering_holds()
