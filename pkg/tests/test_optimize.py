import json

import pytest

from ahcbench.exceptions import ConfigError
from ahcbench.optimize import AugmentedHillClimb, RunConfig, _Patience, run_optimization, select_top
from ahcbench.oracle import Component, Objective, OracleRecord, ScoreModifier, Source


def _cfg(opt="AHC", **kw):
    base = dict(batch_size=16, budget=60, max_len=40, seed=0, record_interval=20)
    base.update(kw)
    return RunConfig(opt, **base)


def _log_bytes(result):
    return json.dumps([r.__dict__ for r in result.log], sort_keys=True).encode()


def test_select_top():
    assert select_top([0.1, 0.9, None, 0.5, 0.9], 0.5) == [1, 4]
    assert select_top([0.3, 0.2, 0.1], 0.25) == [0]
    assert select_top([None, None], 0.5) == []
    assert select_top([0.2, 0.7, 0.1], 1.0) == [0, 1, 2]


def test_config_defaults_and_validation(tmp_path):
    assert RunConfig("AHC").sigma == 120.0 and RunConfig("AHC").k_fraction == 0.25
    assert RunConfig("REINVENT").k_fraction == 1.0
    for bad in (dict(k_fraction=0.0), dict(k_fraction=1.5), dict(batch_size=0), dict(sigma=-1.0),
                dict(budget=-5), dict(patience=0)):
        with pytest.raises(ConfigError):
            RunConfig("AHC", **bad)
    with pytest.raises(ConfigError):
        RunConfig("PPO")
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"optimizer": "AHC", "temperature": 1.0})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(RunConfig("HC", seed=4).to_dict()))
    assert RunConfig.load(p) == RunConfig("HC", seed=4)


@pytest.mark.parametrize("opt", ["AHC", "REINVENT", "HC", "RANDOM"])
def test_budget_never_exceeded(tiny_prior, opt):
    r = run_optimization(_cfg(opt, budget=37, batch_size=10, patience=50), tiny_prior)
    assert r.calls_used <= 37
    assert [x.call_index for x in r.log] == list(range(1, r.calls_used + 1))
    keys = [x.smiles for x in r.log]
    assert len(keys) == len(set(keys))


def test_prior_unchanged(tiny_prior):
    before = tiny_prior.digest()
    r = run_optimization(_cfg(), tiny_prior)
    assert tiny_prior.digest() == before
    assert r.model_digest != before


def test_random_keeps_prior(tiny_prior):
    r = run_optimization(_cfg("RANDOM"), tiny_prior)
    assert r.model_digest == tiny_prior.digest() and all(l is None for l in r.losses)


def test_determinism(tiny_prior):
    a = run_optimization(_cfg(), tiny_prior)
    b = run_optimization(_cfg(), tiny_prior)
    assert _log_bytes(a) == _log_bytes(b) and a.model_digest == b.model_digest


def test_k1_matches_reinvent(tiny_prior):
    a = run_optimization(_cfg("AHC", k_fraction=1.0, sigma=500.0), tiny_prior)
    b = run_optimization(_cfg("REINVENT", sigma=500.0), tiny_prior)
    assert _log_bytes(a) == _log_bytes(b) and a.model_digest == b.model_digest


def test_zero_budget(tiny_prior):
    r = run_optimization(_cfg(budget=0), tiny_prior)
    assert r.log == [] and r.stop_reason == "budget"


def _rec(i, score):
    return OracleRecord(i, f"C{i}", score, True)


def test_patience_counts_stale_boundaries():
    p = _Patience(interval=10, patience=2, eps=1e-3)
    log = [_rec(i, 0.5) for i in range(1, 11)]
    assert not p.update(log)          # baseline
    log += [_rec(i, 0.5) for i in range(11, 21)]
    assert not p.update(log)          # stale 1
    log += [_rec(i, 0.99) for i in range(21, 31)]
    assert not p.update(log)          # improves, reset
    log += [_rec(i, 0.1) for i in range(31, 51)]
    assert p.update(log)              # two stale boundaries


def test_patience_stops_run(tiny_prior):
    # every valid molecule scores 1.0, so the top-10 mean saturates at once
    flat = Objective("flat", [Component(Source("mw"), ScoreModifier("identity"))])
    r = run_optimization(_cfg("RANDOM", budget=200, batch_size=64, record_interval=5, patience=2),
                         tiny_prior, objective=flat)
    assert r.stop_reason == "patience" and r.calls_used < 1000


def test_estimator(tiny_prior):
    est = AugmentedHillClimb(prior=tiny_prior, budget=40, batch_size=16).fit()
    best = est.best(3)
    assert len(best) <= 3 and all(0 <= s <= 1 for _, s in best)
    assert best == sorted(best, key=lambda t: -t[1])
    with pytest.raises(ConfigError):
        AugmentedHillClimb().fit()
