import math

import pytest

from ahcbench.chem import parse_smiles, render_random_smiles
from ahcbench.exceptions import BudgetExhausted, ConfigError
from ahcbench.oracle import (
    BudgetedOracle, Objective, ScoreModifier, builtin_objective, isomer_objective, read_log, replay,
    resolve_objective, similarity_objective,
)


def test_modifiers():
    g = ScoreModifier("gaussian", (2.0, 1.0))
    assert g(2.0) == 1.0 and g(3.0) == pytest.approx(math.exp(-0.5))
    assert ScoreModifier("min_threshold", (4.0,))(2.0) == 0.5
    assert ScoreModifier("min_threshold", (4.0,))(9.0) == 1.0
    assert ScoreModifier("max_threshold", (4.0,))(2.0) == 1.0
    assert ScoreModifier("max_threshold", (4.0,))(8.0) == 0.5
    assert ScoreModifier("identity")(1.7) == 1.0
    with pytest.raises(ConfigError):
        ScoreModifier("gaussian", (0.0, 0.0))
    with pytest.raises(ConfigError):
        ScoreModifier("banana")


def test_similarity_examples():
    target = "CC(=O)Nc1ccc(O)cc1"
    obj = similarity_objective(target)
    m = parse_smiles(target)
    assert obj(m) == 1.0
    assert obj(parse_smiles("[Na+].[Cl-]")) == 0.0
    assert obj(parse_smiles(render_random_smiles(parse_smiles("CCOC(=O)c1ccccc1"), 3))) == \
        obj(parse_smiles("CCOC(=O)c1ccccc1"))


def test_isomer_examples():
    obj = isomer_objective({"C": 2, "H": 6, "O": 1})
    assert obj(parse_smiles("CCO")) == 1.0
    assert obj(parse_smiles("COC")) == 1.0
    # one carbon too many -> that component is exp(-0.5); total atoms off by 3 as well
    comps = obj.component_scores(parse_smiles("CCCO"))
    assert comps[0] == pytest.approx(math.exp(-0.5))
    missing = isomer_objective({"C": 8, "N": 8}).component_scores(parse_smiles("CCCCCCCC"))
    assert missing[1] == pytest.approx(math.exp(-32))


def test_objective_json_round_trip(tmp_path):
    obj = builtin_objective("zaleplon_mpo")
    p = tmp_path / "o.json"
    obj.save(p)
    again = resolve_objective(str(p))
    m = parse_smiles("CCN(C(C)=O)c1cccc(-c2ccnc3c(C#N)cnn23)c1")
    assert again(m) == obj(m) and obj(m) > 0.99
    with pytest.raises(ConfigError):
        Objective.from_dict({"name": "x", "components": [{"source": "nope"}]})
    with pytest.raises(ConfigError):
        Objective.from_dict({"name": "x", "components": []})


def test_scores_in_unit_interval(corpus_mols):
    objs = [builtin_objective(n) for n in ("celecoxib_similarity", "zaleplon_mpo", "perindopril_mpo")]
    objs.append(isomer_objective({"C": 17, "H": 15, "N": 5, "O": 1}))
    for m in corpus_mols:
        for o in objs:
            assert 0.0 <= o(m) <= 1.0


def test_cache_semantics():
    o = BudgetedOracle(similarity_objective("CCO"), budget=5)
    a = o.evaluate("CCO", parse_smiles("CCO"))
    b = o.evaluate(parse_smiles("OCC").canonical_key, parse_smiles("OCC"))
    assert a == b == 1.0 and o.calls_used == 1


def test_budget_exhausted():
    o = BudgetedOracle(similarity_objective("CCO"), budget=1)
    o.evaluate("CCO", parse_smiles("CCO"))
    with pytest.raises(BudgetExhausted):
        o.evaluate("CC", parse_smiles("CC"))
    assert o.evaluate("CCO", parse_smiles("CCO")) == 1.0


def test_batch_invalid_not_charged():
    o = BudgetedOracle(similarity_objective("CCO"), budget=10)
    r = o.score_smiles(["CCO", "C1", "OCC", "CC"])
    assert r.scores[1] == 0.0 and r.valid == [True, False, True, True]
    assert o.calls_used == 2 and [x.call_index for x in o.log] == [1, 2]
    assert set(o.cache) == {x.smiles for x in o.log}


def test_batch_charge_invalid():
    o = BudgetedOracle(similarity_objective("CCO"), budget=10, charge_invalid=True)
    o.score_smiles(["C1", "C1", "CC"])
    assert o.calls_used == 2 and o.log[0].valid is False


def test_batch_stops_at_budget():
    o = BudgetedOracle(similarity_objective("CCO"), budget=2)
    r = o.score_smiles(["CCO", "CC", "CCC", "CCO"])
    assert r.exhausted and r.scores[2] is None and o.calls_used == 2


def test_threads_do_not_change_log(corpus_smiles):
    logs = []
    for threads in (1, 4):
        o = BudgetedOracle(builtin_objective("celecoxib_similarity"), budget=50, threads=threads)
        o.score_smiles(corpus_smiles[:80])
        logs.append(o.log)
    assert logs[0] == logs[1]


def test_log_replay_and_io(tmp_path, corpus_smiles):
    obj = builtin_objective("perindopril_mpo")
    o = BudgetedOracle(obj, budget=30)
    o.score_smiles(corpus_smiles[:40])
    assert [r.call_index for r in o.log] == list(range(1, 31))
    assert replay(o.log, obj) == [r.score for r in o.log]
    p = tmp_path / "log.jsonl"
    o.write_log(p)
    assert read_log(p) == o.log
