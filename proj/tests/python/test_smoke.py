import pytest

import rme_reclaim


def test_stress_run_is_clean_and_deterministic():
    a = rme_reclaim.run_stress(3, seed=7, events=20000)
    b = rme_reclaim.run_stress(3, seed=7, events=20000)
    assert a == b
    assert a["violations"] == []
    assert a["events"] >= 20000
    assert len(a["stats"]["processes"]) == 3
    assert a["stats"]["max_op_rmr"]["new_node"]["dsm"] > 0


def test_mutant_lock_starves():
    r = rme_reclaim.run_stress(2, seed=1, events=20000, crash_prob=0.0, mutation="never-release-lock", patience=2000)
    assert "starvation" in {v["kind"] for v in r["violations"]}


def test_explore_single_process_has_one_path():
    r = rme_reclaim.explore(n=1, passages=1, crash_budget=0)
    assert r["paths"] == 1
    assert r["violations"] == {}


def test_explore_finds_lost_wakeup_mutant():
    r = rme_reclaim.explore(n=2, passages=1, crash_budget=0, mutation="skip-interim-write")
    assert r["violations"]


def test_pool_size():
    assert [rme_reclaim.pool_size(n) for n in (1, 2, 8)] == [4, 6, 18]


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        rme_reclaim.run_stress(2, variant="bogus")
    with pytest.raises(ValueError):
        rme_reclaim.run_stress(0)
    with pytest.raises(ValueError):
        rme_reclaim.replay("/nonexistent/trace.ndjson")
