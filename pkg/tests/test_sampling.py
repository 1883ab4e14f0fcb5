import json

import pytest

from quadlienard.analysis import conditions21_check
from quadlienard.io import dumps
from quadlienard.sampling import RunConfig, draw_systems, run_sample


def test_empty_run():
    rep = run_sample(RunConfig(n=0))
    assert (rep.n_total, rep.n_certified, rep.n_cycles_found, rep.records) == (0, 0, 0, [])


@pytest.mark.parametrize("bad", [{"rtol": 0.0}, {"atol": -1.0}, {"region": "box"}, {"seed": -1},
                                 {"seed": 2 ** 64}, {"n": -3}, {"confirm": "maybe"}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_draws_depend_only_on_seed():
    assert draw_systems("theorem5", 5, 1) == draw_systems("theorem5", 5, 1)
    assert draw_systems("theorem5", 5, 1) != draw_systems("theorem5", 5, 2)
    assert draw_systems("uniform", 8, 3)[:4] == draw_systems("uniform", 4, 3)


def test_box_draws_satisfy_conditions():
    for s in draw_systems("theorem5", 300, 7):
        assert conditions21_check(s).passed


def test_attractor_box_small_run_all_confirmed():
    rep = run_sample(RunConfig(n=6, seed=3))
    assert rep.n_certified == 6 and rep.n_cycles_found == 6
    for r in rep.records:
        assert r.error is None and r.n_cycles >= 1


def test_uniform_run_is_consistent_and_deterministic():
    cfg = RunConfig(region="uniform", n=40, seed=11, confirm="all", n_scan=24)
    a, b = run_sample(cfg), run_sample(cfg)
    assert dumps(a.to_dict()) == dumps(b.to_dict())
    assert a.n_total == 40
    assert a.n_certified == sum(r.certificate is not None for r in a.records)
    assert a.n_cycles_found == sum(bool(r.n_cycles) for r in a.records)
    assert a.n_cycles_found >= a.n_certified


def test_threads_do_not_change_the_report():
    one = run_sample(RunConfig(n=4, seed=9, workers=1))
    many = run_sample(RunConfig(n=4, seed=9, workers=3))
    assert dumps(one.to_dict()) == dumps(many.to_dict())
    json.loads(dumps(one.to_dict()))
