import math

import pytest

import wedesign as wd


def test_criterion_binary_matches_vector_form():
    params = wd.CriterionParams(wd.SimplexVector([0.25, 0.75]), 0.5)
    got = wd.criterion(wd.SimplexVector([0.3, 0.7]), params, 1)
    assert got == pytest.approx(wd.criterion_binary(0.3, 0.25, 0.5, 1), rel=1e-12)
    # 0.5 * (0.05^2) / 0.21
    assert got == pytest.approx(0.5 * 0.0025 / 0.21, rel=1e-12)


def test_entropy_of_uniform_posterior_is_zero():
    s = wd.ArmState([1e-12, 1e-12])
    assert abs(wd.dirichlet_entropy(s)) < 1e-9


def test_beta_2_1_entropy():
    s = wd.ArmState([1e-13, 1e-13], [1, 0])
    assert wd.dirichlet_entropy(s) == pytest.approx(0.5 - math.log(2), abs=1e-9)


def test_rule_i_probabilities():
    assert wd.randomization_probabilities([0.1, 0.1, 0.2]) == pytest.approx([0.4, 0.4, 0.2])


def test_phase1_starts_at_lowest_dose():
    cfg = wd.preset_config("phase1")
    states = [wd.ArmState.from_prior_mode(wd.SimplexVector(p["mode"]), p["beta"]) for p in cfg["priors"]]
    params = wd.CriterionParams(wd.SimplexVector(cfg["gamma"]), cfg["kappa"])
    d = wd.next_assignment(wd.Rule.II, states, params, wd.SafetyConfig())
    assert not d.terminated
    assert d.arm == 0


def test_monte_carlo_is_deterministic_and_thread_invariant():
    cfg = wd.preset_config("phase1")
    scenario = wd.preset_scenarios("phase1")[0]
    a = wd.run_monte_carlo(cfg, scenario, 200)
    b = wd.run_monte_carlo(cfg, scenario, 200, parallelism=3)
    assert a == b
    assert sum(a["selection"]) + a["term"]["mean"] == pytest.approx(1.0)


def test_fixed_randomization_allocates_evenly():
    cfg = wd.preset_config("trial2")
    h1 = wd.preset_scenarios("trial2")[1]
    oc = wd.run_monte_carlo(cfg, h1, 2000, design="FR")
    assert abs(oc["p_star"]["mean"] - 0.25) < 4 * oc["p_star"]["se"]


def test_fisher_extreme_table():
    assert wd.fisher_exact_pvalue(10, 0, 0, 10) == pytest.approx(1 / math.comb(20, 10))


def test_bad_config_raises():
    cfg = wd.preset_config("phase1")
    cfg["kappa"] = 0.3
    with pytest.raises(ValueError):
        wd.load_config(cfg)
    del cfg["priors"]
    with pytest.raises(wd.ParseError):
        wd.load_config(cfg)


def test_reproduce_small_run():
    rows = wd.reproduce("table2", replications=100, cutoff_replications=100)
    assert any(r["design"] == "WE_I" and r["metric"] == "ens" for r in rows)
    assert "table2" in wd.table_ids()
