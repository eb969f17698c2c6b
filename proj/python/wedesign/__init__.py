"""Weighted-entropy sequential design.

Configs and scenarios are plain dicts with the same layout as the JSON files
under data/.
"""

import json

from . import _core
from ._core import (
    AllocationDecision,
    ArmState,
    CriterionParams,
    ParseError,
    Rule,
    SafetyClock,
    SafetyConfig,
    SimplexVector,
    admissible_set,
    criterion,
    criterion_binary,
    criterion_gradient_binary,
    dirichlet_entropy,
    final_recommendation,
    fisher_exact_pvalue,
    gain_asymptotic,
    information_gain,
    next_assignment,
    normal_approx,
    overdose_probability,
    pcs_lower_bound,
    plugin_criterion,
    posterior_mode,
    randomization_probabilities,
    safety_threshold,
    select_best,
    table_ids,
    weighted_dirichlet_entropy,
)


def preset_config(name):
    """Built-in config: "phase1", "trial1" or "trial2"."""
    return json.loads(_core.preset_config(name))


def preset_scenarios(name):
    return [json.loads(s) for s in _core.preset_scenarios(name)]


def load_config(config):
    """Validates a config dict (or path to a JSON file) and fills defaults."""
    if not isinstance(config, dict):
        with open(config) as f:
            config = json.load(f)
    return json.loads(_core.normalize_config(json.dumps(config)))


def run_trial(config, scenario, seed, design="WE"):
    return _core.run_trial(json.dumps(config), json.dumps(scenario), seed, design)


def run_monte_carlo(config, scenario, replications, design="WE", parallelism=1):
    return _core.run_monte_carlo(json.dumps(config), json.dumps(scenario), replications, design, parallelism)


def calibrate_cutoff(config, null_scenario, replications, design="WE", parallelism=1):
    return _core.calibrate_cutoff(json.dumps(config), json.dumps(null_scenario), replications, design, parallelism)


def reproduce(table, replications=10000, cutoff_replications=10000, seed=None, parallelism=1):
    """Comparison rows of one published table against the reference values."""
    return json.loads(_core.reproduce(table, replications, cutoff_replications, seed, parallelism))
