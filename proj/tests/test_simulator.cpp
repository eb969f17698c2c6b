#include "wedesign/presets.hpp"
#include "wedesign/simulator.hpp"

#include <doctest.h>

#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <random>

using namespace wedesign;
using doctest::Approx;

namespace {

TrialConfig small_config(std::size_t arms, std::int64_t patients, Rule rule = Rule::RuleII)
{
    std::vector<ArmPrior> priors;
    for (std::size_t j = 0; j < arms; ++j) {
        priors.push_back({presets::efficacy_outcome(0.3 + 0.1 * static_cast<double>(j)), 2.0});
    }
    return TrialConfig{.name = "small",
                       .gamma = presets::efficacy_outcome(0.999),
                       .rule = rule,
                       .priors = priors,
                       .max_patients = patients,
                       .seed = 11};
}

// Direct sum of hypergeometric probabilities P(X >= a).
double fisher_by_enumeration(int a, int b, int c, int d)
{
    using boost::math::binomial_coefficient;
    const int row = a + b, col = a + c, total = a + b + c + d;
    const double denom = binomial_coefficient<double>(total, col);
    double p = 0.0;
    for (int x = a; x <= std::min(row, col); ++x) {
        if (col - x > total - row) continue;
        p += binomial_coefficient<double>(row, x) * binomial_coefficient<double>(total - row, col - x) / denom;
    }
    return p;
}

struct Exact {
    double ens = 0.0;
    std::vector<double> selection;
};

// Rule II is deterministic given the outcomes, so its operating
// characteristics are a finite sum over outcome sequences.
void enumerate(const TrialConfig& config, const Scenario& scenario, std::vector<ArmState>& states,
               std::int64_t left, double weight, double successes, Exact& out)
{
    if (left == 0) {
        out.ens += weight * successes;
        out.selection[*final_recommendation(states, config.gamma)] += weight;
        return;
    }
    const auto d = next_assignment(Rule::RuleII, states, config.criterion_params(), std::nullopt, 0.0);
    for (std::size_t y = 0; y < 2; ++y) {
        const ArmState saved = states[d.arm];
        states[d.arm].record(y);
        enumerate(config, scenario, states, left - 1, weight * scenario.true_probabilities[d.arm][y],
                  successes + (y == config.success_outcome), out);
        states[d.arm] = saved;
    }
}

}  // namespace

TEST_CASE("fisher_exact_pvalue")
{
    CHECK(fisher_exact_pvalue(0, 10, 0, 10) == 1.0);
    CHECK(fisher_exact_pvalue(10, 0, 0, 10) == Approx(1.0 / 184756.0).epsilon(1e-10));
    CHECK(fisher_exact_pvalue(0, 0, 0, 0) == 1.0);
    CHECK_THROWS_AS(fisher_exact_pvalue(-1, 0, 0, 0), std::invalid_argument);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> cell(0, 25);
    for (int k = 0; k < 300; ++k) {
        const int a = cell(rng), b = cell(rng), c = cell(rng), d = cell(rng);
        const double expected = fisher_by_enumeration(a, b, c, d);
        CHECK(std::abs(fisher_exact_pvalue(a, b, c, d) - std::min(1.0, expected)) < 1e-10);
    }

    // more successes on the arm, smaller p
    double last = 1.1;
    for (int a = 0; a <= 20; ++a) {
        const double p = fisher_exact_pvalue(a, 20 - a, 6, 14);
        CHECK(p <= last);
        last = p;
    }
}

TEST_CASE("cutoff_from_null")
{
    const std::vector<double> p{0.9, 0.1, 0.4, 0.2, 0.3, 1.0, 0.6, 0.5, 0.7, 0.8};
    CHECK(cutoff_from_null(p, 0.2) == 0.2);
    CHECK(cutoff_from_null(p, 0.25) == 0.2);
    CHECK(cutoff_from_null(p, 0.05) == 0.0);
    CHECK(cutoff_from_null(p, 0.0) == 0.0);
    const std::vector<double> tied{0.1, 0.1, 0.3, 0.5};
    CHECK(cutoff_from_null(tied, 0.25) == 0.0);
    CHECK(cutoff_from_null(tied, 0.5) == 0.1);
}

TEST_CASE("run_trial bookkeeping")
{
    const auto config = small_config(3, 40);
    const auto scenario = presets::phase2_scenario("s", std::vector<double>{0.2, 0.5, 0.35});
    const auto a = run_trial(config, scenario, 99);
    const auto b = run_trial(config, scenario, 99);
    CHECK(a.assignments == b.assignments);
    CHECK(a.outcomes == b.outcomes);
    CHECK(a.states == b.states);

    CHECK(a.patients() == 40);
    std::int64_t total = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(a.states[j].n() == std::count(a.assignments.begin(), a.assignments.end(), j));
        total += a.states[j].n();
    }
    CHECK(total == 40);
    CHECK(a.count_outcome(1) == a.states[0].count(1) + a.states[1].count(1) + a.states[2].count(1));
    CHECK(a.recommendation.has_value());
    CHECK_FALSE(a.terminated);

    const auto one = run_trial(small_config(1, 15), presets::phase2_scenario("one", std::vector<double>{0.4}), 3);
    CHECK(one.states[0].n() == 15);
    CHECK(one.recommendation == 0u);

    CHECK_THROWS_AS(run_trial(config, presets::phase2_scenario("two", std::vector<double>{0.1, 0.2}), 1),
                    std::invalid_argument);
}

TEST_CASE("Rule II operating characteristics match exact enumeration")
{
    const auto config = small_config(3, 8);
    const auto scenario = presets::phase2_scenario("s", std::vector<double>{0.2, 0.6, 0.4});
    Exact exact{0.0, std::vector<double>(3, 0.0)};
    auto states = config.initial_states();
    enumerate(config, scenario, states, config.max_patients, 1.0, 0.0, exact);

    const auto oc = run_monte_carlo(config, scenario, 20000);
    CHECK(std::abs(oc.ens.mean - exact.ens) < 4 * oc.ens.se);
    for (std::size_t j = 0; j < 3; ++j) {
        const double se = std::sqrt(exact.selection[j] * (1 - exact.selection[j]) / 20000.0);
        CHECK(std::abs(oc.selection[j] - exact.selection[j]) <= 4 * se + 1e-12);
    }
}

TEST_CASE("fixed randomisation")
{
    auto config = presets::phase2_config(presets::kTrial2Patients, Rule::RuleII, 0.5);
    config.seed = 4;
    const auto h1 = presets::trial2_alternative();
    const auto oc = run_monte_carlo(config, h1, 4000, Design::FixedRandomization);
    // equal allocation: p* = 1/4 and ENS = N * mean(p)
    REQUIRE(oc.p_star.has_value());
    CHECK(std::abs(oc.p_star->mean - 0.25) < 4 * oc.p_star->se);
    CHECK(std::abs(oc.ens.mean - 80 * 0.45) < 4 * oc.ens.se);
    for (double share : oc.allocation) CHECK(std::abs(share - 0.25) < 0.01);
}

TEST_CASE("calibrated cutoff holds the level on fresh replications")
{
    auto config = presets::phase2_config(presets::kTrial2Patients, Rule::RuleII, 0.5);
    config.seed = 17;
    const auto h0 = presets::trial2_null();
    const double cutoff = calibrate_cutoff(config, h0, 3000, Design::FixedRandomization);
    CHECK(cutoff > 0.0);
    CHECK(cutoff < 0.2);

    config.testing->cutoff = cutoff;
    const auto same = run_monte_carlo(config, h0, 3000, Design::FixedRandomization);
    CHECK(same.rejection_rate->mean <= 0.05 + 1e-12);

    config.seed = 18;
    const auto fresh = run_monte_carlo(config, h0, 3000, Design::FixedRandomization);
    CHECK(std::abs(fresh.rejection_rate->mean - 0.05) < 4 * std::sqrt(0.05 * 0.95 / 3000));

    config.testing->alpha_target = 0.0;
    CHECK(calibrate_cutoff(config, h0, 200, Design::FixedRandomization) == 0.0);
}

TEST_CASE("parallelism does not change results")
{
    auto config = presets::phase1_config();
    config.seed = 2024;
    const auto scenario = presets::phase1_scenarios()[1];
    const auto serial = run_monte_carlo(config, scenario, 300, Design::WeightedEntropy, 1);
    for (unsigned threads : {2u, 5u}) {
        const auto par = run_monte_carlo(config, scenario, 300, Design::WeightedEntropy, threads);
        CHECK(par.selection == serial.selection);
        CHECK(par.allocation == serial.allocation);
        CHECK(par.ens.mean == serial.ens.mean);
        CHECK(par.termination_rate.mean == serial.termination_rate.mean);
    }
}

TEST_CASE("kappa_sweep with one point equals run_monte_carlo")
{
    auto config = presets::phase2_config(presets::kTrial2Patients, Rule::RuleII, 0.5);
    config.seed = 8;
    const auto h1 = presets::trial2_alternative();
    const std::vector<double> grid{0.6};
    const auto rows = kappa_sweep(config, h1, grid, 0.04, 500);
    REQUIRE(rows.size() == 1);

    config.kappa = 0.6;
    config.testing->cutoff = 0.04;
    const auto oc = run_monte_carlo(config, h1, 500);
    CHECK(rows[0].kappa == 0.6);
    CHECK(rows[0].ens.mean == oc.ens.mean);
    CHECK(rows[0].power.mean == oc.rejection_rate->mean);
}

TEST_CASE("Phase I safety behaviour")
{
    auto config = presets::phase1_config();
    config.seed = 5;
    const auto scenarios = presets::phase1_scenarios();
    const auto unsafe = run_monte_carlo(config, scenarios[5], 1000);
    const auto linear = run_monte_carlo(config, scenarios[0], 1000);
    CHECK(unsafe.termination_rate.mean > linear.termination_rate.mean);
    CHECK(unsafe.mean_n.mean < 20.0);
    REQUIRE(unsafe.pcs.has_value());
    CHECK(unsafe.pcs->mean == unsafe.termination_rate.mean);
    CHECK(linear.mean_n.mean <= 20.0);
}

TEST_CASE("complete-information benchmark")
{
    const auto gamma = presets::toxicity_outcome(0.25);
    const auto scenario = presets::phase1_scenarios()[0];
    CHECK(benchmark_trial(scenario, gamma, 50, 7) == benchmark_trial(scenario, gamma, 50, 7));

    // with many patients the estimated rates converge to the truth
    const auto big = run_benchmark(scenario, gamma, 20000, 50, 1);
    REQUIRE(big.pcs.has_value());
    CHECK(big.pcs->mean == 1.0);

    const auto par = run_benchmark(scenario, gamma, 20, 400, 3, 0, 3);
    const auto ser = run_benchmark(scenario, gamma, 20, 400, 3, 0, 1);
    CHECK(par.selection == ser.selection);
    CHECK_THROWS_AS(benchmark_trial(scenario, gamma, 0, 1), std::invalid_argument);
}
