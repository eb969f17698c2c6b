#include "wedesign/simulator.hpp"

#include "wedesign/parallel.hpp"
#include "wedesign/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wedesign {

void HypothesisTestConfig::validate() const
{
    if (!(alpha_target >= 0.0 && alpha_target < 1.0)) {
        throw std::invalid_argument("testing.alpha_target must lie in [0, 1)");
    }
    if (!(cutoff >= 0.0 && cutoff < 1.0)) throw std::invalid_argument("testing.cutoff must lie in [0, 1)");
}

CriterionParams TrialConfig::criterion_params() const
{
    return CriterionParams(gamma, kappa, experimental_kappa);
}

std::vector<ArmState> TrialConfig::initial_states() const
{
    std::vector<ArmState> states;
    states.reserve(priors.size());
    for (const auto& p : priors) states.push_back(ArmState::from_prior_mode(p.mode, p.beta));
    return states;
}

void TrialConfig::validate() const
{
    if (priors.empty()) throw std::invalid_argument("priors: at least one arm is required");
    for (std::size_t j = 0; j < priors.size(); ++j) {
        if (priors[j].mode.size() != gamma.size()) {
            throw std::invalid_argument("priors[" + std::to_string(j) +
                                        "].mode: dimension differs from gamma");
        }
        if (!(priors[j].beta > 0.0)) {
            throw std::invalid_argument("priors[" + std::to_string(j) + "].beta must be positive");
        }
    }
    if (max_patients < 1) throw std::invalid_argument("max_patients must be at least 1");
    (void)criterion_params();
    if (success_outcome >= gamma.size()) throw std::invalid_argument("success_outcome out of range");
    if (toxicity_outcome >= gamma.size()) throw std::invalid_argument("toxicity_outcome out of range");
    if (safety) {
        safety->validate();
        if (gamma.size() != 2) throw std::invalid_argument("safety: only binary outcomes are supported");
        if (safety->toxicity_outcome >= 2) throw std::invalid_argument("safety.toxicity_outcome out of range");
    }
    if (testing) {
        testing->validate();
        if (testing->control_index >= priors.size()) {
            throw std::invalid_argument("testing.control_index out of range");
        }
    }
}

std::size_t Scenario::criterion_argmin(const SimplexVector& gamma) const
{
    const CriterionParams params(gamma, 0.5);
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < true_probabilities.size(); ++j) {
        const double d = criterion(true_probabilities[j], params, 1.0);
        if (d < best_value) {
            best_value = d;
            best = j;
        }
    }
    return best;
}

void Scenario::validate(const SimplexVector& gamma) const
{
    if (true_probabilities.empty()) throw std::invalid_argument("scenario " + name + ": no arms");
    for (const auto& p : true_probabilities) {
        if (p.size() != gamma.size()) {
            throw std::invalid_argument("scenario " + name + ": outcome dimension differs from gamma");
        }
    }
    if (target_index) {
        if (*target_index >= arms()) {
            throw std::invalid_argument("scenario " + name + ": target_index out of range");
        }
        const CriterionParams params(gamma, 0.5);
        const double target = criterion(true_probabilities[*target_index], params, 1.0);
        for (const auto& p : true_probabilities) {
            if (criterion(p, params, 1.0) < target) {
                throw std::invalid_argument("scenario " + name +
                                            ": target_index is not the criterion minimiser");
            }
        }
    }
}

std::int64_t TrialRecord::count_outcome(std::size_t category) const
{
    return std::count(outcomes.begin(), outcomes.end(), category);
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t index)
{
    return stream_seed(seed, index);
}

namespace {

std::size_t sample_outcome(const SimplexVector& p, double u)
{
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        cumulative += p[i];
        if (u < cumulative) return i;
    }
    return p.size() - 1;
}

void check_dimensions(const TrialConfig& config, const Scenario& scenario)
{
    if (scenario.arms() != config.arms()) {
        throw std::invalid_argument("scenario " + scenario.name + " has " +
                                    std::to_string(scenario.arms()) + " arms, config has " +
                                    std::to_string(config.arms()));
    }
    for (const auto& p : scenario.true_probabilities) {
        if (p.size() != config.outcomes()) {
            throw std::invalid_argument("scenario " + scenario.name +
                                        ": outcome dimension differs from config");
        }
    }
}

void finish(TrialRecord& record, const TrialConfig& config, std::span<const double> overdose)
{
    if (record.terminated) return;
    if (config.safety) {
        const auto eligible = admissible_set(record.states, *config.safety, record.patients(), overdose);
        record.recommendation = final_recommendation(record.states, config.gamma, eligible);
    } else {
        record.recommendation = final_recommendation(record.states, config.gamma);
    }
    record.terminated = !record.recommendation.has_value();
}

}  // namespace

TrialRecord run_trial(const TrialConfig& config, const Scenario& scenario, std::uint64_t seed)
{
    check_dimensions(config, scenario);
    const auto params = config.criterion_params();
    Rng rng(seed);
    TrialRecord record;
    record.states = config.initial_states();
    record.assignments.reserve(static_cast<std::size_t>(config.max_patients));
    record.outcomes.reserve(static_cast<std::size_t>(config.max_patients));

    // overdose probabilities only change for the arm that was just treated
    std::vector<double> overdose;
    if (config.safety) {
        for (const auto& s : record.states) {
            overdose.push_back(
                overdose_probability(s, config.safety->gamma_star, config.safety->toxicity_outcome));
        }
    }

    for (std::int64_t patient = 0; patient < config.max_patients; ++patient) {
        const auto decision =
            config.safety
                ? next_assignment(config.rule, record.states, params, *config.safety, overdose, rng)
                : next_assignment(config.rule, record.states, params, config.safety, rng);
        if (decision.terminated()) {
            record.terminated = true;
            return record;
        }
        const std::size_t outcome = sample_outcome(scenario.true_probabilities[decision.arm], rng.uniform());
        auto& arm = record.states[decision.arm];
        arm.record(outcome);
        if (config.safety) {
            overdose[decision.arm] =
                overdose_probability(arm, config.safety->gamma_star, config.safety->toxicity_outcome);
        }
        record.assignments.push_back(decision.arm);
        record.outcomes.push_back(outcome);
    }
    finish(record, config, overdose);
    return record;
}

TrialRecord fixed_randomization_trial(const TrialConfig& config, const Scenario& scenario,
                                      std::uint64_t seed)
{
    check_dimensions(config, scenario);
    Rng rng(seed);
    TrialRecord record;
    record.states = config.initial_states();
    const std::uint64_t m = config.arms();
    for (std::int64_t patient = 0; patient < config.max_patients; ++patient) {
        const auto arm = static_cast<std::size_t>(rng.below(m));
        const std::size_t outcome = sample_outcome(scenario.true_probabilities[arm], rng.uniform());
        record.states[arm].record(outcome);
        record.assignments.push_back(arm);
        record.outcomes.push_back(outcome);
    }
    record.recommendation = final_recommendation(record.states, config.gamma);
    record.terminated = !record.recommendation.has_value();
    return record;
}

std::optional<std::size_t> benchmark_trial(const Scenario& scenario, const SimplexVector& gamma,
                                           std::int64_t patients, std::uint64_t seed,
                                           std::size_t toxicity_outcome)
{
    if (gamma.size() != 2) throw std::invalid_argument("benchmark requires binary outcomes");
    if (patients < 1) throw std::invalid_argument("benchmark requires at least one patient");
    Rng rng(seed);
    const std::size_t m = scenario.arms();
    std::vector<std::int64_t> toxic(m, 0);
    for (std::int64_t i = 0; i < patients; ++i) {
        const double u = rng.uniform();
        for (std::size_t j = 0; j < m; ++j) {
            if (u < scenario.true_probabilities[j][toxicity_outcome]) ++toxic[j];
        }
    }
    const double target = gamma[toxicity_outcome];
    std::vector<double> delta(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double rate = static_cast<double>(toxic[j]) / static_cast<double>(patients);
        delta[j] = (rate <= 0.0 || rate >= 1.0) ? std::numeric_limits<double>::infinity()
                                                : criterion_binary(rate, target, 0.5, 1.0);
    }
    std::vector<std::size_t> all(m);
    for (std::size_t j = 0; j < m; ++j) all[j] = j;
    return select_best(delta, all);
}

namespace {

struct ReplicationSummary {
    std::int64_t patients = 0;
    std::int64_t successes = 0;
    std::int64_t toxicities = 0;
    std::int64_t on_target = 0;
    std::optional<std::size_t> recommendation;
    bool terminated = false;
    bool rejected = false;
    std::vector<std::int64_t> per_arm;
};

class Accumulator {
public:
    void add(double x)
    {
        sum_ += x;
        sum_sq_ += x * x;
        ++n_;
    }
    Estimate estimate() const
    {
        Estimate e;
        if (n_ == 0) return e;
        const double n = static_cast<double>(n_);
        e.mean = sum_ / n;
        const double var = n > 1 ? std::max(sum_sq_ - n * e.mean * e.mean, 0.0) / (n - 1.0) : 0.0;
        e.sd = std::sqrt(var);
        e.se = e.sd / std::sqrt(n);
        return e;
    }

private:
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
    std::int64_t n_ = 0;
};

TrialRecord simulate(const TrialConfig& config, const Scenario& scenario, std::uint64_t seed,
                     Design design)
{
    return design == Design::WeightedEntropy ? run_trial(config, scenario, seed)
                                             : fixed_randomization_trial(config, scenario, seed);
}

ReplicationSummary summarize(const TrialRecord& record, const TrialConfig& config,
                             const Scenario& scenario)
{
    ReplicationSummary s;
    s.patients = record.patients();
    s.successes = record.count_outcome(config.success_outcome);
    s.toxicities = record.count_outcome(config.toxicity_outcome);
    s.recommendation = record.recommendation;
    s.terminated = record.terminated;
    s.per_arm.resize(config.arms());
    for (std::size_t j = 0; j < config.arms(); ++j) s.per_arm[j] = record.states[j].n();
    if (scenario.target_index) s.on_target = s.per_arm[*scenario.target_index];
    if (config.testing) s.rejected = evaluate_hypotheses(record, *config.testing, config.success_outcome);
    return s;
}

}  // namespace

OperatingCharacteristics run_monte_carlo(const TrialConfig& config, const Scenario& scenario,
                                         std::int64_t replications, Design design,
                                         unsigned parallelism)
{
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    config.validate();
    check_dimensions(config, scenario);

    std::vector<ReplicationSummary> results(static_cast<std::size_t>(replications));
    parallel_for(replications, parallelism, [&](std::int64_t i) {
        const auto record = simulate(config, scenario, replication_seed(config.seed, i), design);
        results[static_cast<std::size_t>(i)] = summarize(record, config, scenario);
    });

    // sequential reduction in replication order keeps the result independent
    // of the thread count
    Accumulator pcs, ens, p_star, tox, term, mean_n, reject;
    std::vector<double> selection(config.arms(), 0.0);
    std::vector<double> allocation(config.arms(), 0.0);
    for (const auto& r : results) {
        ens.add(static_cast<double>(r.successes));
        tox.add(static_cast<double>(r.toxicities));
        term.add(r.terminated ? 1.0 : 0.0);
        mean_n.add(static_cast<double>(r.patients));
        if (r.recommendation) selection[*r.recommendation] += 1.0;
        if (r.patients > 0) {
            for (std::size_t j = 0; j < allocation.size(); ++j) {
                allocation[j] += static_cast<double>(r.per_arm[j]) / static_cast<double>(r.patients);
            }
        }
        if (scenario.target_index) {
            pcs.add(r.recommendation == scenario.target_index ? 1.0 : 0.0);
            p_star.add(r.patients > 0 ? static_cast<double>(r.on_target) / static_cast<double>(r.patients)
                                      : 0.0);
        } else if (scenario.no_safe_arm) {
            pcs.add(r.terminated ? 1.0 : 0.0);
        }
        if (config.testing) reject.add(r.rejected ? 1.0 : 0.0);
    }

    OperatingCharacteristics oc;
    oc.replications = replications;
    oc.ens = ens.estimate();
    oc.mean_toxicities = tox.estimate();
    oc.termination_rate = term.estimate();
    oc.mean_n = mean_n.estimate();
    if (scenario.target_index || scenario.no_safe_arm) oc.pcs = pcs.estimate();
    if (scenario.target_index) oc.p_star = p_star.estimate();
    if (config.testing) oc.rejection_rate = reject.estimate();
    const double reps = static_cast<double>(replications);
    for (auto& s : selection) s /= reps;
    for (auto& a : allocation) a /= reps;
    oc.selection = std::move(selection);
    oc.allocation = std::move(allocation);
    return oc;
}

BenchmarkSummary run_benchmark(const Scenario& scenario, const SimplexVector& gamma,
                               std::int64_t patients, std::int64_t replications, std::uint64_t seed,
                               std::size_t toxicity_outcome, unsigned parallelism)
{
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    std::vector<std::optional<std::size_t>> picks(static_cast<std::size_t>(replications));
    parallel_for(replications, parallelism, [&](std::int64_t i) {
        picks[static_cast<std::size_t>(i)] =
            benchmark_trial(scenario, gamma, patients, replication_seed(seed, i), toxicity_outcome);
    });
    BenchmarkSummary out;
    out.replications = replications;
    out.selection.assign(scenario.arms(), 0.0);
    Accumulator pcs;
    for (const auto& p : picks) {
        if (p) out.selection[*p] += 1.0;
        if (scenario.target_index) pcs.add(p == scenario.target_index ? 1.0 : 0.0);
    }
    for (auto& s : out.selection) s /= static_cast<double>(replications);
    if (scenario.target_index) out.pcs = pcs.estimate();
    return out;
}

std::vector<KappaSweepRow> kappa_sweep(const TrialConfig& config, const Scenario& scenario,
                                       std::span<const double> kappa_grid, double cutoff,
                                       std::int64_t replications, unsigned parallelism)
{
    std::vector<KappaSweepRow> rows;
    rows.reserve(kappa_grid.size());
    for (double kappa : kappa_grid) {
        TrialConfig c = config;
        c.kappa = kappa;
        if (!c.testing) c.testing = HypothesisTestConfig{};
        c.testing->cutoff = cutoff;
        const auto oc = run_monte_carlo(c, scenario, replications, Design::WeightedEntropy, parallelism);
        rows.push_back({kappa, oc.ens, *oc.rejection_rate});
    }
    return rows;
}

}  // namespace wedesign
