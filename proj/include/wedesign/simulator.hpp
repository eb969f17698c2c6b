#pragma once

// Monte Carlo trial engine: weighted-entropy design, fixed randomisation,
// the complete-information benchmark, Fisher-exact testing and aggregation
// into operating characteristics.

#include "wedesign/allocation.hpp"
#include "wedesign/wecore.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wedesign {

enum class Design {
    WeightedEntropy,
    FixedRandomization,
};

struct ArmPrior {
    SimplexVector mode;
    double beta = 1.0;
};

struct HypothesisTestConfig {
    std::size_t control_index = 0;
    /// Family-wise level targeted by calibration.
    double alpha_target = 0.05;
    /// Family-wise cutoff; each comparison is tested at cutoff / (m - 1).
    double cutoff = 0.05;

    void validate() const;
};

struct TrialConfig {
    std::string name;
    SimplexVector gamma;
    double kappa = 0.5;
    Rule rule = Rule::RuleII;
    std::vector<ArmPrior> priors;
    std::int64_t max_patients = 0;
    std::optional<SafetyConfig> safety;
    std::optional<HypothesisTestConfig> testing;
    /// Category counted by ENS and used by the hypothesis test.
    std::size_t success_outcome = 1;
    /// Category counted as a toxic response.
    std::size_t toxicity_outcome = 0;
    std::uint64_t seed = 0;
    bool experimental_kappa = false;

    std::size_t arms() const noexcept { return priors.size(); }
    std::size_t outcomes() const noexcept { return gamma.size(); }
    CriterionParams criterion_params() const;
    std::vector<ArmState> initial_states() const;
    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;
};

struct Scenario {
    std::string name;
    std::vector<SimplexVector> true_probabilities;
    std::optional<std::size_t> target_index;
    bool no_safe_arm = false;

    std::size_t arms() const noexcept { return true_probabilities.size(); }
    /// Arm minimising the unpenalised criterion against `gamma`, lowest index
    /// on ties.
    std::size_t criterion_argmin(const SimplexVector& gamma) const;
    /// Checks dimensions and that target_index (if set) is the argmin.
    void validate(const SimplexVector& gamma) const;
};

struct TrialRecord {
    std::vector<std::size_t> assignments;
    std::vector<std::size_t> outcomes;
    std::optional<std::size_t> recommendation;
    bool terminated = false;
    std::vector<ArmState> states;

    std::int64_t patients() const noexcept { return static_cast<std::int64_t>(assignments.size()); }
    std::int64_t count_outcome(std::size_t category) const;
};

/// Mean of a per-replication quantity with its across-replication standard
/// deviation and the standard error of the mean.
struct Estimate {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};

struct OperatingCharacteristics {
    std::int64_t replications = 0;
    std::optional<Estimate> pcs;
    Estimate ens;
    std::optional<Estimate> p_star;
    Estimate mean_toxicities;
    Estimate termination_rate;
    Estimate mean_n;
    std::optional<Estimate> rejection_rate;
    /// Share of replications recommending each arm.
    std::vector<double> selection;
    /// Mean share of patients treated on each arm.
    std::vector<double> allocation;
};

/// One sequential trial of the weighted-entropy design.
TrialRecord run_trial(const TrialConfig& config, const Scenario& scenario, std::uint64_t seed);

/// Equal randomisation over all arms; recommendation over all arms.
TrialRecord fixed_randomization_trial(const TrialConfig& config, const Scenario& scenario,
                                      std::uint64_t seed);

/// Complete-information benchmark for binary outcomes: every patient gets a
/// latent uniform u and is toxic on arm j iff u < alpha_j. Returns the arm
/// minimising the unpenalised criterion at the estimated rates.
std::optional<std::size_t> benchmark_trial(const Scenario& scenario, const SimplexVector& gamma,
                                           std::int64_t patients, std::uint64_t seed,
                                           std::size_t toxicity_outcome = 0);

struct BenchmarkSummary {
    std::int64_t replications = 0;
    std::vector<double> selection;
    std::optional<Estimate> pcs;
};

BenchmarkSummary run_benchmark(const Scenario& scenario, const SimplexVector& gamma,
                               std::int64_t patients, std::int64_t replications, std::uint64_t seed,
                               std::size_t toxicity_outcome = 0, unsigned parallelism = 1);

/// Seed of replication `index` under a base seed.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t index);

/// Runs `replications` trials with seeds replication_seed(config.seed, i).
/// The result does not depend on `parallelism`.
OperatingCharacteristics run_monte_carlo(const TrialConfig& config, const Scenario& scenario,
                                         std::int64_t replications,
                                         Design design = Design::WeightedEntropy,
                                         unsigned parallelism = 1);

/// One-sided Fisher exact p-value for a 2x2 table
///   arm:     a successes, b failures
///   control: c successes, d failures
/// against the alternative that the arm's success probability is larger.
double fisher_exact_pvalue(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

/// Smallest experimental-vs-control p-value multiplied by (m - 1), capped at 1.
double min_adjusted_pvalue(const TrialRecord& record, std::size_t control_index,
                           std::size_t success_outcome);

/// True when some comparison has p <= cutoff / (m - 1).
bool evaluate_hypotheses(const TrialRecord& record, const HypothesisTestConfig& test,
                         std::size_t success_outcome = 1);

/// Adjusted minimal p-values of every replication under `null_scenario`.
std::vector<double> null_adjusted_pvalues(const TrialConfig& config, const Scenario& null_scenario,
                                          std::int64_t replications, Design design,
                                          unsigned parallelism = 1);

/// Largest observed adjusted p-value c such that the share of replications
/// with adjusted p <= c does not exceed `alpha_target`. Zero when no such
/// value exists.
double cutoff_from_null(std::span<const double> adjusted_pvalues, double alpha_target);

/// Simulates the design under the null and returns the calibrated cutoff.
double calibrate_cutoff(const TrialConfig& config, const Scenario& null_scenario,
                        std::int64_t replications, Design design = Design::WeightedEntropy,
                        unsigned parallelism = 1);

struct KappaSweepRow {
    double kappa = 0.0;
    Estimate ens;
    Estimate power;
};

/// Operating characteristics per kappa with a fixed cutoff.
std::vector<KappaSweepRow> kappa_sweep(const TrialConfig& config, const Scenario& scenario,
                                       std::span<const double> kappa_grid, double cutoff,
                                       std::int64_t replications, unsigned parallelism = 1);

}  // namespace wedesign
