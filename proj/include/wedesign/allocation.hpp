#pragma once

// Assignment rules, final recommendation and the time-varying safety
// constraint used by both the simulator and the conduct service.

#include "wedesign/rng.hpp"
#include "wedesign/wecore.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace wedesign {

enum class Rule { RuleI, RuleII };

/// How the n in theta_n is counted.
enum class SafetyClock {
    PerArm,     ///< patients treated on the arm being checked
    TrialWide,  ///< patients treated in the whole trial
};

struct SafetyConfig {
    double gamma_star = 0.45;
    double r = 0.035;
    double theta_final = 0.3;
    std::size_t toxicity_outcome = 0;
    SafetyClock clock = SafetyClock::PerArm;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct AllocationDecision {
    enum class Kind { Assign, Terminate };

    Kind kind = Kind::Terminate;
    std::size_t arm = 0;
    /// Rule I only: the distribution the arm was drawn from.
    std::optional<std::vector<double>> probabilities;
    /// Rule I only: the uniform variate that selected the arm.
    std::optional<double> uniform;

    bool terminated() const noexcept { return kind == Kind::Terminate; }
};

/// Rule I weights proportional to 1 / delta. Arms with delta == 0 share
/// probability one uniformly. Throws std::invalid_argument on an empty or
/// negative input.
std::vector<double> randomization_probabilities(std::span<const double> criterion_values);

/// Eligible arm with the smallest value, lowest index on ties. Values within
/// a relative 1e-12 of each other count as tied.
/// nullopt when `eligible` is empty.
std::optional<std::size_t> select_best(std::span<const double> criterion_values,
                                       std::span<const std::size_t> eligible);

/// Recommendation at the end of a trial: argmin over `eligible` of the
/// unpenalised plug-in criterion. nullopt when nothing is eligible.
std::optional<std::size_t> final_recommendation(std::span<const ArmState> states,
                                                const SimplexVector& gamma,
                                                std::span<const std::size_t> eligible);

/// Same, over all arms.
std::optional<std::size_t> final_recommendation(std::span<const ArmState> states,
                                                const SimplexVector& gamma);

/// max(1 - r n, theta_final).
double safety_threshold(std::int64_t n, const SafetyConfig& cfg);

/// Posterior probability that the toxicity rate exceeds gamma_star.
/// Throws std::domain_error for non-binary arms.
double overdose_probability(const ArmState& state, double gamma_star,
                            std::size_t toxicity_outcome = 0);

/// Arms whose overdose probability does not exceed theta_n.
/// `trial_n` is only read with SafetyClock::TrialWide.
std::vector<std::size_t> admissible_set(std::span<const ArmState> states, const SafetyConfig& cfg,
                                        std::int64_t trial_n = 0);

/// Same, with overdose probabilities already computed per arm.
std::vector<std::size_t> admissible_set(std::span<const ArmState> states, const SafetyConfig& cfg,
                                        std::int64_t trial_n, std::span<const double> overdose);

/// Plug-in criterion of every arm.
std::vector<double> plugin_criteria(std::span<const ArmState> states, const CriterionParams& params);

/// Decision for the next patient given a uniform variate in [0, 1) (only
/// consumed by Rule I). Inadmissible arms get probability zero; an empty
/// admissible set terminates.
AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params,
                                   const std::optional<SafetyConfig>& safety, double uniform);

/// Same, drawing the variate from `rng` only when Rule I needs it.
AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params,
                                   const std::optional<SafetyConfig>& safety, Rng& rng);

/// Same, with overdose probabilities cached by the caller (one per arm,
/// matching `states`).
AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params, const SafetyConfig& safety,
                                   std::span<const double> overdose, Rng& rng);

/// Index drawn from `probabilities` by inverse CDF at `uniform`.
std::size_t draw_index(std::span<const double> probabilities, double uniform);

}  // namespace wedesign
