#pragma once

// Built-in trial settings: the two four-arm Phase II efficacy trials and the
// seven-arm Phase I toxicity study, with their scenarios.

#include "wedesign/simulator.hpp"

#include <span>
#include <string>
#include <vector>

namespace wedesign::presets {

/// Binary outcome vector ordered (category 0, category 1) = (1 - p, p) for
/// efficacy and (p, 1 - p) for toxicity.
SimplexVector efficacy_outcome(double p_success);
SimplexVector toxicity_outcome(double p_toxic);

/// Phase II: target 0.999 on success (category 1), prior modes 0.99,
/// control beta 5, experimental beta 2.
TrialConfig phase2_config(std::int64_t max_patients, Rule rule, double kappa);

/// Scenario with efficacy probabilities per arm. The target is the arm with
/// the largest probability, or none when all arms are equal.
Scenario phase2_scenario(std::string name, std::span<const double> efficacy);

/// Trial 1: N = 423, H0 all 0.3, H1 (0.3, 0.3, 0.3, 0.5).
inline constexpr std::int64_t kTrial1Patients = 423;
Scenario trial1_null();
Scenario trial1_alternative();

/// Trial 2: N = 80, H0 all 0.3, H1 (0.3, 0.4, 0.5, 0.6).
inline constexpr std::int64_t kTrial2Patients = 80;
Scenario trial2_null();
Scenario trial2_alternative();

/// Phase I prior modes interpolated linearly from `base` to `base + step`.
std::vector<double> linear_prior_modes(std::size_t arms, double base, double step);

/// Phase I: 7 arms, N = 20, target toxicity 0.25, Rule II, kappa 0.5,
/// prior beta 1 with modes 0.25 .. 0.55, safety gamma* = 0.45, r = 0.035.
TrialConfig phase1_config();

/// Same design with a custom prior and safety constraint.
TrialConfig phase1_config(double beta, double step, const SafetyConfig& safety);

SafetyConfig phase1_safety();

/// Scenario with toxicity probabilities per arm; target is the criterion
/// argmin against 0.25 unless `no_safe_arm`.
Scenario phase1_scenario(std::string name, std::span<const double> toxicity, bool no_safe_arm = false);

/// Six toxicity scenarios: linear, logistic, J shape, two inverted-U shapes
/// and an unsafe one (index 0 .. 5).
std::vector<Scenario> phase1_scenarios();

/// Six linear scenarios through 0.25 at the target (d2, d4, d5), each with
/// slope 0.05 and 0.10 per arm, used for the operational-prior grid search.
std::vector<Scenario> prior_calibration_scenarios();

}  // namespace wedesign::presets
