#pragma once

// Grid searches over the Phase I operational prior (beta x step) and the
// safety constraint (gamma* x r).

#include "wedesign/simulator.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace wedesign {

struct PriorGrid {
    std::vector<double> beta_values;
    /// Difference between the prior modes of the last and first arm.
    std::vector<double> step_values;
    /// Prior mode of the first arm, normally the target toxicity.
    double base_mode = 0.25;

    /// Throws std::invalid_argument on empty or non-positive beta lists.
    void validate() const;
};

struct PriorCell {
    double beta = 0.0;
    double step = 0.0;
    /// False when an interpolated mode leaves (0, 1); such cells are not run.
    bool valid = true;
    /// PCS per scenario, in input order.
    std::vector<Estimate> pcs;
    double geometric_mean = 0.0;
    /// Delta-method standard error of the geometric mean.
    double geometric_mean_se = 0.0;
};

struct CalibrationResult {
    /// Row-major: beta outer, step inner.
    std::vector<PriorCell> cells;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::optional<std::size_t> argmax;
    /// Valid cells within two standard errors of the maximal geometric mean.
    std::vector<std::size_t> plateau;
    /// Plateau cell with the smallest beta (largest geometric mean among
    /// those).
    std::optional<std::size_t> selected;
};

/// Geometric mean of the values; zero when any value is zero.
double geometric_mean(std::span<const double> values);

/// Runs every (beta, step) cell on every scenario. `config` supplies all
/// other settings (gamma, N, safety, rule, kappa, seed). Cell i uses seed
/// replication_seed(config.seed, i).
CalibrationResult prior_grid_search(const PriorGrid& grid, std::span<const Scenario> scenarios,
                                    const TrialConfig& config, std::int64_t replications,
                                    unsigned parallelism = 1);

struct SafetyCell {
    double gamma_star = 0.0;
    double r = 0.0;
    /// Termination share in the unsafe scenario.
    Estimate termination;
    /// PCS in the linear scenario.
    Estimate pcs;
};

struct SafetyGrid {
    std::vector<double> gamma_star_values;
    std::vector<double> r_values;
    std::vector<SafetyCell> cells;  ///< row-major: gamma* outer, r inner
};

/// Termination in `unsafe` and PCS in `linear` for each (gamma*, r).
SafetyGrid safety_grid_search(std::span<const double> gamma_star_values,
                              std::span<const double> r_values, const Scenario& linear,
                              const Scenario& unsafe, const TrialConfig& config,
                              std::int64_t replications, unsigned parallelism = 1);

/// Heatmap CSV: one row per beta, one column per step, geometric-mean PCS.
void write_prior_heatmap_csv(std::ostream& out, const CalibrationResult& result);

/// Heatmap CSV: one row per gamma*, two columns per r (termination, pcs).
void write_safety_heatmap_csv(std::ostream& out, const SafetyGrid& grid);

}  // namespace wedesign
