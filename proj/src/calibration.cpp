#include "wedesign/calibration.hpp"

#include "wedesign/presets.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>

namespace wedesign {

void PriorGrid::validate() const
{
    if (beta_values.empty() || step_values.empty()) throw std::invalid_argument("empty prior grid");
    for (double b : beta_values) {
        if (!(b > 0.0)) throw std::invalid_argument("beta values must be positive");
    }
    if (!(base_mode > 0.0 && base_mode < 1.0)) throw std::invalid_argument("base_mode must lie in (0, 1)");
}

double geometric_mean(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("geometric mean of nothing");
    double log_sum = 0.0;
    for (double v : values) {
        if (v < 0.0) throw std::invalid_argument("geometric mean needs non-negative values");
        if (v == 0.0) return 0.0;
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

namespace {

double pcs_of(const OperatingCharacteristics& oc)
{
    return oc.pcs ? oc.pcs->mean : 0.0;
}

Estimate pcs_estimate(const OperatingCharacteristics& oc)
{
    return oc.pcs.value_or(Estimate{});
}

TrialConfig with_prior(const TrialConfig& config, double base, double beta, double step)
{
    TrialConfig c = config;
    const auto modes = presets::linear_prior_modes(config.arms(), base, step);
    const std::size_t tox = config.toxicity_outcome;
    for (std::size_t j = 0; j < c.priors.size(); ++j) {
        std::vector<double> mode(2);
        mode[tox] = modes[j];
        mode[1 - tox] = 1.0 - modes[j];
        c.priors[j] = ArmPrior{SimplexVector(std::move(mode)), beta};
    }
    return c;
}

}  // namespace

CalibrationResult prior_grid_search(const PriorGrid& grid, std::span<const Scenario> scenarios,
                                    const TrialConfig& config, std::int64_t replications,
                                    unsigned parallelism)
{
    grid.validate();
    if (scenarios.empty()) throw std::invalid_argument("no calibration scenarios");
    if (config.outcomes() != 2) throw std::invalid_argument("prior calibration needs binary outcomes");

    CalibrationResult result;
    result.rows = grid.beta_values.size();
    result.cols = grid.step_values.size();
    std::size_t index = 0;
    for (double beta : grid.beta_values) {
        for (double step : grid.step_values) {
            PriorCell cell{.beta = beta, .step = step};
            const double top = grid.base_mode + step;
            cell.valid = top > 0.0 && top < 1.0;
            if (cell.valid) {
                TrialConfig c = with_prior(config, grid.base_mode, beta, step);
                c.seed = replication_seed(config.seed, index);
                std::vector<double> means;
                double rel_var = 0.0;
                for (const auto& s : scenarios) {
                    const auto oc = run_monte_carlo(c, s, replications, Design::WeightedEntropy, parallelism);
                    cell.pcs.push_back(pcs_estimate(oc));
                    means.push_back(pcs_of(oc));
                    if (means.back() > 0.0) {
                        const double rel = cell.pcs.back().se / means.back();
                        rel_var += rel * rel;
                    }
                }
                cell.geometric_mean = geometric_mean(means);
                cell.geometric_mean_se =
                    cell.geometric_mean * std::sqrt(rel_var) / static_cast<double>(means.size());
            }
            result.cells.push_back(std::move(cell));
            ++index;
        }
    }

    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (!result.cells[i].valid) continue;
        if (!result.argmax || result.cells[i].geometric_mean > result.cells[*result.argmax].geometric_mean) {
            result.argmax = i;
        }
    }
    if (!result.argmax) return result;

    const auto& best = result.cells[*result.argmax];
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const auto& c = result.cells[i];
        if (!c.valid) continue;
        const double se = std::hypot(c.geometric_mean_se, best.geometric_mean_se);
        if (c.geometric_mean >= best.geometric_mean - 2.0 * se) result.plateau.push_back(i);
    }
    for (std::size_t i : result.plateau) {
        if (!result.selected) {
            result.selected = i;
            continue;
        }
        const auto& c = result.cells[i];
        const auto& s = result.cells[*result.selected];
        if (c.beta < s.beta || (c.beta == s.beta && c.geometric_mean > s.geometric_mean)) result.selected = i;
    }
    return result;
}

SafetyGrid safety_grid_search(std::span<const double> gamma_star_values,
                              std::span<const double> r_values, const Scenario& linear,
                              const Scenario& unsafe, const TrialConfig& config,
                              std::int64_t replications, unsigned parallelism)
{
    if (!config.safety) throw std::invalid_argument("safety grid search needs a safety constraint");
    SafetyGrid grid;
    grid.gamma_star_values.assign(gamma_star_values.begin(), gamma_star_values.end());
    grid.r_values.assign(r_values.begin(), r_values.end());
    std::size_t index = 0;
    for (double g : gamma_star_values) {
        for (double r : r_values) {
            TrialConfig c = config;
            c.safety->gamma_star = g;
            c.safety->r = r;
            c.seed = replication_seed(config.seed, index++);
            c.validate();
            const auto unsafe_oc = run_monte_carlo(c, unsafe, replications, Design::WeightedEntropy, parallelism);
            const auto linear_oc = run_monte_carlo(c, linear, replications, Design::WeightedEntropy, parallelism);
            grid.cells.push_back(SafetyCell{.gamma_star = g,
                                            .r = r,
                                            .termination = unsafe_oc.termination_rate,
                                            .pcs = pcs_estimate(linear_oc)});
        }
    }
    return grid;
}

void write_prior_heatmap_csv(std::ostream& out, const CalibrationResult& result)
{
    out << std::setprecision(10);
    out << "beta";
    for (std::size_t j = 0; j < result.cols; ++j) out << ",step_" << result.cells[j].step;
    out << '\n';
    for (std::size_t i = 0; i < result.rows; ++i) {
        out << result.cells[i * result.cols].beta;
        for (std::size_t j = 0; j < result.cols; ++j) {
            const auto& c = result.cells[i * result.cols + j];
            out << ',';
            if (c.valid) out << c.geometric_mean;
        }
        out << '\n';
    }
}

void write_safety_heatmap_csv(std::ostream& out, const SafetyGrid& grid)
{
    out << std::setprecision(10);
    out << "gamma_star";
    for (double r : grid.r_values) out << ",termination_r_" << r << ",pcs_r_" << r;
    out << '\n';
    const std::size_t cols = grid.r_values.size();
    for (std::size_t i = 0; i < grid.gamma_star_values.size(); ++i) {
        out << grid.gamma_star_values[i];
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& c = grid.cells[i * cols + j];
            out << ',' << c.termination.mean << ',' << c.pcs.mean;
        }
        out << '\n';
    }
}

}  // namespace wedesign
