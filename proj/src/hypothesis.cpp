#include "wedesign/parallel.hpp"
#include "wedesign/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wedesign {

namespace {

double log_choose(std::int64_t n, std::int64_t k)
{
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double fisher_exact_pvalue(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
{
    if (a < 0 || b < 0 || c < 0 || d < 0) throw std::invalid_argument("table entries must be non-negative");
    const std::int64_t row = a + b;
    const std::int64_t col = a + c;
    const std::int64_t total = a + b + c + d;
    const std::int64_t lo = std::max<std::int64_t>(0, row + col - total);
    const std::int64_t hi = std::min(row, col);
    if (a <= lo) return 1.0;

    const double log_denominator = log_choose(total, col);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(hi - a + 1));
    for (std::int64_t x = a; x <= hi; ++x) {
        terms.push_back(log_choose(row, x) + log_choose(total - row, col - x) - log_denominator);
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    return std::min(1.0, std::exp(peak + std::log(sum)));
}

double min_adjusted_pvalue(const TrialRecord& record, std::size_t control_index,
                           std::size_t success_outcome)
{
    const std::size_t m = record.states.size();
    if (m < 2) throw std::invalid_argument("hypothesis testing needs a control and at least one arm");
    if (control_index >= m) throw std::invalid_argument("control index out of range");
    const auto& control = record.states[control_index];
    const std::int64_t c = control.count(success_outcome);
    const std::int64_t d = control.n() - c;
    double best = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == control_index) continue;
        const std::int64_t a = record.states[j].count(success_outcome);
        const std::int64_t b = record.states[j].n() - a;
        best = std::min(best, fisher_exact_pvalue(a, b, c, d));
    }
    return std::min(1.0, best * static_cast<double>(m - 1));
}

bool evaluate_hypotheses(const TrialRecord& record, const HypothesisTestConfig& test,
                         std::size_t success_outcome)
{
    return min_adjusted_pvalue(record, test.control_index, success_outcome) <= test.cutoff;
}

std::vector<double> null_adjusted_pvalues(const TrialConfig& config, const Scenario& null_scenario,
                                          std::int64_t replications, Design design,
                                          unsigned parallelism)
{
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    config.validate();
    const std::size_t control = config.testing ? config.testing->control_index : 0;
    std::vector<double> out(static_cast<std::size_t>(replications));
    parallel_for(replications, parallelism, [&](std::int64_t i) {
        const auto seed = replication_seed(config.seed, i);
        const auto record = design == Design::WeightedEntropy
                                ? run_trial(config, null_scenario, seed)
                                : fixed_randomization_trial(config, null_scenario, seed);
        out[static_cast<std::size_t>(i)] = min_adjusted_pvalue(record, control, config.success_outcome);
    });
    return out;
}

double cutoff_from_null(std::span<const double> adjusted_pvalues, double alpha_target)
{
    if (adjusted_pvalues.empty() || alpha_target <= 0.0) return 0.0;
    std::vector<double> sorted(adjusted_pvalues.begin(), adjusted_pvalues.end());
    std::sort(sorted.begin(), sorted.end());
    const double allowed = alpha_target * static_cast<double>(sorted.size());
    double cutoff = 0.0;
    for (std::size_t k = 0; k < sorted.size();) {
        // k .. next-1 share one value
        std::size_t next = k;
        while (next < sorted.size() && sorted[next] == sorted[k]) ++next;
        if (static_cast<double>(next) > allowed) break;
        cutoff = sorted[k];
        k = next;
    }
    return cutoff;
}

double calibrate_cutoff(const TrialConfig& config, const Scenario& null_scenario,
                        std::int64_t replications, Design design, unsigned parallelism)
{
    const double alpha = config.testing ? config.testing->alpha_target : 0.05;
    const auto pvalues = null_adjusted_pvalues(config, null_scenario, replications, design, parallelism);
    return cutoff_from_null(pvalues, alpha);
}

}  // namespace wedesign
