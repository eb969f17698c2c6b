#include "wedesign/allocation.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wedesign {

void SafetyConfig::validate() const
{
    if (!(gamma_star > 0.0 && gamma_star < 1.0)) {
        throw std::invalid_argument("gamma_star must lie in (0, 1)");
    }
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("r must be non-negative");
    if (!(theta_final > 0.0 && theta_final <= 0.3)) {
        throw std::invalid_argument("theta_final must lie in (0, 0.3]");
    }
}

std::vector<double> randomization_probabilities(std::span<const double> criterion_values)
{
    if (criterion_values.empty()) throw std::invalid_argument("no criterion values");
    std::size_t zeros = 0;
    for (double d : criterion_values) {
        if (!(d >= 0.0)) throw std::invalid_argument("criterion values must be non-negative");
        if (d == 0.0) ++zeros;
    }
    std::vector<double> w(criterion_values.size(), 0.0);
    if (zeros > 0) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (criterion_values[j] == 0.0) w[j] = 1.0 / static_cast<double>(zeros);
        }
        return w;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = 1.0 / criterion_values[j];
        total += w[j];
    }
    if (!std::isfinite(total)) {
        // an infinite weight only arises from a subnormal delta; treat as zero
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::isinf(w[j]) ? 1.0 : 0.0;
        total = std::count(w.begin(), w.end(), 1.0);
    }
    for (double& x : w) x /= total;
    return w;
}

namespace {

// Posterior modes coincide often (e.g. (x + v) / (n + beta) hitting another
// arm's prior mode), so equal criteria must not be split by rounding.
constexpr double kTieTolerance = 1e-12;

bool strictly_less(double a, double b)
{
    if (std::isinf(a) || std::isinf(b)) return a < b;
    return a < b - kTieTolerance * std::max(std::abs(a), std::abs(b));
}

}  // namespace

std::optional<std::size_t> select_best(std::span<const double> criterion_values,
                                       std::span<const std::size_t> eligible)
{
    std::optional<std::size_t> best;
    for (std::size_t j : eligible) {
        if (j >= criterion_values.size()) throw std::invalid_argument("eligible arm out of range");
        if (!best) {
            best = j;
            continue;
        }
        const double a = criterion_values[j];
        const double b = criterion_values[*best];
        if (strictly_less(a, b) || (!strictly_less(b, a) && j < *best)) best = j;
    }
    return best;
}

std::optional<std::size_t> final_recommendation(std::span<const ArmState> states,
                                                const SimplexVector& gamma,
                                                std::span<const std::size_t> eligible)
{
    std::vector<double> divergence(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) divergence[j] = plugin_divergence(states[j], gamma);
    return select_best(divergence, eligible);
}

std::optional<std::size_t> final_recommendation(std::span<const ArmState> states,
                                                const SimplexVector& gamma)
{
    std::vector<std::size_t> all(states.size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return final_recommendation(states, gamma, all);
}

double safety_threshold(std::int64_t n, const SafetyConfig& cfg)
{
    return std::max(1.0 - cfg.r * static_cast<double>(n), cfg.theta_final);
}

double overdose_probability(const ArmState& state, double gamma_star, std::size_t toxicity_outcome)
{
    if (state.categories() != 2) {
        throw std::domain_error("overdose probability is only defined for binary outcomes");
    }
    if (toxicity_outcome > 1) throw std::invalid_argument("toxicity outcome must be 0 or 1");
    const std::size_t other = 1 - toxicity_outcome;
    const auto v = state.prior_pseudocounts();
    const auto x = state.counts();
    const double a = static_cast<double>(x[toxicity_outcome]) + v[toxicity_outcome] + 1.0;
    const double b = static_cast<double>(x[other]) + v[other] + 1.0;
    return boost::math::ibetac(a, b, gamma_star);
}

std::vector<std::size_t> admissible_set(std::span<const ArmState> states, const SafetyConfig& cfg,
                                        std::int64_t trial_n)
{
    std::vector<double> overdose(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) {
        overdose[j] = overdose_probability(states[j], cfg.gamma_star, cfg.toxicity_outcome);
    }
    return admissible_set(states, cfg, trial_n, overdose);
}

std::vector<std::size_t> admissible_set(std::span<const ArmState> states, const SafetyConfig& cfg,
                                        std::int64_t trial_n, std::span<const double> overdose)
{
    if (overdose.size() != states.size()) {
        throw std::invalid_argument("one overdose probability per arm is required");
    }
    std::vector<std::size_t> out;
    out.reserve(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) {
        const std::int64_t clock_n = cfg.clock == SafetyClock::PerArm ? states[j].n() : trial_n;
        if (overdose[j] <= safety_threshold(clock_n, cfg)) out.push_back(j);
    }
    return out;
}

std::vector<double> plugin_criteria(std::span<const ArmState> states, const CriterionParams& params)
{
    std::vector<double> out(states.size());
    for (std::size_t j = 0; j < states.size(); ++j) out[j] = plugin_criterion(states[j], params);
    return out;
}

std::size_t draw_index(std::span<const double> probabilities, double uniform)
{
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        if (probabilities[j] <= 0.0) continue;
        last_positive = j;
        cumulative += probabilities[j];
        if (uniform < cumulative) return j;
    }
    return last_positive;
}

namespace {

std::int64_t total_patients(std::span<const ArmState> states)
{
    std::int64_t n = 0;
    for (const auto& s : states) n += s.n();
    return n;
}

std::vector<std::size_t> eligible_arms(std::span<const ArmState> states,
                                       const std::optional<SafetyConfig>& safety,
                                       std::span<const double> overdose)
{
    if (safety) {
        return overdose.empty() ? admissible_set(states, *safety, total_patients(states))
                                : admissible_set(states, *safety, total_patients(states), overdose);
    }
    std::vector<std::size_t> all(states.size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return all;
}

AllocationDecision decide(Rule rule, std::span<const ArmState> states, const CriterionParams& params,
                          const std::optional<SafetyConfig>& safety, std::span<const double> overdose,
                          Rng* rng, double uniform)
{
    if (states.empty()) throw std::invalid_argument("no arms");
    const auto eligible = eligible_arms(states, safety, overdose);
    AllocationDecision decision;
    if (eligible.empty()) return decision;

    const auto deltas = plugin_criteria(states, params);
    decision.kind = AllocationDecision::Kind::Assign;
    if (rule == Rule::RuleII) {
        decision.arm = *select_best(deltas, eligible);
        return decision;
    }

    std::vector<double> subset(eligible.size());
    for (std::size_t k = 0; k < eligible.size(); ++k) subset[k] = deltas[eligible[k]];
    const auto sub_probs = randomization_probabilities(subset);
    std::vector<double> probs(states.size(), 0.0);
    for (std::size_t k = 0; k < eligible.size(); ++k) probs[eligible[k]] = sub_probs[k];

    if (rng) uniform = rng->uniform();
    decision.arm = draw_index(probs, uniform);
    decision.uniform = uniform;
    decision.probabilities = std::move(probs);
    return decision;
}

}  // namespace

AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params,
                                   const std::optional<SafetyConfig>& safety, double uniform)
{
    if (!(uniform >= 0.0 && uniform < 1.0)) throw std::invalid_argument("uniform must lie in [0, 1)");
    return decide(rule, states, params, safety, {}, nullptr, uniform);
}

AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params,
                                   const std::optional<SafetyConfig>& safety, Rng& rng)
{
    return decide(rule, states, params, safety, {}, &rng, 0.0);
}

AllocationDecision next_assignment(Rule rule, std::span<const ArmState> states,
                                   const CriterionParams& params, const SafetyConfig& safety,
                                   std::span<const double> overdose, Rng& rng)
{
    if (overdose.size() != states.size()) {
        throw std::invalid_argument("one overdose probability per arm is required");
    }
    return decide(rule, states, params, safety, overdose, &rng, 0.0);
}

}  // namespace wedesign
