#include "wedesign/presets.hpp"

#include <algorithm>
#include <stdexcept>

namespace wedesign::presets {

SimplexVector efficacy_outcome(double p_success)
{
    return SimplexVector({1.0 - p_success, p_success});
}

SimplexVector toxicity_outcome(double p_toxic)
{
    return SimplexVector({p_toxic, 1.0 - p_toxic});
}

TrialConfig phase2_config(std::int64_t max_patients, Rule rule, double kappa)
{
    const SimplexVector prior_mode = efficacy_outcome(0.99);
    TrialConfig config{
        .name = "phase2",
        .gamma = efficacy_outcome(0.999),
        .kappa = kappa,
        .rule = rule,
        .priors = {{prior_mode, 5.0}, {prior_mode, 2.0}, {prior_mode, 2.0}, {prior_mode, 2.0}},
        .max_patients = max_patients,
        .safety = std::nullopt,
        .testing = HypothesisTestConfig{.control_index = 0, .alpha_target = 0.05, .cutoff = 0.05},
        .success_outcome = 1,
        .toxicity_outcome = 0,
        .seed = 20190101,
    };
    config.validate();
    return config;
}

Scenario phase2_scenario(std::string name, std::span<const double> efficacy)
{
    Scenario s;
    s.name = std::move(name);
    double best = -1.0;
    bool all_equal = true;
    for (std::size_t j = 0; j < efficacy.size(); ++j) {
        s.true_probabilities.push_back(efficacy_outcome(efficacy[j]));
        if (efficacy[j] != efficacy[0]) all_equal = false;
        if (efficacy[j] > best) {
            best = efficacy[j];
            s.target_index = j;
        }
    }
    if (all_equal) s.target_index.reset();
    return s;
}

Scenario trial1_null()
{
    const double p[] = {0.3, 0.3, 0.3, 0.3};
    auto s = phase2_scenario("trial1_h0", p);
    // p* under the null is reported for the arm that is best under H1
    s.target_index = 3;
    return s;
}

Scenario trial1_alternative()
{
    const double p[] = {0.3, 0.3, 0.3, 0.5};
    return phase2_scenario("trial1_h1", p);
}

Scenario trial2_null()
{
    const double p[] = {0.3, 0.3, 0.3, 0.3};
    auto s = phase2_scenario("trial2_h0", p);
    // p* under the null is reported for the arm that is best under H1
    s.target_index = 3;
    return s;
}

Scenario trial2_alternative()
{
    const double p[] = {0.3, 0.4, 0.5, 0.6};
    return phase2_scenario("trial2_h1", p);
}

std::vector<double> linear_prior_modes(std::size_t arms, double base, double step)
{
    if (arms == 0) throw std::invalid_argument("at least one arm is required");
    std::vector<double> modes(arms);
    for (std::size_t j = 0; j < arms; ++j) {
        modes[j] = arms == 1 ? base : base + step * static_cast<double>(j) / static_cast<double>(arms - 1);
    }
    return modes;
}

SafetyConfig phase1_safety()
{
    return SafetyConfig{.gamma_star = 0.45, .r = 0.035, .theta_final = 0.3, .toxicity_outcome = 0,
                        .clock = SafetyClock::TrialWide};
}

TrialConfig phase1_config(double beta, double step, const SafetyConfig& safety)
{
    std::vector<ArmPrior> priors;
    for (double mode : linear_prior_modes(7, 0.25, step)) priors.push_back({toxicity_outcome(mode), beta});
    TrialConfig config{
        .name = "phase1",
        .gamma = toxicity_outcome(0.25),
        .kappa = 0.5,
        .rule = Rule::RuleII,
        .priors = std::move(priors),
        .max_patients = 20,
        .safety = safety,
        .testing = std::nullopt,
        .success_outcome = 1,
        .toxicity_outcome = 0,
        .seed = 20190102,
    };
    config.validate();
    return config;
}

TrialConfig phase1_config()
{
    return phase1_config(1.0, 0.3, phase1_safety());
}

Scenario phase1_scenario(std::string name, std::span<const double> toxicity, bool no_safe_arm)
{
    Scenario s;
    s.name = std::move(name);
    for (double p : toxicity) s.true_probabilities.push_back(toxicity_outcome(p));
    s.no_safe_arm = no_safe_arm;
    if (!no_safe_arm) s.target_index = s.criterion_argmin(toxicity_outcome(0.25));
    return s;
}

std::vector<Scenario> phase1_scenarios()
{
    const double linear[] = {0.06, 0.12, 0.15, 0.18, 0.24, 0.36, 0.40};
    const double logistic[] = {0.10, 0.18, 0.25, 0.32, 0.50, 0.68, 0.82};
    const double j_shape[] = {0.15, 0.20, 0.50, 0.55, 0.60, 0.65, 0.70};
    const double inverted_u_1[] = {0.05, 0.10, 0.40, 0.35, 0.25, 0.15, 0.12};
    const double inverted_u_2[] = {0.35, 0.40, 0.40, 0.35, 0.25, 0.15, 0.10};
    const double unsafe[] = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};
    return {
        phase1_scenario("scenario1_linear", linear),
        phase1_scenario("scenario2_logistic", logistic),
        phase1_scenario("scenario3_j_shape", j_shape),
        phase1_scenario("scenario4_inverted_u", inverted_u_1),
        phase1_scenario("scenario5_inverted_u", inverted_u_2),
        phase1_scenario("scenario6_unsafe", unsafe, true),
    };
}

std::vector<Scenario> prior_calibration_scenarios()
{
    // linear curves through 0.25 at the target arm, flat and steep
    struct Shape {
        const char* name;
        std::size_t target;
        double slope;
    };
    const Shape shapes[] = {
        {"bottom_flat", 1, 0.05}, {"bottom_steep", 1, 0.10}, {"middle_flat", 3, 0.05},
        {"middle_steep", 3, 0.10}, {"top_flat", 4, 0.05},     {"top_steep", 4, 0.10},
    };
    std::vector<Scenario> out;
    for (const auto& shape : shapes) {
        std::vector<double> p(7);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double offset = static_cast<double>(j) - static_cast<double>(shape.target);
            p[j] = std::clamp(0.25 + shape.slope * offset, 0.01, 0.95);
        }
        out.push_back(phase1_scenario(shape.name, p));
    }
    return out;
}

}  // namespace wedesign::presets
