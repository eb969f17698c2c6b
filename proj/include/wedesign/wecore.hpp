#pragma once

// Weighted-entropy mathematics for arms with multinomial outcomes.
//
// An arm is summarised by Dirichlet pseudo-counts v (the prior) and observed
// category counts x. The posterior is Dir(x + v + 1). Everything in this
// header is a pure function of its arguments.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wedesign {

/// Tolerance used when validating that a probability vector sums to one.
inline constexpr double kSimplexTolerance = 1e-9;

/// A strictly interior point of the unit simplex (d >= 2).
///
/// Inputs whose sum is within kSimplexTolerance of one are renormalised;
/// anything else is rejected with std::invalid_argument.
class SimplexVector {
public:
    explicit SimplexVector(std::vector<double> components);

    /// (p, 1 - p).
    static SimplexVector binary(double p);

    std::size_t size() const noexcept { return components_.size(); }
    double operator[](std::size_t i) const { return components_[i]; }
    std::span<const double> components() const noexcept { return components_; }

    friend bool operator==(const SimplexVector&, const SimplexVector&) = default;

private:
    std::vector<double> components_;
};

/// Dirichlet pseudo-counts plus observed outcome counts for one arm.
class ArmState {
public:
    ArmState(std::vector<double> prior_pseudocounts, std::vector<std::int64_t> counts);

    /// Fresh arm with no observations.
    explicit ArmState(std::vector<double> prior_pseudocounts);

    /// Pseudo-counts v = beta * mode.
    static ArmState from_prior_mode(const SimplexVector& mode, double beta);

    std::size_t categories() const noexcept { return prior_.size(); }
    std::span<const double> prior_pseudocounts() const noexcept { return prior_; }
    std::span<const std::int64_t> counts() const noexcept { return counts_; }
    std::int64_t count(std::size_t category) const { return counts_.at(category); }

    /// Number of observations, sum of counts.
    std::int64_t n() const noexcept { return n_; }
    /// Prior mass, sum of pseudo-counts.
    double beta() const noexcept { return beta_; }

    /// In-place increment of one category. Throws std::invalid_argument when
    /// `outcome` is not a category index.
    void record(std::size_t outcome);

    friend bool operator==(const ArmState&, const ArmState&) = default;

private:
    std::vector<double> prior_;
    std::vector<std::int64_t> counts_;
    std::int64_t n_ = 0;
    double beta_ = 0.0;
};

/// Target vector and penalty exponent of the selection criterion.
struct CriterionParams {
    SimplexVector gamma;
    double kappa = 0.5;

    /// Validates 0.5 <= kappa < 1. With `allow_experimental_kappa`, any
    /// kappa in (0, 1) is accepted.
    CriterionParams(SimplexVector gamma, double kappa, bool allow_experimental_kappa = false);
};

/// Normal approximation of the criterion at a fixed probability vector.
struct NormalApprox {
    double mean = 0.0;
    double variance = 0.0;
    std::int64_t n = 0;
};

ArmState posterior_update(const ArmState& state, std::size_t outcome);

/// Component i is (x_i + v_i) / (n + beta).
SimplexVector posterior_mode(const ArmState& state);

/// Sample-size penalty n^(2 kappa - 1). At n = 0 this is 1 for kappa = 0.5
/// and 0 for kappa > 0.5.
double sample_size_penalty(double n, double kappa);

/// (1/2) (sum gamma_i^2 / alpha_i - 1) n^(2 kappa - 1).
double criterion(const SimplexVector& alpha, const CriterionParams& params, double n);

/// Binary form: (1/2) (p - gamma)^2 / (p (1 - p)) n^(2 kappa - 1).
double criterion_binary(double p, double gamma, double kappa, double n);

/// Criterion evaluated at the posterior mode with the arm's own n.
/// Allocation-free; this is what the simulators call per patient.
double plugin_criterion(const ArmState& state, const CriterionParams& params);

/// Plug-in criterion with kappa = 1/2, i.e. without the sample-size penalty.
double plugin_divergence(const ArmState& state, const SimplexVector& gamma);

/// Differential entropy of Dir(x + v + 1).
double dirichlet_entropy(const ArmState& state);

/// Weighted differential entropy of Dir(x + v + 1) under the Dirichlet-form
/// weight with exponent gamma * n^kappa (normalised against the posterior).
double weighted_dirichlet_entropy(const ArmState& state, const CriterionParams& params);

/// dirichlet_entropy - weighted_dirichlet_entropy. The log-Beta terms cancel
/// and are not evaluated, which keeps the result accurate at large n.
double information_gain(const ArmState& state, const CriterionParams& params);

/// Large-n expansion of the information gain: the negated criterion plus the
/// finite correction sum for j = 3 .. floor(1 / (1 - kappa)).
/// Throws std::domain_error for kappa < 0.5.
double gain_asymptotic(const SimplexVector& alpha, const CriterionParams& params, double n);

/// The correction sum alone (zero for kappa = 0.5).
double gain_correction(const SimplexVector& alpha, const CriterionParams& params, double n);

/// d/dalpha of the binary criterion at kappa = 1/2, n = 1.
double criterion_gradient_binary(double alpha, double gamma);

/// Gradient of the criterion with respect to each component of alpha.
std::vector<double> criterion_gradient(const SimplexVector& alpha, const CriterionParams& params,
                                       double n);

/// Multinomial covariance of the posterior at alpha.
std::vector<std::vector<double>> dirichlet_covariance(const SimplexVector& alpha, double n);

/// Mean and delta-method variance (grad' Sigma grad) of the criterion.
NormalApprox normal_approx(const SimplexVector& alpha, const CriterionParams& params,
                           std::int64_t n);

/// Boole-inequality lower bound on the probability that the target arm
/// attains the minimum criterion, under independent normal approximations.
/// Throws std::invalid_argument if `target_index` is not a minimiser.
double pcs_lower_bound(std::span<const double> deltas, std::span<const double> variances,
                       std::size_t target_index);

}  // namespace wedesign
