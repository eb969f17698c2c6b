#include "wedesign/wecore.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wedesign {

SimplexVector::SimplexVector(std::vector<double> components) : components_(std::move(components))
{
    if (components_.size() < 2) {
        throw std::invalid_argument("simplex vector needs at least two components");
    }
    double sum = 0.0;
    for (double c : components_) {
        if (!(c > 0.0 && c < 1.0)) {
            throw std::invalid_argument("simplex component " + std::to_string(c) +
                                        " is not strictly inside (0, 1)");
        }
        sum += c;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw std::invalid_argument("simplex components sum to " + std::to_string(sum) +
                                    ", expected 1");
    }
    for (double& c : components_) c /= sum;
}

SimplexVector SimplexVector::binary(double p)
{
    return SimplexVector({p, 1.0 - p});
}

ArmState::ArmState(std::vector<double> prior_pseudocounts, std::vector<std::int64_t> counts)
    : prior_(std::move(prior_pseudocounts)), counts_(std::move(counts))
{
    if (prior_.size() < 2) {
        throw std::invalid_argument("arm state needs at least two outcome categories");
    }
    if (prior_.size() != counts_.size()) {
        throw std::invalid_argument("prior and count vectors differ in length");
    }
    for (double v : prior_) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("prior pseudo-counts must be positive and finite");
        }
        beta_ += v;
    }
    for (auto x : counts_) {
        if (x < 0) throw std::invalid_argument("outcome counts must be non-negative");
        n_ += x;
    }
}

ArmState::ArmState(std::vector<double> prior_pseudocounts)
    : ArmState(prior_pseudocounts, std::vector<std::int64_t>(prior_pseudocounts.size(), 0))
{
}

ArmState ArmState::from_prior_mode(const SimplexVector& mode, double beta)
{
    if (!(beta > 0.0)) throw std::invalid_argument("prior beta must be positive");
    std::vector<double> v(mode.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = beta * mode[i];
    return ArmState(std::move(v));
}

void ArmState::record(std::size_t outcome)
{
    if (outcome >= counts_.size()) {
        throw std::invalid_argument("outcome index " + std::to_string(outcome) +
                                    " out of range for " + std::to_string(counts_.size()) +
                                    " categories");
    }
    ++counts_[outcome];
    ++n_;
}

CriterionParams::CriterionParams(SimplexVector gamma_, double kappa_, bool allow_experimental_kappa)
    : gamma(std::move(gamma_)), kappa(kappa_)
{
    const double lower = allow_experimental_kappa ? 0.0 : 0.5;
    const bool ok = allow_experimental_kappa ? (kappa > lower && kappa < 1.0)
                                             : (kappa >= lower && kappa < 1.0);
    if (!ok) {
        throw std::invalid_argument("kappa " + std::to_string(kappa) + " outside " +
                                    (allow_experimental_kappa ? "(0, 1)" : "[0.5, 1)"));
    }
}

ArmState posterior_update(const ArmState& state, std::size_t outcome)
{
    ArmState next = state;
    next.record(outcome);
    return next;
}

SimplexVector posterior_mode(const ArmState& state)
{
    const auto v = state.prior_pseudocounts();
    const auto x = state.counts();
    const double denom = static_cast<double>(state.n()) + state.beta();
    std::vector<double> mode(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mode[i] = (static_cast<double>(x[i]) + v[i]) / denom;
    return SimplexVector(std::move(mode));
}

double sample_size_penalty(double n, double kappa)
{
    return std::pow(n, 2.0 * kappa - 1.0);
}

double criterion(const SimplexVector& alpha, const CriterionParams& params, double n)
{
    if (alpha.size() != params.gamma.size()) {
        throw std::invalid_argument("alpha and gamma differ in dimension");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) sum += params.gamma[i] * params.gamma[i] / alpha[i];
    // sum >= 1 by Cauchy-Schwarz; clamp rounding below zero
    return 0.5 * std::max(sum - 1.0, 0.0) * sample_size_penalty(n, params.kappa);
}

double criterion_binary(double p, double gamma, double kappa, double n)
{
    const double diff = p - gamma;
    return 0.5 * diff * diff / (p * (1.0 - p)) * sample_size_penalty(n, kappa);
}

double plugin_divergence(const ArmState& state, const SimplexVector& gamma)
{
    const auto v = state.prior_pseudocounts();
    const auto x = state.counts();
    const double denom = static_cast<double>(state.n()) + state.beta();
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mode = (static_cast<double>(x[i]) + v[i]) / denom;
        sum += gamma[i] * gamma[i] / mode;
    }
    return 0.5 * std::max(sum - 1.0, 0.0);
}

double plugin_criterion(const ArmState& state, const CriterionParams& params)
{
    const double penalty = sample_size_penalty(static_cast<double>(state.n()), params.kappa);
    if (penalty == 0.0) return 0.0;
    return plugin_divergence(state, params.gamma) * penalty;
}

namespace {

// Dirichlet parameters a = x + v + 1 of the posterior.
std::vector<double> posterior_parameters(const ArmState& state)
{
    const auto v = state.prior_pseudocounts();
    const auto x = state.counts();
    std::vector<double> a(v.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(x[i]) + v[i] + 1.0;
    return a;
}

double log_beta(std::span<const double> a)
{
    double out = 0.0;
    double total = 0.0;
    for (double ai : a) {
        out += boost::math::lgamma(ai);
        total += ai;
    }
    return out - boost::math::lgamma(total);
}

// E[log p_i] under Dir(a) is digamma(a_i) - digamma(a_0).
std::vector<double> expected_log(std::span<const double> a)
{
    const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
    const double psi0 = boost::math::digamma(a0);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = boost::math::digamma(a[i]) - psi0;
    return out;
}

std::vector<double> weighted_parameters(const ArmState& state, const CriterionParams& params)
{
    if (params.gamma.size() != state.categories()) {
        throw std::invalid_argument("gamma and arm state differ in dimension");
    }
    auto a = posterior_parameters(state);
    const double n = static_cast<double>(state.n());
    const double scale = n > 0.0 ? std::pow(n, params.kappa) : 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += params.gamma[i] * scale;
    return a;
}

}  // namespace

double dirichlet_entropy(const ArmState& state)
{
    const auto a = posterior_parameters(state);
    const auto elog = expected_log(a);
    double h = log_beta(a);
    for (std::size_t i = 0; i < a.size(); ++i) h -= (a[i] - 1.0) * elog[i];
    return h;
}

double weighted_dirichlet_entropy(const ArmState& state, const CriterionParams& params)
{
    const auto a = posterior_parameters(state);
    const auto elog = expected_log(weighted_parameters(state, params));
    double h = log_beta(a);
    for (std::size_t i = 0; i < a.size(); ++i) h -= (a[i] - 1.0) * elog[i];
    return h;
}

double information_gain(const ArmState& state, const CriterionParams& params)
{
    const auto a = posterior_parameters(state);
    const auto plain = expected_log(a);
    const auto weighted = expected_log(weighted_parameters(state, params));
    double gain = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gain += (a[i] - 1.0) * (weighted[i] - plain[i]);
    return gain;
}

double gain_correction(const SimplexVector& alpha, const CriterionParams& params, double n)
{
    if (params.kappa < 0.5) {
        throw std::domain_error("gain expansion is only defined for kappa >= 0.5");
    }
    const int eta = static_cast<int>(std::floor(1.0 / (1.0 - params.kappa)));
    double omega = 0.0;
    for (int j = 3; j <= eta; ++j) {
        double inner = -1.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            inner += std::pow(params.gamma[i], j) / std::pow(alpha[i], j - 1);
        }
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        omega += sign / j * std::pow(n, j * params.kappa - j + 1.0) * inner;
    }
    return omega;
}

double gain_asymptotic(const SimplexVector& alpha, const CriterionParams& params, double n)
{
    if (params.kappa < 0.5) {
        throw std::domain_error("gain expansion is only defined for kappa >= 0.5");
    }
    return -criterion(alpha, params, n) + gain_correction(alpha, params, n);
}

double criterion_gradient_binary(double alpha, double gamma)
{
    const double q = 1.0 - alpha;
    return (gamma - alpha) * (gamma * (2.0 * alpha - 1.0) - alpha) / (2.0 * alpha * alpha * q * q);
}

std::vector<double> criterion_gradient(const SimplexVector& alpha, const CriterionParams& params,
                                       double n)
{
    const double penalty = sample_size_penalty(n, params.kappa);
    std::vector<double> grad(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        grad[i] = -0.5 * params.gamma[i] * params.gamma[i] / (alpha[i] * alpha[i]) * penalty;
    }
    return grad;
}

std::vector<std::vector<double>> dirichlet_covariance(const SimplexVector& alpha, double n)
{
    const std::size_t d = alpha.size();
    std::vector<std::vector<double>> sigma(d, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            sigma[i][j] = (i == j ? alpha[i] * (1.0 - alpha[i]) : -alpha[i] * alpha[j]) / n;
        }
    }
    return sigma;
}

NormalApprox normal_approx(const SimplexVector& alpha, const CriterionParams& params, std::int64_t n)
{
    if (n <= 0) throw std::invalid_argument("normal approximation needs n > 0");
    const double dn = static_cast<double>(n);
    const auto grad = criterion_gradient(alpha, params, dn);
    const auto sigma = dirichlet_covariance(alpha, dn);
    double variance = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        for (std::size_t j = 0; j < grad.size(); ++j) variance += grad[i] * sigma[i][j] * grad[j];
    }
    return {criterion(alpha, params, dn), std::max(variance, 0.0), n};
}

double pcs_lower_bound(std::span<const double> deltas, std::span<const double> variances,
                       std::size_t target_index)
{
    if (deltas.size() != variances.size() || deltas.empty()) {
        throw std::invalid_argument("deltas and variances must be non-empty and equal length");
    }
    if (target_index >= deltas.size()) throw std::invalid_argument("target index out of range");
    const double target = deltas[target_index];
    if (std::any_of(deltas.begin(), deltas.end(), [&](double d) { return d < target; })) {
        throw std::invalid_argument("target index does not have the minimal criterion");
    }
    const boost::math::normal_distribution<double> standard;
    double miss = 0.0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (i == target_index) continue;
        const double sd = std::sqrt(variances[target_index] + variances[i]);
        const double diff = target - deltas[i];
        if (sd > 0.0) {
            miss += boost::math::cdf(standard, diff / sd);
        } else {
            miss += diff < 0.0 ? 0.0 : (diff > 0.0 ? 1.0 : 0.5);
        }
    }
    return std::clamp(1.0 - miss, 0.0, 1.0);
}

}  // namespace wedesign
