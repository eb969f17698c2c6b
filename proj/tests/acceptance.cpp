// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// line fails. Criterion names given on the command line restrict the run.

#include "oracles.hpp"

#include "wedesign/calibration.hpp"
#include "wedesign/presets.hpp"
#include "wedesign/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace wedesign;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Appends "label=value (target±tol)" and folds the comparison into pass.
    void near(const std::string& label, double value, double target, double tol)
    {
        const bool ok = std::abs(value - target) <= tol;
        pass = pass && ok;
        sep();
        detail << label << '=' << fmt(value) << " (" << fmt(target) << "±" << fmt(tol) << ')' << (ok ? "" : " MISS");
    }
    void require(const std::string& label, bool ok, const std::string& info = {})
    {
        pass = pass && ok;
        sep();
        detail << label << (info.empty() ? "" : " " + info) << (ok ? "" : " MISS");
    }
    void note(const std::string& text)
    {
        sep();
        detail << text;
    }
    static std::string fmt(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", x);
        return buf;
    }

private:
    void sep()
    {
        if (detail.tellp() > 0) detail << "; ";
    }
};

const ComparisonRow& find_row(const std::vector<ComparisonRow>& rows, const std::string& design,
                              std::optional<double> kappa, const std::string& scenario, const std::string& metric)
{
    for (const auto& r : rows) {
        const bool same_kappa = kappa ? (r.kappa && std::abs(*r.kappa - *kappa) < 1e-9) : !r.kappa;
        if (r.design == design && same_kappa && r.scenario == scenario && r.metric == metric && r.simulated) {
            return r;
        }
    }
    throw std::runtime_error("no simulated row " + design + " " + scenario + " " + metric);
}

std::vector<ComparisonRow> run_table(const std::string& id, std::int64_t reps)
{
    ReproduceOptions options;
    options.replications = reps;
    options.cutoff_replications = 10000;
    options.reference_file = default_reference_file();
    return reproduce(id, options);
}

void table2(Outcome& o)
{
    const auto rows = run_table("table2", 10000);
    o.near("FR H0 alpha", *find_row(rows, "FR", {}, "trial2_h0", "alpha").simulated, 0.05, 0.01);
    o.near("FR H1 power", *find_row(rows, "FR", {}, "trial2_h1", "power").simulated, 0.50, 0.05);
    o.near("WE_I(0.5) H1 ENS", *find_row(rows, "WE_I", 0.5, "trial2_h1", "ens").simulated, 37.55, 1.0);
    o.near("WE_I(0.5) H1 p*", *find_row(rows, "WE_I", 0.5, "trial2_h1", "p_star").simulated, 0.33, 0.03);
    o.near("WE_II(0.65) H1 ENS", *find_row(rows, "WE_II", 0.65, "trial2_h1", "ens").simulated, 40.19, 1.0);
}

void table1(Outcome& o)
{
    const auto rows = run_table("table1", 10000);
    o.near("FR H0 ENS", *find_row(rows, "FR", {}, "trial1_h0", "ens").simulated, 126.91, 1.5);
    o.near("WE_I(0.5) H1 ENS", *find_row(rows, "WE_I", 0.5, "trial1_h1", "ens").simulated, 159.90, 2.0);
    o.near("WE_I(0.5) H1 power", *find_row(rows, "WE_I", 0.5, "trial1_h1", "power").simulated, 0.88, 0.05);
    o.near("WE_II(0.55) H1 p*", *find_row(rows, "WE_II", 0.55, "trial1_h1", "p_star").simulated, 0.83, 0.03);
}

void table3(Outcome& o)
{
    const auto rows = run_table("table3", 100000);
    o.near("S1 d4", *find_row(rows, "WE", 0.5, "scenario1_linear", "selection_d4").simulated, 30.11, 1.5);
    o.near("S2 d3", *find_row(rows, "WE", 0.5, "scenario2_logistic", "selection_d3").simulated, 29.54, 1.5);
    o.near("S3 d2", *find_row(rows, "WE", 0.5, "scenario3_j_shape", "selection_d2").simulated, 44.65, 1.5);
    o.near("S2 tox", *find_row(rows, "WE", 0.5, "scenario2_logistic", "tox").simulated, 5.23, 0.2);
    o.near("benchmark S2 d3", *find_row(rows, "Optimal", {}, "scenario2_logistic", "selection_d3").simulated,
           30.12, 1.5);
}

void table4(Outcome& o)
{
    const auto rows = run_table("table4", 100000);
    o.near("S4 d5", *find_row(rows, "WE", 0.5, "scenario4_inverted_u", "selection_d5").simulated, 27.90, 1.5);
    o.near("S6 term", *find_row(rows, "WE", 0.5, "scenario6_unsafe", "term").simulated, 77.2, 1.5);
    o.near("S6 mean N", *find_row(rows, "WE", 0.5, "scenario6_unsafe", "mean_n").simulated, 14.2, 0.5);
    o.near("S6 tox", *find_row(rows, "WE", 0.5, "scenario6_unsafe", "tox").simulated, 8.02, 0.3);
}

void table5(Outcome& o)
{
    const std::vector<double> gammas{0.55, 0.50, 0.45, 0.40, 0.35, 0.30};
    const std::vector<double> rs{0.010, 0.015, 0.020, 0.025, 0.030, 0.035, 0.040, 0.045};
    const auto s = presets::phase1_scenarios();
    const auto grid = safety_grid_search(gammas, rs, s[0], s[5], presets::phase1_config(), 10000);
    auto cell = [&](double g, double r) -> const SafetyCell& {
        for (const auto& c : grid.cells) {
            if (std::abs(c.gamma_star - g) < 1e-12 && std::abs(c.r - r) < 1e-12) return c;
        }
        throw std::runtime_error("missing grid cell");
    };
    o.near("(0.45,0.035) term", 100 * cell(0.45, 0.035).termination.mean, 77.55, 2.5);
    o.near("(0.45,0.035) pcs", 100 * cell(0.45, 0.035).pcs.mean, 23.15, 2.5);
    o.near("(0.55,0.010) term", 100 * cell(0.55, 0.010).termination.mean, 0.00, 2.5);
    o.near("(0.55,0.010) pcs", 100 * cell(0.55, 0.010).pcs.mean, 26.47, 2.5);
    int broken = 0;
    for (double g : gammas) {
        for (std::size_t k = 1; k < rs.size(); ++k) {
            if (cell(g, rs[k]).termination.mean < cell(g, rs[k - 1]).termination.mean) ++broken;
        }
    }
    o.require("termination non-decreasing in r", broken == 0, "(" + std::to_string(broken) + " inversions)");
}

void prior_calibration(Outcome& o)
{
    const PriorGrid grid{.beta_values = {0.5, 1.0, 2.0}, .step_values = {0.2, 0.3, 0.4}};
    const auto scenarios = presets::prior_calibration_scenarios();
    const auto result = prior_grid_search(grid, scenarios, presets::phase1_config(), 10000);
    const std::size_t target = 1 * result.cols + 1;
    const auto& best = result.cells[*result.argmax];
    const auto& c = result.cells[target];
    o.note("max GM " + Outcome::fmt(best.geometric_mean) + " at (beta=" + Outcome::fmt(best.beta) +
           ", step=" + Outcome::fmt(best.step) + ")");
    const double se = std::hypot(c.geometric_mean_se, best.geometric_mean_se);
    o.require("(beta=1, step=0.3) within 2 s.e.",
              std::find(result.plateau.begin(), result.plateau.end(), target) != result.plateau.end(),
              "GM " + Outcome::fmt(c.geometric_mean) + ", gap " + Outcome::fmt(best.geometric_mean - c.geometric_mean) +
                  ", 2 s.e. " + Outcome::fmt(2 * se));
}

double relative_gap(double kappa, double n, bool corrected)
{
    const SimplexVector alpha({0.3, 0.7});
    const CriterionParams params(SimplexVector({0.25, 0.75}), kappa);
    const ArmState s({1e-9, 1e-9}, {std::llround(0.3 * n), std::llround(0.7 * n)});
    const double full = gain_asymptotic(alpha, params, n);
    const double approx = corrected ? full : full - gain_correction(alpha, params, n);
    return std::abs(information_gain(s, params) - approx) / std::abs(full);
}

void theorem21(Outcome& o)
{
    const std::vector<double> ns{1e2, 1e3, 1e4, 1e5};
    std::vector<double> half;
    for (double n : ns) half.push_back(relative_gap(0.5, n, false));
    std::ostringstream list;
    for (double g : half) list << Outcome::fmt(g) << ' ';
    o.require("kappa=0.5 decreasing", std::is_sorted(half.rbegin(), half.rend()), "(" + list.str() + ")");
    o.require("kappa=0.5 relative gap at 1e5 < 0.05", half.back() < 0.05, "(" + Outcome::fmt(half.back()) + ")");
    int better = 0;
    for (double n : ns) better += relative_gap(0.75, n, true) < relative_gap(0.75, n, false);
    o.require("kappa=0.75 corrected beats leading", better == 4, "(" + std::to_string(better) + "/4)");
}

// Kolmogorov-Smirnov distance to the standard normal and its asymptotic p-value.
std::pair<double, double> ks_normal(std::vector<double> z)
{
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double f = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return {d, std::clamp(p, 0.0, 1.0)};
}

std::pair<double, double> standardized_ks(std::int64_t n, std::uint64_t seed)
{
    const CriterionParams params(SimplexVector({0.25, 0.75}), 0.5);
    const std::int64_t x0 = std::llround(0.3 * n);
    const double v = 1e-9;
    const auto approx = normal_approx(SimplexVector({x0 / double(n), 1 - x0 / double(n)}), params, n);
    Rng rng(seed);
    std::gamma_distribution<double> g0(x0 + v + 1), g1(n - x0 + v + 1);
    std::vector<double> z(10000);
    for (auto& zi : z) {
        const double a = g0(rng), b = g1(rng);
        const double p = a / (a + b);
        zi = (criterion(SimplexVector({p, 1 - p}), params, n) - approx.mean) / std::sqrt(approx.variance);
    }
    return ks_normal(std::move(z));
}

void theorem23(Outcome& o)
{
    const auto [d_small, p_small] = standardized_ks(100, 1);
    const auto [d_large, p_large] = standardized_ks(10000, 2);
    o.require("KS decreasing", d_large < d_small,
              "(D=" + Outcome::fmt(d_small) + " at 1e2, " + Outcome::fmt(d_large) + " at 1e4)");
    o.require("passes at 0.01 for n=1e4", p_large > 0.01, "(p=" + Outcome::fmt(p_large) + ")");
    o.note("p at 1e2 " + Outcome::fmt(p_small));
}

// Rule II on the lock-in example; returns cumulative optimal-arm counts at each checkpoint.
std::vector<std::int64_t> lock_in_counts(double kappa, std::vector<std::int64_t> checkpoints, std::uint64_t seed)
{
    const CriterionParams params(presets::toxicity_outcome(0.25), kappa);
    std::vector<ArmState> states{ArmState::from_prior_mode(presets::toxicity_outcome(0.62), 5.0),
                                 ArmState::from_prior_mode(presets::toxicity_outcome(0.40), 20.0)};
    const double truth[2] = {0.25, 0.40};
    Rng rng(seed);
    std::vector<std::int64_t> out;
    std::int64_t optimal = 0;
    for (std::int64_t patient = 1; patient <= checkpoints.back(); ++patient) {
        const auto d = next_assignment(Rule::RuleII, states, params, std::nullopt, 0.0);
        optimal += d.arm == 0;
        states[d.arm].record(rng.uniform() < truth[d.arm] ? 0 : 1);
        if (std::find(checkpoints.begin(), checkpoints.end(), patient) != checkpoints.end()) out.push_back(optimal);
    }
    return out;
}

void theorem31(Outcome& o)
{
    std::vector<double> pcs, se;
    std::ostringstream list;
    for (std::int64_t n : {80, 320, 1280, 5120}) {
        const auto oc = run_monte_carlo(presets::phase2_config(n, Rule::RuleI, 0.5), presets::trial2_alternative(), 10000);
        pcs.push_back(oc.pcs->mean);
        se.push_back(oc.pcs->se);
        list << Outcome::fmt(oc.pcs->mean) << ' ';
    }
    bool increasing = true;
    for (std::size_t k = 1; k < pcs.size(); ++k) {
        increasing = increasing && pcs[k] > pcs[k - 1] - std::hypot(se[k], se[k - 1]);
    }
    o.require("Rule I PCS increasing in N", increasing, "(" + list.str() + ")");

    std::int64_t locked = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) locked += lock_in_counts(0.5, {1000}, rep)[0];
    o.require("Rule II kappa=0.5 lock-in", locked == 0, "(" + std::to_string(locked) + " optimal assignments)");

    const auto counts = lock_in_counts(0.6, {1000, 10000, 100000}, 7);
    o.require("Rule II kappa=0.6 keeps sampling", counts[0] < counts[1] && counts[1] < counts[2],
              "(" + std::to_string(counts[0]) + ", " + std::to_string(counts[1]) + ", " + std::to_string(counts[2]) +
                  ")");
}

void entropy(Outcome& o)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> v(0.05, 3.0), unit(0.02, 0.98), k(0.5, 0.95);
    std::uniform_int_distribution<int> x(0, 25);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const ArmState s({v(rng), v(rng)}, {x(rng), x(rng)});
        const double gamma = unit(rng);
        const CriterionParams params(SimplexVector({gamma, 1 - gamma}), k(rng));
        const double a = s.count(0) + s.prior_pseudocounts()[0] + 1.0;
        const double b = s.count(1) + s.prior_pseudocounts()[1] + 1.0;
        const double w = std::pow(static_cast<double>(s.n()), params.kappa);
        worst = std::max(worst, std::abs(dirichlet_entropy(s) - oracles::beta_entropy(a, b)));
        worst = std::max(worst, std::abs(weighted_dirichlet_entropy(s, params) -
                                          oracles::beta_weighted_entropy(a, b, gamma * w, (1 - gamma) * w)));
    }
    o.require("closed forms match quadrature to 1e-6", worst <= 1e-6, "(max error " + Outcome::fmt(worst) + ")");

    std::uniform_int_distribution<int> total(0, 200);
    int positive = 0;
    double largest = -1e300;
    for (int i = 0; i < 10000; ++i) {
        const int n = total(rng);
        const int x0 = std::uniform_int_distribution<int>(0, n)(rng);
        const ArmState s({v(rng), v(rng)}, {x0, n - x0});
        const double gamma = unit(rng);
        const double gain = information_gain(s, CriterionParams(SimplexVector({gamma, 1 - gamma}), k(rng)));
        positive += gain > 1e-9;
        largest = std::max(largest, gain);
    }
    o.require("information_gain <= 1e-9", positive == 0,
              "(" + std::to_string(positive) + "/10000 above, max " + Outcome::fmt(largest) + ")");
}

template <class T>
bool same_bits(const T& a, const T& b)
{
    return std::memcmp(&a, &b, sizeof(T)) == 0;
}

bool same(const Estimate& a, const Estimate& b)
{
    return same_bits(a.mean, b.mean) && same_bits(a.sd, b.sd) && same_bits(a.se, b.se);
}

bool same(const std::optional<Estimate>& a, const std::optional<Estimate>& b)
{
    return a.has_value() == b.has_value() && (!a || same(*a, *b));
}

bool same(const OperatingCharacteristics& a, const OperatingCharacteristics& b)
{
    return same(a.pcs, b.pcs) && same(a.ens, b.ens) && same(a.p_star, b.p_star) &&
           same(a.mean_toxicities, b.mean_toxicities) && same(a.termination_rate, b.termination_rate) &&
           same(a.mean_n, b.mean_n) && same(a.rejection_rate, b.rejection_rate) && a.selection == b.selection &&
           a.allocation == b.allocation;
}

void determinism(Outcome& o)
{
    const auto phase1 = presets::phase1_config();
    const auto s2 = presets::phase1_scenarios()[1];
    auto trial2 = presets::phase2_config(presets::kTrial2Patients, Rule::RuleI, 0.5);
    int checked = 0, mismatched = 0;
    std::optional<OperatingCharacteristics> we, fr;
    std::optional<std::vector<double>> nullp, bench;
    for (unsigned p : {1u, 4u, 16u}) {
        const auto a = run_monte_carlo(phase1, s2, 4000, Design::WeightedEntropy, p);
        const auto b = run_monte_carlo(trial2, presets::trial2_alternative(), 4000, Design::FixedRandomization, p);
        const auto c = null_adjusted_pvalues(trial2, presets::trial2_null(), 4000, Design::WeightedEntropy, p);
        const auto d = run_benchmark(s2, phase1.gamma, 20, 4000, 3, 0, p).selection;
        if (!we) {
            we = a, fr = b, nullp = c, bench = d;
            continue;
        }
        checked += 4;
        mismatched += !same(*we, a) + !same(*fr, b) + (*nullp != c) + (*bench != d);
    }
    o.require("Monte Carlo, benchmark and null p-values identical for parallelism 1, 4, 16", mismatched == 0,
              "(" + std::to_string(mismatched) + "/" + std::to_string(checked) + " differ)");
}

void no_secondary(Outcome& o)
{
    // the browser front end would appear as a build target or a node tree
    int found = 0;
    const std::filesystem::path build = WEDESIGN_BUILD_DIR;
    for (const auto& e : std::filesystem::recursive_directory_iterator(build)) {
        const auto name = e.path().filename().string();
        if (name.find("conduct-ui") != std::string::npos || name == "node_modules") ++found;
    }
    o.require("no secondary component in the build tree", found == 0, "(" + build.string() + ")");
    o.note("this binary links only the core library");
}

struct Criterion {
    const char* name;
    void (*run)(Outcome&);
};

const Criterion kCriteria[] = {
    {"table2", table2},
    {"table1", table1},
    {"table3", table3},
    {"table4", table4},
    {"table5", table5},
    {"prior_calibration", prior_calibration},
    {"theorem_2_1", theorem21},
    {"theorem_2_3_ks", theorem23},
    {"theorem_3_1", theorem31},
    {"entropy_oracles", entropy},
    {"determinism", determinism},
    {"no_secondary_component", no_secondary},
};

}  // namespace

int main(int argc, char** argv)
{
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && !only.count(c.name)) continue;
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(std::string("error: ") + e.what(), false);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("%s %-22s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
