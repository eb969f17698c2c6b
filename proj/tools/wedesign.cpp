// wedesign: simulate, reproduce, calibrate, serve.
//
// Exit codes: 0 success, 1 parse error / missing file / unknown table,
// 2 invariant violation.

#include "wedesign/calibration.hpp"
#include "wedesign/conduct/server.hpp"
#include "wedesign/io.hpp"
#include "wedesign/presets.hpp"
#include "wedesign/reproduce.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace wedesign;
using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::vector<std::string> scenarios;
    std::int64_t reps = 10000;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned parallelism = 1;
    std::optional<double> kappa;
    std::string rule;
    bool experimental = false;
    std::string design = "WE";
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

Design parse_design(const std::string& text)
{
    if (text == "WE" || text == "we") return Design::WeightedEntropy;
    if (text == "FR" || text == "fr") return Design::FixedRandomization;
    throw io::ParseError("design must be 'WE' or 'FR'", "design");
}

// flags override the file
TrialConfig resolve_config(const Common& c, std::optional<TrialConfig> fallback = std::nullopt)
{
    if (c.config.empty() && !fallback) throw UsageError("--config is required");
    TrialConfig config = c.config.empty() ? std::move(*fallback) : io::load_config(c.config);
    if (c.kappa) config.kappa = *c.kappa;
    if (!c.rule.empty()) config.rule = io::parse_rule(c.rule);
    if (c.seed) config.seed = *c.seed;
    if (c.experimental) config.experimental_kappa = true;
    config.validate();
    return config;
}

std::vector<Scenario> resolve_scenarios(const Common& c)
{
    std::vector<Scenario> out;
    for (const auto& path : c.scenarios) out.push_back(io::load_scenario(path));
    return out;
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

void add_common(CLI::App* app, Common& c, bool scenarios)
{
    app->add_option("--config", c.config, "Trial config JSON")->check(CLI::ExistingFile);
    if (scenarios) app->add_option("--scenario", c.scenarios, "Scenario JSON (repeatable)")->check(CLI::ExistingFile);
    app->add_option("--reps", c.reps, "Monte Carlo replications")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "Base seed");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--parallelism", c.parallelism, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--kappa", c.kappa, "Penalty exponent");
    app->add_option("--rule", c.rule, "Assignment rule: I or II");
    app->add_flag("--experimental-kappa-below-half", c.experimental, "Allow kappa in (0, 0.5)");
}

int cmd_simulate(const Common& c)
{
    if (c.config.empty()) throw UsageError("simulate needs --config");
    if (c.scenarios.empty()) throw UsageError("simulate needs at least one --scenario");
    const auto config = resolve_config(c);
    const auto design = parse_design(c.design);
    std::vector<io::ResultRow> rows;
    for (const auto& s : resolve_scenarios(c)) {
        rows.push_back(io::ResultRow{.design = io::design_name(design),
                                     .scenario = s.name,
                                     .kappa = config.kappa,
                                     .oc = run_monte_carlo(config, s, c.reps, design, c.parallelism)});
    }
    std::ostringstream csv;
    io::write_results_csv(csv, rows);
    std::cout << csv.str();
    if (!c.out.empty()) io::write_results(c.out, config.name.empty() ? "results" : config.name, rows);
    return 0;
}

int cmd_reproduce(const Common& c, const std::string& table, std::int64_t cutoff_reps, const std::string& reference)
{
    if (!is_table_id(table)) throw io::ParseError("unknown table id '" + table + "'", "table");
    ReproduceOptions options{.replications = c.reps,
                             .cutoff_replications = cutoff_reps > 0 ? cutoff_reps : c.reps,
                             .seed = c.seed,
                             .parallelism = c.parallelism,
                             .reference_file = reference};
    const auto rows = reproduce(table, options);
    std::ostringstream csv;
    write_comparison_csv(csv, rows);
    std::cout << csv.str();
    if (!c.out.empty()) {
        write_file(fs::path(c.out) / (table + ".csv"), csv.str());
        write_file(fs::path(c.out) / (table + ".json"), comparison_json(rows).dump(2) + "\n");
    }
    return 0;
}

int cmd_calibrate_prior(const Common& c, const std::vector<double>& betas, const std::vector<double>& steps)
{
    const auto config = resolve_config(c, presets::phase1_config());
    auto scenarios = resolve_scenarios(c);
    if (scenarios.empty()) scenarios = presets::prior_calibration_scenarios();
    const PriorGrid grid{.beta_values = betas, .step_values = steps, .base_mode = config.gamma[config.toxicity_outcome]};
    const auto result = prior_grid_search(grid, scenarios, config, c.reps, c.parallelism);

    std::ostringstream csv;
    write_prior_heatmap_csv(csv, result);
    std::cout << csv.str();

    json cells = json::array();
    for (const auto& cell : result.cells) {
        json pcs = json::array();
        for (const auto& e : cell.pcs) pcs.push_back(e.mean);
        cells.push_back({{"beta", cell.beta},
                         {"step", cell.step},
                         {"valid", cell.valid},
                         {"pcs", pcs},
                         {"geometric_mean", cell.geometric_mean},
                         {"geometric_mean_se", cell.geometric_mean_se}});
    }
    auto cell_ref = [&](const std::optional<std::size_t>& i) {
        return i ? json{{"beta", result.cells[*i].beta}, {"step", result.cells[*i].step}} : json(nullptr);
    };
    json plateau = json::array();
    for (auto i : result.plateau) plateau.push_back(cell_ref(i));
    const json summary{{"cells", cells}, {"argmax", cell_ref(result.argmax)}, {"plateau", plateau},
                       {"selected", cell_ref(result.selected)}};
    std::cerr << "argmax " << summary["argmax"].dump() << ", selected " << summary["selected"].dump() << '\n';
    if (!c.out.empty()) {
        write_file(fs::path(c.out) / "prior_heatmap.csv", csv.str());
        write_file(fs::path(c.out) / "prior_heatmap.json", summary.dump(2) + "\n");
    }
    return 0;
}

int cmd_calibrate_safety(const Common& c, const std::vector<double>& gammas, const std::vector<double>& rs)
{
    const auto config = resolve_config(c, presets::phase1_config());
    auto scenarios = resolve_scenarios(c);
    if (scenarios.empty()) {
        const auto all = presets::phase1_scenarios();
        scenarios = {all[0], all[5]};
    }
    if (scenarios.size() != 2) throw UsageError("calibrate-safety takes two scenarios: linear, then unsafe");
    const auto grid = safety_grid_search(gammas, rs, scenarios[0], scenarios[1], config, c.reps, c.parallelism);

    std::ostringstream csv;
    write_safety_heatmap_csv(csv, grid);
    std::cout << csv.str();
    if (!c.out.empty()) {
        json cells = json::array();
        for (const auto& cell : grid.cells) {
            cells.push_back({{"gamma_star", cell.gamma_star},
                             {"r", cell.r},
                             {"termination", cell.termination.mean},
                             {"termination_se", cell.termination.se},
                             {"pcs", cell.pcs.mean},
                             {"pcs_se", cell.pcs.se}});
        }
        write_file(fs::path(c.out) / "safety_heatmap.csv", csv.str());
        write_file(fs::path(c.out) / "safety_heatmap.json", cells.dump(2) + "\n");
    }
    return 0;
}

int cmd_calibrate_cutoff(const Common& c, std::optional<double> alpha)
{
    if (c.config.empty()) throw UsageError("calibrate-cutoff needs --config");
    if (c.scenarios.size() != 1) throw UsageError("calibrate-cutoff needs exactly one (null) --scenario");
    auto config = resolve_config(c);
    if (!config.testing) config.testing = HypothesisTestConfig{};
    if (alpha) config.testing->alpha_target = *alpha;
    config.testing->validate();
    const auto null = resolve_scenarios(c).front();
    const auto design = parse_design(c.design);
    const double cutoff = calibrate_cutoff(config, null, c.reps, design, c.parallelism);
    const json out{{"design", io::design_name(design)},
                   {"scenario", null.name},
                   {"alpha_target", config.testing->alpha_target},
                   {"replications", c.reps},
                   {"cutoff", cutoff}};
    std::cout << out.dump(2) << '\n';
    if (!c.out.empty()) write_file(fs::path(c.out) / "cutoff.json", out.dump(2) + "\n");
    return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& data_dir, std::string token)
{
    if (token.empty()) {
        if (const char* env = std::getenv("WEDESIGN_TOKEN")) token = env;
    }
    conduct::SessionStore store(data_dir);
    std::cerr << "serving " << store.size() << " session(s) on " << host << ':' << port << '\n';
    if (!conduct::serve(host, port, store, {.token = token})) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted entropy sequential design: simulation, reproduction, calibration, conduct"};
    app.require_subcommand(1);

    Common common;
    auto* simulate = app.add_subcommand("simulate", "Run scenarios and write CSV/JSON results");
    add_common(simulate, common, true);
    simulate->add_option("--design", common.design, "WE or FR");

    std::string table;
    std::int64_t cutoff_reps = 0;
    std::string reference;
    auto* repro = app.add_subcommand("reproduce", "Re-simulate a published table against reference values");
    repro->add_option("table", table, "table1..table5 or figure1")->required();
    add_common(repro, common, false);
    repro->add_option("--cutoff-reps", cutoff_reps, "Null replications for cutoff calibration (default --reps)");
    repro->add_option("--reference", reference, "Reference values file")->check(CLI::ExistingFile);

    std::vector<double> betas{0.5, 1.0, 2.0, 3.0, 5.0};
    std::vector<double> steps{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    auto* cal_prior = app.add_subcommand("calibrate-prior", "Grid search over the prior (beta x step)");
    add_common(cal_prior, common, true);
    cal_prior->add_option("--beta", betas, "Prior mass grid")->delimiter(',');
    cal_prior->add_option("--step", steps, "Prior mode step grid")->delimiter(',');

    std::vector<double> gammas{0.55, 0.50, 0.45, 0.40, 0.35, 0.30};
    std::vector<double> rs{0.010, 0.015, 0.020, 0.025, 0.030, 0.035, 0.040, 0.045};
    auto* cal_safety = app.add_subcommand("calibrate-safety", "Grid search over the safety constraint (gamma* x r)");
    add_common(cal_safety, common, true);
    cal_safety->add_option("--gamma-star", gammas, "gamma* grid")->delimiter(',');
    cal_safety->add_option("--r", rs, "r grid")->delimiter(',');

    std::optional<double> alpha;
    auto* cal_cutoff = app.add_subcommand("calibrate-cutoff", "Calibrate the test cutoff under a null scenario");
    add_common(cal_cutoff, common, true);
    cal_cutoff->add_option("--design", common.design, "WE or FR");
    cal_cutoff->add_option("--alpha", alpha, "Target family-wise error");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "conduct-data";
    std::string token;
    auto* serve = app.add_subcommand("serve", "Run the trial conduct HTTP service");
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--data-dir", data_dir, "Event log directory");
    serve->add_option("--token", token, "Required X-Api-Token value (default $WEDESIGN_TOKEN)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(common);
        if (*repro) return cmd_reproduce(common, table, cutoff_reps, reference);
        if (*cal_prior) return cmd_calibrate_prior(common, betas, steps);
        if (*cal_safety) return cmd_calibrate_safety(common, gammas, rs);
        if (*cal_cutoff) return cmd_calibrate_cutoff(common, alpha);
        if (*serve) return cmd_serve(host, port, data_dir, token);
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
