#include "wedesign/reproduce.hpp"

#include "wedesign/calibration.hpp"
#include "wedesign/io.hpp"
#include "wedesign/presets.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#ifndef WEDESIGN_DATA_DIR
#define WEDESIGN_DATA_DIR "data"
#endif

namespace wedesign {

using nlohmann::json;

std::optional<double> ComparisonRow::difference() const
{
    if (!reference || !simulated) return std::nullopt;
    return std::abs(*simulated - *reference);
}

std::optional<bool> ComparisonRow::within_tolerance() const
{
    const auto diff = difference();
    if (!diff || !tolerance) return std::nullopt;
    return *diff <= *tolerance + 1e-12;
}

std::filesystem::path default_reference_file()
{
    if (const char* dir = std::getenv("WEDESIGN_DATA_DIR"); dir && *dir) {
        return std::filesystem::path(dir) / "reference_values.jsonc";
    }
    return std::filesystem::path(WEDESIGN_DATA_DIR) / "reference_values.jsonc";
}

json load_reference_values(const std::filesystem::path& path)
{
    return io::read_json_file(path);
}

const std::vector<std::string>& table_ids()
{
    static const std::vector<std::string> ids{"table1", "table2", "table3", "table4", "table5", "figure1"};
    return ids;
}

bool is_table_id(const std::string& id)
{
    for (const auto& t : table_ids()) {
        if (t == id) return true;
    }
    return false;
}

PhaseTwoRun run_phase_two(TrialConfig config, const Scenario& null, const Scenario& alternative,
                          Design design, std::int64_t replications, std::int64_t cutoff_replications,
                          unsigned parallelism)
{
    if (!config.testing) config.testing = HypothesisTestConfig{};
    PhaseTwoRun out;
    out.cutoff = calibrate_cutoff(config, null, cutoff_replications, design, parallelism);
    config.testing->cutoff = out.cutoff;
    out.null_oc = run_monte_carlo(config, null, replications, design, parallelism);
    out.alternative_oc = run_monte_carlo(config, alternative, replications, design, parallelism);
    return out;
}

namespace {

bool same_kappa(const std::optional<double>& a, const std::optional<double>& b)
{
    if (a.has_value() != b.has_value()) return false;
    return !a || std::abs(*a - *b) < 1e-9;
}

std::optional<double> optional_number(const json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

std::string metric_family(const std::string& metric)
{
    return metric.rfind("selection_", 0) == 0 ? "selection" : metric;
}

std::optional<double> tolerance_for(const json& entry, const json& reference)
{
    if (auto t = optional_number(entry, "tolerance")) return t;
    const auto& defaults = reference.at("default_tolerance");
    const auto family = metric_family(entry.value("metric", std::string{}));
    if (defaults.contains(family)) return defaults.at(family).get<double>();
    return std::nullopt;
}

ComparisonRow row_from_entry(const json& entry, const json& reference)
{
    ComparisonRow row;
    row.table = entry.at("table").get<std::string>();
    row.design = entry.at("design").get<std::string>();
    row.kappa = optional_number(entry, "kappa");
    row.scenario = entry.value("scenario", std::string{});
    row.metric = entry.value("metric", std::string{});
    row.reference = optional_number(entry, "value");
    row.external = entry.value("external", false);
    row.tolerance = tolerance_for(entry, reference);
    return row;
}

std::vector<json> entries_for(const json& reference, const std::string& table)
{
    std::vector<json> out;
    for (const auto& e : reference.at("entries")) {
        if (e.at("table").get<std::string>() == table) out.push_back(e);
    }
    return out;
}

struct PhaseTwoDesign {
    std::string name;
    std::optional<double> kappa;
    Design design;
    Rule rule;
};

const std::vector<PhaseTwoDesign>& phase_two_designs()
{
    static const std::vector<PhaseTwoDesign> designs{
        {"FR", std::nullopt, Design::FixedRandomization, Rule::RuleII},
        {"WE_I", 0.5, Design::WeightedEntropy, Rule::RuleI},
        {"WE_II", 0.55, Design::WeightedEntropy, Rule::RuleII},
        {"WE_II", 0.65, Design::WeightedEntropy, Rule::RuleII},
    };
    return designs;
}

std::vector<ComparisonRow> reproduce_phase_two(const std::string& table, const ReproduceOptions& options,
                                               const json& reference)
{
    const bool first = table == "table1";
    const std::int64_t patients = first ? presets::kTrial1Patients : presets::kTrial2Patients;
    const Scenario null = first ? presets::trial1_null() : presets::trial2_null();
    const Scenario alt = first ? presets::trial1_alternative() : presets::trial2_alternative();

    struct Simulated {
        const PhaseTwoDesign* design;
        PhaseTwoRun run;
    };
    std::vector<Simulated> runs;
    for (const auto& d : phase_two_designs()) {
        auto config = presets::phase2_config(patients, d.rule, d.kappa.value_or(0.5));
        if (options.seed) config.seed = *options.seed;
        runs.push_back({&d, run_phase_two(config, null, alt, d.design, options.replications,
                                          options.cutoff_replications, options.parallelism)});
    }

    std::vector<ComparisonRow> rows;
    for (const auto& entry : entries_for(reference, table)) {
        auto row = row_from_entry(entry, reference);
        for (const auto& r : runs) {
            if (r.design->name != row.design || !same_kappa(r.design->kappa, row.kappa)) continue;
            const bool is_null = row.scenario == null.name;
            const auto& oc = is_null ? r.run.null_oc : r.run.alternative_oc;
            std::optional<Estimate> e;
            if (row.metric == "alpha" || row.metric == "power") e = oc.rejection_rate;
            if (row.metric == "p_star") e = oc.p_star;
            if (row.metric == "ens") e = oc.ens;
            if (e) {
                row.simulated = e->mean;
                row.simulated_se = e->se;
            }
            std::ostringstream setting;
            setting << "cutoff=" << std::setprecision(6) << r.run.cutoff;
            row.setting = setting.str();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ComparisonRow> reproduce_phase_one(const std::string& table, const ReproduceOptions& options,
                                               const json& reference)
{
    auto config = presets::phase1_config();
    if (options.seed) config.seed = *options.seed;
    const auto scenarios = presets::phase1_scenarios();
    const std::size_t begin = table == "table3" ? 0 : 3;

    struct Simulated {
        std::string scenario;
        OperatingCharacteristics we;
        BenchmarkSummary benchmark;
    };
    std::vector<Simulated> sims;
    for (std::size_t k = begin; k < begin + 3; ++k) {
        const auto& s = scenarios[k];
        sims.push_back({s.name,
                        run_monte_carlo(config, s, options.replications, Design::WeightedEntropy,
                                        options.parallelism),
                        run_benchmark(s, config.gamma, config.max_patients, options.replications,
                                      replication_seed(config.seed, 0x6265'6e63'6800ULL),
                                      config.toxicity_outcome, options.parallelism)});
    }

    const double reps = static_cast<double>(options.replications);
    auto proportion = [&](double p) {
        // percent, with the binomial standard error
        return std::pair{100.0 * p, 100.0 * std::sqrt(p * (1.0 - p) / reps)};
    };

    std::vector<ComparisonRow> rows;
    for (const auto& entry : entries_for(reference, table)) {
        auto row = row_from_entry(entry, reference);
        for (const auto& sim : sims) {
            if (sim.scenario != row.scenario || row.external) continue;
            std::optional<std::pair<double, double>> value;
            if (row.metric.rfind("selection_d", 0) == 0) {
                const auto arm = static_cast<std::size_t>(std::stoul(row.metric.substr(11))) - 1;
                const auto& selection = row.design == "Optimal" ? sim.benchmark.selection : sim.we.selection;
                if (arm < selection.size()) value = proportion(selection[arm]);
            } else if (row.design == "WE") {
                if (row.metric == "term") {
                    value = std::pair{100.0 * sim.we.termination_rate.mean, 100.0 * sim.we.termination_rate.se};
                }
                if (row.metric == "tox") value = std::pair{sim.we.mean_toxicities.mean, sim.we.mean_toxicities.se};
                if (row.metric == "mean_n") value = std::pair{sim.we.mean_n.mean, sim.we.mean_n.se};
            }
            if (value) {
                row.simulated = value->first;
                row.simulated_se = value->second;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string grid_setting(double gamma_star, double r)
{
    std::ostringstream s;
    s << "gamma_star=" << gamma_star << ";r=" << r;
    return s.str();
}

std::vector<ComparisonRow> reproduce_table5(const ReproduceOptions& options, const json& reference)
{
    auto config = presets::phase1_config();
    if (options.seed) config.seed = *options.seed;
    const auto scenarios = presets::phase1_scenarios();
    const auto& linear = scenarios[0];
    const auto& unsafe = scenarios[5];

    std::vector<double> gammas;
    std::vector<double> rs;
    const auto entries = entries_for(reference, "table5");
    for (const auto& e : entries) {
        const double g = e.at("gamma_star").get<double>();
        const double r = e.at("r").get<double>();
        if (std::find(gammas.begin(), gammas.end(), g) == gammas.end()) gammas.push_back(g);
        if (std::find(rs.begin(), rs.end(), r) == rs.end()) rs.push_back(r);
    }
    const auto grid =
        safety_grid_search(gammas, rs, linear, unsafe, config, options.replications, options.parallelism);

    std::vector<ComparisonRow> rows;
    for (const auto& e : entries) {
        const double g = e.at("gamma_star").get<double>();
        const double r = e.at("r").get<double>();
        const SafetyCell* cell = nullptr;
        for (const auto& c : grid.cells) {
            if (c.gamma_star == g && c.r == r) cell = &c;
        }
        const auto tolerance = optional_number(e, "tolerance");
        const auto& defaults = reference.at("default_tolerance");
        for (const char* metric : {"termination", "pcs"}) {
            ComparisonRow row;
            row.table = "table5";
            row.design = "WE";
            row.kappa = 0.5;
            row.scenario = std::string(metric) == "termination" ? unsafe.name : linear.name;
            row.setting = grid_setting(g, r);
            row.metric = metric;
            row.reference = e.at(metric).get<double>();
            row.tolerance = tolerance ? tolerance : std::optional<double>(defaults.at(metric).get<double>());
            const Estimate& est = std::string(metric) == "termination" ? cell->termination : cell->pcs;
            row.simulated = 100.0 * est.mean;
            row.simulated_se = 100.0 * est.se;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<ComparisonRow> reproduce_figure1(const ReproduceOptions& options)
{
    const std::vector<double> kappas{0.5, 0.55, 0.6, 0.65, 0.7, 0.75};
    std::vector<ComparisonRow> rows;
    for (int trial = 1; trial <= 2; ++trial) {
        const std::int64_t patients = trial == 1 ? presets::kTrial1Patients : presets::kTrial2Patients;
        const Scenario null = trial == 1 ? presets::trial1_null() : presets::trial2_null();
        const Scenario alt = trial == 1 ? presets::trial1_alternative() : presets::trial2_alternative();
        auto config = presets::phase2_config(patients, Rule::RuleII, 0.5);
        if (options.seed) config.seed = *options.seed;
        // one cutoff for the whole sweep, calibrated on equal randomisation
        const double cutoff = calibrate_cutoff(config, null, options.cutoff_replications,
                                               Design::FixedRandomization, options.parallelism);
        const auto sweep = kappa_sweep(config, alt, kappas, cutoff, options.replications, options.parallelism);
        for (const auto& point : sweep) {
            for (const char* metric : {"ens", "power"}) {
                ComparisonRow row;
                row.table = "figure1";
                row.design = "WE_II";
                row.kappa = point.kappa;
                row.scenario = alt.name;
                std::ostringstream setting;
                setting << "cutoff=" << std::setprecision(6) << cutoff;
                row.setting = setting.str();
                row.metric = metric;
                const auto& est = std::string(metric) == "ens" ? point.ens : point.power;
                row.simulated = est.mean;
                row.simulated_se = est.se;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string format(const std::optional<double>& x)
{
    if (!x) return {};
    std::ostringstream s;
    s << std::setprecision(10) << *x;
    return s.str();
}

}  // namespace

std::vector<ComparisonRow> reproduce(const std::string& table_id, const ReproduceOptions& options)
{
    if (!is_table_id(table_id)) throw std::invalid_argument("unknown table id '" + table_id + "'");
    if (options.replications < 1) throw std::invalid_argument("replications must be at least 1");
    if (table_id == "figure1") return reproduce_figure1(options);

    const auto path = options.reference_file.empty() ? default_reference_file() : options.reference_file;
    const json reference = load_reference_values(path);
    if (table_id == "table1" || table_id == "table2") return reproduce_phase_two(table_id, options, reference);
    if (table_id == "table3" || table_id == "table4") return reproduce_phase_one(table_id, options, reference);
    return reproduce_table5(options, reference);
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows)
{
    out << "table,design,kappa,scenario,setting,metric,reference,simulated,simulated_se,abs_diff,"
           "tolerance,within_tolerance,external\r\n";
    for (const auto& r : rows) {
        const auto within = r.within_tolerance();
        out << io::csv_field(r.table) << ',' << io::csv_field(r.design) << ',' << format(r.kappa) << ','
            << io::csv_field(r.scenario) << ',' << io::csv_field(r.setting) << ',' << io::csv_field(r.metric)
            << ',' << format(r.reference) << ',' << format(r.simulated) << ',' << format(r.simulated_se)
            << ',' << format(r.difference()) << ',' << format(r.tolerance) << ','
            << (within ? (*within ? "true" : "false") : "") << ',' << (r.external ? "true" : "false")
            << "\r\n";
    }
}

json comparison_json(const std::vector<ComparisonRow>& rows)
{
    auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
    json out = json::array();
    for (const auto& r : rows) {
        const auto within = r.within_tolerance();
        out.push_back({{"table", r.table},
                       {"design", r.design},
                       {"kappa", opt(r.kappa)},
                       {"scenario", r.scenario},
                       {"setting", r.setting},
                       {"metric", r.metric},
                       {"reference", opt(r.reference)},
                       {"simulated", opt(r.simulated)},
                       {"simulated_se", opt(r.simulated_se)},
                       {"abs_diff", opt(r.difference())},
                       {"tolerance", opt(r.tolerance)},
                       {"within_tolerance", within ? json(*within) : json(nullptr)},
                       {"external", r.external}});
    }
    return out;
}

}  // namespace wedesign
