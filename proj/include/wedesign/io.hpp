#pragma once

// JSON configs and scenarios, CSV/JSON result tables.

#include "wedesign/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wedesign::io {

/// Malformed input: unreadable file, bad JSON, wrong field types.
/// Field-level invariant violations are std::invalid_argument instead.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::string field = {})
        : std::runtime_error(message), field_(std::move(field))
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

nlohmann::json to_json(const TrialConfig& config);
nlohmann::json to_json(const Scenario& scenario);
nlohmann::json to_json(const SafetyConfig& safety);

/// Throws ParseError on structural problems and std::invalid_argument when
/// the result fails TrialConfig::validate().
TrialConfig config_from_json(const nlohmann::json& j);
Scenario scenario_from_json(const nlohmann::json& j);
SafetyConfig safety_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
TrialConfig load_config(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

Rule parse_rule(const std::string& text);
std::string rule_name(Rule rule);
std::string design_name(Design design);

/// One row of a results table.
struct ResultRow {
    std::string design;
    std::string scenario;
    double kappa = 0.5;
    OperatingCharacteristics oc;
};

/// RFC 4180 field quoting.
std::string csv_field(const std::string& text);

/// Columns: design, scenario, kappa, replications, then
/// pcs, ens, p_star, tox, term, mean_n, power each followed by _se and _sd.
/// Missing metrics are empty cells.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
nlohmann::json results_json(const std::vector<ResultRow>& rows);

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, creating it.
void write_results(const std::filesystem::path& dir, const std::string& stem,
                   const std::vector<ResultRow>& rows);

}  // namespace wedesign::io
