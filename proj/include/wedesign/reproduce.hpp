#pragma once

// Re-simulates the published operating-characteristic tables and lines them
// up against the reference values in data/reference_values.jsonc.

#include "wedesign/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wedesign {

struct ReproduceOptions {
    std::int64_t replications = 10000;
    /// Null replications used to calibrate each design's cutoff.
    std::int64_t cutoff_replications = 10000;
    /// Overrides the preset seeds when set.
    std::optional<std::uint64_t> seed;
    unsigned parallelism = 1;
    std::filesystem::path reference_file;
};

struct ComparisonRow {
    std::string table;
    std::string design;
    std::optional<double> kappa;
    std::string scenario;
    /// Extra grid coordinates, e.g. "gamma_star=0.45;r=0.035".
    std::string setting;
    std::string metric;
    std::optional<double> reference;
    std::optional<double> simulated;
    /// Monte Carlo standard error of `simulated`, when it has one.
    std::optional<double> simulated_se;
    std::optional<double> tolerance;
    /// Comparator designs that are quoted, not simulated.
    bool external = false;

    std::optional<double> difference() const;
    /// nullopt when either side is missing.
    std::optional<bool> within_tolerance() const;
};

/// data/reference_values.jsonc next to the sources, or under
/// $WEDESIGN_DATA_DIR when that is set.
std::filesystem::path default_reference_file();

/// Parsed reference file (comments allowed).
nlohmann::json load_reference_values(const std::filesystem::path& path);

/// Table ids: table1 .. table5, figure1. Throws std::invalid_argument for
/// anything else.
std::vector<ComparisonRow> reproduce(const std::string& table_id, const ReproduceOptions& options);

bool is_table_id(const std::string& id);
const std::vector<std::string>& table_ids();

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows);

/// Phase II helpers shared with the acceptance suite.
struct PhaseTwoRun {
    double cutoff = 0.0;
    OperatingCharacteristics null_oc;
    OperatingCharacteristics alternative_oc;
};

/// Calibrates the cutoff under `null`, then simulates null and alternative
/// with it.
PhaseTwoRun run_phase_two(TrialConfig config, const Scenario& null, const Scenario& alternative,
                          Design design, std::int64_t replications, std::int64_t cutoff_replications,
                          unsigned parallelism);

}  // namespace wedesign
