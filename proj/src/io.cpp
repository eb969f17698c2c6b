#include "wedesign/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace wedesign::io {

using nlohmann::json;

namespace {

std::vector<double> to_vector(const SimplexVector& v)
{
    return {v.components().begin(), v.components().end()};
}

const json& require(const json& j, const char* key)
{
    if (!j.is_object()) throw ParseError("expected a JSON object", key);
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", key);
    return *it;
}

template <typename T>
T get_as(const json& j, const std::string& field)
{
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ParseError("field '" + field + "': " + e.what(), field);
    }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback)
{
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return get_as<T>(*it, key);
}

SimplexVector simplex_field(const json& j, const std::string& field)
{
    auto values = get_as<std::vector<double>>(j, field);
    try {
        return SimplexVector(std::move(values));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(field + ": " + e.what());
    }
}

SafetyClock parse_clock(const std::string& text)
{
    if (text == "per_arm") return SafetyClock::PerArm;
    if (text == "trial") return SafetyClock::TrialWide;
    throw ParseError("safety.clock must be 'per_arm' or 'trial'", "safety.clock");
}

}  // namespace

Rule parse_rule(const std::string& text)
{
    if (text == "I" || text == "1" || text == "rule_i" || text == "randomize") return Rule::RuleI;
    if (text == "II" || text == "2" || text == "rule_ii" || text == "best") return Rule::RuleII;
    throw ParseError("rule must be 'I' or 'II', got '" + text + "'", "rule");
}

std::string rule_name(Rule rule)
{
    return rule == Rule::RuleI ? "I" : "II";
}

std::string design_name(Design design)
{
    return design == Design::WeightedEntropy ? "WE" : "FR";
}

json to_json(const SafetyConfig& s)
{
    return json{{"gamma_star", s.gamma_star},
                {"r", s.r},
                {"theta_final", s.theta_final},
                {"toxicity_outcome", s.toxicity_outcome},
                {"clock", s.clock == SafetyClock::PerArm ? "per_arm" : "trial"}};
}

json to_json(const TrialConfig& c)
{
    json priors = json::array();
    for (const auto& p : c.priors) priors.push_back({{"mode", to_vector(p.mode)}, {"beta", p.beta}});
    json j{{"name", c.name},
           {"gamma", to_vector(c.gamma)},
           {"kappa", c.kappa},
           {"rule", rule_name(c.rule)},
           {"priors", priors},
           {"max_patients", c.max_patients},
           {"success_outcome", c.success_outcome},
           {"toxicity_outcome", c.toxicity_outcome},
           {"seed", c.seed},
           {"experimental_kappa_below_half", c.experimental_kappa}};
    j["safety"] = c.safety ? to_json(*c.safety) : json(nullptr);
    if (c.testing) {
        j["testing"] = {{"control_index", c.testing->control_index},
                        {"alpha_target", c.testing->alpha_target},
                        {"cutoff", c.testing->cutoff},
                        {"correction", "bonferroni"}};
    } else {
        j["testing"] = nullptr;
    }
    return j;
}

json to_json(const Scenario& s)
{
    json probabilities = json::array();
    for (const auto& p : s.true_probabilities) probabilities.push_back(to_vector(p));
    json j{{"name", s.name}, {"probabilities", probabilities}, {"no_safe_arm", s.no_safe_arm}};
    j["target_index"] = s.target_index ? json(*s.target_index) : json(nullptr);
    return j;
}

SafetyConfig safety_from_json(const json& j)
{
    if (!j.is_object()) throw ParseError("safety must be an object", "safety");
    SafetyConfig s;
    s.gamma_star = field_or(j, "gamma_star", s.gamma_star);
    s.r = field_or(j, "r", s.r);
    s.theta_final = field_or(j, "theta_final", s.theta_final);
    s.toxicity_outcome = field_or<std::size_t>(j, "toxicity_outcome", s.toxicity_outcome);
    s.clock = parse_clock(field_or<std::string>(j, "clock", "trial"));
    s.validate();
    return s;
}

TrialConfig config_from_json(const json& j)
{
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    TrialConfig c{.gamma = simplex_field(require(j, "gamma"), "gamma")};
    c.name = field_or<std::string>(j, "name", "");
    c.kappa = field_or(j, "kappa", 0.5);
    c.rule = parse_rule(field_or<std::string>(j, "rule", "II"));
    c.max_patients = get_as<std::int64_t>(require(j, "max_patients"), "max_patients");
    c.success_outcome = field_or<std::size_t>(j, "success_outcome", 1);
    c.toxicity_outcome = field_or<std::size_t>(j, "toxicity_outcome", 0);
    c.seed = field_or<std::uint64_t>(j, "seed", 0);
    c.experimental_kappa = field_or(j, "experimental_kappa_below_half", false);

    const json& priors = require(j, "priors");
    if (!priors.is_array()) throw ParseError("priors must be an array", "priors");
    for (std::size_t k = 0; k < priors.size(); ++k) {
        const std::string field = "priors[" + std::to_string(k) + "]";
        const json& p = priors[k];
        if (!p.is_object()) throw ParseError(field + " must be an object", field);
        const auto mode_it = p.find("mode");
        if (mode_it == p.end()) throw ParseError(field + ": missing field 'mode'", field + ".mode");
        ArmPrior prior{.mode = simplex_field(*mode_it, field + ".mode"),
                       .beta = field_or(p, "beta", 1.0)};
        c.priors.push_back(std::move(prior));
    }

    if (const auto it = j.find("safety"); it != j.end() && !it->is_null()) c.safety = safety_from_json(*it);
    if (const auto it = j.find("testing"); it != j.end() && !it->is_null()) {
        const json& t = *it;
        if (!t.is_object()) throw ParseError("testing must be an object", "testing");
        const auto correction = field_or<std::string>(t, "correction", "bonferroni");
        if (correction != "bonferroni") {
            throw ParseError("testing.correction: only 'bonferroni' is supported", "testing.correction");
        }
        c.testing = HypothesisTestConfig{
            .control_index = field_or<std::size_t>(t, "control_index", 0),
            .alpha_target = field_or(t, "alpha_target", 0.05),
            .cutoff = field_or(t, "cutoff", 0.05),
        };
    }
    c.validate();
    return c;
}

Scenario scenario_from_json(const json& j)
{
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    Scenario s;
    s.name = field_or<std::string>(j, "name", "");
    const json& probabilities = require(j, "probabilities");
    if (!probabilities.is_array() || probabilities.empty()) {
        throw ParseError("probabilities must be a non-empty array", "probabilities");
    }
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        s.true_probabilities.push_back(
            simplex_field(probabilities[k], "probabilities[" + std::to_string(k) + "]"));
    }
    s.no_safe_arm = field_or(j, "no_safe_arm", false);
    if (const auto it = j.find("target_index"); it != j.end() && !it->is_null()) {
        s.target_index = get_as<std::size_t>(*it, "target_index");
    }
    return s;
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

TrialConfig load_config(const std::filesystem::path& path)
{
    return config_from_json(read_json_file(path));
}

Scenario load_scenario(const std::filesystem::path& path)
{
    return scenario_from_json(read_json_file(path));
}

std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

namespace {

std::string number(double x)
{
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

struct Metric {
    const char* name;
    std::optional<Estimate> value;
};

std::vector<Metric> metrics(const OperatingCharacteristics& oc)
{
    return {{"pcs", oc.pcs},
            {"ens", oc.ens},
            {"p_star", oc.p_star},
            {"tox", oc.mean_toxicities},
            {"term", oc.termination_rate},
            {"mean_n", oc.mean_n},
            {"power", oc.rejection_rate}};
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << "design,scenario,kappa,replications";
    for (const auto& m : metrics(OperatingCharacteristics{})) {
        out << ',' << m.name << ',' << m.name << "_se," << m.name << "_sd";
    }
    out << "\r\n";
    for (const auto& row : rows) {
        out << csv_field(row.design) << ',' << csv_field(row.scenario) << ',' << number(row.kappa) << ','
            << row.oc.replications;
        for (const auto& m : metrics(row.oc)) {
            if (m.value) {
                out << ',' << number(m.value->mean) << ',' << number(m.value->se) << ','
                    << number(m.value->sd);
            } else {
                out << ",,,";
            }
        }
        out << "\r\n";
    }
}

json results_json(const std::vector<ResultRow>& rows)
{
    json out = json::array();
    for (const auto& row : rows) {
        json r{{"design", row.design},
               {"scenario", row.scenario},
               {"kappa", row.kappa},
               {"replications", row.oc.replications},
               {"selection", row.oc.selection},
               {"allocation", row.oc.allocation}};
        for (const auto& m : metrics(row.oc)) {
            if (m.value) {
                r[m.name] = {{"mean", m.value->mean}, {"se", m.value->se}, {"sd", m.value->sd}};
            } else {
                r[m.name] = nullptr;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_results(const std::filesystem::path& dir, const std::string& stem,
                   const std::vector<ResultRow>& rows)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
        write_results_csv(csv, rows);
    }
    std::ofstream js(dir / (stem + ".json"));
    if (!js) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
    js << results_json(rows).dump(2) << '\n';
}

}  // namespace wedesign::io
