#include "wedesign/calibration.hpp"
#include "wedesign/io.hpp"
#include "wedesign/presets.hpp"
#include "wedesign/reproduce.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace wedesign;

namespace {

// Configs and scenarios cross the boundary as JSON text; the Python side
// turns them into dicts.
std::string dump(const nlohmann::json& j)
{
    return j.dump();
}

TrialConfig config_from(const std::string& text)
{
    return io::config_from_json(nlohmann::json::parse(text));
}

Scenario scenario_from(const std::string& text)
{
    return io::scenario_from_json(nlohmann::json::parse(text));
}

py::dict estimate_dict(const Estimate& e)
{
    py::dict d;
    d["mean"] = e.mean;
    d["sd"] = e.sd;
    d["se"] = e.se;
    return d;
}

py::object optional_estimate(const std::optional<Estimate>& e)
{
    return e ? py::object(estimate_dict(*e)) : py::none();
}

py::dict oc_dict(const OperatingCharacteristics& oc)
{
    py::dict d;
    d["replications"] = oc.replications;
    d["pcs"] = optional_estimate(oc.pcs);
    d["ens"] = estimate_dict(oc.ens);
    d["p_star"] = optional_estimate(oc.p_star);
    d["tox"] = estimate_dict(oc.mean_toxicities);
    d["term"] = estimate_dict(oc.termination_rate);
    d["mean_n"] = estimate_dict(oc.mean_n);
    d["power"] = optional_estimate(oc.rejection_rate);
    d["selection"] = oc.selection;
    d["allocation"] = oc.allocation;
    return d;
}

Design parse_design(const std::string& name)
{
    if (name == "WE") return Design::WeightedEntropy;
    if (name == "FR") return Design::FixedRandomization;
    throw std::invalid_argument("design must be 'WE' or 'FR'");
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Weighted-entropy sequential design";

    py::register_exception<io::ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<SimplexVector>(m, "SimplexVector")
        .def(py::init<std::vector<double>>())
        .def_static("binary", &SimplexVector::binary)
        .def("components", [](const SimplexVector& s) {
            return std::vector<double>(s.components().begin(), s.components().end());
        })
        .def("__len__", &SimplexVector::size)
        .def("__getitem__", [](const SimplexVector& s, std::size_t i) {
            if (i >= s.size()) throw py::index_error();
            return s[i];
        })
        .def("__repr__", [](const SimplexVector& s) {
            std::string out = "SimplexVector([";
            for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
            return out + "])";
        });

    py::class_<ArmState>(m, "ArmState")
        .def(py::init<std::vector<double>, std::vector<std::int64_t>>(), py::arg("prior"), py::arg("counts"))
        .def(py::init<std::vector<double>>(), py::arg("prior"))
        .def_static("from_prior_mode", &ArmState::from_prior_mode, py::arg("mode"), py::arg("beta"))
        .def_property_readonly("n", &ArmState::n)
        .def_property_readonly("beta", &ArmState::beta)
        .def_property_readonly("counts", [](const ArmState& s) {
            return std::vector<std::int64_t>(s.counts().begin(), s.counts().end());
        })
        .def_property_readonly("prior", [](const ArmState& s) {
            return std::vector<double>(s.prior_pseudocounts().begin(), s.prior_pseudocounts().end());
        })
        .def("record", &ArmState::record)
        .def("__eq__", [](const ArmState& a, const ArmState& b) { return a == b; });

    py::class_<CriterionParams>(m, "CriterionParams")
        .def(py::init<SimplexVector, double, bool>(), py::arg("gamma"), py::arg("kappa") = 0.5,
             py::arg("allow_experimental_kappa") = false)
        .def_readonly("gamma", &CriterionParams::gamma)
        .def_readonly("kappa", &CriterionParams::kappa);

    py::enum_<Rule>(m, "Rule").value("I", Rule::RuleI).value("II", Rule::RuleII);
    py::enum_<SafetyClock>(m, "SafetyClock")
        .value("PER_ARM", SafetyClock::PerArm)
        .value("TRIAL_WIDE", SafetyClock::TrialWide);

    py::class_<SafetyConfig>(m, "SafetyConfig")
        .def(py::init([](double gamma_star, double r, double theta_final, std::size_t toxicity_outcome,
                         SafetyClock clock) {
                 SafetyConfig s{gamma_star, r, theta_final, toxicity_outcome, clock};
                 s.validate();
                 return s;
             }),
             py::arg("gamma_star") = 0.45, py::arg("r") = 0.035, py::arg("theta_final") = 0.3,
             py::arg("toxicity_outcome") = 0, py::arg("clock") = SafetyClock::TrialWide)
        .def_readonly("gamma_star", &SafetyConfig::gamma_star)
        .def_readonly("r", &SafetyConfig::r)
        .def_readonly("theta_final", &SafetyConfig::theta_final)
        .def_readonly("clock", &SafetyConfig::clock);

    py::class_<AllocationDecision>(m, "AllocationDecision")
        .def_property_readonly("terminated", &AllocationDecision::terminated)
        .def_readonly("arm", &AllocationDecision::arm)
        .def_readonly("probabilities", &AllocationDecision::probabilities)
        .def_readonly("uniform", &AllocationDecision::uniform);

    // criterion and entropies
    m.def("posterior_mode", &posterior_mode);
    m.def("criterion", &criterion, py::arg("alpha"), py::arg("params"), py::arg("n"));
    m.def("criterion_binary", &criterion_binary, py::arg("p"), py::arg("gamma"), py::arg("kappa"), py::arg("n"));
    m.def("plugin_criterion", &plugin_criterion);
    m.def("dirichlet_entropy", &dirichlet_entropy);
    m.def("weighted_dirichlet_entropy", &weighted_dirichlet_entropy);
    m.def("information_gain", &information_gain);
    m.def("gain_asymptotic", &gain_asymptotic, py::arg("alpha"), py::arg("params"), py::arg("n"));
    m.def("criterion_gradient_binary", &criterion_gradient_binary);
    m.def("normal_approx", [](const SimplexVector& alpha, const CriterionParams& params, std::int64_t n) {
        const auto a = normal_approx(alpha, params, n);
        return py::make_tuple(a.mean, a.variance);
    });
    m.def("pcs_lower_bound", [](const std::vector<double>& deltas, const std::vector<double>& variances,
                                std::size_t target) { return pcs_lower_bound(deltas, variances, target); });

    // allocation
    m.def("randomization_probabilities",
          [](const std::vector<double>& d) { return randomization_probabilities(d); });
    m.def("select_best", [](const std::vector<double>& d, const std::vector<std::size_t>& eligible) {
        return select_best(d, eligible);
    });
    m.def("final_recommendation", [](const std::vector<ArmState>& states, const SimplexVector& gamma) {
        return final_recommendation(states, gamma);
    });
    m.def("safety_threshold", &safety_threshold);
    m.def("overdose_probability", &overdose_probability, py::arg("state"), py::arg("gamma_star"),
          py::arg("toxicity_outcome") = 0);
    m.def(
        "admissible_set",
        [](const std::vector<ArmState>& states, const SafetyConfig& cfg, std::int64_t trial_n) {
            return admissible_set(states, cfg, trial_n);
        },
        py::arg("states"), py::arg("safety"), py::arg("trial_n") = 0);
    m.def(
        "next_assignment",
        [](Rule rule, const std::vector<ArmState>& states, const CriterionParams& params,
           std::optional<SafetyConfig> safety, double uniform) {
            return next_assignment(rule, states, params, safety, uniform);
        },
        py::arg("rule"), py::arg("states"), py::arg("params"), py::arg("safety") = py::none(),
        py::arg("uniform") = 0.0);

    // simulation, JSON in and dicts out
    m.def("preset_config", [](const std::string& name) {
        if (name == "phase1") return dump(io::to_json(presets::phase1_config()));
        if (name == "trial1") return dump(io::to_json(presets::phase2_config(presets::kTrial1Patients, Rule::RuleII, 0.5)));
        if (name == "trial2") return dump(io::to_json(presets::phase2_config(presets::kTrial2Patients, Rule::RuleII, 0.5)));
        throw std::invalid_argument("unknown preset '" + name + "'");
    });
    m.def("preset_scenarios", [](const std::string& name) {
        std::vector<Scenario> out;
        if (name == "phase1") out = presets::phase1_scenarios();
        else if (name == "trial1") out = {presets::trial1_null(), presets::trial1_alternative()};
        else if (name == "trial2") out = {presets::trial2_null(), presets::trial2_alternative()};
        else throw std::invalid_argument("unknown preset '" + name + "'");
        std::vector<std::string> texts;
        for (const auto& s : out) texts.push_back(dump(io::to_json(s)));
        return texts;
    });
    m.def("normalize_config", [](const std::string& text) { return dump(io::to_json(config_from(text))); });
    m.def(
        "run_trial",
        [](const std::string& config, const std::string& scenario, std::uint64_t seed, const std::string& design) {
            const auto c = config_from(config);
            const auto s = scenario_from(scenario);
            const auto r = parse_design(design) == Design::WeightedEntropy ? run_trial(c, s, seed)
                                                                            : fixed_randomization_trial(c, s, seed);
            py::dict d;
            d["assignments"] = r.assignments;
            d["outcomes"] = r.outcomes;
            d["recommendation"] = r.recommendation;
            d["terminated"] = r.terminated;
            return d;
        },
        py::arg("config"), py::arg("scenario"), py::arg("seed"), py::arg("design") = "WE");
    m.def(
        "run_monte_carlo",
        [](const std::string& config, const std::string& scenario, std::int64_t reps, const std::string& design,
           unsigned parallelism) {
            const auto c = config_from(config);
            const auto s = scenario_from(scenario);
            OperatingCharacteristics oc;
            {
                py::gil_scoped_release release;
                oc = run_monte_carlo(c, s, reps, parse_design(design), parallelism);
            }
            return oc_dict(oc);
        },
        py::arg("config"), py::arg("scenario"), py::arg("replications"), py::arg("design") = "WE",
        py::arg("parallelism") = 1);
    m.def("fisher_exact_pvalue", &fisher_exact_pvalue);
    m.def(
        "calibrate_cutoff",
        [](const std::string& config, const std::string& null_scenario, std::int64_t reps, const std::string& design,
           unsigned parallelism) {
            const auto c = config_from(config);
            const auto s = scenario_from(null_scenario);
            py::gil_scoped_release release;
            return calibrate_cutoff(c, s, reps, parse_design(design), parallelism);
        },
        py::arg("config"), py::arg("null_scenario"), py::arg("replications"), py::arg("design") = "WE",
        py::arg("parallelism") = 1);
    m.def(
        "reproduce",
        [](const std::string& table, std::int64_t reps, std::int64_t cutoff_reps, std::optional<std::uint64_t> seed,
           unsigned parallelism) {
            ReproduceOptions options{reps, cutoff_reps, seed, parallelism, default_reference_file()};
            std::vector<ComparisonRow> rows;
            {
                py::gil_scoped_release release;
                rows = reproduce(table, options);
            }
            return dump(comparison_json(rows));
        },
        py::arg("table"), py::arg("replications") = 10000, py::arg("cutoff_replications") = 10000,
        py::arg("seed") = py::none(), py::arg("parallelism") = 1);
    m.def("table_ids", &table_ids);
}
