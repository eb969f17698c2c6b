#include "wedesign/conduct/session.hpp"

#include "wedesign/io.hpp"
#include "wedesign/rng.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>

namespace wedesign::conduct {

using nlohmann::json;

namespace {

std::string now_utc()
{
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

json finite_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json optional_index(const std::optional<std::size_t>& x)
{
    return x ? json(*x) : json(nullptr);
}

std::int64_t total_n(std::span<const ArmState> states)
{
    std::int64_t n = 0;
    for (const auto& s : states) n += s.n();
    return n;
}

}  // namespace

json Event::to_json() const
{
    return json{{"seq", seq}, {"ts", ts}, {"kind", kind}, {"payload", payload}};
}

Event Event::from_json(const json& j)
{
    try {
        return Event{j.at("seq").get<std::int64_t>(), j.at("ts").get<std::string>(),
                     j.at("kind").get<std::string>(), j.at("payload")};
    } catch (const json::exception& e) {
        throw ConductError(500, "corrupt_log", std::string("malformed event: ") + e.what());
    }
}

std::string status_name(Status status)
{
    switch (status) {
    case Status::Active: return "active";
    case Status::Completed: return "completed";
    case Status::Terminated: return "terminated";
    }
    return "active";
}

double assignment_uniform(std::uint64_t seed, std::int64_t patient)
{
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(patient)));
    return rng.uniform();
}

TrialSession::TrialSession(std::string id, TrialConfig config, std::uint64_t seed)
    : id_(std::move(id)), config_(std::move(config)), seed_(seed), states_(config_.initial_states())
{
}

TrialSession TrialSession::create(std::string id, TrialConfig config, std::uint64_t seed, Sink sink)
{
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConductError(400, "invalid_config", e.what(), "config");
    }
    TrialSession session(std::move(id), std::move(config), seed);
    session.sink_ = std::move(sink);
    session.append("created", json{{"config", io::to_json(session.config_)}, {"seed", seed}});
    return session;
}

TrialSession TrialSession::replay(std::string id, std::span<const Event> events)
{
    if (events.empty() || events.front().kind != "created") {
        throw ConductError(500, "corrupt_log", "log of session " + id + " does not start with 'created'");
    }
    TrialConfig config = [&] {
        try {
            return io::config_from_json(events.front().payload.at("config"));
        } catch (const std::exception& e) {
            throw ConductError(500, "corrupt_log", std::string("stored config: ") + e.what());
        }
    }();
    const auto seed = events.front().payload.value("seed", std::uint64_t{0});
    TrialSession session(std::move(id), std::move(config), seed);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].seq != static_cast<std::int64_t>(i + 1)) {
            throw ConductError(500, "corrupt_log",
                               "sequence gap at event " + std::to_string(i + 1) + " of session " + session.id_);
        }
        session.events_.push_back(events[i]);
        session.apply(events[i]);
    }
    return session;
}

Status TrialSession::status() const
{
    if (terminated_) return Status::Terminated;
    if (!pending_ && patients_ >= config_.max_patients) return Status::Completed;
    return Status::Active;
}

void TrialSession::append(std::string kind, json payload)
{
    Event e{static_cast<std::int64_t>(events_.size()) + 1, now_utc(), std::move(kind), std::move(payload)};
    if (sink_) sink_(e);
    events_.push_back(std::move(e));
    apply(events_.back());
#ifndef NDEBUG
    if (!replay_matches()) throw std::logic_error("event log replay diverged in session " + id_);
#endif
}

void TrialSession::apply(const Event& e)
{
    const auto& p = e.payload;
    try {
        if (e.kind == "created") return;
        if (e.kind == "assigned") {
            pending_ = p.at("arm").get<std::size_t>();
            pending_key_ = p.contains("idempotency_key") && !p.at("idempotency_key").is_null()
                               ? std::optional(p.at("idempotency_key").get<std::string>())
                               : std::nullopt;
            return;
        }
        if (e.kind == "outcome") {
            const auto arm = p.at("arm").get<std::size_t>();
            const auto outcome = p.at("outcome").get<std::size_t>();
            if (!pending_ || *pending_ != arm) {
                throw ConductError(500, "corrupt_log", "outcome without matching assignment");
            }
            states_.at(arm).record(outcome);
            ++patients_;
            pending_.reset();
            pending_key_.reset();
            outcome_keys_[p.at("idempotency_key").get<std::string>()] = {arm, outcome, view()};
            return;
        }
        if (e.kind == "terminated") {
            terminated_ = true;
            pending_.reset();
            return;
        }
        if (e.kind == "recommended") {
            recommended_ = true;
            recommendation_ = p.at("arm").is_null() ? std::nullopt : std::optional(p.at("arm").get<std::size_t>());
            return;
        }
    } catch (const json::exception& ex) {
        throw ConductError(500, "corrupt_log", "event " + std::to_string(e.seq) + ": " + ex.what());
    }
    throw ConductError(500, "corrupt_log", "unknown event kind '" + e.kind + "'");
}

AllocationDecision TrialSession::decide(std::span<const ArmState> states, double uniform) const
{
    return next_assignment(config_.rule, states, config_.criterion_params(), config_.safety, uniform);
}

json TrialSession::view_of(std::span<const ArmState> states, std::int64_t patients,
                           std::optional<std::size_t> pending, bool terminated) const
{
    const auto params = config_.criterion_params();
    const CriterionParams half(config_.gamma, 0.5, true);
    const auto criteria = plugin_criteria(states, params);
    const auto criteria_half = plugin_criteria(states, half);
    const std::int64_t trial_n = total_n(states);

    std::vector<std::size_t> admissible(states.size());
    std::iota(admissible.begin(), admissible.end(), std::size_t{0});
    std::vector<double> overdose;
    if (config_.safety) {
        for (const auto& s : states) {
            overdose.push_back(overdose_probability(s, config_.safety->gamma_star, config_.safety->toxicity_outcome));
        }
        admissible = admissible_set(states, *config_.safety, trial_n, overdose);
    }

    const bool complete = !pending && patients >= config_.max_patients;
    json next = nullptr;
    std::optional<std::vector<double>> probabilities;
    if (!terminated) {
        const auto d = decide(states, 0.0);
        probabilities = d.probabilities;
        if (complete) {
            next = {{"kind", "complete"}, {"arm", nullptr}};
        } else if (d.terminated()) {
            next = {{"kind", "terminate"}, {"arm", nullptr}};
        } else {
            // Rule I has no single next arm until the draw is made
            next = {{"kind", "assign"},
                    {"arm", config_.rule == Rule::RuleII ? json(d.arm) : json(nullptr)}};
        }
    }

    json arms = json::array();
    for (std::size_t j = 0; j < states.size(); ++j) {
        const auto& s = states[j];
        const bool ok = std::find(admissible.begin(), admissible.end(), j) != admissible.end();
        const auto mode = posterior_mode(s);
        arms.push_back({{"arm", j},
                        {"n", s.n()},
                        {"counts", std::vector<std::int64_t>(s.counts().begin(), s.counts().end())},
                        {"posterior_mode",
                         std::vector<double>(mode.components().begin(), mode.components().end())},
                        {"criterion", finite_or_null(criteria[j])},
                        {"criterion_kappa_half", finite_or_null(criteria_half[j])},
                        {"overdose_probability", config_.safety ? json(overdose[j]) : json(nullptr)},
                        {"admissible", ok},
                        {"randomization_probability",
                         probabilities ? json((*probabilities)[j]) : json(nullptr)}});
    }

    Status status = Status::Active;
    if (terminated) status = Status::Terminated;
    else if (complete) status = Status::Completed;

    return json{{"id", id_},
                {"name", config_.name},
                {"status", status_name(status)},
                {"rule", io::rule_name(config_.rule)},
                {"kappa", config_.kappa},
                {"patients_treated", patients},
                {"max_patients", config_.max_patients},
                {"pending_assignment", optional_index(pending)},
                {"arms", arms},
                {"admissible_set", admissible},
                {"safety_threshold",
                 config_.safety ? json(safety_threshold(trial_n, *config_.safety)) : json(nullptr)},
                {"next", next},
                {"last_seq", static_cast<std::int64_t>(events_.size())}};
}

json TrialSession::view() const
{
    json v = view_of(states_, patients_, pending_, terminated_);
    v["recommendation"] = recommended_ ? optional_index(recommendation_) : json(nullptr);
    return v;
}

json TrialSession::assign(const std::optional<std::string>& idempotency_key)
{
    if (terminated_) throw ConductError(410, "terminated", "session " + id_ + " has been terminated");
    if (pending_) {
        if (idempotency_key && pending_key_ == idempotency_key) {
            return json{{"decision", "assign"}, {"arm", *pending_}, {"view", view()}};
        }
        throw ConductError(409, "pending_assignment",
                           "arm " + std::to_string(*pending_) + " is awaiting an outcome", "arm");
    }
    if (patients_ >= config_.max_patients) {
        throw ConductError(409, "trial_complete", "all " + std::to_string(config_.max_patients) +
                                                      " patients have been treated");
    }
    const double u = assignment_uniform(seed_, patients_);
    const auto d = decide(states_, u);
    if (d.terminated()) {
        append("terminated", json{{"reason", "no admissible arm"}, {"patient", patients_}});
        return json{{"decision", "terminate"}, {"arm", nullptr}, {"view", view()}};
    }
    json payload{{"arm", d.arm}, {"patient", patients_}};
    if (d.probabilities) {
        payload["probabilities"] = *d.probabilities;
        payload["uniform"] = u;
    }
    payload["idempotency_key"] = idempotency_key ? json(*idempotency_key) : json(nullptr);
    append("assigned", std::move(payload));
    return json{{"decision", "assign"}, {"arm", d.arm}, {"view", view()}};
}

void TrialSession::check_arm_outcome(std::size_t arm, std::size_t outcome) const
{
    if (arm >= config_.arms()) {
        throw ConductError(400, "invalid_arm", "arm " + std::to_string(arm) + " does not exist", "arm");
    }
    if (outcome >= config_.outcomes()) {
        throw ConductError(400, "invalid_outcome", "outcome " + std::to_string(outcome) + " is not a category",
                           "outcome");
    }
}

json TrialSession::record_outcome(std::size_t arm, std::size_t outcome, const std::string& idempotency_key)
{
    if (idempotency_key.empty()) {
        throw ConductError(400, "missing_field", "idempotency_key is required", "idempotency_key");
    }
    if (const auto it = outcome_keys_.find(idempotency_key); it != outcome_keys_.end()) {
        if (it->second.arm != arm || it->second.outcome != outcome) {
            throw ConductError(409, "idempotency_mismatch",
                               "idempotency_key was already used for a different outcome", "idempotency_key");
        }
        return it->second.view;
    }
    check_arm_outcome(arm, outcome);
    if (terminated_) throw ConductError(410, "terminated", "session " + id_ + " has been terminated");
    if (!pending_) throw ConductError(409, "no_assignment", "no assignment is awaiting an outcome", "arm");
    if (*pending_ != arm) {
        throw ConductError(409, "wrong_arm",
                           "the outstanding assignment is arm " + std::to_string(*pending_), "arm");
    }
    append("outcome", json{{"arm", arm}, {"outcome", outcome}, {"idempotency_key", idempotency_key}});
    return outcome_keys_.at(idempotency_key).view;
}

json TrialSession::whatif(std::size_t arm, std::size_t outcome) const
{
    check_arm_outcome(arm, outcome);
    auto states = states_;
    states[arm].record(outcome);
    json v = view_of(states, patients_ + 1, std::nullopt, terminated_);
    v["recommendation"] = nullptr;
    v["hypothetical"] = {{"arm", arm}, {"outcome", outcome}};
    return v;
}

json TrialSession::recommendation()
{
    if (!terminated_ && (pending_ || patients_ < config_.max_patients)) {
        const auto remaining = config_.max_patients - patients_;
        throw ConductError(409, "trial_in_progress",
                           std::to_string(remaining) + " patients remain before a recommendation");
    }
    if (!recommended_) {
        std::optional<std::size_t> arm;
        if (!terminated_) {
            if (config_.safety) {
                const auto eligible = admissible_set(states_, *config_.safety, total_n(states_));
                arm = final_recommendation(states_, config_.gamma, eligible);
            } else {
                arm = final_recommendation(states_, config_.gamma);
            }
        }
        append("recommended", json{{"arm", optional_index(arm)}});
    }
    return json{{"recommendation", optional_index(recommendation_)}, {"view", view()}};
}

bool TrialSession::replay_matches() const
{
    TrialSession copy(id_, config_, seed_);
    for (const auto& e : events_) {
        copy.events_.push_back(e);
        copy.apply(e);
    }
    return copy.states_ == states_ && copy.pending_ == pending_ && copy.patients_ == patients_ &&
           copy.terminated_ == terminated_ && copy.recommendation_ == recommendation_;
}

}  // namespace wedesign::conduct
