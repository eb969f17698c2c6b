#pragma once

// One live trial: an append-only event log and the state it implies.

#include "wedesign/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wedesign::conduct {

/// Error surfaced to clients as {code, message, field?} with an HTTP status.
class ConductError : public std::runtime_error {
public:
    ConductError(int status, std::string code, const std::string& message, std::string field = {})
        : std::runtime_error(message), status_(status), code_(std::move(code)), field_(std::move(field))
    {
    }
    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    int status_;
    std::string code_;
    std::string field_;
};

struct Event {
    std::int64_t seq = 0;
    std::string ts;
    /// created, assigned, outcome, terminated, recommended
    std::string kind;
    nlohmann::json payload;

    nlohmann::json to_json() const;
    static Event from_json(const nlohmann::json& j);
};

enum class Status { Active, Completed, Terminated };

std::string status_name(Status status);

class TrialSession {
public:
    /// Called with every event before it is applied; throwing aborts the
    /// mutation.
    using Sink = std::function<void(const Event&)>;

    /// Validates the config and emits the created event.
    static TrialSession create(std::string id, TrialConfig config, std::uint64_t seed, Sink sink = {});

    /// Rebuilds a session from its log. Throws ConductError on a malformed or
    /// gapped log.
    static TrialSession replay(std::string id, std::span<const Event> events);

    void set_sink(Sink sink) { sink_ = std::move(sink); }

    const std::string& id() const noexcept { return id_; }
    const TrialConfig& config() const noexcept { return config_; }
    const std::vector<ArmState>& states() const noexcept { return states_; }
    const std::vector<Event>& events() const noexcept { return events_; }
    std::optional<std::size_t> pending_assignment() const noexcept { return pending_; }
    std::int64_t patients_treated() const noexcept { return patients_; }
    Status status() const;

    nlohmann::json view() const;

    /// Issues the next arm, or terminates when no arm is admissible. Repeating
    /// the key of the outstanding assignment returns it again.
    nlohmann::json assign(const std::optional<std::string>& idempotency_key = std::nullopt);

    nlohmann::json record_outcome(std::size_t arm, std::size_t outcome, const std::string& idempotency_key);

    /// The view record_outcome would produce, without touching the session.
    nlohmann::json whatif(std::size_t arm, std::size_t outcome) const;

    /// Final recommendation; logged once.
    nlohmann::json recommendation();

    /// True when replaying the log reproduces the current states.
    bool replay_matches() const;

private:
    TrialSession(std::string id, TrialConfig config, std::uint64_t seed);

    void append(std::string kind, nlohmann::json payload);
    void apply(const Event& event);
    void check_arm_outcome(std::size_t arm, std::size_t outcome) const;
    nlohmann::json view_of(std::span<const ArmState> states, std::int64_t patients,
                           std::optional<std::size_t> pending, bool terminated) const;
    AllocationDecision decide(std::span<const ArmState> states, double uniform) const;

    std::string id_;
    TrialConfig config_;
    std::uint64_t seed_ = 0;
    std::vector<ArmState> states_;
    std::vector<Event> events_;
    std::optional<std::size_t> pending_;
    std::optional<std::string> pending_key_;
    std::int64_t patients_ = 0;
    bool terminated_ = false;
    bool recommended_ = false;
    std::optional<std::size_t> recommendation_;
    struct Recorded {
        std::size_t arm;
        std::size_t outcome;
        nlohmann::json view;
    };
    std::map<std::string, Recorded> outcome_keys_;
    Sink sink_;
};

/// Rule I variate of the patient with the given index.
double assignment_uniform(std::uint64_t seed, std::int64_t patient);

}  // namespace wedesign::conduct
