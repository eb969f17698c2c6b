#pragma once

// Session registry with JSON-lines persistence: <dir>/index.jsonl lists the
// sessions, <dir>/sessions/<id>.jsonl holds each event log.

#include "wedesign/conduct/session.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace wedesign::conduct {

class SessionStore {
public:
    /// Empty `dir` keeps everything in memory. Existing sessions under `dir`
    /// are replayed from their logs.
    explicit SessionStore(std::filesystem::path dir = {});

    /// Returns the new session's id.
    std::string create(TrialConfig config, std::optional<std::uint64_t> seed = std::nullopt);

    /// Runs `fn` with the session locked; mutations are serialised per session.
    nlohmann::json mutate(const std::string& id, const std::function<nlohmann::json(TrialSession&)>& fn);

    /// Runs `fn` against the session under its lock without expecting a
    /// change (what-if previews).
    nlohmann::json inspect(const std::string& id,
                           const std::function<nlohmann::json(const TrialSession&)>& fn) const;

    /// Last committed view; does not wait for a running mutation.
    nlohmann::json view(const std::string& id) const;

    std::vector<std::string> ids() const;
    std::size_t size() const;

private:
    struct Entry {
        std::mutex write;
        TrialSession session;
        mutable std::mutex view_lock;
        std::shared_ptr<const nlohmann::json> committed;

        explicit Entry(TrialSession s);
        void publish();
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    TrialSession::Sink sink_for(const std::string& id) const;
    void load();

    std::filesystem::path dir_;
    mutable std::shared_mutex map_lock_;
    std::mutex index_lock_;
    std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Random 128-bit hex id.
std::string new_session_id();

}  // namespace wedesign::conduct
