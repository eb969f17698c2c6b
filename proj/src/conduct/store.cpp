#include "wedesign/conduct/store.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace wedesign::conduct {

using nlohmann::json;
namespace fs = std::filesystem;

std::string new_session_id()
{
    static std::mutex lock;
    static std::random_device device;
    std::lock_guard guard(lock);
    static constexpr char hex[] = "0123456789abcdef";
    std::string id;
    for (int word = 0; word < 4; ++word) {
        std::uint32_t x = device();
        for (int k = 0; k < 8; ++k, x >>= 4) id += hex[x & 0xf];
    }
    return id;
}

SessionStore::Entry::Entry(TrialSession s) : session(std::move(s))
{
    publish();
}

void SessionStore::Entry::publish()
{
    auto v = std::make_shared<const json>(session.view());
    std::lock_guard guard(view_lock);
    committed = std::move(v);
}

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir))
{
    if (dir_.empty()) return;
    fs::create_directories(dir_ / "sessions");
    load();
}

void SessionStore::load()
{
    std::ifstream index(dir_ / "index.jsonl");
    std::string line;
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        const auto id = json::parse(line).at("id").get<std::string>();
        std::ifstream log(dir_ / "sessions" / (id + ".jsonl"));
        std::vector<Event> events;
        std::string event_line;
        while (std::getline(log, event_line)) {
            if (!event_line.empty()) events.push_back(Event::from_json(json::parse(event_line)));
        }
        auto session = TrialSession::replay(id, events);
        session.set_sink(sink_for(id));
        sessions_.emplace(id, std::make_shared<Entry>(std::move(session)));
    }
}

TrialSession::Sink SessionStore::sink_for(const std::string& id) const
{
    if (dir_.empty()) return {};
    const fs::path path = dir_ / "sessions" / (id + ".jsonl");
    return [path](const Event& e) {
        std::ofstream out(path, std::ios::app);
        out << e.to_json().dump() << '\n';
        out.flush();
        if (!out) throw ConductError(500, "storage_error", "cannot append to " + path.string());
    };
}

std::string SessionStore::create(TrialConfig config, std::optional<std::uint64_t> seed)
{
    const std::string id = new_session_id();
    const std::uint64_t s = seed ? *seed : std::random_device{}();
    auto session = TrialSession::create(id, std::move(config), s, sink_for(id));
    if (!dir_.empty()) {
        std::lock_guard guard(index_lock_);
        std::ofstream index(dir_ / "index.jsonl", std::ios::app);
        index << json{{"id", id}, {"file", "sessions/" + id + ".jsonl"}, {"created", session.events().front().ts}}
                     .dump()
              << '\n';
        if (!index) throw ConductError(500, "storage_error", "cannot write session index");
    }
    auto entry = std::make_shared<Entry>(std::move(session));
    std::unique_lock guard(map_lock_);
    sessions_.emplace(id, std::move(entry));
    return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const
{
    std::shared_lock guard(map_lock_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ConductError(404, "not_found", "no session '" + id + "'", "id");
    return it->second;
}

json SessionStore::mutate(const std::string& id, const std::function<json(TrialSession&)>& fn)
{
    auto entry = find(id);
    std::lock_guard guard(entry->write);
    const auto before = entry->session.events().size();
    json out = fn(entry->session);
    if (entry->session.events().size() != before) entry->publish();
    return out;
}

json SessionStore::inspect(const std::string& id, const std::function<json(const TrialSession&)>& fn) const
{
    auto entry = find(id);
    std::lock_guard guard(entry->write);
    return fn(entry->session);
}

json SessionStore::view(const std::string& id) const
{
    auto entry = find(id);
    std::lock_guard guard(entry->view_lock);
    return *entry->committed;
}

std::vector<std::string> SessionStore::ids() const
{
    std::shared_lock guard(map_lock_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t SessionStore::size() const
{
    std::shared_lock guard(map_lock_);
    return sessions_.size();
}

}  // namespace wedesign::conduct
