#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "voiceclone/adapters.hpp"
#include "voiceclone/playbook.hpp"
#include "voiceclone/session.hpp"

namespace voiceclone {

struct GatewayConfig {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    std::filesystem::path playbook_dir = "playbooks";
    std::filesystem::path scenario_dir = "data/scenarios";
    std::size_t queue_capacity = 100;
    int pacing_ms = 20;  // minimum spacing of outgoing audio frames, 0 = as fast as the socket allows
    int processing_delay_ms = 50;
    int threads = 4;
    SlotValues slot_values = {{"agent_name", "Mali"},
                              {"agent_id", "AI-01"},
                              {"customer_plan", "standard 100 Mbps"},
                              {"customer_tenure", "two years"}};
};

// Resources by id. Ids are looked up in memory first, then as
// `<dir>/<id>.json`; loaded entries are cached. Safe for concurrent use.
template <typename T>
class Registry {
public:
    using Loader = std::function<T(const std::filesystem::path&)>;

    Registry(std::filesystem::path dir, Loader loader) : dir_(std::move(dir)), loader_(std::move(loader)) {}

    void add(const std::string& id, T value) {
        std::unique_lock lock(mutex_);
        entries_[id] = std::make_shared<const T>(std::move(value));
    }

    // Null when the id is unknown. Throws ValidationError when the file
    // exists but does not load.
    std::shared_ptr<const T> find(const std::string& id) const {
        {
            std::shared_lock lock(mutex_);
            if (auto it = entries_.find(id); it != entries_.end()) return it->second;
        }
        if (!valid_id(id) || dir_.empty()) return nullptr;
        const auto path = dir_ / (id + ".json");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) return nullptr;
        auto value = std::make_shared<const T>(loader_(path));
        std::unique_lock lock(mutex_);
        return entries_.emplace(id, std::move(value)).first->second;
    }

    static bool valid_id(const std::string& id) {
        if (id.empty() || id.size() > 128 || id.front() == '.') return false;
        for (char c : id) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                            c == '_' || c == '-' || c == '.';
            if (!ok) return false;
        }
        return true;
    }

private:
    std::filesystem::path dir_;
    Loader loader_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const T>> entries_;
};

using PlaybookRegistry = Registry<AgentPlaybook>;
using ScenarioRegistry = Registry<ScenarioScript>;

struct OpenRequest {
    std::string playbook_id;
    std::string adapter = "echo";
    std::string scenario;  // scripted adapter only
    SlotValues slots;      // override the configured slot values
};

// Everything a transport needs to create sessions. Thread-safe.
class GatewayCore {
public:
    explicit GatewayCore(GatewayConfig config);

    const GatewayConfig& config() const { return config_; }
    PlaybookRegistry& playbooks() { return playbooks_; }
    ScenarioRegistry& scenarios() { return scenarios_; }

    // Returns an open session (state listening, or speaking when the adapter
    // opened with a greeting). Throws ProtocolError with code
    // unknown_playbook, unknown_adapter, unknown_scenario, render_failed or
    // adapter_init_failed.
    std::unique_ptr<Session> open_session(const OpenRequest& request);

    std::unique_ptr<SpeechAdapter> make_adapter(const std::string& kind, const std::string& scenario);

private:
    GatewayConfig config_;
    PlaybookRegistry playbooks_;
    ScenarioRegistry scenarios_;
    std::atomic<std::uint64_t> next_id_{1};
};

// WebSocket transport on `/v1/session`. Query parameters playbook_id,
// adapter and scenario seed the session; the client's session.start message
// may override them and opens the session.
class GatewayServer {
public:
    explicit GatewayServer(std::shared_ptr<GatewayCore> core);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    // Binds and starts the worker threads. Throws Error when binding fails.
    void start();
    void stop();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();

    std::uint16_t port() const;
    std::size_t active_sessions() const;
    std::size_t completed_sessions() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace voiceclone
