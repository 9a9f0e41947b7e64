#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tomguide/agent.hpp"
#include "tomguide/harness.hpp"

namespace httplib {
class Server;
}

namespace tomguide {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Must hold 5 regular task files and 2 dummy task files (`*.task`).
    std::string fixture_dir;
    /// Per-session JSONL logs plus index.jsonl.
    std::string log_dir;
    double beta1 = 1.0;
    double beta2 = 5.0;
    /// Optional policy cache directory.
    std::string policy_cache;
};

/// Error surfaced to HTTP clients as {code, message} with `status`.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message)
        : std::runtime_error(message), status_(status), code_(std::move(code)) {}
    int status() const { return status_; }
    const std::string& code() const { return code_; }

private:
    int status_;
    std::string code_;
};

struct QueueEntry {
    std::string task_id;
    AgentKind agent = AgentKind::Supportive;
    /// Index of the agent-type set, or -1 for a dummy task.
    int set = -1;
};

inline constexpr std::size_t kQueueLength = 17;
inline constexpr std::size_t kTasksPerSet = 5;
/// Zero-based queue slots of the two dummy tasks.
inline constexpr std::size_t kDummySlots[] = {5, 11};

/// Three shuffled agent-type sets of the regular tasks, each shuffled
/// internally, with the dummies at fixed slots.
std::vector<QueueEntry> build_queue(const std::vector<std::string>& regular_tasks,
                                    const std::vector<std::string>& dummy_tasks, std::uint64_t seed);

/// Client-facing result of one joint step.
nlohmann::json step_result_json(const TaskSpec& task, std::size_t theta_star,
                                const TranscriptRecord& rec, EpisodeStatus status);

class ExperimentService {
public:
    explicit ExperimentService(ServiceConfig cfg);
    ~ExperimentService();

    nlohmann::json tasks() const;
    /// Body may carry {"seed": n}; otherwise the order seed is random.
    nlohmann::json create_session(const nlohmann::json& body);
    nlohmann::json state(const std::string& id) const;
    nlohmann::json action(const std::string& id, const nlohmann::json& body);
    nlohmann::json survey(const std::string& id, const nlohmann::json& body);
    nlohmann::json log(const std::string& id) const;

    std::shared_ptr<const AgentPolicy> policy(const std::string& task_id, AgentKind agent) const;
    std::size_t session_count() const;
    /// Sessions whose replayed log disagreed with a logged step.
    const std::vector<std::string>& recovery_warnings() const { return recovery_warnings_; }

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    void start_episode(Session& s) const;
    nlohmann::json view(const Session& s) const;
    void append(Session& s, const nlohmann::json& record) const;
    void recover();

    ServiceConfig cfg_;
    std::vector<std::string> regular_;
    std::vector<std::string> dummies_;
    std::map<std::string, TaskSpec> specs_;
    std::map<std::pair<std::string, AgentKind>, std::shared_ptr<const AgentPolicy>> policies_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::vector<std::string> recovery_warnings_;
};

/// Registers the JSON API routes on `server`.
void install_routes(httplib::Server& server, ExperimentService& service);

/// Blocks serving HTTP; returns false when the socket cannot be bound.
bool serve_http(ExperimentService& service, const std::string& host, int port);

}  // namespace tomguide
