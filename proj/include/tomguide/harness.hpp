#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tomguide/agent.hpp"
#include "tomguide/env.hpp"
#include "tomguide/human_model.hpp"
#include "tomguide/planning.hpp"

namespace tomguide {

/// One joint step as it happened.
struct TranscriptRecord {
    int step_index = 0;
    ObservableState state;
    CompressedAction agent_action;
    CompressedAction human_action;
    /// Human belief over the agent's target and the target it acted on.
    std::optional<Belief> human_belief;
    std::optional<std::size_t> human_target;
    /// Agent belief after the Eq. 5 update.
    Belief agent_belief;
    /// Step reward under the best target.
    double reward = 0.0;
    std::vector<Cell> human_path;
    std::vector<std::vector<Cell>> evader_ticks;
    std::vector<Cell> agent_path;
    std::optional<std::size_t> captured;
    bool degenerate_belief = false;
};

struct EpisodeLog {
    std::string task_id;
    AgentKind agent = AgentKind::Supportive;
    std::string human_variant;
    std::uint64_t seed = 0;
    std::vector<TranscriptRecord> transcript;
    EpisodeStatus status = EpisodeStatus::Running;
    std::optional<TargetId> captured_id;
    TargetId best_id = 0;
    bool captured_best = false;
    std::vector<std::string> warnings;

    int steps() const { return static_cast<int>(transcript.size()); }
};

nlohmann::json to_json(const TaskSpec& task, const ObservableState& s);
nlohmann::json to_json(const TaskSpec& task, const EpisodeLog& log);
std::string_view to_string(EpisodeStatus s);

/// Live episode: the shared engine behind run_episode and the experiment
/// service. The agent commits to its action before the human acts.
class EpisodeRunner {
public:
    explicit EpisodeRunner(std::shared_ptr<const AgentPolicy> policy);

    const TaskModel& model() const { return policy_->model(); }
    const TaskSpec& task() const { return model().task(); }
    const AgentPolicy& policy() const { return *policy_; }
    std::size_t state_index() const { return state_; }
    const ObservableState& state() const { return model().space().state(state_); }
    const Belief& agent_belief() const { return agent_.belief; }
    EpisodeStatus status() const;
    bool terminal() const { return status() != EpisodeStatus::Running; }
    int step_count() const { return state().step_count; }

    /// Eq. 4 on the current belief.
    std::size_t agent_action() const;
    const std::vector<CompressedAction>& human_actions() const;
    const std::vector<CompressedAction>& agent_actions() const;

    /// Executes the agent's chosen action with the given human action.
    /// Throws InvalidAction for an out-of-range index or a terminal episode.
    TranscriptRecord commit(std::size_t human_action);

private:
    std::shared_ptr<const AgentPolicy> policy_;
    AgentState agent_;
    std::size_t state_ = 0;
};

/// Simulated-human specification for an episode.
struct HumanSpec {
    HumanParams params;
    /// Stubborn: forced initial target. Told: defaults to theta*.
    std::optional<std::size_t> initial_target;
};

EpisodeLog run_episode(std::shared_ptr<const AgentPolicy> policy, const HumanSpec& human,
                       std::uint64_t seed);

/// Replays human actions (by direction of their first move) through a fresh
/// runner.
std::vector<TranscriptRecord> replay_episode(std::shared_ptr<const AgentPolicy> policy,
                                             const std::vector<Direction>& human_moves);

/// `matched` gives the explicit agent a told human and every other agent a
/// tom human.
enum class HumanAssignment { Tom, Stubborn, Told, Matched };
HumanAssignment parse_human_assignment(std::string_view name);
std::string_view to_string(HumanAssignment h);
HumanVariant variant_for(HumanAssignment h, AgentKind agent);

struct BatchConfig {
    std::vector<std::string> tasks;
    std::vector<AgentKind> agents{AgentKind::Supportive, AgentKind::Explicit, AgentKind::Implicit};
    HumanAssignment human = HumanAssignment::Matched;
    int n_seeds = 200;
    std::uint64_t seed = 1;
    double beta1 = 1.0;
    double beta2 = 5.0;
    std::optional<int> horizon;
    /// 0 means std::thread::hardware_concurrency().
    int threads = 1;
    int bootstrap_resamples = 10'000;
    /// Directory for solved policies; empty disables caching.
    std::string policy_cache;

    /// Paths in the file are resolved relative to the file's directory.
    static BatchConfig load(const std::string& path);
};

struct MetricsRow {
    std::string task_id;
    TaskType task_type = TaskType::A;
    AgentKind agent = AgentKind::Supportive;
    HumanVariant human = HumanVariant::Tom;
    int n = 0;
    double best_capture_rate = 0.0;
    double any_capture_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double mean_steps = 0.0;
};

struct BatchResult {
    std::vector<MetricsRow> rows;
    /// Row-major like rows: logs[row][replicate].
    std::vector<std::vector<EpisodeLog>> logs;
};

/// Episode seed for a batch cell.
std::uint64_t episode_seed(std::uint64_t batch_seed, std::size_t task_index, AgentKind agent,
                           int replicate);

/// Percentile bootstrap 95% interval of the mean of 0/1 flags.
std::pair<double, double> bootstrap_interval(const std::vector<int>& flags, int resamples,
                                             std::uint64_t seed);

BatchResult run_batch(const BatchConfig& cfg);
BatchResult run_batch(const BatchConfig& cfg, const std::vector<TaskSpec>& tasks);

std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace tomguide
