#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tomguide/human_model.hpp"
#include "tomguide/planning.hpp"

namespace tomguide {

enum class AgentKind { Supportive, Explicit, Implicit };

inline constexpr AgentKind kAgentKinds[] = {AgentKind::Supportive, AgentKind::Explicit,
                                            AgentKind::Implicit};

std::string_view to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view name);

enum class SolverMethod {
    /// Exact pruning when |Theta| <= 2, point-based otherwise.
    Auto,
    Exact,
    PointBased,
};

struct AgentParams {
    /// Rationality the agent assumes for the human's actions.
    double beta1 = 1.0;
    /// Rationality the human attributes to the agent.
    double beta2 = 5.0;
    SolverMethod method = SolverMethod::Auto;
    /// Belief-lattice resolution for point-based backups (21 points at |Theta| = 2).
    int grid_resolution = 20;
    /// Cap on the total number of stored alpha-vectors.
    std::size_t max_vectors = 20'000'000;
};

using AlphaVector = std::vector<double>;

/// Row-major |Theta| x |Theta| matrix, kernel[theta * n + theta_next].
using ThetaKernel = std::vector<double>;

/// Hidden-target transition after the agent plays `agent_action` in `state`.
/// Supportive keeps theta, explicit jumps to theta*, implicit redraws the
/// target from the Eq. 2 posterior under the uniform prior over targets.
ThetaKernel theta_kernel(AgentKind kind, const TaskModel& model, std::size_t theta_star,
                         std::size_t state, std::size_t agent_action, double beta2);

/// One row of theta_kernel: the distribution over the next target.
std::vector<double> theta_transition(AgentKind kind, const TaskModel& model,
                                     std::size_t theta_star, std::size_t state, std::size_t theta,
                                     std::size_t agent_action, double beta2);

struct PlanningMeta {
    int horizon = 0;
    SolverMethod method = SolverMethod::Exact;
    std::size_t belief_points = 0;
    std::size_t total_vectors = 0;
    std::size_t max_vectors_per_action = 0;
};

/// Alpha-vector sets Gamma^a(o) for every enumerated observable state.
class AgentPolicy {
public:
    AgentPolicy(std::shared_ptr<const TaskModel> model, AgentKind kind, AgentParams params,
                std::vector<std::vector<std::vector<AlphaVector>>> gamma, PlanningMeta meta);

    AgentKind kind() const { return kind_; }
    const AgentParams& params() const { return params_; }
    std::size_t theta_star() const { return model_->best_target(); }
    const TaskModel& model() const { return *model_; }
    const std::shared_ptr<const TaskModel>& model_ptr() const { return model_; }
    const PlanningMeta& meta() const { return meta_; }

    const std::vector<AlphaVector>& vectors(std::size_t state, std::size_t agent_action) const {
        return gamma_.at(state).at(agent_action);
    }
    std::size_t action_count(std::size_t state) const { return gamma_.at(state).size(); }

    /// max over Gamma^a(o) of b . alpha.
    double action_value(std::size_t state, std::size_t agent_action, const Belief& b) const;
    /// max over actions of action_value; 0 at terminal states.
    double value(std::size_t state, const Belief& b) const;

    /// Uniform for supportive and implicit, the indicator on theta* for explicit.
    Belief initial_belief() const;

private:
    std::shared_ptr<const TaskModel> model_;
    AgentKind kind_;
    AgentParams params_;
    std::vector<std::vector<std::vector<AlphaVector>>> gamma_;
    PlanningMeta meta_;
};

/// Finite-horizon backups over the enumerated observable states. Throws
/// SolverError when the vector cap is exceeded.
AgentPolicy solve(std::shared_ptr<const TaskModel> model, AgentKind kind,
                  const AgentParams& params = {});

/// Eq. 4; lowest action index on ties. Throws MissingState for terminal or
/// unknown states.
std::size_t select_action(const AgentPolicy& policy, const Belief& belief, std::size_t state);

struct BeliefUpdate {
    Belief belief;
    /// True when the correction underflowed and the predicted belief was kept.
    bool degenerate = false;
};

/// Predict through the theta kernel, then reweight by the Eq. 1 likelihood
/// of the observed human action (Eq. 5).
BeliefUpdate update_belief(const AgentPolicy& policy, const Belief& belief, std::size_t state,
                           std::size_t agent_action, std::size_t human_action);

/// Per-session agent value: current belief plus the shared policy.
struct AgentState {
    Belief belief;
    std::shared_ptr<const AgentPolicy> policy;

    static AgentState start(std::shared_ptr<const AgentPolicy> policy);
    std::size_t select(std::size_t state) const { return select_action(*policy, belief, state); }
};

/// Policy cache file name: task hash, agent kind and parameters.
std::string policy_cache_name(const TaskModel& model, AgentKind kind, const AgentParams& params);
void save_policy(const AgentPolicy& policy, const std::string& path);
/// Throws SolverError when the file does not match the model hash, kind or
/// parameters.
AgentPolicy load_policy(std::shared_ptr<const TaskModel> model, AgentKind kind,
                        const AgentParams& params, const std::string& path);
/// Loads from `cache_dir` when a matching file exists, otherwise solves and
/// writes it.
AgentPolicy solve_cached(std::shared_ptr<const TaskModel> model, AgentKind kind,
                         const AgentParams& params, const std::string& cache_dir);

}  // namespace tomguide
