#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tomguide/env.hpp"
#include "tomguide/state.hpp"
#include "tomguide/task.hpp"

namespace tomguide {

inline constexpr std::size_t kDefaultStateCap = 2'000'000;

/// Outcome of one joint action pair from an enumerated state.
struct JointEdge {
    std::uint32_t next = 0;
    std::int32_t steps = 0;
    /// Captured target index, or -1.
    std::int32_t captured = -1;

    std::optional<std::size_t> captured_target() const {
        if (captured < 0) return std::nullopt;
        return static_cast<std::size_t>(captured);
    }
};

struct StateNode {
    std::vector<CompressedAction> human_actions;
    std::vector<CompressedAction> agent_actions;
    /// Row-major by agent action: edges[a * human_actions.size() + h].
    std::vector<JointEdge> edges;

    bool terminal() const { return edges.empty(); }
    const JointEdge& edge(std::size_t agent, std::size_t human) const {
        return edges[agent * human_actions.size() + human];
    }
};

/// Every observable state reachable from the initial state under legal
/// compressed-action pairs, in breadth-first order (index 0 is the initial
/// state; every edge goes to a larger index).
class StateSpace {
public:
    static StateSpace enumerate(const TaskSpec& task, std::size_t cap = kDefaultStateCap);

    const TaskSpec& task() const { return task_; }
    std::size_t size() const { return states_.size(); }
    const ObservableState& state(std::size_t i) const { return states_[i]; }
    const StateNode& node(std::size_t i) const { return nodes_[i]; }

    std::optional<std::size_t> find(const ObservableState& s) const;
    /// Throws MissingState.
    std::size_t index_of(const ObservableState& s) const;

    /// Index of `action` among the node's actions for its mover, or nullopt
    /// when it is not legal there.
    std::optional<std::size_t> action_index(std::size_t state, const CompressedAction& action) const;

private:
    TaskSpec task_;
    std::vector<ObservableState> states_;
    std::vector<StateNode> nodes_;
    std::unordered_map<ObservableState, std::size_t, ObservableStateHash> index_;
};

struct PlanningConfig {
    double discount = 0.99;
    double tolerance = 1e-6;
    int max_sweeps = 10'000;

    static PlanningConfig for_task(const TaskSpec& task) {
        PlanningConfig cfg;
        cfg.discount = task.discount;
        return cfg;
    }
};

/// V(o; theta) over a StateSpace. Q is derived on demand from the edges.
class ValueTable {
public:
    ValueTable(const StateSpace& space, std::size_t theta, double discount,
               std::vector<double> values, std::vector<double> residuals);

    std::size_t theta() const { return theta_; }
    double discount() const { return discount_; }
    double value(std::size_t state) const { return values_[state]; }
    const std::vector<double>& values() const { return values_; }

    /// Joint action value Q(o, a_A, a_H; theta).
    double q(std::size_t state, std::size_t agent_action, std::size_t human_action) const;

    /// Q for actions given by value; the invalid-action reward when either
    /// action is illegal in `s`.
    double q(const ObservableState& s, const CompressedAction& agent,
             const CompressedAction& human) const;

    /// Residual of the last sweep and the full per-sweep history.
    double residual() const { return residuals_.empty() ? 0.0 : residuals_.back(); }
    const std::vector<double>& residual_history() const { return residuals_; }
    int sweeps() const { return static_cast<int>(residuals_.size()); }

private:
    const StateSpace* space_;
    std::size_t theta_;
    double discount_;
    std::vector<double> values_;
    std::vector<double> residuals_;
};

/// Synchronous value iteration to cfg.tolerance. Throws NonConvergence.
ValueTable value_iteration(const StateSpace& space, std::size_t theta, const PlanningConfig& cfg);

/// Exactly `sweeps` synchronous sweeps from V = 0; never throws.
ValueTable truncated_value_iteration(const StateSpace& space, std::size_t theta, double discount,
                                     int sweeps);

/// argmax over targets of V(o_0; theta), lowest index on ties (1e-9).
std::size_t best_target(std::span<const ValueTable> tables);

/// Task, state space, one value table per target and the best target,
/// built once and shared read-only.
class TaskModel {
public:
    static std::shared_ptr<const TaskModel> build(const TaskSpec& task,
                                                  std::size_t cap = kDefaultStateCap);

    const TaskSpec& task() const { return space_.task(); }
    const StateSpace& space() const { return space_; }
    const ValueTable& table(std::size_t theta) const { return tables_.at(theta); }
    std::span<const ValueTable> tables() const { return tables_; }
    std::size_t target_count() const { return tables_.size(); }
    std::size_t best_target() const { return best_; }
    std::uint64_t hash() const { return hash_; }

private:
    StateSpace space_;
    std::vector<ValueTable> tables_;
    std::size_t best_ = 0;
    std::uint64_t hash_ = 0;
};

}  // namespace tomguide
