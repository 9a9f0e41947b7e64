#include "tomguide/planning.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "tomguide/errors.hpp"

namespace tomguide {

StateSpace StateSpace::enumerate(const TaskSpec& task, std::size_t cap) {
    StateSpace space;
    space.task_ = task;
    auto intern = [&space, cap](ObservableState s) -> std::uint32_t {
        auto [it, inserted] = space.index_.try_emplace(s, space.states_.size());
        if (inserted) {
            if (space.states_.size() >= cap) throw StateSpaceTooLarge(cap);
            space.states_.push_back(std::move(s));
            space.nodes_.emplace_back();
        }
        return static_cast<std::uint32_t>(it->second);
    };

    intern(initial_state(task));
    for (std::size_t i = 0; i < space.states_.size(); ++i) {
        if (is_terminal(task, space.states_[i])) continue;
        // Copy: states_ may reallocate while successors are interned.
        const ObservableState s = space.states_[i];
        StateNode node;
        node.human_actions = compress_actions(task, s, Mover::Human);
        node.agent_actions = compress_actions(task, s, Mover::Agent);
        node.edges.reserve(node.human_actions.size() * node.agent_actions.size());
        for (const auto& a : node.agent_actions) {
            for (const auto& h : node.human_actions) {
                StepResult r = step_unchecked(task, s, h, a);
                JointEdge e;
                e.steps = r.primitive_steps();
                e.captured = r.captured ? static_cast<std::int32_t>(*r.captured) : -1;
                e.next = intern(std::move(r.next));
                node.edges.push_back(e);
            }
        }
        space.nodes_[i] = std::move(node);
    }
    return space;
}

std::optional<std::size_t> StateSpace::find(const ObservableState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t StateSpace::index_of(const ObservableState& s) const {
    auto i = find(s);
    if (!i) throw MissingState("observable state was not enumerated");
    return *i;
}

std::optional<std::size_t> StateSpace::action_index(std::size_t state,
                                                    const CompressedAction& action) const {
    const StateNode& n = nodes_.at(state);
    const auto& list = action.mover == Mover::Human ? n.human_actions : n.agent_actions;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].moves == action.moves) return i;
    }
    return std::nullopt;
}

ValueTable::ValueTable(const StateSpace& space, std::size_t theta, double discount,
                       std::vector<double> values, std::vector<double> residuals)
    : space_(&space), theta_(theta), discount_(discount), values_(std::move(values)),
      residuals_(std::move(residuals)) {}

double ValueTable::q(std::size_t state, std::size_t agent_action, std::size_t human_action) const {
    const JointEdge& e = space_->node(state).edge(agent_action, human_action);
    return step_reward(space_->task(), e.steps, e.captured_target(), theta_) +
           discount_ * values_[e.next];
}

double ValueTable::q(const ObservableState& s, const CompressedAction& agent,
                     const CompressedAction& human) const {
    const double invalid = space_->task().rewards.invalid;
    auto i = space_->find(s);
    if (!i || space_->node(*i).terminal()) return invalid;
    auto a = space_->action_index(*i, agent);
    auto h = space_->action_index(*i, human);
    if (!a || !h || agent.mover != Mover::Agent || human.mover != Mover::Human) return invalid;
    return q(*i, *a, *h);
}

namespace {

// One Jacobi sweep; returns the max-norm change.
double sweep(const StateSpace& space, std::size_t theta, double discount,
             const std::vector<double>& old_values, std::vector<double>& new_values) {
    const TaskSpec& task = space.task();
    double residual = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const StateNode& node = space.node(i);
        double v = 0.0;
        if (!node.terminal()) {
            v = -std::numeric_limits<double>::infinity();
            for (const JointEdge& e : node.edges) {
                v = std::max(v, step_reward(task, e.steps, e.captured_target(), theta) +
                                    discount * old_values[e.next]);
            }
        }
        new_values[i] = v;
        residual = std::max(residual, std::abs(v - old_values[i]));
    }
    return residual;
}

}  // namespace

ValueTable value_iteration(const StateSpace& space, std::size_t theta, const PlanningConfig& cfg) {
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(cfg.discount > 0.0 && cfg.discount <= 1.0)) {
        throw std::invalid_argument("discount must lie in (0, 1]");
    }
    if (theta >= space.task().target_count()) throw std::out_of_range("theta not in task");
    std::vector<double> values(space.size(), 0.0);
    std::vector<double> next(space.size(), 0.0);
    std::vector<double> residuals;
    while (true) {
        if (static_cast<int>(residuals.size()) >= cfg.max_sweeps) {
            throw NonConvergence(cfg.max_sweeps, residuals.empty() ? 0.0 : residuals.back());
        }
        residuals.push_back(sweep(space, theta, cfg.discount, values, next));
        values.swap(next);
        if (residuals.back() <= cfg.tolerance) break;
    }
    return ValueTable(space, theta, cfg.discount, std::move(values), std::move(residuals));
}

ValueTable truncated_value_iteration(const StateSpace& space, std::size_t theta, double discount,
                                     int sweeps) {
    std::vector<double> values(space.size(), 0.0);
    std::vector<double> next(space.size(), 0.0);
    std::vector<double> residuals;
    for (int k = 0; k < sweeps; ++k) {
        residuals.push_back(sweep(space, theta, discount, values, next));
        values.swap(next);
    }
    return ValueTable(space, theta, discount, std::move(values), std::move(residuals));
}

std::size_t best_target(std::span<const ValueTable> tables) {
    if (tables.empty()) throw std::invalid_argument("best_target needs at least one table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < tables.size(); ++i) {
        if (tables[i].value(0) > tables[best].value(0) + 1e-9) best = i;
    }
    return tables[best].theta();
}

std::shared_ptr<const TaskModel> TaskModel::build(const TaskSpec& task, std::size_t cap) {
    std::shared_ptr<TaskModel> model(new TaskModel);
    model->space_ = StateSpace::enumerate(task, cap);
    const PlanningConfig cfg = PlanningConfig::for_task(task);
    for (std::size_t theta = 0; theta < task.target_count(); ++theta) {
        model->tables_.push_back(value_iteration(model->space_, theta, cfg));
    }
    model->best_ = tomguide::best_target(model->tables_);
    model->hash_ = task_hash(task);
    return model;
}

}  // namespace tomguide
