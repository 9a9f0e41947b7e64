#pragma once

#include <optional>
#include <vector>

#include "tomguide/state.hpp"
#include "tomguide/task.hpp"

namespace tomguide {

/// A maximal corridor-following move. An empty move list is the wait action,
/// offered only to an agent with no legal unit move.
struct CompressedAction {
    Mover mover = Mover::Human;
    std::vector<Direction> moves;
    Cell destination = 0;

    int steps() const { return static_cast<int>(moves.size()); }
    bool is_wait() const { return moves.empty(); }

    bool operator==(const CompressedAction&) const = default;
};

enum class EpisodeStatus { Running, Captured, Timeout, Stuck };

/// Result of one joint step, with the per-primitive trace used for replay
/// and animation.
struct StepResult {
    ObservableState next;
    std::vector<Cell> human_path;
    /// Evader positions after each evader tick (one tick per human primitive).
    std::vector<std::vector<Cell>> evader_ticks;
    std::vector<Cell> agent_path;
    /// Set when an evader was captured during this step.
    std::optional<std::size_t> captured;
    /// True when the capture was a cornering (evader had no move).
    bool cornered = false;

    int primitive_steps() const {
        return static_cast<int>(human_path.size() + agent_path.size());
    }
};

ObservableState initial_state(const TaskSpec& task);

/// Unit moves into floor cells that are unvisited by the mover, do not
/// reverse its entry direction, and are not occupied by the other pursuer.
/// Ordered up, right, down, left.
std::vector<Direction> legal_moves(const TaskSpec& task, const ObservableState& s, Mover mover);

/// One compressed action per legal move, extended through cells with a single
/// onward legal move and stopping on evader cells. The agent gets a single
/// wait action when it has no legal move.
std::vector<CompressedAction> compress_actions(const TaskSpec& task, const ObservableState& s,
                                               Mover mover);

/// Greedy max-min-distance flight. std::nullopt means the evader is cornered.
std::optional<Direction> evader_move(const TaskSpec& task, const ObservableState& s,
                                     std::size_t evader);

EpisodeStatus status(const TaskSpec& task, const ObservableState& s);
inline bool is_terminal(const TaskSpec& task, const ObservableState& s) {
    return status(task, s) != EpisodeStatus::Running;
}

/// Human primitives (each followed by one evader tick), then agent primitives.
/// Throws InvalidAction when either action is not legal in `s`.
StepResult step(const TaskSpec& task, const ObservableState& s, const CompressedAction& human,
                const CompressedAction& agent);

/// Variant without the legality check, for callers that took the actions
/// from compress_actions(s) themselves.
StepResult step_unchecked(const TaskSpec& task, const ObservableState& s,
                          const CompressedAction& human, const CompressedAction& agent);

/// Reward of a step for target index `theta`: step cost per executed
/// primitive plus the capture reward.
double step_reward(const TaskSpec& task, int primitive_steps,
                   std::optional<std::size_t> captured, std::size_t theta);

}  // namespace tomguide
