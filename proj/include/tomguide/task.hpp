#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tomguide/grid.hpp"

namespace tomguide {

/// Identifier of an evader, as written in the task file ('1'..'9').
using TargetId = int;

enum class TaskType { A, B, Dummy };

std::string_view to_string(TaskType t);

struct Rewards {
    double capture_correct = 100.0;
    double capture_wrong = -100.0;
    double step_cost = -1.0;
    double invalid = -1000.0;

    bool operator==(const Rewards&) const = default;
};

struct EvaderStart {
    TargetId id;
    Cell cell;

    bool operator==(const EvaderStart&) const = default;
};

struct TaskSpec {
    std::string id;
    TaskType type = TaskType::A;
    Grid grid;
    Cell human_start = 0;
    Cell agent_start = 0;
    /// Sorted by id; the index into this vector is the target index used by
    /// the planners.
    std::vector<EvaderStart> evaders;
    Rewards rewards;
    double discount = 0.99;
    int horizon = 30;

    std::size_t target_count() const { return evaders.size(); }
    TargetId target_id(std::size_t index) const { return evaders.at(index).id; }
    /// Index of a TargetId; throws std::out_of_range for unknown ids.
    std::size_t target_index(TargetId id) const;
    std::vector<TargetId> theta_space() const;

    bool operator==(const TaskSpec&) const = default;
};

/// Parses the ASCII task format. `default_id` is used when the header has no
/// `id` key. Throws ParseError or ValidationError.
TaskSpec parse_task(std::string_view text, std::string default_id = "task");

/// Canonical text form; parse_task(serialize_task(t)) == t.
std::string serialize_task(const TaskSpec& task);

/// Checks every TaskSpec invariant; throws ValidationError naming the first
/// violated one.
void validate_task(const TaskSpec& task);

/// FNV-1a over the canonical serialization. Keys the policy caches.
std::uint64_t task_hash(const TaskSpec& task);

TaskSpec load_task_file(const std::string& path);

}  // namespace tomguide
