#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tomguide/grid.hpp"
#include "tomguide/task.hpp"

namespace tomguide {

/// Bitset over grid cells.
class CellSet {
public:
    CellSet() = default;
    explicit CellSet(int cell_count) : words_((cell_count + 63) / 64, 0) {}

    bool contains(Cell c) const { return (words_[c >> 6] >> (c & 63)) & 1U; }
    void insert(Cell c) { words_[c >> 6] |= std::uint64_t{1} << (c & 63); }
    std::size_t size() const;
    std::vector<Cell> cells() const;

    const std::vector<std::uint64_t>& words() const { return words_; }

    bool operator==(const CellSet&) const = default;

private:
    std::vector<std::uint64_t> words_;
};

enum class Mover { Human, Agent };

/// Position and movement-history constraints of one pursuer.
struct PursuerState {
    Cell pos = 0;
    /// Direction of the last unit move; none before the first move.
    std::optional<Direction> entry;
    CellSet visited;

    bool operator==(const PursuerState&) const = default;
};

/// The observable factor of the task state.
struct ObservableState {
    PursuerState human;
    PursuerState agent;
    /// Indexed like TaskSpec::evaders.
    std::vector<Cell> evaders;
    /// Target index of the captured evader.
    std::optional<std::size_t> captured;
    int step_count = 0;

    const PursuerState& pursuer(Mover m) const { return m == Mover::Human ? human : agent; }
    PursuerState& pursuer(Mover m) { return m == Mover::Human ? human : agent; }

    bool operator==(const ObservableState&) const = default;
};

std::size_t hash_value(const ObservableState& s);

struct ObservableStateHash {
    std::size_t operator()(const ObservableState& s) const { return hash_value(s); }
};

}  // namespace tomguide
