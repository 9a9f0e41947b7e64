#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace tomguide {

using Cell = int;

enum class Direction : std::uint8_t { Up = 0, Right = 1, Down = 2, Left = 3 };

/// Fixed tie-break order used everywhere a direction set is enumerated.
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Right,
                                                      Direction::Down, Direction::Left};

Direction reverse(Direction d);
std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view name);

/// Rectangular wall/floor map with precomputed all-pairs BFS distances over
/// floor cells.
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, std::vector<bool> floor);

    int width() const { return width_; }
    int height() const { return height_; }
    int cell_count() const { return width_ * height_; }

    Cell cell(int row, int col) const { return row * width_ + col; }
    int row(Cell c) const { return c / width_; }
    int col(Cell c) const { return c % width_; }

    bool in_bounds(int row, int col) const {
        return row >= 0 && row < height_ && col >= 0 && col < width_;
    }
    bool is_floor(Cell c) const { return c >= 0 && c < cell_count() && floor_[c]; }

    /// Adjacent floor cell in direction d, if any.
    std::optional<Cell> step(Cell from, Direction d) const;

    /// Number of floor neighbours.
    int degree(Cell c) const;

    /// Shortest-path length between floor cells; -1 when disconnected.
    int distance(Cell a, Cell b) const { return dist_[a * cell_count() + b]; }

    bool operator==(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_ && floor_ == other.floor_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<bool> floor_;
    std::vector<int> dist_;
};

}  // namespace tomguide
