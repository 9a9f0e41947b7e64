#include "tomguide/grid.hpp"

#include <deque>
#include <stdexcept>

namespace tomguide {

Direction reverse(Direction d) {
    switch (d) {
        case Direction::Up: return Direction::Down;
        case Direction::Right: return Direction::Left;
        case Direction::Down: return Direction::Up;
        case Direction::Left: return Direction::Right;
    }
    throw std::logic_error("bad direction");
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::Up: return "up";
        case Direction::Right: return "right";
        case Direction::Down: return "down";
        case Direction::Left: return "left";
    }
    throw std::logic_error("bad direction");
}

std::optional<Direction> parse_direction(std::string_view name) {
    for (Direction d : kDirections) {
        if (to_string(d) == name) return d;
    }
    return std::nullopt;
}

Grid::Grid(int width, int height, std::vector<bool> floor)
    : width_(width), height_(height), floor_(std::move(floor)) {
    if (width_ <= 0 || height_ <= 0 || static_cast<int>(floor_.size()) != width_ * height_) {
        throw std::invalid_argument("grid dimensions do not match cell data");
    }
    const int n = cell_count();
    dist_.assign(static_cast<std::size_t>(n) * n, -1);
    std::deque<Cell> queue;
    for (Cell src = 0; src < n; ++src) {
        if (!floor_[src]) continue;
        int* row = &dist_[static_cast<std::size_t>(src) * n];
        row[src] = 0;
        queue.assign(1, src);
        while (!queue.empty()) {
            Cell c = queue.front();
            queue.pop_front();
            for (Direction d : kDirections) {
                auto next = step(c, d);
                if (next && row[*next] < 0) {
                    row[*next] = row[c] + 1;
                    queue.push_back(*next);
                }
            }
        }
    }
}

std::optional<Cell> Grid::step(Cell from, Direction d) const {
    int r = row(from);
    int c = col(from);
    switch (d) {
        case Direction::Up: --r; break;
        case Direction::Right: ++c; break;
        case Direction::Down: ++r; break;
        case Direction::Left: --c; break;
    }
    if (!in_bounds(r, c)) return std::nullopt;
    Cell to = cell(r, c);
    if (!floor_[to]) return std::nullopt;
    return to;
}

int Grid::degree(Cell c) const {
    int n = 0;
    for (Direction d : kDirections) n += step(c, d).has_value();
    return n;
}

}  // namespace tomguide
