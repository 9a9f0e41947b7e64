#include "tomguide/env.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "tomguide/errors.hpp"

namespace tomguide {

std::size_t CellSet::size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<Cell> CellSet::cells() const {
    std::vector<Cell> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        for (int b = 0; b < 64; ++b) {
            if ((words_[w] >> b) & 1U) out.push_back(static_cast<Cell>(w * 64 + b));
        }
    }
    return out;
}

std::size_t hash_value(const ObservableState& s) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (const PursuerState* p : {&s.human, &s.agent}) {
        mix(static_cast<std::uint64_t>(p->pos));
        mix(p->entry ? static_cast<std::uint64_t>(*p->entry) + 1 : 0);
        for (auto w : p->visited.words()) mix(w);
    }
    for (Cell c : s.evaders) mix(static_cast<std::uint64_t>(c));
    mix(s.captured ? *s.captured + 1 : 0);
    mix(static_cast<std::uint64_t>(s.step_count));
    return static_cast<std::size_t>(h);
}

ObservableState initial_state(const TaskSpec& task) {
    ObservableState s;
    const int n = task.grid.cell_count();
    s.human.pos = task.human_start;
    s.human.visited = CellSet(n);
    s.human.visited.insert(task.human_start);
    s.agent.pos = task.agent_start;
    s.agent.visited = CellSet(n);
    s.agent.visited.insert(task.agent_start);
    for (const auto& e : task.evaders) s.evaders.push_back(e.cell);
    return s;
}

namespace {

std::vector<Direction> moves_from(const Grid& grid, Cell pos, std::optional<Direction> entry,
                                  const CellSet& visited, Cell blocked) {
    std::vector<Direction> out;
    for (Direction d : kDirections) {
        if (entry && d == reverse(*entry)) continue;
        auto next = grid.step(pos, d);
        if (!next || visited.contains(*next) || *next == blocked) continue;
        out.push_back(d);
    }
    return out;
}

bool has_evader(const ObservableState& s, Cell c) {
    return std::find(s.evaders.begin(), s.evaders.end(), c) != s.evaders.end();
}

std::optional<std::size_t> evader_at(const ObservableState& s, Cell c) {
    for (std::size_t i = 0; i < s.evaders.size(); ++i) {
        if (s.evaders[i] == c) return i;
    }
    return std::nullopt;
}

Cell other_pursuer(const ObservableState& s, Mover mover) {
    return mover == Mover::Human ? s.agent.pos : s.human.pos;
}

bool same_moves(const CompressedAction& a, const CompressedAction& b) {
    return a.mover == b.mover && a.moves == b.moves;
}

}  // namespace

std::vector<Direction> legal_moves(const TaskSpec& task, const ObservableState& s, Mover mover) {
    const PursuerState& p = s.pursuer(mover);
    return moves_from(task.grid, p.pos, p.entry, p.visited, other_pursuer(s, mover));
}

std::vector<CompressedAction> compress_actions(const TaskSpec& task, const ObservableState& s,
                                               Mover mover) {
    const PursuerState& p = s.pursuer(mover);
    const Cell blocked = other_pursuer(s, mover);
    std::vector<CompressedAction> actions;
    for (Direction first : legal_moves(task, s, mover)) {
        CompressedAction a{mover, {first}, *task.grid.step(p.pos, first)};
        CellSet visited = p.visited;
        visited.insert(a.destination);
        Direction entry = first;
        while (!has_evader(s, a.destination)) {
            auto onward = moves_from(task.grid, a.destination, entry, visited, blocked);
            if (onward.size() != 1) break;
            entry = onward.front();
            a.moves.push_back(entry);
            a.destination = *task.grid.step(a.destination, entry);
            visited.insert(a.destination);
        }
        actions.push_back(std::move(a));
    }
    if (actions.empty() && mover == Mover::Agent) {
        actions.push_back(CompressedAction{mover, {}, p.pos});
    }
    return actions;
}

std::optional<Direction> evader_move(const TaskSpec& task, const ObservableState& s,
                                     std::size_t evader) {
    const Grid& g = task.grid;
    const Cell from = s.evaders.at(evader);
    auto dist = [&g](Cell a, Cell b) {
        int d = g.distance(a, b);
        return d < 0 ? std::numeric_limits<int>::max() : d;
    };
    std::optional<Direction> best;
    int best_score = -1;
    for (Direction d : kDirections) {
        auto next = g.step(from, d);
        if (!next || *next == s.human.pos || *next == s.agent.pos) continue;
        const int score = std::min(dist(s.human.pos, *next), dist(s.agent.pos, *next));
        if (score > best_score) {
            best_score = score;
            best = d;
        }
    }
    return best;
}

EpisodeStatus status(const TaskSpec& task, const ObservableState& s) {
    if (s.captured) return EpisodeStatus::Captured;
    if (s.step_count >= task.horizon) return EpisodeStatus::Timeout;
    if (legal_moves(task, s, Mover::Human).empty()) return EpisodeStatus::Stuck;
    return EpisodeStatus::Running;
}

StepResult step(const TaskSpec& task, const ObservableState& s, const CompressedAction& human,
                const CompressedAction& agent) {
    if (is_terminal(task, s)) throw InvalidAction("step from a terminal state");
    if (human.mover != Mover::Human || agent.mover != Mover::Agent) {
        throw InvalidAction("action mover mismatch");
    }
    auto hs = compress_actions(task, s, Mover::Human);
    if (std::none_of(hs.begin(), hs.end(), [&](const auto& a) { return same_moves(a, human); })) {
        throw InvalidAction("illegal human action");
    }
    auto as = compress_actions(task, s, Mover::Agent);
    if (std::none_of(as.begin(), as.end(), [&](const auto& a) { return same_moves(a, agent); })) {
        throw InvalidAction("illegal agent action");
    }
    return step_unchecked(task, s, human, agent);
}

StepResult step_unchecked(const TaskSpec& task, const ObservableState& s,
                          const CompressedAction& human, const CompressedAction& agent) {
    const Grid& g = task.grid;
    StepResult r;
    r.next = s;
    ObservableState& n = r.next;
    n.step_count += 1;

    for (Direction d : human.moves) {
        n.human.pos = *g.step(n.human.pos, d);
        n.human.entry = d;
        n.human.visited.insert(n.human.pos);
        r.human_path.push_back(n.human.pos);
        if (auto hit = evader_at(n, n.human.pos)) {
            r.captured = hit;
            break;
        }
        for (std::size_t i = 0; i < n.evaders.size(); ++i) {
            auto flee = evader_move(task, n, i);
            if (!flee) {
                r.captured = i;
                r.cornered = true;
                break;
            }
            n.evaders[i] = *g.step(n.evaders[i], *flee);
        }
        r.evader_ticks.push_back(n.evaders);
        if (r.captured) break;
    }

    if (!r.captured) {
        for (Direction d : agent.moves) {
            const Cell next = *g.step(n.agent.pos, d);
            // The human may have walked into the planned path.
            if (next == n.human.pos) break;
            n.agent.pos = next;
            n.agent.entry = d;
            n.agent.visited.insert(next);
            r.agent_path.push_back(next);
            if (auto hit = evader_at(n, next)) {
                r.captured = hit;
                break;
            }
        }
    }
    n.captured = r.captured;
    return r;
}

double step_reward(const TaskSpec& task, int primitive_steps, std::optional<std::size_t> captured,
                   std::size_t theta) {
    double r = task.rewards.step_cost * primitive_steps;
    if (captured) {
        r += *captured == theta ? task.rewards.capture_correct : task.rewards.capture_wrong;
    }
    return r;
}

}  // namespace tomguide
