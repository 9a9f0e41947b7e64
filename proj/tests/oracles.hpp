// Independent reference implementations used by the tests. They only rely on
// env-core dynamics (step, compress_actions) and recompute everything else
// from scratch.
#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tomguide/agent.hpp"
#include "tomguide/env.hpp"
#include "tomguide/human_model.hpp"
#include "tomguide/planning.hpp"
#include "tomguide/task.hpp"

namespace oracle {

using namespace tomguide;

inline std::string fixture(const std::string& name) {
    return std::string(TOMGUIDE_FIXTURE_DIR) + "/" + name;
}

/// Number of distinct states reachable by depth-first search.
inline std::size_t dfs_state_count(const TaskSpec& task) {
    std::unordered_set<ObservableState, ObservableStateHash> seen;
    std::vector<ObservableState> stack{initial_state(task)};
    seen.insert(stack.back());
    while (!stack.empty()) {
        ObservableState s = std::move(stack.back());
        stack.pop_back();
        if (is_terminal(task, s)) continue;
        for (const auto& h : compress_actions(task, s, Mover::Human)) {
            for (const auto& a : compress_actions(task, s, Mover::Agent)) {
                ObservableState next = step(task, s, h, a).next;
                if (seen.insert(next).second) stack.push_back(std::move(next));
            }
        }
    }
    return seen.size();
}

inline double transition_reward(const TaskSpec& task, const StepResult& r, std::size_t theta) {
    double reward = task.rewards.step_cost * static_cast<double>(r.human_path.size() + r.agent_path.size());
    if (r.captured) {
        reward += *r.captured == theta ? task.rewards.capture_correct : task.rewards.capture_wrong;
    }
    return reward;
}

/// Depth-limited joint expectimax (both movers maximize) with memoization.
/// depth < 0 searches to the end of the episode.
class Expectimax {
public:
    Expectimax(const TaskSpec& task, std::size_t theta, double discount)
        : task_(task), theta_(theta), discount_(discount) {}

    double value(const ObservableState& s, int depth) {
        if (depth == 0 || is_terminal(task_, s)) return 0.0;
        auto key = std::make_pair(hash_value(s), depth);
        auto it = memo_.find(key);
        if (it != memo_.end()) {
            for (const auto& [state, v] : it->second) {
                if (state == s) return v;
            }
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& h : compress_actions(task_, s, Mover::Human)) {
            for (const auto& a : compress_actions(task_, s, Mover::Agent)) {
                StepResult r = step(task_, s, h, a);
                const double v = transition_reward(task_, r, theta_) +
                                 discount_ * value(r.next, depth < 0 ? depth : depth - 1);
                best = std::max(best, v);
            }
        }
        memo_[key].emplace_back(s, best);
        return best;
    }

private:
    const TaskSpec& task_;
    std::size_t theta_;
    double discount_;
    std::map<std::pair<std::size_t, int>, std::vector<std::pair<ObservableState, double>>> memo_;
};

/// Plain BFS over floor cells; INT_MAX when unreachable.
inline int bfs(const Grid& g, Cell from, Cell to) {
    std::vector<int> dist(static_cast<std::size_t>(g.width() * g.height()), -1);
    std::deque<Cell> q{from};
    dist[static_cast<std::size_t>(from)] = 0;
    while (!q.empty()) {
        Cell c = q.front();
        q.pop_front();
        if (c == to) return dist[static_cast<std::size_t>(c)];
        const int r = g.row(c), col = g.col(c);
        const int dr[] = {-1, 0, 1, 0};
        const int dc[] = {0, 1, 0, -1};
        for (int k = 0; k < 4; ++k) {
            const int nr = r + dr[k], nc = col + dc[k];
            if (!g.in_bounds(nr, nc)) continue;
            const Cell n = g.cell(nr, nc);
            if (!g.is_floor(n) || dist[static_cast<std::size_t>(n)] >= 0) continue;
            dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(c)] + 1;
            q.push_back(n);
        }
    }
    return INT_MAX;
}

/// Greedy max-min flight; nullopt when cornered.
inline std::optional<Cell> evader_target(const TaskSpec& task, const ObservableState& s,
                                         std::size_t evader) {
    const Grid& g = task.grid;
    const Cell at = s.evaders[evader];
    const int dr[] = {-1, 0, 1, 0};  // up, right, down, left
    const int dc[] = {0, 1, 0, -1};
    std::optional<Cell> best;
    long best_score = -1;
    for (int k = 0; k < 4; ++k) {
        const int nr = g.row(at) + dr[k], nc = g.col(at) + dc[k];
        if (!g.in_bounds(nr, nc)) continue;
        const Cell n = g.cell(nr, nc);
        if (!g.is_floor(n) || n == s.human.pos || n == s.agent.pos) continue;
        const long score = std::min<long>(bfs(g, n, s.human.pos), bfs(g, n, s.agent.pos));
        if (score > best_score) {
            best_score = score;
            best = n;
        }
    }
    return best;
}

/// Hidden-target kernel recomputed from Eq. 3 likelihoods.
inline std::vector<std::vector<double>> kernel(AgentKind kind, const TaskModel& model,
                                               std::size_t state, std::size_t a, double beta2) {
    const std::size_t n = model.target_count();
    std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
    if (kind == AgentKind::Supportive) {
        for (std::size_t t = 0; t < n; ++t) k[t][t] = 1.0;
    } else if (kind == AgentKind::Explicit) {
        for (std::size_t t = 0; t < n; ++t) k[t][model.best_target()] = 1.0;
    } else {
        std::vector<double> w(n);
        double z = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            w[u] = agent_action_likelihood(model, state, a, u, beta2);
            z += w[u];
        }
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t u = 0; u < n; ++u) k[t][u] = z > 0 ? w[u] / z : 1.0 / static_cast<double>(n);
        }
    }
    return k;
}

/// Exhaustive belief-tree expectimax over the hidden target: the agent
/// maximizes, the target drifts through the kernel, the human answers with
/// Eq. 1 and the belief is updated by Bayes on that answer.
class BeliefTree {
public:
    BeliefTree(const TaskModel& model, AgentKind kind, double beta1, double beta2)
        : model_(model), kind_(kind), beta1_(beta1), beta2_(beta2) {}

    std::vector<double> action_values(std::size_t state, const std::vector<double>& b) {
        const TaskSpec& task = model_.task();
        const ObservableState& s = model_.space().state(state);
        const auto humans = compress_actions(task, s, Mover::Human);
        const auto agents = compress_actions(task, s, Mover::Agent);
        const std::size_t n = model_.target_count();
        std::vector<double> out;
        for (std::size_t a = 0; a < agents.size(); ++a) {
            const auto k = kernel(kind_, model_, state, a, beta2_);
            std::vector<double> predicted(n, 0.0);
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t u = 0; u < n; ++u) predicted[u] += b[t] * k[t][u];
            }
            std::vector<std::vector<double>> lik(n);
            for (std::size_t u = 0; u < n; ++u) lik[u] = human_action_dist(model_, state, a, u, beta1_);
            double total = 0.0;
            for (std::size_t h = 0; h < humans.size(); ++h) {
                StepResult r = step(task, s, humans[h], agents[a]);
                const std::size_t next = model_.space().index_of(r.next);
                std::vector<double> joint(n);
                double p_obs = 0.0;
                for (std::size_t u = 0; u < n; ++u) {
                    joint[u] = predicted[u] * lik[u][h];
                    p_obs += joint[u];
                }
                if (p_obs <= 0.0) continue;
                double immediate = 0.0;
                for (std::size_t u = 0; u < n; ++u) immediate += joint[u] * transition_reward(task, r, u);
                std::vector<double> posterior(n);
                for (std::size_t u = 0; u < n; ++u) posterior[u] = joint[u] / p_obs;
                total += immediate + task.discount * p_obs * value(next, posterior);
            }
            out.push_back(total);
        }
        return out;
    }

    double value(std::size_t state, const std::vector<double>& b) {
        if (model_.space().node(state).terminal()) return 0.0;
        auto v = action_values(state, b);
        return *std::max_element(v.begin(), v.end());
    }

private:
    const TaskModel& model_;
    AgentKind kind_;
    double beta1_;
    double beta2_;
};

}  // namespace oracle
