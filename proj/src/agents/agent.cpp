#include "tomguide/agent.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tomguide/errors.hpp"

namespace tomguide {

std::string_view to_string(AgentKind k) {
    switch (k) {
        case AgentKind::Supportive: return "supportive";
        case AgentKind::Explicit: return "explicit";
        case AgentKind::Implicit: return "implicit";
    }
    return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
    for (AgentKind k : kAgentKinds) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown agent type '" + std::string(name) + "'");
}

ThetaKernel theta_kernel(AgentKind kind, const TaskModel& model, std::size_t theta_star,
                         std::size_t state, std::size_t agent_action, double beta2) {
    const std::size_t n = model.target_count();
    ThetaKernel k(n * n, 0.0);
    switch (kind) {
        case AgentKind::Supportive:
            for (std::size_t t = 0; t < n; ++t) k[t * n + t] = 1.0;
            break;
        case AgentKind::Explicit:
            for (std::size_t t = 0; t < n; ++t) k[t * n + theta_star] = 1.0;
            break;
        case AgentKind::Implicit: {
            Belief post = Belief::uniform(n);
            try {
                post = tom_posterior(post, model, state, agent_action, beta2);
            } catch (const DegeneratePosterior&) {
                // Keep the prior.
            }
            for (std::size_t t = 0; t < n; ++t) {
                for (std::size_t u = 0; u < n; ++u) k[t * n + u] = post[u];
            }
            break;
        }
    }
    return k;
}

std::vector<double> theta_transition(AgentKind kind, const TaskModel& model,
                                     std::size_t theta_star, std::size_t state, std::size_t theta,
                                     std::size_t agent_action, double beta2) {
    const std::size_t n = model.target_count();
    ThetaKernel k = theta_kernel(kind, model, theta_star, state, agent_action, beta2);
    return {k.begin() + static_cast<std::ptrdiff_t>(theta * n),
            k.begin() + static_cast<std::ptrdiff_t>((theta + 1) * n)};
}

namespace {

constexpr double kEps = 1e-12;

double dot(const std::vector<double>& a, const AlphaVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool nearly_equal(const AlphaVector& a, const AlphaVector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > kEps * (1.0 + std::abs(a[i]))) return false;
    }
    return true;
}

// Upper envelope of lines y = v0 + (v1 - v0) x on x in [0, 1].
std::vector<AlphaVector> prune_two(std::vector<AlphaVector> vs) {
    auto slope = [](const AlphaVector& v) { return v[1] - v[0]; };
    std::sort(vs.begin(), vs.end(), [&](const AlphaVector& a, const AlphaVector& b) {
        if (slope(a) != slope(b)) return slope(a) < slope(b);
        return a[0] < b[0];
    });
    // Equal slopes: keep the highest intercept (the last one).
    std::vector<AlphaVector> lines;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i + 1 < vs.size() && std::abs(slope(vs[i]) - slope(vs[i + 1])) <= kEps) continue;
        lines.push_back(std::move(vs[i]));
    }
    auto cross = [&](const AlphaVector& a, const AlphaVector& b) {
        return (a[0] - b[0]) / (slope(b) - slope(a));
    };
    std::vector<AlphaVector> hull;
    for (auto& l : lines) {
        while (hull.size() >= 2 &&
               cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back())) {
            hull.pop_back();
        }
        hull.push_back(std::move(l));
    }
    // Drop pieces that are optimal only outside [0, 1].
    std::size_t first = 0;
    while (hull.size() - first >= 2 && cross(hull[first], hull[first + 1]) <= kEps) ++first;
    hull.erase(hull.begin(), hull.begin() + static_cast<std::ptrdiff_t>(first));
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back()) >= 1.0 - kEps) {
        hull.pop_back();
    }
    return hull;
}

std::vector<AlphaVector> prune_exact(std::vector<AlphaVector> vs, std::size_t n) {
    if (vs.size() <= 1) return vs;
    if (n == 1) {
        auto best = std::max_element(vs.begin(), vs.end(),
                                     [](const auto& a, const auto& b) { return a[0] < b[0]; });
        return {*best};
    }
    if (n == 2) return prune_two(std::move(vs));
    throw std::logic_error("exact pruning supports at most two targets");
}

// Removes duplicates and pointwise-dominated vectors.
std::vector<AlphaVector> prune_dominated(std::vector<AlphaVector> vs) {
    std::vector<AlphaVector> out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < vs.size() && !dominated; ++j) {
            if (i == j) continue;
            bool ge = true;
            bool strict = false;
            for (std::size_t t = 0; t < vs[i].size(); ++t) {
                if (vs[j][t] < vs[i][t]) ge = false;
                if (vs[j][t] > vs[i][t] + kEps) strict = true;
            }
            // Ties keep the lower index.
            dominated = ge && (strict || j < i);
        }
        if (!dominated) out.push_back(vs[i]);
    }
    return out;
}

void lattice(std::size_t n, int remaining, std::vector<int>& current,
             std::vector<std::vector<double>>& out, int resolution) {
    if (current.size() + 1 == n) {
        current.push_back(remaining);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<double>(current[i]) / resolution;
        out.push_back(std::move(b));
        current.pop_back();
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        current.push_back(k);
        lattice(n, remaining - k, current, out, resolution);
        current.pop_back();
    }
}

std::vector<std::vector<double>> belief_lattice(std::size_t n, int resolution) {
    std::vector<std::vector<double>> out;
    std::vector<int> current;
    if (n == 1) return {{1.0}};
    lattice(n, resolution, current, out, resolution);
    return out;
}

// Per-observation data for one (state, agent action) backup.
struct Branch {
    const std::vector<AlphaVector>* next_vectors;
    std::vector<double> reward;       // r(theta') for this joint outcome
    std::vector<double> probability;  // p(a_H | o, a_A; theta')
};

AlphaVector branch_vector(const ThetaKernel& kernel, const Branch& br, const AlphaVector& next,
                          double discount, std::size_t n) {
    AlphaVector g(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const double w = kernel[t * n + u] * br.probability[u];
            if (w != 0.0) s += w * (br.reward[u] + discount * next[u]);
        }
        g[t] = s;
    }
    return g;
}

}  // namespace

AgentPolicy::AgentPolicy(std::shared_ptr<const TaskModel> model, AgentKind kind, AgentParams params,
                         std::vector<std::vector<std::vector<AlphaVector>>> gamma, PlanningMeta meta)
    : model_(std::move(model)), kind_(kind), params_(params), gamma_(std::move(gamma)),
      meta_(meta) {}

double AgentPolicy::action_value(std::size_t state, std::size_t agent_action,
                                 const Belief& b) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& alpha : vectors(state, agent_action)) best = std::max(best, dot(b.probs(), alpha));
    return best;
}

double AgentPolicy::value(std::size_t state, const Belief& b) const {
    if (gamma_.at(state).empty()) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < gamma_[state].size(); ++a) best = std::max(best, action_value(state, a, b));
    return best;
}

Belief AgentPolicy::initial_belief() const {
    const std::size_t n = model_->target_count();
    if (kind_ == AgentKind::Explicit) return Belief::point(n, theta_star());
    return Belief::uniform(n);
}

AgentPolicy solve(std::shared_ptr<const TaskModel> model, AgentKind kind,
                  const AgentParams& params) {
    const StateSpace& space = model->space();
    const TaskSpec& task = space.task();
    const std::size_t n = model->target_count();
    const std::size_t theta_star = model->best_target();
    const double discount = task.discount;

    SolverMethod method = params.method;
    if (method == SolverMethod::Auto) method = n <= 2 ? SolverMethod::Exact : SolverMethod::PointBased;
    if (method == SolverMethod::Exact && n > 2) {
        throw SolverError("exact alpha-vector pruning supports at most two targets");
    }
    const auto points = belief_lattice(n, params.grid_resolution);

    PlanningMeta meta;
    meta.horizon = task.horizon;
    meta.method = method;
    meta.belief_points = method == SolverMethod::PointBased ? points.size() : 0;

    std::vector<std::vector<std::vector<AlphaVector>>> gamma(space.size());
    // Value-function vectors per state: the union over actions.
    std::vector<std::vector<AlphaVector>> value_sets(space.size());

    for (std::size_t i = space.size(); i-- > 0;) {
        const StateNode& node = space.node(i);
        if (node.terminal()) {
            value_sets[i] = {AlphaVector(n, 0.0)};
            continue;
        }
        const std::size_t n_agent = node.agent_actions.size();
        const std::size_t n_human = node.human_actions.size();
        gamma[i].resize(n_agent);
        std::vector<AlphaVector> all;
        for (std::size_t a = 0; a < n_agent; ++a) {
            const ThetaKernel kernel = theta_kernel(kind, *model, theta_star, i, a, params.beta2);
            std::vector<Branch> branches(n_human);
            for (std::size_t h = 0; h < n_human; ++h) {
                const JointEdge& e = node.edge(a, h);
                branches[h].next_vectors = &value_sets[e.next];
                branches[h].reward.resize(n);
                for (std::size_t u = 0; u < n; ++u) {
                    branches[h].reward[u] = step_reward(task, e.steps, e.captured_target(), u);
                }
                branches[h].probability.resize(n);
            }
            for (std::size_t u = 0; u < n; ++u) {
                auto dist = human_action_dist(*model, i, a, u, params.beta1);
                for (std::size_t h = 0; h < n_human; ++h) branches[h].probability[u] = dist[h];
            }

            std::vector<AlphaVector> result;
            if (method == SolverMethod::Exact) {
                result = {AlphaVector(n, 0.0)};
                for (const Branch& br : branches) {
                    std::vector<AlphaVector> g;
                    for (const auto& next : *br.next_vectors) {
                        g.push_back(branch_vector(kernel, br, next, discount, n));
                    }
                    g = prune_exact(std::move(g), n);
                    std::vector<AlphaVector> sum;
                    sum.reserve(result.size() * g.size());
                    for (const auto& x : result) {
                        for (const auto& y : g) {
                            AlphaVector z(n);
                            for (std::size_t t = 0; t < n; ++t) z[t] = x[t] + y[t];
                            sum.push_back(std::move(z));
                        }
                    }
                    result = prune_exact(std::move(sum), n);
                }
            } else {
                for (const auto& b : points) {
                    AlphaVector alpha(n, 0.0);
                    for (const Branch& br : branches) {
                        // Weight of each next target under b for this observation.
                        std::vector<double> c(n, 0.0);
                        for (std::size_t t = 0; t < n; ++t) {
                            for (std::size_t u = 0; u < n; ++u) {
                                c[u] += b[t] * kernel[t * n + u] * br.probability[u];
                            }
                        }
                        const AlphaVector* best = &br.next_vectors->front();
                        double best_v = -std::numeric_limits<double>::infinity();
                        for (const auto& next : *br.next_vectors) {
                            const double v = dot(c, next);
                            if (v > best_v + kEps) {
                                best_v = v;
                                best = &next;
                            }
                        }
                        AlphaVector g = branch_vector(kernel, br, *best, discount, n);
                        for (std::size_t t = 0; t < n; ++t) alpha[t] += g[t];
                    }
                    if (std::none_of(result.begin(), result.end(),
                                     [&](const AlphaVector& v) { return nearly_equal(v, alpha); })) {
                        result.push_back(std::move(alpha));
                    }
                }
                result = prune_dominated(std::move(result));
            }
            meta.total_vectors += result.size();
            meta.max_vectors_per_action = std::max(meta.max_vectors_per_action, result.size());
            if (meta.total_vectors > params.max_vectors) {
                throw SolverError("alpha-vector count exceeds cap of " +
                                  std::to_string(params.max_vectors));
            }
            all.insert(all.end(), result.begin(), result.end());
            gamma[i][a] = std::move(result);
        }
        value_sets[i] = method == SolverMethod::Exact ? prune_exact(std::move(all), n)
                                                      : prune_dominated(std::move(all));
    }
    return AgentPolicy(std::move(model), kind, params, std::move(gamma), meta);
}

std::size_t select_action(const AgentPolicy& policy, const Belief& belief, std::size_t state) {
    if (state >= policy.model().space().size() || policy.action_count(state) == 0) {
        throw MissingState("no policy entry for state " + std::to_string(state));
    }
    std::size_t best = 0;
    double best_v = policy.action_value(state, 0, belief);
    for (std::size_t a = 1; a < policy.action_count(state); ++a) {
        const double v = policy.action_value(state, a, belief);
        if (v > best_v + 1e-9) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

BeliefUpdate update_belief(const AgentPolicy& policy, const Belief& belief, std::size_t state,
                           std::size_t agent_action, std::size_t human_action) {
    const TaskModel& model = policy.model();
    const std::size_t n = model.target_count();
    const ThetaKernel kernel = theta_kernel(policy.kind(), model, policy.theta_star(), state,
                                            agent_action, policy.params().beta2);
    std::vector<double> predicted(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t u = 0; u < n; ++u) predicted[u] += belief[t] * kernel[t * n + u];
    }
    std::vector<double> corrected(n);
    double top = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        corrected[u] = predicted[u] *
                       human_action_dist(model, state, agent_action, u, policy.params().beta1)
                           .at(human_action);
        top = std::max(top, corrected[u]);
    }
    if (!(top >= 1e-300)) return {Belief(predicted), true};
    return {Belief(std::move(corrected)), false};
}

AgentState AgentState::start(std::shared_ptr<const AgentPolicy> policy) {
    AgentState st;
    st.belief = policy->initial_belief();
    st.policy = std::move(policy);
    return st;
}

std::string policy_cache_name(const TaskModel& model, AgentKind kind, const AgentParams& params) {
    std::ostringstream os;
    os << std::hex << model.hash() << std::dec << '_' << to_string(kind) << "_b1-" << params.beta1
       << "_b2-" << params.beta2 << "_g" << params.grid_resolution << ".policy.json";
    return os.str();
}

void save_policy(const AgentPolicy& policy, const std::string& path) {
    nlohmann::json j;
    j["task_hash"] = policy.model().hash();
    j["agent"] = std::string(to_string(policy.kind()));
    j["beta1"] = policy.params().beta1;
    j["beta2"] = policy.params().beta2;
    j["theta_star"] = policy.theta_star();
    j["state_count"] = policy.model().space().size();
    auto& states = j["gamma"] = nlohmann::json::array();
    for (std::size_t i = 0; i < policy.model().space().size(); ++i) {
        auto actions = nlohmann::json::array();
        for (std::size_t a = 0; a < policy.action_count(i); ++a) actions.push_back(policy.vectors(i, a));
        states.push_back(std::move(actions));
    }
    std::ofstream out(path);
    if (!out) throw SolverError("cannot write policy file '" + path + "'");
    out << j.dump();
}

AgentPolicy load_policy(std::shared_ptr<const TaskModel> model, AgentKind kind,
                        const AgentParams& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SolverError("cannot read policy file '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("task_hash").get<std::uint64_t>() != model->hash() ||
        j.at("agent").get<std::string>() != to_string(kind) ||
        j.at("beta1").get<double>() != params.beta1 || j.at("beta2").get<double>() != params.beta2 ||
        j.at("state_count").get<std::size_t>() != model->space().size()) {
        throw SolverError("policy file '" + path + "' does not match the task or parameters");
    }
    auto gamma = j.at("gamma").get<std::vector<std::vector<std::vector<AlphaVector>>>>();
    PlanningMeta meta;
    meta.horizon = model->task().horizon;
    meta.method = params.method;
    for (const auto& s : gamma) {
        for (const auto& a : s) {
            meta.total_vectors += a.size();
            meta.max_vectors_per_action = std::max(meta.max_vectors_per_action, a.size());
        }
    }
    return AgentPolicy(std::move(model), kind, params, std::move(gamma), meta);
}

AgentPolicy solve_cached(std::shared_ptr<const TaskModel> model, AgentKind kind,
                         const AgentParams& params, const std::string& cache_dir) {
    namespace fs = std::filesystem;
    const fs::path path = fs::path(cache_dir) / policy_cache_name(*model, kind, params);
    if (fs::exists(path)) {
        try {
            return load_policy(model, kind, params, path.string());
        } catch (const std::exception&) {
            // Stale or corrupt cache entry: rebuild below.
        }
    }
    AgentPolicy policy = solve(model, kind, params);
    fs::create_directories(cache_dir);
    save_policy(policy, path.string());
    return policy;
}

}  // namespace tomguide
