#include "tomguide/human_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tomguide/errors.hpp"

namespace tomguide {

Belief::Belief(std::vector<double> weights) : probs_(std::move(weights)) {
    double total = 0.0;
    for (double w : probs_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("belief weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("belief weights sum to zero");
    for (double& w : probs_) w /= total;
}

Belief Belief::uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0)); }

Belief Belief::point(std::size_t n, std::size_t index) {
    std::vector<double> w(n, 0.0);
    w.at(index) = 1.0;
    return Belief(std::move(w));
}

std::size_t Belief::argmax() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

bool Belief::is_point(std::size_t index, double tol) const {
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const double want = i == index ? 1.0 : 0.0;
        if (std::abs(probs_[i] - want) > tol) return false;
    }
    return true;
}

std::vector<double> softmax(std::span<const double> values, double beta) {
    if (values.empty()) return {};
    const double top = *std::max_element(values.begin(), values.end());
    std::vector<double> out(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(beta * (values[i] - top));
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

namespace {

// log of the softmax normalizer terms, so that tiny likelihoods survive.
std::vector<double> log_softmax(std::span<const double> values, double beta) {
    const double top = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += std::exp(beta * (v - top));
    const double log_z = std::log(total);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = beta * (values[i] - top) - log_z;
    return out;
}

std::vector<double> agent_action_values(const TaskModel& model, std::size_t state,
                                        std::size_t theta) {
    const StateNode& node = model.space().node(state);
    std::vector<double> values(node.agent_actions.size());
    for (std::size_t a = 0; a < values.size(); ++a) {
        values[a] = agent_action_value(model, state, a, theta);
    }
    return values;
}

}  // namespace

std::vector<double> human_action_dist(const TaskModel& model, std::size_t state,
                                      std::size_t agent_action, std::size_t theta, double beta1) {
    const StateNode& node = model.space().node(state);
    const ValueTable& table = model.table(theta);
    std::vector<double> q(node.human_actions.size());
    for (std::size_t h = 0; h < q.size(); ++h) q[h] = table.q(state, agent_action, h);
    return softmax(q, beta1);
}

double agent_action_value(const TaskModel& model, std::size_t state, std::size_t agent_action,
                          std::size_t theta) {
    const StateNode& node = model.space().node(state);
    const ValueTable& table = model.table(theta);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < node.human_actions.size(); ++h) {
        best = std::max(best, table.q(state, agent_action, h));
    }
    return best;
}

std::vector<double> agent_action_likelihoods(const TaskModel& model, std::size_t state,
                                             std::size_t theta, double beta2) {
    return softmax(agent_action_values(model, state, theta), beta2);
}

double agent_action_likelihood(const TaskModel& model, std::size_t state,
                               std::size_t agent_action, std::size_t theta, double beta2) {
    return agent_action_likelihoods(model, state, theta, beta2).at(agent_action);
}

Belief tom_posterior(const Belief& prior, const TaskModel& model, std::size_t state,
                     std::size_t agent_action, double beta2) {
    const std::size_t n = prior.size();
    std::vector<double> log_w(n, -std::numeric_limits<double>::infinity());
    for (std::size_t theta = 0; theta < n; ++theta) {
        if (prior[theta] <= 0.0) continue;
        auto log_lik = log_softmax(agent_action_values(model, state, theta), beta2);
        log_w[theta] = std::log(prior[theta]) + log_lik.at(agent_action);
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!(top >= std::log(1e-300))) throw DegeneratePosterior();
    std::vector<double> w(n);
    for (std::size_t theta = 0; theta < n; ++theta) w[theta] = std::exp(log_w[theta] - top);
    return Belief(std::move(w));
}

std::string_view to_string(HumanVariant v) {
    switch (v) {
        case HumanVariant::Tom: return "tom";
        case HumanVariant::Stubborn: return "stubborn";
        case HumanVariant::Told: return "told";
    }
    return "?";
}

HumanVariant parse_human_variant(std::string_view name) {
    if (name == "tom") return HumanVariant::Tom;
    if (name == "stubborn") return HumanVariant::Stubborn;
    if (name == "told") return HumanVariant::Told;
    throw std::invalid_argument("unknown human variant '" + std::string(name) + "'");
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

SimulatedHuman SimulatedHuman::create(const HumanParams& params, std::size_t target_count,
                                      std::uint64_t seed,
                                      std::optional<std::size_t> initial_target) {
    if (params.beta1 < 0.0 || params.beta2 < 0.0) {
        throw std::invalid_argument("rationality parameters must be >= 0");
    }
    SimulatedHuman h;
    h.params = params;
    h.rng.seed(seed);
    switch (params.variant) {
        case HumanVariant::Tom:
            h.target_belief = Belief::uniform(target_count);
            h.current_target = initial_target.value_or(0);
            break;
        case HumanVariant::Stubborn: {
            Belief u = Belief::uniform(target_count);
            h.current_target = initial_target ? *initial_target : sample_index(u.probs(), h.rng);
            h.target_belief = Belief::point(target_count, h.current_target);
            break;
        }
        case HumanVariant::Told:
            if (!initial_target) throw std::invalid_argument("told human needs a target");
            h.current_target = *initial_target;
            h.target_belief = Belief::point(target_count, h.current_target);
            break;
    }
    if (h.current_target >= target_count) throw std::out_of_range("initial target out of range");
    return h;
}

std::pair<std::size_t, SimulatedHuman> simulated_human_step(const SimulatedHuman& human,
                                                            const TaskModel& model,
                                                            std::size_t state,
                                                            std::size_t agent_action) {
    SimulatedHuman next = human;
    if (next.params.variant == HumanVariant::Tom) {
        try {
            next.target_belief = tom_posterior(next.target_belief, model, state, agent_action,
                                               next.params.beta2);
        } catch (const DegeneratePosterior&) {
            ++next.degenerate_updates;
        }
        next.current_target = sample_index(next.target_belief.probs(), next.rng);
    }
    auto dist = human_action_dist(model, state, agent_action, next.current_target,
                                  next.params.beta1);
    const std::size_t action = sample_index(dist, next.rng);
    return {action, std::move(next)};
}

}  // namespace tomguide
