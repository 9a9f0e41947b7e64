#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tomguide/planning.hpp"

namespace tomguide {

/// Probability vector over target indices.
class Belief {
public:
    Belief() = default;
    /// Normalizes `weights`; throws std::invalid_argument on negative or
    /// all-zero input.
    explicit Belief(std::vector<double> weights);

    static Belief uniform(std::size_t n);
    static Belief point(std::size_t n, std::size_t index);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t argmax() const;
    bool is_point(std::size_t index, double tol = 0.0) const;

    bool operator==(const Belief&) const = default;

private:
    std::vector<double> probs_;
};

/// exp(beta * v) normalized, with max subtraction.
std::vector<double> softmax(std::span<const double> values, double beta);

/// Eq. 1: p(a_H | o, a_A; theta), normalized over the human's legal actions.
std::vector<double> human_action_dist(const TaskModel& model, std::size_t state,
                                      std::size_t agent_action, std::size_t theta, double beta1);

/// Value of committing to agent action a_A under theta: the best joint
/// continuation max_{a_H} Q(o, a_A, a_H; theta).
double agent_action_value(const TaskModel& model, std::size_t state, std::size_t agent_action,
                          std::size_t theta);

/// Eq. 3 over all legal agent actions of `state`.
std::vector<double> agent_action_likelihoods(const TaskModel& model, std::size_t state,
                                             std::size_t theta, double beta2);

/// Eq. 3 for one action.
double agent_action_likelihood(const TaskModel& model, std::size_t state,
                               std::size_t agent_action, std::size_t theta, double beta2);

/// Eq. 2: posterior over the agent's target after observing a_A. Computed in
/// log space; throws DegeneratePosterior when every weight underflows.
Belief tom_posterior(const Belief& prior, const TaskModel& model, std::size_t state,
                     std::size_t agent_action, double beta2);

enum class HumanVariant { Tom, Stubborn, Told };

std::string_view to_string(HumanVariant v);
HumanVariant parse_human_variant(std::string_view name);

struct HumanParams {
    double beta1 = 1.0;
    double beta2 = 5.0;
    HumanVariant variant = HumanVariant::Tom;
};

/// Draws a uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);
/// Categorical draw; the last index absorbs rounding.
std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng);

/// A simulated player. Value type: every step returns an updated copy.
struct SimulatedHuman {
    HumanParams params;
    /// The human's belief over the agent's target.
    Belief target_belief;
    std::size_t current_target = 0;
    std::mt19937_64 rng;
    /// Count of degenerate posteriors replaced by the prior.
    int degenerate_updates = 0;

    /// Tom: uniform belief, target drawn at the first step. Stubborn: target
    /// drawn once here unless `initial_target` is given. Told: target fixed
    /// to `initial_target` (required).
    static SimulatedHuman create(const HumanParams& params, std::size_t target_count,
                                 std::uint64_t seed,
                                 std::optional<std::size_t> initial_target = std::nullopt);
};

/// One decision of the simulated human facing the agent's announced action.
/// Returns the chosen human action index and the updated human.
std::pair<std::size_t, SimulatedHuman> simulated_human_step(const SimulatedHuman& human,
                                                            const TaskModel& model,
                                                            std::size_t state,
                                                            std::size_t agent_action);

}  // namespace tomguide
