#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tomguide/errors.hpp"

using namespace tomguide;

namespace {

std::shared_ptr<const TaskModel> model_for(const char* name) {
    return TaskModel::build(load_task_file(oracle::fixture(name)));
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// Root action of b1 whose first move is `d`.
std::size_t root_action(const TaskModel& m, Direction d) {
    const auto& acts = m.space().node(0).agent_actions;
    for (std::size_t a = 0; a < acts.size(); ++a) {
        if (!acts[a].is_wait() && acts[a].moves.front() == d) return a;
    }
    FAIL("no such root action");
    return 0;
}

}  // namespace

TEST_CASE("softmax worked example") {
    std::vector<double> q{1.0, 0.0};
    auto p = softmax(q, 1.0);
    CHECK(std::round(p[0] * 1e4) / 1e4 == 0.7311);
    CHECK(std::round(p[1] * 1e4) / 1e4 == 0.2689);
    // Independent closed form.
    CHECK(std::abs(p[0] - 1.0 / (1.0 + std::exp(-1.0))) < 1e-15);
}

TEST_CASE("softmax properties") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 30.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> q(1 + rng() % 6);
        for (double& x : q) x = nd(rng);
        const double beta = uniform01(rng) * 10.0;
        auto p = softmax(q, beta);
        REQUIRE(std::abs(sum(p) - 1.0) <= 1e-9);
        const double range = *std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end());
        // Strict positivity holds until exp underflows.
        if (beta * range < 700.0) {
            for (double x : p) REQUIRE(x > 0.0);
        }
        auto u = softmax(q, 0.0);
        for (double x : u) REQUIRE(std::abs(x - 1.0 / static_cast<double>(q.size())) < 1e-15);
        const double c = nd(rng) * 100.0;
        std::vector<double> shifted = q;
        for (double& x : shifted) x += c;
        auto ps = softmax(shifted, beta);
        for (std::size_t i = 0; i < q.size(); ++i) REQUIRE(std::abs(ps[i] - p[i]) < 1e-9);
        REQUIRE(std::max_element(ps.begin(), ps.end()) - ps.begin() ==
                std::max_element(p.begin(), p.end()) - p.begin());
    }
}

TEST_CASE("large beta concentrates on the argmax") {
    std::vector<double> q{1.0, 0.0, -2.0};
    auto p = softmax(q, 50.0);
    CHECK(p[0] > 0.999999);
    CHECK(p[1] < 1e-20);
    CHECK(softmax(q, 1e6)[0] == 1.0);
}

TEST_CASE("Eq. 1 distribution is normalized over the human's actions") {
    auto m = model_for("b1.task");
    for (std::size_t i = 0; i < m->space().size(); ++i) {
        const auto& node = m->space().node(i);
        if (node.terminal()) continue;
        for (std::size_t a = 0; a < node.agent_actions.size(); ++a) {
            for (std::size_t t = 0; t < 2; ++t) {
                auto p = human_action_dist(*m, i, a, t, 1.0);
                REQUIRE(p.size() == node.human_actions.size());
                REQUIRE(std::abs(sum(p) - 1.0) <= 1e-9);
                auto u = human_action_dist(*m, i, a, t, 0.0);
                for (double x : u) REQUIRE(x == doctest::Approx(1.0 / static_cast<double>(u.size())));
            }
        }
    }
}

TEST_CASE("Eq. 3 likelihoods use the best joint continuation") {
    auto m = model_for("b1.task");
    const auto& node = m->space().node(0);
    for (std::size_t t = 0; t < 2; ++t) {
        std::vector<double> v;
        for (std::size_t a = 0; a < node.agent_actions.size(); ++a) {
            double best = -1e300;
            for (std::size_t h = 0; h < node.human_actions.size(); ++h) {
                best = std::max(best, m->table(t).q(0, a, h));
            }
            v.push_back(best);
            CHECK(agent_action_value(*m, 0, a, t) == best);
        }
        auto lik = agent_action_likelihoods(*m, 0, t, 5.0);
        CHECK(std::abs(sum(lik) - 1.0) <= 1e-9);
        double z = 0.0;
        for (double x : v) z += std::exp(5.0 * (x - v[0]));
        CHECK(std::abs(lik[0] - 1.0 / z) < 1e-12);
    }
}

TEST_CASE("posterior after the upper detour favors the upper target") {
    auto m = model_for("b1.task");
    const std::size_t up = root_action(*m, Direction::Up);
    const auto post = tom_posterior(Belief::uniform(2), *m, 0, up, 5.0);
    // Bayes by hand from the Eq. 3 likelihoods.
    const double l0 = agent_action_likelihood(*m, 0, up, 0, 5.0);
    const double l1 = agent_action_likelihood(*m, 0, up, 1, 5.0);
    CHECK(std::abs(post[0] - l0 / (l0 + l1)) < 1e-12);
    CHECK(post[0] > 0.9);
}

TEST_CASE("uniform likelihoods leave the prior unchanged") {
    auto m = model_for("b1.task");
    const std::size_t up = root_action(*m, Direction::Up);
    Belief prior({0.3, 0.7});
    auto post = tom_posterior(prior, *m, 0, up, 0.0);
    CHECK(std::abs(post[0] - 0.3) < 1e-15);
}

TEST_CASE("posterior is order consistent") {
    auto m = model_for("b1.task");
    const auto& space = m->space();
    const std::size_t s1 = space.node(0).edge(0, 0).next;
    REQUIRE_FALSE(space.node(s1).terminal());
    for (std::size_t a0 = 0; a0 < space.node(0).agent_actions.size(); ++a0) {
        for (std::size_t a1 = 0; a1 < space.node(s1).agent_actions.size(); ++a1) {
            for (double beta2 : {0.05, 0.5, 1.0}) {
                Belief prior({0.4, 0.6});
                auto seq = tom_posterior(tom_posterior(prior, *m, 0, a0, beta2), *m, s1, a1, beta2);
                auto rev = tom_posterior(tom_posterior(prior, *m, s1, a1, beta2), *m, 0, a0, beta2);
                std::vector<double> joint(2);
                for (std::size_t t = 0; t < 2; ++t) {
                    joint[t] = prior[t] * agent_action_likelihood(*m, 0, a0, t, beta2) *
                               agent_action_likelihood(*m, s1, a1, t, beta2);
                }
                Belief j(joint);
                REQUIRE(std::abs(seq[0] - j[0]) < 1e-12);
                REQUIRE(std::abs(rev[0] - j[0]) < 1e-12);
            }
        }
    }
}

TEST_CASE("posterior never raises the least likely target") {
    std::mt19937_64 rng(11);
    for (const char* name : {"b1.task", "a1.task", "a3.task"}) {
        auto m = model_for(name);
        for (std::size_t i = 0; i < m->space().size(); i += 3) {
            const auto& node = m->space().node(i);
            if (node.terminal()) continue;
            for (std::size_t a = 0; a < node.agent_actions.size(); ++a) {
                const double l0 = agent_action_likelihood(*m, i, a, 0, 5.0);
                const double l1 = agent_action_likelihood(*m, i, a, 1, 5.0);
                if (l0 == l1) continue;
                const std::size_t low = l0 < l1 ? 0 : 1;
                const double p = 0.05 + 0.9 * uniform01(rng);
                Belief prior({p, 1.0 - p});
                try {
                    auto post = tom_posterior(prior, *m, i, a, 5.0);
                    REQUIRE(post[low] <= prior[low] + 1e-15);
                } catch (const DegeneratePosterior&) {
                }
            }
        }
    }
}

TEST_CASE("all-underflow posterior is reported") {
    auto m = model_for("b1.task");
    const auto& node = m->space().node(0);
    // An action that is suboptimal under every target.
    auto dominated = [&](std::size_t a, std::size_t t) {
        for (std::size_t b = 0; b < node.agent_actions.size(); ++b) {
            if (agent_action_value(*m, 0, b, t) > agent_action_value(*m, 0, a, t) + 1e-6) return true;
        }
        return false;
    };
    std::optional<std::size_t> bad;
    for (std::size_t a = 0; a < node.agent_actions.size(); ++a) {
        if (dominated(a, 0) && dominated(a, 1)) bad = a;
    }
    REQUIRE(bad.has_value());
    CHECK_THROWS_AS(tom_posterior(Belief::uniform(2), *m, 0, *bad, 1e7), DegeneratePosterior);
    HumanParams hp{1.0, 1e7, HumanVariant::Tom};
    auto h = SimulatedHuman::create(hp, 2, 5);
    auto [act, next] = simulated_human_step(h, *m, 0, *bad);
    CHECK(next.degenerate_updates == 1);
    CHECK(next.target_belief == Belief::uniform(2));
    CHECK(act < node.human_actions.size());
}

TEST_CASE("stubborn human keeps its target") {
    auto m = model_for("b1.task");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto h = SimulatedHuman::create({1.0, 5.0, HumanVariant::Stubborn}, 2, seed);
        const std::size_t t0 = h.current_target;
        std::size_t state = 0;
        std::mt19937_64 rng(seed);
        while (!m->space().node(state).terminal()) {
            const auto& node = m->space().node(state);
            const std::size_t a = rng() % node.agent_actions.size();
            auto [act, next] = simulated_human_step(h, *m, state, a);
            h = next;
            REQUIRE(h.current_target == t0);
            state = node.edge(a, act).next;
        }
    }
}

TEST_CASE("told human samples from the Eq. 1 distribution of its target") {
    auto m = model_for("b1.task");
    auto h = SimulatedHuman::create({1.0, 5.0, HumanVariant::Told}, 2, 9, 1);
    CHECK_THROWS(SimulatedHuman::create({1.0, 5.0, HumanVariant::Told}, 2, 9));
    for (std::size_t a = 0; a < m->space().node(0).agent_actions.size(); ++a) {
        std::mt19937_64 mirror = h.rng;
        auto dist = human_action_dist(*m, 0, a, 1, 1.0);
        auto [act, next] = simulated_human_step(h, *m, 0, a);
        CHECK(act == sample_index(dist, mirror));
        CHECK(next.current_target == 1);
        h = next;
    }
}

TEST_CASE("seeded humans are deterministic") {
    auto m = model_for("b2.task");
    for (auto v : {HumanVariant::Tom, HumanVariant::Stubborn}) {
        auto a = SimulatedHuman::create({1.0, 5.0, v}, 2, 42);
        auto b = SimulatedHuman::create({1.0, 5.0, v}, 2, 42);
        for (std::size_t k = 0; k < m->space().node(0).agent_actions.size(); ++k) {
            auto [x, na] = simulated_human_step(a, *m, 0, k);
            auto [y, nb] = simulated_human_step(b, *m, 0, k);
            CHECK(x == y);
            CHECK(na.current_target == nb.current_target);
            a = na;
            b = nb;
        }
    }
}

TEST_CASE("sampling helpers") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(rng);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    std::vector<double> p{0.0, 1.0, 0.0};
    for (int i = 0; i < 100; ++i) REQUIRE(sample_index(p, rng) == 1);
    CHECK_THROWS_AS(Belief({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Belief({-1.0, 2.0}), std::invalid_argument);
    CHECK(Belief({1.0, 3.0})[1] == 0.75);
}

TEST_CASE("tom target switching matches posterior mass") {
    auto m = model_for("b1.task");
    const std::size_t up = root_action(*m, Direction::Up);
    // Pick a rationality that leaves the posterior away from 0 and 1.
    double beta2 = 0.0;
    double mass = 0.0;
    for (double b : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
        mass = tom_posterior(Belief::uniform(2), *m, 0, up, b)[0];
        beta2 = b;
        if (mass > 0.2 && mass < 0.8) break;
    }
    REQUIRE(mass > 0.2);
    REQUIRE(mass < 0.8);
    const int trials = 1000;
    int hits = 0;
    for (int k = 0; k < trials; ++k) {
        auto h = SimulatedHuman::create({1.0, beta2, HumanVariant::Tom}, 2, 1000 + k);
        auto [act, next] = simulated_human_step(h, *m, 0, up);
        (void)act;
        hits += next.current_target == 0;
    }
    const double freq = static_cast<double>(hits) / trials;
    const double sigma = std::sqrt(mass * (1.0 - mass) / trials);
    CHECK(std::abs(freq - mass) <= 3.0 * sigma);
}
