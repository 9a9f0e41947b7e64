// Command-line entry point: solve, run, batch, validate, inspect and serve.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tomguide/agent.hpp"
#include "tomguide/errors.hpp"
#include "tomguide/harness.hpp"
#include "tomguide/service.hpp"

namespace {

using namespace tomguide;

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

AgentParams agent_params(double beta1, double beta2) {
    AgentParams p;
    p.beta1 = beta1;
    p.beta2 = beta2;
    return p;
}

int cmd_validate(const std::string& path) {
    TaskSpec task = load_task_file(path);
    std::printf("%s: ok (type %s, %zu evaders, horizon %d)\n", task.id.c_str(),
                std::string(to_string(task.type)).c_str(), task.evaders.size(), task.horizon);
    return 0;
}

int cmd_solve(const std::string& path, const std::string& agent, double beta1, double beta2,
              const std::string& cache) {
    auto model = TaskModel::build(load_task_file(path));
    const AgentKind kind = parse_agent_kind(agent);
    const auto t0 = std::chrono::steady_clock::now();
    AgentPolicy policy = solve_cached(model, kind, agent_params(beta1, beta2), cache);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = policy.meta();
    std::printf("%s %s: %zu states, theta*=%d, %zu vectors, %.2fs, cache %s\n",
                model->task().id.c_str(), agent.c_str(), model->space().size(),
                model->task().target_id(model->best_target()), m.total_vectors, secs,
                (std::filesystem::path(cache) / policy_cache_name(*model, kind, policy.params()))
                    .string()
                    .c_str());
    return 0;
}

int cmd_run(const std::string& path, const std::string& agent, const std::string& human,
            std::uint64_t seed, double beta1, double beta2, int target) {
    auto model = TaskModel::build(load_task_file(path));
    auto policy = std::make_shared<const AgentPolicy>(
        solve(model, parse_agent_kind(agent), agent_params(beta1, beta2)));
    HumanSpec spec;
    spec.params = {beta1, beta2, parse_human_variant(human)};
    if (target >= 0) spec.initial_target = model->task().target_index(target);
    EpisodeLog log = run_episode(policy, spec, seed);
    std::cout << to_json(model->task(), log).dump(2) << "\n";
    return 0;
}

int cmd_batch(const std::string& config, const std::string& out, int threads) {
    BatchConfig cfg = BatchConfig::load(config);
    if (threads >= 0) cfg.threads = threads;
    BatchResult result = run_batch(cfg);
    const std::string csv = metrics_csv(result.rows);
    if (out.empty() || out == "-") {
        std::cout << csv;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw ValidationError("cannot write '" + out + "'");
        f << csv;
    }
    return 0;
}

// Planning summary used while authoring fixtures.
int cmd_inspect(const std::string& path, double beta1, double beta2) {
    auto model = TaskModel::build(load_task_file(path));
    const TaskSpec& task = model->task();
    std::printf("%s type %s: %zu states\n", task.id.c_str(), std::string(to_string(task.type)).c_str(),
                model->space().size());
    for (std::size_t t = 0; t < model->target_count(); ++t) {
        std::printf("  V(o0; %d) = %.4f\n", task.target_id(t), model->table(t).value(0));
    }
    std::printf("  theta* = %d\n", task.target_id(model->best_target()));
    const StateNode& root = model->space().node(0);
    for (std::size_t a = 0; a < root.agent_actions.size(); ++a) {
        const auto& act = root.agent_actions[a];
        std::printf("  agent action %zu: %s x%d ->(%d,%d)  P_H(theta|a)=", a,
                    act.is_wait() ? "wait" : std::string(to_string(act.moves.front())).c_str(), act.steps(),
                    task.grid.row(act.destination), task.grid.col(act.destination));
        Belief post = tom_posterior(Belief::uniform(model->target_count()), *model, 0, a, beta2);
        for (double p : post.probs()) std::printf(" %.4f", p);
        std::printf("\n");
    }
    for (AgentKind k : kAgentKinds) {
        const auto t0 = std::chrono::steady_clock::now();
        AgentPolicy policy = solve(model, k, agent_params(beta1, beta2));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const Belief b = policy.initial_belief();
        std::printf("  %-10s a0=%zu V=%.4f vectors=%zu %.2fs\n", std::string(to_string(k)).c_str(),
                    select_action(policy, b, 0), policy.value(0, b), policy.meta().total_vectors, secs);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative pursuit-evasion planner with supportive, explicit and implicit agents"};
    app.require_subcommand(1);

    double beta1 = 1.0;
    double beta2 = 5.0;
    app.add_option("--beta1", beta1, "Human action rationality")->capture_default_str();
    app.add_option("--beta2", beta2, "Rationality the human attributes to the agent")->capture_default_str();

    std::string task_path;
    std::string agent = "implicit";
    std::string human = "tom";
    std::string cache = ".policy-cache";
    std::uint64_t seed = 1;
    int target = -1;

    auto* validate = app.add_subcommand("validate", "Parse and validate a task file");
    validate->add_option("task", task_path)->required();

    auto* solve_cmd = app.add_subcommand("solve", "Solve and cache an agent policy");
    solve_cmd->add_option("task", task_path)->required();
    solve_cmd->add_option("--agent", agent)->check(CLI::IsMember({"supportive", "explicit", "implicit"}));
    solve_cmd->add_option("--cache", cache, "Policy cache directory")->capture_default_str();

    auto* run = app.add_subcommand("run", "Run one episode and print its log as JSON");
    run->add_option("task", task_path)->required();
    run->add_option("--agent", agent)->check(CLI::IsMember({"supportive", "explicit", "implicit"}));
    run->add_option("--human", human)->check(CLI::IsMember({"tom", "stubborn", "told"}));
    run->add_option("--seed", seed);
    run->add_option("--target", target, "Initial target id for stubborn or told humans");

    std::string config;
    std::string out;
    int threads = -1;
    auto* batch = app.add_subcommand("batch", "Run a batch experiment and write metrics CSV");
    batch->add_option("--config", config)->required();
    batch->add_option("--out", out, "CSV path, '-' for stdout");
    batch->add_option("--threads", threads, "Worker threads, 0 for all cores");

    auto* inspect = app.add_subcommand("inspect", "Print planning summary for a task");
    inspect->add_option("task", task_path)->required();

    ServiceConfig svc;
    auto* serve = app.add_subcommand("serve", "Start the experiment HTTP service");
    serve->add_option("--host", svc.host)->envname("TOMGUIDE_HOST")->capture_default_str();
    serve->add_option("--port", svc.port)->envname("TOMGUIDE_PORT")->capture_default_str();
    serve->add_option("--fixtures", svc.fixture_dir)->envname("TOMGUIDE_FIXTURES")->required();
    serve->add_option("--logs", svc.log_dir)->envname("TOMGUIDE_LOGS")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return cmd_validate(task_path);
        if (*solve_cmd) return cmd_solve(task_path, agent, beta1, beta2, cache);
        if (*run) return cmd_run(task_path, agent, human, seed, beta1, beta2, target);
        if (*batch) return cmd_batch(config, out, threads);
        if (*inspect) return cmd_inspect(task_path, beta1, beta2);
        if (*serve) {
            svc.beta1 = beta1;
            svc.beta2 = beta2;
            ExperimentService service(svc);
            std::fprintf(stderr, "listening on %s:%d\n", svc.host.c_str(), svc.port);
            return serve_http(service, svc.host, svc.port) ? 0 : 1;
        }
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
