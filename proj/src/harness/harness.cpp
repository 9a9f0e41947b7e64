#include "tomguide/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tomguide/errors.hpp"

namespace tomguide {

namespace {

nlohmann::json cell_json(const Grid& g, Cell c) { return nlohmann::json::array({g.row(c), g.col(c)}); }

nlohmann::json cells_json(const Grid& g, const std::vector<Cell>& cells) {
    auto out = nlohmann::json::array();
    for (Cell c : cells) out.push_back(cell_json(g, c));
    return out;
}

nlohmann::json action_json(const Grid& g, const CompressedAction& a) {
    nlohmann::json j;
    auto moves = nlohmann::json::array();
    for (Direction d : a.moves) moves.push_back(std::string(to_string(d)));
    j["moves"] = std::move(moves);
    j["destination"] = cell_json(g, a.destination);
    return j;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Running: return "running";
        case EpisodeStatus::Captured: return "captured";
        case EpisodeStatus::Timeout: return "timeout";
        case EpisodeStatus::Stuck: return "stuck";
    }
    return "?";
}

nlohmann::json to_json(const TaskSpec& task, const ObservableState& s) {
    const Grid& g = task.grid;
    nlohmann::json j;
    auto pursuer = [&](const PursuerState& p) {
        nlohmann::json pj;
        pj["pos"] = cell_json(g, p.pos);
        pj["entry"] = p.entry ? nlohmann::json(std::string(to_string(*p.entry))) : nlohmann::json();
        pj["visited"] = cells_json(g, p.visited.cells());
        return pj;
    };
    j["human"] = pursuer(s.human);
    j["agent"] = pursuer(s.agent);
    auto ev = nlohmann::json::array();
    for (std::size_t i = 0; i < s.evaders.size(); ++i) {
        ev.push_back({{"id", task.target_id(i)}, {"pos", cell_json(g, s.evaders[i])}});
    }
    j["evaders"] = std::move(ev);
    j["captured"] = s.captured ? nlohmann::json(task.target_id(*s.captured)) : nlohmann::json();
    j["step_count"] = s.step_count;
    return j;
}

nlohmann::json to_json(const TaskSpec& task, const EpisodeLog& log) {
    const Grid& g = task.grid;
    nlohmann::json j;
    j["task_id"] = log.task_id;
    j["agent_type"] = std::string(to_string(log.agent));
    j["human_variant"] = log.human_variant;
    j["seed"] = log.seed;
    auto transcript = nlohmann::json::array();
    for (const auto& r : log.transcript) {
        nlohmann::json rj;
        rj["step_index"] = r.step_index;
        rj["state"] = to_json(task, r.state);
        rj["agent_action"] = action_json(g, r.agent_action);
        rj["human_action"] = action_json(g, r.human_action);
        rj["human_belief"] = r.human_belief ? nlohmann::json(r.human_belief->probs()) : nlohmann::json();
        rj["human_target"] =
            r.human_target ? nlohmann::json(task.target_id(*r.human_target)) : nlohmann::json();
        rj["agent_belief"] = r.agent_belief.probs();
        rj["reward"] = r.reward;
        rj["human_path"] = cells_json(g, r.human_path);
        auto ticks = nlohmann::json::array();
        for (const auto& t : r.evader_ticks) ticks.push_back(cells_json(g, t));
        rj["evader_ticks"] = std::move(ticks);
        rj["agent_path"] = cells_json(g, r.agent_path);
        rj["captured"] = r.captured ? nlohmann::json(task.target_id(*r.captured)) : nlohmann::json();
        transcript.push_back(std::move(rj));
    }
    j["transcript"] = std::move(transcript);
    j["outcome"] = std::string(to_string(log.status));
    j["captured_id"] = log.captured_id ? nlohmann::json(*log.captured_id) : nlohmann::json();
    j["best_id"] = log.best_id;
    j["captured_best"] = log.captured_best;
    j["warnings"] = log.warnings;
    return j;
}

EpisodeRunner::EpisodeRunner(std::shared_ptr<const AgentPolicy> policy)
    : policy_(std::move(policy)), agent_(AgentState::start(policy_)) {}

EpisodeStatus EpisodeRunner::status() const { return tomguide::status(task(), state()); }

std::size_t EpisodeRunner::agent_action() const { return agent_.select(state_); }

const std::vector<CompressedAction>& EpisodeRunner::human_actions() const {
    return model().space().node(state_).human_actions;
}

const std::vector<CompressedAction>& EpisodeRunner::agent_actions() const {
    return model().space().node(state_).agent_actions;
}

TranscriptRecord EpisodeRunner::commit(std::size_t human_action) {
    if (terminal()) throw InvalidAction("episode is already terminal");
    const StateNode& node = model().space().node(state_);
    if (human_action >= node.human_actions.size()) throw InvalidAction("human action out of range");
    const std::size_t a = agent_action();

    TranscriptRecord rec;
    rec.step_index = state().step_count;
    rec.state = state();
    rec.agent_action = node.agent_actions[a];
    rec.human_action = node.human_actions[human_action];
    StepResult r = step_unchecked(task(), state(), rec.human_action, rec.agent_action);
    rec.human_path = std::move(r.human_path);
    rec.evader_ticks = std::move(r.evader_ticks);
    rec.agent_path = std::move(r.agent_path);
    rec.captured = r.captured;
    rec.reward = step_reward(task(), static_cast<int>(rec.human_path.size() + rec.agent_path.size()),
                             r.captured, policy_->theta_star());

    BeliefUpdate upd = update_belief(*policy_, agent_.belief, state_, a, human_action);
    agent_.belief = std::move(upd.belief);
    rec.agent_belief = agent_.belief;
    rec.degenerate_belief = upd.degenerate;

    const std::size_t next = node.edge(a, human_action).next;
    if (!(model().space().state(next) == r.next)) {
        throw SolverError("enumerated successor disagrees with the environment step");
    }
    state_ = next;
    return rec;
}

EpisodeLog run_episode(std::shared_ptr<const AgentPolicy> policy, const HumanSpec& spec,
                       std::uint64_t seed) {
    const TaskModel& model = policy->model();
    std::optional<std::size_t> initial = spec.initial_target;
    if (spec.params.variant == HumanVariant::Told && !initial) initial = model.best_target();
    SimulatedHuman human = SimulatedHuman::create(spec.params, model.target_count(), seed, initial);

    EpisodeLog log;
    log.task_id = model.task().id;
    log.agent = policy->kind();
    log.human_variant = std::string(to_string(spec.params.variant));
    log.seed = seed;
    log.best_id = model.task().target_id(model.best_target());

    EpisodeRunner runner(policy);
    while (!runner.terminal()) {
        const std::size_t a = runner.agent_action();
        auto [h, updated] = simulated_human_step(human, model, runner.state_index(), a);
        if (updated.degenerate_updates > human.degenerate_updates) {
            log.warnings.push_back("step " + std::to_string(runner.step_count()) +
                                   ": degenerate human posterior, prior kept");
        }
        human = std::move(updated);
        TranscriptRecord rec = runner.commit(h);
        rec.human_belief = human.target_belief;
        rec.human_target = human.current_target;
        if (rec.degenerate_belief) {
            log.warnings.push_back("step " + std::to_string(rec.step_index) +
                                   ": degenerate agent posterior, predicted belief kept");
        }
        log.transcript.push_back(std::move(rec));
    }
    log.status = runner.status();
    if (runner.state().captured) {
        log.captured_id = model.task().target_id(*runner.state().captured);
        log.captured_best = *runner.state().captured == model.best_target();
    }
    return log;
}

std::vector<TranscriptRecord> replay_episode(std::shared_ptr<const AgentPolicy> policy,
                                             const std::vector<Direction>& human_moves) {
    EpisodeRunner runner(std::move(policy));
    std::vector<TranscriptRecord> out;
    for (Direction d : human_moves) {
        if (runner.terminal()) throw InvalidAction("replay continues past a terminal state");
        const auto& actions = runner.human_actions();
        auto it = std::find_if(actions.begin(), actions.end(),
                               [d](const CompressedAction& a) { return a.moves.front() == d; });
        if (it == actions.end()) throw InvalidAction("replayed human move is illegal");
        out.push_back(runner.commit(static_cast<std::size_t>(it - actions.begin())));
    }
    return out;
}

HumanAssignment parse_human_assignment(std::string_view name) {
    if (name == "tom") return HumanAssignment::Tom;
    if (name == "stubborn") return HumanAssignment::Stubborn;
    if (name == "told") return HumanAssignment::Told;
    if (name == "matched") return HumanAssignment::Matched;
    throw std::invalid_argument("unknown human assignment '" + std::string(name) + "'");
}

std::string_view to_string(HumanAssignment h) {
    switch (h) {
        case HumanAssignment::Tom: return "tom";
        case HumanAssignment::Stubborn: return "stubborn";
        case HumanAssignment::Told: return "told";
        case HumanAssignment::Matched: return "matched";
    }
    return "?";
}

HumanVariant variant_for(HumanAssignment h, AgentKind agent) {
    switch (h) {
        case HumanAssignment::Tom: return HumanVariant::Tom;
        case HumanAssignment::Stubborn: return HumanVariant::Stubborn;
        case HumanAssignment::Told: return HumanVariant::Told;
        case HumanAssignment::Matched:
            return agent == AgentKind::Explicit ? HumanVariant::Told : HumanVariant::Tom;
    }
    return HumanVariant::Tom;
}

BatchConfig BatchConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open batch config '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    const auto base = std::filesystem::path(path).parent_path();
    BatchConfig cfg;
    for (const auto& t : j.at("tasks")) {
        std::filesystem::path p = t.get<std::string>();
        cfg.tasks.push_back((p.is_absolute() ? p : base / p).string());
    }
    if (j.contains("agents")) {
        cfg.agents.clear();
        for (const auto& a : j["agents"]) cfg.agents.push_back(parse_agent_kind(a.get<std::string>()));
    }
    if (j.contains("human")) cfg.human = parse_human_assignment(j["human"].get<std::string>());
    cfg.n_seeds = j.value("seeds", cfg.n_seeds);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    if (j.contains("horizon")) cfg.horizon = j["horizon"].get<int>();
    cfg.threads = j.value("threads", cfg.threads);
    cfg.bootstrap_resamples = j.value("bootstrap_resamples", cfg.bootstrap_resamples);
    if (j.contains("policy_cache")) {
        std::filesystem::path p = j["policy_cache"].get<std::string>();
        cfg.policy_cache = (p.is_absolute() ? p : base / p).string();
    }
    if (cfg.n_seeds < 1) throw ValidationError("seeds must be >= 1");
    return cfg;
}

std::uint64_t episode_seed(std::uint64_t batch_seed, std::size_t task_index, AgentKind agent,
                           int replicate) {
    std::uint64_t h = splitmix64(batch_seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(task_index));
    h = splitmix64(h ^ static_cast<std::uint64_t>(agent));
    return splitmix64(h ^ static_cast<std::uint64_t>(replicate));
}

std::pair<double, double> bootstrap_interval(const std::vector<int>& flags, int resamples,
                                             std::uint64_t seed) {
    if (flags.empty()) return {0.0, 0.0};
    std::mt19937_64 rng(seed);
    const std::size_t n = flags.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        int hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += flags[rng() % n];
        m = static_cast<double>(hits) / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    auto pick = [&](double q) {
        auto idx = static_cast<std::size_t>(q * static_cast<double>(resamples - 1) + 0.5);
        return means[std::min(idx, means.size() - 1)];
    };
    return {pick(0.025), pick(0.975)};
}

BatchResult run_batch(const BatchConfig& cfg) {
    std::vector<TaskSpec> tasks;
    for (const auto& path : cfg.tasks) tasks.push_back(load_task_file(path));
    return run_batch(cfg, tasks);
}

BatchResult run_batch(const BatchConfig& cfg, const std::vector<TaskSpec>& tasks_in) {
    if (cfg.n_seeds < 1) throw ValidationError("seeds must be >= 1");
    AgentParams params;
    params.beta1 = cfg.beta1;
    params.beta2 = cfg.beta2;

    struct Cell {
        std::size_t task_index;
        AgentKind agent;
        HumanVariant human;
        std::shared_ptr<const AgentPolicy> policy;
    };
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < tasks_in.size(); ++t) {
        TaskSpec task = tasks_in[t];
        if (cfg.horizon) {
            task.horizon = *cfg.horizon;
            validate_task(task);
        }
        auto model = TaskModel::build(task);
        for (AgentKind k : cfg.agents) {
            auto policy = std::make_shared<const AgentPolicy>(
                cfg.policy_cache.empty() ? solve(model, k, params)
                                         : solve_cached(model, k, params, cfg.policy_cache));
            cells.push_back({t, k, variant_for(cfg.human, k), std::move(policy)});
        }
    }

    BatchResult result;
    result.logs.assign(cells.size(), std::vector<EpisodeLog>(static_cast<std::size_t>(cfg.n_seeds)));
    const std::size_t total = cells.size() * static_cast<std::size_t>(cfg.n_seeds);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            const std::size_t c = job / static_cast<std::size_t>(cfg.n_seeds);
            const int rep = static_cast<int>(job % static_cast<std::size_t>(cfg.n_seeds));
            try {
                HumanSpec spec;
                spec.params = {cfg.beta1, cfg.beta2, cells[c].human};
                result.logs[c][static_cast<std::size_t>(rep)] = run_episode(
                    cells[c].policy, spec, episode_seed(cfg.seed, cells[c].task_index, cells[c].agent, rep));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(total, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& logs = result.logs[c];
        const TaskSpec& task = cells[c].policy->model().task();
        MetricsRow row;
        row.task_id = task.id;
        row.task_type = task.type;
        row.agent = cells[c].agent;
        row.human = cells[c].human;
        row.n = cfg.n_seeds;
        std::vector<int> flags;
        double steps = 0.0;
        int any = 0;
        for (const auto& log : logs) {
            flags.push_back(log.captured_best ? 1 : 0);
            any += log.captured_id.has_value();
            steps += log.steps();
        }
        row.best_capture_rate =
            static_cast<double>(std::count(flags.begin(), flags.end(), 1)) / row.n;
        row.any_capture_rate = static_cast<double>(any) / row.n;
        row.mean_steps = steps / row.n;
        std::tie(row.ci_low, row.ci_high) = bootstrap_interval(
            flags, cfg.bootstrap_resamples,
            episode_seed(cfg.seed ^ 0xb007ULL, cells[c].task_index, cells[c].agent, -1));
        result.rows.push_back(row);
    }
    return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << "task_id,task_type,agent_type,human_variant,n,best_capture_rate,ci_low,ci_high,mean_steps\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,%.6f,%.6f,%.6f,%.6f\n", r.task_id.c_str(),
                      std::string(to_string(r.task_type)).c_str(),
                      std::string(to_string(r.agent)).c_str(),
                      std::string(to_string(r.human)).c_str(), r.n, r.best_capture_rate, r.ci_low,
                      r.ci_high, r.mean_steps);
        os << buf;
    }
    return os.str();
}

}  // namespace tomguide
