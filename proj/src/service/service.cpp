#include "tomguide/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>

#include "tomguide/errors.hpp"

namespace tomguide {

namespace fs = std::filesystem;

namespace {

nlohmann::json cell_json(const Grid& g, Cell c) { return nlohmann::json::array({g.row(c), g.col(c)}); }

nlohmann::json cells_json(const Grid& g, const std::vector<Cell>& cells) {
    auto out = nlohmann::json::array();
    for (Cell c : cells) out.push_back(cell_json(g, c));
    return out;
}

nlohmann::json moves_json(const CompressedAction& a) {
    auto out = nlohmann::json::array();
    for (Direction d : a.moves) out.push_back(std::string(to_string(d)));
    return out;
}

std::string now_iso() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string random_token() {
    std::random_device rd;
    std::uniform_int_distribution<unsigned> hex(0, 15);
    std::string s;
    for (int i = 0; i < 24; ++i) s.push_back("0123456789abcdef"[hex(rd)]);
    return s;
}

bool valid_token(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<QueueEntry> build_queue(const std::vector<std::string>& regular_tasks,
                                    const std::vector<std::string>& dummy_tasks, std::uint64_t seed) {
    if (regular_tasks.size() != kTasksPerSet || dummy_tasks.size() != std::size(kDummySlots)) {
        throw ValidationError("the experiment needs 5 regular tasks and 2 dummy tasks");
    }
    std::mt19937_64 rng(seed);
    std::vector<AgentKind> sets(std::begin(kAgentKinds), std::end(kAgentKinds));
    std::shuffle(sets.begin(), sets.end(), rng);
    std::vector<QueueEntry> regular;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        std::vector<std::string> order = regular_tasks;
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto& id : order) regular.push_back({id, sets[k], static_cast<int>(k)});
    }
    std::vector<QueueEntry> queue;
    std::size_t next_regular = 0;
    std::size_t next_dummy = 0;
    for (std::size_t i = 0; i < kQueueLength; ++i) {
        if (std::find(std::begin(kDummySlots), std::end(kDummySlots), i) != std::end(kDummySlots)) {
            queue.push_back({dummy_tasks[next_dummy++], AgentKind::Supportive, -1});
        } else {
            queue.push_back(regular[next_regular++]);
        }
    }
    return queue;
}

nlohmann::json step_result_json(const TaskSpec& task, std::size_t theta_star,
                                const TranscriptRecord& rec, EpisodeStatus status) {
    const Grid& g = task.grid;
    nlohmann::json j;
    j["stepIndex"] = rec.step_index;
    j["humanMoves"] = moves_json(rec.human_action);
    j["agentMoves"] = moves_json(rec.agent_action);
    j["humanPath"] = cells_json(g, rec.human_path);
    auto ticks = nlohmann::json::array();
    for (const auto& t : rec.evader_ticks) ticks.push_back(cells_json(g, t));
    j["evaderTicks"] = std::move(ticks);
    j["agentPath"] = cells_json(g, rec.agent_path);
    j["captured"] = rec.captured ? nlohmann::json(task.target_id(*rec.captured)) : nlohmann::json();
    j["capturedBest"] = rec.captured && *rec.captured == theta_star;
    j["outcome"] = std::string(to_string(status));
    j["terminal"] = status != EpisodeStatus::Running;
    return j;
}

struct ExperimentService::Session {
    std::string id;
    std::uint64_t seed = 0;
    std::string created_at;
    std::vector<QueueEntry> queue;
    std::size_t index = 0;
    std::optional<EpisodeRunner> runner;
    std::map<int, std::vector<int>> surveys;
    std::vector<nlohmann::json> records;
    std::string log_path;
    bool replaying = false;
    std::mutex busy;

    bool finished() const { return index >= queue.size(); }

    bool set_completed(int set) const {
        for (std::size_t i = 0; i < queue.size(); ++i) {
            if (queue[i].set == set && i >= index) return false;
        }
        return true;
    }

    std::optional<int> survey_due() const {
        for (int k = 0; k < static_cast<int>(std::size(kAgentKinds)); ++k) {
            if (set_completed(k) && !surveys.count(k)) return k;
        }
        return std::nullopt;
    }
};

ExperimentService::ExperimentService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    if (!fs::is_directory(cfg_.fixture_dir)) {
        throw ValidationError("fixture directory '" + cfg_.fixture_dir + "' not found");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cfg_.fixture_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".task") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        TaskSpec t = load_task_file(f.string());
        (t.type == TaskType::Dummy ? dummies_ : regular_).push_back(t.id);
        specs_.emplace(t.id, std::move(t));
    }
    if (regular_.size() != kTasksPerSet || dummies_.size() != std::size(kDummySlots)) {
        throw ValidationError("fixture directory must hold 5 regular and 2 dummy tasks");
    }

    AgentParams params;
    params.beta1 = cfg_.beta1;
    params.beta2 = cfg_.beta2;
    for (const auto& [id, spec] : specs_) {
        auto model = TaskModel::build(spec);
        for (AgentKind k : kAgentKinds) {
            if (spec.type == TaskType::Dummy && k != AgentKind::Supportive) continue;
            policies_[{id, k}] = std::make_shared<const AgentPolicy>(
                cfg_.policy_cache.empty() ? solve(model, k, params)
                                          : solve_cached(model, k, params, cfg_.policy_cache));
        }
    }
    fs::create_directories(cfg_.log_dir);
    recover();
}

ExperimentService::~ExperimentService() = default;

std::shared_ptr<const AgentPolicy> ExperimentService::policy(const std::string& task_id,
                                                             AgentKind agent) const {
    auto it = policies_.find({task_id, agent});
    if (it == policies_.end()) throw ServiceError(404, "unknown_task", "no policy for " + task_id);
    return it->second;
}

std::size_t ExperimentService::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

nlohmann::json ExperimentService::tasks() const {
    auto out = nlohmann::json::array();
    for (const auto& [id, t] : specs_) {
        out.push_back({{"id", id},
                       {"taskType", std::string(to_string(t.type))},
                       {"width", t.grid.width()},
                       {"height", t.grid.height()},
                       {"evaders", t.evaders.size()},
                       {"horizon", t.horizon}});
    }
    return out;
}

std::shared_ptr<ExperimentService::Session> ExperimentService::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + id + "'");
    return it->second;
}

void ExperimentService::append(Session& s, const nlohmann::json& record) const {
    s.records.push_back(record);
    if (s.replaying) return;
    std::ofstream out(s.log_path, std::ios::app | std::ios::binary);
    out << record.dump() + "\n";
    out.flush();
    if (!out) throw std::runtime_error("failed to write session log " + s.log_path);
}

void ExperimentService::start_episode(Session& s) const {
    s.runner.reset();
    while (!s.finished()) {
        const QueueEntry& e = s.queue[s.index];
        s.runner.emplace(policy(e.task_id, e.agent));
        if (!s.runner->terminal()) return;
        // A task whose initial state is already terminal is skipped.
        ++s.index;
        s.runner.reset();
    }
}

nlohmann::json ExperimentService::view(const Session& s) const {
    nlohmann::json j;
    j["sessionId"] = s.id;
    j["status"] = s.finished() ? "finished" : "active";
    j["queuePosition"] = s.finished() ? s.queue.size() : s.index + 1;
    j["queueLength"] = s.queue.size();
    const auto due = s.survey_due();
    j["surveyDue"] = due ? nlohmann::json(*due) : nlohmann::json();
    if (s.finished() || !s.runner) return j;

    const EpisodeRunner& r = *s.runner;
    const TaskSpec& task = r.task();
    const Grid& g = task.grid;
    const ObservableState& o = r.state();
    nlohmann::json ep;
    ep["taskId"] = task.id;
    ep["width"] = g.width();
    ep["height"] = g.height();
    auto rows = nlohmann::json::array();
    for (int row = 0; row < g.height(); ++row) {
        std::string line;
        for (int col = 0; col < g.width(); ++col) line.push_back(g.is_floor(g.cell(row, col)) ? '.' : '#');
        rows.push_back(line);
    }
    ep["grid"] = std::move(rows);
    ep["human"] = {{"pos", cell_json(g, o.human.pos)}, {"visited", cells_json(g, o.human.visited.cells())}};
    ep["agent"] = {{"pos", cell_json(g, o.agent.pos)}, {"visited", cells_json(g, o.agent.visited.cells())}};
    auto ev = nlohmann::json::array();
    for (std::size_t i = 0; i < o.evaders.size(); ++i) {
        ev.push_back({{"id", task.target_id(i)}, {"pos", cell_json(g, o.evaders[i])}});
    }
    ep["evaders"] = std::move(ev);
    ep["stepCount"] = o.step_count;
    ep["remainingSteps"] = task.horizon - o.step_count;
    auto legal = nlohmann::json::array();
    for (const auto& a : r.human_actions()) legal.push_back(std::string(to_string(a.moves.front())));
    ep["legalMoves"] = std::move(legal);
    if (r.policy().kind() == AgentKind::Explicit) {
        ep["highlightedTarget"] = task.target_id(r.model().best_target());
    }
    j["episode"] = std::move(ep);
    return j;
}

nlohmann::json ExperimentService::create_session(const nlohmann::json& body) {
    auto s = std::make_shared<Session>();
    if (body.is_object() && body.contains("seed")) {
        const auto& seed = body["seed"];
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
            throw ServiceError(422, "invalid_seed", "seed must be a non-negative integer");
        }
        s->seed = body["seed"].get<std::uint64_t>();
    } else {
        s->seed = std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32);
    }
    s->queue = build_queue(regular_, dummies_, s->seed);
    s->created_at = now_iso();
    {
        std::lock_guard lock(mutex_);
        do {
            s->id = random_token();
        } while (sessions_.count(s->id));
        s->log_path = (fs::path(cfg_.log_dir) / (s->id + ".jsonl")).string();
        sessions_[s->id] = s;
    }
    std::lock_guard guard(s->busy);
    auto queue = nlohmann::json::array();
    for (const auto& e : s->queue) {
        queue.push_back({{"taskId", e.task_id}, {"agent", std::string(to_string(e.agent))}, {"set", e.set}});
    }
    append(*s, {{"type", "session"}, {"id", s->id}, {"seed", s->seed}, {"createdAt", s->created_at},
                {"queue", queue}});
    {
        std::ofstream index(fs::path(cfg_.log_dir) / "index.jsonl", std::ios::app | std::ios::binary);
        index << nlohmann::json{{"id", s->id}, {"seed", s->seed}, {"createdAt", s->created_at}}.dump() + "\n";
    }
    start_episode(*s);
    return view(*s);
}

nlohmann::json ExperimentService::state(const std::string& id) const {
    auto s = find(id);
    std::lock_guard guard(s->busy);
    return view(*s);
}

nlohmann::json ExperimentService::action(const std::string& id, const nlohmann::json& body) {
    auto s = find(id);
    std::unique_lock guard(s->busy, std::try_to_lock);
    if (!guard.owns_lock()) throw ServiceError(409, "busy", "another action is in flight");
    if (s->finished() || !s->runner) throw ServiceError(409, "finished", "session has no active episode");
    if (auto due = s->survey_due()) {
        throw ServiceError(409, "survey_required", "survey for set " + std::to_string(*due) + " pending");
    }
    if (!body.is_object() || !body.contains("direction") || !body["direction"].is_string()) {
        throw ServiceError(422, "invalid_body", "expected {\"direction\": \"up|right|down|left\"}");
    }
    const std::optional<Direction> dir = parse_direction(body["direction"].get<std::string>());
    if (!dir) throw ServiceError(422, "invalid_direction", "unknown direction");
    EpisodeRunner& r = *s->runner;
    if (r.terminal()) throw ServiceError(409, "terminal", "episode already terminal");
    const auto& actions = r.human_actions();
    auto it = std::find_if(actions.begin(), actions.end(),
                           [&](const CompressedAction& a) { return a.moves.front() == *dir; });
    if (it == actions.end()) throw ServiceError(422, "illegal_move", "move is not legal here");

    const std::size_t theta_star = r.model().best_target();
    const QueueEntry entry = s->queue[s->index];
    TranscriptRecord rec = r.commit(static_cast<std::size_t>(it - actions.begin()));
    const EpisodeStatus st = r.status();
    nlohmann::json result = step_result_json(r.task(), theta_star, rec, st);
    append(*s, {{"type", "step"},
                {"queueIndex", s->index},
                {"taskId", entry.task_id},
                {"agent", std::string(to_string(entry.agent))},
                {"direction", std::string(to_string(*dir))},
                {"result", result}});
    if (st != EpisodeStatus::Running) {
        append(*s, {{"type", "episode_end"},
                    {"queueIndex", s->index},
                    {"taskId", entry.task_id},
                    {"outcome", std::string(to_string(st))},
                    {"captured", result["captured"]},
                    {"capturedBest", result["capturedBest"]}});
        ++s->index;
        start_episode(*s);
    }
    result["state"] = view(*s);
    return result;
}

nlohmann::json ExperimentService::survey(const std::string& id, const nlohmann::json& body) {
    auto s = find(id);
    std::unique_lock guard(s->busy, std::try_to_lock);
    if (!guard.owns_lock()) throw ServiceError(409, "busy", "another request is in flight");
    if (!body.is_object() || !body.contains("items") || !body["items"].is_array()) {
        throw ServiceError(422, "invalid_body", "expected {\"items\": [4 integers in 1..7]}");
    }
    const auto& items = body["items"];
    if (items.size() != 4) throw ServiceError(422, "invalid_items", "exactly 4 items required");
    std::vector<int> values;
    for (const auto& v : items) {
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 7) {
            throw ServiceError(422, "invalid_items", "items must be integers in 1..7");
        }
        values.push_back(v.get<int>());
    }
    int set = -1;
    if (body.contains("set")) {
        if (!body["set"].is_number_integer()) throw ServiceError(422, "invalid_set", "set must be an integer");
        set = body["set"].get<int>();
    } else if (auto due = s->survey_due()) {
        set = *due;
    } else {
        throw ServiceError(409, "no_survey_due", "no completed set awaits a survey");
    }
    if (set < 0 || set >= static_cast<int>(std::size(kAgentKinds))) {
        throw ServiceError(422, "invalid_set", "set out of range");
    }
    if (s->surveys.count(set)) throw ServiceError(409, "duplicate_survey", "survey already recorded");
    if (!s->set_completed(set)) throw ServiceError(409, "set_incomplete", "set not completed yet");
    AgentKind agent = AgentKind::Supportive;
    for (const auto& e : s->queue) {
        if (e.set == set) agent = e.agent;
    }
    append(*s, {{"type", "survey"}, {"set", set}, {"agent", std::string(to_string(agent))}, {"items", values}});
    s->surveys[set] = values;
    return {{"ok", true}, {"set", set}, {"state", view(*s)}};
}

nlohmann::json ExperimentService::log(const std::string& id) const {
    auto s = find(id);
    std::lock_guard guard(s->busy);
    return s->records;
}

void ExperimentService::recover() {
    const fs::path index = fs::path(cfg_.log_dir) / "index.jsonl";
    if (!fs::exists(index)) return;
    std::ifstream in(index);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto entry = nlohmann::json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("id")) continue;
        const std::string id = entry["id"].get<std::string>();
        if (!valid_token(id)) continue;
        auto s = std::make_shared<Session>();
        s->id = id;
        s->log_path = (fs::path(cfg_.log_dir) / (id + ".jsonl")).string();
        std::ifstream log(s->log_path);
        std::vector<nlohmann::json> records;
        while (std::getline(log, line)) {
            auto rec = nlohmann::json::parse(line, nullptr, false);
            // A torn final line from a crash is dropped.
            if (!rec.is_discarded()) records.push_back(std::move(rec));
        }
        if (records.empty() || records.front().value("type", "") != "session") continue;
        s->seed = records.front()["seed"].get<std::uint64_t>();
        s->created_at = records.front().value("createdAt", "");
        s->queue = build_queue(regular_, dummies_, s->seed);
        s->replaying = true;
        s->records.push_back(records.front());
        {
            std::lock_guard lock(mutex_);
            sessions_[id] = s;
        }
        start_episode(*s);
        for (std::size_t i = 1; i < records.size(); ++i) {
            const auto& rec = records[i];
            const std::string type = rec.value("type", "");
            if (type == "step") {
                nlohmann::json result = action(id, {{"direction", rec["direction"]}});
                result.erase("state");
                if (result != rec["result"]) {
                    recovery_warnings_.push_back(id + ": step " + std::to_string(i) + " replayed differently");
                }
            } else if (type == "survey") {
                s->surveys[rec["set"].get<int>()] = rec["items"].get<std::vector<int>>();
                s->records.push_back(rec);
            }
        }
        s->replaying = false;
    }
}

}  // namespace tomguide
