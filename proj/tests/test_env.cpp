#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "tomguide/errors.hpp"

using namespace tomguide;

namespace {

const char* kCorridor =
    "id: corridor\n"
    "taskType: dummy\n"
    "\n"
    "P...1\n"
    "#####\n"
    "A####\n";

TaskSpec dummy(const std::string& grid) { return parse_task("taskType: dummy\n\n" + grid); }

ObservableState at(const TaskSpec& task, int hr, int hc, std::optional<Direction> entry = {}) {
    ObservableState s = initial_state(task);
    s.human.pos = task.grid.cell(hr, hc);
    s.human.entry = entry;
    s.human.visited.insert(s.human.pos);
    return s;
}

std::vector<TaskSpec> all_fixtures() {
    std::vector<TaskSpec> out;
    for (const char* name : {"a1.task", "a2.task", "a3.task", "b1.task", "b2.task", "dummy1.task",
                             "dummy2.task", "toy/fork.task", "toy/ladder.task", "toy/pocket.task",
                             "toy/forced.task", "toy/corridor.task", "toy/ring.task"}) {
        out.push_back(load_task_file(oracle::fixture(name)));
    }
    return out;
}

// Random perfect maze with two evaders.
TaskSpec random_task(std::mt19937_64& rng) {
    const int w = 5 + static_cast<int>(rng() % 6) * 2 + 1;
    const int h = 5 + static_cast<int>(rng() % 4) * 2 + 1;
    std::vector<std::string> rows(h, std::string(w, '#'));
    std::vector<std::pair<int, int>> stack{{1, 1}};
    rows[1][1] = '.';
    while (!stack.empty()) {
        auto [r, c] = stack.back();
        std::vector<std::pair<int, int>> nbrs;
        for (auto [dr, dc] : {std::pair{-2, 0}, {2, 0}, {0, -2}, {0, 2}}) {
            int nr = r + dr, nc = c + dc;
            if (nr > 0 && nr < h - 1 && nc > 0 && nc < w - 1 && rows[nr][nc] == '#') nbrs.push_back({nr, nc});
        }
        if (nbrs.empty()) {
            stack.pop_back();
            continue;
        }
        auto [nr, nc] = nbrs[rng() % nbrs.size()];
        rows[(r + nr) / 2][(c + nc) / 2] = '.';
        rows[nr][nc] = '.';
        stack.push_back({nr, nc});
    }
    std::vector<std::pair<int, int>> floor;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (rows[r][c] == '.') floor.push_back({r, c});
        }
    }
    std::shuffle(floor.begin(), floor.end(), rng);
    const char glyphs[] = {'P', 'A', '1', '2'};
    for (int k = 0; k < 4; ++k) rows[floor[k].first][floor[k].second] = glyphs[k];
    std::string text = "id: rnd\ntaskType: A\nhorizon: " + std::to_string(3 + rng() % 20) + "\n\n";
    for (const auto& r : rows) text += r + "\n";
    return parse_task(text);
}

}  // namespace

TEST_CASE("parse a 1x5 corridor") {
    TaskSpec t = parse_task(kCorridor);
    CHECK(t.id == "corridor");
    CHECK(t.type == TaskType::Dummy);
    CHECK(t.grid.width() == 5);
    CHECK(t.grid.height() == 3);
    CHECK(t.human_start == t.grid.cell(0, 0));
    REQUIRE(t.evaders.size() == 1);
    CHECK(t.evaders[0].id == 1);
    CHECK(t.evaders[0].cell == t.grid.cell(0, 4));
    CHECK(t.horizon == 30);
    CHECK(t.discount == doctest::Approx(0.99));
}

TEST_CASE("type-B fixture has two evaders") {
    TaskSpec t = load_task_file(oracle::fixture("b1.task"));
    CHECK(t.type == TaskType::B);
    CHECK(t.theta_space() == std::vector<TargetId>{1, 2});
}

TEST_CASE("unknown glyph reports line and column") {
    try {
        parse_task("id: x\n\n#####\n#P.X#\n#A1.#\n#####\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK(e.column() == 4);
    }
}

TEST_CASE("ragged rows and header errors") {
    CHECK_THROWS_AS(parse_task("#####\n#P1A\n#####\n"), ParseError);
    CHECK_THROWS_AS(parse_task("bogus: 1\n\nP.1\n###\nA##\n"), ParseError);
    CHECK_THROWS_AS(parse_task("horizon: x\n\nP.1\n###\nA##\n"), ParseError);
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(parse_task("P.1\n###\n.##\n"), ValidationError);           // no agent
    CHECK_THROWS_AS(parse_task("P..\n###\nA##\n"), ValidationError);           // no evader
    CHECK_THROWS_AS(parse_task("taskType: A\n\nP.1\n###\nA##\n"), ValidationError);
    CHECK_THROWS_AS(parse_task("taskType: dummy\nhorizon: 0\n\nP.1\n###\nA##\n"), ValidationError);
    CHECK_THROWS_AS(load_task_file(oracle::fixture("missing.task")), ValidationError);
}

TEST_CASE("serialize then parse is the identity on fixtures") {
    for (const auto& t : all_fixtures()) {
        CAPTURE(t.id);
        CHECK(parse_task(serialize_task(t)) == t);
        CHECK(task_hash(parse_task(serialize_task(t))) == task_hash(t));
    }
}

TEST_CASE("serialize then parse is the identity on random mazes") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        TaskSpec t = random_task(rng);
        REQUIRE(parse_task(serialize_task(t)) == t);
    }
}

TEST_CASE("legal moves") {
    TaskSpec t = parse_task(kCorridor);
    SUBCASE("mid-corridor entered from the left") {
        auto s = at(t, 0, 2, Direction::Right);
        CHECK(legal_moves(t, s, Mover::Human) == std::vector<Direction>{Direction::Right});
    }
    SUBCASE("dead end") {
        TaskSpec d = dummy("#####\n#P.1#\n#A###\n#####\n");
        auto s = initial_state(d);
        s.human.pos = d.grid.cell(1, 2);
        s.human.entry = Direction::Left;
        s.human.visited.insert(s.human.pos);
        s.evaders[0] = d.grid.cell(1, 1);
        CHECK(legal_moves(d, s, Mover::Human).empty());
        CHECK(status(d, s) == EpisodeStatus::Stuck);
    }
    SUBCASE("junction with a visited branch") {
        TaskSpec j = dummy(
            "#######\n"
            "#..1..#\n"
            "#.###.#\n"
            "#..P..#\n"
            "###A###\n"
            "#######\n");
        auto s = initial_state(j);
        CHECK(legal_moves(j, s, Mover::Human) ==
              std::vector<Direction>{Direction::Right, Direction::Left});
        s.human.visited.insert(j.grid.cell(3, 4));
        CHECK(legal_moves(j, s, Mover::Human) == std::vector<Direction>{Direction::Left});
    }
    SUBCASE("the other pursuer blocks") {
        TaskSpec j = dummy("#####\n#PA.#\n##1##\n#####\n");
        auto s = initial_state(j);
        CHECK(legal_moves(j, s, Mover::Human).empty());
    }
}

TEST_CASE("compressed corridor action") {
    TaskSpec t = parse_task(
        "id: c\ntaskType: dummy\n\n"
        "#######\n"
        "#P....#\n"
        "#####.#\n"
        "##A##1#\n"
        "##.####\n"
        "#######\n");
    auto s = initial_state(t);
    auto acts = compress_actions(t, s, Mover::Human);
    REQUIRE(acts.size() == 1);
    // Stops on the evader cell after turning the corner.
    CHECK(acts[0].steps() == 6);
    CHECK(acts[0].destination == t.grid.cell(3, 5));
    auto agent = compress_actions(t, s, Mover::Agent);
    REQUIRE(agent.size() == 1);
    CHECK(agent[0].steps() == 1);
}

TEST_CASE("lone agent with no move waits") {
    auto t = load_task_file(oracle::fixture("toy/corridor.task"));
    auto acts = compress_actions(t, initial_state(t), Mover::Agent);
    REQUIRE(acts.size() == 1);
    CHECK(acts[0].is_wait());
    CHECK(compress_actions(t, initial_state(t), Mover::Human).front().steps() == 2);
}

TEST_CASE("type-B agent start offers three compressed actions") {
    auto t = load_task_file(oracle::fixture("b1.task"));
    CHECK(compress_actions(t, initial_state(t), Mover::Agent).size() == 3);
}

TEST_CASE("compress then expand reproduces the unit path on every fixture state") {
    for (const auto& t : all_fixtures()) {
        StateSpace space = StateSpace::enumerate(t);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto& s = space.state(i);
            for (Mover m : {Mover::Human, Mover::Agent}) {
                for (const auto& a : compress_actions(t, s, m)) {
                    Cell c = s.pursuer(m).pos;
                    std::optional<Direction> entry = s.pursuer(m).entry;
                    CellSet seen = s.pursuer(m).visited;
                    for (Direction d : a.moves) {
                        // No reversal and no revisit along the path.
                        REQUIRE((!entry || d != reverse(*entry)));
                        auto n = t.grid.step(c, d);
                        REQUIRE(n.has_value());
                        REQUIRE(!seen.contains(*n));
                        seen.insert(*n);
                        c = *n;
                        entry = d;
                    }
                    REQUIRE(c == a.destination);
                }
            }
        }
    }
}

TEST_CASE("evader flees along a corridor") {
    TaskSpec t = dummy("#######\n#P.1..#\n#######\n#A#####\n#######\n");
    auto s = initial_state(t);
    CHECK(evader_move(t, s, 0) == Direction::Right);
}

TEST_CASE("cornered evader is captured") {
    // Between the human on the left and a dead end on the right.
    TaskSpec u = dummy("######\n#P.1.#\n####A#\n######\n");
    auto su = initial_state(u);
    su.agent.pos = u.grid.cell(1, 4);
    su.human.pos = u.grid.cell(1, 2);
    CHECK_FALSE(evader_move(u, su, 0).has_value());
}

TEST_CASE("evader moves agree with a BFS max-min oracle on every fixture state") {
    for (const auto& t : all_fixtures()) {
        StateSpace space = StateSpace::enumerate(t);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto& s = space.state(i);
            for (std::size_t e = 0; e < s.evaders.size(); ++e) {
                auto got = evader_move(t, s, e);
                auto want = oracle::evader_target(t, s, e);
                REQUIRE(got.has_value() == want.has_value());
                if (got) REQUIRE(*t.grid.step(s.evaders[e], *got) == *want);
            }
        }
    }
}

TEST_CASE("human stepping onto an evader captures and skips the later phases") {
    TaskSpec t = dummy("#####\n#P1.#\n###.#\n###A#\n#####\n");
    auto s = initial_state(t);
    auto h = compress_actions(t, s, Mover::Human).front();
    // The evader is adjacent, so the first primitive lands on it.
    auto a = compress_actions(t, s, Mover::Agent).front();
    auto r = step(t, s, h, a);
    CHECK(r.captured == std::optional<std::size_t>{0});
    CHECK(r.human_path.size() == 1);
    CHECK(r.evader_ticks.empty());
    CHECK(r.agent_path.empty());
    CHECK(status(t, r.next) == EpisodeStatus::Captured);
}

TEST_CASE("free step advances everyone") {
    auto t = load_task_file(oracle::fixture("b1.task"));
    auto s = initial_state(t);
    auto h = compress_actions(t, s, Mover::Human).front();
    auto a = compress_actions(t, s, Mover::Agent).front();
    auto r = step(t, s, h, a);
    CHECK_FALSE(r.captured.has_value());
    CHECK(r.next.human.pos == h.destination);
    CHECK(r.next.agent.pos == a.destination);
    CHECK(r.evader_ticks.size() == h.moves.size());
    CHECK(r.next.step_count == 1);
    CHECK(r.next.evaders != s.evaders);
}

TEST_CASE("step rejects illegal actions and terminal states") {
    auto t = load_task_file(oracle::fixture("b1.task"));
    auto s = initial_state(t);
    auto h = compress_actions(t, s, Mover::Human).front();
    auto a = compress_actions(t, s, Mover::Agent).front();
    CompressedAction bogus{Mover::Human, {Direction::Right}, s.human.pos + 1};
    CHECK_THROWS_AS(step(t, s, bogus, a), InvalidAction);
    CHECK_THROWS_AS(step(t, s, a, h), InvalidAction);
    auto done = s;
    done.step_count = t.horizon;
    CHECK_THROWS_AS(step(t, done, h, a), InvalidAction);
}

TEST_CASE("step is deterministic") {
    auto t = load_task_file(oracle::fixture("b2.task"));
    StateSpace space = StateSpace::enumerate(t);
    for (std::size_t i = 0; i < space.size(); i += 7) {
        const auto& node = space.node(i);
        for (const auto& h : node.human_actions) {
            for (const auto& a : node.agent_actions) {
                auto r1 = step(t, space.state(i), h, a);
                auto r2 = step(t, space.state(i), h, a);
                REQUIRE(r1.next == r2.next);
                REQUIRE(r1.evader_ticks == r2.evader_ticks);
            }
        }
    }
}

TEST_CASE("a lone pursuer never captures on a ring") {
    auto t = load_task_file(oracle::fixture("toy/ring.task"));
    StateSpace space = StateSpace::enumerate(t);
    for (std::size_t i = 0; i < space.size(); ++i) {
        CHECK_FALSE(space.state(i).captured.has_value());
    }
}

TEST_CASE("optimal play on the type-B fixture captures within the horizon") {
    auto t = load_task_file(oracle::fixture("b1.task"));
    auto model = TaskModel::build(t);
    const std::size_t theta = model->best_target();
    const auto& table = model->table(theta);
    std::size_t state = 0;
    int human_steps = 0;
    int agent_steps = 0;
    while (!model->space().node(state).terminal()) {
        const auto& node = model->space().node(state);
        std::size_t ba = 0, bh = 0;
        double best = -1e18;
        for (std::size_t a = 0; a < node.agent_actions.size(); ++a) {
            for (std::size_t h = 0; h < node.human_actions.size(); ++h) {
                if (table.q(state, a, h) > best + 1e-9) {
                    best = table.q(state, a, h);
                    ba = a;
                    bh = h;
                }
            }
        }
        auto r = step(t, model->space().state(state), node.human_actions[bh], node.agent_actions[ba]);
        human_steps += static_cast<int>(r.human_path.size());
        agent_steps += static_cast<int>(r.agent_path.size());
        state = model->space().index_of(r.next);
    }
    const auto& end = model->space().state(state);
    REQUIRE(end.captured == std::optional<std::size_t>{theta});
    CHECK(end.step_count <= t.horizon);
    // The capturing cell lies at least BFS distance away from some pursuer start.
    const Cell where = end.evaders[theta];
    const int lower = std::min(oracle::bfs(t.grid, t.human_start, where),
                               oracle::bfs(t.grid, t.agent_start, where));
    CHECK(std::max(human_steps, agent_steps) >= lower);
}
