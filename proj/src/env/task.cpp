#include "tomguide/task.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tomguide/errors.hpp"

namespace tomguide {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        auto pos = text.find('\n');
        std::string_view line = text.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
    return lines;
}

double parse_double(std::string_view value, int line, int column) {
    // std::from_chars for double is available in libstdc++ 11.
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ParseError(line, column, "expected a number, got '" + std::string(value) + "'");
    }
    return out;
}

int parse_int(std::string_view value, int line, int column) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ParseError(line, column, "expected an integer, got '" + std::string(value) + "'");
    }
    return out;
}

TaskType parse_task_type(std::string_view value, int line, int column) {
    if (value == "A") return TaskType::A;
    if (value == "B") return TaskType::B;
    if (value == "dummy") return TaskType::Dummy;
    throw ParseError(line, column, "unknown taskType '" + std::string(value) + "'");
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

std::string_view to_string(TaskType t) {
    switch (t) {
        case TaskType::A: return "A";
        case TaskType::B: return "B";
        case TaskType::Dummy: return "dummy";
    }
    return "?";
}

std::size_t TaskSpec::target_index(TargetId id) const {
    for (std::size_t i = 0; i < evaders.size(); ++i) {
        if (evaders[i].id == id) return i;
    }
    throw std::out_of_range("unknown target id " + std::to_string(id));
}

std::vector<TargetId> TaskSpec::theta_space() const {
    std::vector<TargetId> ids;
    for (const auto& e : evaders) ids.push_back(e.id);
    return ids;
}

TaskSpec parse_task(std::string_view text, std::string default_id) {
    TaskSpec task;
    task.id = std::move(default_id);
    auto lines = split_lines(text);

    std::size_t i = 0;
    bool in_header = true;
    for (; i < lines.size() && in_header; ++i) {
        std::string_view line = trim(lines[i]);
        const int lineno = static_cast<int>(i) + 1;
        if (line.empty()) {
            in_header = false;
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            if (i == 0) {
                // No header at all; the grid starts on the first line.
                in_header = false;
                --i;
                continue;
            }
            throw ParseError(lineno, 1, "expected 'key: value' header line");
        }
        std::string_view key = trim(line.substr(0, colon));
        std::string_view value = trim(line.substr(colon + 1));
        const int vcol = static_cast<int>(lines[i].find(value.empty() ? line : value)) + 1;
        if (key == "id") {
            task.id = std::string(value);
        } else if (key == "taskType") {
            task.type = parse_task_type(value, lineno, vcol);
        } else if (key == "horizon") {
            task.horizon = parse_int(value, lineno, vcol);
        } else if (key == "discount") {
            task.discount = parse_double(value, lineno, vcol);
        } else if (key == "reward.capture_correct") {
            task.rewards.capture_correct = parse_double(value, lineno, vcol);
        } else if (key == "reward.capture_wrong") {
            task.rewards.capture_wrong = parse_double(value, lineno, vcol);
        } else if (key == "reward.step_cost") {
            task.rewards.step_cost = parse_double(value, lineno, vcol);
        } else if (key == "reward.invalid") {
            task.rewards.invalid = parse_double(value, lineno, vcol);
        } else {
            throw ParseError(lineno, 1, "unknown header key '" + std::string(key) + "'");
        }
    }

    std::vector<std::string_view> rows;
    std::size_t first_row = i;
    for (; i < lines.size(); ++i) rows.push_back(lines[i]);
    while (!rows.empty() && trim(rows.back()).empty()) rows.pop_back();
    if (rows.empty()) throw ParseError(static_cast<int>(first_row) + 1, 1, "missing grid");

    const int height = static_cast<int>(rows.size());
    const int width = static_cast<int>(rows.front().size());
    std::vector<bool> floor(static_cast<std::size_t>(width) * height, false);
    int humans = 0;
    int agents = 0;
    for (int r = 0; r < height; ++r) {
        const int lineno = static_cast<int>(first_row) + r + 1;
        if (static_cast<int>(rows[r].size()) != width) {
            throw ParseError(lineno, static_cast<int>(rows[r].size()) + 1,
                             "row length " + std::to_string(rows[r].size()) +
                                 " differs from first row length " + std::to_string(width));
        }
        for (int c = 0; c < width; ++c) {
            const char ch = rows[r][c];
            const Cell cell = r * width + c;
            switch (ch) {
                case '#': break;
                case '.': floor[cell] = true; break;
                case 'P':
                    floor[cell] = true;
                    task.human_start = cell;
                    ++humans;
                    break;
                case 'A':
                    floor[cell] = true;
                    task.agent_start = cell;
                    ++agents;
                    break;
                default:
                    if (ch >= '1' && ch <= '9') {
                        floor[cell] = true;
                        TargetId id = ch - '0';
                        for (const auto& e : task.evaders) {
                            if (e.id == id) {
                                throw ParseError(lineno, c + 1,
                                                 std::string("duplicate evader '") + ch + "'");
                            }
                        }
                        task.evaders.push_back({id, cell});
                    } else {
                        throw ParseError(lineno, c + 1,
                                         std::string("unknown glyph '") + ch + "'");
                    }
            }
        }
    }
    if (humans != 1) throw ValidationError("grid must contain exactly one 'P' human start");
    if (agents != 1) throw ValidationError("grid must contain exactly one 'A' agent start");
    std::sort(task.evaders.begin(), task.evaders.end(),
              [](const EvaderStart& a, const EvaderStart& b) { return a.id < b.id; });
    task.grid = Grid(width, height, std::move(floor));
    validate_task(task);
    return task;
}

void validate_task(const TaskSpec& task) {
    const Grid& g = task.grid;
    if (!g.is_floor(task.human_start)) throw ValidationError("human start must be a floor cell");
    if (!g.is_floor(task.agent_start)) throw ValidationError("agent start must be a floor cell");
    if (task.evaders.empty()) throw ValidationError("task needs at least one evader");
    std::set<Cell> starts{task.human_start, task.agent_start};
    std::set<TargetId> ids;
    for (const auto& e : task.evaders) {
        if (!g.is_floor(e.cell)) throw ValidationError("evader start must be a floor cell");
        starts.insert(e.cell);
        ids.insert(e.id);
    }
    if (starts.size() != task.evaders.size() + 2) {
        throw ValidationError("start cells must be pairwise distinct");
    }
    if (ids.size() != task.evaders.size()) throw ValidationError("evader ids must be unique");
    if (!std::is_sorted(task.evaders.begin(), task.evaders.end(),
                        [](const auto& a, const auto& b) { return a.id < b.id; })) {
        throw ValidationError("evaders must be sorted by id");
    }
    if (task.type != TaskType::Dummy && task.evaders.size() != 2) {
        throw ValidationError("regular tasks (type A/B) need exactly 2 evaders");
    }
    if (task.horizon < 1) throw ValidationError("horizon must be >= 1");
    if (!(task.discount > 0.0 && task.discount <= 1.0)) {
        throw ValidationError("discount must lie in (0, 1]");
    }
}

std::string serialize_task(const TaskSpec& task) {
    std::ostringstream os;
    os << "id: " << task.id << '\n';
    os << "taskType: " << to_string(task.type) << '\n';
    os << "horizon: " << task.horizon << '\n';
    os << "discount: " << format_double(task.discount) << '\n';
    os << "reward.capture_correct: " << format_double(task.rewards.capture_correct) << '\n';
    os << "reward.capture_wrong: " << format_double(task.rewards.capture_wrong) << '\n';
    os << "reward.step_cost: " << format_double(task.rewards.step_cost) << '\n';
    os << "reward.invalid: " << format_double(task.rewards.invalid) << '\n';
    os << '\n';
    const Grid& g = task.grid;
    for (int r = 0; r < g.height(); ++r) {
        for (int c = 0; c < g.width(); ++c) {
            const Cell cell = g.cell(r, c);
            char ch = g.is_floor(cell) ? '.' : '#';
            if (cell == task.human_start) ch = 'P';
            if (cell == task.agent_start) ch = 'A';
            for (const auto& e : task.evaders) {
                if (e.cell == cell) ch = static_cast<char>('0' + e.id);
            }
            os << ch;
        }
        os << '\n';
    }
    return os.str();
}

std::uint64_t task_hash(const TaskSpec& task) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : serialize_task(task)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

TaskSpec load_task_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open task file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_task(buf.str(), std::filesystem::path(path).stem().string());
}

}  // namespace tomguide
