#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrl/mdp.hpp"
#include "lrl/rng.hpp"

namespace lrl {

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

// Cardinal moves, indexable by action id.
inline constexpr int kDirRow[4] = {-1, 0, 1, 0};  // up, right, down, left
inline constexpr int kDirCol[4] = {0, 1, 0, -1};
inline constexpr int kDirUp = 0, kDirRight = 1, kDirDown = 2, kDirLeft = 3;

struct GoalCell {
    Cell cell;
    double reward = 1.0;
};

/// One concrete grid layout plus its task parameters.
struct GridSpec {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> wall;  // row-major, 1 = wall
    Cell start{};
    std::vector<GoalCell> goals;
    double slip = 0.0;
    std::vector<int> actions = {kDirUp, kDirRight, kDirDown, kDirLeft};
    std::string layout_id;

    bool is_wall(Cell c) const { return wall[static_cast<size_t>(c.row) * width + c.col] != 0; }
    bool in_bounds(Cell c) const {
        return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
    }
};

inline void check_spec(const GridSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw std::invalid_argument("grid spec: dimensions must be positive");
    if (spec.wall.size() != static_cast<size_t>(spec.width) * spec.height)
        throw std::invalid_argument("grid spec: wall mask has wrong size");
    if (!spec.in_bounds(spec.start) || spec.is_wall(spec.start))
        throw std::invalid_argument("grid spec: start must be a free cell");
    for (const GoalCell& g : spec.goals) {
        if (!spec.in_bounds(g.cell) || spec.is_wall(g.cell))
            throw std::invalid_argument("grid spec: goal must be a free cell");
        if (g.reward < 0.0 || g.reward > 1.0)
            throw std::invalid_argument("grid spec: goal reward must be in [0,1]");
    }
    if (spec.slip < 0.0 || spec.slip > 1.0)
        throw std::invalid_argument("grid spec: slip must be in [0,1]");
    if (spec.actions.empty()) throw std::invalid_argument("grid spec: no actions");
    for (int d : spec.actions)
        if (d < 0 || d > 3) throw std::invalid_argument("grid spec: bad action direction");
}

/// Parses a textual grid layout: '#' wall, '.' free, 'S' start, 'G' goal
/// slot 0, digits goal slots 1-9. Slot rewards come from goal_rewards.
inline GridSpec parse_layout(const std::string& text, std::span<const double> goal_rewards,
                             const std::string& layout_id = "custom") {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw std::invalid_argument("layout: empty grid");
    GridSpec spec;
    spec.height = static_cast<int>(rows.size());
    spec.width = static_cast<int>(rows[0].size());
    spec.wall.assign(static_cast<size_t>(spec.width) * spec.height, 0);
    spec.layout_id = layout_id;
    bool have_start = false;
    for (int r = 0; r < spec.height; ++r) {
        if (static_cast<int>(rows[r].size()) != spec.width)
            throw std::invalid_argument("layout: ragged rows");
        for (int c = 0; c < spec.width; ++c) {
            const char ch = rows[r][c];
            const Cell cell{r, c};
            if (ch == '#') {
                spec.wall[static_cast<size_t>(r) * spec.width + c] = 1;
            } else if (ch == '.') {
                // free
            } else if (ch == 'S') {
                spec.start = cell;
                have_start = true;
            } else if (ch == 'G' || (ch >= '0' && ch <= '9')) {
                const int slot = (ch == 'G') ? 0 : ch - '0';
                if (slot >= static_cast<int>(goal_rewards.size()))
                    throw std::invalid_argument("layout: no reward given for goal slot " +
                                                std::to_string(slot));
                spec.goals.push_back({cell, goal_rewards[slot]});
            } else {
                throw std::invalid_argument(std::string("layout: unexpected character '") + ch +
                                            "'");
            }
        }
    }
    if (!have_start) throw std::invalid_argument("layout: missing start cell");
    check_spec(spec);
    return spec;
}

/// Builds the tabular task for a grid layout. States are the cells
/// reachable from the start, enumerated row-major. The chosen move
/// executes with probability 1 - slip; the slip mass is split evenly
/// over the other actions. Moves into walls or off the grid stay put.
/// Executing any action in a goal cell pays that cell's reward.
inline TabularMdp build_mdp(const GridSpec& spec, double gamma) {
    check_spec(spec);
    const int W = spec.width, H = spec.height;

    auto move = [&spec](Cell c, int dir) {
        const Cell n{c.row + kDirRow[dir], c.col + kDirCol[dir]};
        return (spec.in_bounds(n) && !spec.is_wall(n)) ? n : c;
    };

    // Reachable cells, row-major.
    std::vector<int> state_of(static_cast<size_t>(W) * H, -1);
    std::vector<uint8_t> seen(static_cast<size_t>(W) * H, 0);
    std::queue<Cell> frontier;
    frontier.push(spec.start);
    seen[static_cast<size_t>(spec.start.row) * W + spec.start.col] = 1;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop();
        for (int d : spec.actions) {
            const Cell n = move(c, d);
            uint8_t& mark = seen[static_cast<size_t>(n.row) * W + n.col];
            if (!mark) {
                mark = 1;
                frontier.push(n);
            }
        }
    }
    std::vector<Cell> cells;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            if (seen[static_cast<size_t>(r) * W + c]) {
                state_of[static_cast<size_t>(r) * W + c] = static_cast<int>(cells.size());
                cells.push_back({r, c});
            }

    const int S = static_cast<int>(cells.size());
    const int A = static_cast<int>(spec.actions.size());
    TabularMdp m = make_mdp(S, A, gamma,
                            state_of[static_cast<size_t>(spec.start.row) * W + spec.start.col]);

    std::map<Cell, double> goal_reward;
    for (const GoalCell& g : spec.goals) goal_reward[g.cell] = g.reward;

    for (int s = 0; s < S; ++s) {
        const Cell c = cells[s];
        const auto goal = goal_reward.find(c);
        for (int a = 0; a < A; ++a) {
            if (goal != goal_reward.end()) m.r(s, a) = goal->second;
            double* row = m.row(s, a);
            const double p_other = (A > 1) ? spec.slip / (A - 1) : 0.0;
            for (int k = 0; k < A; ++k) {
                const Cell n = move(c, spec.actions[k]);
                const int s2 = state_of[static_cast<size_t>(n.row) * W + n.col];
                row[s2] += (k == a) ? 1.0 - spec.slip : p_other;
            }
            if (A == 1) row[state_of[static_cast<size_t>(move(c, spec.actions[0]).row) * W +
                                     move(c, spec.actions[0]).col]] += spec.slip;
        }
    }
    return m;
}

enum class Family { tight, corridor, maze, heatmap };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::tight: return "tight";
        case Family::corridor: return "corridor";
        case Family::maze: return "maze";
        case Family::heatmap: return "heatmap";
    }
    return "?";
}

/// A family of tasks to draw from. Finite families carry their support
/// materialized; parametric families sample fresh layouts per draw.
struct TaskDistribution {
    Family family = Family::tight;
    uint64_t seed = 0;
    std::vector<GridSpec> support;  // materialized support, may be empty
    bool cycle = false;             // round-robin instead of uniform draws
};

namespace detail {

inline GridSpec tight_layout(SplitMix64& rng, int task_tag) {
    GridSpec spec;
    spec.width = 11;
    spec.height = 11;
    spec.wall.assign(121, 0);
    spec.start = {5, 5};
    // Three goal cells in the upper-right corner, each with its own reward.
    const Cell goal_cells[3] = {{0, 10}, {0, 9}, {1, 10}};
    for (const Cell& c : goal_cells) spec.goals.push_back({c, rng.uniform(0.8, 1.0)});
    spec.slip = rng.uniform(0.0, 0.1);
    spec.layout_id = "tight_" + std::to_string(task_tag);
    return spec;
}

inline GridSpec corridor_layout(SplitMix64& rng, int task_tag) {
    GridSpec spec;
    spec.width = 11;
    spec.height = 1;
    spec.wall.assign(11, 0);
    spec.start = {0, 5};
    spec.goals.push_back({{0, 10}, rng.uniform(0.8, 1.0)});
    spec.slip = 0.0;  // deterministic transitions
    spec.actions = {kDirLeft, kDirRight};
    spec.layout_id = "corridor_" + std::to_string(task_tag);
    return spec;
}

// Hand-transcribed approximations of the two maze wall configurations;
// qualitative trends are the target, not exact curves.
inline constexpr const char* kMazeA =
    "...........\n"
    ".G.........\n"
    ".#######...\n"
    "...........\n"
    "...#####...\n"
    ".....S.....\n"
    "...#####...\n"
    "...........\n"
    "...#######.\n"
    "...........\n"
    "...........\n";

inline constexpr const char* kMazeB =
    "...........\n"
    ".G.........\n"
    "...#######.\n"
    "...........\n"
    "...#####...\n"
    ".....S.....\n"
    "...#####...\n"
    "...........\n"
    ".#######...\n"
    "...........\n"
    "...........\n";

inline constexpr const char* kHeatmap =
    "...G\n"
    ".#..\n"
    "..#.\n"
    "S...\n";

/// Heat-map variant: every free cell pays a Gaussian reward centered on
/// the goal cell.
inline GridSpec heatmap_layout(double sigma, double slip, const std::string& id) {
    const double one[] = {1.0};
    GridSpec spec = parse_layout(kHeatmap, one, id);
    const Cell goal = spec.goals.at(0).cell;
    spec.goals.clear();
    for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
            if (spec.is_wall({r, c})) continue;
            const double d2 = static_cast<double>((r - goal.row) * (r - goal.row) +
                                                  (c - goal.col) * (c - goal.col));
            spec.goals.push_back({{r, c}, std::exp(-d2 / (2.0 * sigma * sigma))});
        }
    }
    spec.slip = slip;
    return spec;
}

}  // namespace detail

/// Builds a distribution. finite_support pre-samples that many tasks for
/// the tight family (0 keeps it parametric); maze and heatmap are always
/// finite with their two layouts.
inline TaskDistribution make_distribution(Family family, uint64_t seed, int finite_support = 0) {
    TaskDistribution dist;
    dist.family = family;
    dist.seed = seed;
    switch (family) {
        case Family::tight: {
            SplitMix64 rng(derive_seed(seed, 0x5c0ff));
            for (int i = 0; i < finite_support; ++i)
                dist.support.push_back(detail::tight_layout(rng, i));
            break;
        }
        case Family::corridor:
            break;  // parametric
        case Family::maze: {
            const double one[] = {1.0};
            dist.support.push_back(parse_layout(detail::kMazeA, one, "maze_a"));
            dist.support.push_back(parse_layout(detail::kMazeB, one, "maze_b"));
            break;
        }
        case Family::heatmap:
            dist.support.push_back(detail::heatmap_layout(1.0, 0.10, "heatmap_sigma1"));
            dist.support.push_back(detail::heatmap_layout(1.5, 0.05, "heatmap_sigma15"));
            dist.cycle = true;  // the pair experiment presents both in turn
            break;
    }
    return dist;
}

/// Draws one task. task_id names the support element for finite
/// families and the draw index otherwise.
inline std::pair<TabularMdp, int> sample_task(const TaskDistribution& dist, double gamma,
                                              SplitMix64& rng, int draw_index) {
    if (!dist.support.empty()) {
        const int n = static_cast<int>(dist.support.size());
        const int id = dist.cycle ? draw_index % n : rng.uniform_int(n);
        return {build_mdp(dist.support[id], gamma), id};
    }
    SplitMix64 local(rng.next());
    switch (dist.family) {
        case Family::tight:
            return {build_mdp(detail::tight_layout(local, draw_index), gamma), draw_index};
        case Family::corridor:
            return {build_mdp(detail::corridor_layout(local, draw_index), gamma), draw_index};
        default:
            throw std::logic_error("sample_task: family has no parametric mode");
    }
}

}  // namespace lrl
