// Command-line surface for the lifelong-RL toolkit: run experiments,
// plot result curves, inspect saved task libraries.

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lrl/config.hpp"
#include "lrl/csv.hpp"
#include "lrl/lifelong.hpp"
#include "lrl/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

fs::path default_out_dir(const fs::path& config_path) {
    const char* root = std::getenv("LRL_OUT_ROOT");
    const fs::path base = root != nullptr ? fs::path(root) : fs::path("out");
    return base / config_path.stem();
}

std::string first_rmax_agent(const lrl::RunRecord& rec) {
    for (int i = 0; i < rec.n_agents; ++i)
        if (rec.agent_configs[i].variant == lrl::Variant::rmax) return rec.agent_names[i];
    return "";
}

json run_metadata(const lrl::LifelongConfig& cfg, const lrl::RunRecord& rec) {
    json meta;
    meta["format_version"] = 1;
    meta["family"] = lrl::to_string(cfg.distribution.family);
    meta["support_size"] = cfg.distribution.support.size();
    meta["gamma"] = cfg.gamma;
    meta["seed"] = cfg.seed;
    meta["n_tasks"] = cfg.n_tasks;
    meta["n_episodes"] = cfg.n_episodes;
    meta["episode_len"] = cfg.episode_len;
    meta["n_repeats"] = cfg.n_repeats;
    meta["jobs"] = cfg.jobs;
    meta["optimal_return_estimator"] =
        "greedy policy of value iteration, exact finite-horizon evaluation";
    int S = 0, A = 0;
    if (!rec.libraries.empty() && !rec.libraries.front().entries.empty()) {
        S = rec.libraries.front().entries.front().model.n_states;
        A = rec.libraries.front().entries.front().model.n_actions;
    }
    meta["n_states"] = S;
    meta["n_actions"] = A;
    json agents = json::array();
    for (const lrl::AgentConfig& a : cfg.agents) {
        json ja;
        ja["name"] = a.name;
        ja["variant"] = lrl::to_string(a.variant);
        ja["n_known"] = a.n_known;
        ja["eps_q"] = a.eps_q;
        ja["epsilon"] = a.distance.epsilon;
        ja["delta"] = a.distance.delta;
        ja["vi_iteration_budget"] = lrl::vi_iteration_budget(a.gamma, a.eps_q);
        if (S > 0) ja["delta_prime"] = a.distance.delta / (4.0 * S * A);
        if (a.distance.d_prior) ja["d_prior"] = *a.distance.d_prior;
        if (a.distance.p_min) {
            ja["p_min"] = *a.distance.p_min;
            if (lrl::uses_maxqinit(a.variant))
                ja["maxqinit_threshold"] =
                    lrl::maxqinit_threshold(*a.distance.p_min, a.distance.delta);
        }
        ja["use_online_dmax"] = a.distance.use_online_dmax;
        ja["cheap_transition_bound"] = a.distance.cheap_transition_bound;
        agents.push_back(std::move(ja));
    }
    meta["agents"] = std::move(agents);
    return meta;
}

int cmd_run(const std::string& config_path, std::string out_dir, int jobs, long seed_override,
            bool force) {
    lrl::LifelongConfig cfg;
    try {
        std::string text;
        try {
            text = read_file(config_path);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitConfig;
        }
        cfg = lrl::parse_config(text);
    } catch (const lrl::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    if (seed_override >= 0) {
        cfg.seed = static_cast<uint64_t>(seed_override);
        // the support of a finite family is derived from the seed
        cfg.distribution = lrl::make_distribution(cfg.distribution.family, cfg.seed,
                                                  static_cast<int>(cfg.distribution.support.size()));
    }
    if (jobs > 0) cfg.jobs = jobs;

    fs::path out = out_dir.empty() ? default_out_dir(config_path) : fs::path(out_dir);
    if (fs::exists(out) && !fs::is_empty(out) && !force) {
        std::cerr << "output directory " << out << " is not empty (use --force)\n";
        return kExitRuntime;
    }
    fs::create_directories(out);

    const lrl::RunRecord rec = lrl::run_lifelong(cfg);
    lrl::write_returns_csv(rec, (out / "returns.csv").string());
    const std::string baseline = first_rmax_agent(rec);
    bool any_lip = false;
    for (const lrl::AgentConfig& a : cfg.agents) any_lip |= lrl::uses_lipschitz(a.variant);
    if (!baseline.empty() && any_lip) {
        lrl::write_diagnostics_csv(rec, baseline, (out / "diagnostics.csv").string());
        lrl::write_prior_use_csv(rec, baseline, (out / "prior_use.csv").string());
    }
    write_file(out / "resolved_config.ini", lrl::emit_config(cfg));
    write_file(out / "run_meta.json", run_metadata(cfg, rec).dump(2) + "\n");

    // Task libraries from repeat 0, one document per learned task.
    for (int i = 0; i < rec.n_agents; ++i) {
        const fs::path dir = out / "library" / rec.agent_names[i];
        fs::create_directories(dir);
        const lrl::TaskLibrary& lib = rec.libraries[i];
        for (size_t t = 0; t < lib.entries.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "task_%04zu.json", t);
            write_file(dir / name, lrl::to_json(lib.entries[t]).dump() + "\n");
        }
    }
    std::cout << "wrote " << rec.rows.size() << " episode rows to " << out << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    try {
        const lrl::LifelongConfig cfg = lrl::parse_config(read_file(config_path));
        std::cout << "ok: " << cfg.agents.size() << " agents, family "
                  << lrl::to_string(cfg.distribution.family) << ", " << cfg.n_tasks << " tasks x "
                  << cfg.n_episodes << " episodes x " << cfg.n_repeats << " repeats\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
}

struct ReturnsFrame {
    std::vector<std::string> agents;  // in first-appearance order
    // [agent][task][episode] -> per-repeat values
    std::map<std::string, std::map<std::pair<int, int>, std::map<int, double>>> cells;
    int n_tasks = 0, n_episodes = 0, n_repeats = 0;
};

ReturnsFrame load_returns(const fs::path& path) {
    const lrl::CsvTable table = lrl::read_csv(path.string());
    const int c_rep = table.column("repeat"), c_agent = table.column("agent");
    const int c_task = table.column("task_idx"), c_ep = table.column("episode");
    const int c_rel = table.column("relative_return");
    ReturnsFrame frame;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        const std::string& agent = row[c_agent];
        if (seen.insert(agent).second) frame.agents.push_back(agent);
        const int rep = std::stoi(row[c_rep]);
        const int task = std::stoi(row[c_task]);
        const int ep = std::stoi(row[c_ep]);
        frame.cells[agent][{task, ep}][rep] = std::stod(row[c_rel]);
        frame.n_tasks = std::max(frame.n_tasks, task + 1);
        frame.n_episodes = std::max(frame.n_episodes, ep + 1);
        frame.n_repeats = std::max(frame.n_repeats, rep + 1);
    }
    return frame;
}

int cmd_plot(const std::string& records_dir, const std::string& figure,
             std::string out_dir) {
    const fs::path records(records_dir);
    const fs::path out = out_dir.empty() ? records : fs::path(out_dir);
    fs::create_directories(out);

    if (figure == "per-task" || figure == "per-episode") {
        const ReturnsFrame frame = load_returns(records / "returns.csv");
        const bool per_task = figure == "per-task";
        lrl::SvgPlot plot(per_task ? "Average discounted return vs. tasks"
                                   : "Average discounted return vs. episodes",
                          per_task ? "task" : "episode", "relative discounted return");
        for (const std::string& agent : frame.agents) {
            const auto& cells = frame.cells.at(agent);
            const int n = per_task ? frame.n_tasks : frame.n_episodes;
            const int other = per_task ? frame.n_episodes : frame.n_tasks;
            std::vector<std::vector<double>> per_repeat(frame.n_repeats,
                                                        std::vector<double>(n, 0.0));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < other; ++j) {
                    const auto key = per_task ? std::pair{i, j} : std::pair{j, i};
                    const auto it = cells.find(key);
                    if (it == cells.end()) continue;
                    for (const auto& [rep, v] : it->second) per_repeat[rep][i] += v / other;
                }
            }
            if (!per_task)
                for (auto& series : per_repeat) series = lrl::moving_average(series, 100);
            std::vector<double> x(n), mean(n), lo(n), hi(n);
            std::vector<double> column(frame.n_repeats);
            for (int i = 0; i < n; ++i) {
                for (int r = 0; r < frame.n_repeats; ++r) column[r] = per_repeat[r][i];
                const lrl::CurvePoint p = lrl::confidence_point(column);
                x[i] = i + 1;
                mean[i] = p.mean;
                lo[i] = p.mean - p.half_width;
                hi[i] = p.mean + p.half_width;
            }
            plot.add_band(x, lo, hi);
            plot.add_series(x, mean, agent);
        }
        const fs::path file = out / (per_task ? "per_task.svg" : "per_episode.svg");
        plot.write(file.string());
        std::cout << "wrote " << file << "\n";
        return 0;
    }

    if (figure == "rho-vs-prior") {
        const lrl::CsvTable table = lrl::read_csv((records / "diagnostics.csv").string());
        const int c_prior = table.column("d_prior");
        const int c_lip = table.column("rho_lip");
        const int c_speed = table.column("rho_speedup");
        const int c_ret = table.column("rho_return");
        std::vector<std::pair<double, std::array<double, 3>>> rows;
        for (const auto& row : table.rows) {
            if (row[c_prior] == "inf") continue;
            rows.push_back({std::stod(row[c_prior]),
                            {std::stod(row[c_lip]), std::stod(row[c_speed]),
                             std::stod(row[c_ret])}});
        }
        std::sort(rows.begin(), rows.end());
        lrl::SvgPlot plot("Algorithmic properties vs. prior bound", "d_prior", "ratio");
        const char* labels[3] = {"rho_lip", "rho_speedup", "rho_return"};
        for (int k = 0; k < 3; ++k) {
            std::vector<double> x, y;
            for (const auto& [prior, vals] : rows) {
                x.push_back(prior);
                y.push_back(vals[k]);
            }
            plot.add_series(x, y, labels[k]);
        }
        const fs::path file = out / "rho_vs_prior.svg";
        plot.write(file.string());
        std::cout << "wrote " << file << "\n";
        return 0;
    }

    if (figure == "prior-use") {
        const lrl::CsvTable table = lrl::read_csv((records / "prior_use.csv").string());
        const int c_agent = table.column("agent");
        const int c_event = table.column("update_event");
        const int c_frac = table.column("fraction");
        std::map<std::string, std::vector<std::pair<int, double>>> series;
        std::vector<std::string> order;
        for (const auto& row : table.rows) {
            if (series.find(row[c_agent]) == series.end()) order.push_back(row[c_agent]);
            series[row[c_agent]].push_back({std::stoi(row[c_event]), std::stod(row[c_frac])});
        }
        lrl::SvgPlot plot("Prior use during exploration", "bound computation",
                          "fraction with d_prior < model bound");
        for (const std::string& agent : order) {
            auto& points = series[agent];
            std::sort(points.begin(), points.end());
            std::vector<double> x, y;
            for (const auto& [e, f] : points) {
                x.push_back(e);
                y.push_back(f);
            }
            plot.add_series(x, y, agent);
        }
        const fs::path file = out / "prior_use.svg";
        plot.write(file.string());
        std::cout << "wrote " << file << "\n";
        return 0;
    }

    std::cerr << "unknown figure '" << figure
              << "' (expected per-task, per-episode, rho-vs-prior, prior-use)\n";
    return kExitRuntime;
}

lrl::LearnedTask load_task(const fs::path& dir, int idx) {
    char name[32];
    std::snprintf(name, sizeof name, "task_%04d.json", idx);
    const fs::path file = dir / name;
    if (!fs::exists(file))
        throw std::runtime_error("library entry " + std::to_string(idx) + " not found at " +
                                 file.string());
    return lrl::learned_task_from_json(json::parse(read_file(file)));
}

int cmd_inspect(const std::string& library_dir, int src_idx, int dst_idx, double epsilon,
                double delta, double d_prior) {
    const lrl::LearnedTask src = load_task(library_dir, src_idx);
    const lrl::LearnedTask dst = load_task(library_dir, dst_idx);
    lrl::DistanceConfig cfg;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    if (!std::isinf(d_prior)) cfg.d_prior = d_prior;

    const lrl::PairTable fwd_model = lrl::dhat_model_table(src, dst, cfg);
    const lrl::PairTable fwd = lrl::dhat_dissimilarity(src, dst, cfg, 1e-3);
    const lrl::PairTable bwd = lrl::dhat_dissimilarity(dst, src, cfg, 1e-3);
    const lrl::PairTable bound = lrl::lipschitz_q_bound(dst, fwd, bwd);

    std::printf("distance report: src=%d dst=%d epsilon=%g delta=%g\n", src_idx, dst_idx, epsilon,
                delta);
    std::printf("%4s %3s  %-15s %12s %12s %12s\n", "s", "a", "case", "model_bound", "d_fwd",
                "d_bwd");
    for (int s = 0; s < src.model.n_states; ++s)
        for (int a = 0; a < src.model.n_actions; ++a)
            std::printf("%4d %3d  %-15s %12.6f %12.6f %12.6f\n", s, a,
                        lrl::to_string(lrl::knowledge_case(src.known, dst.known, s, a)),
                        fwd_model(s, a), fwd(s, a), bwd(s, a));

    double mn = bound.data().front(), mx = mn, sum = 0.0;
    for (double v : bound.data()) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        sum += v;
    }
    std::printf("transfer bound on Q (source q_bound + min distance): min=%.6f mean=%.6f max=%.6f\n",
                mn, sum / bound.size(), mx);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabular lifelong RL with distance-based value transfer"};
    app.require_subcommand(1);

    std::string config_path, out_dir, records_dir, figure, library_dir;
    int jobs = 0;
    long seed = -1;
    bool force = false;
    int src_idx = 0, dst_idx = 0;
    double epsilon = 0.01, delta = 0.05, d_prior = std::numeric_limits<double>::infinity();

    CLI::App* run = app.add_subcommand("run", "run a lifelong experiment");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory (default: $LRL_OUT_ROOT/<config stem>)");
    run->add_option("--jobs", jobs, "worker threads for repeats");
    run->add_option("--seed", seed, "override the config seed");
    run->add_flag("--force", force, "write into a non-empty output directory");

    CLI::App* validate = app.add_subcommand("validate-config", "parse and check a config file");
    validate->add_option("--config", config_path, "experiment config file")->required();

    CLI::App* plot = app.add_subcommand("plot", "render result figures from CSV records");
    plot->add_option("--records", records_dir, "directory with run CSVs")->required();
    plot->add_option("--figure", figure,
                     "per-task | per-episode | rho-vs-prior | prior-use")->required();
    plot->add_option("--out", out_dir, "output directory (default: records dir)");

    CLI::App* inspect = app.add_subcommand("inspect", "distance report between library entries");
    inspect->add_option("--library", library_dir, "task library directory")->required();
    inspect->add_option("--src", src_idx, "source entry index")->required();
    inspect->add_option("--dst", dst_idx, "destination entry index")->required();
    inspect->add_option("--epsilon", epsilon, "model accuracy of known pairs");
    inspect->add_option("--delta", delta, "confidence parameter");
    inspect->add_option("--d-prior", d_prior, "prior bound on the max model distance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, jobs, seed, force);
        if (validate->parsed()) return cmd_validate(config_path);
        if (plot->parsed()) return cmd_plot(records_dir, figure, out_dir);
        if (inspect->parsed())
            return cmd_inspect(library_dir, src_idx, dst_idx, epsilon, delta, d_prior);
    } catch (const lrl::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
