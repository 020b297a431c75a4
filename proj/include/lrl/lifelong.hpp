#pragma once

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lrl/agent.hpp"
#include "lrl/dp.hpp"
#include "lrl/envs.hpp"
#include "lrl/mdp.hpp"
#include "lrl/rng.hpp"

namespace lrl {

struct LifelongConfig {
    TaskDistribution distribution;
    int n_tasks = 15;
    int n_episodes = 2000;
    int episode_len = 10;
    int n_repeats = 10;
    std::vector<AgentConfig> agents;
    double gamma = 0.9;
    uint64_t seed = 0;
    int jobs = 1;

    void check() const {
        if (n_tasks <= 0 || n_episodes <= 0 || episode_len <= 0 || n_repeats <= 0)
            throw std::invalid_argument("lifelong config: counts must be positive");
        if (agents.empty()) throw std::invalid_argument("lifelong config: agents must be nonempty");
        if (gamma < 0.0 || gamma >= 1.0)
            throw std::invalid_argument("lifelong config: need 0 <= gamma < 1");
        if (jobs <= 0) throw std::invalid_argument("lifelong config: jobs must be positive");
        for (const AgentConfig& a : agents) a.check();
    }
};

struct EpisodeRow {
    int repeat = 0;
    int agent = 0;
    int task_idx = 0;
    int task_id = 0;
    int episode = 0;
    double ret = 0.0;       // discounted return from the initial state
    double rel_ret = 0.0;   // relative to the optimal-return estimate
};

/// Per (repeat, agent, task) bookkeeping for the speed-up and prior-use
/// diagnostics.
struct TaskRunInfo {
    int repeat = 0;
    int agent = 0;
    int task_idx = 0;
    long last_update_step = -1;  // within-task step of the last model update
    long total_steps = 0;
    std::vector<UpdateEvent> events;
};

struct RunRecord {
    int n_repeats = 0;
    int n_agents = 0;
    int n_tasks = 0;
    int n_episodes = 0;
    std::vector<std::string> agent_names;
    std::vector<AgentConfig> agent_configs;
    std::vector<EpisodeRow> rows;          // ordered (repeat, agent, task, episode)
    std::vector<double> optimal_estimate;  // [repeat * n_tasks + task]
    std::vector<TaskRunInfo> task_infos;   // ordered (repeat, agent, task)
    std::vector<TaskLibrary> libraries;    // per agent, saved from repeat 0

    const EpisodeRow& row(int repeat, int agent, int task, int episode) const {
        return rows[((static_cast<size_t>(repeat) * n_agents + agent) * n_tasks + task) *
                        n_episodes +
                    episode];
    }
    const TaskRunInfo& info(int repeat, int agent, int task) const {
        return task_infos[(static_cast<size_t>(repeat) * n_agents + agent) * n_tasks + task];
    }
};

/// Expected truncated discounted return of the greedy policy of the
/// task's optimal Q function, from the initial state, by exact
/// finite-horizon policy evaluation. Harness-side only.
inline double optimal_return_estimate(const TabularMdp& mdp, int episode_len,
                                      double eps_q = 1e-6) {
    const PairTable q = value_iteration(mdp, eps_q);
    const int S = mdp.n_states;
    std::vector<int> policy(S, 0);
    for (int s = 0; s < S; ++s) {
        int best = 0;
        for (int a = 1; a < mdp.n_actions; ++a)
            if (q(s, a) > q(s, best)) best = a;
        policy[s] = best;
    }
    std::vector<double> v(S, 0.0), next(S, 0.0);
    for (int h = 0; h < episode_len; ++h) {
        for (int s = 0; s < S; ++s) {
            const int a = policy[s];
            const double* row = mdp.row(s, a);
            double acc = 0.0;
            for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * v[s2];
            next[s] = mdp.r(s, a) + mdp.discount * acc;
        }
        std::swap(v, next);
    }
    return v[mdp.initial_state];
}

namespace detail {

inline int sample_next_state(const TabularMdp& mdp, int s, int a, SplitMix64& rng) {
    const double u = rng.uniform();
    const double* row = mdp.row(s, a);
    double acc = 0.0;
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        acc += row[s2];
        if (u < acc) return s2;
    }
    return mdp.n_states - 1;  // guard against accumulated rounding
}

struct RepeatTasks {
    std::vector<TabularMdp> mdps;
    std::vector<int> ids;
    std::vector<double> optimal;
};

inline RepeatTasks sample_repeat_tasks(const LifelongConfig& cfg, int repeat) {
    RepeatTasks out;
    SplitMix64 rng(derive_seed(cfg.seed, 0x7a5c, repeat));
    for (int t = 0; t < cfg.n_tasks; ++t) {
        auto [mdp, id] = sample_task(cfg.distribution, cfg.gamma, rng, t);
        out.optimal.push_back(optimal_return_estimate(mdp, cfg.episode_len));
        out.mdps.push_back(std::move(mdp));
        out.ids.push_back(id);
    }
    return out;
}

// One (repeat, agent) unit: a fresh library carried across the
// repeat's task sequence.
inline void run_unit(const LifelongConfig& cfg, int repeat, int agent_idx,
                     const RepeatTasks& tasks, std::vector<EpisodeRow>& rows,
                     std::vector<TaskRunInfo>& infos, TaskLibrary* keep_library = nullptr) {
    Agent agent(cfg.agents[agent_idx]);
    SplitMix64 env_rng(derive_seed(cfg.seed, 0xe17 + agent_idx, repeat));
    for (int t = 0; t < cfg.n_tasks; ++t) {
        const TabularMdp& mdp = tasks.mdps[t];
        agent.new_task(mdp.n_states, mdp.n_actions);
        for (int ep = 0; ep < cfg.n_episodes; ++ep) {
            int s = mdp.initial_state;
            double ret = 0.0, disc = 1.0;
            for (int step = 0; step < cfg.episode_len; ++step) {
                const int a = agent.act(s);
                const double r = mdp.r(s, a);
                const int s2 = sample_next_state(mdp, s, a, env_rng);
                agent.observe(s, a, r, s2);
                ret += disc * r;
                disc *= cfg.gamma;
                s = s2;
            }
            const double opt = tasks.optimal[t];
            EpisodeRow row;
            row.repeat = repeat;
            row.agent = agent_idx;
            row.task_idx = t;
            row.task_id = tasks.ids[t];
            row.episode = ep;
            row.ret = ret;
            row.rel_ret = opt > 0.0 ? ret / opt : 0.0;
            rows.push_back(row);
        }
        TaskRunInfo info;
        info.repeat = repeat;
        info.agent = agent_idx;
        info.task_idx = t;
        info.last_update_step = agent.last_update_step();
        info.total_steps = agent.steps_in_task();
        info.events = agent.update_events();
        infos.push_back(std::move(info));
        agent.end_task();
    }
    if (keep_library != nullptr) *keep_library = agent.library();
}

}  // namespace detail

/// Runs the whole experiment: per repeat, one shared task sequence; per
/// agent, a fresh library carried across it. (repeat, agent) units are
/// independent and run on up to cfg.jobs workers; the record layout is
/// fixed by indices, not completion order.
inline RunRecord run_lifelong(const LifelongConfig& cfg) {
    cfg.check();
    const int n_agents = static_cast<int>(cfg.agents.size());
    RunRecord rec;
    rec.n_repeats = cfg.n_repeats;
    rec.n_agents = n_agents;
    rec.n_tasks = cfg.n_tasks;
    rec.n_episodes = cfg.n_episodes;
    for (const AgentConfig& a : cfg.agents) rec.agent_names.push_back(a.name);
    rec.agent_configs = cfg.agents;
    rec.optimal_estimate.assign(static_cast<size_t>(cfg.n_repeats) * cfg.n_tasks, 0.0);

    std::vector<detail::RepeatTasks> repeat_tasks(cfg.n_repeats);
    {
        std::atomic<int> next{0};
        auto sample_worker = [&] {
            for (int r; (r = next.fetch_add(1)) < cfg.n_repeats;)
                repeat_tasks[r] = detail::sample_repeat_tasks(cfg, r);
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < std::min(cfg.jobs, cfg.n_repeats); ++w)
            pool.emplace_back(sample_worker);
        sample_worker();
        for (auto& th : pool) th.join();
    }
    for (int r = 0; r < cfg.n_repeats; ++r)
        for (int t = 0; t < cfg.n_tasks; ++t)
            rec.optimal_estimate[static_cast<size_t>(r) * cfg.n_tasks + t] =
                repeat_tasks[r].optimal[t];

    const int n_units = cfg.n_repeats * n_agents;
    std::vector<std::vector<EpisodeRow>> unit_rows(n_units);
    std::vector<std::vector<TaskRunInfo>> unit_infos(n_units);
    std::vector<std::string> unit_errors(n_units);
    rec.libraries.resize(n_agents);
    {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int u; (u = next.fetch_add(1)) < n_units;) {
                const int repeat = u / n_agents;
                const int agent = u % n_agents;
                try {
                    detail::run_unit(cfg, repeat, agent, repeat_tasks[repeat], unit_rows[u],
                                     unit_infos[u], repeat == 0 ? &rec.libraries[agent] : nullptr);
                } catch (const std::exception& e) {
                    unit_errors[u] = e.what();  // a failed unit aborts that unit only
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < std::min(cfg.jobs, n_units); ++w) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    }

    for (int u = 0; u < n_units; ++u) {
        if (!unit_errors[u].empty())
            throw std::runtime_error("lifelong unit (repeat " + std::to_string(u / n_agents) +
                                     ", agent " + std::to_string(u % n_agents) +
                                     ") failed: " + unit_errors[u]);
        rec.rows.insert(rec.rows.end(), unit_rows[u].begin(), unit_rows[u].end());
        rec.task_infos.insert(rec.task_infos.end(), unit_infos[u].begin(), unit_infos[u].end());
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Summaries and diagnostics

struct CurvePoint {
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 * standard error
};

/// Normal-approximation confidence interval over the given per-repeat
/// means.
inline CurvePoint confidence_point(const std::vector<double>& per_repeat) {
    CurvePoint p;
    const size_t n = per_repeat.size();
    if (n == 0) return p;
    double sum = 0.0;
    for (double v : per_repeat) sum += v;
    p.mean = sum / static_cast<double>(n);
    if (n >= 2) {
        double ss = 0.0;
        for (double v : per_repeat) ss += (v - p.mean) * (v - p.mean);
        const double stderr_ = std::sqrt(ss / static_cast<double>(n - 1)) /
                               std::sqrt(static_cast<double>(n));
        p.half_width = 1.96 * stderr_;
    }
    return p;
}

/// Window-truncated trailing moving average: out[i] is the mean of the
/// available series up to i, at most `window` points back.
inline std::vector<double> moving_average(const std::vector<double>& series, int window) {
    std::vector<double> out(series.size(), 0.0);
    double acc = 0.0;
    for (size_t i = 0; i < series.size(); ++i) {
        acc += series[i];
        if (i >= static_cast<size_t>(window)) acc -= series[i - window];
        const double denom = std::min<size_t>(i + 1, window);
        out[i] = acc / static_cast<double>(denom);
    }
    return out;
}

/// Mean relative return per task index (averaged over episodes within a
/// repeat, CI across repeats).
inline std::vector<CurvePoint> per_task_curve(const RunRecord& rec, int agent) {
    std::vector<CurvePoint> curve(rec.n_tasks);
    for (int t = 0; t < rec.n_tasks; ++t) {
        std::vector<double> per_repeat(rec.n_repeats, 0.0);
        for (int r = 0; r < rec.n_repeats; ++r) {
            double acc = 0.0;
            for (int ep = 0; ep < rec.n_episodes; ++ep) acc += rec.row(r, agent, t, ep).rel_ret;
            per_repeat[r] = acc / rec.n_episodes;
        }
        curve[t] = confidence_point(per_repeat);
    }
    return curve;
}

/// Mean relative return per episode index (averaged over tasks within a
/// repeat, CI across repeats), then a 100-episode moving average.
inline std::vector<CurvePoint> per_episode_curve(const RunRecord& rec, int agent,
                                                 int window = 100) {
    std::vector<std::vector<double>> per_repeat(rec.n_repeats,
                                                std::vector<double>(rec.n_episodes, 0.0));
    for (int r = 0; r < rec.n_repeats; ++r) {
        for (int ep = 0; ep < rec.n_episodes; ++ep) {
            double acc = 0.0;
            for (int t = 0; t < rec.n_tasks; ++t) acc += rec.row(r, agent, t, ep).rel_ret;
            per_repeat[r][ep] = acc / rec.n_tasks;
        }
        per_repeat[r] = moving_average(per_repeat[r], window);
    }
    std::vector<CurvePoint> curve(rec.n_episodes);
    std::vector<double> column(rec.n_repeats);
    for (int ep = 0; ep < rec.n_episodes; ++ep) {
        for (int r = 0; r < rec.n_repeats; ++r) column[r] = per_repeat[r][ep];
        curve[ep] = confidence_point(column);
    }
    return curve;
}

struct Diagnostics {
    double rho_lip = 0.0;      // fraction of bound entries under the ceiling, over all updates
    double rho_speedup = 0.0;  // relative gain in steps to the last model update
    double rho_return = 0.0;   // relative total return gain
    std::vector<double> prior_use_curve;  // per update event, fraction with d_prior < model bound
};

inline int find_agent(const RunRecord& rec, const std::string& name) {
    for (int i = 0; i < rec.n_agents; ++i)
        if (rec.agent_names[i] == name) return i;
    return -1;
}

/// Compares one Lipschitz-variant agent against the RMax baseline run on
/// the same seeds.
inline Diagnostics diagnostics(const RunRecord& rec, const std::string& lip_agent,
                               const std::string& baseline_agent) {
    const int lip = find_agent(rec, lip_agent);
    const int base = find_agent(rec, baseline_agent);
    if (lip < 0 || base < 0)
        throw std::invalid_argument("diagnostics: agent not found in record");
    if (!uses_lipschitz(rec.agent_configs[lip].variant))
        throw std::invalid_argument("diagnostics: " + lip_agent + " is not a Lipschitz variant");
    if (rec.agent_configs[base].variant != Variant::rmax)
        throw std::invalid_argument("diagnostics: baseline " + baseline_agent + " is not rmax");

    Diagnostics d;
    long tight = 0, total = 0;
    double steps_lip = 0.0, steps_base = 0.0;
    double return_lip = 0.0, return_base = 0.0;
    size_t max_events = 0;
    for (int r = 0; r < rec.n_repeats; ++r) {
        for (int t = 0; t < rec.n_tasks; ++t) {
            const TaskRunInfo& li = rec.info(r, lip, t);
            const TaskRunInfo& bi = rec.info(r, base, t);
            for (const UpdateEvent& e : li.events) {
                tight += e.tight_entries;
                total += e.total_entries;
            }
            steps_lip += static_cast<double>(std::max<long>(li.last_update_step, 0));
            steps_base += static_cast<double>(std::max<long>(bi.last_update_step, 0));
            for (int ep = 0; ep < rec.n_episodes; ++ep) {
                return_lip += rec.row(r, lip, t, ep).ret;
                return_base += rec.row(r, base, t, ep).ret;
            }
            max_events = std::max(max_events, li.events.size());
        }
    }
    d.rho_lip = total > 0 ? static_cast<double>(tight) / static_cast<double>(total) : 0.0;
    d.rho_speedup = steps_base > 0.0 ? (steps_base - steps_lip) / steps_base : 0.0;
    d.rho_return = return_base > 0.0 ? (return_lip - return_base) / return_base : 0.0;

    // Prior-use fraction per update-event index, averaged over the
    // (repeat, task) runs that reached the event and computed distances.
    d.prior_use_curve.assign(max_events, 0.0);
    std::vector<long> samples(max_events, 0);
    for (int r = 0; r < rec.n_repeats; ++r) {
        for (int t = 0; t < rec.n_tasks; ++t) {
            const TaskRunInfo& li = rec.info(r, lip, t);
            for (size_t e = 0; e < li.events.size(); ++e) {
                if (li.events[e].prior_total == 0) continue;
                d.prior_use_curve[e] += static_cast<double>(li.events[e].prior_used) /
                                        static_cast<double>(li.events[e].prior_total);
                samples[e] += 1;
            }
        }
    }
    size_t used = 0;
    for (size_t e = 0; e < max_events; ++e)
        if (samples[e] > 0) d.prior_use_curve[used++] = d.prior_use_curve[e] / samples[e];
    d.prior_use_curve.resize(used);
    return d;
}

}  // namespace lrl
