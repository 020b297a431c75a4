#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrl/mdp.hpp"

namespace lrl {

/// Sufficient statistics of the sample buffer kept while a pair is
/// unknown: reward sums and next-state counts per state-action pair.
struct EmpiricalAccumulator {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> reward_sum;  // [s * A + a]
    std::vector<int> visits;         // [s * A + a]
    std::vector<int> next_counts;    // [(s * A + a) * S + s']

    EmpiricalAccumulator() = default;
    EmpiricalAccumulator(int S, int A)
        : n_states(S), n_actions(A),
          reward_sum(static_cast<size_t>(S) * A, 0.0),
          visits(static_cast<size_t>(S) * A, 0),
          next_counts(static_cast<size_t>(S) * A * S, 0) {}

    void add(int s, int a, double r, int s2) {
        const size_t sa = static_cast<size_t>(s) * n_actions + a;
        reward_sum[sa] += r;
        visits[sa] += 1;
        next_counts[sa * n_states + s2] += 1;
    }

    int count(int s, int a) const { return visits[static_cast<size_t>(s) * n_actions + a]; }
};

/// Everything an agent saves about one finished task: the learned model
/// with optimistic initialization on unknown pairs, the known set, the
/// optimistic Q bound and its tracked maximum.
struct LearnedTask {
    TabularMdp model;
    KnownSet known;
    PairTable q_bound;
    double v_max = 0.0;

    bool operator==(const LearnedTask& other) const = default;
};

/// Writes the optimistic placeholder for an unvisited pair: a self-loop
/// with reward 1, whose Q value is exactly 1/(1-gamma).
inline void optimistic_pair(TabularMdp& model, int s, int a) {
    model.r(s, a) = 1.0;
    double* row = model.row(s, a);
    std::fill(row, row + model.n_states, 0.0);
    row[s] = 1.0;
}

/// Overwrites one model row with the empirical estimate frozen from the
/// pair's samples.
inline void freeze_pair(TabularMdp& model, const EmpiricalAccumulator& acc, int s, int a) {
    const size_t sa = static_cast<size_t>(s) * acc.n_actions + a;
    const int n = acc.visits[sa];
    if (n <= 0) throw std::invalid_argument("freeze_pair: no samples at pair");
    model.r(s, a) = acc.reward_sum[sa] / n;
    double* row = model.row(s, a);
    for (int s2 = 0; s2 < acc.n_states; ++s2)
        row[s2] = static_cast<double>(acc.next_counts[sa * acc.n_states + s2]) / n;
}

/// Builds the full RMax model: empirical rows on known pairs, the
/// optimistic self-loop elsewhere.
inline TabularMdp empirical_model(const EmpiricalAccumulator& acc, const KnownSet& known,
                                  double discount, int initial_state = 0) {
    TabularMdp model = make_mdp(acc.n_states, acc.n_actions, discount, initial_state);
    for (int s = 0; s < acc.n_states; ++s) {
        for (int a = 0; a < acc.n_actions; ++a) {
            if (known.known(s, a))
                freeze_pair(model, acc, s, a);
            else
                optimistic_pair(model, s, a);
        }
    }
    return model;
}

/// Snapshot of the agent's knowledge, as saved at the end of a task.
/// Rejects a known set whose counts are not backed by enough samples.
inline LearnedTask freeze_learned_task(const EmpiricalAccumulator& acc, const KnownSet& known,
                                       const PairTable& q_bound, double discount,
                                       int initial_state = 0) {
    if (!q_bound.all_finite())
        throw std::invalid_argument("freeze_learned_task: q_bound must be finite");
    if (acc.n_states != known.n_states() || acc.n_actions != known.n_actions() ||
        q_bound.n_states() != acc.n_states || q_bound.n_actions() != acc.n_actions)
        throw std::invalid_argument("freeze_learned_task: dimension mismatch");
    for (int s = 0; s < acc.n_states; ++s)
        for (int a = 0; a < acc.n_actions; ++a)
            if (known.known(s, a) && acc.count(s, a) < known.n_known())
                throw std::invalid_argument(
                    "freeze_learned_task: pair (" + std::to_string(s) + "," + std::to_string(a) +
                    ") marked known with only " + std::to_string(acc.count(s, a)) + " samples");
    LearnedTask task;
    task.model = empirical_model(acc, known, discount, initial_state);
    task.known = known;
    task.q_bound = q_bound;
    task.v_max = q_bound.max();
    return task;
}

/// Per-state value bound derived from the saved Q bound.
inline std::vector<double> state_value_bound(const LearnedTask& task) {
    return state_values(task.q_bound);
}

// ---------------------------------------------------------------------------
// Task-library file format: one self-describing JSON document per task.
// Tables are flattened row-major in (s, a, s') order.

inline constexpr int kTaskFormatVersion = 1;

inline nlohmann::json to_json(const LearnedTask& task) {
    nlohmann::json j;
    j["format_version"] = kTaskFormatVersion;
    j["n_states"] = task.model.n_states;
    j["n_actions"] = task.model.n_actions;
    j["gamma"] = task.model.discount;
    j["initial_state"] = task.model.initial_state;
    j["n_known"] = task.known.n_known();
    j["reward"] = task.model.reward;
    j["transition"] = task.model.transition;
    j["counts"] = task.known.counts();
    j["q_bound"] = task.q_bound.data();
    j["v_max"] = task.v_max;
    return j;
}

inline LearnedTask learned_task_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kTaskFormatVersion)
        throw std::runtime_error("learned task document: unsupported format_version");
    const int S = j.at("n_states").get<int>();
    const int A = j.at("n_actions").get<int>();
    LearnedTask task;
    task.model = make_mdp(S, A, j.at("gamma").get<double>(), j.at("initial_state").get<int>());
    task.model.reward = j.at("reward").get<std::vector<double>>();
    task.model.transition = j.at("transition").get<std::vector<double>>();
    if (task.model.reward.size() != static_cast<size_t>(S) * A ||
        task.model.transition.size() != static_cast<size_t>(S) * A * S)
        throw std::runtime_error("learned task document: table size mismatch");
    task.known = KnownSet(S, A, j.at("n_known").get<int>());
    task.known.counts() = j.at("counts").get<std::vector<int>>();
    if (task.known.counts().size() != static_cast<size_t>(S) * A)
        throw std::runtime_error("learned task document: counts size mismatch");
    task.q_bound = PairTable(S, A);
    task.q_bound.data() = j.at("q_bound").get<std::vector<double>>();
    if (task.q_bound.data().size() != static_cast<size_t>(S) * A)
        throw std::runtime_error("learned task document: q_bound size mismatch");
    task.v_max = j.at("v_max").get<double>();
    return task;
}

}  // namespace lrl
