#pragma once

#include <cassert>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lrl/dp.hpp"
#include "lrl/learned_task.hpp"
#include "lrl/mdp.hpp"

namespace lrl {

/// Knobs for the computable distance bounds.
struct DistanceConfig {
    double epsilon = 0.01;  // model accuracy of known pairs
    double delta = 0.05;    // confidence
    std::optional<double> d_prior;  // prior bound on the max model distance
    bool use_online_dmax = false;
    std::optional<double> p_min;  // minimum task-sampling probability
    // Replace the transition maximization by the plain max-V upper bound.
    bool cheap_transition_bound = false;

    void check() const {
        // epsilon == 0 is meaningful: exact models on known pairs.
        if (epsilon < 0.0) throw std::invalid_argument("DistanceConfig: epsilon must be >= 0");
        if (delta <= 0.0 || delta > 1.0)
            throw std::invalid_argument("DistanceConfig: delta must be in (0, 1]");
        if (d_prior && *d_prior < 0.0)
            throw std::invalid_argument("DistanceConfig: d_prior must be nonnegative");
        if (p_min && (*p_min <= 0.0 || *p_min > 1.0))
            throw std::invalid_argument("DistanceConfig: p_min must be in (0, 1]");
    }
};

/// Running elementwise maximum of model-distance bounds over task pairs.
struct DmaxEstimate {
    PairTable values;
    int tasks_seen = 0;
};

/// Reward gap plus f-weighted transition gap at one pair (the model
/// pseudometric; f already carries any discount factor).
inline double model_pseudometric(const TabularMdp& m, const TabularMdp& mbar,
                                 std::span<const double> f, int s, int a) {
    if (!m.same_shape(mbar) || static_cast<int>(f.size()) != m.n_states)
        throw std::invalid_argument("model_pseudometric: dimension mismatch");
    double gap = std::abs(m.r(s, a) - mbar.r(s, a));
    const double* row = m.row(s, a);
    const double* rowbar = mbar.row(s, a);
    for (int s2 = 0; s2 < m.n_states; ++s2) gap += f[s2] * std::abs(row[s2] - rowbar[s2]);
    return gap;
}

/// The asymmetric local dissimilarity d(m || mbar): the fixed point that
/// propagates local model gaps through m's dynamics, with the gap weights
/// set to the discounted optimal values of mbar. Ground-truth use only.
inline PairTable exact_dissimilarity(const TabularMdp& m, const TabularMdp& mbar, double eps_q) {
    if (!m.same_shape(mbar))
        throw std::invalid_argument("exact_dissimilarity: dimension mismatch");
    const int S = m.n_states, A = m.n_actions;
    const double gamma = m.discount;
    std::vector<double> f = state_values(value_iteration(mbar, eps_q));
    for (double& v : f) v *= gamma;

    PairTable local(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) local(s, a) = model_pseudometric(m, mbar, f, s, a);

    auto backup = [&m, gamma, S](const PairTable&, const std::vector<double>& dv, double, int s,
                                 int a) {
        const double* row = m.row(s, a);
        double acc = 0.0;
        for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * dv[s2];
        return gamma * acc;
    };
    return solve_pair_fixed_point(local, backup, gamma, eps_q);
}

/// One-number variant: 1/(1-gamma) times the largest local model gap.
inline double global_dissimilarity(const TabularMdp& m, const TabularMdp& mbar, double eps_q) {
    if (!m.same_shape(mbar))
        throw std::invalid_argument("global_dissimilarity: dimension mismatch");
    const double gamma = m.discount;
    std::vector<double> f = state_values(value_iteration(mbar, eps_q));
    for (double& v : f) v *= gamma;
    double worst = 0.0;
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a)
            worst = std::max(worst, model_pseudometric(m, mbar, f, s, a));
    return worst / (1.0 - gamma);
}

enum class KnowledgeCase { both_known, src_known, dst_known, both_unknown };

inline KnowledgeCase knowledge_case(const KnownSet& src, const KnownSet& dst, int s, int a) {
    const bool ks = src.known(s, a), kd = dst.known(s, a);
    if (ks && kd) return KnowledgeCase::both_known;
    if (ks) return KnowledgeCase::src_known;
    if (kd) return KnowledgeCase::dst_known;
    return KnowledgeCase::both_unknown;
}

inline const char* to_string(KnowledgeCase c) {
    switch (c) {
        case KnowledgeCase::both_known: return "known/known";
        case KnowledgeCase::src_known: return "known/unknown";
        case KnowledgeCase::dst_known: return "unknown/known";
        case KnowledgeCase::both_unknown: return "unknown/unknown";
    }
    return "?";
}

namespace detail {

/// Greedy sorted-mass maximization of sum_s' v[s'] * |t_hat[s'] - t[s']|
/// over probability vectors t: walk states by decreasing v and put all
/// mass on the first state whose estimated probability does not exceed
/// one half (there the gap to t=1 is the argmax). order holds state
/// indices sorted by decreasing v.
inline double transition_gap_max(const double* t_hat, std::span<const double> v,
                                 std::span<const int> order) {
    double base = 0.0;  // value of the all-zero assignment
    for (size_t s2 = 0; s2 < v.size(); ++s2) base += v[s2] * t_hat[s2];
    int pick = order.front();
    for (int s2 : order) {
        if (t_hat[s2] <= 0.5) {
            pick = s2;
            break;
        }
    }
    return base + v[pick] * (1.0 - 2.0 * t_hat[pick]);
}

/// States sorted by decreasing value, ties by index.
inline std::vector<int> descending_order(std::span<const double> v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return v[a] > v[b]; });
    return order;
}

}  // namespace detail

/// Non-owning view of one task's knowledge, as the distance bounds need
/// it. The value weights come from the destination task of each bound.
struct TaskKnowledgeView {
    const TabularMdp* model = nullptr;
    const KnownSet* known = nullptr;
    const PairTable* q_bound = nullptr;
};

inline TaskKnowledgeView view_of(const LearnedTask& task) {
    return {&task.model, &task.known, &task.q_bound};
}

/// Computable upper bound on the model pseudometric at every pair: the
/// four-case dispatch on the joint knowledge, with the analytical
/// maximizations for the unknown sides, capped by the largest distance
/// the value weights allow (1 + 2 gamma max v_bar, the both-unknown value).
inline PairTable dhat_model_table(const TaskKnowledgeView& src, const TaskKnowledgeView& dst,
                                  const DistanceConfig& cfg) {
    cfg.check();
    const TabularMdp& ms = *src.model;
    const TabularMdp& md = *dst.model;
    if (!ms.same_shape(md)) throw std::invalid_argument("dhat_model: dimension mismatch");
    const int S = ms.n_states, A = ms.n_actions;
    const double gamma = ms.discount;

    const std::vector<double> v_bar = state_values(*dst.q_bound);
    const double v_max = *std::max_element(v_bar.begin(), v_bar.end());
    if (v_max < 0.0) throw std::invalid_argument("dhat_model: negative v_max");
    std::vector<double> gv = v_bar;
    for (double& v : gv) v *= gamma;

    const double b = cfg.epsilon * (1.0 + gamma * v_max);
    const double both_unknown = 1.0 + 2.0 * gamma * v_max;
    const std::vector<int> order = detail::descending_order(v_bar);

    auto one_sided = [&](const TabularMdp& known_model, int s, int a) {
        const double r_hat = known_model.r(s, a);
        const double reward_gap = std::max(r_hat, 1.0 - r_hat);
        const double trans = cfg.cheap_transition_bound
                                 ? v_max
                                 : detail::transition_gap_max(known_model.row(s, a), v_bar, order);
        return reward_gap + gamma * trans + b;
    };

    PairTable out(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double val;
            switch (knowledge_case(*src.known, *dst.known, s, a)) {
                case KnowledgeCase::both_known:
                    val = model_pseudometric(ms, md, gv, s, a) + 2.0 * b;
                    break;
                case KnowledgeCase::src_known:
                    val = one_sided(ms, s, a);
                    break;
                case KnowledgeCase::dst_known:
                    val = one_sided(md, s, a);
                    break;
                case KnowledgeCase::both_unknown:
                default:
                    val = both_unknown;
                    break;
            }
            out(s, a) = std::min(val, both_unknown);
        }
    }
    return out;
}

inline PairTable dhat_model_table(const LearnedTask& src, const LearnedTask& dst,
                                  const DistanceConfig& cfg) {
    return dhat_model_table(view_of(src), view_of(dst), cfg);
}

inline double dhat_model(const LearnedTask& src, const LearnedTask& dst,
                         const DistanceConfig& cfg, int s, int a) {
    return dhat_model_table(src, dst, cfg)(s, a);
}

/// True when enough tasks were sampled for the running-max distance
/// estimate to be trusted: 2(1-p_min)^m - (1-2p_min)^m <= delta.
inline bool dmax_confident(int m, double p_min, double delta) {
    if (m < 0) throw std::invalid_argument("dmax_confident: m must be nonnegative");
    const double value = 2.0 * std::pow(1.0 - p_min, m) - std::pow(1.0 - 2.0 * p_min, m);
    return value <= delta;
}

/// Local term of the distance fixed point: the model bound clipped by the
/// prior and, when confident and enabled, by the learned max distance.
inline PairTable dhat_local(const TaskKnowledgeView& src, const TaskKnowledgeView& dst,
                            const DistanceConfig& cfg, const DmaxEstimate* dmax) {
    PairTable local = dhat_model_table(src, dst, cfg);
    if (cfg.d_prior)
        for (double& v : local.data()) v = std::min(v, *cfg.d_prior);
    if (dmax != nullptr && cfg.use_online_dmax && cfg.p_min &&
        dmax_confident(dmax->tasks_seen, *cfg.p_min, cfg.delta) &&
        dmax->values.same_shape(local)) {
        for (size_t i = 0; i < local.size(); ++i)
            local.data()[i] =
                std::min(local.data()[i], dmax->values.data()[i] + cfg.epsilon);
    }
    return local;
}

/// Fixed point of the computable dissimilarity bound: local term plus,
/// on src-known pairs, the learned-model backup with the epsilon max
/// correction, and the plain global-max backup elsewhere. Requires
/// gamma (1 + epsilon) < 1.
inline PairTable dhat_dissimilarity_from_local(const TaskKnowledgeView& src,
                                               const PairTable& local,
                                               const DistanceConfig& cfg, double eps_q,
                                               const PairTable* warm_start = nullptr) {
    const TabularMdp& model = *src.model;
    const double gamma = model.discount;
    const double modulus = gamma * (1.0 + cfg.epsilon);
    if (modulus >= 1.0)
        throw std::invalid_argument(
            "dhat_dissimilarity: gamma * (1 + epsilon) must be < 1 for the bound to exist");
    const int S = model.n_states;
    const KnownSet& known = *src.known;
    const double eps = cfg.epsilon;

    auto backup = [&model, &known, gamma, eps, S](const PairTable&, const std::vector<double>& dv,
                                                  double global_max, int s, int a) {
        if (!known.known(s, a)) return gamma * global_max;
        const double* row = model.row(s, a);
        double acc = 0.0;
        for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * dv[s2];
        return gamma * (acc + eps * global_max);
    };
    return solve_pair_fixed_point(local, backup, modulus, eps_q, warm_start);
}

inline PairTable dhat_dissimilarity(const LearnedTask& src, const LearnedTask& dst,
                                    const DistanceConfig& cfg, double eps_q,
                                    const DmaxEstimate* dmax = nullptr) {
    const TaskKnowledgeView sv = view_of(src), dv = view_of(dst);
    const PairTable local = dhat_local(sv, dv, cfg, dmax);
    return dhat_dissimilarity_from_local(sv, local, cfg, eps_q);
}

/// Transferable bound induced by one source task: its saved Q bound plus
/// the smaller of the two directed distance bounds.
inline PairTable lipschitz_q_bound(const LearnedTask& src, const PairTable& d_fwd,
                                   const PairTable& d_bwd) {
    if (!d_fwd.same_shape(src.q_bound) || !d_bwd.same_shape(src.q_bound))
        throw std::invalid_argument("lipschitz_q_bound: dimension mismatch");
    PairTable out = src.q_bound;
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] += std::min(d_fwd.data()[i], d_bwd.data()[i]);
    return out;
}

/// Pointwise minimum of the per-source bounds and the 1/(1-gamma) ceiling.
inline PairTable combine_bounds(std::span<const PairTable> bounds, double gamma, int n_states,
                                int n_actions) {
    PairTable out(n_states, n_actions, 1.0 / (1.0 - gamma));
    for (const PairTable& b : bounds) {
        if (!b.same_shape(out)) throw std::invalid_argument("combine_bounds: dimension mismatch");
        for (size_t i = 0; i < out.size(); ++i)
            out.data()[i] = std::min(out.data()[i], b.data()[i]);
    }
    return out;
}

/// Folds one task pair into the running max of model distances, both
/// directions. tasks_seen is the caller's to advance (once per task).
inline DmaxEstimate dmax_update(DmaxEstimate est, const LearnedTask& src, const LearnedTask& dst,
                                const DistanceConfig& cfg) {
    const PairTable fwd = dhat_model_table(src, dst, cfg);
    const PairTable bwd = dhat_model_table(dst, src, cfg);
    if (est.values.size() == 0) est.values = PairTable(fwd.n_states(), fwd.n_actions(), 0.0);
    if (!est.values.same_shape(fwd)) throw std::invalid_argument("dmax_update: dimension mismatch");
    for (size_t i = 0; i < est.values.size(); ++i)
        est.values.data()[i] =
            std::max({est.values.data()[i], fwd.data()[i], bwd.data()[i]});
    return est;
}

}  // namespace lrl
