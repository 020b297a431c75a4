#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrl/dp.hpp"
#include "lrl/learned_task.hpp"
#include "lrl/mdp.hpp"
#include "lrl/metrics.hpp"

namespace lrl {

enum class Variant { rmax, lrmax, maxqinit, lrmaxqinit };

inline bool uses_lipschitz(Variant v) {
    return v == Variant::lrmax || v == Variant::lrmaxqinit;
}
inline bool uses_maxqinit(Variant v) {
    return v == Variant::maxqinit || v == Variant::lrmaxqinit;
}

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::rmax: return "rmax";
        case Variant::lrmax: return "lrmax";
        case Variant::maxqinit: return "maxqinit";
        case Variant::lrmaxqinit: return "lrmaxqinit";
    }
    return "?";
}

struct AgentConfig {
    std::string name = "agent";
    Variant variant = Variant::rmax;
    double gamma = 0.9;
    int n_known = 10;
    double eps_q = 1e-3;
    DistanceConfig distance;

    void check() const {
        if (gamma < 0.0 || gamma >= 1.0)
            throw std::invalid_argument("agent config: need 0 <= gamma < 1");
        if (n_known <= 0) throw std::invalid_argument("agent config: n_known must be positive");
        if (eps_q <= 0.0) throw std::invalid_argument("agent config: eps_q must be positive");
        distance.check();
        if (uses_lipschitz(variant) && gamma * (1.0 + distance.epsilon) >= 1.0)
            throw std::invalid_argument(
                "agent config: gamma * (1 + epsilon) must be < 1 for Lipschitz variants");
        if (uses_maxqinit(variant) && !distance.p_min)
            throw std::invalid_argument("agent config: p_min required for MaxQInit variants");
    }
};

/// Ordered record of finished tasks plus the optional running max of
/// model distances. Entries are appended at end-of-task and never
/// mutated afterward.
struct TaskLibrary {
    std::vector<LearnedTask> entries;
    std::optional<DmaxEstimate> dmax;
};

/// Smallest library size after which the max-over-library initialization
/// is trusted; calibrated so that with p_min = 0.2 and delta = 0.05 the
/// bound activates on the 12th task.
inline int maxqinit_threshold(double p_min, double delta) {
    if (p_min <= 0.0 || p_min > 1.0)
        throw std::invalid_argument("maxqinit_threshold: p_min must be in (0, 1]");
    if (2.0 * delta >= 1.0) return 0;
    if (p_min == 1.0) return 1;
    return static_cast<int>(std::ceil(std::log(2.0 * delta) / std::log(1.0 - p_min)));
}

/// Elementwise max of the stored Q bounds once enough tasks were seen;
/// absent before that (callers fall back to the 1/(1-gamma) ceiling).
inline std::optional<PairTable> maxqinit_bound(const TaskLibrary& library,
                                               const AgentConfig& cfg) {
    if (!cfg.distance.p_min)
        throw std::invalid_argument("maxqinit_bound: p_min not configured");
    const int m = static_cast<int>(library.entries.size());
    if (m == 0 || m < maxqinit_threshold(*cfg.distance.p_min, cfg.distance.delta))
        return std::nullopt;
    PairTable bound = library.entries.front().q_bound;
    for (size_t i = 1; i < library.entries.size(); ++i) {
        const PairTable& q = library.entries[i].q_bound;
        if (!q.same_shape(bound))
            throw std::invalid_argument("maxqinit_bound: dimension mismatch in library");
        for (size_t k = 0; k < bound.size(); ++k)
            bound.data()[k] = std::max(bound.data()[k], q.data()[k]);
    }
    return bound;
}

/// One Q-recompute during a task, with the bookkeeping the experiment
/// diagnostics are built from.
struct UpdateEvent {
    long step = 0;            // step index within the task when it fired
    int tight_entries = 0;    // pairs where the combined bound beat the ceiling
    int total_entries = 0;
    long prior_used = 0;      // pairs (per source, per direction) where d_prior < the model bound
    long prior_total = 0;
};

/// The RMax skeleton shared by all variants: acts greedily on an
/// optimistic Q bound, freezes each pair's empirical model at n_known
/// visits, and recomputes the bound on exactly those events. Lipschitz
/// variants shrink the bound with distances to the saved tasks;
/// MaxQInit variants add the max-over-library bound once trusted.
class Agent {
public:
    explicit Agent(AgentConfig cfg) : cfg_(std::move(cfg)) { cfg_.check(); }

    const AgentConfig& config() const { return cfg_; }
    const TaskLibrary& library() const { return library_; }
    const PairTable& q() const { return q_; }
    bool task_active() const { return task_active_; }
    long steps_in_task() const { return step_; }
    long last_update_step() const { return last_update_step_; }
    const std::vector<UpdateEvent>& update_events() const { return events_; }

    void new_task(int n_states, int n_actions) {
        if (n_states <= 0 || n_actions <= 0)
            throw std::invalid_argument("new_task: dimensions must be positive");
        for (const LearnedTask& t : library_.entries)
            if (t.model.n_states != n_states || t.model.n_actions != n_actions)
                throw std::invalid_argument("new_task: dimension mismatch with library");
        S_ = n_states;
        A_ = n_actions;
        known_ = KnownSet(S_, A_, cfg_.n_known);
        acc_ = EmpiricalAccumulator(S_, A_);
        model_ = make_mdp(S_, A_, cfg_.gamma);
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) optimistic_pair(model_, s, a);
        q_ = PairTable(S_, A_, model_.q_ceiling());
        warm_fwd_.assign(library_.entries.size(), PairTable());
        warm_bwd_.assign(library_.entries.size(), PairTable());
        step_ = 0;
        last_update_step_ = -1;
        events_.clear();
        task_active_ = true;
        update_q();
    }

    /// Greedy action under the current bound, lowest index on ties.
    int act(int s) const {
        int best = 0;
        double best_q = q_(s, 0);
        for (int a = 1; a < A_; ++a)
            if (q_(s, a) > best_q) {
                best_q = q_(s, a);
                best = a;
            }
        return best;
    }

    void observe(int s, int a, double r, int s2) {
        if (!task_active_) throw std::logic_error("observe: no active task");
        if (r < 0.0 || r > 1.0) throw std::invalid_argument("observe: reward out of [0,1]");
        if (!known_.known(s, a)) {
            acc_.add(s, a, r, s2);
            if (known_.increment(s, a) == cfg_.n_known) {
                freeze_pair(model_, acc_, s, a);
                last_update_step_ = step_;
                update_q();
            }
        }
        ++step_;
    }

    /// Saves the learned task, refreshes the distance estimate when
    /// enabled, and leaves the agent ready for the next new_task.
    const LearnedTask& end_task() {
        if (!task_active_) throw std::logic_error("end_task: no active task");
        LearnedTask task = freeze_learned_task(acc_, known_, q_, cfg_.gamma);
        if (cfg_.distance.use_online_dmax) {
            if (!library_.dmax) library_.dmax = DmaxEstimate{};
            for (const LearnedTask& prev : library_.entries)
                *library_.dmax = dmax_update(std::move(*library_.dmax), task, prev, cfg_.distance);
            library_.dmax->tasks_seen += 1;
        }
        library_.entries.push_back(std::move(task));
        task_active_ = false;
        return library_.entries.back();
    }

private:
    void update_q() {
        const double ceiling = model_.q_ceiling();
        UpdateEvent event;
        event.step = step_;
        event.total_entries = S_ * A_;

        std::vector<PairTable> bounds;
        if (uses_lipschitz(cfg_.variant) && !library_.entries.empty()) {
            const TaskKnowledgeView cur{&model_, &known_, &q_};
            const DmaxEstimate* dmax =
                library_.dmax.has_value() ? &*library_.dmax : nullptr;
            for (size_t i = 0; i < library_.entries.size(); ++i) {
                const LearnedTask& src = library_.entries[i];
                const TaskKnowledgeView lib = view_of(src);

                PairTable local_fwd = dhat_model_table(cur, lib, cfg_.distance);
                PairTable local_bwd = dhat_model_table(lib, cur, cfg_.distance);
                if (cfg_.distance.d_prior) {
                    for (double v : local_fwd.data()) event.prior_used += *cfg_.distance.d_prior < v;
                    for (double v : local_bwd.data()) event.prior_used += *cfg_.distance.d_prior < v;
                    event.prior_total += 2 * static_cast<long>(local_fwd.size());
                }
                clip_local(local_fwd, dmax);
                clip_local(local_bwd, dmax);

                const PairTable* warm_f = warm_fwd_[i].size() ? &warm_fwd_[i] : nullptr;
                const PairTable* warm_b = warm_bwd_[i].size() ? &warm_bwd_[i] : nullptr;
                warm_fwd_[i] = dhat_dissimilarity_from_local(cur, local_fwd, cfg_.distance,
                                                             cfg_.eps_q, warm_f);
                warm_bwd_[i] = dhat_dissimilarity_from_local(lib, local_bwd, cfg_.distance,
                                                             cfg_.eps_q, warm_b);
                bounds.push_back(lipschitz_q_bound(src, warm_fwd_[i], warm_bwd_[i]));
            }
        }
        if (uses_maxqinit(cfg_.variant) && !library_.entries.empty()) {
            if (auto b = maxqinit_bound(library_, cfg_)) bounds.push_back(std::move(*b));
        }

        const PairTable u = combine_bounds(bounds, cfg_.gamma, S_, A_);
        for (double v : u.data()) event.tight_entries += v < ceiling - 1e-12;
        q_ = solve_optimistic_q(model_, known_, u, cfg_.eps_q, q_.size() ? &q_ : nullptr);
        events_.push_back(event);
    }

    void clip_local(PairTable& local, const DmaxEstimate* dmax) const {
        const DistanceConfig& dc = cfg_.distance;
        if (dc.d_prior)
            for (double& v : local.data()) v = std::min(v, *dc.d_prior);
        if (dmax != nullptr && dc.use_online_dmax && dc.p_min &&
            dmax_confident(dmax->tasks_seen, *dc.p_min, dc.delta) &&
            dmax->values.same_shape(local)) {
            for (size_t i = 0; i < local.size(); ++i)
                local.data()[i] = std::min(local.data()[i], dmax->values.data()[i] + dc.epsilon);
        }
    }

    AgentConfig cfg_;
    TaskLibrary library_;

    int S_ = 0, A_ = 0;
    bool task_active_ = false;
    KnownSet known_;
    EmpiricalAccumulator acc_;
    TabularMdp model_;
    PairTable q_;
    long step_ = 0;
    long last_update_step_ = -1;
    std::vector<UpdateEvent> events_;
    std::vector<PairTable> warm_fwd_, warm_bwd_;
};

}  // namespace lrl
