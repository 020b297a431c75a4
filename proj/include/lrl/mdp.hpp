#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrl {

/// Dense real-valued function over state-action pairs (Q tables,
/// optimistic bounds, distance tables).
class PairTable {
public:
    PairTable() = default;

    PairTable(int n_states, int n_actions, double fill = 0.0)
        : n_states_(n_states), n_actions_(n_actions),
          values_(static_cast<size_t>(n_states) * n_actions, fill) {
        if (n_states <= 0 || n_actions <= 0)
            throw std::invalid_argument("PairTable: dimensions must be positive");
    }

    double& operator()(int s, int a) { return values_[static_cast<size_t>(s) * n_actions_ + a]; }
    double operator()(int s, int a) const { return values_[static_cast<size_t>(s) * n_actions_ + a]; }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    size_t size() const { return values_.size(); }

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool same_shape(const PairTable& other) const {
        return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
    }

    /// Largest entry.
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    /// max_a table(s, a)
    double state_max(int s) const {
        const double* row = values_.data() + static_cast<size_t>(s) * n_actions_;
        return *std::max_element(row, row + n_actions_);
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    bool operator==(const PairTable& other) const = default;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> values_;
};

/// V(s) = max_a q(s, a) for every state.
inline std::vector<double> state_values(const PairTable& q) {
    std::vector<double> v(q.n_states());
    for (int s = 0; s < q.n_states(); ++s) v[s] = q.state_max(s);
    return v;
}

inline double max_norm_diff(const PairTable& a, const PairTable& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

/// Ground-truth tabular task: reward table, transition tensor, discount.
/// Rewards live in [0, 1]; transition rows are probability vectors.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> reward;      // indexed [s * A + a]
    std::vector<double> transition;  // indexed [(s * A + a) * S + s'], row-major
    double discount = 0.0;
    int initial_state = 0;

    double r(int s, int a) const { return reward[static_cast<size_t>(s) * n_actions + a]; }
    double& r(int s, int a) { return reward[static_cast<size_t>(s) * n_actions + a]; }

    double t(int s, int a, int s2) const {
        return transition[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& t(int s, int a, int s2) {
        return transition[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
    }

    const double* row(int s, int a) const {
        return transition.data() + (static_cast<size_t>(s) * n_actions + a) * n_states;
    }
    double* row(int s, int a) {
        return transition.data() + (static_cast<size_t>(s) * n_actions + a) * n_states;
    }

    bool same_shape(const TabularMdp& other) const {
        return n_states == other.n_states && n_actions == other.n_actions;
    }

    /// 1/(1-gamma), the ceiling on any Q value.
    double q_ceiling() const { return 1.0 / (1.0 - discount); }

    bool operator==(const TabularMdp& other) const = default;
};

inline TabularMdp make_mdp(int n_states, int n_actions, double discount, int initial_state = 0) {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("make_mdp: dimensions must be positive");
    TabularMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.reward.assign(static_cast<size_t>(n_states) * n_actions, 0.0);
    m.transition.assign(static_cast<size_t>(n_states) * n_actions * n_states, 0.0);
    m.discount = discount;
    m.initial_state = initial_state;
    return m;
}

// Rows are built from exact rational counts, so an absolute tolerance works.
inline constexpr double kRowSumTolerance = 1e-9;

/// Checks every structural invariant. Returns the first violation with
/// indices, or nullopt when the task is well formed.
inline std::optional<std::string> validate(const TabularMdp& m) {
    if (m.n_states <= 0 || m.n_actions <= 0)
        return "dimensions must be positive";
    if (m.discount < 0.0 || m.discount >= 1.0)
        return "discount must satisfy 0 <= gamma < 1, got " + std::to_string(m.discount);
    if (m.initial_state < 0 || m.initial_state >= m.n_states)
        return "initial_state out of range";
    if (m.reward.size() != static_cast<size_t>(m.n_states) * m.n_actions)
        return "reward table has wrong size";
    if (m.transition.size() != static_cast<size_t>(m.n_states) * m.n_actions * m.n_states)
        return "transition tensor has wrong size";
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
            const double rv = m.r(s, a);
            if (!(rv >= 0.0 && rv <= 1.0))
                return "reward out of [0,1] at (s=" + std::to_string(s) +
                       ", a=" + std::to_string(a) + "): " + std::to_string(rv);
            double sum = 0.0;
            for (int s2 = 0; s2 < m.n_states; ++s2) {
                const double p = m.t(s, a, s2);
                if (!(p >= 0.0 && p <= 1.0))
                    return "transition probability out of [0,1] at (s=" + std::to_string(s) +
                           ", a=" + std::to_string(a) + ", s'=" + std::to_string(s2) + ")";
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                return "transition row does not sum to 1 at (s=" + std::to_string(s) +
                       ", a=" + std::to_string(a) + "): sum=" + std::to_string(sum);
        }
    }
    return std::nullopt;
}

/// Visit counts per state-action pair with the knownness threshold.
/// A pair is known once it has been visited n_known times.
class KnownSet {
public:
    KnownSet() = default;

    KnownSet(int n_states, int n_actions, int n_known)
        : n_states_(n_states), n_actions_(n_actions), n_known_(n_known),
          counts_(static_cast<size_t>(n_states) * n_actions, 0) {
        if (n_known <= 0) throw std::invalid_argument("KnownSet: n_known must be positive");
    }

    int count(int s, int a) const { return counts_[static_cast<size_t>(s) * n_actions_ + a]; }
    bool known(int s, int a) const { return count(s, a) >= n_known_; }

    /// Returns the new count. Counts only ever increase.
    int increment(int s, int a) { return ++counts_[static_cast<size_t>(s) * n_actions_ + a]; }

    int n_known() const { return n_known_; }
    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    int known_pairs() const {
        return static_cast<int>(std::count_if(counts_.begin(), counts_.end(),
                                              [this](int c) { return c >= n_known_; }));
    }
    bool all_known() const { return known_pairs() == static_cast<int>(counts_.size()); }

    std::vector<int>& counts() { return counts_; }
    const std::vector<int>& counts() const { return counts_; }

    bool operator==(const KnownSet& other) const = default;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    int n_known_ = 1;
    std::vector<int> counts_;
};

}  // namespace lrl
