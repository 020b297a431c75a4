#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lrl/mdp.hpp"

namespace lrl {

/// Worst-case sweep budget for reaching precision eps_q in max norm:
/// ceil( 1/(1-gamma) * ln( 1/(eps_q * (1-gamma)) ) ).
inline int vi_iteration_budget(double gamma, double eps_q) {
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("vi_iteration_budget: need 0 <= gamma < 1");
    if (eps_q <= 0.0) throw std::invalid_argument("vi_iteration_budget: eps_q must be positive");
    const double budget = std::ceil(1.0 / (1.0 - gamma) * std::log(1.0 / (eps_q * (1.0 - gamma))));
    return std::max(1, static_cast<int>(budget));
}

namespace detail {

// Early-stop threshold on the sweep-to-sweep max-norm difference that
// guarantees ||Q - Q*|| <= eps_q / 2.
inline double span_stop_threshold(double modulus, double eps_q) {
    if (modulus <= 0.0) return std::numeric_limits<double>::infinity();
    return eps_q * (1.0 - modulus) / (2.0 * modulus);
}

}  // namespace detail

/// Q* of a ground-truth task by synchronous (Jacobi) value iteration from
/// zero, capped at the worst-case sweep budget.
inline PairTable value_iteration(const TabularMdp& mdp, double eps_q) {
    if (mdp.discount >= 1.0 || mdp.discount < 0.0)
        throw std::invalid_argument("value_iteration: need 0 <= gamma < 1");
    if (eps_q <= 0.0) throw std::invalid_argument("value_iteration: eps_q must be positive");

    const int S = mdp.n_states, A = mdp.n_actions;
    const double gamma = mdp.discount;
    const int budget = vi_iteration_budget(gamma, eps_q);
    const double stop = detail::span_stop_threshold(gamma, eps_q);

    PairTable q(S, A, 0.0), next(S, A, 0.0);
    std::vector<double> v(S, 0.0);
    double prev_diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < budget; ++it) {
        for (int s = 0; s < S; ++s) v[s] = q.state_max(s);
        double diff = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(s, a);
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * v[s2];
                const double val = mdp.r(s, a) + gamma * acc;
                diff = std::max(diff, std::abs(val - q(s, a)));
                next(s, a) = val;
            }
        }
        std::swap(q, next);
        assert(diff <= gamma * prev_diff + 1e-9);  // contraction certificate
        prev_diff = diff;
        if (diff < stop) break;
    }
    return q;
}

/// Solves the optimistic-bound backup: on known pairs the Bellman backup
/// through the learned model, on unknown pairs the given upper bound u.
/// Iterates from above so every sweep stays an upper bound on the fixed
/// point; pass warm_start (itself >= the fixed point) to resume.
inline PairTable solve_optimistic_q(const TabularMdp& model, const KnownSet& known,
                                    const PairTable& u, double eps_q,
                                    const PairTable* warm_start = nullptr) {
    if (model.discount >= 1.0 || model.discount < 0.0)
        throw std::invalid_argument("solve_optimistic_q: need 0 <= gamma < 1");
    if (eps_q <= 0.0) throw std::invalid_argument("solve_optimistic_q: eps_q must be positive");
    const int S = model.n_states, A = model.n_actions;
    if (u.n_states() != S || u.n_actions() != A || known.n_states() != S || known.n_actions() != A)
        throw std::invalid_argument("solve_optimistic_q: dimension mismatch");
    if (!u.all_finite()) throw std::invalid_argument("solve_optimistic_q: u must be finite");
    const double gamma = model.discount;
    const double ceiling = model.q_ceiling();
    for (double uv : u.data())
        if (uv > ceiling + 1e-9)
            throw std::invalid_argument("solve_optimistic_q: u exceeds 1/(1-gamma)");

    PairTable q(S, A, ceiling);
    if (warm_start != nullptr && warm_start->same_shape(u)) q = *warm_start;
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            if (!known.known(s, a)) q(s, a) = u(s, a);

    const int budget = vi_iteration_budget(gamma, eps_q);
    const double stop = detail::span_stop_threshold(gamma, eps_q);
    PairTable next = q;
    std::vector<double> v(S, 0.0);
    for (int it = 0; it < budget; ++it) {
        for (int s = 0; s < S; ++s) v[s] = q.state_max(s);
        double diff = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                if (!known.known(s, a)) continue;
                const double* row = model.row(s, a);
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * v[s2];
                const double val = model.r(s, a) + gamma * acc;
                diff = std::max(diff, std::abs(val - q(s, a)));
                next(s, a) = val;
            }
        }
        std::swap(q, next);
        if (diff < stop) break;
    }
    return q;
}

/// Generic contraction fixed-point solver for pair-indexed equations of
/// the form d = local + backup(d), where backup shrinks max-norm gaps by
/// the given modulus. The backup receives the per-state action maxima and
/// the global maximum of the current iterate. Starts from zero (iterates
/// are then monotone nondecreasing for local >= 0), or from warm_start.
template <class Backup>
PairTable solve_pair_fixed_point(const PairTable& local, Backup&& backup, double modulus,
                                 double eps_q, const PairTable* warm_start = nullptr) {
    if (modulus >= 1.0)
        throw std::invalid_argument("solve_pair_fixed_point: modulus must be < 1");
    if (modulus < 0.0)
        throw std::invalid_argument("solve_pair_fixed_point: modulus must be nonnegative");
    if (eps_q <= 0.0)
        throw std::invalid_argument("solve_pair_fixed_point: eps_q must be positive");
    const int S = local.n_states(), A = local.n_actions();

    PairTable d(S, A, 0.0);
    const bool from_zero = (warm_start == nullptr);
    if (!from_zero) {
        if (!warm_start->same_shape(local))
            throw std::invalid_argument("solve_pair_fixed_point: warm start shape mismatch");
        d = *warm_start;
    }

    const double stop = detail::span_stop_threshold(modulus, eps_q);
    // Sweep cap from the geometric error decay of the zero start; generous
    // for warm starts, which only ever stop sooner.
    double scale = 0.0;
    for (double lv : local.data()) scale = std::max(scale, std::abs(lv));
    int budget = 1;
    if (modulus > 0.0 && scale > 0.0) {
        const double target = eps_q * (1.0 - modulus) / 2.0;
        budget = std::max(1, static_cast<int>(std::ceil(std::log(scale / target) /
                                                        -std::log(modulus))) + 2);
    }

    PairTable next = d;
    std::vector<double> dv(S, 0.0);
#ifndef NDEBUG
    double prev_diff = std::numeric_limits<double>::infinity();
    bool local_nonneg = std::all_of(local.data().begin(), local.data().end(),
                                    [](double v) { return v >= 0.0; });
#endif
    for (int it = 0; it < budget; ++it) {
        double global_max = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < S; ++s) {
            dv[s] = d.state_max(s);
            global_max = std::max(global_max, dv[s]);
        }
        double diff = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double val = local(s, a) + backup(d, dv, global_max, s, a);
                diff = std::max(diff, std::abs(val - d(s, a)));
                next(s, a) = val;
            }
        }
#ifndef NDEBUG
        if (from_zero && local_nonneg)
            for (size_t i = 0; i < d.size(); ++i)
                assert(next.data()[i] >= d.data()[i] - 1e-9);  // monotone from zero
        assert(diff <= modulus * prev_diff + 1e-9);            // contraction certificate
        prev_diff = diff;
#endif
        std::swap(d, next);
        if (diff <= stop) break;
    }
    return d;
}

}  // namespace lrl
