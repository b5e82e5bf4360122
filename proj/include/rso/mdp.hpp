#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rso/rng.hpp"

namespace rso {

/// Thrown when an iterative solver fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// Finite discounted MDP with dense transition and reward tables.
/// Immutable after construction; the constructor validates that every
/// transition row is a probability distribution (sum 1 within 1e-9, no
/// negative entries), gamma is in [0,1) and all rewards are finite.
class TabularMdp {
public:
    TabularMdp(int n_states, int n_actions,
               std::vector<double> transition, // [(x*A + a)*S + x']
               std::vector<double> reward,     // [x*A + a]
               double gamma)
        : n_states_(n_states),
          n_actions_(n_actions),
          transition_(std::move(transition)),
          reward_(std::move(reward)),
          gamma_(gamma) {
        if (n_states_ < 1 || n_actions_ < 1)
            throw std::invalid_argument("TabularMdp: need at least one state and one action");
        if (!(gamma_ >= 0.0 && gamma_ < 1.0))
            throw std::invalid_argument("TabularMdp: gamma must lie in [0,1)");
        const std::size_t pairs = static_cast<std::size_t>(n_states_) * n_actions_;
        if (transition_.size() != pairs * n_states_ || reward_.size() != pairs)
            throw std::invalid_argument("TabularMdp: table sizes do not match n_states/n_actions");
        for (double r : reward_)
            if (!std::isfinite(r))
                throw std::invalid_argument("TabularMdp: rewards must be finite");
        for (std::size_t row = 0; row < pairs; ++row) {
            double sum = 0.0;
            for (int y = 0; y < n_states_; ++y) {
                const double pr = transition_[row * n_states_ + y];
                if (pr < 0.0 || !std::isfinite(pr))
                    throw std::invalid_argument("TabularMdp: transition entries must be nonnegative");
                sum += pr;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("TabularMdp: transition row " + std::to_string(row) +
                                            " sums to " + std::to_string(sum));
        }
    }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double gamma() const { return gamma_; }

    /// P(y | x, a)
    double p(int x, int a, int y) const {
        return transition_[(static_cast<std::size_t>(x) * n_actions_ + a) * n_states_ + y];
    }

    /// R(x, a)
    double r(int x, int a) const {
        return reward_[static_cast<std::size_t>(x) * n_actions_ + a];
    }

    const std::vector<double>& transition_table() const { return transition_; }
    const std::vector<double>& reward_table() const { return reward_; }

    double max_abs_reward() const {
        double m = 0.0;
        for (double r : reward_) m = std::max(m, std::abs(r));
        return m;
    }

    void check_state(int x) const {
        if (x < 0 || x >= n_states_)
            throw std::out_of_range("state index " + std::to_string(x) + " out of range");
    }
    void check_action(int a) const {
        if (a < 0 || a >= n_actions_)
            throw std::out_of_range("action index " + std::to_string(a) + " out of range");
    }

private:
    int n_states_;
    int n_actions_;
    std::vector<double> transition_;
    std::vector<double> reward_;
    double gamma_;
};

/// State-action value table Q(x,a). Single-writer; cheap to copy.
class QTable {
public:
    QTable(int n_states, int n_actions, double init = 0.0)
        : n_states_(n_states),
          n_actions_(n_actions),
          values_(static_cast<std::size_t>(n_states) * n_actions, init) {
        if (n_states < 1 || n_actions < 1)
            throw std::invalid_argument("QTable: need at least one state and one action");
    }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    double operator()(int x, int a) const {
        return values_[static_cast<std::size_t>(x) * n_actions_ + a];
    }
    double& operator()(int x, int a) {
        return values_[static_cast<std::size_t>(x) * n_actions_ + a];
    }

    double at(int x, int a) const {
        check_index(x, a);
        return (*this)(x, a);
    }
    void set(int x, int a, double v) {
        check_index(x, a);
        (*this)(x, a) = v;
    }

    const std::vector<double>& values() const { return values_; }

    bool same_shape(const TabularMdp& mdp) const {
        return n_states_ == mdp.n_states() && n_actions_ == mdp.n_actions();
    }

    void check_index(int x, int a) const {
        if (x < 0 || x >= n_states_)
            throw std::out_of_range("state index " + std::to_string(x) + " out of range");
        if (a < 0 || a >= n_actions_)
            throw std::out_of_range("action index " + std::to_string(a) + " out of range");
    }

private:
    int n_states_;
    int n_actions_;
    std::vector<double> values_;
};

struct GreedyResult {
    double value;
    int action;
};

/// V(x) = max_a Q(x,a) together with the smallest action index attaining it.
/// The tie-break is a pure function of the row: strict > comparison keeps
/// the lowest index, so identical rows give identical actions everywhere.
inline GreedyResult greedy_value(const QTable& q, int x) {
    q.check_index(x, 0);
    double best = q(x, 0);
    int best_a = 0;
    for (int a = 1; a < q.n_actions(); ++a) {
        const double v = q(x, a);
        if (v > best) {
            best = v;
            best_a = a;
        }
    }
    return {best, best_a};
}

/// Finite-k action gap V(x) - Q(x,a); nonnegative by construction.
inline double action_gap(const QTable& q, int x, int a) {
    q.check_index(x, a);
    return greedy_value(q, x).value - q(x, a);
}

/// Margin between the best and second-best entry of row x; 0 for a
/// single-action table. This is the per-state summary used in gap reports.
inline double second_best_margin(const QTable& q, int x) {
    q.check_index(x, 0);
    if (q.n_actions() == 1) return 0.0;
    const GreedyResult g = greedy_value(q, x);
    double second = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.n_actions(); ++a) {
        if (a == g.action) continue;
        second = std::max(second, q(x, a));
    }
    return g.value - second;
}

namespace detail {

/// One synchronous Bellman sweep; returns the sup-norm residual ||T_B q - q||.
inline double bellman_sweep(const TabularMdp& mdp, const QTable& src, QTable& dst) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    std::vector<double> v(S);
    for (int x = 0; x < S; ++x) v[x] = greedy_value(src, x).value;
    double residual = 0.0;
    for (int x = 0; x < S; ++x) {
        for (int a = 0; a < A; ++a) {
            double cont = 0.0;
            for (int y = 0; y < S; ++y) cont += mdp.p(x, a, y) * v[y];
            const double backed = mdp.r(x, a) + mdp.gamma() * cont;
            residual = std::max(residual, std::abs(backed - src(x, a)));
            dst(x, a) = backed;
        }
    }
    return residual;
}

} // namespace detail

/// Exact fixed point of the Bellman operator by value iteration, stopping
/// when the sup-norm residual ||T_B Q - Q|| drops below tol. Throws
/// ConvergenceError (carrying the final residual) if max_iters is exhausted.
inline QTable exact_q_star(const TabularMdp& mdp, double tol = 1e-10, int max_iters = 100000) {
    if (!(tol > 0.0)) throw std::invalid_argument("exact_q_star: tol must be positive");
    QTable q(mdp.n_states(), mdp.n_actions());
    QTable next(mdp.n_states(), mdp.n_actions());
    double residual = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        residual = detail::bellman_sweep(mdp, q, next);
        std::swap(q, next);
        if (residual <= tol) return q;
    }
    throw ConvergenceError("exact_q_star: residual " + std::to_string(residual) +
                               " above tol after " + std::to_string(max_iters) + " iterations",
                           residual);
}

/// Random MDP generator for test corpora. Transition rows are drawn from a
/// symmetric Dirichlet(1) via normalized exponentials, rewards uniform in
/// [0,1]. Fully determined by the seed.
inline TabularMdp random_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("random_mdp: need at least one state and one action");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("random_mdp: gamma must lie in [0,1)");
    Rng rng(seed);
    const std::size_t pairs = static_cast<std::size_t>(n_states) * n_actions;
    std::vector<double> transition(pairs * n_states);
    std::vector<double> reward(pairs);
    for (std::size_t row = 0; row < pairs; ++row) {
        double sum = 0.0;
        for (int y = 0; y < n_states; ++y) {
            const double e = -std::log(1.0 - rng.uniform()); // Exp(1)
            transition[row * n_states + y] = e;
            sum += e;
        }
        for (int y = 0; y < n_states; ++y) transition[row * n_states + y] /= sum;
    }
    for (std::size_t i = 0; i < pairs; ++i) reward[i] = rng.uniform();
    return TabularMdp(n_states, n_actions, std::move(transition), std::move(reward), gamma);
}

} // namespace rso
