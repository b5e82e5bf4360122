#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rso/parallel.hpp"
#include "rso/viter.hpp"

namespace rso {

/// Empirical sample of a scalar statistic across independent trials.
struct SampleSet {
    std::vector<double> values;
    std::string label;
    std::uint64_t seed_begin = 0;
    std::uint64_t seed_end = 0; // exclusive

    double mean() const {
        return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    }
    double variance() const {
        const double m = mean();
        double acc = 0.0;
        for (double v : values) acc += (v - m) * (v - m);
        return values.size() > 1 ? acc / (values.size() - 1) : 0.0;
    }
};

struct OrderVerdict {
    bool pass = false;
    double max_violation = 0.0;
    double mean_difference = 0.0; // only meaningful for the convex check
    std::string detail;
};

/// Collects the tail-min action gap at one (state, action) pair over
/// n_trials independent iterate_operator sample paths seeded
/// base_seed .. base_seed + n_trials - 1. `tail_fraction` controls the
/// trailing window of the liminf estimate (default: last 10% of iterations).
/// If the pair is optimal under Q* its limiting gap is 0 for every trial;
/// the function then skips the runs and returns an all-zero set.
inline SampleSet gap_distribution(const TabularMdp& mdp, const OperatorKind& kind,
                                  std::pair<int, int> pair, int n_trials, std::int64_t k_max,
                                  std::uint64_t base_seed, double tail_fraction = 0.10,
                                  int snapshot_stride = 1) {
    const auto [x, a] = pair;
    mdp.check_state(x);
    mdp.check_action(a);
    if (n_trials < 1) throw std::invalid_argument("gap_distribution: n_trials must be >= 1");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("gap_distribution: tail_fraction must lie in (0,1]");

    SampleSet set;
    set.label = kind.to_string() + " gap(" + std::to_string(x) + "," + std::to_string(a) + ")";
    set.seed_begin = base_seed;
    set.seed_end = base_seed + static_cast<std::uint64_t>(n_trials);

    const QTable q_star = exact_q_star(mdp, 1e-12, 1000000);
    if (action_gap(q_star, x, a) <= 1e-9) {
        set.label += " [optimal pair: degenerate zero gap]";
        set.values.assign(n_trials, 0.0);
        return set;
    }

    set.values.assign(n_trials, 0.0);
    const std::size_t flat = static_cast<std::size_t>(x) * mdp.n_actions() + a;
    parallel_for_index(static_cast<std::size_t>(n_trials), [&](std::size_t i) {
        auto [q, trace] = iterate_operator(mdp, kind, QTable(mdp.n_states(), mdp.n_actions()),
                                           k_max, base_seed + i, snapshot_stride);
        const std::int64_t tail_start =
            k_max - static_cast<std::int64_t>(static_cast<double>(k_max) * tail_fraction);
        double tail_min = std::numeric_limits<double>::infinity();
        for (const GapSnapshot& snap : trace.snapshots)
            if (snap.k >= tail_start) tail_min = std::min(tail_min, snap.gaps[flat]);
        set.values[i] = tail_min;
    });
    return set;
}

/// Empirical CDF F(t) = #{v <= t} / n of a sorted sample.
inline double empirical_cdf(const std::vector<double>& sorted, double t) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) /
           static_cast<double>(sorted.size());
}

/// Three times the worst-case binomial standard error of the difference of
/// two empirical CDFs; the documented sampling tolerance for the
/// stochastic-order check.
inline double stochastic_order_tolerance(std::size_t n_hat, std::size_t n_tilde) {
    return 3.0 * std::sqrt(0.25 / static_cast<double>(n_hat) + 0.25 / static_cast<double>(n_tilde));
}

/// PASS iff hat dominates tilde in the stochastic order up to tol:
/// F_hat(t) <= F_tilde(t) + tol at every pooled sample point t.
inline OrderVerdict check_stochastic_order(const SampleSet& hat, const SampleSet& tilde,
                                           double tol) {
    if (hat.values.empty() || tilde.values.empty())
        throw std::invalid_argument("check_stochastic_order: empty sample set");
    std::vector<double> hs = hat.values, ts = tilde.values;
    std::sort(hs.begin(), hs.end());
    std::sort(ts.begin(), ts.end());
    std::vector<double> pooled = hs;
    pooled.insert(pooled.end(), ts.begin(), ts.end());
    std::sort(pooled.begin(), pooled.end());

    OrderVerdict v;
    for (double t : pooled)
        v.max_violation = std::max(v.max_violation, empirical_cdf(hs, t) - empirical_cdf(ts, t));
    v.pass = v.max_violation <= tol;
    v.detail = "max CDF violation " + std::to_string(v.max_violation) + " vs tol " +
               std::to_string(tol);
    return v;
}

/// Three times the standard error of the difference of the two sample means;
/// the documented sampling tolerance for the convex-order check (it also
/// bounds the noise of each stop-loss estimate, whose per-sample terms are
/// 1-Lipschitz images of the underlying values).
inline double convex_order_tolerance(const SampleSet& hat, const SampleSet& tilde) {
    return 3.0 * std::sqrt(hat.variance() / hat.values.size() +
                           tilde.variance() / tilde.values.size());
}

/// Evenly spaced grid spanning the pooled sample range, for the stop-loss
/// characterization of the convex order.
inline std::vector<double> default_threshold_grid(const SampleSet& hat, const SampleSet& tilde,
                                                  int points = 41) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* s : {&hat, &tilde})
        for (double v : s->values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    return grid;
}

/// PASS iff the samples are compatible with hat >=_cx tilde: means agree
/// within tol and the stop-loss transform E[(X - c)+] of hat dominates that
/// of tilde within tol at every grid threshold c.
inline OrderVerdict check_convex_order(const SampleSet& hat, const SampleSet& tilde,
                                       const std::vector<double>& threshold_grid, double tol) {
    if (hat.values.empty() || tilde.values.empty())
        throw std::invalid_argument("check_convex_order: empty sample set");
    if (threshold_grid.empty())
        throw std::invalid_argument("check_convex_order: empty threshold grid");

    auto stop_loss = [](const std::vector<double>& vs, double c) {
        double acc = 0.0;
        for (double v : vs) acc += std::max(v - c, 0.0);
        return acc / static_cast<double>(vs.size());
    };

    OrderVerdict v;
    v.mean_difference = hat.mean() - tilde.mean();
    for (double c : threshold_grid)
        v.max_violation =
            std::max(v.max_violation, stop_loss(tilde.values, c) - stop_loss(hat.values, c));
    v.pass = std::abs(v.mean_difference) <= tol && v.max_violation <= tol;
    v.detail = "mean difference " + std::to_string(v.mean_difference) + ", max stop-loss violation " +
               std::to_string(v.max_violation) + " vs tol " + std::to_string(tol);
    return v;
}

/// One-step variance decomposition at a fixed table: conditioned on q, the
/// only randomness in the robust backup is beta, so
///   Var[T_beta Q(x,a)] = Var[beta] * (V(x) - Q(x,a))^2.
/// Returns the Monte Carlo estimate over n_samples beta draws next to that
/// closed form.
inline std::pair<double, double> one_step_variance_identity(const TabularMdp& mdp, const QTable& q,
                                                            std::pair<int, int> pair,
                                                            const BetaSpec& spec, int n_samples,
                                                            std::uint64_t seed) {
    const auto [x, a] = pair;
    if (n_samples < 2)
        throw std::invalid_argument("one_step_variance_identity: need at least 2 samples");
    Rng rng(seed);
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double value = rso_backup(mdp, q, x, a, spec.sample(0, rng));
        const double delta = value - mean;
        mean += delta / (i + 1);
        m2 += delta * (value - mean);
    }
    const double mc_variance = m2 / (n_samples - 1);
    const double gap = action_gap(q, x, a);
    const double analytic_variance = spec.variance() * gap * gap;
    return {mc_variance, analytic_variance};
}

} // namespace rso
