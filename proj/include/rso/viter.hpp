#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rso/operators.hpp"

namespace rso {

/// One entry per iterate: the state-value vector V_k, the sup-norm step
/// ||V_k - V_{k-1}||, and the beta draw used in the update that produced
/// this iterate (0 for k = 0 and for deterministic operators).
struct IterationStep {
    std::int64_t k;
    std::vector<double> v;
    double sup_delta;
    double beta;
};

/// Full action-gap table V_k(x) - Q_k(x,a), recorded every `stride` iterations.
struct GapSnapshot {
    std::int64_t k;
    std::vector<double> gaps; // flattened (x * n_actions + a)
};

struct IterationTrace {
    std::vector<IterationStep> steps;     // k = 0 .. k_max
    std::vector<GapSnapshot> snapshots;   // k = 0, stride, 2*stride, ..., k_max
    int n_states = 0;
    int n_actions = 0;
    int snapshot_stride = 1;
};

namespace detail {

inline std::vector<double> gap_table(const QTable& q) {
    std::vector<double> gaps(static_cast<std::size_t>(q.n_states()) * q.n_actions());
    for (int x = 0; x < q.n_states(); ++x) {
        const double v = greedy_value(q, x).value;
        for (int a = 0; a < q.n_actions(); ++a)
            gaps[static_cast<std::size_t>(x) * q.n_actions() + a] = v - q(x, a);
    }
    return gaps;
}

} // namespace detail

/// Synchronous operator iteration Q_{k+1} = T Q_k applied to every (x,a)
/// simultaneously. For the robust stochastic operator exactly one beta_k is
/// drawn per sweep and shared by all pairs. Deterministic given the seed.
inline std::pair<QTable, IterationTrace> iterate_operator(const TabularMdp& mdp,
                                                          const OperatorKind& kind, QTable q0,
                                                          std::int64_t k_max, std::uint64_t seed,
                                                          int snapshot_stride = 10) {
    if (k_max < 1) throw std::invalid_argument("iterate_operator: k_max must be >= 1");
    if (snapshot_stride < 1) throw std::invalid_argument("iterate_operator: stride must be >= 1");
    if (!q0.same_shape(mdp))
        throw std::invalid_argument("iterate_operator: q0 dimensions do not match the MDP");

    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    Rng rng(seed);

    IterationTrace trace;
    trace.n_states = S;
    trace.n_actions = A;
    trace.snapshot_stride = snapshot_stride;
    trace.steps.reserve(static_cast<std::size_t>(k_max) + 1);

    std::vector<double> v(S);
    for (int x = 0; x < S; ++x) v[x] = greedy_value(q0, x).value;
    trace.steps.push_back({0, v, 0.0, 0.0});
    trace.snapshots.push_back({0, detail::gap_table(q0)});

    QTable q = std::move(q0);
    QTable next(S, A);
    for (std::int64_t k = 0; k < k_max; ++k) {
        double beta = 0.0;
        if (kind.is_rso()) beta = kind.beta_spec().sample(k, rng);
        for (int x = 0; x < S; ++x) {
            const double vx = greedy_value(q, x).value;
            for (int a = 0; a < A; ++a) {
                double value;
                switch (kind.tag()) {
                case OperatorKind::Tag::Bellman:
                    value = bellman_backup(mdp, q, x, a);
                    break;
                case OperatorKind::Tag::Consistent:
                    value = consistent_backup(mdp, q, x, a);
                    break;
                default:
                    value = bellman_backup(mdp, q, x, a) - beta * (vx - q(x, a));
                    break;
                }
                next(x, a) = value;
            }
        }
        std::swap(q, next);

        double sup_delta = 0.0;
        std::vector<double> v_next(S);
        for (int x = 0; x < S; ++x) {
            v_next[x] = greedy_value(q, x).value;
            sup_delta = std::max(sup_delta, std::abs(v_next[x] - trace.steps.back().v[x]));
        }
        trace.steps.push_back({k + 1, std::move(v_next), sup_delta, beta});
        if ((k + 1) % snapshot_stride == 0 || k + 1 == k_max)
            trace.snapshots.push_back({k + 1, detail::gap_table(q)});
    }
    return {std::move(q), std::move(trace)};
}

/// Per-pair convergence summary of a trace against the exact fixed point.
struct ConvergenceReport {
    std::vector<double> v_error;       // |V_final(x) - V*(x)| per state
    std::vector<double> tail_min_gap;  // min over tail snapshots, per (x,a)
    std::vector<double> true_gap;      // V*(x) - Q*(x,a), per (x,a)
    double max_v_error = 0.0;
    std::int64_t tail_start_k = 0;     // first iteration included in the tail
};

/// Summarizes a trace: final per-state error against V* and, per pair, the
/// minimum action gap over the last 10% of iterations (a conservative
/// finite-k stand-in for the limiting gap), next to the true gap V* - Q*.
inline ConvergenceReport convergence_report(const IterationTrace& trace, const QTable& q_star) {
    if (trace.steps.empty()) throw std::invalid_argument("convergence_report: empty trace");
    if (trace.n_states != q_star.n_states() || trace.n_actions != q_star.n_actions())
        throw std::invalid_argument("convergence_report: trace and q_star dimensions differ");

    const int S = trace.n_states;
    const int A = trace.n_actions;
    ConvergenceReport rep;

    std::vector<double> v_star(S);
    for (int x = 0; x < S; ++x) v_star[x] = greedy_value(q_star, x).value;

    const std::vector<double>& v_final = trace.steps.back().v;
    rep.v_error.resize(S);
    for (int x = 0; x < S; ++x) {
        rep.v_error[x] = std::abs(v_final[x] - v_star[x]);
        rep.max_v_error = std::max(rep.max_v_error, rep.v_error[x]);
    }

    const std::int64_t k_final = trace.steps.back().k;
    rep.tail_start_k = k_final - k_final / 10; // last 10% of iterations
    rep.tail_min_gap.assign(static_cast<std::size_t>(S) * A,
                            std::numeric_limits<double>::infinity());
    for (const GapSnapshot& snap : trace.snapshots) {
        if (snap.k < rep.tail_start_k) continue;
        for (std::size_t i = 0; i < snap.gaps.size(); ++i)
            rep.tail_min_gap[i] = std::min(rep.tail_min_gap[i], snap.gaps[i]);
    }

    rep.true_gap.resize(static_cast<std::size_t>(S) * A);
    for (int x = 0; x < S; ++x)
        for (int a = 0; a < A; ++a)
            rep.true_gap[static_cast<std::size_t>(x) * A + a] = v_star[x] - q_star(x, a);
    return rep;
}

/// Checks the geometric-tail lower bound on every consecutive pair of
/// iterates: V_{k+1}(x) - V_k(x) >= -gamma^k * ||V_1 - V_0||_inf, with 1e-9
/// absolute slack. Holds on every sample path of the operator family.
inline bool geometric_tail_check(const IterationTrace& trace, double gamma) {
    constexpr double slack = 1e-9;
    if (trace.steps.size() < 2) return true;
    double first_step = 0.0;
    for (int x = 0; x < trace.n_states; ++x)
        first_step = std::max(first_step, std::abs(trace.steps[1].v[x] - trace.steps[0].v[x]));
    double bound = first_step; // gamma^k * ||V_1 - V_0||, k = 0
    for (std::size_t i = 1; i < trace.steps.size(); ++i) {
        for (int x = 0; x < trace.n_states; ++x) {
            const double diff = trace.steps[i].v[x] - trace.steps[i - 1].v[x];
            if (diff < -bound - slack) return false;
        }
        bound *= gamma;
    }
    return true;
}

} // namespace rso
