#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rso/discretize.hpp"
#include "rso/operators.hpp"

namespace rso {

/// Scalar schedule for learning rate and exploration parameters.
///   constant(v)                   always v
///   linear_decay(start,end,steps) linear from start to end over `steps`
///                                 ticks, then flat at end
///   inverse_visit(c)              c / (c + n) where n is the per-(x,a)
///                                 visit count (learning-rate style)
class Schedule {
public:
    static Schedule constant(double v) {
        check_unit("constant value", v);
        return Schedule(Kind::Constant, v, 0.0, 1);
    }
    static Schedule linear_decay(double start, double end, std::int64_t steps) {
        check_unit("linear start", start);
        check_unit("linear end", end);
        if (steps < 1) throw std::invalid_argument("Schedule: steps must be >= 1");
        return Schedule(Kind::LinearDecay, start, end, steps);
    }
    static Schedule inverse_visit(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("Schedule: inverse-visit c must be > 0");
        return Schedule(Kind::InverseVisit, c, 0.0, 1);
    }

    /// Value at tick k (episode index, step index or visit count depending
    /// on what drives this schedule).
    double at(std::int64_t k) const {
        switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::LinearDecay: {
            if (k >= steps_) return b_;
            const double t = static_cast<double>(k) / static_cast<double>(steps_);
            return a_ + (b_ - a_) * t;
        }
        case Kind::InverseVisit: return a_ / (a_ + static_cast<double>(k));
        }
        return 0.0;
    }

    bool is_visit_driven() const { return kind_ == Kind::InverseVisit; }

    std::string to_string() const {
        switch (kind_) {
        case Kind::Constant: return "constant:" + fmt(a_);
        case Kind::LinearDecay:
            return "linear:" + fmt(a_) + ":" + fmt(b_) + ":" + std::to_string(steps_);
        case Kind::InverseVisit: return "visit:" + fmt(a_);
        }
        return {};
    }

    /// Accepts `constant:v`, `linear:start:end:steps`, `visit:c`.
    static Schedule parse(std::string_view text) {
        auto num = [](std::string_view s) { return std::stod(std::string(s)); };
        if (text.rfind("constant:", 0) == 0) return constant(num(text.substr(9)));
        if (text.rfind("visit:", 0) == 0) return inverse_visit(num(text.substr(6)));
        if (text.rfind("linear:", 0) == 0) {
            const auto parts = detail::split(text.substr(7), ':');
            if (parts.size() != 3)
                throw std::invalid_argument("Schedule: linear form is linear:start:end:steps");
            return linear_decay(num(parts[0]), num(parts[1]),
                                std::stoll(std::string(parts[2])));
        }
        throw std::invalid_argument("Schedule: unknown schedule '" + std::string(text) + "'");
    }

private:
    enum class Kind { Constant, LinearDecay, InverseVisit };

    Schedule(Kind kind, double a, double b, std::int64_t steps)
        : kind_(kind), a_(a), b_(b), steps_(steps) {}

    static void check_unit(const char* what, double v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(std::string("Schedule: ") + what + " must lie in [0,1]");
    }
    static std::string fmt(double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    }

    Kind kind_;
    double a_;
    double b_;
    std::int64_t steps_;
};

/// Epsilon-greedy action choice: with probability eps a uniformly random
/// action, otherwise the greedy (lowest-index tie-break) action. Consumes
/// one uniform draw, plus one more when exploring.
inline int epsilon_greedy(const QTable& q, int x, double eps, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("epsilon_greedy: eps must lie in [0,1]");
    q.check_index(x, 0);
    if (rng.uniform() < eps) return rng.uniform_int(q.n_actions());
    return greedy_value(q, x).action;
}

/// The generic damped update q[x,a] <- (1-alpha) q[x,a] + alpha * target;
/// returns the new entry value. alpha = 1 is pure operator application.
inline double td_update(QTable& q, int x, int a, double target, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("td_update: alpha must lie in (0,1]");
    q.check_index(x, a);
    const double updated = (1.0 - alpha) * q(x, a) + alpha * target;
    q(x, a) = updated;
    return updated;
}

/// Mutable cross-episode training state: per-pair visit counts (for
/// visit-driven learning rates) and the global update counter that indexes
/// beta schedules.
struct EpisodeContext {
    std::vector<std::int64_t> visits;
    std::int64_t updates = 0;

    void ensure_size(const QTable& q) {
        visits.resize(static_cast<std::size_t>(q.n_states()) * q.n_actions(), 0);
    }
};

struct EpisodeResult {
    double score = 0.0;
    int steps = 0;
    double mean_gap = 0.0; // mean best-vs-second-best margin over visited states
};

/// Runs one training episode: epsilon-greedy behavior, one sampled_target
/// per transition (with a fresh beta draw per update for the robust
/// operator), td_update on the visited pair, termination on done or at the
/// episode cap. Two streams are consumed: env_rng only for the environment
/// (reset), agent_rng for action selection and beta draws, so paired trials
/// see identical start states across operators.
inline EpisodeResult run_episode(const EnvKind& env, const GridSpec& grid, QTable& q,
                                 const OperatorKind& kind, const Schedule& alpha_sched, double eps,
                                 double gamma, Rng& env_rng, Rng& agent_rng, EpisodeContext& ctx,
                                 bool learn = true) {
    if (grid.n_dims() != env.state_dim())
        throw std::invalid_argument("run_episode: grid does not match the environment");
    if (q.n_states() != grid.n_states() || q.n_actions() != env.n_actions())
        throw std::invalid_argument("run_episode: q table does not match grid/environment");
    ctx.ensure_size(q);

    ContinuousState s = env.reset(env_rng);
    int x = state_index(grid, s);
    EpisodeResult out;
    double gap_sum = 0.0;

    for (int t = 0; t < env.episode_cap(); ++t) {
        const int a = epsilon_greedy(q, x, eps, agent_rng);
        gap_sum += second_best_margin(q, x);
        const StepResult sr = env.step(s, a, env_rng);
        const int x_next = state_index(grid, sr.state);

        if (learn) {
            double beta = 0.0;
            if (kind.is_rso()) beta = kind.beta_spec().sample(ctx.updates, agent_rng);
            const double target =
                sampled_target(kind, q, x, a, sr.reward, x_next, gamma, beta, sr.done);
            const std::size_t flat = static_cast<std::size_t>(x) * q.n_actions() + a;
            ctx.visits[flat] += 1;
            const double alpha = alpha_sched.is_visit_driven() ? alpha_sched.at(ctx.visits[flat])
                                                               : alpha_sched.at(ctx.updates);
            td_update(q, x, a, target, alpha);
            ctx.updates += 1;
        }

        out.steps = t + 1;
        s = sr.state;
        x = x_next;
        if (sr.done) break;
    }
    out.score = static_cast<double>(out.steps);
    out.mean_gap = out.steps > 0 ? gap_sum / out.steps : 0.0;
    return out;
}

/// Per-trial training artifacts.
struct TrialRecord {
    std::uint64_t seed = 0;
    std::vector<double> scores;    // per episode
    std::vector<double> mean_gaps; // per episode
    QTable final_q{1, 1};
};

struct TrainConfig {
    Schedule alpha = Schedule::constant(0.1);
    Schedule eps = Schedule::constant(0.1);
    double gamma = 0.99;
};

/// Trains a fresh zero-initialized table for `episodes` episodes.
/// Deterministic given the seed: the environment stream and the agent
/// stream are both derived from it.
inline TrialRecord train(const EnvKind& env, const GridSpec& grid, const OperatorKind& kind,
                         int episodes, const TrainConfig& cfg, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("train: episodes must be >= 1");
    TrialRecord rec;
    rec.seed = seed;
    rec.scores.reserve(episodes);
    rec.mean_gaps.reserve(episodes);

    QTable q(grid.n_states(), env.n_actions());
    EpisodeContext ctx;
    Rng env_rng(derive_seed(seed, 0));
    Rng agent_rng(derive_seed(seed, 1));
    for (int e = 0; e < episodes; ++e) {
        const double eps = cfg.eps.at(e);
        const EpisodeResult r =
            run_episode(env, grid, q, kind, cfg.alpha, eps, cfg.gamma, env_rng, agent_rng, ctx);
        rec.scores.push_back(r.score);
        rec.mean_gaps.push_back(r.mean_gap);
    }
    rec.final_q = std::move(q);
    return rec;
}

/// Greedy evaluation of a trained table: `episodes` rollouts with eps = 0
/// and no updates; returns per-episode scores.
inline std::vector<double> evaluate(const EnvKind& env, const GridSpec& grid, const QTable& q,
                                    int episodes, std::uint64_t seed) {
    std::vector<double> scores;
    scores.reserve(episodes);
    QTable frozen = q;
    EpisodeContext ctx;
    Rng env_rng(derive_seed(seed, 2));
    Rng agent_rng(derive_seed(seed, 3));
    for (int e = 0; e < episodes; ++e) {
        // operator, schedule and gamma are inert when learning is off
        const EpisodeResult r =
            run_episode(env, grid, frozen, OperatorKind::bellman(), Schedule::constant(1.0), 0.0,
                        0.0, env_rng, agent_rng, ctx, /*learn=*/false);
        scores.push_back(r.score);
    }
    return scores;
}

} // namespace rso
