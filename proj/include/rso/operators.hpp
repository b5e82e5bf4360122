#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "rso/beta.hpp"
#include "rso/mdp.hpp"

namespace rso {

/// Tagged choice of backup operator: the plain Bellman backup, the
/// consistent backup (self-transitions keep Q(x,a) as continuation), or the
/// robust stochastic backup carrying a BetaSpec for its penalty coefficient.
class OperatorKind {
public:
    enum class Tag { Bellman, Consistent, Rso };

    static OperatorKind bellman() { return OperatorKind(Tag::Bellman, std::nullopt); }
    static OperatorKind consistent() { return OperatorKind(Tag::Consistent, std::nullopt); }
    static OperatorKind rso(BetaSpec spec) { return OperatorKind(Tag::Rso, std::move(spec)); }

    Tag tag() const { return tag_; }
    bool is_rso() const { return tag_ == Tag::Rso; }

    const BetaSpec& beta_spec() const {
        if (!beta_) throw std::logic_error("OperatorKind: no beta spec on a deterministic operator");
        return *beta_;
    }

    std::string to_string() const {
        switch (tag_) {
        case Tag::Bellman: return "bellman";
        case Tag::Consistent: return "consistent";
        case Tag::Rso: return "rso:" + beta_->to_string();
        }
        return {};
    }

    /// Accepts `bellman`, `consistent`, or `rso:<beta-spec>`.
    static OperatorKind parse(std::string_view text) {
        if (text == "bellman") return bellman();
        if (text == "consistent") return consistent();
        if (text.rfind("rso:", 0) == 0) return rso(BetaSpec::parse(text.substr(4)));
        throw std::invalid_argument("OperatorKind: unknown operator '" + std::string(text) + "'");
    }

    friend bool operator==(const OperatorKind& a, const OperatorKind& b) {
        return a.tag_ == b.tag_ && a.beta_ == b.beta_;
    }

private:
    OperatorKind(Tag tag, std::optional<BetaSpec> beta) : tag_(tag), beta_(std::move(beta)) {}

    Tag tag_;
    std::optional<BetaSpec> beta_;
};

/// T_B Q(x,a) = R(x,a) + gamma * E_P max_b Q(x',b)
inline double bellman_backup(const TabularMdp& mdp, const QTable& q, int x, int a) {
    mdp.check_state(x);
    mdp.check_action(a);
    double cont = 0.0;
    for (int y = 0; y < mdp.n_states(); ++y) {
        const double pr = mdp.p(x, a, y);
        if (pr != 0.0) cont += pr * greedy_value(q, y).value;
    }
    return mdp.r(x, a) + mdp.gamma() * cont;
}

/// T_C Q(x,a): like the Bellman backup except the self-transition keeps
/// Q(x,a) as continuation value instead of max_b Q(x,b).
inline double consistent_backup(const TabularMdp& mdp, const QTable& q, int x, int a) {
    mdp.check_state(x);
    mdp.check_action(a);
    double cont = 0.0;
    for (int y = 0; y < mdp.n_states(); ++y) {
        const double pr = mdp.p(x, a, y);
        if (pr != 0.0) cont += pr * (y == x ? q(x, a) : greedy_value(q, y).value);
    }
    return mdp.r(x, a) + mdp.gamma() * cont;
}

/// Robust stochastic backup for one realized coefficient:
/// T_beta Q(x,a) = T_B Q(x,a) - beta * (V(x) - Q(x,a)).
/// Equals the Bellman backup when beta = 0 or when a is the greedy action.
inline double rso_backup(const TabularMdp& mdp, const QTable& q, int x, int a, double beta) {
    if (!(beta >= 0.0))
        throw std::invalid_argument("rso_backup: beta must be nonnegative");
    return bellman_backup(mdp, q, x, a) - beta * action_gap(q, x, a);
}

/// Membership test for the operator family: a candidate one-step value must
/// sit between T_B Q(x,a) - beta*(V(x)-Q(x,a)) and T_B Q(x,a), with 1e-12
/// absolute slack.
inline bool family_bounds_check(const TabularMdp& mdp, const QTable& q, int x, int a,
                                double candidate_value, double beta) {
    if (!(beta >= 0.0))
        throw std::invalid_argument("family_bounds_check: beta must be nonnegative");
    constexpr double slack = 1e-12;
    const double upper = bellman_backup(mdp, q, x, a);
    const double lower = upper - beta * action_gap(q, x, a);
    return candidate_value >= lower - slack && candidate_value <= upper + slack;
}

/// Single-sample, model-free target for one observed transition
/// (x, a, reward, x_next); the analogue of the three backups when the
/// transition kernel is not available. `next_terminal` zeroes the
/// continuation value for episodic bootstrapping.
inline double sampled_target(const OperatorKind& kind, const QTable& q, int x, int a,
                             double reward, int x_next, double gamma, double beta,
                             bool next_terminal = false) {
    q.check_index(x, a);
    q.check_index(x_next, 0);
    const double cont_max = next_terminal ? 0.0 : greedy_value(q, x_next).value;
    switch (kind.tag()) {
    case OperatorKind::Tag::Bellman:
        return reward + gamma * cont_max;
    case OperatorKind::Tag::Consistent:
        if (x_next == x && !next_terminal) return reward + gamma * q(x, a);
        return reward + gamma * cont_max;
    case OperatorKind::Tag::Rso:
        if (!(beta >= 0.0))
            throw std::invalid_argument("sampled_target: beta must be nonnegative");
        return reward + gamma * cont_max - beta * action_gap(q, x, a);
    }
    return 0.0;
}

} // namespace rso
