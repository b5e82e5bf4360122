#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rso/rng.hpp"

namespace rso {

/// Continuous observation plus episode-termination flag.
struct ContinuousState {
    std::vector<double> values;
    bool done = false;
};

struct StepResult {
    ContinuousState state;
    double reward = 0.0;
    bool done = false;
};

/// Physics constants for the three environments. These replicate the
/// standard classic-control implementations so that scores are comparable
/// with results produced on top of them.
namespace env_constants {

// Cart-pole: Euler integration, fail when |x| > 2.4 or |theta| > 12 degrees.
inline constexpr double cp_gravity = 9.8;
inline constexpr double cp_mass_cart = 1.0;
inline constexpr double cp_mass_pole = 0.1;
inline constexpr double cp_total_mass = cp_mass_cart + cp_mass_pole;
inline constexpr double cp_half_length = 0.5;
inline constexpr double cp_polemass_length = cp_mass_pole * cp_half_length;
inline constexpr double cp_force_mag = 10.0;
inline constexpr double cp_tau = 0.02;
inline constexpr double cp_theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double cp_x_threshold = 2.4;

// Mountain car: goal at x >= 0.5, position/velocity clipped.
inline constexpr double mc_min_position = -1.2;
inline constexpr double mc_max_position = 0.6;
inline constexpr double mc_max_speed = 0.07;
inline constexpr double mc_goal_position = 0.5;
inline constexpr double mc_force = 0.001;
inline constexpr double mc_gravity = 0.0025;

// Acrobot: two unit links, RK4 integration with dt = 0.2, torques {-1,0,+1},
// goal -cos(theta1) - cos(theta1 + theta2) > 1.
inline constexpr double ab_link_length_1 = 1.0;
inline constexpr double ab_link_mass_1 = 1.0;
inline constexpr double ab_link_mass_2 = 1.0;
inline constexpr double ab_link_com_1 = 0.5;
inline constexpr double ab_link_com_2 = 0.5;
inline constexpr double ab_link_moi = 1.0;
inline constexpr double ab_gravity = 9.8;
inline constexpr double ab_dt = 0.2;
inline constexpr double ab_max_vel_1 = 4.0 * 3.14159265358979323846;
inline constexpr double ab_max_vel_2 = 9.0 * 3.14159265358979323846;

} // namespace env_constants

namespace detail {

inline double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

inline double wrap_pi(double x) {
    const double two_pi = 2.0 * 3.14159265358979323846;
    x = std::fmod(x + 3.14159265358979323846, two_pi);
    if (x < 0.0) x += two_pi;
    return x - 3.14159265358979323846;
}

// Acrobot equations of motion over the internal state
// (theta1, theta2, dtheta1, dtheta2) with applied torque.
inline std::array<double, 4> acrobot_dsdt(const std::array<double, 4>& s, double torque) {
    using namespace env_constants;
    const double m1 = ab_link_mass_1, m2 = ab_link_mass_2;
    const double l1 = ab_link_length_1, lc1 = ab_link_com_1, lc2 = ab_link_com_2;
    const double i1 = ab_link_moi, i2 = ab_link_moi, g = ab_gravity;
    const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
    const double pi = 3.14159265358979323846;

    const double d1 = m1 * lc1 * lc1 +
                      m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - pi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - pi / 2.0) + phi2;
    const double ddtheta2 =
        (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
        (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

// Single fourth-order Runge-Kutta step of the acrobot dynamics.
inline std::array<double, 4> acrobot_rk4(const std::array<double, 4>& s, double torque, double dt) {
    const auto k1 = acrobot_dsdt(s, torque);
    std::array<double, 4> tmp;
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
    const auto k2 = acrobot_dsdt(tmp, torque);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
    const auto k3 = acrobot_dsdt(tmp, torque);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + dt * k3[i];
    const auto k4 = acrobot_dsdt(tmp, torque);
    std::array<double, 4> out;
    for (int i = 0; i < 4; ++i)
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

} // namespace detail

/// Classic-control environment selector. Value type; all dynamics are pure
/// functions of (state, action, stream state), so replays with the same
/// stream are bit-identical. Episode scores follow the usual conventions:
/// cart-pole counts surviving steps (maximize), mountain car and acrobot
/// count steps to the goal (minimize), all capped by episode_cap().
class EnvKind {
public:
    enum class Id { CartPole, MountainCar, Acrobot };

    static EnvKind cart_pole() { return EnvKind(Id::CartPole, 200); }
    static EnvKind mountain_car() { return EnvKind(Id::MountainCar, 200); }
    static EnvKind acrobot() { return EnvKind(Id::Acrobot, 500); }

    static EnvKind parse(std::string_view name) {
        if (name == "cartpole") return cart_pole();
        if (name == "mountaincar") return mountain_car();
        if (name == "acrobot") return acrobot();
        throw std::invalid_argument("EnvKind: unknown environment '" + std::string(name) +
                                    "' (expected cartpole, mountaincar or acrobot)");
    }

    Id id() const { return id_; }
    int episode_cap() const { return episode_cap_; }
    bool maximize_score() const { return id_ == Id::CartPole; }

    int state_dim() const {
        switch (id_) {
        case Id::CartPole: return 4;
        case Id::MountainCar: return 2;
        case Id::Acrobot: return 6;
        }
        return 0;
    }

    int n_actions() const {
        switch (id_) {
        case Id::CartPole: return 2;
        case Id::MountainCar: return 3;
        case Id::Acrobot: return 3;
        }
        return 0;
    }

    std::string name() const {
        switch (id_) {
        case Id::CartPole: return "cartpole";
        case Id::MountainCar: return "mountaincar";
        case Id::Acrobot: return "acrobot";
        }
        return {};
    }

    /// Standard randomized start state.
    ContinuousState reset(Rng& rng) const {
        ContinuousState s;
        s.done = false;
        switch (id_) {
        case Id::CartPole:
            s.values = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                        rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
            break;
        case Id::MountainCar:
            s.values = {rng.uniform(-0.6, -0.4), 0.0};
            break;
        case Id::Acrobot: {
            std::array<double, 4> internal;
            for (double& v : internal) v = rng.uniform(-0.1, 0.1);
            s.values = observe_acrobot(internal);
            break;
        }
        }
        return s;
    }

    /// Advances one timestep. Throws when called on a finished episode or
    /// with an out-of-range action.
    StepResult step(const ContinuousState& s, int action, Rng& rng) const {
        (void)rng; // dynamics are deterministic; stream kept for interface symmetry
        if (s.done) throw std::invalid_argument("EnvKind::step: episode is already done");
        if (action < 0 || action >= n_actions())
            throw std::out_of_range("EnvKind::step: action " + std::to_string(action) +
                                    " out of range");
        if (static_cast<int>(s.values.size()) != state_dim())
            throw std::invalid_argument("EnvKind::step: state dimension mismatch");
        switch (id_) {
        case Id::CartPole: return step_cart_pole(s, action);
        case Id::MountainCar: return step_mountain_car(s, action);
        case Id::Acrobot: return step_acrobot(s, action);
        }
        return {};
    }

    void dump_constants(std::ostream& os) const {
        using namespace env_constants;
        os << "env " << name() << "\n";
        os << "episode_cap " << episode_cap_ << "\n";
        switch (id_) {
        case Id::CartPole:
            os << "gravity " << cp_gravity << "\nmass_cart " << cp_mass_cart << "\nmass_pole "
               << cp_mass_pole << "\nhalf_length " << cp_half_length << "\nforce_mag "
               << cp_force_mag << "\ntau " << cp_tau << "\ntheta_threshold " << cp_theta_threshold
               << "\nx_threshold " << cp_x_threshold << "\n";
            break;
        case Id::MountainCar:
            os << "min_position " << mc_min_position << "\nmax_position " << mc_max_position
               << "\nmax_speed " << mc_max_speed << "\ngoal_position " << mc_goal_position
               << "\nforce " << mc_force << "\ngravity " << mc_gravity << "\n";
            break;
        case Id::Acrobot:
            os << "link_length_1 " << ab_link_length_1 << "\nlink_mass " << ab_link_mass_1
               << "\nlink_com " << ab_link_com_1 << "\nlink_moi " << ab_link_moi << "\ngravity "
               << ab_gravity << "\ndt " << ab_dt << "\nmax_vel_1 " << ab_max_vel_1
               << "\nmax_vel_2 " << ab_max_vel_2 << "\n";
            break;
        }
    }

private:
    EnvKind(Id id, int cap) : id_(id), episode_cap_(cap) {}

    static std::vector<double> observe_acrobot(const std::array<double, 4>& internal) {
        return {std::cos(internal[0]), std::sin(internal[0]), std::cos(internal[1]),
                std::sin(internal[1]), internal[2], internal[3]};
    }

    static StepResult step_cart_pole(const ContinuousState& s, int action) {
        using namespace env_constants;
        double x = s.values[0], x_dot = s.values[1], theta = s.values[2], theta_dot = s.values[3];
        const double force = action == 1 ? cp_force_mag : -cp_force_mag;
        const double cos_t = std::cos(theta), sin_t = std::sin(theta);
        const double temp =
            (force + cp_polemass_length * theta_dot * theta_dot * sin_t) / cp_total_mass;
        const double theta_acc =
            (cp_gravity * sin_t - cos_t * temp) /
            (cp_half_length * (4.0 / 3.0 - cp_mass_pole * cos_t * cos_t / cp_total_mass));
        const double x_acc = temp - cp_polemass_length * theta_acc * cos_t / cp_total_mass;
        x += cp_tau * x_dot;
        x_dot += cp_tau * x_acc;
        theta += cp_tau * theta_dot;
        theta_dot += cp_tau * theta_acc;

        StepResult out;
        out.state.values = {x, x_dot, theta, theta_dot};
        out.done = std::abs(x) > cp_x_threshold || std::abs(theta) > cp_theta_threshold;
        out.state.done = out.done;
        out.reward = 1.0; // +1 per surviving step; the score is the step count
        return out;
    }

    static StepResult step_mountain_car(const ContinuousState& s, int action) {
        using namespace env_constants;
        double position = s.values[0], velocity = s.values[1];
        velocity += (action - 1) * mc_force + std::cos(3.0 * position) * (-mc_gravity);
        velocity = detail::clip(velocity, -mc_max_speed, mc_max_speed);
        position += velocity;
        position = detail::clip(position, mc_min_position, mc_max_position);
        if (position == mc_min_position && velocity < 0.0) velocity = 0.0;

        StepResult out;
        out.state.values = {position, velocity};
        out.done = position >= mc_goal_position;
        out.state.done = out.done;
        out.reward = -1.0;
        return out;
    }

    static StepResult step_acrobot(const ContinuousState& s, int action) {
        using namespace env_constants;
        std::array<double, 4> internal = {std::atan2(s.values[1], s.values[0]),
                                          std::atan2(s.values[3], s.values[2]), s.values[4],
                                          s.values[5]};
        const double torque = static_cast<double>(action - 1); // {-1, 0, +1}
        internal = detail::acrobot_rk4(internal, torque, ab_dt);
        internal[0] = detail::wrap_pi(internal[0]);
        internal[1] = detail::wrap_pi(internal[1]);
        internal[2] = detail::clip(internal[2], -ab_max_vel_1, ab_max_vel_1);
        internal[3] = detail::clip(internal[3], -ab_max_vel_2, ab_max_vel_2);

        StepResult out;
        out.state.values = observe_acrobot(internal);
        out.done = -std::cos(internal[0]) - std::cos(internal[0] + internal[1]) > 1.0;
        out.state.done = out.done;
        out.reward = out.done ? 0.0 : -1.0; // reference convention: goal step is free
        return out;
    }

    Id id_;
    int episode_cap_;
};

/// Free-function forms mirroring the operational interface.
inline ContinuousState reset(const EnvKind& env, Rng& rng) { return env.reset(rng); }
inline StepResult step(const EnvKind& env, const ContinuousState& s, int action, Rng& rng) {
    return env.step(s, action, rng);
}

} // namespace rso
