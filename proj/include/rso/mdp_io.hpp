#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rso/mdp.hpp"

namespace rso {

namespace detail {

/// Shortest round-trip decimal form of a double (17 significant digits).
inline std::string num17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Writes the key-value MDP text format:
///   n_states N / n_actions A / gamma G
///   R x a value                 (one line per pair)
///   P x a p0 p1 ... p{N-1}      (one transition row per pair)
/// Values are printed with 17 significant digits, so load(save(m)) == m.
inline void save_mdp(const TabularMdp& mdp, std::ostream& os) {
    os << "# tabular mdp\n";
    os << "n_states " << mdp.n_states() << "\n";
    os << "n_actions " << mdp.n_actions() << "\n";
    os << "gamma " << detail::num17(mdp.gamma()) << "\n";
    for (int x = 0; x < mdp.n_states(); ++x)
        for (int a = 0; a < mdp.n_actions(); ++a)
            os << "R " << x << " " << a << " " << detail::num17(mdp.r(x, a)) << "\n";
    for (int x = 0; x < mdp.n_states(); ++x)
        for (int a = 0; a < mdp.n_actions(); ++a) {
            os << "P " << x << " " << a;
            for (int y = 0; y < mdp.n_states(); ++y) os << " " << detail::num17(mdp.p(x, a, y));
            os << "\n";
        }
}

inline TabularMdp load_mdp(std::istream& is) {
    int n_states = -1, n_actions = -1;
    double gamma = -1.0;
    std::vector<double> reward, transition;
    std::vector<bool> seen_r, seen_p;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument("load_mdp: line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        if (key == "n_states") {
            if (!(ls >> n_states)) fail("bad n_states");
        } else if (key == "n_actions") {
            if (!(ls >> n_actions)) fail("bad n_actions");
        } else if (key == "gamma") {
            if (!(ls >> gamma)) fail("bad gamma");
        } else if (key == "R" || key == "P") {
            if (n_states < 1 || n_actions < 1)
                fail("n_states/n_actions must come before tables");
            if (reward.empty()) {
                const std::size_t pairs = static_cast<std::size_t>(n_states) * n_actions;
                reward.assign(pairs, 0.0);
                transition.assign(pairs * n_states, 0.0);
                seen_r.assign(pairs, false);
                seen_p.assign(pairs, false);
            }
            int x, a;
            if (!(ls >> x >> a)) fail("bad indices");
            if (x < 0 || x >= n_states || a < 0 || a >= n_actions) fail("indices out of range");
            const std::size_t flat = static_cast<std::size_t>(x) * n_actions + a;
            if (key == "R") {
                if (!(ls >> reward[flat])) fail("bad reward value");
                seen_r[flat] = true;
            } else {
                for (int y = 0; y < n_states; ++y)
                    if (!(ls >> transition[flat * n_states + y])) fail("short transition row");
                seen_p[flat] = true;
            }
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (n_states < 1 || n_actions < 1 || gamma < 0.0)
        throw std::invalid_argument("load_mdp: missing n_states, n_actions or gamma");
    for (std::size_t i = 0; i < seen_r.size(); ++i)
        if (!seen_r[i] || !seen_p[i])
            throw std::invalid_argument("load_mdp: missing R or P row for pair " +
                                        std::to_string(i));
    return TabularMdp(n_states, n_actions, std::move(transition), std::move(reward), gamma);
}

inline void save_mdp_file(const TabularMdp& mdp, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_mdp_file: cannot open " + path);
    save_mdp(mdp, os);
}

inline TabularMdp load_mdp_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_mdp_file: cannot open " + path);
    return load_mdp(is);
}

/// Q-table dump: header `q_table S A`, then one `Q x a value` line per pair
/// at 17 significant digits.
inline void save_qtable(const QTable& q, std::ostream& os) {
    os << "q_table " << q.n_states() << " " << q.n_actions() << "\n";
    for (int x = 0; x < q.n_states(); ++x)
        for (int a = 0; a < q.n_actions(); ++a)
            os << "Q " << x << " " << a << " " << detail::num17(q(x, a)) << "\n";
}

inline QTable load_qtable(std::istream& is) {
    std::string key;
    int n_states, n_actions;
    if (!(is >> key >> n_states >> n_actions) || key != "q_table")
        throw std::invalid_argument("load_qtable: missing q_table header");
    QTable q(n_states, n_actions);
    int x, a;
    double v;
    while (is >> key >> x >> a >> v) {
        if (key != "Q") throw std::invalid_argument("load_qtable: unexpected key " + key);
        q.set(x, a, v);
    }
    return q;
}

} // namespace rso
