#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rso/rng.hpp"

namespace rso {

/// Distribution family for the penalty coefficient sequence {beta_k}.
///
/// Valid specs have nonnegative bounded support and mean in [0,1]; individual
/// samples may exceed 1 (e.g. uniform(0,2)). Variants:
///   - constant(c):        degenerate at c, c in [0,1]; sampling consumes no
///                         rng draws, so constant(0) runs are stream-identical
///                         to plain Bellman runs.
///   - uniform(lo, hi):    uniform on the half-open interval [lo, hi).
///   - schedule(pieces):   piecewise-in-k spec; piece (k_i, spec_i) is active
///                         for iterations k in [k_i, k_{i+1}). Switch points
///                         must be strictly increasing and start at 0.
///
/// Textual form (config files / CLI): `constant:c`, `uniform:lo:hi`,
/// `schedule:[k0=spec0,k1=spec1,...]`.
class BetaSpec {
public:
    static BetaSpec constant(double c) {
        if (!(std::isfinite(c) && c >= 0.0))
            throw std::invalid_argument("BetaSpec: constant value must be finite and nonnegative");
        require_mean(c);
        BetaSpec s;
        s.kind_ = Kind::Constant;
        s.lo_ = c;
        s.hi_ = c;
        return s;
    }

    static BetaSpec uniform(double lo, double hi) {
        if (!(std::isfinite(lo) && std::isfinite(hi)))
            throw std::invalid_argument("BetaSpec: uniform bounds must be finite");
        if (lo < 0.0)
            throw std::invalid_argument("BetaSpec: uniform lower bound must be nonnegative");
        if (!(lo < hi))
            throw std::invalid_argument("BetaSpec: uniform needs lo < hi");
        require_mean((lo + hi) / 2.0);
        BetaSpec s;
        s.kind_ = Kind::Uniform;
        s.lo_ = lo;
        s.hi_ = hi;
        return s;
    }

    static BetaSpec schedule(std::vector<std::pair<std::int64_t, BetaSpec>> pieces) {
        if (pieces.empty())
            throw std::invalid_argument("BetaSpec: schedule needs at least one piece");
        if (pieces.front().first != 0)
            throw std::invalid_argument("BetaSpec: schedule must start at iteration 0");
        for (std::size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].first <= pieces[i - 1].first)
                throw std::invalid_argument("BetaSpec: schedule switch points must be strictly increasing");
        for (const auto& [k, sub] : pieces)
            if (sub.kind_ == Kind::Schedule)
                throw std::invalid_argument("BetaSpec: schedules cannot nest");
        BetaSpec s;
        s.kind_ = Kind::Schedule;
        s.pieces_ = std::move(pieces);
        return s;
    }

    /// Draw beta_k. Constant pieces consume no rng state.
    double sample(std::int64_t k, Rng& rng) const {
        const BetaSpec& p = piece_at(k);
        if (p.kind_ == Kind::Constant) return p.lo_;
        return rng.uniform(p.lo_, p.hi_);
    }

    /// E[beta_k] of the piece active at iteration k.
    double mean_at(std::int64_t k) const {
        const BetaSpec& p = piece_at(k);
        return (p.lo_ + p.hi_) / 2.0;
    }

    /// Var[beta_k] of the piece active at iteration k (closed form:
    /// constant -> 0, uniform(lo,hi) -> (hi-lo)^2/12).
    double variance_at(std::int64_t k) const {
        const BetaSpec& p = piece_at(k);
        const double w = p.hi_ - p.lo_;
        return w * w / 12.0;
    }

    double mean() const { return mean_at(0); }
    double variance() const { return variance_at(0); }

    /// Largest value a sample can take at iteration k (support is bounded).
    double max_support_at(std::int64_t k) const { return piece_at(k).hi_; }

    bool is_constant() const { return kind_ == Kind::Constant; }

    std::string to_string() const {
        std::ostringstream os;
        switch (kind_) {
        case Kind::Constant:
            os << "constant:" << format_num(lo_);
            break;
        case Kind::Uniform:
            os << "uniform:" << format_num(lo_) << ":" << format_num(hi_);
            break;
        case Kind::Schedule:
            os << "schedule:[";
            for (std::size_t i = 0; i < pieces_.size(); ++i) {
                if (i) os << ",";
                os << pieces_[i].first << "=" << pieces_[i].second.to_string();
            }
            os << "]";
            break;
        }
        return os.str();
    }

    /// Parses the textual form; throws invalid_argument with the computed
    /// mean in the message when the mean falls outside [0,1].
    static BetaSpec parse(std::string_view text);

    friend bool operator==(const BetaSpec& a, const BetaSpec& b) {
        if (a.kind_ != b.kind_) return false;
        if (a.kind_ == Kind::Schedule) return a.pieces_ == b.pieces_;
        return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    enum class Kind { Constant, Uniform, Schedule };

    BetaSpec() = default;

    static void require_mean(double mean) {
        if (!(mean >= 0.0 && mean <= 1.0))
            throw std::invalid_argument("BetaSpec: mean must lie in [0,1], got " +
                                        std::to_string(mean));
    }

    const BetaSpec& piece_at(std::int64_t k) const {
        if (kind_ != Kind::Schedule) return *this;
        std::size_t idx = 0;
        while (idx + 1 < pieces_.size() && pieces_[idx + 1].first <= k) ++idx;
        return pieces_[idx].second;
    }

    static std::string format_num(double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    }

    Kind kind_ = Kind::Constant;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<std::pair<std::int64_t, BetaSpec>> pieces_;
};

/// Free-function form of BetaSpec::sample.
inline double sample_beta(const BetaSpec& spec, std::int64_t k, Rng& rng) {
    return spec.sample(k, rng);
}

namespace detail {

inline double parse_real(std::string_view s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(std::string(s), &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("BetaSpec: cannot parse ") + what + " from '" +
                                    std::string(s) + "'");
    }
}

inline std::int64_t parse_int(std::string_view s, const char* what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(std::string(s), &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("BetaSpec: cannot parse ") + what + " from '" +
                                    std::string(s) + "'");
    }
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace detail

inline BetaSpec BetaSpec::parse(std::string_view text) {
    using detail::parse_int;
    using detail::parse_real;
    using detail::split;
    if (text.rfind("constant:", 0) == 0) {
        return BetaSpec::constant(parse_real(text.substr(9), "constant value"));
    }
    if (text.rfind("uniform:", 0) == 0) {
        const auto parts = split(text.substr(8), ':');
        if (parts.size() != 2)
            throw std::invalid_argument("BetaSpec: uniform form is uniform:lo:hi");
        return BetaSpec::uniform(parse_real(parts[0], "uniform lo"), parse_real(parts[1], "uniform hi"));
    }
    if (text.rfind("schedule:[", 0) == 0) {
        if (text.back() != ']')
            throw std::invalid_argument("BetaSpec: schedule form is schedule:[k0=spec0,...]");
        const std::string_view body = text.substr(10, text.size() - 11);
        std::vector<std::pair<std::int64_t, BetaSpec>> pieces;
        for (std::string_view item : split(body, ',')) {
            const std::size_t eq = item.find('=');
            if (eq == std::string_view::npos)
                throw std::invalid_argument("BetaSpec: schedule piece '" + std::string(item) +
                                            "' is missing '='");
            pieces.emplace_back(parse_int(item.substr(0, eq), "switch iteration"),
                                BetaSpec::parse(item.substr(eq + 1)));
        }
        return BetaSpec::schedule(std::move(pieces));
    }
    throw std::invalid_argument("BetaSpec: unknown spec '" + std::string(text) + "'");
}

} // namespace rso
