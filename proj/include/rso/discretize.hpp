#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rso/envs.hpp"

namespace rso {

/// Per-dimension equal-width binning of a continuous state space.
struct GridDim {
    double lo;
    double hi;
    int bins;
};

class GridSpec {
public:
    explicit GridSpec(std::vector<GridDim> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("GridSpec: need at least one dimension");
        for (const GridDim& d : dims_) {
            if (!(d.lo < d.hi)) throw std::invalid_argument("GridSpec: need lo < hi");
            if (d.bins < 1) throw std::invalid_argument("GridSpec: need bins >= 1");
        }
    }

    int n_dims() const { return static_cast<int>(dims_.size()); }
    const GridDim& dim(int i) const { return dims_[i]; }

    /// Total number of discrete states (product of the bin counts).
    int n_states() const {
        std::int64_t total = 1;
        for (const GridDim& d : dims_) {
            total *= d.bins;
            if (total > 1'000'000'000)
                throw std::invalid_argument("GridSpec: more than 1e9 cells");
        }
        return static_cast<int>(total);
    }

    /// Bin index of value v in dimension i: values are clipped to [lo, hi],
    /// then floor((v - lo) / width) capped at bins - 1 (so v == hi lands in
    /// the last bin).
    int bin_of(int i, double v) const {
        const GridDim& d = dims_[i];
        if (v <= d.lo) return 0;
        if (v >= d.hi) return d.bins - 1;
        const double width = (d.hi - d.lo) / d.bins;
        const int b = static_cast<int>(std::floor((v - d.lo) / width));
        return std::min(b, d.bins - 1);
    }

    /// Center of bin b in dimension i.
    double bin_center(int i, int b) const {
        const GridDim& d = dims_[i];
        const double width = (d.hi - d.lo) / d.bins;
        return d.lo + (b + 0.5) * width;
    }

    const std::vector<GridDim>& dims() const { return dims_; }

private:
    std::vector<GridDim> dims_;
};

/// Flattens a continuous state to a discrete index by per-dimension binning
/// followed by row-major mixed-radix encoding. Total on finite inputs.
inline int state_index(const GridSpec& grid, const ContinuousState& s) {
    if (static_cast<int>(s.values.size()) != grid.n_dims())
        throw std::invalid_argument("state_index: state has " + std::to_string(s.values.size()) +
                                    " dimensions, grid expects " + std::to_string(grid.n_dims()));
    std::int64_t index = 0;
    for (int i = 0; i < grid.n_dims(); ++i)
        index = index * grid.dim(i).bins + grid.bin_of(i, s.values[i]);
    return static_cast<int>(index);
}

/// Inverse of the mixed-radix encoding: recovers the per-dimension bins.
inline std::vector<int> decode_index(const GridSpec& grid, int index) {
    if (index < 0 || index >= grid.n_states())
        throw std::out_of_range("decode_index: index out of range");
    std::vector<int> bins(grid.n_dims());
    for (int i = grid.n_dims() - 1; i >= 0; --i) {
        bins[i] = index % grid.dim(i).bins;
        index /= grid.dim(i).bins;
    }
    return bins;
}

/// Continuous cell-center state of a discrete index.
inline ContinuousState cell_center(const GridSpec& grid, int index) {
    const std::vector<int> bins = decode_index(grid, index);
    ContinuousState s;
    s.values.resize(grid.n_dims());
    for (int i = 0; i < grid.n_dims(); ++i) s.values[i] = grid.bin_center(i, bins[i]);
    return s;
}

/// Default discretization per environment:
///   mountain car: 40 x 40 over (position, velocity)
///   cart pole:    8, 8, 10, 10 over (x, x_dot, theta, theta_dot)
///   acrobot:      8, 8, 10, 10, 10, 10 — the first two observation
///                 components get 8 bins, the rest 10
/// Velocity-style dimensions without hard physical bounds are clipped to
/// the practical ranges listed here.
inline GridSpec default_grid(const EnvKind& env) {
    using namespace env_constants;
    switch (env.id()) {
    case EnvKind::Id::MountainCar:
        return GridSpec({{mc_min_position, mc_max_position, 40}, {-mc_max_speed, mc_max_speed, 40}});
    case EnvKind::Id::CartPole:
        return GridSpec({{-cp_x_threshold, cp_x_threshold, 8},
                         {-3.0, 3.0, 8},
                         {-cp_theta_threshold, cp_theta_threshold, 10},
                         {-3.5, 3.5, 10}});
    case EnvKind::Id::Acrobot:
        return GridSpec({{-1.0, 1.0, 8},
                         {-1.0, 1.0, 8},
                         {-1.0, 1.0, 10},
                         {-1.0, 1.0, 10},
                         {-ab_max_vel_1, ab_max_vel_1, 10},
                         {-ab_max_vel_2, ab_max_vel_2, 10}});
    }
    throw std::logic_error("default_grid: unreachable");
}

/// Parses a grid override: whitespace-separated `lo:hi:bins` triplets, one
/// per dimension.
inline GridSpec parse_grid(std::string_view text) {
    std::vector<GridDim> dims;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        const std::string item(text.substr(pos, end - pos));
        pos = end;
        const std::size_t c1 = item.find(':');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : item.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw std::invalid_argument("parse_grid: expected lo:hi:bins, got '" + item + "'");
        try {
            dims.push_back({std::stod(item.substr(0, c1)),
                            std::stod(item.substr(c1 + 1, c2 - c1 - 1)),
                            std::stoi(item.substr(c2 + 1))});
        } catch (const std::exception&) {
            throw std::invalid_argument("parse_grid: cannot parse '" + item + "'");
        }
    }
    return GridSpec(std::move(dims));
}

} // namespace rso
