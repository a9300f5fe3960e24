#pragma once

#include <complex>
#include <vector>

#include "rbtrap/errors.hpp"

namespace rbtrap {

using Complex = std::complex<double>;
using ComplexGrid = std::vector<Complex>;
using RealGrid = std::vector<double>;

// Uniform symmetric grid on [-R, R]. M is odd so x = 0 is a node; the end
// nodes are stored as exactly +-R so window profiles vanish there exactly.
struct SpatialGrid {
    double R = 0.0;
    int M = 0;
    double h = 0.0;
    RealGrid nodes;

    static SpatialGrid make(double R, int M) {
        if (!(R > 0.0))
            throw ValidationError("support radius must be positive");
        if (M < 3 || M % 2 == 0)
            throw ValidationError("grid size must be odd and at least 3");
        SpatialGrid g;
        g.R = R;
        g.M = M;
        g.h = 2.0 * R / static_cast<double>(M - 1);
        g.nodes.resize(static_cast<std::size_t>(M));
        const int c = (M - 1) / 2;
        for (int i = 0; i < M; ++i)
            g.nodes[static_cast<std::size_t>(i)] = static_cast<double>(i - c) * g.h;
        g.nodes.front() = -R;
        g.nodes.back() = R;
        g.nodes[static_cast<std::size_t>(c)] = 0.0;
        return g;
    }

    bool same_as(const SpatialGrid& o) const { return R == o.R && M == o.M; }
};

// Exact integral of the piecewise-linear interpolant (composite trapezoid).
inline Complex grid_integral(const SpatialGrid& g, const ComplexGrid& v) {
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < v.size(); ++i) s += v[i] + v[i + 1];
    return 0.5 * g.h * s;
}

inline double grid_integral(const SpatialGrid& g, const RealGrid& v) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) s += v[i] + v[i + 1];
    return 0.5 * g.h * s;
}

} // namespace rbtrap
