#pragma once

// Quadrature oracles for tests, independent of the production sweep algebra.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "rbtrap/grid.hpp"

namespace testq {

inline constexpr std::array<double, 5> gl_nodes = {
    0.14887433898163121088, 0.43339539412924719080, 0.67940956829902440623,
    0.86506336668898451073, 0.97390652851717172008};
inline constexpr std::array<double, 5> gl_weights = {
    0.29552422471475287017, 0.26926671930999635509, 0.21908636251598204400,
    0.14945134915058059315, 0.06667134430868813759};

// 10-point Gauss-Legendre on [a, b]; exact through polynomial degree 19.
template <class F>
auto gauss_cell(F&& f, double a, double b) -> decltype(f(a)) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    decltype(f(a)) acc = gl_weights[0] * (f(mid - half * gl_nodes[0]) + f(mid + half * gl_nodes[0]));
    for (std::size_t i = 1; i < 5; ++i)
        acc += gl_weights[i] * (f(mid - half * gl_nodes[i]) + f(mid + half * gl_nodes[i]));
    return acc * half;
}

inline rbtrap::Complex interp(const rbtrap::ComplexGrid& A, const rbtrap::SpatialGrid& g, double t) {
    if (t <= g.nodes.front()) return A.front();
    if (t >= g.nodes.back()) return A.back();
    const auto i = std::min<std::size_t>(
        static_cast<std::size_t>((t - g.nodes.front()) / g.h), A.size() - 2);
    const double s = (t - g.nodes[i]) / g.h;
    return A[i] * (1.0 - s) + A[i + 1] * s;
}

// Reference convolution value: per-cell Gauss quadrature of kernel(x - t) times the
// piecewise-linear interpolant. Valid when kernel kinks only at t = x, a grid node.
template <class K>
rbtrap::Complex conv_oracle_at(K&& kernel, const rbtrap::ComplexGrid& A,
                               const rbtrap::SpatialGrid& g, double x) {
    rbtrap::Complex acc(0.0);
    for (std::size_t i = 0; i + 1 < A.size(); ++i)
        acc += gauss_cell([&](double t) { return kernel(x - t) * interp(A, g, t); },
                          g.nodes[i], g.nodes[i + 1]);
    return acc;
}

namespace detail {
template <class F, class V>
V simpson_step(F& f, double a, double m, double b, V fa, V fm, V fb, V whole,
               double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const V flm = f(lm), frm = f(rm);
    const V left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const V right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const V delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

template <class F>
auto adaptive_simpson(F f, double a, double b, double tol = 1e-12) -> decltype(f(a)) {
    using V = decltype(f(a));
    const double m = 0.5 * (a + b);
    const V fa = f(a), fm = f(m), fb = f(b);
    const V whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

} // namespace testq
