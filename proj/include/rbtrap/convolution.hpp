#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rbtrap/errors.hpp"
#include "rbtrap/grid.hpp"

namespace rbtrap {

namespace detail {

// g2(w) = (1 - e^{-w}(1+w)) / w^2, the linear-weight cell integral; series below
// w = 0.05 avoids the w^{-2} cancellation.
inline double cell_weight_g2(double w) {
    if (w < 0.05) {
        static constexpr double c[] = {1.0 / 2.0,   -1.0 / 3.0,  1.0 / 8.0,
                                       -1.0 / 30.0, 1.0 / 144.0, -1.0 / 840.0,
                                       1.0 / 5760.0, -1.0 / 45360.0};
        double acc = 0.0;
        for (int i = 7; i >= 0; --i) acc = c[i] + w * acc;
        return acc;
    }
    return (-std::expm1(-w) - w * std::exp(-w)) / (w * w);
}

inline void require_grid_match(const SpatialGrid& grid, std::size_t n) {
    if (n != static_cast<std::size_t>(grid.M))
        throw TruncationMismatch("sample count " + std::to_string(n) +
                                 " does not match grid size " + std::to_string(grid.M));
}

} // namespace detail

// Raw one-sided kernel integrals against the piecewise-linear interpolant of A:
//   left[i]  = integral over [-R, x_i] of e^{-k (x_i - t)} A(t) dt
//   right[i] = integral over [x_i, R]  of e^{-k (t - x_i)} A(t) dt
// Each cell is integrated exactly, composed by O(M) decaying prefix sweeps.
struct SweepResult {
    ComplexGrid left;
    ComplexGrid right;
};

inline SweepResult exponential_sweeps(double k, const ComplexGrid& A, const SpatialGrid& grid) {
    if (!(k > 0.0)) throw NonPositiveRate("decay rate must be positive, got " + std::to_string(k));
    detail::require_grid_match(grid, A.size());
    const std::size_t M = A.size();
    const double h = grid.h;
    const double w = k * h;
    const double E = std::exp(-w);
    const double P = -std::expm1(-w) / k;       // plain cell weight
    const double a = h * detail::cell_weight_g2(w);  // weight of the far node
    SweepResult s;
    s.left.assign(M, Complex(0.0));
    s.right.assign(M, Complex(0.0));
    for (std::size_t i = 0; i + 1 < M; ++i)
        s.left[i + 1] = E * s.left[i] + a * A[i] + (P - a) * A[i + 1];
    for (std::size_t i = M - 1; i-- > 0;)
        s.right[i] = E * s.right[i + 1] + (P - a) * A[i] + a * A[i + 1];
    return s;
}

// (G_k * A)(x_i) = integral of e^{-k|x_i - t|} A(t) dt / (2k) on the grid.
inline ComplexGrid convolve_exponential(double k, const ComplexGrid& A, const SpatialGrid& grid) {
    const SweepResult s = exponential_sweeps(k, A, grid);
    ComplexGrid out(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = (s.left[i] + s.right[i]) / (2.0 * k);
    return out;
}

// integral of |x_i - t|^p A(t) dt for p in 1..5, exact for piecewise-linear A.
// Split at t = x_i and expand binomially in prefix/suffix moments of t^q A(t).
inline ComplexGrid convolve_abs_power(int p, const ComplexGrid& A, const SpatialGrid& grid) {
    if (p < 1 || p > 5) throw OutOfRange("moment power must be in 1..5, got " + std::to_string(p));
    detail::require_grid_match(grid, A.size());
    const std::size_t M = A.size();
    const double h = grid.h;

    // cells[q][i] = integral over [x_i, x_{i+1}] of t^q A(t) dt, exact
    std::vector<std::vector<Complex>> cells(p + 1), prefix(p + 1), suffix(p + 1);
    for (int q = 0; q <= p; ++q) {
        cells[q].assign(M - 1, Complex(0.0));
        prefix[q].assign(M, Complex(0.0));
        suffix[q].assign(M, Complex(0.0));
    }
    for (std::size_t i = 0; i + 1 < M; ++i) {
        const double t0 = grid.nodes[i], t1 = grid.nodes[i + 1];
        const Complex slope = (A[i + 1] - A[i]) / h;
        for (int q = 0; q <= p; ++q) {
            const double iq = (std::pow(t1, q + 1) - std::pow(t0, q + 1)) / (q + 1);
            const double iq1 = (std::pow(t1, q + 2) - std::pow(t0, q + 2)) / (q + 2);
            cells[q][i] = A[i] * iq + slope * (iq1 - t0 * iq);
        }
    }
    for (int q = 0; q <= p; ++q) {
        for (std::size_t i = 0; i + 1 < M; ++i) prefix[q][i + 1] = prefix[q][i] + cells[q][i];
        for (std::size_t i = M - 1; i-- > 0;) suffix[q][i] = suffix[q][i + 1] + cells[q][i];
    }

    // binomial split: |x-t|^p = sum_q C(p,q) x^{p-q} ((-1)^q [t<x] + (-1)^{p-q} [t>x]) t^q
    double binom[6];
    binom[0] = 1.0;
    for (int q = 1; q <= p; ++q) binom[q] = binom[q - 1] * (p - q + 1) / q;

    ComplexGrid out(M, Complex(0.0));
    for (std::size_t i = 0; i < M; ++i) {
        const double x = grid.nodes[i];
        Complex acc(0.0);
        for (int q = 0; q <= p; ++q) {
            const double sgn_low = (q % 2 == 0) ? 1.0 : -1.0;
            const double sgn_high = ((p - q) % 2 == 0) ? 1.0 : -1.0;
            acc += binom[q] * std::pow(x, p - q) *
                   (sgn_low * prefix[q][i] + sgn_high * suffix[q][i]);
        }
        out[i] = acc;
    }
    return out;
}

// (G_r * A)(x_i) with G_r(s) = (e^{-mu |s|} - 1) / (2 mu).
// For mu * 2R below 1e-2 the subtraction route loses digits, so the kernel is
// expanded as sum of c_n mu^{n-1} |s|^n, c_n = (-1)^n / (2 n!), n = 1..5.
inline ComplexGrid convolve_regularized(double mu, const ComplexGrid& A, const SpatialGrid& grid) {
    if (mu < 0.0) throw InvalidWindow("spectral offset must be >= 0, got " + std::to_string(mu));
    detail::require_grid_match(grid, A.size());
    const std::size_t M = A.size();
    if (mu * 2.0 * grid.R >= 1e-2) {
        const SweepResult s = exponential_sweeps(mu, A, grid);
        const Complex total = grid_integral(grid, A);
        ComplexGrid out(M);
        for (std::size_t i = 0; i < M; ++i)
            out[i] = (s.left[i] + s.right[i] - total) / (2.0 * mu);
        return out;
    }
    ComplexGrid out(M, Complex(0.0));
    double coeff = -0.5;  // c_1; recurrence c_{n+1} = -c_n / (n+1)
    double mupow = 1.0;
    for (int n = 1; n <= 5 && mupow != 0.0; ++n) {
        const ComplexGrid part = convolve_abs_power(n, A, grid);
        for (std::size_t i = 0; i < M; ++i) out[i] += coeff * mupow * part[i];
        coeff = -coeff / (n + 1);
        mupow *= mu;
    }
    return out;
}

} // namespace rbtrap
