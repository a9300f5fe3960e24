#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rbtrap/errors.hpp"
#include "rbtrap/expression.hpp"
#include "rbtrap/grid.hpp"

namespace rbtrap {

// Transverse Fourier data of the perturbation: F[j][i] = integral over one period
// of f(x_i, y) e^{-i j y} dy (no 1/2pi; the operator constants carry it).
struct FourierProfile {
    SpatialGrid grid;
    int J = 0;         // stored harmonics j in [-J, J]
    int Q = 0;         // y-quadrature points used
    double tail_tol = 0.0;
    std::vector<ComplexGrid> coeffs;  // index j + J

    const ComplexGrid& F(int j) const {
        if (j < -J || j > J)
            throw OutOfRange("harmonic " + std::to_string(j) + " outside [-J, J], J = " +
                             std::to_string(J));
        return coeffs[static_cast<std::size_t>(j + J)];
    }

    double max_abs(int j) const {
        const ComplexGrid& c = F(j);
        double s = 0.0;
        for (const auto& z : c) s = std::max(s, std::abs(z));
        return s;
    }
};

// Periodic trapezoid rule in y: spectrally accurate, exact for harmonics below Q - J.
inline FourierProfile fourier_coefficients(const expr::ExpressionTree& profile,
                                           const SpatialGrid& grid, int J, int Q,
                                           double tail_tol = 1e-8) {
    if (J < 1) throw ValidationError("harmonic truncation J must be >= 1");
    if (Q < 4 * J + 4)
        throw ValidationError("y-quadrature needs Q >= 4J + 4, got Q = " + std::to_string(Q));
    FourierProfile fp{grid, J, Q, tail_tol, {}};
    fp.coeffs.assign(2 * J + 1, ComplexGrid(grid.nodes.size(), Complex(0.0)));
    const double dy = 2.0 * M_PI / Q;
    std::vector<double> fy(Q);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        for (int q = 0; q < Q; ++q) fy[q] = profile.evaluate(grid.nodes[i], dy * q);
        for (int j = -J; j <= J; ++j) {
            Complex acc(0.0);
            for (int q = 0; q < Q; ++q)
                acc += fy[q] * std::polar(1.0, -static_cast<double>(j) * dy * q);
            fp.coeffs[static_cast<std::size_t>(j + J)][i] = acc * dy;
        }
    }
    if (fp.max_abs(J) > tail_tol || fp.max_abs(-J) > tail_tol)
        throw TailNotResolved("harmonic J = " + std::to_string(J) + " still carries " +
                              std::to_string(fp.max_abs(J)) + " > " +
                              std::to_string(tail_tol) + "; raise J");
    return fp;
}

// integral of f over one cell of the cylinder = integral of F[0](x) dx; must be > 0.
inline double mean_integral(const FourierProfile& fp) {
    const Complex total = grid_integral(fp.grid, fp.F(0));
    if (std::fabs(total.imag()) > 1e-12)
        throw ComplexLeak("mean of a real profile has imaginary part " +
                          std::to_string(total.imag()));
    if (total.real() <= 0.0)
        throw NonPositiveMean("profile mean integral is " + std::to_string(total.real()) +
                              "; the perturbation must be attractive on average");
    return total.real();
}

// (1/2pi) sum_j F[j](x) e^{i j y}, linear in x between nodes.
inline double reconstruct(const FourierProfile& fp, double x, double y,
                          double* imag_residue = nullptr) {
    if (std::fabs(x) > fp.grid.R)
        throw OutOfRange("reconstruction point |x| = " + std::to_string(std::fabs(x)) +
                         " outside the support half-width " + std::to_string(fp.grid.R));
    const std::size_t M = fp.grid.nodes.size();
    const std::size_t cell = std::min<std::size_t>(
        static_cast<std::size_t>((x - fp.grid.nodes.front()) / fp.grid.h), M - 2);
    const double s = (x - fp.grid.nodes[cell]) / fp.grid.h;
    Complex acc(0.0);
    for (int j = -fp.J; j <= fp.J; ++j) {
        const ComplexGrid& c = fp.F(j);
        const Complex fx = c[cell] * (1.0 - s) + c[cell + 1] * s;
        acc += fx * std::polar(1.0, static_cast<double>(j) * y);
    }
    acc /= 2.0 * M_PI;
    if (imag_residue) *imag_residue = std::fabs(acc.imag());
    return acc.real();
}

// (j, max_i |F[j][i]|) for every stored harmonic, for decay diagnostics.
inline std::vector<std::pair<int, double>> decay_report(const FourierProfile& fp) {
    std::vector<std::pair<int, double>> out;
    out.reserve(2 * fp.J + 1);
    for (int j = -fp.J; j <= fp.J; ++j) out.emplace_back(j, fp.max_abs(j));
    return out;
}

inline void write_coefficients_csv(const FourierProfile& fp, std::ostream& os) {
    os << "j,x,re_fj,im_fj\n";
    char buf[96];
    for (int j = -fp.J; j <= fp.J; ++j) {
        const ComplexGrid& c = fp.F(j);
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", j, fp.grid.nodes[i],
                          c[i].real(), c[i].imag());
            os << buf;
        }
    }
}

} // namespace rbtrap
