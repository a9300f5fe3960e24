#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbtrap/convolution.hpp"
#include "rbtrap/errors.hpp"
#include "rbtrap/fourier_profile.hpp"
#include "rbtrap/grid.hpp"
#include "rbtrap/kernels.hpp"

namespace rbtrap {

// Truncated stack of transverse mode amplitudes A_n(x), n in [-N, N].
struct ModeVector {
    SpatialGrid grid;
    int N = 0;
    std::vector<ComplexGrid> values;  // index n + N

    static ModeVector zero(const SpatialGrid& grid, int N) {
        if (N < 1) throw ValidationError("mode truncation N must be >= 1");
        ModeVector mv{grid, N, {}};
        mv.values.assign(2 * N + 1, ComplexGrid(grid.nodes.size(), Complex(0.0)));
        return mv;
    }

    ComplexGrid& V(int n) {
        if (n < -N || n > N)
            throw OutOfRange("mode " + std::to_string(n) + " outside [-N, N], N = " +
                             std::to_string(N));
        return values[static_cast<std::size_t>(n + N)];
    }
    const ComplexGrid& V(int n) const { return const_cast<ModeVector*>(this)->V(n); }

    double mode_max(int n) const {
        double s = 0.0;
        for (const auto& z : V(n)) s = std::max(s, std::abs(z));
        return s;
    }

    // sup-in-x per mode, l2 across modes
    double norm() const {
        double acc = 0.0;
        for (int n = -N; n <= N; ++n) {
            const double m = mode_max(n);
            acc += m * m;
        }
        return std::sqrt(acc);
    }
};

namespace detail {

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
    if (!a.same_as(b))
        throw TruncationMismatch("profile and mode vector use different grids");
}

} // namespace detail

// B_m = ((beta^2 - mu^2)/2pi) [ f_m (G_r * A_0) + sum_{n != 0} f_{m-n} (G_n * A_n) ],
// with f_j = 0 outside [-J, J]. Output support stays inside [-R, R] through the f factor.
inline ModeVector apply_T(const FourierProfile& fp, double beta, double mu,
                          const ModeVector& A) {
    detail::require_same_grid(fp.grid, A.grid);
    if (mu > 0.5 * mu0(beta))
        throw InvalidWindow("operator window requires mu <= mu0/2");
    const std::size_t M = A.grid.nodes.size();
    const double scale = (beta * beta - mu * mu) / (2.0 * M_PI);
    const int N = A.N, J = fp.J;

    std::vector<ComplexGrid> conv(2 * N + 1);
    for (int n = -N; n <= N; ++n) {
        if (n == 0) {
            conv[n + N] = convolve_regularized(mu, A.V(0), A.grid);
        } else {
            const double k = wavenumber({beta, mu, n});
            conv[n + N] = convolve_exponential(k, A.V(n), A.grid);
        }
    }

    ModeVector B = ModeVector::zero(A.grid, N);
    for (int m = -N; m <= N; ++m) {
        ComplexGrid& out = B.V(m);
        for (int n = std::max(-N, m - J); n <= std::min(N, m + J); ++n) {
            const ComplexGrid& f = fp.F(m - n);
            const ComplexGrid& c = conv[n + N];
            for (std::size_t i = 0; i < M; ++i) out[i] += scale * f[i] * c[i];
        }
    }
    return B;
}

// Upper bound on the operator norm: 2R * sup |H| * sum_j max_x |f_j|.
// The sup runs over modes, offsets |x| <= 2R, and mu in [0, mu_max].
inline double schur_bound(const FourierProfile& fp, double beta, double mu_max) {
    if (mu_max < 0.0 || mu_max > 0.5 * mu0(beta))
        throw InvalidWindow("bound window requires 0 <= mu_max <= mu0/2");
    const double R = fp.grid.R;
    double c_h = 0.0;
    for (int im = 0; im <= 8; ++im) {
        for (int sgn = -1; sgn <= 1; sgn += 2) {
            const int m = sgn * im;
            if (m == 0 && sgn > 0) continue;
            for (int iu = 0; iu <= 8; ++iu) {
                const double mu = mu_max * iu / 8.0;
                for (int ix = 0; ix <= 32; ++ix) {
                    const double x = 2.0 * R * ix / 32.0;
                    c_h = std::max(c_h, std::fabs(kernel_H({beta, mu, m}, x)));
                }
            }
        }
    }
    double fsum = 0.0;
    for (int j = -fp.J; j <= fp.J; ++j) fsum += fp.max_abs(j);
    return 2.0 * R * c_h * fsum;
}

// Power iteration in the mode norm; a lower proxy for the true operator norm.
inline double estimate_operator_norm(const FourierProfile& fp, double beta, double mu,
                                     int N, int steps = 20, unsigned seed = 1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ModeVector b = ModeVector::zero(fp.grid, N);
    for (int n = -N; n <= N; ++n)
        for (auto& z : b.V(n)) z = Complex(u(rng), u(rng));
    double estimate = 0.0;
    for (int s = 0; s < steps; ++s) {
        const double bn = b.norm();
        if (bn == 0.0) return 0.0;
        for (auto& mode : b.values)
            for (auto& z : mode) z /= bn;
        b = apply_T(fp, beta, mu, b);
        estimate = b.norm();
    }
    return estimate;
}

enum class SolveMethod { fixed_point, dense };

struct ResolventSolution {
    ModeVector modes;
    int iterations = 0;
    double final_update_norm = 0.0;
    SolveMethod method = SolveMethod::fixed_point;
};

namespace detail {

inline ResolventSolution solve_dense(const FourierProfile& fp, double beta, double eps,
                                     double mu, const ModeVector& rhs) {
    const std::size_t M = rhs.grid.nodes.size();
    const int N = rhs.N;
    const std::size_t dim = (2 * N + 1) * M;
    if (dim > 2500)
        throw ValidationError("dense resolvent limited to 2500 unknowns, got " +
                              std::to_string(dim));
    Eigen::MatrixXcd op(dim, dim);
    ModeVector basis = ModeVector::zero(rhs.grid, N);
    for (std::size_t col = 0; col < dim; ++col) {
        basis.values[col / M][col % M] = 1.0;
        const ModeVector image = apply_T(fp, beta, mu, basis);
        basis.values[col / M][col % M] = 0.0;
        for (std::size_t row = 0; row < dim; ++row) {
            const Complex t = image.values[row / M][row % M];
            op(row, col) = (row == col ? 1.0 : 0.0) - eps * t;
        }
    }
    Eigen::VectorXcd b(dim);
    for (std::size_t row = 0; row < dim; ++row) b(row) = rhs.values[row / M][row % M];
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(op);
    const Eigen::VectorXcd x = lu.solve(b);
    if (!x.allFinite()) throw LinearSolveFailure("dense resolvent produced non-finite values");
    ResolventSolution sol{ModeVector::zero(rhs.grid, N), 1, 0.0, SolveMethod::dense};
    for (std::size_t row = 0; row < dim; ++row) sol.modes.values[row / M][row % M] = x(row);
    sol.final_update_norm = (op * x - b).cwiseAbs().maxCoeff();
    return sol;
}

} // namespace detail

// Solve (1 - eps T) A = rhs. Fixed point iterates A <- rhs + eps T A from A = rhs,
// valid under the contraction margin; dense stacks the unknowns for small instances.
inline ResolventSolution solve_neumann(const FourierProfile& fp, double beta, double eps,
                                       double mu, const ModeVector& rhs, double tol,
                                       int max_iter,
                                       SolveMethod method = SolveMethod::fixed_point) {
    detail::require_same_grid(fp.grid, rhs.grid);
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    if (eps != 0.0) {
        const double bound = schur_bound(fp, beta, std::min(mu, 0.5 * mu0(beta)));
        if (std::fabs(eps) * bound >= 0.9)
            throw ContractionViolated("eps * operator bound = " +
                                      std::to_string(std::fabs(eps) * bound) +
                                      " >= 0.9; contraction margin lost");
    }
    if (method == SolveMethod::dense) return detail::solve_dense(fp, beta, eps, mu, rhs);

    ResolventSolution sol{rhs, 0, 0.0, SolveMethod::fixed_point};
    if (eps == 0.0) return sol;
    for (int it = 1; it <= max_iter; ++it) {
        const ModeVector image = apply_T(fp, beta, mu, sol.modes);
        ModeVector next = rhs;
        double delta = 0.0;
        for (int n = -sol.modes.N; n <= sol.modes.N; ++n) {
            ComplexGrid& nv = next.V(n);
            const ComplexGrid& iv = image.V(n);
            const ComplexGrid& cur = sol.modes.V(n);
            double dmax = 0.0;
            for (std::size_t i = 0; i < nv.size(); ++i) {
                nv[i] += eps * iv[i];
                dmax = std::max(dmax, std::abs(nv[i] - cur[i]));
            }
            delta += dmax * dmax;
        }
        sol.modes = std::move(next);
        sol.iterations = it;
        sol.final_update_norm = std::sqrt(delta);
        if (sol.final_update_norm <= tol) return sol;
    }
    throw NoConvergence("resolvent iteration exceeded " + std::to_string(max_iter) +
                        " steps, last update " + std::to_string(sol.final_update_norm));
}

// Trapped-mode right-hand side: rhs_m = (eps / 2mu) ((beta^2 - mu^2)/2pi) f_m.
inline ModeVector resolvent_rhs(const FourierProfile& fp, double beta, double eps,
                                double mu, int N) {
    if (!(mu > 0.0)) throw InvalidWindow("resolvent rhs requires mu > 0");
    if (N < fp.J)
        throw TruncationMismatch("mode truncation N = " + std::to_string(N) +
                                 " cannot hold rhs harmonics up to J = " +
                                 std::to_string(fp.J));
    const double c = eps / (2.0 * mu) * (beta * beta - mu * mu) / (2.0 * M_PI);
    ModeVector rhs = ModeVector::zero(fp.grid, N);
    for (int m = -fp.J; m <= fp.J; ++m) {
        const ComplexGrid& f = fp.F(m);
        ComplexGrid& v = rhs.V(m);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * f[i];
    }
    return rhs;
}

// Full solve of (1 - eps T) A = (eps / 2mu) ((beta^2 - mu^2)/2pi) f.
inline ResolventSolution solve_resolvent(const FourierProfile& fp, double beta, double eps,
                                         double mu, int N, double tol, int max_iter,
                                         SolveMethod method = SolveMethod::fixed_point) {
    return solve_neumann(fp, beta, eps, mu, resolvent_rhs(fp, beta, eps, mu, N), tol,
                         max_iter, method);
}

} // namespace rbtrap
