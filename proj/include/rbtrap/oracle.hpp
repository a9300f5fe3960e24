#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "rbtrap/errors.hpp"
#include "rbtrap/expression.hpp"
#include "rbtrap/grid.hpp"

namespace rbtrap {

// Brute-force finite-difference eigensolvers, independent of the series
// machinery: direct 5-point discretization of the quasiperiodic strip and its
// one-dimensional reduction. The exterior of the perturbation support is free
// lattice, so it is closed off exactly with the discrete radiation condition
// (ghost column = V diag(rho_n) V^H boundary column, rho_n the decaying root
// of rho + 1/rho = 2 + hx^2 (lambda_n - omega^2)); truncation error is zero
// and the result does not depend on the window length beyond the grid spacing.

struct StripDiscretization {
    double L = 0.0;
    int nx = 0;
    int ny = 0;
    double hx() const { return 2.0 * L / (nx - 1); }
    double hy() const { return 2.0 * M_PI / ny; }
};

struct StripEigenResult {
    double omega_sq = 0.0;
    double mu = 0.0;
    double lambda_cut = 0.0;  // discrete transverse cut-off; mu^2 = lambda_cut - omega_sq
    int factorizations = 0;
    RealGrid tail_x;                // kept columns and reconstructed exterior samples
    std::vector<double> tail_mode0; // |cut-off-mode projection| at those x
};

namespace detail {

// Hermitian banded LDL^H with unit lower factor and 1x1 pivots, stored
// column-major: band[j * (w + 1) + d] holds entry (j + d, j), d = 0..w.
// By Sylvester's law the number of negative pivots equals the number of
// eigenvalues below zero, which drives the bisection.
struct BandFactor {
    int n = 0;
    int w = 0;
    std::vector<Complex> band;

    Complex& at(int row, int col) { return band[static_cast<std::size_t>(col) * (w + 1) + (row - col)]; }
    const Complex& at(int row, int col) const {
        return band[static_cast<std::size_t>(col) * (w + 1) + (row - col)];
    }

    // factors in place; returns the negative-pivot count, or nullopt on a
    // vanishing pivot (shift sits on an eigenvalue of a leading submatrix)
    std::optional<int> factor() {
        int negatives = 0;
        for (int j = 0; j < n; ++j) {
            const int kmin = std::max(0, j - w);
            double d = at(j, j).real();
            for (int k = kmin; k < j; ++k) d -= std::norm(at(j, k)) * at(k, k).real();
            if (!(std::fabs(d) > 1e-280)) return std::nullopt;
            at(j, j) = d;
            if (d < 0.0) ++negatives;
            const int imax = std::min(n - 1, j + w);
            for (int i = j + 1; i <= imax; ++i) {
                Complex s = at(i, j);
                for (int k = std::max(kmin, i - w); k < j; ++k)
                    s -= at(i, k) * std::conj(at(j, k)) * at(k, k).real();
                at(i, j) = s / d;
            }
        }
        return negatives;
    }

    void solve(std::vector<Complex>& x) const {
        for (int j = 0; j < n; ++j) {
            Complex s = x[static_cast<std::size_t>(j)];
            for (int k = std::max(0, j - w); k < j; ++k) s -= at(j, k) * x[static_cast<std::size_t>(k)];
            x[static_cast<std::size_t>(j)] = s;
        }
        for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] /= at(j, j).real();
        for (int j = n - 1; j >= 0; --j) {
            Complex s = x[static_cast<std::size_t>(j)];
            const int imax = std::min(n - 1, j + w);
            for (int i = j + 1; i <= imax; ++i) s -= std::conj(at(i, j)) * x[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(j)] = s;
        }
    }
};

// Discretized strip restricted to the columns where the perturbation lives;
// everything outside is handled through the exact radiation closure.
struct StripProblem {
    double hx = 0.0;
    int ny = 0;
    std::vector<double> lambda_y;  // transverse eigenvalues, index 0 = cut-off mode
    Eigen::MatrixXcd V;            // transverse eigenvectors, column 0 = cut-off mode
    Eigen::MatrixXcd Dy;           // transverse operator V diag(lambda) V^H
    RealGrid xs;                   // kept column positions
    std::vector<double> b;         // 1 + eps f at kept nodes, column-major i*ny + q
    double lambda_cut = 0.0;
};

inline StripProblem build_strip_problem(const expr::ExpressionTree& profile, double beta,
                                        double eps, double L, int nx, int ny) {
    if (!(std::fabs(beta) > 0.0) || !(std::fabs(beta) < 0.5))
        throw InvalidWindow("quasimomentum must lie in (0, 1/2) up to sign");
    if (nx < 16 || ny < 1) throw ValidationError("strip grid needs nx >= 16 and ny >= 1");
    if (!(L > 0.0)) throw ValidationError("strip half-length must be positive");

    StripProblem sp;
    sp.ny = ny;
    sp.hx = 2.0 * L / (nx - 1);
    const double hy = 2.0 * M_PI / ny;

    sp.lambda_y.resize(static_cast<std::size_t>(ny));
    sp.V.resize(ny, ny);
    for (int r = 0; r < ny; ++r) {
        const int nval = (r == 0) ? 0 : ((r % 2 == 1) ? (r + 1) / 2 : -r / 2);
        sp.lambda_y[static_cast<std::size_t>(r)] =
            (ny == 1) ? beta * beta : (2.0 - 2.0 * std::cos((beta + nval) * hy)) / (hy * hy);
        for (int q = 0; q < ny; ++q)
            sp.V(q, r) = std::polar(1.0 / std::sqrt(static_cast<double>(ny)), (beta + nval) * hy * q);
    }
    sp.lambda_cut = sp.lambda_y[0];
    Eigen::VectorXcd lam(ny);
    for (int r = 0; r < ny; ++r) lam(r) = sp.lambda_y[static_cast<std::size_t>(r)];
    sp.Dy = sp.V * lam.asDiagonal() * sp.V.adjoint();

    // locate the columns the perturbation touches
    std::vector<std::vector<double>> f(static_cast<std::size_t>(nx));
    int first = -1, last = -1;
    for (int i = 0; i < nx; ++i) {
        const double x = -L + i * sp.hx;
        auto& col = f[static_cast<std::size_t>(i)];
        col.resize(static_cast<std::size_t>(ny));
        bool nonzero = false;
        for (int q = 0; q < ny; ++q) {
            col[static_cast<std::size_t>(q)] = eps * profile.evaluate(x, q * hy);
            if (col[static_cast<std::size_t>(q)] != 0.0) nonzero = true;
        }
        if (nonzero) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) {
        first = nx / 2;  // unperturbed problem: keep a token window, the
        last = nx / 2;   // bracket probe then reports no state below cut-off
    }
    if (first < 3 || last > nx - 4)
        throw ValidationError("perturbation support must be separated from the domain ends");

    const int lo = first - 2, hi = last + 2;
    for (int i = lo; i <= hi; ++i) {
        sp.xs.push_back(-L + i * sp.hx);
        for (int q = 0; q < ny; ++q) {
            const double v = 1.0 + f[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
            if (!(v > 0.0)) throw ValidationError("refractive index 1 + eps f must stay positive");
            sp.b.push_back(v);
        }
    }
    return sp;
}

inline std::vector<double> radiation_roots(const StripProblem& sp, double m) {
    std::vector<double> rho(sp.lambda_y.size());
    for (std::size_t r = 0; r < sp.lambda_y.size(); ++r) {
        const double s = sp.hx * sp.hx * (sp.lambda_y[r] - sp.lambda_cut + m * m);
        rho[r] = 1.0 + 0.5 * s - 0.5 * std::sqrt(s * (s + 4.0));
    }
    return rho;
}

inline BandFactor assemble_shifted(const StripProblem& sp, double m) {
    const double sigma = sp.lambda_cut - m * m;
    const auto rho = radiation_roots(sp, m);
    Eigen::VectorXcd rv(sp.ny);
    for (int r = 0; r < sp.ny; ++r) rv(r) = rho[static_cast<std::size_t>(r)];
    const Eigen::MatrixXcd P = sp.V * rv.asDiagonal() * sp.V.adjoint();

    const int cols = static_cast<int>(sp.xs.size());
    const double ihx2 = 1.0 / (sp.hx * sp.hx);
    BandFactor F;
    F.n = cols * sp.ny;
    F.w = sp.ny;
    F.band.assign(static_cast<std::size_t>(F.n) * (F.w + 1), Complex{0.0, 0.0});
    for (int i = 0; i < cols; ++i) {
        const bool edge = (i == 0 || i == cols - 1);
        for (int q = 0; q < sp.ny; ++q) {
            const int u = i * sp.ny + q;
            for (int p = q; p < sp.ny; ++p) {
                Complex v = sp.Dy(p, q);
                if (edge) v -= P(p, q) * ihx2;
                if (p == q)
                    v += 2.0 * ihx2 - sigma * sp.b[static_cast<std::size_t>(u)];
                F.at(i * sp.ny + p, u) = v;
            }
            if (i + 1 < cols) F.at(u + sp.ny, u) = -ihx2;
        }
    }
    return F;
}

// whether any eigenvalue of the shifted pencil lies below lambda_cut - m^2;
// jitters m by a few ulps if the factorization lands on an eigenvalue
inline bool state_below(const StripProblem& sp, double m, int& factorizations) {
    double probe = m;
    for (int attempt = 0; attempt < 4; ++attempt) {
        BandFactor F = assemble_shifted(sp, probe);
        ++factorizations;
        if (const auto neg = F.factor()) return *neg > 0;
        probe = probe * (1.0 + 4e-13) + 1e-18;
    }
    throw LinearSolveFailure("banded factorization kept hitting a singular pivot");
}

struct StripSolve {
    double mu;
    int factorizations;
};

// Bisection on the monotone predicate "an eigenvalue sits below the shifted
// cut-off": exact inertia counts make the bracket unconditionally reliable.
inline StripSolve strip_eigen_mu(const StripProblem& sp, double seed, double tol) {
    if (!(seed > 0.0)) throw ValidationError("bracket seed must be positive");
    int facts = 0;
    const double m_min = std::max(1e-9, 1e-6 * seed);
    if (!state_below(sp, m_min, facts))
        throw NoBoundStateFound("no eigenvalue below the cut-off");
    double lo = m_min, hi = 0.0;
    for (double probe = seed;; probe *= 2.0) {
        if (!state_below(sp, probe, facts)) {
            hi = probe;
            break;
        }
        lo = probe;
        if (facts > 240) throw NoConvergence("bracket expansion did not terminate");
    }
    while (hi - lo > std::max(tol * hi, 1e-15)) {
        const double mid = 0.5 * (lo + hi);
        if (state_below(sp, mid, facts))
            lo = mid;
        else
            hi = mid;
        if (facts > 400) throw NoConvergence("bisection did not terminate");
    }
    return {0.5 * (lo + hi), facts};
}

// eigenvector by fixed-shift inverse iteration just off the converged root
inline std::vector<Complex> strip_eigenvector(const StripProblem& sp, double mu) {
    BandFactor F;
    bool factored = false;
    for (const double off : {1e-8, 3e-8, 1e-7}) {
        F = assemble_shifted(sp, mu * (1.0 + off));
        if (F.factor()) {
            factored = true;
            break;
        }
    }
    if (!factored) throw LinearSolveFailure("eigenvector factorization hit a singular pivot");
    const int cols = static_cast<int>(sp.xs.size());
    std::vector<Complex> v(static_cast<std::size_t>(F.n));
    for (int i = 0; i < cols; ++i)
        for (int q = 0; q < sp.ny; ++q) v[static_cast<std::size_t>(i * sp.ny + q)] = sp.V(q, 0);
    for (int step = 0; step < 4; ++step) {
        for (int u = 0; u < F.n; ++u) v[static_cast<std::size_t>(u)] *= sp.b[static_cast<std::size_t>(u)];
        F.solve(v);
        double peak = 0.0;
        for (const Complex& c : v) peak = std::max(peak, std::abs(c));
        if (!(peak > 0.0)) throw LinearSolveFailure("inverse iteration collapsed to zero");
        for (Complex& c : v) c /= peak;
    }
    return v;
}

} // namespace detail

inline StripEigenResult fd_strip_eigensolve(const expr::ExpressionTree& profile, double beta,
                                            double eps, const StripDiscretization& disc,
                                            double sigma, double tol = 1e-10) {
    if (disc.ny < 16) throw ValidationError("strip grid needs ny >= 16");
    if (!(sigma < beta * beta)) throw ValidationError("shift must target below the cut-off");
    const auto sp = detail::build_strip_problem(profile, beta, eps, disc.L, disc.nx, disc.ny);
    const double seed = std::sqrt(beta * beta - sigma);
    const auto root = detail::strip_eigen_mu(sp, seed, tol);

    StripEigenResult res;
    res.mu = root.mu;
    res.lambda_cut = sp.lambda_cut;
    res.omega_sq = sp.lambda_cut - root.mu * root.mu;
    res.factorizations = root.factorizations;

    // cut-off-mode magnitude on the kept columns, then the exact exponential
    // continuation into the free exterior
    const auto v = detail::strip_eigenvector(sp, root.mu);
    const int cols = static_cast<int>(sp.xs.size());
    for (int i = 0; i < cols; ++i) {
        Complex w{0.0, 0.0};
        for (int q = 0; q < sp.ny; ++q)
            w += std::conj(sp.V(q, 0)) * v[static_cast<std::size_t>(i * sp.ny + q)];
        res.tail_x.push_back(sp.xs[static_cast<std::size_t>(i)]);
        res.tail_mode0.push_back(std::abs(w));
    }
    const double rho0 = detail::radiation_roots(sp, root.mu)[0];
    const double span = 4.0 / root.mu;
    const int total = static_cast<int>(std::ceil(span / sp.hx));
    const int stride = std::max(1, total / 16384);
    double value = res.tail_mode0.back();
    const double step_factor = std::pow(rho0, stride);
    for (int t = stride; t <= total; t += stride) {
        value *= step_factor;
        res.tail_x.push_back(sp.xs.back() + t * sp.hx);
        res.tail_mode0.push_back(value);
    }
    return res;
}

inline double ode_1d_eigensolve(const expr::ExpressionTree& g, double beta, double eps, double L,
                                int nx, double tol = 1e-10) {
    const auto sp = detail::build_strip_problem(g, beta, eps, L, nx, 1);
    // leading-order seed from the profile mass; the bracket ladder fixes the scale anyway
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < sp.xs.size(); ++i)
        mass += 0.5 * (sp.b[i] + sp.b[i + 1] - 2.0) * sp.hx;
    const double seed = std::max(0.5 * beta * beta * std::fabs(mass), 1e-8);
    return detail::strip_eigen_mu(sp, seed, tol).mu;
}

} // namespace rbtrap
