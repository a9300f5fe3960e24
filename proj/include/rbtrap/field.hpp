#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "rbtrap/convolution.hpp"
#include "rbtrap/errors.hpp"
#include "rbtrap/fourier_profile.hpp"
#include "rbtrap/grid.hpp"
#include "rbtrap/kernels.hpp"
#include "rbtrap/mode_system.hpp"

namespace rbtrap {

// Mode profiles psi_m on a grid extended past the source support [-R, R].
// Inside the support each psi_m is the Green convolution of its amplitude;
// outside it is a pure exponential tail, so |psi_m| is non-increasing there
// and the junction at x = +-R is exact by construction.
struct FieldSolution {
    double beta = 0.0;
    double eps = 0.0;
    double mu = 0.0;
    double support_radius = 0.0;
    int pad = 0;  // nodes added on each side of the source grid
    SpatialGrid grid;
    int N = 0;
    std::vector<ComplexGrid> modes;  // index m + N

    const ComplexGrid& mode(int m) const {
        if (m < -N || m > N) throw OutOfRange("mode index " + std::to_string(m));
        return modes[static_cast<std::size_t>(m + N)];
    }

    double mode_max(int m) const {
        double s = 0.0;
        for (const Complex& v : mode(m)) s = std::max(s, std::abs(v));
        return s;
    }

    int source_points() const { return grid.M - 2 * pad; }
};

// Default extent for tail diagnostics: five e-folds of the slowest mode,
// capped so the grid stays a bounded multiple of the support.
inline double default_extent(double support_radius, double mu) {
    if (mu <= 0.0) throw InvalidWindow("mu must be positive");
    return std::min(2.0 * support_radius + 5.0 / mu, 2.0 * support_radius + 200.0);
}

inline FieldSolution synthesize_modes(const ModeVector& A, double beta, double mu, double X,
                                      double eps = 0.0) {
    const SpatialGrid& src = A.grid;
    if (X < src.R) throw InvalidWindow("extent smaller than the support radius");
    const int pad = static_cast<int>(std::ceil((X - src.R) / src.h - 1e-12));

    FieldSolution fs;
    fs.beta = beta;
    fs.eps = eps;
    fs.mu = mu;
    fs.support_radius = src.R;
    fs.pad = pad;
    fs.N = A.N;

    // Extended nodes reuse the source nodes bit-for-bit so index maps are exact.
    const int Mext = src.M + 2 * pad;
    RealGrid nodes(static_cast<std::size_t>(Mext));
    for (int i = 0; i < pad; ++i) nodes[static_cast<std::size_t>(i)] = -(src.R + (pad - i) * src.h);
    for (int j = 0; j < src.M; ++j) nodes[static_cast<std::size_t>(pad + j)] = src.nodes[static_cast<std::size_t>(j)];
    for (int t = 1; t <= pad; ++t) nodes[static_cast<std::size_t>(pad + src.M - 1 + t)] = src.R + t * src.h;
    fs.grid = SpatialGrid{nodes.back(), Mext, src.h, std::move(nodes)};

    fs.modes.reserve(static_cast<std::size_t>(2 * A.N + 1));
    for (int m = -A.N; m <= A.N; ++m) {
        const double k = wavenumber({beta, mu, m});
        const auto sweep = exponential_sweeps(k, A.V(m), src);
        ComplexGrid psi(static_cast<std::size_t>(Mext));
        const double inv = 1.0 / (2.0 * k);
        for (int j = 0; j < src.M; ++j)
            psi[static_cast<std::size_t>(pad + j)] =
                (sweep.left[static_cast<std::size_t>(j)] + sweep.right[static_cast<std::size_t>(j)]) * inv;
        const Complex cr = sweep.left.back() * inv;   // right tail coefficient at x = R
        const Complex cl = sweep.right.front() * inv; // left tail coefficient at x = -R
        for (int t = 1; t <= pad; ++t) {
            const double decay = std::exp(-k * src.h * t);
            psi[static_cast<std::size_t>(pad + src.M - 1 + t)] = cr * decay;
            psi[static_cast<std::size_t>(pad - t)] = cl * decay;
        }
        fs.modes.push_back(std::move(psi));
    }
    return fs;
}

// Complex samples of the physical field on a rectangular lattice,
// quasiperiodic in y by construction.
struct FieldGrid2D {
    double beta = 0.0;
    RealGrid x;
    RealGrid y;
    std::vector<Complex> values;  // row-major, index ix * y.size() + iy

    const Complex& at(std::size_t ix, std::size_t iy) const { return values[ix * y.size() + iy]; }
};

namespace detail {

inline Complex interp_mode(const ComplexGrid& v, const SpatialGrid& g, double x) {
    if (x <= g.nodes.front()) return v.front();
    if (x >= g.nodes.back()) return v.back();
    const double s = (x - g.nodes.front()) / g.h;
    const auto i = std::min(static_cast<std::size_t>(s), static_cast<std::size_t>(g.M - 2));
    const double t = s - static_cast<double>(i);
    return v[i] * (1.0 - t) + v[i + 1] * t;
}

} // namespace detail

inline FieldGrid2D synthesize_field(const FieldSolution& fs, int nx, int ny) {
    if (nx < 2 || ny < 2) throw ValidationError("field lattice needs at least 2 samples per axis");
    FieldGrid2D out;
    out.beta = fs.beta;
    out.x.resize(static_cast<std::size_t>(nx));
    out.y.resize(static_cast<std::size_t>(ny));
    const double X = fs.grid.R;
    for (int i = 0; i < nx; ++i) out.x[static_cast<std::size_t>(i)] = -X + 2.0 * X * i / (nx - 1);
    out.x.front() = -X;
    out.x.back() = X;
    const double dy = 2.0 * M_PI / (ny - 1);
    for (int j = 0; j < ny; ++j) out.y[static_cast<std::size_t>(j)] = j * dy;
    out.y.back() = 2.0 * M_PI;

    std::vector<Complex> at_x(static_cast<std::size_t>(2 * fs.N + 1));
    out.values.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int i = 0; i < nx; ++i) {
        for (int m = -fs.N; m <= fs.N; ++m)
            at_x[static_cast<std::size_t>(m + fs.N)] =
                detail::interp_mode(fs.mode(m), fs.grid, out.x[static_cast<std::size_t>(i)]);
        for (int j = 0; j < ny; ++j) {
            const double yv = out.y[static_cast<std::size_t>(j)];
            Complex sum{0.0, 0.0};
            for (int m = -fs.N; m <= fs.N; ++m)
                sum += at_x[static_cast<std::size_t>(m + fs.N)] * std::polar(1.0, (fs.beta + m) * yv);
            out.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) +
                       static_cast<std::size_t>(j)] = sum;
        }
    }
    return out;
}

// Max-norm defect of the coupled mode equations under centered second
// differences, relative to the largest mode amplitude. This is the discrete
// certificate that the synthesized profiles solve the spectral problem.
inline double mode_residual(const FieldSolution& fs, const FourierProfile& fp, double eps) {
    const SpatialGrid& g = fs.grid;
    const SpatialGrid& src = fp.grid;
    if (src.h != g.h || fs.source_points() != src.M ||
        g.nodes[static_cast<std::size_t>(fs.pad)] != src.nodes.front())
        throw TruncationMismatch("field grid does not extend the profile grid");

    double scale = 0.0;
    for (int m = -fs.N; m <= fs.N; ++m) scale = std::max(scale, fs.mode_max(m));
    if (scale == 0.0) return 0.0;

    const double c = eps * (fs.beta * fs.beta - fs.mu * fs.mu) / (2.0 * M_PI);
    const double h2 = g.h * g.h;
    double worst = 0.0;
    for (int m = -fs.N; m <= fs.N; ++m) {
        const ComplexGrid& psi = fs.mode(m);
        const double km2 = fs.mu * fs.mu + 2.0 * fs.beta * m + static_cast<double>(m) * m;
        for (int i = 1; i + 1 < g.M; ++i) {
            const Complex d2 = (psi[static_cast<std::size_t>(i - 1)] - 2.0 * psi[static_cast<std::size_t>(i)] +
                                psi[static_cast<std::size_t>(i + 1)]) /
                               h2;
            Complex source{0.0, 0.0};
            const int j = i - fs.pad;
            if (j >= 0 && j < src.M) {
                const int lo = std::max(m - fp.J, -fs.N), hi = std::min(m + fp.J, fs.N);
                for (int n = lo; n <= hi; ++n)
                    source += fp.F(m - n)[static_cast<std::size_t>(j)] *
                              fs.mode(n)[static_cast<std::size_t>(i)];
            }
            worst = std::max(worst, std::abs(-d2 + km2 * psi[static_cast<std::size_t>(i)] - c * source));
        }
    }
    return worst / scale;
}

// Least-squares log-slope of |psi_m| over the tail window
// [2R, min(2R + 3/k_m, X)]; returns the positive decay rate.
inline double decay_rate(const FieldSolution& fs, int m = 0) {
    const ComplexGrid& psi = fs.mode(m);
    const double k = wavenumber({fs.beta, fs.mu, m});
    const double lo = 2.0 * fs.support_radius;
    const double hi = std::min(lo + 3.0 / k, fs.grid.R);
    if (hi <= lo) throw InvalidWindow("grid extent does not reach the tail window");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (int i = 0; i < fs.grid.M; ++i) {
        const double x = fs.grid.nodes[static_cast<std::size_t>(i)];
        if (x < lo || x > hi) continue;
        const double a = std::abs(psi[static_cast<std::size_t>(i)]);
        if (a < 1e-300) throw TailUnderflow("mode " + std::to_string(m) + " vanishes in the fit window");
        const double ly = std::log(a);
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
        ++n;
    }
    if (n < 8) throw InvalidWindow("fewer than 8 nodes in the tail window");
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

// Discrete energy over [-X, X] x [0, 2pi]; the y-integral is exact by
// orthogonality of the harmonics, x uses trapezoid values and cell slopes.
inline double field_energy(const FieldSolution& fs) {
    double total = 0.0;
    for (int m = -fs.N; m <= fs.N; ++m) {
        const ComplexGrid& psi = fs.mode(m);
        const double wy = 1.0 + (fs.beta + m) * (fs.beta + m);
        double val = 0.0;
        for (int i = 0; i < fs.grid.M; ++i) {
            const double a2 = std::norm(psi[static_cast<std::size_t>(i)]);
            val += (i == 0 || i == fs.grid.M - 1) ? 0.5 * a2 : a2;
        }
        double grad = 0.0;
        for (int i = 0; i + 1 < fs.grid.M; ++i)
            grad += std::norm(psi[static_cast<std::size_t>(i + 1)] - psi[static_cast<std::size_t>(i)]);
        total += wy * val * fs.grid.h + grad / fs.grid.h;
    }
    return 2.0 * M_PI * total;
}

inline void write_field_csv(std::ostream& os, const FieldSolution& fs, const FieldGrid2D& fg) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "# beta=%.17g\n# eps=%.17g\n# mu=%.17g\n# omega_sq=%.17g\n",
                  fs.beta, fs.eps, fs.mu, fs.beta * fs.beta - fs.mu * fs.mu);
    os << buf;
    std::snprintf(buf, sizeof buf, "# N=%d\n# M=%d\n# X=%.17g\n", fs.N, fs.source_points(), fs.grid.R);
    os << buf;
    os << "x,y,re_psi,im_psi,abs_psi\n";
    for (std::size_t i = 0; i < fg.x.size(); ++i)
        for (std::size_t j = 0; j < fg.y.size(); ++j) {
            const Complex v = fg.at(i, j);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", fg.x[i], fg.y[j],
                          v.real(), v.imag(), std::abs(v));
            os << buf;
        }
}

} // namespace rbtrap
