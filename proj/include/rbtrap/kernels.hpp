#pragma once

#include <cmath>
#include <string>

#include "rbtrap/errors.hpp"

namespace rbtrap {

// Upper edge of the spectral window: trapped modes live at 0 < mu < mu0.
inline double mu0(double beta) {
    const double b = std::fabs(beta);
    if (!(b > 0.0 && b < 0.5))
        throw InvalidWindow("quasimomentum must satisfy 0 < |beta| < 1/2, got " +
                            std::to_string(beta));
    return std::sqrt(1.0 - 2.0 * b);
}

struct KernelParams {
    double beta;  // quasimomentum, 0 < |beta| < 1/2
    double mu;    // spectral offset below cut-off, >= 0
    int m;        // transverse mode index
};

// k_m = sqrt(mu^2 + 2 beta m + m^2); k_0 = mu.
inline double wavenumber(const KernelParams& p) {
    if (std::fabs(p.beta) >= 0.5 || p.beta == 0.0)
        throw InvalidWindow("quasimomentum must satisfy 0 < |beta| < 1/2, got " +
                            std::to_string(p.beta));
    if (p.mu < 0.0)
        throw InvalidWindow("spectral offset must be >= 0, got " + std::to_string(p.mu));
    if (p.m == 0) return p.mu;
    const double m = static_cast<double>(p.m);
    const double r = p.mu * p.mu + 2.0 * p.beta * m + m * m;
    if (r <= 0.0)
        throw InvalidWindow("wavenumber radicand not positive for m = " + std::to_string(p.m));
    return std::sqrt(r);
}

// G_m(x) = e^{-k_m |x|} / (2 k_m), the decaying free-space kernel.
inline double green_value(const KernelParams& p, double x) {
    if (p.m == 0 && p.mu == 0.0)
        throw SingularAtZeroMu("m = 0 kernel diverges at mu = 0; use regularized_green");
    const double k = wavenumber(p);
    return std::exp(-k * std::fabs(x)) / (2.0 * k);
}

// G_r(x) = (e^{-mu |x|} - 1) / (2 mu), finite down to mu = 0 where it is -|x|/2.
inline double regularized_green(double mu, double x) {
    if (mu < 0.0)
        throw InvalidWindow("spectral offset must be >= 0, got " + std::to_string(mu));
    const double ax = std::fabs(x);
    if (mu == 0.0) return -0.5 * ax;
    const double w = mu * ax;
    if (w < 1e-4)
        return -0.5 * ax + 0.25 * mu * ax * ax - mu * mu * ax * ax * ax / 12.0;
    return std::expm1(-w) / (2.0 * mu);
}

// H_m(x) = ((beta^2 - mu^2)/2pi) * (regularized kernel for m = 0, G_m otherwise).
// Valid in the uniform window mu <= mu0/2.
inline double kernel_H(const KernelParams& p, double x) {
    if (p.mu > 0.5 * mu0(p.beta))
        throw InvalidWindow("kernel bound window requires mu <= mu0/2");
    const double scale = (p.beta * p.beta - p.mu * p.mu) / (2.0 * M_PI);
    if (p.m == 0) return scale * regularized_green(p.mu, x);
    return scale * green_value(p, x);
}

} // namespace rbtrap
