#pragma once

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rbtrap/errors.hpp"
#include "rbtrap/fourier_profile.hpp"
#include "rbtrap/mode_system.hpp"

namespace rbtrap {

// One trapped-mode solution: omega^2 = beta^2 - mu^2 just below the cut-off.
struct DispersionPoint {
    double beta = 0.0;
    double eps = 0.0;
    double mu = 0.0;
    double omega_sq = 0.0;
    double leading_mu = 0.0;  // first-order seed value
    int iterations = 0;
    int resolvent_iterations_total = 0;
    double window_margin = 0.0;  // min(|beta| - mu, mu0/2 - mu)
};

// First-order trapped-mode offset: mu ~ eps beta^2 / (4 pi) * mean of f.
inline double leading_mu(double beta, double eps, double mean_f) {
    if (std::fabs(beta) >= 0.5 || beta == 0.0)
        throw InvalidWindow("quasimomentum must satisfy 0 < |beta| < 1/2, got " +
                            std::to_string(beta));
    if (!(eps > 0.0))
        throw ValidationError("perturbation strength must be positive, got " +
                              std::to_string(eps));
    if (mean_f <= 0.0)
        throw AssumptionViolated("mean of the perturbation must be positive, got " +
                                 std::to_string(mean_f));
    return eps * beta * beta / (4.0 * M_PI) * mean_f;
}

// Mode stack holding the bare coefficient functions f_m.
inline ModeVector profile_modes(const FourierProfile& fp, int N) {
    if (N < fp.J)
        throw TruncationMismatch("mode truncation N = " + std::to_string(N) +
                                 " cannot hold profile harmonics up to J = " +
                                 std::to_string(fp.J));
    ModeVector mv = ModeVector::zero(fp.grid, N);
    for (int m = -fp.J; m <= fp.J; ++m) mv.V(m) = fp.F(m);
    return mv;
}

namespace detail {

struct RhsEval {
    double value = 0.0;
    ResolventSolution resolvent;
};

// rhs(mu) = (eps/2) ((beta^2 - mu^2)/2pi) <Y_0>, Y = (1 - eps T)^{-1} f.
inline RhsEval eval_dispersion_rhs(const FourierProfile& fp, double beta, double eps,
                                   double mu, int N, double tol, int max_iter,
                                   double tol_res = 0.0) {
    RhsEval ev;
    ev.resolvent = solve_neumann(fp, beta, eps, mu, profile_modes(fp, N),
                                 tol_res > 0.0 ? tol_res : tol, max_iter);
    const Complex y0 = grid_integral(fp.grid, ev.resolvent.modes.V(0));
    if (std::fabs(y0.imag()) > 1e-10 * std::fabs(y0.real()))
        throw ComplexLeak("dispersion functional carries imaginary part " +
                          std::to_string(y0.imag()) + " against real part " +
                          std::to_string(y0.real()));
    ev.value = 0.5 * eps * (beta * beta - mu * mu) / (2.0 * M_PI) * y0.real();
    return ev;
}

} // namespace detail

inline double dispersion_rhs(const FourierProfile& fp, double beta, double eps, double mu,
                             int N, double tol = 1e-12, int max_iter = 200,
                             double tol_res = 0.0) {
    if (!(mu > 0.0) || mu >= 0.5 * mu0(beta))
        throw InvalidWindow("dispersion rhs requires 0 < mu < mu0/2");
    return detail::eval_dispersion_rhs(fp, beta, eps, mu, N, tol, max_iter, tol_res).value;
}

// Dispersion point plus the normalized mode amplitudes (<A_0> = 1).
struct TrappedMode {
    DispersionPoint point;
    ModeVector amplitudes;
};

// Fixed point mu <- rhs(mu) seeded at the leading term; the map contracts at
// rate O(eps), with a secant fallback if updates stop shrinking.
inline TrappedMode solve_trapped(const FourierProfile& fp, double beta, double eps, int N,
                                 double tol = 1e-12, int max_iter = 200,
                                 double tol_res = 0.0) {
    double mean = 0.0;
    try {
        mean = mean_integral(fp);
    } catch (const NonPositiveMean& e) {
        throw AssumptionViolated(e.what());
    }
    const double seed = leading_mu(beta, eps, mean);
    const double half_window = 0.5 * mu0(beta);
    const double window_top = std::min(std::fabs(beta), half_window);
    if (seed >= window_top)
        throw WindowViolated("leading-order mu = " + std::to_string(seed) +
                             " already reaches the validity window edge " +
                             std::to_string(window_top) + "; eps is too large");

    // contraction certificate over the whole range the iterates can visit
    const double mu_cap = std::min(half_window, std::min(std::fabs(beta), 2.5 * seed));
    const double bound = schur_bound(fp, beta, mu_cap);
    if (eps * bound >= 0.9)
        throw ContractionViolated("eps * operator bound = " + std::to_string(eps * bound) +
                                  " >= 0.9; the resolvent series need not converge");

    double mu = seed;
    double prev_mu = 0.0, prev_res = 0.0;
    double last_step = 0.0;
    int stall = 0;
    bool have_prev = false;
    detail::RhsEval ev;
    int resolvent_total = 0;
    for (int it = 1; it <= max_iter; ++it) {
        if (!(mu > 0.0) || mu >= window_top)
            throw WindowViolated("iterate mu = " + std::to_string(mu) +
                                 " left the validity window (0, " +
                                 std::to_string(window_top) + ")");
        ev = detail::eval_dispersion_rhs(fp, beta, eps, mu, N, tol, max_iter, tol_res);
        resolvent_total += ev.resolvent.iterations;
        const double residual = ev.value - mu;
        if (std::fabs(residual) <= tol) {
            DispersionPoint pt;
            pt.beta = beta;
            pt.eps = eps;
            pt.mu = mu;
            pt.omega_sq = beta * beta - mu * mu;
            pt.leading_mu = seed;
            pt.iterations = it;
            pt.resolvent_iterations_total = resolvent_total;
            pt.window_margin = std::min(std::fabs(beta) - mu, half_window - mu);
            if (pt.window_margin <= 0.0)
                throw WindowViolated("converged mu = " + std::to_string(mu) +
                                     " is outside the validity window");
            // amplitudes A = (eps/2mu) scale Y; at the root <A_0> = rhs/mu = 1 up to tol
            TrappedMode tm{pt, std::move(ev.resolvent.modes)};
            const double amp = eps / (2.0 * mu) * (beta * beta - mu * mu) / (2.0 * M_PI);
            for (auto& mode : tm.amplitudes.values)
                for (auto& z : mode) z *= amp;
            const Complex a0 = grid_integral(fp.grid, tm.amplitudes.V(0));
            for (auto& mode : tm.amplitudes.values)
                for (auto& z : mode) z /= a0;
            return tm;
        }
        double next;
        const double step = std::fabs(residual);
        if (have_prev && last_step > 0.0 && step >= last_step) ++stall;
        if (stall >= 8 && have_prev && std::fabs(residual - prev_res) > 0.0) {
            // secant on g(mu) = rhs(mu) - mu through the last two evaluations
            next = mu - residual * (mu - prev_mu) / (residual - prev_res);
        } else {
            next = ev.value;
        }
        prev_mu = mu;
        prev_res = residual;
        last_step = step;
        have_prev = true;
        mu = next;
    }
    throw NoConvergence("dispersion iteration exceeded " + std::to_string(max_iter) +
                        " steps, last update " + std::to_string(last_step));
}

inline DispersionPoint solve_mu(const FourierProfile& fp, double beta, double eps, int N,
                                double tol = 1e-12, int max_iter = 200,
                                double tol_res = 0.0) {
    return solve_trapped(fp, beta, eps, N, tol, max_iter, tol_res).point;
}

struct CurvePoint {
    double beta = 0.0;
    std::string status;   // "ok" or a failure class
    std::string message;  // failure detail, empty when ok
    DispersionPoint point;
};

struct DispersionCurve {
    std::vector<CurvePoint> points;
};

namespace detail {

inline CurvePoint sweep_point(const FourierProfile& fp, double eps, double beta, int N,
                              double tol, int max_iter, double tol_res) {
    CurvePoint cp;
    cp.beta = beta;
    try {
        cp.point = solve_mu(fp, beta, eps, N, tol, max_iter, tol_res);
        cp.status = "ok";
    } catch (const WindowViolated& e) {
        cp.status = "window_violated";
        cp.message = e.what();
    } catch (const ContractionViolated& e) {
        cp.status = "contraction_violated";
        cp.message = e.what();
    } catch (const NoConvergence& e) {
        cp.status = "no_convergence";
        cp.message = e.what();
    } catch (const AssumptionViolated& e) {
        cp.status = "assumption_violated";
        cp.message = e.what();
    } catch (const Error& e) {
        cp.status = "error";
        cp.message = e.what();
    }
    return cp;
}

} // namespace detail

// Per-beta solves; failures are recorded per point, never fatal to the sweep.
inline DispersionCurve sweep(const FourierProfile& fp, double eps,
                             const std::vector<double>& beta_values, int N,
                             double tol = 1e-12, int max_iter = 200, int jobs = 1,
                             double tol_res = 0.0) {
    for (std::size_t i = 0; i < beta_values.size(); ++i) {
        const double b = beta_values[i];
        if (b == 0.0 || std::fabs(b) >= 0.5)
            throw ValidationError("sweep quasimomentum must lie in (0, 1/2) or (-1/2, 0)");
        if (i > 0 && !(beta_values[i - 1] < b))
            throw ValidationError("sweep quasimomenta must be strictly increasing");
        if (i > 0 && (beta_values[i - 1] < 0.0) != (b < 0.0))
            throw ValidationError("sweep quasimomenta must share one sign interval");
    }
    DispersionCurve curve;
    curve.points.resize(beta_values.size());
    if (beta_values.empty()) return curve;
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(beta_values.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < beta_values.size(); ++i)
            curve.points[i] =
                detail::sweep_point(fp, eps, beta_values[i], N, tol, max_iter, tol_res);
        return curve;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= beta_values.size()) return;
                curve.points[i] =
                    detail::sweep_point(fp, eps, beta_values[i], N, tol, max_iter, tol_res);
            }
        });
    }
    for (auto& t : pool) t.join();
    return curve;
}

} // namespace rbtrap
