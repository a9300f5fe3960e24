#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbtrap/config.hpp"
#include "rbtrap/dispersion.hpp"
#include "rbtrap/field.hpp"
#include "rbtrap/oracle.hpp"

namespace rbtrap {

struct OracleComparison {
    double mu = 0.0;
    double omega_sq = 0.0;
    double lambda_cut = 0.0;
    double rel_diff = 0.0;
    int factorizations = 0;
};

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

// Solve outcome plus measured diagnostics; every number is the result of a
// completed computation on the configured problem.
struct RunReport {
    DispersionPoint point;
    double schur_bound = 0.0;
    double contraction = 0.0;        // eps * operator bound over the iterate range
    double contraction_margin = 0.0; // distance to the 0.9 certificate edge
    double dispersion_residual = 0.0;
    double mode_residual = 0.0;
    double field_extent = 0.0;
    double decay_rate = 0.0;
    double decay_rate_rel_err = 0.0;
    std::optional<OracleComparison> oracle;
    std::vector<StageTiming> timings;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
    template <typename F>
    auto time(const std::string& stage, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            record(stage, t0);
        } else {
            auto result = body();
            record(stage, t0);
            return result;
        }
    }

private:
    void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
        const std::chrono::duration<double, std::milli> dt =
            std::chrono::steady_clock::now() - t0;
        sink_.push_back({stage, dt.count()});
    }
    std::vector<StageTiming>& sink_;
};

} // namespace detail

// Full pipeline for one configuration: profile, solve, diagnostics, and the
// finite-difference cross-check when the config carries an [oracle] section.
inline RunReport build_report(const RunConfig& cfg) {
    RunReport rep;
    detail::StageClock clock(rep.timings);

    const auto tree = expr::ExpressionTree::parse(cfg.perturbation.expression);
    const auto fp = clock.time("profile", [&] {
        return fourier_coefficients(tree,
                                    SpatialGrid::make(cfg.perturbation.support_radius,
                                                      cfg.discretization.grid_points),
                                    cfg.discretization.cutoff, cfg.discretization.y_quadrature);
    });

    const double beta = cfg.problem.beta;
    const double eps = cfg.problem.epsilon;
    const auto tm = clock.time("solve", [&] {
        return solve_trapped(fp, beta, eps, cfg.discretization.modes, cfg.solver.tol_mu,
                             cfg.solver.max_iter, cfg.solver.tol_resolvent);
    });
    rep.point = tm.point;

    clock.time("diagnostics", [&] {
        const double mu_cap = std::min(0.5 * mu0(beta),
                                       std::min(std::fabs(beta), 2.5 * rep.point.leading_mu));
        rep.schur_bound = schur_bound(fp, beta, mu_cap);
        rep.contraction = eps * rep.schur_bound;
        rep.contraction_margin = 0.9 - rep.contraction;
        const double rhs =
            dispersion_rhs(fp, beta, eps, rep.point.mu, cfg.discretization.modes,
                           cfg.solver.tol_mu, cfg.solver.max_iter, cfg.solver.tol_resolvent);
        rep.dispersion_residual = std::fabs(rhs - rep.point.mu);
    });

    clock.time("field", [&] {
        rep.field_extent = default_extent(cfg.perturbation.support_radius, rep.point.mu);
        const auto fs = synthesize_modes(tm.amplitudes, beta, rep.point.mu, rep.field_extent, eps);
        rep.mode_residual = mode_residual(fs, fp, eps);
        rep.decay_rate = decay_rate(fs, 0);
        rep.decay_rate_rel_err = std::fabs(rep.decay_rate - rep.point.mu) / rep.point.mu;
    });

    if (cfg.oracle.present) {
        clock.time("oracle", [&] {
            const StripDiscretization disc{cfg.oracle.L, cfg.oracle.nx, cfg.oracle.ny};
            const double sigma = beta * beta - rep.point.leading_mu * rep.point.leading_mu;
            const auto res = fd_strip_eigensolve(tree, beta, eps, disc, sigma);
            OracleComparison oc;
            oc.mu = res.mu;
            oc.omega_sq = res.omega_sq;
            oc.lambda_cut = res.lambda_cut;
            oc.factorizations = res.factorizations;
            oc.rel_diff = std::fabs(res.mu - rep.point.mu) / rep.point.mu;
            rep.oracle = oc;
        });
    }
    return rep;
}

inline nlohmann::ordered_json report_json(const RunConfig& cfg, const RunReport& rep,
                                          bool with_timings) {
    nlohmann::ordered_json j;
    j["problem"] = {{"beta", cfg.problem.beta}, {"epsilon", cfg.problem.epsilon}};
    j["perturbation"] = {{"expression", cfg.perturbation.expression},
                         {"support_radius", cfg.perturbation.support_radius}};
    j["discretization"] = {{"modes", cfg.discretization.modes},
                           {"cutoff", cfg.discretization.cutoff},
                           {"grid_points", cfg.discretization.grid_points},
                           {"y_quadrature", cfg.discretization.y_quadrature}};
    j["result"] = {{"mu", rep.point.mu},
                   {"omega_sq", rep.point.omega_sq},
                   {"leading_mu", rep.point.leading_mu},
                   {"window_margin", rep.point.window_margin},
                   {"iterations", rep.point.iterations},
                   {"resolvent_iterations", rep.point.resolvent_iterations_total}};
    j["diagnostics"] = {{"schur_bound", rep.schur_bound},
                        {"contraction", rep.contraction},
                        {"contraction_margin", rep.contraction_margin},
                        {"dispersion_residual", rep.dispersion_residual},
                        {"mode_residual", rep.mode_residual},
                        {"field_extent", rep.field_extent},
                        {"decay_rate", rep.decay_rate},
                        {"decay_rate_rel_err", rep.decay_rate_rel_err}};
    if (rep.oracle) {
        j["oracle"] = {{"mu", rep.oracle->mu},
                       {"omega_sq", rep.oracle->omega_sq},
                       {"lambda_cut", rep.oracle->lambda_cut},
                       {"rel_diff", rep.oracle->rel_diff},
                       {"factorizations", rep.oracle->factorizations}};
    }
    if (with_timings) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& t : rep.timings)
            arr.push_back({{"stage", t.stage}, {"milliseconds", t.milliseconds}});
        j["timings"] = std::move(arr);
    }
    return j;
}

inline void write_point_csv(std::ostream& os, const RunConfig& cfg, const RunReport& rep) {
    os << "beta,epsilon,mu,omega_sq,leading_mu,iterations\n";
    os << detail::fmt17(cfg.problem.beta) << ',' << detail::fmt17(cfg.problem.epsilon) << ','
       << detail::fmt17(rep.point.mu) << ',' << detail::fmt17(rep.point.omega_sq) << ','
       << detail::fmt17(rep.point.leading_mu) << ',' << rep.point.iterations << '\n';
}

inline void write_sweep_csv(std::ostream& os, const DispersionCurve& curve) {
    os << "beta,mu,omega_sq,leading_mu,status\n";
    for (const auto& cp : curve.points)
        os << detail::fmt17(cp.beta) << ',' << detail::fmt17(cp.point.mu) << ','
           << detail::fmt17(cp.point.omega_sq) << ',' << detail::fmt17(cp.point.leading_mu)
           << ',' << cp.status << '\n';
}

// Dispersion plot omega(beta) with the cut-off line omega = |beta|; the
// trapped branch sits strictly below it.
inline void emit_svg_plot(const DispersionCurve& curve, std::ostream& os) {
    std::vector<std::pair<double, double>> pts; // (beta, omega)
    for (const auto& cp : curve.points)
        if (cp.status == "ok")
            pts.emplace_back(cp.beta, std::sqrt(std::max(cp.point.omega_sq, 0.0)));
    if (pts.empty()) throw EmptyCurve("dispersion curve has no successful points to plot");

    double x_lo = pts.front().first, x_hi = pts.front().first;
    double y_lo = pts.front().second, y_hi = pts.front().second;
    for (const auto& [b, w] : pts) {
        x_lo = std::min(x_lo, b);
        x_hi = std::max(x_hi, b);
        y_lo = std::min(y_lo, w);
        y_hi = std::max(y_hi, std::max(w, std::fabs(b)));
    }
    if (x_hi - x_lo < 1e-12) {
        const double pad = std::max(0.05 * std::fabs(x_lo), 0.01);
        x_lo -= pad;
        x_hi += pad;
    }
    if (y_hi - y_lo < 1e-12) {
        const double pad = std::max(0.05 * std::fabs(y_lo), 0.01);
        y_lo -= pad;
        y_hi += pad;
    }
    const double xpad = 0.05 * (x_hi - x_lo), ypad = 0.08 * (y_hi - y_lo);
    x_lo -= xpad;
    x_hi += xpad;
    y_lo -= ypad;
    y_hi += ypad;

    const double W = 640, H = 440, ml = 78, mr = 24, mt = 24, mb = 58;
    const auto X = [&](double b) { return ml + (b - x_lo) / (x_hi - x_lo) * (W - ml - mr); };
    const auto Y = [&](double w) { return H - mb - (w - y_lo) / (y_hi - y_lo) * (H - mt - mb); };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    const auto lbl = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(H - mb) << "\" x2=\"" << num(W - mr)
       << "\" y2=\"" << num(H - mb) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
       << "\" y2=\"" << num(H - mb) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double b = x_lo + t * (x_hi - x_lo) / 4.0;
        const double w = y_lo + t * (y_hi - y_lo) / 4.0;
        os << "<line x1=\"" << num(X(b)) << "\" y1=\"" << num(H - mb) << "\" x2=\"" << num(X(b))
           << "\" y2=\"" << num(H - mb + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(X(b)) << "\" y=\"" << num(H - mb + 20)
           << "\" font-size=\"12\" text-anchor=\"middle\">" << lbl(b) << "</text>\n";
        os << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(Y(w)) << "\" x2=\"" << num(ml)
           << "\" y2=\"" << num(Y(w)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(Y(w) + 4)
           << "\" font-size=\"12\" text-anchor=\"end\">" << lbl(w) << "</text>\n";
    }
    os << "<text x=\"" << num((ml + W - mr) / 2) << "\" y=\"" << num(H - 12)
       << "\" font-size=\"16\" text-anchor=\"middle\">β</text>\n";
    os << "<text x=\"" << num(22) << "\" y=\"" << num((mt + H - mb) / 2)
       << "\" font-size=\"16\" text-anchor=\"middle\">ω</text>\n";

    // cut-off line omega = |beta| across the plotted range
    os << "<polyline fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6 4\" points=\"";
    for (int t = 0; t <= 64; ++t) {
        const double b = x_lo + t * (x_hi - x_lo) / 64.0;
        const double w = std::min(std::max(std::fabs(b), y_lo), y_hi);
        os << num(X(b)) << ',' << num(Y(w)) << (t < 64 ? " " : "");
    }
    os << "\"/>\n";
    os << "<text x=\"" << num(W - mr - 6) << "\" y=\"" << num(mt + 14)
       << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#888888\">ω = |β|</text>\n";

    os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
        os << num(X(pts[i].first)) << ',' << num(Y(pts[i].second))
           << (i + 1 < pts.size() ? " " : "");
    os << "\"/>\n";
    for (const auto& [b, w] : pts)
        os << "<circle cx=\"" << num(X(b)) << "\" cy=\"" << num(Y(w))
           << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
    os << "</svg>\n";
}

} // namespace rbtrap
