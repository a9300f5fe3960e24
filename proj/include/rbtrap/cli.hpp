#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rbtrap/report.hpp"

namespace rbtrap {
namespace cli {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open output file " + path);
    return os;
}

struct Pipeline {
    expr::ExpressionTree tree;
    FourierProfile fp;
    TrappedMode tm;
};

inline Pipeline run_pipeline(const RunConfig& cfg) {
    auto tree = expr::ExpressionTree::parse(cfg.perturbation.expression);
    auto fp = fourier_coefficients(tree,
                                   SpatialGrid::make(cfg.perturbation.support_radius,
                                                     cfg.discretization.grid_points),
                                   cfg.discretization.cutoff, cfg.discretization.y_quadrature);
    auto tm = solve_trapped(fp, cfg.problem.beta, cfg.problem.epsilon, cfg.discretization.modes,
                            cfg.solver.tol_mu, cfg.solver.max_iter, cfg.solver.tol_resolvent);
    return {std::move(tree), std::move(fp), std::move(tm)};
}

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    std::string note;
};

} // namespace detail

inline int cmd_solve(const RunConfig& cfg, const std::string& csv_path, bool timings,
                     std::ostream& out) {
    const RunReport rep = build_report(cfg);
    out << report_json(cfg, rep, timings).dump(2) << '\n';
    if (!csv_path.empty()) {
        auto os = detail::open_out(csv_path);
        write_point_csv(os, cfg, rep);
    }
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg, double beta_min, double beta_max, int steps, int jobs,
                     const std::string& csv_path, const std::string& svg_path,
                     std::ostream& out) {
    if (steps < 1) throw ValidationError("steps must be at least 1");
    if (steps == 1 && beta_min != beta_max)
        throw ValidationError("steps=1 requires beta-min == beta-max");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        betas[static_cast<std::size_t>(i)] =
            (steps == 1) ? beta_min : beta_min + i * (beta_max - beta_min) / (steps - 1);

    const auto tree = expr::ExpressionTree::parse(cfg.perturbation.expression);
    const auto fp = fourier_coefficients(tree,
                                         SpatialGrid::make(cfg.perturbation.support_radius,
                                                           cfg.discretization.grid_points),
                                         cfg.discretization.cutoff,
                                         cfg.discretization.y_quadrature);
    const auto curve = sweep(fp, cfg.problem.epsilon, betas, cfg.discretization.modes,
                             cfg.solver.tol_mu, cfg.solver.max_iter, jobs,
                             cfg.solver.tol_resolvent);
    {
        auto os = detail::open_out(csv_path);
        write_sweep_csv(os, curve);
    }
    int ok = 0;
    for (const auto& cp : curve.points) ok += (cp.status == "ok") ? 1 : 0;
    out << "sweep: " << ok << "/" << curve.points.size() << " points converged\n";
    out << "wrote " << csv_path << '\n';
    if (ok >= 1) {
        auto os = detail::open_out(svg_path);
        emit_svg_plot(curve, os);
        out << "wrote " << svg_path << '\n';
    }
    return ok >= 1 ? 0 : 3;
}

inline int cmd_field(const RunConfig& cfg, int nx, int ny, double xmax,
                     const std::string& out_path, std::ostream& out) {
    const auto pl = detail::run_pipeline(cfg);
    const double X = xmax > 0.0
                         ? xmax
                         : default_extent(cfg.perturbation.support_radius, pl.tm.point.mu);
    const auto fs = synthesize_modes(pl.tm.amplitudes, cfg.problem.beta, pl.tm.point.mu, X,
                                     cfg.problem.epsilon);
    const auto fg = synthesize_field(fs, nx, ny);
    if (out_path.empty()) {
        write_field_csv(out, fs, fg);
    } else {
        auto os = detail::open_out(out_path);
        write_field_csv(os, fs, fg);
        out << "wrote " << out_path << '\n';
    }
    return 0;
}

inline int cmd_validate(RunConfig cfg, bool timings, std::ostream& out) {
    const bool with_oracle = cfg.oracle.present;
    cfg.oracle.present = false; // oracle handled below so its failure is a check, not an abort
    const RunReport rep = build_report(cfg);

    std::vector<detail::Check> checks;
    const double h =
        2.0 * cfg.perturbation.support_radius / (cfg.discretization.grid_points - 1);
    checks.push_back({"dispersion_residual", rep.dispersion_residual <= cfg.solver.tol_mu,
                      rep.dispersion_residual, cfg.solver.tol_mu, ""});
    const double residual_limit = 0.5 * h * h + 1e3 * cfg.solver.tol_mu / rep.point.mu;
    checks.push_back({"mode_residual", rep.mode_residual <= residual_limit, rep.mode_residual,
                      residual_limit, ""});
    checks.push_back({"decay_fit", rep.decay_rate_rel_err <= 0.02, rep.decay_rate_rel_err, 0.02,
                      ""});
    checks.push_back(
        {"schur_margin", rep.contraction < 0.9, rep.contraction, 0.9, ""});
    if (with_oracle) {
        detail::Check oc;
        oc.name = "oracle";
        oc.limit = 0.05;
        try {
            const auto tree = expr::ExpressionTree::parse(cfg.perturbation.expression);
            const StripDiscretization disc{cfg.oracle.L, cfg.oracle.nx, cfg.oracle.ny};
            const double sigma =
                cfg.problem.beta * cfg.problem.beta - rep.point.leading_mu * rep.point.leading_mu;
            const auto res =
                fd_strip_eigensolve(tree, cfg.problem.beta, cfg.problem.epsilon, disc, sigma);
            oc.value = std::fabs(res.mu - rep.point.mu) / rep.point.mu;
            oc.pass = oc.value <= oc.limit;
        } catch (const Error& e) {
            oc.pass = false;
            oc.value = std::numeric_limits<double>::infinity();
            oc.note = std::string(" (") + e.what() + ")";
        }
        checks.push_back(std::move(oc));
    }

    bool all = true;
    for (const auto& c : checks) {
        all = all && c.pass;
        out << "check " << c.name << ": " << (c.pass ? "PASS" : "FAIL")
            << " value=" << rbtrap::detail::fmt17(c.value)
            << " limit=" << rbtrap::detail::fmt17(c.limit) << c.note << '\n';
    }
    out << "validation: " << (all ? "PASS" : "FAIL") << '\n';
    if (timings)
        for (const auto& t : rep.timings)
            out << "timing " << t.stage << ": " << t.milliseconds << " ms\n";
    return all ? 0 : 6;
}

// Full command-line entry point; returns the process exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rayleigh-Bloch trapped-mode solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string solve_csv;
    bool timings = false;
    double beta_min = 0.0, beta_max = 0.0;
    int steps = 0, jobs = 1;
    std::string sweep_csv = "sweep.csv", sweep_svg = "sweep.svg";
    int field_nx = 201, field_ny = 64;
    double field_xmax = 0.0;
    std::string field_out;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_flag("--timings", timings, "report per-stage wall time");
    };
    auto* solve_cmd = app.add_subcommand("solve", "solve one trapped mode, print a JSON report");
    add_common(solve_cmd);
    solve_cmd->add_option("--csv", solve_csv, "also write a one-row CSV summary");

    auto* sweep_cmd = app.add_subcommand("sweep", "solve along a quasimomentum range");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--beta-min", beta_min, "first quasimomentum")->required();
    sweep_cmd->add_option("--beta-max", beta_max, "last quasimomentum")->required();
    sweep_cmd->add_option("--steps", steps, "number of sweep points")->required();
    sweep_cmd->add_option("--jobs", jobs, "concurrent solves")->envname("RBTRAP_JOBS");
    sweep_cmd->add_option("--out", sweep_csv, "curve CSV path");
    sweep_cmd->add_option("--svg", sweep_svg, "dispersion plot path");

    auto* field_cmd = app.add_subcommand("field", "synthesize the mode field on a lattice");
    add_common(field_cmd);
    field_cmd->add_option("--nx", field_nx, "lattice columns");
    field_cmd->add_option("--ny", field_ny, "lattice rows over one period");
    field_cmd->add_option("--xmax", field_xmax, "half-extent in x (default from the decay length)");
    field_cmd->add_option("--out", field_out, "field CSV path (default stdout)");

    auto* validate_cmd = app.add_subcommand("validate", "run the validation checks");
    add_common(validate_cmd);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        const RunConfig cfg = load_config(config_path);
        if (solve_cmd->parsed()) return cmd_solve(cfg, solve_csv, timings, out);
        if (sweep_cmd->parsed())
            return cmd_sweep(cfg, beta_min, beta_max, steps, jobs, sweep_csv, sweep_svg, out);
        if (field_cmd->parsed())
            return cmd_field(cfg, field_nx, field_ny, field_xmax, field_out, out);
        return cmd_validate(cfg, timings, out);
    } catch (const ParseError& e) {
        err << "config error (line " << e.line << "): " << e.what() << '\n';
        return 2;
    } catch (const SyntaxError& e) {
        err << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const UnknownIdentifier& e) {
        err << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const TailNotResolved& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const TruncationMismatch& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const OutOfRange& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const WindowViolated& e) {
        err << "window violation: " << e.what() << '\n';
        return 4;
    } catch (const ContractionViolated& e) {
        err << "window violation: " << e.what() << '\n';
        return 4;
    } catch (const InvalidWindow& e) {
        err << "window violation: " << e.what() << '\n';
        return 4;
    } catch (const SingularAtZeroMu& e) {
        err << "window violation: " << e.what() << '\n';
        return 4;
    } catch (const NonPositiveRate& e) {
        err << "window violation: " << e.what() << '\n';
        return 4;
    } catch (const NonPositiveMean& e) {
        err << "assumption violated: " << e.what() << '\n';
        return 5;
    } catch (const AssumptionViolated& e) {
        err << "assumption violated: " << e.what() << '\n';
        return 5;
    } catch (const ComplexLeak& e) {
        err << "assumption violated: " << e.what() << '\n';
        return 5;
    } catch (const NoConvergence& e) {
        err << "no convergence: " << e.what() << '\n';
        return 3;
    } catch (const NoBoundStateFound& e) {
        err << "no convergence: " << e.what() << '\n';
        return 3;
    } catch (const LinearSolveFailure& e) {
        err << "no convergence: " << e.what() << '\n';
        return 3;
    } catch (const TailUnderflow& e) {
        err << "no convergence: " << e.what() << '\n';
        return 3;
    } catch (const EmptyCurve& e) {
        err << "no convergence: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace cli
} // namespace rbtrap
