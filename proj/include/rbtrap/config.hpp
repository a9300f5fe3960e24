#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "rbtrap/errors.hpp"

namespace rbtrap {

// Run configuration parsed from a sectioned key=value file. The grammar is
// flat: [section] headers, key = value lines, blank lines, and comments
// starting with '#' or ';'. Unknown sections or keys are rejected.
struct RunConfig {
    struct {
        double beta = 0.0;
        double epsilon = 0.0;
    } problem;
    struct {
        std::string expression;
        double support_radius = 0.0;
    } perturbation;
    struct {
        int modes = 6;         // N, resolvent truncation
        int cutoff = 4;        // J, harmonic truncation of the profile
        int grid_points = 401; // M, x-grid nodes over the support
        int y_quadrature = 64; // Q, trapezoid points for the coefficients
    } discretization;
    struct {
        double tol_mu = 1e-12;
        double tol_resolvent = 1e-12;
        int max_iter = 200;
    } solver;
    struct {
        bool present = false;
        double L = 0.0;
        int nx = 0;
        int ny = 0;
    } oracle;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& v, int line) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw ParseError("not a number: '" + v + "'", line);
    return x;
}

inline int parse_int(const std::string& v, int line) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty())
        throw ParseError("not an integer: '" + v + "'", line);
    return static_cast<int>(x);
}

} // namespace detail

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::map<std::string, bool> seen;
    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string text = detail::trim(raw);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ParseError("unterminated section header", line);
            section = detail::trim(text.substr(1, text.size() - 2));
            if (section != "problem" && section != "perturbation" &&
                section != "discretization" && section != "solver" && section != "oracle")
                throw ParseError("unknown section [" + section + "]", line);
            if (section == "oracle") cfg.oracle.present = true;
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line);
        const std::string key = detail::trim(text.substr(0, eq));
        std::string value = detail::trim(text.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (section.empty()) throw ParseError("key outside any section", line);
        if (key.empty()) throw ParseError("empty key", line);
        const std::string full = section + "." + key;
        if (seen[full]) throw ParseError("duplicate key " + full, line);
        seen[full] = true;

        if (full == "problem.beta")
            cfg.problem.beta = detail::parse_double(value, line);
        else if (full == "problem.epsilon")
            cfg.problem.epsilon = detail::parse_double(value, line);
        else if (full == "perturbation.expression")
            cfg.perturbation.expression = value;
        else if (full == "perturbation.support_radius")
            cfg.perturbation.support_radius = detail::parse_double(value, line);
        else if (full == "discretization.modes")
            cfg.discretization.modes = detail::parse_int(value, line);
        else if (full == "discretization.cutoff")
            cfg.discretization.cutoff = detail::parse_int(value, line);
        else if (full == "discretization.grid_points")
            cfg.discretization.grid_points = detail::parse_int(value, line);
        else if (full == "discretization.y_quadrature")
            cfg.discretization.y_quadrature = detail::parse_int(value, line);
        else if (full == "solver.tol_mu")
            cfg.solver.tol_mu = detail::parse_double(value, line);
        else if (full == "solver.tol_resolvent")
            cfg.solver.tol_resolvent = detail::parse_double(value, line);
        else if (full == "solver.max_iter")
            cfg.solver.max_iter = detail::parse_int(value, line);
        else if (full == "oracle.L")
            cfg.oracle.L = detail::parse_double(value, line);
        else if (full == "oracle.nx")
            cfg.oracle.nx = detail::parse_int(value, line);
        else if (full == "oracle.ny")
            cfg.oracle.ny = detail::parse_int(value, line);
        else
            throw ParseError("unknown key " + full, line);
    }

    if (!seen["problem.beta"]) throw ValidationError("missing problem.beta");
    if (!seen["problem.epsilon"]) throw ValidationError("missing problem.epsilon");
    if (!seen["perturbation.expression"]) throw ValidationError("missing perturbation.expression");
    if (!seen["perturbation.support_radius"])
        throw ValidationError("missing perturbation.support_radius");

    if (cfg.problem.beta == 0.0) throw ValidationError("beta=0 excluded");
    if (!(std::fabs(cfg.problem.beta) < 0.5))
        throw ValidationError("beta must satisfy 0 < |beta| < 0.5");
    if (!(cfg.problem.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (!(cfg.perturbation.support_radius > 0.0))
        throw ValidationError("support_radius must be positive");
    if (cfg.discretization.grid_points < 51 || cfg.discretization.grid_points % 2 == 0)
        throw ValidationError("grid_points must be odd and at least 51");
    if (cfg.discretization.cutoff < 1) throw ValidationError("cutoff must be at least 1");
    if (cfg.discretization.modes < cfg.discretization.cutoff)
        throw ValidationError("modes must be at least cutoff");
    if (cfg.discretization.y_quadrature < 4 * cfg.discretization.cutoff + 4)
        throw ValidationError("y_quadrature must be at least 4*cutoff + 4");
    if (!(cfg.solver.tol_mu > 0.0)) throw ValidationError("tol_mu must be positive");
    if (!(cfg.solver.tol_resolvent > 0.0)) throw ValidationError("tol_resolvent must be positive");
    if (cfg.solver.max_iter < 1) throw ValidationError("max_iter must be at least 1");
    if (cfg.oracle.present) {
        if (!(cfg.oracle.L > cfg.perturbation.support_radius))
            throw ValidationError("oracle L must exceed support_radius");
        if (cfg.oracle.nx < 16) throw ValidationError("oracle nx must be at least 16");
        if (cfg.oracle.ny < 16) throw ValidationError("oracle ny must be at least 16");
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    return parse_config(in);
}

} // namespace rbtrap
