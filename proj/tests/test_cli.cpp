#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbtrap/cli.hpp"
#include "rbtrap/config.hpp"

using namespace rbtrap;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const fs::path& work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "rbtrap_cli_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
    const auto path = work_dir() / name;
    std::ofstream os(path, std::ios::binary);
    os << text;
    return path.string();
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const std::string kMinimal = "[problem]\n"
                             "beta = 0.3\n"
                             "epsilon = 0.01\n"
                             "[perturbation]\n"
                             "expression = (1 + cos(y)) * cosq(x, 1)\n"
                             "support_radius = 1\n";

} // namespace

TEST_CASE("config parsing applies defaults and strips quotes") {
    const auto cfg = parse_config_text("# comment\n"
                                       "[problem]\n"
                                       "beta = 0.3\n"
                                       "epsilon = 0.01\n"
                                       "\n"
                                       "[perturbation]\n"
                                       "expression = \"(1+cos(y))*cosq(x,1)\"\n"
                                       "support_radius = 1\n");
    CHECK(cfg.problem.beta == 0.3);
    CHECK(cfg.perturbation.expression == "(1+cos(y))*cosq(x,1)");
    CHECK(cfg.discretization.cutoff == 4);
    CHECK(cfg.discretization.modes == 6);
    CHECK(cfg.discretization.grid_points == 401);
    CHECK(cfg.discretization.y_quadrature == 64);
    CHECK(cfg.solver.tol_mu == 1e-12);
    CHECK_FALSE(cfg.oracle.present);
}

TEST_CASE("config parsing reports precise errors") {
    SECTION("unknown key carries the line number") {
        try {
            parse_config_text("[problem]\nbeta = 0.3\nepsilon = 0.01\nbogus = 1\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 4);
            CHECK(std::string(e.what()).find("bogus") != std::string::npos);
        }
    }
    SECTION("malformed number") {
        try {
            parse_config_text("[problem]\nbeta = fast\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
    SECTION("duplicate key") {
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.3\nbeta = 0.2\n"), ParseError);
    }
    SECTION("unknown section") {
        CHECK_THROWS_AS(parse_config_text("[posse]\n"), ParseError);
    }
    SECTION("key outside a section") {
        CHECK_THROWS_AS(parse_config_text("beta = 0.3\n"), ParseError);
    }
    SECTION("violated invariants are named") {
        try {
            parse_config_text("[problem]\nbeta = 0\nepsilon = 0.01\n"
                              "[perturbation]\nexpression = cosq(x, 1)\nsupport_radius = 1\n");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()) == "beta=0 excluded");
        }
        const std::string tail = "epsilon = 0.01\n"
                                 "[perturbation]\nexpression = cosq(x, 1)\nsupport_radius = 1\n";
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.6\n" + tail), ValidationError);
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.3\nepsilon = 0\n" +
                                          tail.substr(tail.find('[') )), ValidationError);
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.3\n" + tail +
                                          "[discretization]\ngrid_points = 400\n"),
                        ValidationError);
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.3\n" + tail +
                                          "[discretization]\nmodes = 2\ncutoff = 3\n"),
                        ValidationError);
    }
    SECTION("missing required keys") {
        CHECK_THROWS_AS(parse_config_text("[problem]\nbeta = 0.3\nepsilon = 0.01\n"
                                          "[perturbation]\nsupport_radius = 1\n"),
                        ValidationError);
    }
}

TEST_CASE("solve command reports the trapped mode as JSON") {
    const auto cfg_path = write_file("minimal.ini", kMinimal);
    const auto r = run_cli({"solve", "--config", cfg_path});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const double mu = j["result"]["mu"].get<double>();
    CHECK(std::fabs(mu - 4.5e-4) <= 0.02 * 4.5e-4);
    CHECK(j["result"]["omega_sq"].get<double>() == Catch::Approx(0.09 - mu * mu));
    CHECK(j["diagnostics"].contains("schur_bound"));
    CHECK(j["diagnostics"].contains("mode_residual"));
    CHECK(j["diagnostics"].contains("decay_rate"));
    CHECK_FALSE(j.contains("timings"));
    CHECK_FALSE(j.contains("oracle"));

    SECTION("timings appear only when requested") {
        const auto rt = run_cli({"solve", "--config", cfg_path, "--timings"});
        REQUIRE(rt.code == 0);
        const auto jt = nlohmann::json::parse(rt.out);
        REQUIRE(jt.contains("timings"));
        CHECK(jt["timings"].size() >= 3);
    }
    SECTION("optional CSV summary") {
        const auto csv_path = (work_dir() / "point.csv").string();
        const auto rc = run_cli({"solve", "--config", cfg_path, "--csv", csv_path});
        REQUIRE(rc.code == 0);
        const auto text = read_file(csv_path);
        CHECK(text.rfind("beta,epsilon,mu,omega_sq,leading_mu,iterations\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    }
    SECTION("byte-identical reruns") {
        const auto again = run_cli({"solve", "--config", cfg_path});
        CHECK(again.code == 0);
        CHECK(again.out == r.out);
    }
}

TEST_CASE("sweep command writes an ordered curve and a plot") {
    const auto cfg_path = write_file("minimal.ini", kMinimal);
    const auto csv = (work_dir() / "sweep.csv").string();
    const auto svg = (work_dir() / "sweep.svg").string();
    const auto r = run_cli({"sweep", "--config", cfg_path, "--beta-min", "0.1", "--beta-max",
                            "0.4", "--steps", "4", "--out", csv, "--svg", svg});
    REQUIRE(r.code == 0);

    const auto text = read_file(csv);
    REQUIRE(text.rfind("beta,mu,omega_sq,leading_mu,status\n", 0) == 0);
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    double prev_beta = 0.0, prev_omega = 0.0;
    int rows = 0;
    while (std::getline(lines, line)) {
        double beta, mu, osq, lead;
        char status[32] = {0};
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%31s", &beta, &mu, &osq, &lead,
                            status) == 5);
        CHECK(std::string(status) == "ok");
        CHECK(beta > prev_beta);
        const double omega = std::sqrt(osq);
        CHECK(omega > prev_omega);     // trapped branch rises with beta
        CHECK(omega < std::fabs(beta)); // and stays below the cut-off
        prev_beta = beta;
        prev_omega = omega;
        ++rows;
    }
    CHECK(rows == 4);

    const auto plot = read_file(svg);
    CHECK(plot.find("<svg") != std::string::npos);
    CHECK(plot.find("β") != std::string::npos);
    CHECK(plot.find("ω = |β|") != std::string::npos);
    CHECK(std::count(plot.begin(), plot.end(), 'c') >= 4);
    std::size_t markers = 0;
    for (std::size_t at = plot.find("<circle"); at != std::string::npos;
         at = plot.find("<circle", at + 1))
        ++markers;
    CHECK(markers == 4);

    SECTION("concurrent sweep output is byte-identical") {
        const auto csv3 = (work_dir() / "sweep3.csv").string();
        const auto svg3 = (work_dir() / "sweep3.svg").string();
        const auto r3 = run_cli({"sweep", "--config", cfg_path, "--beta-min", "0.1",
                                 "--beta-max", "0.4", "--steps", "4", "--jobs", "3", "--out",
                                 csv3, "--svg", svg3});
        REQUIRE(r3.code == 0);
        CHECK(read_file(csv3) == text);
        CHECK(read_file(svg3) == plot);
    }
    SECTION("jobs default comes from the environment") {
        setenv("RBTRAP_JOBS", "2", 1);
        const auto csvE = (work_dir() / "sweepE.csv").string();
        const auto svgE = (work_dir() / "sweepE.svg").string();
        const auto rE = run_cli({"sweep", "--config", cfg_path, "--beta-min", "0.1",
                                 "--beta-max", "0.4", "--steps", "4", "--out", csvE, "--svg",
                                 svgE});
        unsetenv("RBTRAP_JOBS");
        REQUIRE(rE.code == 0);
        CHECK(read_file(csvE) == text);
    }
}

TEST_CASE("sweep records failures per point") {
    const auto cfg_path = write_file("strong.ini", "[problem]\n"
                                                   "beta = 0.3\n"
                                                   "epsilon = 0.6\n"
                                                   "[perturbation]\n"
                                                   "expression = (1 + cos(y)) * cosq(x, 1)\n"
                                                   "support_radius = 1\n");
    const auto csv = (work_dir() / "mixed.csv").string();
    const auto svg = (work_dir() / "mixed.svg").string();
    const auto r = run_cli({"sweep", "--config", cfg_path, "--beta-min", "0.1", "--beta-max",
                            "0.49", "--steps", "2", "--out", csv, "--svg", svg});
    CHECK(r.code == 0); // one point still converges
    const auto text = read_file(csv);
    CHECK(text.find(",ok\n") != std::string::npos);
    CHECK(text.find(",window_violated\n") != std::string::npos);

    SECTION("a sweep with no survivors exits 3 and skips the plot") {
        const auto cfg1 = write_file("stall.ini", kMinimal + "[solver]\nmax_iter = 1\n");
        const auto csv1 = (work_dir() / "none.csv").string();
        const auto svg1 = (work_dir() / "none.svg").string();
        const auto r1 = run_cli({"sweep", "--config", cfg1, "--beta-min", "0.1", "--beta-max",
                                 "0.2", "--steps", "2", "--out", csv1, "--svg", svg1});
        CHECK(r1.code == 3);
        const auto t1 = read_file(csv1);
        CHECK(t1.find("no_convergence") != std::string::npos);
        CHECK_FALSE(fs::exists(svg1));
    }
    SECTION("invalid ranges are config errors") {
        const auto r2 = run_cli({"sweep", "--config", cfg_path, "--beta-min", "0.4",
                                 "--beta-max", "0.1", "--steps", "2", "--out", csv, "--svg",
                                 svg});
        CHECK(r2.code == 2);
        const auto r3 = run_cli({"sweep", "--config", cfg_path, "--beta-min", "-0.1",
                                 "--beta-max", "0.1", "--steps", "2", "--out", csv, "--svg",
                                 svg});
        CHECK(r3.code == 2);
    }
}

TEST_CASE("field command emits the lattice schema") {
    const auto cfg_path = write_file("minimal.ini", kMinimal);
    const auto r = run_cli({"field", "--config", cfg_path, "--nx", "21", "--ny", "8", "--xmax",
                            "5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("# beta=", 0) == 0);
    CHECK(r.out.find("x,y,re_psi,im_psi,abs_psi\n") != std::string::npos);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7 + 1 + 21 * 8);

    SECTION("file output") {
        const auto path = (work_dir() / "field.csv").string();
        const auto rf = run_cli({"field", "--config", cfg_path, "--nx", "21", "--ny", "8",
                                 "--xmax", "5", "--out", path});
        REQUIRE(rf.code == 0);
        CHECK(read_file(path) == r.out);
    }
}

TEST_CASE("validate command checks the solution") {
    SECTION("all checks pass on a honest configuration") {
        const auto cfg_path = write_file("val.ini", "[problem]\n"
                                                    "beta = 0.35\n"
                                                    "epsilon = 0.05\n"
                                                    "[perturbation]\n"
                                                    "expression = (1 + cos(y)) * cosq(x, 1)\n"
                                                    "support_radius = 1\n"
                                                    "[oracle]\n"
                                                    "L = 40\n"
                                                    "nx = 1601\n"
                                                    "ny = 64\n");
        const auto r = run_cli({"validate", "--config", cfg_path});
        CHECK(r.code == 0);
        CHECK(r.out.find("check dispersion_residual: PASS") != std::string::npos);
        CHECK(r.out.find("check mode_residual: PASS") != std::string::npos);
        CHECK(r.out.find("check decay_fit: PASS") != std::string::npos);
        CHECK(r.out.find("check schur_margin: PASS") != std::string::npos);
        CHECK(r.out.find("check oracle: PASS") != std::string::npos);
        CHECK(r.out.find("validation: PASS") != std::string::npos);
    }
    SECTION("misdeclared support fails the cross-checks") {
        const auto cfg_path = write_file("mis.ini", "[problem]\n"
                                                    "beta = 0.3\n"
                                                    "epsilon = 0.05\n"
                                                    "[perturbation]\n"
                                                    "expression = cosq(x, 2)\n"
                                                    "support_radius = 1\n"
                                                    "[oracle]\n"
                                                    "L = 40\n"
                                                    "nx = 1601\n"
                                                    "ny = 64\n");
        const auto r = run_cli({"validate", "--config", cfg_path});
        CHECK(r.code == 6);
        CHECK(r.out.find("check oracle: FAIL") != std::string::npos);
        CHECK(r.out.find("validation: FAIL") != std::string::npos);
    }
}

TEST_CASE("every exit code is reachable") {
    const auto ok = write_file("minimal.ini", kMinimal);
    CHECK(run_cli({"solve", "--config", ok}).code == 0);

    // 2: configuration and usage errors
    const auto bad = write_file("bad.ini", "[problem]\nbeta = 0.6\nepsilon = 0.01\n"
                                           "[perturbation]\nexpression = cosq(x, 1)\n"
                                           "support_radius = 1\n");
    CHECK(run_cli({"solve", "--config", bad}).code == 2);
    CHECK(run_cli({"solve", "--config", (work_dir() / "absent.ini").string()}).code == 2);
    CHECK(run_cli({"warp", "--config", ok}).code == 2);
    CHECK(run_cli({"solve"}).code == 2);

    // 3: iteration budget exhausted
    const auto stall = write_file("stall.ini", kMinimal + "[solver]\nmax_iter = 1\n");
    CHECK(run_cli({"solve", "--config", stall}).code == 3);

    // 4: outside the perturbative validity window
    const auto wide = write_file("wide.ini", "[problem]\nbeta = 0.02\nepsilon = 10.5\n"
                                             "[perturbation]\n"
                                             "expression = 2 * (1 + cos(y)) * cosq(x, 5)\n"
                                             "support_radius = 5\n");
    CHECK(run_cli({"solve", "--config", wide}).code == 4);

    // 5: attractive-on-average assumption violated
    const auto rep = write_file("rep.ini", "[problem]\nbeta = 0.3\nepsilon = 0.01\n"
                                           "[perturbation]\nexpression = -cosq(x, 1)\n"
                                           "support_radius = 1\n");
    CHECK(run_cli({"solve", "--config", rep}).code == 5);

    // help is not an error
    const auto h = run_cli({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("solve") != std::string::npos);
}
