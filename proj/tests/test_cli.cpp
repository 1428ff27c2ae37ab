#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "levyhedge/cli.hpp"
#include "levyhedge/config.hpp"
#include "levyhedge/errors.hpp"
#include "levyhedge/report_io.hpp"

using namespace levyhedge;
namespace fs = std::filesystem;

namespace {

const std::string config_dir = LEVYHEDGE_CONFIG_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "levyhedge");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("levyhedge_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

int error_line(const std::string& text) {
    try {
        build_config(ConfigDocument::parse(text));
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

const char* minimal = R"([levy]
atom = { x = 0.1, mass = 2.0 }
atom = { x = -0.1, mass = 3.0 }

[market]
phi = 0.05
alpha = 1.0
)";

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = build_config(ConfigDocument::parse(minimal));
    REQUIRE(cfg.market);
    CHECK(cfg.market->measure().size() == 2);
    CHECK(cfg.market->phi() == 0.05);
    CHECK(cfg.market->horizon() == 1.0);
    CHECK_FALSE(cfg.spread);
    CHECK(cfg.has("levy"));
    CHECK_FALSE(cfg.has("claim"));
    CHECK_THROWS_AS(cfg.require("claim"), ConfigError);

    const auto demo = load_config(config_dir + "/demo.toml");
    REQUIRE(demo.spread);
    CHECK(demo.spread->mean_reversion == 1.0);
    CHECK(demo.spread->gamma_xi[0] == 0.02);
    CHECK(demo.spread->gamma_xi[3] == -0.01);
    CHECK(demo.mc.paths.seed == 20240601u);
    CHECK(demo.mc.paths.n_paths == 10000);
    CHECK(demo.claim->affine.a[0] == 1.0);
    CHECK(demo.claim->affine.a[1] == -1.0);

    const auto big = build_config(
        ConfigDocument::parse(std::string(minimal) + "[mc]\nseed = 18446744073709551615\n"));
    CHECK(big.mc.paths.seed == 18446744073709551615ull);
}

TEST_CASE("config errors carry line numbers") {
    CHECK(error_line(std::string(minimal) + "bogus = 1\n") == 8);
    CHECK(error_line(std::string(minimal) + "[nonsense]\n") == 8);
    CHECK(error_line("[levy]\natom = { x = 0.1, mass = }\n") == 2);
    CHECK(error_line("[levy]\natom = { x = 0.1, mass = 1 }\n[market]\nphi = 1\nphi = 2\nalpha = 1\n") == 5);
    CHECK(error_line(std::string(minimal) + "[claim]\ntype = \"log\"\nw = 3\n") == 10);
    CHECK(error_line(std::string(minimal) + "[spread]\ngamma_Xi = [0.1]\n") > 0);
    CHECK(error_line(std::string(minimal) + "[mc]\nn_paths = -4\n") == 9);
    CHECK(error_line("[market]\nalpha = 0\nphi = 0\n[levy]\natom = { x = 0.1, mass = 1 }\n") > 0);
}

TEST_CASE("check subcommand exit codes") {
    CHECK(cli({"check", "--config", config_dir + "/demo.toml"}).code == kExitOk);
    CHECK(cli({"check", "--config", config_dir + "/positive_only.toml"}).code == kExitOk);
    const auto broken = cli({"check", "--config", config_dir + "/broken_drift.toml"});
    CHECK(broken.code == kExitPrecondition);

    const auto dir = scratch("missing");
    {
        std::ofstream f(dir / "no_levy.toml");
        f << "[market]\nphi = 0.1\nalpha = 1.0\n";
    }
    const auto missing = cli({"check", "--config", (dir / "no_levy.toml").string()});
    CHECK(missing.code == kExitConfig);
    CHECK(missing.err.find("levy") != std::string::npos);
    {
        std::ofstream f(dir / "bad.toml");
        f << minimal << "unknown_key = 3\n";
    }
    const auto bad = cli({"check", "--config", (dir / "bad.toml").string()});
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("line 8") != std::string::npos);
    CHECK(cli({"check", "--config", (dir / "absent.toml").string()}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"frobnicate"}).code == kExitConfig);
}

TEST_CASE("solve-affine refuses an ill-posed market") {
    const auto dir = scratch("broken");
    CHECK(cli({"solve-affine", "--config", config_dir + "/broken_drift.toml", "--out", dir.string()})
              .code == kExitPrecondition);
}

TEST_CASE("optimal-strategy on the single atom market") {
    const auto dir = scratch("strategy");
    const auto r = cli({"optimal-strategy", "--config", config_dir + "/positive_only.toml", "--out",
                        dir.string()});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(dir / "strategy.csv");
    REQUIRE(rows.size() > 2);
    CHECK(rows[0][0] == "t");
    CHECK(rows[0][1] == "pi_star");
    CHECK(std::abs(std::strtod(rows[1][1].c_str(), nullptr) - 6.931471805599453) <= 1e-9);
}

TEST_CASE("solve-affine columns match the library row by row") {
    const auto dir = scratch("affine");
    const auto r = cli({"solve-affine", "--config", config_dir + "/demo.toml", "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(dir / "affine_solution.csv");
    const auto cfg = load_config(config_dir + "/demo.toml");
    const auto& m = cfg.require_market();
    const auto fwd = cfg.forward();
    const TimeGrid grid(m.horizon(), cfg.solver.grid_nodes);
    const auto sol = solve_affine(m, fwd, cfg.claim->affine, cfg.constraint, grid);
    REQUIRE(rows.size() == grid.size() + 1);
    CHECK(rows[0] == std::vector<std::string>{"t", "Gamma1", "Gamma2", "omega", "pi_star", "Z"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& row = rows[k + 1];
        const double t = grid[k];
        const auto v = sol.evaluate(t, {0.0, 0.0});
        CHECK(std::strtod(row[0].c_str(), nullptr) == t);
        CHECK(std::strtod(row[1].c_str(), nullptr) == sol.gamma(t)[0]);
        CHECK(std::strtod(row[2].c_str(), nullptr) == sol.gamma(t)[1]);
        CHECK(std::strtod(row[3].c_str(), nullptr) == sol.omega_nodes()[k]);
        CHECK(std::strtod(row[4].c_str(), nullptr) == sol.pi_star_nodes()[k]);
        CHECK(std::strtod(row[5].c_str(), nullptr) == v.z);
    }
    CHECK(fs::exists(dir / "affine_report.json"));
    const std::string report = slurp(dir / "affine_report.json");
    CHECK(report.find("sup_abs_pi_star") != std::string::npos);
    CHECK(report.find("bounds") != std::string::npos);
}

TEST_CASE("zero claim with zero drift gives a zero strategy column") {
    const auto dir = scratch("zero");
    {
        std::ofstream f(dir / "zero.toml");
        f << minimal << "[spread]\nb = 0\nB = 1\nSigma = 0.1\n[claim]\ntype = \"log\"\ncoeff = 0\n";
    }
    std::string text = slurp(dir / "zero.toml");
    text.replace(text.find("phi = 0.05"), 10, "phi = 0.0");
    {
        std::ofstream f(dir / "zero.toml");
        f << text;
    }
    REQUIRE(cli({"solve-affine", "--config", (dir / "zero.toml").string(), "--out", dir.string()})
                .code == kExitOk);
    const auto rows = read_csv(dir / "affine_solution.csv");
    for (std::size_t k = 1; k < rows.size(); ++k)
        CHECK(std::abs(std::strtod(rows[k][4].c_str(), nullptr)) <= 1e-12);
}

TEST_CASE("solve-exp writes the coefficient table") {
    const auto dir = scratch("exp");
    REQUIRE(cli({"solve-exp", "--config", config_dir + "/exp_demo.toml", "--out", dir.string()}).code ==
            kExitOk);
    const auto rows = read_csv(dir / "exp_solution.csv");
    CHECK(rows[0] == std::vector<std::string>{"t", "Gamma1", "Gamma2", "omega", "xi"});
    CHECK(std::strtod(rows.back()[0].c_str(), nullptr) == 1.0);
}

TEST_CASE("reruns are bit identical, also across thread counts") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
    const std::string conf = config_dir + "/demo.toml";
    const std::vector<std::string> small{"--paths", "400", "--steps", "50"};
    auto run = [&](const fs::path& dir, const std::string& threads) {
        auto args = std::vector<std::string>{"simulate", "--config", conf, "--out", dir.string(),
                                             "--threads", threads};
        args.insert(args.end(), small.begin(), small.end());
        REQUIRE(cli(args).code == kExitOk);
        args[0] = "verify";
        cli(args);
        args[0] = "solve-affine";
        REQUIRE(cli(args).code == kExitOk);
    };
    run(a, "1");
    run(b, "1");
    run(c, "4");
    for (const char* f : {"simulation.csv", "paths.csv", "jumps.csv", "diagnostics.csv",
                          "perturbations.csv", "residual.csv", "affine_solution.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f) == slurp(c / f));
    }
}

TEST_CASE("seed override changes paths") {
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    const std::string conf = config_dir + "/demo.toml";
    for (const auto& [dir, seed] : {std::pair{a, "1"}, std::pair{b, "2"}})
        REQUIRE(cli({"simulate", "--config", conf, "--out", dir.string(), "--seed", seed, "--paths",
                     "50", "--steps", "20"})
                    .code == kExitOk);
    CHECK(slurp(a / "simulation.csv") != slurp(b / "simulation.csv"));
}

TEST_CASE("number formatting round trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
    }
}
