#include "levyhedge/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

#include "levyhedge/config.hpp"
#include "levyhedge/errors.hpp"
#include "levyhedge/report_io.hpp"

namespace levyhedge {

namespace {

struct CliOptions {
    std::string command;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> steps;
    std::optional<unsigned> threads;
    bool svg = false;
};

struct Context {
    RunConfig cfg;
    CliOptions opts;
    std::filesystem::path dir;
    std::ostream& out;

    std::string path(const std::string& file) const { return (dir / file).string(); }

    void chart(const std::string& file, const std::string& title, std::span<const double> x,
               const std::vector<ChartSeries>& series) const {
        if (opts.svg) write_text(path(file), line_chart_svg(title, "t", x, series));
    }
};

std::string describe_support(const SupportClass& s) {
    if (s.mixed()) return "mixed (jumps of both signs)";
    if (s.has_positive) return "positive jumps only";
    if (s.has_negative) return "negative jumps only";
    return "degenerate (psi = 0 on the support)";
}

void require_wellposed(const MarketModel& m) {
    const auto rep = check_wellposed(m);
    if (!rep.passes) throw NotWellPosed("market is not well posed: " + rep.reason);
}

const ClaimSpec& require_claim(const RunConfig& cfg, ClaimSpec::Kind kind) {
    cfg.require("claim");
    const auto& c = *cfg.claim;
    if (c.kind != kind)
        throw ConfigError(kind == ClaimSpec::Kind::Log
                              ? "this command needs claim.type = \"log\""
                              : "this command needs claim.type = \"exp\"",
                          c.line);
    return c;
}

std::vector<double> column(std::span<const double> v) { return {v.begin(), v.end()}; }

int cmd_check(Context& ctx) {
    const auto& m = ctx.cfg.require_market();
    const auto sc = classify_support(m);
    const auto rep = check_wellposed(m);
    auto& o = ctx.out;
    o << std::setprecision(17);
    o << "support: " << describe_support(sc) << '\n';
    o << "phi: " << m.phi() << '\n';
    o << "int psi dnu: " << integrate(m.measure(), m.psi()) << '\n';
    o << "well-posed: " << (rep.passes ? "yes" : "no") << '\n';
    o << "reason: " << rep.reason << '\n';
    return rep.passes ? kExitOk : kExitPrecondition;
}

int cmd_optimal_strategy(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& m = cfg.require_market();
    require_wellposed(m);
    const AffineClaim claim =
        cfg.claim ? require_claim(cfg, ClaimSpec::Kind::Log).affine : AffineClaim{{0.0, 0.0}, 0.0};
    SpreadDynamics spread = cfg.spread.value_or(SpreadDynamics{});
    const auto fwd = AffineForward::from_market(m, spread, cfg.r0);
    const TimeGrid grid(m.horizon(), cfg.solver.grid_nodes);
    const bool mixed = classify_support(m).mixed();

    std::vector<std::vector<CsvCell>> rows;
    std::vector<double> pis;
    MinimizeOptions mopts = cfg.solver.minimize;
    for (std::size_t k = grid.size(); k-- > 0;) {
        const auto u = jump_control(fwd, gamma_closed_form(fwd, claim.a, grid.horizon(), grid[k]));
        const auto r = minimize(m, u, cfg.constraint, mopts);
        mopts.start = r.pi_star;
        std::vector<CsvCell> row{grid[k], r.pi_star, r.lambda_min, std::nullopt, std::nullopt};
        if (mixed) {
            const auto b = minimizer_bounds(m, u);
            row[3] = b.lower;
            row[4] = b.upper;
        }
        rows.push_back(std::move(row));
        pis.push_back(r.pi_star);
    }
    std::reverse(rows.begin(), rows.end());
    std::reverse(pis.begin(), pis.end());
    write_csv(ctx.path("strategy.csv"), {"t", "pi_star", "lambda_min", "bound_lower", "bound_upper"},
              rows);
    ctx.chart("strategy.svg", "optimal strategy", grid.times(), {{"pi_star", pis}});

    double sup = 0.0;
    for (double p : pis) sup = std::max(sup, std::abs(p));
    ctx.out << std::setprecision(17) << "pi_star(0): " << pis.front() << '\n'
            << "lambda_min(0): " << *rows.front()[2] << '\n'
            << "sup |pi_star|: " << sup << '\n'
            << "wrote " << ctx.path("strategy.csv") << '\n';
    return kExitOk;
}

int cmd_solve_affine(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& m = cfg.require_market();
    const auto fwd = cfg.forward();
    const auto& claim = require_claim(cfg, ClaimSpec::Kind::Log);
    const auto rep = check_wellposed(m);
    if (!rep.passes) throw NotWellPosed("market is not well posed: " + rep.reason);
    const TimeGrid grid(m.horizon(), cfg.solver.grid_nodes);
    const auto sol = solve_affine(m, fwd, claim.affine, cfg.constraint, grid);

    const bool mixed = classify_support(m).mixed();
    std::vector<std::vector<CsvCell>> rows;
    std::vector<double> g1, g2, zs;
    double sup_pi = 0.0, sup_z = 0.0, sup_u = 0.0, max_grad = 0.0;
    double min_lower = std::numeric_limits<double>::infinity();
    double max_upper = -min_lower;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        const Vec2 g = sol.gamma(t);
        const double pi = sol.pi_star_nodes()[k];
        const double z = dot(g, fwd.diffusion());
        rows.push_back({t, g[0], g[1], sol.omega_nodes()[k], pi, z});
        g1.push_back(g[0]);
        g2.push_back(g[1]);
        zs.push_back(z);
        const auto u = jump_control(fwd, g);
        sup_pi = std::max(sup_pi, std::abs(pi));
        sup_z = std::max(sup_z, std::abs(z));
        sup_u = std::max(sup_u, std::sqrt(l2_norm_sq(m.measure(), u)));
        if (pi > cfg.constraint.lower() && pi < cfg.constraint.upper())
            max_grad = std::max(max_grad, std::abs(lambda_d1(m, u, pi)));
        if (mixed) {
            const auto b = minimizer_bounds(m, u);
            min_lower = std::min(min_lower, b.lower);
            max_upper = std::max(max_upper, b.upper);
        }
    }
    write_csv(ctx.path("affine_solution.csv"), {"t", "Gamma1", "Gamma2", "omega", "pi_star", "Z"},
              rows);

    const double y0 = sol.evaluate(0.0, fwd.initial_state()).y;
    nlohmann::ordered_json j;
    j["grid_nodes"] = grid.size();
    j["horizon"] = grid.horizon();
    j["wellposed_reason"] = rep.reason;
    j["support"] = describe_support(classify_support(m));
    j["y0"] = y0;
    j["pi_star_0"] = sol.pi_star_nodes().front();
    j["sup_abs_pi_star"] = sup_pi;
    j["sup_abs_z"] = sup_z;
    j["sup_u_l2"] = sup_u;
    if (mixed)
        j["bounds"] = {{"min_lower", min_lower}, {"max_upper", max_upper}};
    else
        j["bounds"] = nullptr;
    j["constraint"] = {{"lower", cfg.constraint.kind() == ConstraintSet::Kind::AllReals
                                     ? nlohmann::ordered_json("-inf")
                                     : nlohmann::ordered_json(cfg.constraint.lower())},
                       {"upper", cfg.constraint.kind() == ConstraintSet::Kind::AllReals
                                     ? nlohmann::ordered_json("inf")
                                     : nlohmann::ordered_json(cfg.constraint.upper())}};
    j["tolerances"] = {{"grad_tol", cfg.solver.minimize.grad_tol},
                       {"width_tol", cfg.solver.minimize.width_tol},
                       {"max_abs_lambda_d1", max_grad}};
    write_text(ctx.path("affine_report.json"), j.dump(2) + "\n");

    ctx.chart("affine_solution.svg", "affine BSDE solution", grid.times(),
              {{"pi_star", column(sol.pi_star_nodes())},
               {"omega", column(sol.omega_nodes())},
               {"Gamma2", g2},
               {"Z", zs}});
    ctx.out << std::setprecision(17) << "Y0: " << y0 << '\n'
            << "pi_star(0): " << sol.pi_star_nodes().front() << '\n'
            << "sup |pi_star|: " << sup_pi << '\n'
            << "wrote " << ctx.path("affine_solution.csv") << " and "
            << ctx.path("affine_report.json") << '\n';
    return kExitOk;
}

int cmd_solve_exp(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& m = cfg.require_market();
    const auto fwd = cfg.forward();
    const auto& claim = require_claim(cfg, ClaimSpec::Kind::Exp);
    cfg.require("generator");
    const TimeGrid grid(m.horizon(), cfg.solver.grid_nodes);
    const auto sol = solve_exp(fwd, m.measure(), *cfg.generator, claim.exp, grid);

    std::vector<std::vector<CsvCell>> rows;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2 g = sol.gamma(grid[k]);
        rows.push_back({grid[k], g[0], g[1], sol.omega_nodes()[k], sol.xi_nodes()[k]});
    }
    write_csv(ctx.path("exp_solution.csv"), {"t", "Gamma1", "Gamma2", "omega", "xi"}, rows);
    ctx.chart("exp_solution.svg", "exponential-ansatz solution", grid.times(),
              {{"omega", column(sol.omega_nodes())}, {"xi", column(sol.xi_nodes())}});
    const auto v0 = evaluate_exp_solution(sol, fwd, 0.0, fwd.initial_state());
    ctx.out << std::setprecision(17) << "Y0: " << v0.y << '\n'
            << "Z0: " << v0.z << '\n'
            << "wrote " << ctx.path("exp_solution.csv") << '\n';
    return kExitOk;
}

PathConfig path_config(const Context& ctx) {
    PathConfig p = ctx.cfg.mc.paths;
    if (ctx.opts.seed) p.seed = *ctx.opts.seed;
    if (ctx.opts.paths) p.n_paths = *ctx.opts.paths;
    if (ctx.opts.steps) p.n_steps = *ctx.opts.steps;
    if (ctx.opts.threads) p.threads = std::max(1u, *ctx.opts.threads);
    if (p.n_paths < 1 || p.n_steps < 1) throw ConfigError("--paths and --steps must be at least 1");
    return p;
}

AffineBsdeSolution affine_for_mc(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& m = cfg.require_market();
    const auto fwd = cfg.forward();
    const auto& claim = require_claim(cfg, ClaimSpec::Kind::Log);
    require_wellposed(m);
    return solve_affine(m, fwd, claim.affine, cfg.constraint,
                        TimeGrid(m.horizon(), cfg.solver.grid_nodes));
}

int cmd_simulate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    cfg.require("mc");
    const auto& m = cfg.require_market();
    const auto sol = affine_for_mc(ctx);
    const auto pc = path_config(ctx);
    auto batch = simulate_forward(sol.forward(), m, pc);
    const Strategy strategy = [&sol](double t) { return sol.pi_star(t); };
    parallel_for(batch.paths.size(), pc.threads, [&](std::size_t i) {
        batch.paths[i].x_vals = wealth_path(m, strategy, batch.grid, batch.paths[i], cfg.mc.x0);
    });
    attach_solution(sol, batch);

    const std::size_t nodes = batch.grid.size();
    const std::size_t n = batch.paths.size();
    std::vector<double> buf(n);
    std::vector<std::vector<CsvCell>> rows(nodes);
    std::vector<double> mean_n, mean_xi, mean_x, mean_y;
    for (std::size_t k = 0; k < nodes; ++k) {
        rows[k].push_back(batch.grid[k]);
        auto stat = [&](auto member, std::vector<double>& means) {
            for (std::size_t i = 0; i < n; ++i) buf[i] = (batch.paths[i].*member)[k];
            const auto e = estimate_mean(buf);
            rows[k].push_back(e.mean);
            rows[k].push_back(e.se);
            means.push_back(e.mean);
        };
        stat(&SimPath::n_vals, mean_n);
        stat(&SimPath::xi_vals, mean_xi);
        stat(&SimPath::x_vals, mean_x);
        stat(&SimPath::y_vals, mean_y);
    }
    write_csv(ctx.path("simulation.csv"),
              {"t", "mean_N", "se_N", "mean_Xi", "se_Xi", "mean_X", "se_X", "mean_Y", "se_Y"}, rows);

    std::vector<std::vector<CsvCell>> prow;
    const std::size_t keep = std::min(cfg.mc.save_paths, n);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& p = batch.paths[i];
        for (std::size_t k = 0; k < nodes; ++k)
            prow.push_back({static_cast<double>(i), batch.grid[k], p.n_vals[k], p.xi_vals[k],
                            p.x_vals[k], p.y_vals[k]});
    }
    write_csv(ctx.path("paths.csv"), {"path", "t", "N", "Xi", "X", "Y"}, prow);

    std::vector<std::vector<CsvCell>> jrow;
    for (std::size_t i = 0; i < keep; ++i)
        for (const auto& e : batch.paths[i].jumps)
            jrow.push_back({static_cast<double>(i), e.time, m.measure()[e.atom].x});
    write_csv(ctx.path("jumps.csv"), {"path", "time", "mark"}, jrow);

    ctx.chart("simulation.svg", "path means", batch.grid.times(),
              {{"mean N", mean_n}, {"mean Xi", mean_xi}, {"mean X", mean_x}, {"mean Y", mean_y}});
    ctx.out << "simulated " << n << " paths with " << pc.n_steps << " steps (seed " << pc.seed
            << ")\n"
            << "wrote " << ctx.path("simulation.csv") << ", " << ctx.path("paths.csv") << " and "
            << ctx.path("jumps.csv") << '\n';
    return kExitOk;
}

int cmd_verify(Context& ctx) {
    const auto& cfg = ctx.cfg;
    cfg.require("mc");
    const auto& m = cfg.require_market();
    const auto sol = affine_for_mc(ctx);
    const auto pc = path_config(ctx);
    OptimalityOptions oo;
    oo.x0 = cfg.mc.x0;
    oo.checkpoints = cfg.mc.checkpoints;
    const auto d = optimality_report(m, sol, cfg.mc.perturbations, pc, oo);

    std::vector<std::vector<CsvCell>> rows;
    for (std::size_t c = 0; c < d.checkpoint_times.size(); ++c)
        rows.push_back({d.checkpoint_times[c], d.optimal.utility[c].mean, d.optimal.utility[c].se});
    write_csv(ctx.path("diagnostics.csv"), {"t", "mean_utility", "se"}, rows);

    std::vector<std::vector<CsvCell>> prow;
    for (const auto& s : d.perturbed)
        prow.push_back({s.offset, s.terminal.mean, s.terminal.se, s.gain_vs_optimal.mean,
                        s.gain_vs_optimal.se});
    write_csv(ctx.path("perturbations.csv"),
              {"offset", "mean_terminal_utility", "se", "gain_vs_optimal", "gain_se"}, prow);

    const double bound = 5.0 * std::sqrt(d.step) * (1.0 + std::abs(d.y0));
    write_csv(ctx.path("residual.csv"), {"n_steps", "step", "residual_rms", "bound", "y0"},
              {{static_cast<double>(pc.n_steps), d.step, d.residual_rms, bound, d.y0}});

    if (ctx.opts.svg) {
        std::vector<double> mean, lo, hi;
        for (const auto& e : d.optimal.utility) {
            mean.push_back(e.mean);
            lo.push_back(e.mean - 3.0 * e.se);
            hi.push_back(e.mean + 3.0 * e.se);
        }
        ctx.chart("diagnostics.svg", "mean utility of X - Y under pi*", d.checkpoint_times,
                  {{"mean", mean}, {"mean - 3 se", lo}, {"mean + 3 se", hi}});
    }

    const bool mart = d.martingale_holds();
    const bool super = d.supermartingale_holds();
    const bool resid = d.residual_within_bound();
    auto& o = ctx.out;
    o << std::setprecision(6);
    o << (mart ? "PASS" : "FAIL") << " martingale: mean utility constant within 3 se over "
      << d.checkpoint_times.size() << " checkpoints\n";
    o << (super ? "PASS" : "FAIL") << " supermartingale: " << d.perturbed.size()
      << " perturbed strategies do not beat pi* by more than 3 se\n";
    o << (resid ? "PASS" : "FAIL") << " residual: rms " << d.residual_rms << " <= " << bound
      << '\n';
    o << "wrote " << ctx.path("diagnostics.csv") << ", " << ctx.path("perturbations.csv")
      << " and " << ctx.path("residual.csv") << '\n';
    return mart && super && resid ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exponential-utility hedging in pure-jump Levy markets"};
    app.require_subcommand(1);
    CliOptions opts;

    struct Command {
        const char* name;
        const char* help;
        int (*run)(Context&);
    };
    const Command commands[] = {
        {"check", "report whether the market admits a minimizing strategy", cmd_check},
        {"optimal-strategy", "optimal strategy path for the configured claim",
         cmd_optimal_strategy},
        {"solve-affine", "closed-form BSDE solution for a log claim", cmd_solve_affine},
        {"solve-exp", "exponential-ansatz solution for a linear generator", cmd_solve_exp},
        {"simulate", "simulate price, logspread and wealth paths", cmd_simulate},
        {"verify", "Monte Carlo optimality and residual checks", cmd_verify},
    };
    std::uint64_t seed = 0;
    std::size_t paths = 0, steps = 0;
    unsigned threads = 0;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", opts.config, "config file")->required();
        sub->add_option("--out", opts.out, "output directory (overrides [output] dir)");
        sub->add_option("--seed", seed, "random seed (overrides [mc] seed)");
        sub->add_option("--paths", paths, "number of paths");
        sub->add_option("--steps", steps, "time steps per path");
        sub->add_option("--threads", threads, "worker threads");
        sub->add_flag("--svg", opts.svg, "also write SVG charts");
        sub->callback([&opts, name = c.name] { opts.command = name; });
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--paths")) opts.paths = paths;
        if (sub->count("--steps")) opts.steps = steps;
        if (sub->count("--threads")) opts.threads = threads;
    }

    try {
        RunConfig cfg = load_config(opts.config);
        std::filesystem::path dir = opts.out.empty() ? cfg.output_dir : opts.out;
        if (opts.command != "check") std::filesystem::create_directories(dir);
        Context ctx{std::move(cfg), opts, dir, out};
        for (const auto& c : commands)
            if (opts.command == c.name) return c.run(ctx);
        err << "error: unknown command\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NotWellPosed& e) {
        err << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace levyhedge
