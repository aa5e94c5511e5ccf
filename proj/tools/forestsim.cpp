// Command-line front end: single-path simulation, ensemble statistics,
// regime classification, parameter sweeps, figure-data reproduction with
// gnuplot scripts, and an integrator convergence study.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forest/forest.hpp"

namespace fs = std::filesystem;
using namespace forest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<std::string> scheme;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config_path, "JSON configuration file");
    if (config_required) c->required();
    cmd->add_option("--seed", o.seed, "override master_seed");
    cmd->add_option("--out", o.out, "override output directory");
    cmd->add_option("--paths", o.paths, "override number of paths");
    cmd->add_option("--dt", o.dt, "override time step");
    cmd->add_option("--t-end", o.t_end, "override horizon");
    cmd->add_option("--scheme", o.scheme,
                    "override scheme (EulerMaruyama|Milstein|StrongTaylor15|DeterministicRK4)");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_config(const CommonOpts& o) {
    RunConfig cfg = parse_config(read_file(o.config_path));
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.out) cfg.outputs = *o.out;
    if (o.paths) cfg.n_paths = *o.paths;
    if (o.dt) cfg.solver.dt = *o.dt;
    if (o.t_end) cfg.solver.t_end = *o.t_end;
    if (o.scheme) cfg.solver.scheme = detail::parse_scheme(*o.scheme);
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.n_paths < 1) throw ConfigError("config: n_paths must be >= 1");
    return cfg;
}

std::vector<double> uniform_times(double t_end, std::size_t n) {
    std::vector<double> ts;
    ts.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) ts.push_back(t_end * i / n);
    return ts;
}

// Sample grid for ensemble statistics: every step up to 1000 rows.
std::vector<double> stats_grid(const SolverConfig& s) {
    const auto steps = static_cast<std::size_t>(std::ceil(s.t_end / s.dt - 1e-9));
    return uniform_times(s.t_end, std::min<std::size_t>(steps, 1000));
}

struct Csv {
    std::FILE* f = nullptr;
    explicit Csv(const fs::path& path) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        f = std::fopen(path.string().c_str(), "wb");
        if (!f) throw std::runtime_error("cannot open output file: " + path.string());
    }
    ~Csv() { if (f) std::fclose(f); }
    Csv(const Csv&) = delete;
    Csv& operator=(const Csv&) = delete;
};

void write_text(const fs::path& path, const std::string& text) {
    Csv out(path);
    std::fwrite(text.data(), 1, text.size(), out.f);
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_simulate(const CommonOpts& o) {
    const RunConfig cfg = load_config(o);
    NoiseStream stream(cfg.master_seed, 0);
    const Trajectory traj = simulate_path(cfg.params, cfg.init, cfg.solver, stream,
                                          {cfg.master_seed, 0});
    const fs::path out = fs::path(cfg.outputs) / "trajectory.csv";
    write_trajectory_csv(traj, out);
    std::printf("wrote %s (%zu rows, %ld clamp events)\n", out.string().c_str(),
                traj.times.size(), traj.clamp_events);
    return kExitOk;
}

int cmd_ensemble(const CommonOpts& o) {
    const RunConfig cfg = load_config(o);
    const std::vector<double> ts = stats_grid(cfg.solver);
    EnsembleAccumulator acc(ts);
    if (cfg.n_paths < 2) throw ConfigError("config: ensemble needs n_paths >= 2");
    run_paths(
        cfg.n_paths,
        [&](std::size_t i) {
            NoiseStream stream(cfg.master_seed, i);
            return sampled_states(cfg.params, cfg.init, cfg.solver, stream, ts);
        },
        [&](std::size_t, std::vector<State>&& states) {
            acc.add(Trajectory{ts, std::move(states)});
        });
    const fs::path out = fs::path(cfg.outputs) / "ensemble.csv";
    write_ensemble_csv(acc.finalize(), out);
    std::printf("wrote %s (%zu paths)\n", out.string().c_str(), cfg.n_paths);
    return kExitOk;
}

int cmd_classify(const CommonOpts& o) {
    const RunConfig cfg = load_config(o);
    const RegimeReport rep = classify_regime(cfg.params, cfg.init.u);
    std::cout << report_to_json(rep).dump(2) << "\n";
    return kExitOk;
}

SweepAxis parse_axis(const std::string& text) {
    SweepAxis ax;
    char name[16] = {};
    if (std::sscanf(text.c_str(), "%15[a-z]:%lf:%lf:%d", name, &ax.min, &ax.max,
                    &ax.steps) != 4)
        throw ConfigError("sweep: axis must have the form name:min:max:steps, got '" +
                          text + "'");
    ax.name = name;
    return ax;
}

int cmd_sweep(const CommonOpts& o, const std::string& axis1, const std::string& axis2) {
    const RunConfig cfg = load_config(o);
    SweepResult sw;
    try {
        sw = sweep(cfg.params, parse_axis(axis1), parse_axis(axis2), cfg.init.u);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const fs::path out = fs::path(cfg.outputs) / "sweep.csv";
    write_sweep_csv(sw, out);
    std::printf("wrote %s (%zux%zu grid)\n", out.string().c_str(),
                sw.axis1_values.size(), sw.axis2_values.size());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// figure reproduction

struct FigureConfig {
    ModelParams params;
    State init;
    SolverConfig solver;
    std::size_t n_paths = 1;
};

FigureConfig figure_defaults(int which) {
    const ModelParams grow = make_params(5, 2, 1, 2.5, 4, 1, 0.5);     // figs 2-6
    const ModelParams noisy = make_params(7, 3, 4, 5, 6, 2, 4);        // fig 7
    const ModelParams mortal = make_params(7, 3, 4, 5, 6, 3.82, 0.25); // fig 8
    FigureConfig fc;
    fc.solver.scheme = Scheme::StrongTaylor15;
    fc.solver.clamp = ClampPolicy::ClampToZero;
    switch (which) {
        case 2: fc = {grow, {2, 1}, {Scheme::StrongTaylor15, 1e-3, 100.0}, 1}; break;
        case 3: fc = {grow, {2, 1}, {Scheme::StrongTaylor15, 1e-2, 1000.0}, 10000}; break;
        case 4: fc = {grow, {2, 1}, {Scheme::StrongTaylor15, 1e-3, 20.0}, 1000}; break;
        case 5: fc = {grow, {2, 1}, {Scheme::StrongTaylor15, 1e-3, 100.0}, 1}; break;
        case 6: fc = {grow, {2, 1}, {Scheme::StrongTaylor15, 1e-2, 100.0}, 20000}; break;
        case 7: fc = {noisy, {4, 3}, {Scheme::StrongTaylor15, 1e-3, 2.0}, 1}; break;
        case 8: fc = {mortal, {4, 3}, {Scheme::StrongTaylor15, 1e-3, 15.0}, 500}; break;
        default: throw ConfigError("figure: --which must be in 2..8");
    }
    return fc;
}

std::string gp_preamble(const std::string& stem) {
    return "set datafile separator ','\nset key autotitle columnhead\n"
           "set terminal pngcairo size 1200,500\nset output '" + stem + ".png'\n";
}

void emit_path_figure(int which, const FigureConfig& fc, std::uint64_t seed,
                      const fs::path& dir) {
    NoiseStream stream(seed, 0);
    const Trajectory traj = simulate_path(fc.params, fc.init, fc.solver, stream, {seed, 0});
    const std::string stem = "fig" + std::to_string(which);
    write_trajectory_csv(traj, dir / (stem + "_path.csv"));
    write_text(dir / (stem + ".gp"),
               gp_preamble(stem) +
               "set multiplot layout 1,2\n"
               "set xlabel 'u'\nset ylabel 'v'\n"
               "plot '" + stem + "_path.csv' using 2:3 with lines title 'phase'\n"
               "set xlabel 't'\nset ylabel 'density'\n"
               "plot '" + stem + "_path.csv' using 1:2 with lines title 'u', \\\n"
               "     '" + stem + "_path.csv' using 1:3 with lines title 'v'\n"
               "unset multiplot\n");
}

void emit_mean_figure(int which, const FigureConfig& fc, std::uint64_t seed,
                      const fs::path& dir) {
    const std::vector<double> ts = stats_grid(fc.solver);
    EnsembleAccumulator acc(ts);
    run_paths(
        fc.n_paths,
        [&](std::size_t i) {
            NoiseStream stream(seed, i);
            return sampled_states(fc.params, fc.init, fc.solver, stream, ts);
        },
        [&](std::size_t, std::vector<State>&& states) {
            acc.add(Trajectory{ts, std::move(states)});
        });
    const std::string stem = "fig" + std::to_string(which);
    write_ensemble_csv(acc.finalize(), dir / (stem + "_mean.csv"));
    write_text(dir / (stem + ".gp"),
               gp_preamble(stem) +
               "set xlabel 't'\nset ylabel 'expectation'\n"
               "plot '" + stem + "_mean.csv' using 1:2 with lines title 'E u', \\\n"
               "     '" + stem + "_mean.csv' using 1:4 with lines title 'E v'\n");
}

void emit_figure_3(const FigureConfig& fc, std::uint64_t seed, const fs::path& dir) {
    const std::vector<double> terminal{fc.solver.t_end};
    std::vector<State> points(fc.n_paths);
    run_paths(
        fc.n_paths,
        [&](std::size_t i) {
            NoiseStream stream(seed, i);
            return sampled_states(fc.params, fc.init, fc.solver, stream, terminal).front();
        },
        [&](std::size_t i, State&& s) { points[i] = s; });
    write_points_csv(points, dir / "fig3_points.csv");
    write_text(dir / "fig3.gp",
               gp_preamble("fig3") +
               "set xlabel 'u'\nset ylabel 'v'\n"
               "plot 'fig3_points.csv' using 1:2 with dots title 'terminal states'\n");
}

void emit_figure_5(const FigureConfig& fc, std::uint64_t seed, const fs::path& dir) {
    NoiseStream stream(seed, 0);
    const Trajectory traj = simulate_path(fc.params, fc.init, fc.solver, stream, {seed, 0});
    const Series au = time_average(traj, obs_u);
    const Series av = time_average(traj, obs_v);
    Csv csv(dir / "fig5_avg.csv");
    std::fprintf(csv.f, "t,avg_u,avg_v\n");
    for (std::size_t i = 0; i < au.times.size(); ++i)
        std::fprintf(csv.f, "%.17g,%.17g,%.17g\n", au.times[i], au.values[i], av.values[i]);
    write_text(dir / "fig5.gp",
               gp_preamble("fig5") +
               "set xlabel 't'\nset ylabel 'running average'\n"
               "plot 'fig5_avg.csv' using 1:2 with lines title '(1/t) int u', \\\n"
               "     'fig5_avg.csv' using 1:3 with lines title '(1/t) int v'\n");
}

void emit_figure_6(const FigureConfig& fc, std::uint64_t seed, const fs::path& dir) {
    const Rect rect{0.5, 30.0, 0.1, 20.0};
    const std::vector<double> ts = stats_grid(fc.solver);
    const State inits[2] = {{2.0, 1.0}, {3.0, 4.0}};
    std::vector<std::vector<double>> prob(2);
    for (int k = 0; k < 2; ++k) {
        OccupancyAccumulator acc(rect, ts);
        run_paths(
            fc.n_paths,
            [&](std::size_t i) {
                // disjoint stream indices for the two initial values
                NoiseStream stream(seed, i + k * fc.n_paths);
                return sampled_states(fc.params, inits[k], fc.solver, stream, ts);
            },
            [&](std::size_t, std::vector<State>&& states) {
                acc.add(Trajectory{ts, std::move(states)});
            });
        prob[k] = acc.finalize().prob;
    }
    Csv csv(dir / "fig6_occupancy.csv");
    std::fprintf(csv.f, "t,q_init_2_1,q_init_3_4\n");
    for (std::size_t i = 0; i < ts.size(); ++i)
        std::fprintf(csv.f, "%.17g,%.17g,%.17g\n", ts[i], prob[0][i], prob[1][i]);
    write_text(dir / "fig6.gp",
               gp_preamble("fig6") +
               "set xlabel 't'\nset ylabel 'P((u,v) in A)'\nset yrange [0:1.05]\n"
               "plot 'fig6_occupancy.csv' using 1:2 with lines title 'init (2,1)', \\\n"
               "     'fig6_occupancy.csv' using 1:3 with lines title 'init (3,4)'\n");
}

int cmd_figure(int which, const CommonOpts& o) {
    FigureConfig fc = figure_defaults(which);
    std::uint64_t seed = 20140925;
    std::string outputs = ".";
    if (!o.config_path.empty()) {
        const RunConfig cfg = load_config(o);
        fc.params = cfg.params;
        seed = cfg.master_seed;
        outputs = cfg.outputs;
    }
    if (o.seed) seed = *o.seed;
    if (o.out) outputs = *o.out;
    if (o.paths) fc.n_paths = *o.paths;
    if (o.dt) fc.solver.dt = *o.dt;
    if (o.t_end) fc.solver.t_end = *o.t_end;
    if (o.scheme) fc.solver.scheme = detail::parse_scheme(*o.scheme);
    try {
        fc.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("figure: ") + e.what());
    }
    const fs::path dir(outputs);
    fs::create_directories(dir);
    switch (which) {
        case 2: case 7: emit_path_figure(which, fc, seed, dir); break;
        case 3: emit_figure_3(fc, seed, dir); break;
        case 4: case 8: emit_mean_figure(which, fc, seed, dir); break;
        case 5: emit_figure_5(fc, seed, dir); break;
        case 6: emit_figure_6(fc, seed, dir); break;
        default: throw ConfigError("figure: --which must be in 2..8");
    }
    std::printf("wrote fig%d data and gnuplot script to %s\n", which, outputs.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// convergence study: strong error against the exact geometric Brownian motion
// (rho = f = 0 makes v autonomous with known solution).

int cmd_convergence(const CommonOpts& o) {
    const std::size_t n_paths = o.paths.value_or(200);
    const std::uint64_t seed = o.seed.value_or(20140925);
    const std::string outputs = o.out.value_or(".");
    const double h = 1.0, sigma = 0.5, v0 = 1.0;
    const ModelParams p{0.0, 1.0, 1.0, 1.0, 0.0, h, sigma};

    Csv csv(fs::path(outputs) / "convergence.csv");
    std::fprintf(csv.f, "scheme,dt,mean_abs_error\n");
    for (Scheme scheme : {Scheme::EulerMaruyama, Scheme::Milstein, Scheme::StrongTaylor15}) {
        std::vector<double> log_dt, log_err;
        for (int k = 4; k <= 10; ++k) {
            const double dt = std::ldexp(1.0, -k);
            const auto n = static_cast<std::size_t>(std::ldexp(1.0, k));
            double err_sum = 0.0;
            for (std::size_t path = 0; path < n_paths; ++path) {
                SolverConfig cfg{scheme, dt, 1.0, ClampPolicy::ClampToZero};
                NoiseStream s1(seed + k, path), s2(seed + k, path);
                const Trajectory traj = simulate_path(p, {0.0, v0}, cfg, s1);
                double w = 0.0;
                for (std::size_t i = 0; i < n; ++i) w += s2.next(dt).dW;
                const double exact = v0 * std::exp((-h - 0.5 * sigma * sigma) + sigma * w);
                err_sum += std::abs(traj.states.back().v - exact);
            }
            const double err = err_sum / static_cast<double>(n_paths);
            std::fprintf(csv.f, "%s,%.17g,%.17g\n", to_string(scheme), dt, err);
            log_dt.push_back(std::log(dt));
            log_err.push_back(std::log(err));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(log_dt.size());
        for (std::size_t i = 0; i < log_dt.size(); ++i) {
            sx += log_dt[i]; sy += log_err[i];
            sxx += log_dt[i] * log_dt[i]; sxy += log_dt[i] * log_err[i];
        }
        const double order = (sxy - sx * sy / m) / (sxx - sx * sx / m);
        std::printf("%s: fitted strong order %.3f\n", to_string(scheme), order);
    }
    std::printf("wrote %s\n", (fs::path(outputs) / "convergence.csv").string().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic two-age-class forest model: simulation and analysis"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CommonOpts sim_o, ens_o, cls_o, swp_o, fig_o, cnv_o;
    std::string axis1, axis2;
    int which = 0;

    add_common(app.add_subcommand("simulate", "integrate one path, write trajectory.csv"),
               sim_o, true);
    add_common(app.add_subcommand("ensemble", "per-time mean/se over paths, write ensemble.csv"),
               ens_o, true);
    add_common(app.add_subcommand("classify", "print the regime report as JSON (no simulation)"),
               cls_o, true);
    auto* swp = app.add_subcommand("sweep", "classify over a 2-D parameter grid, write sweep.csv");
    add_common(swp, swp_o, true);
    swp->add_option("--axis1", axis1, "first axis, name:min:max:steps (name in {h, sigma})")
        ->required();
    swp->add_option("--axis2", axis2, "second axis, name:min:max:steps")->required();
    auto* fig = app.add_subcommand("figure", "emit the data and gnuplot script for one figure");
    fig->add_option("--which", which, "figure number (2..8)")->required();
    add_common(fig, fig_o, false);
    add_common(app.add_subcommand("convergence", "strong-order study on the exact GBM reduction"),
               cnv_o, false);

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("simulate")) return cmd_simulate(sim_o);
        if (app.got_subcommand("ensemble")) return cmd_ensemble(ens_o);
        if (app.got_subcommand("classify")) return cmd_classify(cls_o);
        if (app.got_subcommand("sweep")) return cmd_sweep(swp_o, axis1, axis2);
        if (app.got_subcommand("figure")) return cmd_figure(which, fig_o);
        if (app.got_subcommand("convergence")) return cmd_convergence(cnv_o);
        std::cerr << app.help();
        return kExitConfig;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericAbort& e) {
        std::cerr << "error: numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const PathRejected& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
