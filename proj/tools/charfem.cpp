// charfem: command-line driver for runs, convergence studies and the cavity benchmark.
//
// Exit codes: 0 success, 2 invalid configuration, 3 step rejected, 4 solver failure.

#include "charfem/charfem.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace charfem;

namespace {

constexpr int exit_invalid = 2;
constexpr int exit_rejected = 3;
constexpr int exit_solver = 4;

struct Global {
    std::optional<bool> strict_cfl;
    bool reproducible = true;
    int threads = 1;
};

int exit_code(const RunHistory& h) {
    if (h.completed()) return 0;
    std::cerr << "run stopped at step " << h.failure->step << " (" << to_string(h.failure->kind)
              << "): " << h.failure->message << '\n';
    return h.failure->kind == RunFailure::Kind::step_rejected ? exit_rejected : exit_solver;
}

std::string e6(double v) { return detail::format_e6(v); }

int run_config(const Global& g, const std::string& config_path, const std::string& out_override) {
    std::ifstream in(config_path);
    if (!in) throw InvalidArgument("cannot open config '" + config_path + "'");
    auto file = parse_run_config(in);
    auto& c = file.config;
    if (g.strict_cfl) c.strict_cfl = g.strict_cfl;
    c.assembly.reproducible = g.reproducible;
    if (g.threads > 1) c.assembly.threads = g.threads;
    const std::filesystem::path out(out_override.empty() ? file.out : out_override);

    std::shared_ptr<const Mesh> mesh;
    if (c.mesh_file.empty()) {
        mesh = std::make_shared<const Mesh>(generate_structured_unit_square(c.n, c.pattern));
    } else {
        std::ifstream mf(c.mesh_file);
        if (!mf) throw InvalidArgument("cannot open mesh '" + c.mesh_file + "'");
        mesh = std::make_shared<const Mesh>(read_mesh(mf));
    }
    const Problem problem = make_problem(c.problem, c.nu);
    const Simulation sim(c, problem, mesh);
    std::optional<ErrorAccumulator> acc;
    if (problem.exact) acc.emplace(sim.space(), *problem.exact, c.dt);
    Field last_u, last_p;
    const auto history = sim.run([&](int n, double t, const Field& u, const Field* p) {
        if (acc) acc->observe(n, t, u, p);
        last_u = u;
        if (p) last_p = *p;
    });
    write_history_csv(out / "history.csv", history);
    if (last_p.space) export_vtk(out / "velocity.vtk", last_u, &last_p);
    std::cout << "steps " << history.records.size() - 1 << " of " << c.num_steps() << ", max |Bu|/|u| "
              << e6(history.max_divergence_ratio()) << '\n';
    if (acc && history.completed()) {
        const auto e = acc->result();
        std::cout << "E_H1_u " << e6(e.velocity_linf_h1) << "  E_L2_p " << e6(e.pressure_l2_l2) << "  E_L2inf_u "
                  << e6(e.velocity_linf_l2) << '\n';
    }
    std::cout << "wrote " << (out / "history.csv").string() << '\n';
    return exit_code(history);
}

struct ConvergeArgs {
    std::string problem = "example1";
    std::string scheme = "lgllv";
    std::string pair = "p2p1";
    std::string pattern = "crisscross";
    std::string dt_rule = "h2";
    double nu = 1e-2;
    double final_time = 1.0;
    std::vector<int> n_list;
    bool full = false;
    std::string out = "out";
};

int converge(const Global& g, const ConvergeArgs& a) {
    ConvergenceOptions o;
    o.problem = a.problem;
    o.scheme = parse_scheme(a.scheme);
    o.pair = parse_pair(a.pair);
    o.pattern = parse_pattern(a.pattern);
    o.nu = a.nu;
    o.final_time = a.final_time;
    o.dt_rule = parse_dt_rule(a.dt_rule);
    o.n_list = a.n_list.empty() ? default_n_list(o.dt_rule, a.full) : a.n_list;
    o.strict_cfl = g.strict_cfl;
    o.threads = g.threads;
    o.reproducible = g.reproducible;
    const auto series = run_convergence_study(o, [](const ErrorRow& r) {
        std::cout << "N=" << r.n << " dt=" << e6(r.dt) << " E_H1_u=" << e6(r.errors.velocity_linf_h1)
                  << " E_L2_p=" << e6(r.errors.pressure_l2_l2) << " E_L2inf_u=" << e6(r.errors.velocity_linf_l2)
                  << " max_dt_grad=" << e6(r.max_dt_times_grad) << " " << r.status << '\n'
                  << std::flush;
    });
    const auto path = std::filesystem::path(a.out) / "errors.csv";
    write_error_csv(path, series);
    write_error_csv(std::cout, series);
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

struct CavityArgs {
    std::string scheme = "lgllv";
    std::string pair = "p2p1";
    std::string pattern = "crisscross";
    double nu = 1e-4;
    int n = 16;
    double dt = 0.0;
    double final_time = 8.0;
    int snapshots = 8;
    std::string out = "out";
};

int cavity(const Global& g, const CavityArgs& a) {
    CavityOptions o;
    o.scheme = parse_scheme(a.scheme);
    o.pair = parse_pair(a.pair);
    o.pattern = parse_pattern(a.pattern);
    o.nu = a.nu;
    o.n = a.n;
    o.dt = a.dt;
    o.final_time = a.final_time;
    o.snapshots = a.snapshots;
    o.strict_cfl = g.strict_cfl;
    o.assembly.threads = g.threads;
    o.assembly.reproducible = g.reproducible;
    o.out = a.out;
    const auto r = run_cavity(o);
    std::cout << "t          max |u_h| on (0.3,0.7)x(0.8,1)\n";
    for (std::size_t i = 0; i < r.snapshot_times.size(); ++i)
        std::cout << e6(r.snapshot_times[i]) << "  " << e6(r.oscillation[i]) << '\n';
    std::cout << "wrote " << a.out << '\n';
    return exit_code(r.history);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrange-Galerkin Navier-Stokes solver (LG-LLV and LG')"};
    app.require_subcommand(1);
    Global g;
    bool strict = false, loose = false;
    app.add_flag("--strict-cfl", strict, "reject steps with dt*|w|_1,inf > 1/4 (default: on for lgllv)");
    app.add_flag("--no-strict-cfl", loose, "record but accept inadmissible steps");
    app.add_flag("--reproducible,!--no-reproducible", g.reproducible,
                 "fixed summation order in threaded assembly (default: on)");
    app.add_option("--threads", g.threads, "assembly threads (run, cavity) or concurrent runs (converge)")
        ->check(CLI::PositiveNumber);

    std::string config, run_out;
    auto* run = app.add_subcommand("run", "run one configuration file");
    run->add_option("--config", config, "key = value file")->required();
    run->add_option("--out", run_out, "output directory (overrides the file)");

    ConvergeArgs ca;
    auto* conv = app.add_subcommand("converge", "convergence study with dt = h^2 or h^3");
    conv->add_option("--problem", ca.problem, "problem with a closed-form solution")->capture_default_str();
    conv->add_option("--scheme", ca.scheme, "lgllv or lgq")->capture_default_str();
    conv->add_option("--pair", ca.pair, "p2p1 or mini")->capture_default_str();
    conv->add_option("--pattern", ca.pattern, "right or crisscross")->capture_default_str();
    conv->add_option("--nu", ca.nu, "viscosity")->capture_default_str();
    conv->add_option("--T", ca.final_time, "final time")->capture_default_str();
    conv->add_option("--dt-rule", ca.dt_rule, "h2 or h3")->capture_default_str();
    conv->add_option("--n", ca.n_list, "mesh divisions, e.g. 8,12,16")->delimiter(',');
    conv->add_flag("--full", ca.full, "large default lists (up to N = 64)");
    conv->add_option("--out", ca.out, "output directory")->capture_default_str();

    CavityArgs cv;
    auto* cav = app.add_subcommand("cavity", "regularized driven cavity");
    cav->add_option("--scheme", cv.scheme, "lgllv or lgq")->capture_default_str();
    cav->add_option("--pair", cv.pair, "p2p1 or mini")->capture_default_str();
    cav->add_option("--pattern", cv.pattern, "right or crisscross")->capture_default_str();
    cav->add_option("--nu", cv.nu, "viscosity")->capture_default_str();
    cav->add_option("--n", cv.n, "mesh divisions")->capture_default_str();
    cav->add_option("--dt", cv.dt, "time step")->required();
    cav->add_option("--T", cv.final_time, "final time")->capture_default_str();
    cav->add_option("--snapshots", cv.snapshots, "subdomain snapshots after t = 0")->capture_default_str();
    cav->add_option("--out", cv.out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_invalid;
    }
    if (strict && loose) {
        std::cerr << "--strict-cfl and --no-strict-cfl are exclusive\n";
        return exit_invalid;
    }
    if (strict) g.strict_cfl = true;
    if (loose) g.strict_cfl = false;

    try {
        if (*run) return run_config(g, config, run_out);
        if (*conv) return converge(g, ca);
        return cavity(g, cv);
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return exit_invalid;
    } catch (const StepRejected& e) {
        std::cerr << "step rejected: " << e.what() << '\n';
        return exit_rejected;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_solver;
    }
}
