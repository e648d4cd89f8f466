#pragma once

#include "charfem/analysis.hpp"
#include "charfem/errors.hpp"
#include "charfem/io.hpp"
#include "charfem/mesh.hpp"
#include "charfem/problems.hpp"
#include "charfem/scheme.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <string>
#include <vector>

namespace charfem {

enum class DtRule { h2, h3 };

inline DtRule parse_dt_rule(const std::string& v) {
    if (v == "h2") return DtRule::h2;
    if (v == "h3") return DtRule::h3;
    throw InvalidArgument("unknown dt rule '" + v + "' (expected h2 or h3)");
}

inline std::vector<int> default_n_list(DtRule rule, bool full) {
    if (full) return rule == DtRule::h2 ? std::vector<int>{16, 23, 32, 45, 64} : std::vector<int>{16, 19, 23, 27, 32};
    return rule == DtRule::h2 ? std::vector<int>{8, 12, 16, 24, 32} : std::vector<int>{8, 10, 12, 16};
}

struct ConvergenceOptions {
    std::string problem = "example1";
    SchemeKind scheme = SchemeKind::lgllv;
    ElementPair pair = ElementPair::taylor_hood;
    MeshPattern pattern = MeshPattern::crisscross;
    double nu = 1e-2;
    double final_time = 1.0;
    DtRule dt_rule = DtRule::h2;
    std::vector<int> n_list;
    std::optional<bool> strict_cfl;
    int threads = 1; ///< concurrent runs; each run assembles single-threaded
    bool reproducible = true;
};

/// Runs and scores one row of a convergence study.
inline ErrorRow run_convergence_row(const ConvergenceOptions& o, int n) {
    const auto start = std::chrono::steady_clock::now();
    ErrorRow row;
    row.n = n;
    row.h = 1.0 / n;
    row.dt = o.dt_rule == DtRule::h2 ? row.h * row.h : row.h * row.h * row.h;
    RunConfig c;
    c.nu = o.nu;
    c.final_time = o.final_time;
    c.dt = row.dt;
    c.scheme = o.scheme;
    c.pair = o.pair;
    c.n = n;
    c.pattern = o.pattern;
    c.problem = o.problem;
    c.strict_cfl = o.strict_cfl;
    c.assembly.reproducible = o.reproducible;
    const Problem problem = make_problem(o.problem, o.nu);
    if (!problem.exact) throw InvalidArgument("problem '" + o.problem + "' has no exact solution");
    const auto mesh = std::make_shared<const Mesh>(generate_structured_unit_square(n, o.pattern));
    Simulation sim(c, problem, mesh);
    ErrorAccumulator acc(sim.space(), *problem.exact, c.dt);
    const auto history = sim.run([&](int step, double t, const Field& u, const Field* p) { acc.observe(step, t, u, p); });
    row.max_divergence_ratio = history.max_divergence_ratio();
    for (const auto& r : history.records) row.max_dt_times_grad = std::max(row.max_dt_times_grad, r.cfl.dt_times_grad);
    if (history.failure) {
        row.status = to_string(history.failure->kind) + "@" + std::to_string(history.failure->step);
        const double nan = std::nan("");
        row.errors = {nan, nan, nan};
    } else {
        row.errors = acc.result();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

/// Sweeps the mesh list with Δt = h² or h³ (h = 1/N). Rows come back in list order.
inline ErrorSeries run_convergence_study(const ConvergenceOptions& o,
                                         const std::function<void(const ErrorRow&)>& progress = {}) {
    if (o.n_list.empty()) throw InvalidArgument("N list is empty");
    for (int n : o.n_list)
        if (n < 2) throw InvalidArgument("N must be at least 2");
    ErrorSeries series;
    series.rows.resize(o.n_list.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, o.threads));
    for (std::size_t first = 0; first < o.n_list.size(); first += width) {
        const std::size_t last = std::min(o.n_list.size(), first + width);
        std::vector<std::future<ErrorRow>> jobs;
        for (std::size_t i = first; i < last; ++i)
            jobs.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                      [&o, n = o.n_list[i]] { return run_convergence_row(o, n); }));
        for (std::size_t i = first; i < last; ++i) {
            series.rows[i] = jobs[i - first].get();
            if (progress) progress(series.rows[i]);
        }
    }
    return series;
}

/// Regular sample grid over a rectangle, evaluated by point location.
struct SubdomainSamples {
    std::vector<Point> points;
    std::vector<Point> velocity;

    double max_speed() const {
        double m = 0.0;
        for (const auto& v : velocity) m = std::max(m, v.norm());
        return m;
    }
};

inline SubdomainSamples sample_velocity(const Field& u, const Point& lo, const Point& hi, int nx, int ny) {
    if (nx < 2 || ny < 2) throw InvalidArgument("sample grid needs at least 2 points per direction");
    const auto& mesh = u.space->mesh();
    Locator locator(mesh);
    SubdomainSamples s;
    int hint = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Point x(lo.x() + (hi.x() - lo.x()) * i / (nx - 1), lo.y() + (hi.y() - lo.y()) * j / (ny - 1));
            const auto loc = locator.locate(x, hint);
            hint = loc.element;
            s.points.push_back(x);
            s.velocity.push_back(u.velocity(loc.element, loc.barycentric));
        }
    return s;
}

inline void write_samples_csv(const std::filesystem::path& path, const SubdomainSamples& s) {
    auto out = detail::open_for_writing(path);
    out << "x1,x2,u1,u2\n";
    for (std::size_t i = 0; i < s.points.size(); ++i)
        out << detail::format_e6(s.points[i].x()) << ',' << detail::format_e6(s.points[i].y()) << ','
            << detail::format_e6(s.velocity[i].x()) << ',' << detail::format_e6(s.velocity[i].y()) << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

struct CavityOptions {
    SchemeKind scheme = SchemeKind::lgllv;
    ElementPair pair = ElementPair::taylor_hood;
    MeshPattern pattern = MeshPattern::crisscross;
    double nu = 1e-4;
    int n = 16;
    double dt = 0.0; ///< required
    double final_time = 8.0;
    std::optional<bool> strict_cfl;
    AssemblyOptions assembly;
    int snapshots = 8;     ///< subdomain snapshots spread evenly over (0, T]
    std::string out;       ///< output directory; nothing is written when empty
};

struct CavityResult {
    RunHistory history;
    std::vector<double> snapshot_times;
    std::vector<SubdomainSamples> snapshots; ///< entry 0 is t = 0
    std::vector<double> oscillation;         ///< max |u_h| over the subdomain per snapshot
    Field final_velocity;
    Field final_pressure;
};

inline const Point cavity_window_lo{0.3, 0.8};
inline const Point cavity_window_hi{0.7, 1.0};

/// Regularized cavity run with subdomain snapshots and a final VTK export.
inline CavityResult run_cavity(const CavityOptions& o) {
    if (o.snapshots < 1) throw InvalidArgument("need at least one snapshot");
    RunConfig c;
    c.nu = o.nu;
    c.final_time = o.final_time;
    c.dt = o.dt;
    c.scheme = o.scheme;
    c.pair = o.pair;
    c.n = o.n;
    c.pattern = o.pattern;
    c.problem = "cavity";
    c.strict_cfl = o.strict_cfl;
    c.assembly = o.assembly;
    c.validate();
    const auto mesh = std::make_shared<const Mesh>(generate_structured_unit_square(o.n, o.pattern));
    Simulation sim(c, make_cavity(), mesh);
    const int steps = c.num_steps();
    const std::filesystem::path dir(o.out);

    CavityResult res;
    auto snapshot = [&](double t, const Field& u) {
        auto s = sample_velocity(u, cavity_window_lo, cavity_window_hi, 41, 21);
        res.oscillation.push_back(s.max_speed());
        res.snapshot_times.push_back(t);
        if (!o.out.empty())
            write_samples_csv(dir / ("window_" + std::to_string(res.snapshots.size()) + ".csv"), s);
        res.snapshots.push_back(std::move(s));
    };
    int next = 1;
    res.history = sim.run([&](int n, double t, const Field& u, const Field* p) {
        if (n == 0) {
            snapshot(t, u);
            return;
        }
        if (n * static_cast<long>(o.snapshots) >= static_cast<long>(next) * steps || n == steps) {
            snapshot(t, u);
            while (n * static_cast<long>(o.snapshots) >= static_cast<long>(next) * steps) ++next;
        }
        res.final_velocity = u;
        res.final_pressure = *p;
    });
    if (!o.out.empty()) {
        write_history_csv(dir / "history.csv", res.history);
        if (res.final_velocity.space) export_vtk(dir / "velocity.vtk", res.final_velocity, &res.final_pressure);
        std::ofstream idx(dir / "window_times.csv");
        idx << "index,t,max_speed\n";
        for (std::size_t i = 0; i < res.snapshot_times.size(); ++i)
            idx << i << ',' << detail::format_e6(res.snapshot_times[i]) << ',' << detail::format_e6(res.oscillation[i])
                << '\n';
    }
    return res;
}

} // namespace charfem
