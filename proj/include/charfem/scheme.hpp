#pragma once

#include "charfem/analysis.hpp"
#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/mesh.hpp"
#include "charfem/system.hpp"
#include "charfem/transport.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace charfem {

enum class SchemeKind {
    lgllv, ///< exact composite term with the P1-linearized foot map
    lgq,   ///< seven-point quadrature with the full-velocity foot map
};

inline std::string to_string(SchemeKind s) { return s == SchemeKind::lgllv ? "lgllv" : "lgq"; }

/// Data of an incompressible Navier–Stokes problem on the mesh domain.
struct Problem {
    std::string name;
    TimeVectorFunction force;    ///< f(x, t)
    TimeVectorFunction boundary; ///< Dirichlet data g(x, t)
    VectorFunction initial_velocity;
    std::function<Eigen::Matrix2d(const Point&)> initial_velocity_gradient;
    std::optional<ExactSolution> exact;
};

struct RunConfig {
    double nu = 1e-2;
    double final_time = 1.0;
    double dt = 0.0;
    SchemeKind scheme = SchemeKind::lgllv;
    ElementPair pair = ElementPair::taylor_hood;
    int n = 8;
    MeshPattern pattern = MeshPattern::crisscross;
    std::string mesh_file; ///< overrides n/pattern when set
    std::string problem = "example1";
    std::optional<bool> strict_cfl; ///< default: strict for lgllv, permissive for lgq
    double c0 = 1.0;
    bool capture_fields = false;
    AssemblyOptions assembly;

    bool strict() const { return strict_cfl.value_or(scheme == SchemeKind::lgllv); }

    /// N_T = floor(T / dt), tolerant of rounding in T / dt.
    int num_steps() const { return static_cast<int>(std::floor(final_time / dt * (1.0 + 1e-12))); }

    void validate() const {
        if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
        if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
        if (!(final_time > 0.0)) throw InvalidArgument("T must be positive");
        if (num_steps() < 1) throw InvalidArgument("T must be at least dt (N_T = floor(T/dt) >= 1)");
        if (mesh_file.empty() && n < 2) throw InvalidArgument("N must be at least 2");
    }
};

struct StepResult {
    Field u;
    Field p;
    CflReport cfl;
    double divergence_residual = 0.0; ///< max_q |(B u)_q|
    double solve_residual = 0.0;
};

struct StepRecord {
    int n = 0;
    double t = 0.0;
    CflReport cfl;
    double velocity_l2 = 0.0;
    double velocity_h1 = 0.0;
    double pressure_l2 = 0.0;
    double divergence_ratio = 0.0; ///< ||B u_h^n||_max / ||u_h^n||_max
    double wall_seconds = 0.0;
};

struct RunFailure {
    enum class Kind { step_rejected, solver_failure, out_of_domain, geometry, diverged };
    Kind kind;
    int step;
    std::string message;
};

inline std::string to_string(RunFailure::Kind k) {
    switch (k) {
    case RunFailure::Kind::step_rejected: return "step_rejected";
    case RunFailure::Kind::solver_failure: return "solver_failure";
    case RunFailure::Kind::out_of_domain: return "out_of_domain";
    case RunFailure::Kind::geometry: return "geometry";
    case RunFailure::Kind::diverged: return "diverged";
    }
    return "unknown";
}

struct RunHistory {
    std::vector<StepRecord> records; ///< step 0 is the initial state
    std::vector<Field> velocity_snapshots;
    std::vector<Field> pressure_snapshots; ///< entry 0 is the projection pressure
    std::optional<RunFailure> failure;
    double dt = 0.0;

    bool completed() const { return !failure.has_value(); }

    /// Largest ratio ||B u_h^n||_max / ||u_h^n||_max over the recorded steps.
    double max_divergence_ratio() const {
        double r = 0.0;
        for (const auto& s : records)
            if (s.n > 0) r = std::max(r, s.divergence_ratio);
        return r;
    }
};

/// Observer called after initialization (n = 0, no pressure) and every step.
using StepObserver = std::function<void(int n, double t, const Field& u, const Field* p)>;

/// Time integration of one configuration on one mesh.
///
/// Builds the space and factorizes [M/dt + A, B^T; B, 0] once; each step only
/// assembles the composite term and the load.
class Simulation {
public:
    Simulation(const RunConfig& config, Problem problem, std::shared_ptr<const Mesh> mesh)
        : config_(config), problem_(std::move(problem)) {
        config_.validate();
        space_ = std::make_shared<const FESpace>(std::move(mesh), config_.pair);
        mass_ = assemble_mass(*space_);
        stiffness_ = assemble_stiffness(*space_, config_.nu);
        divergence_ = assemble_divergence(*space_);
        const SparseMatrix block = SparseMatrix(mass_ / config_.dt) + stiffness_;
        system_ = std::make_unique<SaddleSystem>(space_, block, divergence_);
    }

    const std::shared_ptr<const FESpace>& space() const noexcept { return space_; }
    const RunConfig& config() const noexcept { return config_; }
    const Problem& problem() const noexcept { return problem_; }
    const SparseMatrix& mass() const noexcept { return mass_; }
    const SparseMatrix& divergence() const noexcept { return divergence_; }

    /// u_h^0 = first component of the Stokes projection of (u^0, 0).
    Field initialize() const {
        if (!problem_.initial_velocity) return Field::zero(space_, Role::velocity);
        StokesData data{problem_.initial_velocity, problem_.initial_velocity_gradient, nullptr};
        auto [u, p] = stokes_projection(space_, data, config_.nu);
        return std::move(u);
    }

    StepResult step_lgllv(const Field& u_prev, double t_n) const {
        const P1Field w = p1_linearize(u_prev);
        const CflReport cfl = check_admissibility(w, config_.dt, space_->mesh().h_param(), config_.c0);
        if (config_.strict() && !cfl.jacobian_ok)
            throw StepRejected("foot map not admissible: dt*|w|_1,inf = " + std::to_string(cfl.dt_times_grad) +
                                   " > 1/4",
                               cfl);
        const Eigen::VectorXd transport = assemble_composite_exact(u_prev, w, config_.dt, config_.assembly);
        return finish_step(transport, t_n, cfl);
    }

    StepResult step_lgq(const Field& u_prev, double t_n) const {
        const CflReport cfl =
            check_admissibility(p1_linearize(u_prev), config_.dt, space_->mesh().h_param(), config_.c0);
        if (config_.strict() && !cfl.jacobian_ok)
            throw StepRejected("foot map not admissible: dt*|w|_1,inf = " + std::to_string(cfl.dt_times_grad) +
                                   " > 1/4",
                               cfl);
        const Eigen::VectorXd transport =
            assemble_composite_quadrature(u_prev, u_prev, config_.dt, seven_point_degree5(), config_.assembly);
        return finish_step(transport, t_n, cfl);
    }

    StepResult step(const Field& u_prev, double t_n) const {
        return config_.scheme == SchemeKind::lgllv ? step_lgllv(u_prev, t_n) : step_lgq(u_prev, t_n);
    }

    /// Runs n = 1..N_T. Failures end the run and are recorded in the history.
    RunHistory run(const StepObserver& observer = {}) const {
        using clock = std::chrono::steady_clock;
        RunHistory history;
        history.dt = config_.dt;
        const int steps = config_.num_steps();
        auto start = clock::now();
        Field u;
        try {
            u = initialize();
        } catch (const SolverFailure& e) {
            history.failure = RunFailure{RunFailure::Kind::solver_failure, 0, e.what()};
            return history;
        }
        u.time = 0.0;
        record(history, 0, 0.0, u, nullptr, CflReport{}, 0.0, start);
        if (observer) observer(0, 0.0, u, nullptr);
        for (int n = 1; n <= steps; ++n) {
            const double t = n * config_.dt;
            start = clock::now();
            try {
                auto s = step(u, t);
                if (!s.u.coeffs.allFinite() || !s.p.coeffs.allFinite()) {
                    history.failure = RunFailure{RunFailure::Kind::diverged, n, "non-finite solution"};
                    break;
                }
                s.u.time = s.p.time = t;
                record(history, n, t, s.u, &s.p, s.cfl, s.divergence_residual, start);
                if (observer) observer(n, t, s.u, &s.p);
                u = std::move(s.u);
            } catch (const StepRejected& e) {
                history.failure = RunFailure{RunFailure::Kind::step_rejected, n, e.what()};
                break;
            } catch (const SolverFailure& e) {
                history.failure = RunFailure{RunFailure::Kind::solver_failure, n, e.what()};
                break;
            } catch (const OutOfDomain& e) {
                history.failure = RunFailure{RunFailure::Kind::out_of_domain, n, e.what()};
                break;
            } catch (const GeometryConsistency& e) {
                history.failure = RunFailure{RunFailure::Kind::geometry, n, e.what()};
                break;
            }
        }
        return history;
    }

private:
    StepResult finish_step(const Eigen::VectorXd& transport, double t_n, const CflReport& cfl) const {
        Eigen::VectorXd rhs = transport / config_.dt;
        if (problem_.force) rhs += assemble_load(*space_, problem_.force, t_n);
        const Eigen::VectorXd g = problem_.boundary ? boundary_values(*space_, problem_.boundary, t_n)
                                                    : Eigen::VectorXd::Zero(space_->num_velocity_dofs());
        auto s = system_->solve(rhs, g);
        StepResult r;
        r.cfl = cfl;
        r.solve_residual = s.relative_residual;
        r.divergence_residual = s.divergence_residual;
        r.u = std::move(s.u);
        r.p = std::move(s.p);
        return r;
    }

    void record(RunHistory& h, int n, double t, const Field& u, const Field* p, const CflReport& cfl,
                double divergence, std::chrono::steady_clock::time_point start) const {
        StepRecord s;
        s.n = n;
        s.t = t;
        s.cfl = cfl;
        s.velocity_l2 = field_norm(u, NormKind::L2);
        s.velocity_h1 = field_norm(u, NormKind::H1semi);
        s.pressure_l2 = p ? field_norm(*p, NormKind::L2) : 0.0;
        const double umax = u.coeffs.lpNorm<Eigen::Infinity>();
        s.divergence_ratio = umax > 0.0 ? divergence / umax : divergence;
        s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        h.records.push_back(s);
        if (config_.capture_fields) {
            h.velocity_snapshots.push_back(u);
            h.pressure_snapshots.push_back(p ? *p : Field::zero(space_, Role::pressure));
        }
    }

    RunConfig config_;
    Problem problem_;
    std::shared_ptr<const FESpace> space_;
    SparseMatrix mass_, stiffness_, divergence_;
    std::unique_ptr<SaddleSystem> system_;
};

/// Relative errors of a history with captured snapshots.
inline RelativeErrors relative_error_series(const RunHistory& history, const ExactSolution& exact) {
    if (history.velocity_snapshots.empty()) throw InvalidArgument("history holds no field snapshots");
    const auto& space = history.velocity_snapshots.front().space;
    ErrorAccumulator acc(space, exact, history.dt);
    for (std::size_t i = 0; i < history.velocity_snapshots.size(); ++i) {
        const auto& u = history.velocity_snapshots[i];
        acc.observe(static_cast<int>(i), u.time, u, i == 0 ? nullptr : &history.pressure_snapshots[i]);
    }
    return acc.result();
}

} // namespace charfem
