#pragma once

#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace charfem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

using TimeVectorFunction = std::function<Point(const Point&, double)>;

namespace detail {

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.prune([](Eigen::Index, Eigen::Index, double v) { return std::abs(v) > 1e-300; });
    m.makeCompressed();
    return m;
}

} // namespace detail

/// Mass matrix of the velocity (block diagonal, both components) or pressure space.
inline SparseMatrix assemble_mass(const FESpace& space, Role role = Role::velocity) {
    const auto& mesh = space.mesh();
    const auto& rule = exact_rule();
    Triplets t;
    if (role == Role::pressure) {
        for (int k = 0; k < mesh.num_triangles(); ++k) {
            const auto& d = space.pressure_dofs(k);
            const double a = mesh.geometry(k).area / 12.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) t.emplace_back(d[i], d[j], i == j ? 2.0 * a : a);
        }
        return detail::from_triplets(space.num_pressure_dofs(), space.num_pressure_dofs(), t);
    }
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();
    LocalValues phi;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        double m[max_local_velocity_dofs][max_local_velocity_dofs] = {};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            velocity_shape(space.pair(), rule.points[q], phi);
            const double w = g.area * rule.weights[q];
            for (int i = 0; i < nloc; ++i)
                for (int j = i; j < nloc; ++j) m[i][j] += w * phi[i] * phi[j];
        }
        for (int i = 0; i < nloc; ++i)
            for (int j = 0; j < i; ++j) m[i][j] = m[j][i];
        const auto d = space.velocity_dofs(k);
        for (int i = 0; i < nloc; ++i)
            for (int j = 0; j < nloc; ++j) {
                t.emplace_back(d[i], d[j], m[i][j]);
                t.emplace_back(n + d[i], n + d[j], m[i][j]);
            }
    }
    return detail::from_triplets(2 * n, 2 * n, t);
}

/// Vector Laplacian a(u, v) = nu (grad u, grad v).
inline SparseMatrix assemble_stiffness(const FESpace& space, double nu) {
    if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
    const auto& mesh = space.mesh();
    const auto& rule = exact_rule();
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();
    Triplets t;
    LocalGradients d;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        double a[max_local_velocity_dofs][max_local_velocity_dofs] = {};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            velocity_shape_grad(space.pair(), rule.points[q], g, d);
            const double w = nu * g.area * rule.weights[q];
            for (int i = 0; i < nloc; ++i)
                for (int j = i; j < nloc; ++j) a[i][j] += w * d[i].dot(d[j]);
        }
        for (int i = 0; i < nloc; ++i)
            for (int j = 0; j < i; ++j) a[i][j] = a[j][i];
        const auto dofs = space.velocity_dofs(k);
        for (int i = 0; i < nloc; ++i)
            for (int j = 0; j < nloc; ++j) {
                t.emplace_back(dofs[i], dofs[j], a[i][j]);
                t.emplace_back(n + dofs[i], n + dofs[j], a[i][j]);
            }
    }
    return detail::from_triplets(2 * n, 2 * n, t);
}

/// B with B_{qj} = b(φ_j, ψ_q) = -(div φ_j, ψ_q).
inline SparseMatrix assemble_divergence(const FESpace& space) {
    const auto& mesh = space.mesh();
    const auto& rule = exact_rule();
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();
    Triplets t;
    LocalGradients d;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        double bx[3][max_local_velocity_dofs] = {}, by[3][max_local_velocity_dofs] = {};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& l = rule.points[q];
            velocity_shape_grad(space.pair(), l, g, d);
            const double w = g.area * rule.weights[q];
            for (int p = 0; p < 3; ++p)
                for (int j = 0; j < nloc; ++j) {
                    bx[p][j] -= w * l[p] * d[j].x();
                    by[p][j] -= w * l[p] * d[j].y();
                }
        }
        const auto dofs = space.velocity_dofs(k);
        const auto& pd = space.pressure_dofs(k);
        for (int p = 0; p < 3; ++p)
            for (int j = 0; j < nloc; ++j) {
                t.emplace_back(pd[p], dofs[j], bx[p][j]);
                t.emplace_back(pd[p], n + dofs[j], by[p][j]);
            }
    }
    return detail::from_triplets(space.num_pressure_dofs(), 2 * n, t);
}

/// Load vector (f(., t), φ_i) by the degree-8 rule.
inline Eigen::VectorXd assemble_load(const FESpace& space, const TimeVectorFunction& f, double t) {
    const auto& mesh = space.mesh();
    const auto& rule = exact_rule();
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * n);
    LocalValues phi;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        const auto dofs = space.velocity_dofs(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& l = rule.points[q];
            const Point v = g.area * rule.weights[q] * f(g.point(l), t);
            velocity_shape(space.pair(), l, phi);
            for (int i = 0; i < nloc; ++i) {
                r[dofs[i]] += v.x() * phi[i];
                r[n + dofs[i]] += v.y() * phi[i];
            }
        }
    }
    return r;
}

/// Nodal values of g on Dirichlet dofs, zero elsewhere.
inline Eigen::VectorXd boundary_values(const FESpace& space, const TimeVectorFunction& g, double t) {
    const int n = space.num_scalar_velocity_dofs();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        if (!space.is_dirichlet(i)) continue;
        const Point v = g(space.velocity_node(i), t);
        b[i] = v.x();
        b[n + i] = v.y();
    }
    return b;
}

/// Constrained saddle-point system
///
///     [ K   B^T  0 ] [u]   [f]
///     [ B   0    m ] [p] = [g]
///     [ 0   m^T  0 ] [λ]   [0]
///
/// over free velocity dofs, with Dirichlet dofs eliminated symmetrically and
/// m the integrals of the pressure basis. Factorized once at construction.
class SaddleSystem {
public:
    struct Solution {
        Field u;
        Field p;
        double relative_residual = 0.0;   ///< of the constrained system
        double divergence_residual = 0.0; ///< max_q |(B u)_q|
    };

    SaddleSystem(std::shared_ptr<const FESpace> space, const SparseMatrix& velocity_block,
                 const SparseMatrix& divergence)
        : space_(std::move(space)), divergence_(divergence) {
        const int nu = space_->num_velocity_dofs();
        const int np = space_->num_pressure_dofs();
        if (velocity_block.rows() != nu || velocity_block.cols() != nu || divergence.rows() != np ||
            divergence.cols() != nu)
            throw InvalidArgument("saddle system blocks do not match the space");
        free_index_.assign(nu, -1);
        for (int i = 0; i < nu; ++i)
            if (!space_->is_dirichlet(i)) free_index_[i] = num_free_++;
        const int size = num_free_ + np + 1;
        const Eigen::VectorXd m = pressure_basis_integrals(*space_);

        Triplets t, lift;
        for (int col = 0; col < velocity_block.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(velocity_block, col); it; ++it) {
                const int fr = free_index_[it.row()];
                if (fr < 0) continue;
                const int fc = free_index_[it.col()];
                if (fc >= 0)
                    t.emplace_back(fr, fc, it.value());
                else
                    lift.emplace_back(fr, it.col(), it.value());
            }
        for (int col = 0; col < divergence.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(divergence, col); it; ++it) {
                const int fc = free_index_[it.col()];
                const int pr = num_free_ + static_cast<int>(it.row());
                if (fc >= 0) {
                    t.emplace_back(pr, fc, it.value());
                    t.emplace_back(fc, pr, it.value());
                } else {
                    lift.emplace_back(pr, it.col(), it.value());
                }
            }
        for (int q = 0; q < np; ++q) {
            t.emplace_back(num_free_ + q, size - 1, m[q]);
            t.emplace_back(size - 1, num_free_ + q, m[q]);
        }
        matrix_ = detail::from_triplets(size, size, t);
        lift_ = detail::from_triplets(size, nu, lift);
        lu_.analyzePattern(matrix_);
        lu_.factorize(matrix_);
        if (lu_.info() != Eigen::Success)
            throw SolverFailure("saddle-point factorization failed: " + lu_.lastErrorMessage(),
                                std::numeric_limits<double>::infinity());
    }

    const FESpace& space() const noexcept { return *space_; }
    /// Constrained matrix over (free velocity, pressure, multiplier).
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    int num_free_velocity_dofs() const noexcept { return num_free_; }

    /// Solves with momentum right-hand side rhs_u (over all velocity dofs,
    /// boundary rows ignored), Dirichlet data taken from `boundary` on
    /// boundary dofs, and optional continuity right-hand side rhs_p.
    Solution solve(const Eigen::VectorXd& rhs_u, const Eigen::VectorXd& boundary,
                   const Eigen::VectorXd* rhs_p = nullptr, double tolerance = 1e-10) const {
        const int nu = space_->num_velocity_dofs();
        const int np = space_->num_pressure_dofs();
        if (rhs_u.size() != nu || boundary.size() != nu || (rhs_p && rhs_p->size() != np))
            throw InvalidArgument("right-hand side size mismatch");
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nu);
        for (int i = 0; i < nu; ++i)
            if (free_index_[i] < 0) g[i] = boundary[i];
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(matrix_.rows());
        for (int i = 0; i < nu; ++i)
            if (free_index_[i] >= 0) rhs[free_index_[i]] = rhs_u[i];
        if (rhs_p) rhs.segment(num_free_, np) = *rhs_p;
        rhs -= lift_ * g;

        Eigen::VectorXd x = lu_.solve(rhs);
        const double rhs_norm = rhs.norm();
        double res = (matrix_ * x - rhs).norm();
        if (res > 1e-14 * rhs_norm) { // one step of iterative refinement
            x += lu_.solve(rhs - matrix_ * x);
            res = (matrix_ * x - rhs).norm();
        }
        const double rel = rhs_norm > 0.0 ? res / rhs_norm : res;
        if (!std::isfinite(rel) || (rhs_norm > 0.0 ? rel > tolerance : res > 1e-300))
            throw SolverFailure("saddle-point solve residual " + std::to_string(rel) + " exceeds tolerance", rel);

        Solution s;
        s.u = Field::zero(space_, Role::velocity);
        s.p = Field::zero(space_, Role::pressure);
        for (int i = 0; i < nu; ++i) s.u.coeffs[i] = free_index_[i] >= 0 ? x[free_index_[i]] : g[i];
        s.p.coeffs = x.segment(num_free_, np);
        s.relative_residual = rel;
        s.divergence_residual = (divergence_ * s.u.coeffs).lpNorm<Eigen::Infinity>();
        return s;
    }

private:
    std::shared_ptr<const FESpace> space_;
    SparseMatrix divergence_;
    std::vector<int> free_index_;
    int num_free_ = 0;
    SparseMatrix matrix_;
    SparseMatrix lift_;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

/// Analytic input of a Stokes projection.
struct StokesData {
    VectorFunction velocity;
    std::function<Eigen::Matrix2d(const Point&)> velocity_gradient; ///< row i = grad of component i
    ScalarFunction pressure;
};

/// Stokes projection of an analytic pair (w, r) onto V_h x Q_h.
inline std::pair<Field, Field> stokes_projection(std::shared_ptr<const FESpace> space, const StokesData& data,
                                                 double nu) {
    const auto& mesh = space->mesh();
    const auto& rule = exact_rule();
    const int nloc = space->num_local_velocity_dofs();
    const int n = space->num_scalar_velocity_dofs();
    Eigen::VectorXd fu = Eigen::VectorXd::Zero(2 * n);
    Eigen::VectorXd fp = Eigen::VectorXd::Zero(space->num_pressure_dofs());
    LocalGradients d;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        const auto dofs = space->velocity_dofs(k);
        const auto& pd = space->pressure_dofs(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& l = rule.points[q];
            const Point x = g.point(l);
            const double w = g.area * rule.weights[q];
            const Eigen::Matrix2d gw = data.velocity_gradient ? data.velocity_gradient(x) : Eigen::Matrix2d::Zero();
            const double r = data.pressure ? data.pressure(x) : 0.0;
            velocity_shape_grad(space->pair(), l, g, d);
            for (int i = 0; i < nloc; ++i) {
                // a(w, φ) + b(φ, r) for φ = (φ_i, 0) and (0, φ_i)
                fu[dofs[i]] += w * (nu * gw.row(0).dot(d[i]) - r * d[i].x());
                fu[n + dofs[i]] += w * (nu * gw.row(1).dot(d[i]) - r * d[i].y());
            }
            const double div = gw.trace();
            for (int p = 0; p < 3; ++p) fp[pd[p]] -= w * l[p] * div;
        }
    }
    const SaddleSystem sys(space, assemble_stiffness(*space, nu), assemble_divergence(*space));
    auto s = sys.solve(fu, Eigen::VectorXd::Zero(2 * n), &fp);
    return {std::move(s.u), std::move(s.p)};
}

/// Stokes projection of a discrete pair.
inline std::pair<Field, Field> stokes_projection(const Field& w, const Field& r, double nu) {
    if (w.role != Role::velocity || r.role != Role::pressure) throw InvalidArgument("expected (velocity, pressure)");
    const auto& space = w.space;
    const SparseMatrix a = assemble_stiffness(*space, nu);
    const SparseMatrix b = assemble_divergence(*space);
    const Eigen::VectorXd fu = a * w.coeffs + SparseMatrix(b.transpose()) * r.coeffs;
    const Eigen::VectorXd fp = b * w.coeffs;
    const SaddleSystem sys(space, a, b);
    auto s = sys.solve(fu, Eigen::VectorXd::Zero(space->num_velocity_dofs()), &fp);
    return {std::move(s.u), std::move(s.p)};
}

} // namespace charfem
