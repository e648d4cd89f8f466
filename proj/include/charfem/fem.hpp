#pragma once

#include "charfem/errors.hpp"
#include "charfem/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace charfem {

/// Mixed velocity/pressure pair.
enum class ElementPair {
    taylor_hood, ///< P2 velocity, P1 pressure
    mini,        ///< P1 + cubic bubble velocity, P1 pressure
};

enum class Role { velocity, pressure };

inline std::string to_string(ElementPair pair) { return pair == ElementPair::taylor_hood ? "p2p1" : "mini"; }

constexpr int max_local_velocity_dofs = 6;
using LocalValues = std::array<double, max_local_velocity_dofs>;
using LocalGradients = std::array<Point, max_local_velocity_dofs>;

constexpr int local_velocity_dofs(ElementPair pair) noexcept { return pair == ElementPair::taylor_hood ? 6 : 4; }
constexpr int local_pressure_dofs() noexcept { return 3; }

/// Polynomial degree of one velocity component.
constexpr int velocity_degree(ElementPair pair) noexcept { return pair == ElementPair::taylor_hood ? 2 : 3; }

// Unchecked kernels used in assembly loops. Local P2 dof 3+e sits on the
// midpoint of the edge opposite vertex e.

inline void velocity_shape(ElementPair pair, const Barycentric& l, LocalValues& phi) noexcept {
    if (pair == ElementPair::taylor_hood) {
        for (int i = 0; i < 3; ++i) phi[i] = l[i] * (2.0 * l[i] - 1.0);
        for (int e = 0; e < 3; ++e) phi[3 + e] = 4.0 * l[(e + 1) % 3] * l[(e + 2) % 3];
    } else {
        for (int i = 0; i < 3; ++i) phi[i] = l[i];
        phi[3] = 27.0 * l[0] * l[1] * l[2];
    }
}

inline void velocity_shape_grad(ElementPair pair, const Barycentric& l, const TriangleGeometry& g,
                                LocalGradients& dphi) noexcept {
    const auto& d = g.grad;
    if (pair == ElementPair::taylor_hood) {
        for (int i = 0; i < 3; ++i) dphi[i] = (4.0 * l[i] - 1.0) * d[i];
        for (int e = 0; e < 3; ++e) {
            const int a = (e + 1) % 3, b = (e + 2) % 3;
            dphi[3 + e] = 4.0 * (l[a] * d[b] + l[b] * d[a]);
        }
    } else {
        for (int i = 0; i < 3; ++i) dphi[i] = d[i];
        dphi[3] = 27.0 * (l[1] * l[2] * d[0] + l[0] * l[2] * d[1] + l[0] * l[1] * d[2]);
    }
}

inline void check_barycentric(const Barycentric& l) {
    constexpr double tol = 1e-12;
    for (double x : l)
        if (!(x >= -tol)) throw InvalidArgument("barycentric coordinate is negative");
    if (std::abs(l[0] + l[1] + l[2] - 1.0) > tol) throw InvalidArgument("barycentric coordinates do not sum to one");
}

/// Values of every local shape function of the given role at a reference point.
inline std::vector<double> eval_basis(ElementPair pair, Role role, const Barycentric& l) {
    check_barycentric(l);
    if (role == Role::pressure) return {l[0], l[1], l[2]};
    LocalValues phi{};
    velocity_shape(pair, l, phi);
    return {phi.begin(), phi.begin() + local_velocity_dofs(pair)};
}

/// Physical gradients of every local shape function.
inline std::vector<Point> eval_basis_grad(ElementPair pair, Role role, const Barycentric& l, const TriangleGeometry& g) {
    check_barycentric(l);
    if (!(std::abs(g.area) > 0.0) || !std::isfinite(g.grad_norm[0] + g.grad_norm[1] + g.grad_norm[2]))
        throw SingularGeometry("degenerate element geometry");
    if (role == Role::pressure) return {g.grad[0], g.grad[1], g.grad[2]};
    LocalGradients d;
    velocity_shape_grad(pair, l, g, d);
    return {d.begin(), d.begin() + local_velocity_dofs(pair)};
}

/// Degrees of freedom of a mixed pair over a mesh.
///
/// Scalar velocity dofs are ordered vertices, then edges (P2) or bubbles
/// (MINI). A velocity vector stores all x components, then all y components.
/// Pressure dofs are the mesh vertices.
class FESpace {
public:
    enum class Entity { vertex, edge, bubble };

    FESpace(std::shared_ptr<const Mesh> mesh, ElementPair pair) : mesh_(std::move(mesh)), pair_(pair) {
        if (!mesh_) throw InvalidArgument("null mesh");
        const int nv = mesh_->num_vertices();
        n_scalar_ = nv + (pair_ == ElementPair::taylor_hood ? mesh_->num_edges() : mesh_->num_triangles());
        dirichlet_.assign(2 * n_scalar_, 0);
        for (int v = 0; v < nv; ++v)
            if (mesh_->is_boundary_vertex(v)) dirichlet_[v] = dirichlet_[n_scalar_ + v] = 1;
        if (pair_ == ElementPair::taylor_hood)
            for (int e = 0; e < mesh_->num_edges(); ++e)
                if (mesh_->is_boundary_edge(e)) dirichlet_[nv + e] = dirichlet_[n_scalar_ + nv + e] = 1;
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
    ElementPair pair() const noexcept { return pair_; }

    int num_scalar_velocity_dofs() const noexcept { return n_scalar_; }
    int num_velocity_dofs() const noexcept { return 2 * n_scalar_; }
    int num_pressure_dofs() const noexcept { return mesh_->num_vertices(); }
    int num_local_velocity_dofs() const noexcept { return local_velocity_dofs(pair_); }

    /// Scalar velocity dofs of element k in local order.
    std::array<int, max_local_velocity_dofs> velocity_dofs(int k) const {
        const auto& t = mesh_->triangle(k);
        const int nv = mesh_->num_vertices();
        std::array<int, max_local_velocity_dofs> d{t[0], t[1], t[2], -1, -1, -1};
        if (pair_ == ElementPair::taylor_hood) {
            const auto& e = mesh_->triangle_edges(k);
            for (int i = 0; i < 3; ++i) d[3 + i] = nv + e[i];
        } else {
            d[3] = nv + k;
        }
        return d;
    }

    const std::array<int, 3>& pressure_dofs(int k) const { return mesh_->triangle(k); }

    Entity entity(int scalar_dof) const {
        const int nv = mesh_->num_vertices();
        if (scalar_dof < nv) return Entity::vertex;
        return pair_ == ElementPair::taylor_hood ? Entity::edge : Entity::bubble;
    }

    /// Interpolation node of a scalar velocity dof.
    Point velocity_node(int scalar_dof) const {
        const int nv = mesh_->num_vertices();
        if (scalar_dof < nv) return mesh_->vertex(scalar_dof);
        const int id = scalar_dof - nv;
        if (pair_ == ElementPair::taylor_hood) {
            const auto& e = mesh_->edges()[id];
            return 0.5 * (mesh_->vertex(e[0]) + mesh_->vertex(e[1]));
        }
        return mesh_->geometry(id).centroid();
    }

    /// Mask over the full velocity vector; nonzero marks boundary dofs.
    const std::vector<char>& dirichlet_mask() const noexcept { return dirichlet_; }
    bool is_dirichlet(int velocity_dof) const { return dirichlet_[velocity_dof] != 0; }

private:
    std::shared_ptr<const Mesh> mesh_;
    ElementPair pair_;
    int n_scalar_ = 0;
    std::vector<char> dirichlet_;
};

/// Coefficient vector of a velocity or pressure unknown.
struct Field {
    std::shared_ptr<const FESpace> space;
    Role role = Role::velocity;
    Eigen::VectorXd coeffs;
    double time = 0.0;

    static Field zero(std::shared_ptr<const FESpace> space, Role role) {
        Field f;
        const int n = role == Role::velocity ? space->num_velocity_dofs() : space->num_pressure_dofs();
        f.coeffs = Eigen::VectorXd::Zero(n);
        f.space = std::move(space);
        f.role = role;
        return f;
    }

    Point velocity(int k, const Barycentric& l) const {
        LocalValues phi;
        velocity_shape(space->pair(), l, phi);
        const auto dofs = space->velocity_dofs(k);
        const int n = space->num_scalar_velocity_dofs();
        Point u = Point::Zero();
        for (int i = 0; i < space->num_local_velocity_dofs(); ++i) {
            u.x() += coeffs[dofs[i]] * phi[i];
            u.y() += coeffs[n + dofs[i]] * phi[i];
        }
        return u;
    }

    /// Jacobian matrix, row i holds the gradient of component i.
    Eigen::Matrix2d velocity_gradient(int k, const Barycentric& l) const {
        LocalGradients d;
        velocity_shape_grad(space->pair(), l, space->mesh().geometry(k), d);
        const auto dofs = space->velocity_dofs(k);
        const int n = space->num_scalar_velocity_dofs();
        Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
        for (int i = 0; i < space->num_local_velocity_dofs(); ++i) {
            j.row(0) += coeffs[dofs[i]] * d[i].transpose();
            j.row(1) += coeffs[n + dofs[i]] * d[i].transpose();
        }
        return j;
    }

    double pressure(int k, const Barycentric& l) const {
        const auto& t = space->pressure_dofs(k);
        return coeffs[t[0]] * l[0] + coeffs[t[1]] * l[1] + coeffs[t[2]] * l[2];
    }
};

/// Continuous piecewise-linear vector field given by its vertex values.
struct P1Field {
    std::shared_ptr<const Mesh> mesh;
    std::vector<Point> values;

    static P1Field zero(std::shared_ptr<const Mesh> mesh) {
        P1Field w;
        w.values.assign(mesh->num_vertices(), Point::Zero());
        w.mesh = std::move(mesh);
        return w;
    }

    Point at(int k, const Barycentric& l) const {
        const auto& t = mesh->triangle(k);
        return l[0] * values[t[0]] + l[1] * values[t[1]] + l[2] * values[t[2]];
    }

    /// Constant Jacobian on element k.
    Eigen::Matrix2d gradient(int k) const {
        const auto& t = mesh->triangle(k);
        const auto& g = mesh->geometry(k);
        Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
        for (int i = 0; i < 3; ++i) j += values[t[i]] * g.grad[i].transpose();
        return j;
    }
};

/// Vertex-value (P1 Lagrange) interpolant of a discrete velocity.
inline P1Field p1_linearize(const Field& u) {
    if (u.role != Role::velocity) throw InvalidArgument("p1_linearize expects a velocity field");
    const auto& space = *u.space;
    P1Field w = P1Field::zero(space.mesh_ptr());
    const int n = space.num_scalar_velocity_dofs();
    for (int v = 0; v < space.mesh().num_vertices(); ++v) w.values[v] = Point(u.coeffs[v], u.coeffs[n + v]);
    return w;
}

/// Velocity field whose vertex values equal those of w and whose higher
/// dofs reproduce the linear interpolant.
inline Field to_velocity_field(const P1Field& w, std::shared_ptr<const FESpace> space) {
    Field u = Field::zero(space, Role::velocity);
    const int n = space->num_scalar_velocity_dofs();
    const auto& mesh = space->mesh();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        u.coeffs[v] = w.values[v].x();
        u.coeffs[n + v] = w.values[v].y();
    }
    if (space->pair() == ElementPair::taylor_hood) {
        const int nv = mesh.num_vertices();
        for (int e = 0; e < mesh.num_edges(); ++e) {
            const auto& ed = mesh.edges()[e];
            const Point m = 0.5 * (w.values[ed[0]] + w.values[ed[1]]);
            u.coeffs[nv + e] = m.x();
            u.coeffs[n + nv + e] = m.y();
        }
    }
    return u;
}

/// Sup over the domain of the Frobenius norm of the gradient of w.
inline double sup_grad_p1(const P1Field& w) {
    double s = 0.0;
    for (int k = 0; k < w.mesh->num_triangles(); ++k) s = std::max(s, w.gradient(k).norm());
    return s;
}

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Point(const Point&)>;

/// Nodal interpolant of a vector function; bubble coefficients are zero.
inline Field interpolate_velocity(std::shared_ptr<const FESpace> space, const VectorFunction& f) {
    Field u = Field::zero(space, Role::velocity);
    const int n = space->num_scalar_velocity_dofs();
    for (int i = 0; i < n; ++i) {
        if (space->entity(i) == FESpace::Entity::bubble) continue;
        const Point v = f(space->velocity_node(i));
        u.coeffs[i] = v.x();
        u.coeffs[n + i] = v.y();
    }
    return u;
}

/// Integral of every P1 pressure basis function.
inline Eigen::VectorXd pressure_basis_integrals(const FESpace& space) {
    const auto& mesh = space.mesh();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(space.num_pressure_dofs());
    for (int k = 0; k < mesh.num_triangles(); ++k)
        for (int v : mesh.triangle(k)) m[v] += mesh.geometry(k).area / 3.0;
    return m;
}

inline double pressure_mean(const Field& p) {
    const auto m = pressure_basis_integrals(*p.space);
    return m.dot(p.coeffs) / m.sum();
}

enum class MeanPolicy { keep, remove };

/// Nodal P1 interpolant of a scalar function.
inline Field interpolate_pressure(std::shared_ptr<const FESpace> space, const ScalarFunction& f,
                                  MeanPolicy policy = MeanPolicy::keep) {
    Field p = Field::zero(space, Role::pressure);
    const auto& mesh = space->mesh();
    for (int v = 0; v < mesh.num_vertices(); ++v) p.coeffs[v] = f(mesh.vertex(v));
    if (policy == MeanPolicy::remove) p.coeffs.array() -= pressure_mean(p);
    return p;
}

} // namespace charfem
