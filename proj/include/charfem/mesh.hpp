#pragma once

#include "charfem/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace charfem {

using Point = Eigen::Vector2d;
using Barycentric = std::array<double, 3>;

/// Cached affine data of one triangle.
///
/// Local edge e is the edge opposite local vertex e, i.e. it joins
/// vertices (e+1)%3 and (e+2)%3.
struct TriangleGeometry {
    std::array<Point, 3> vertex;
    std::array<Point, 3> grad;      // gradients of the barycentric coordinates
    std::array<double, 3> grad_norm; // reciprocal heights
    double area = 0.0;
    double diameter = 0.0;

    Barycentric barycentric(const Point& x) const {
        Barycentric l;
        for (int i = 0; i < 3; ++i) l[i] = grad[i].dot(x - vertex[(i + 1) % 3]);
        return l;
    }

    Point point(const Barycentric& l) const {
        return l[0] * vertex[0] + l[1] * vertex[1] + l[2] * vertex[2];
    }

    Point centroid() const { return (vertex[0] + vertex[1] + vertex[2]) / 3.0; }

    /// Smallest signed distance from x to the three edge lines (negative outside).
    double signed_distance(const Point& x) const {
        const auto l = barycentric(x);
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) d = std::min(d, l[i] / grad_norm[i]);
        return d;
    }
};

inline TriangleGeometry make_triangle_geometry(const Point& a, const Point& b, const Point& c) {
    TriangleGeometry g;
    g.vertex = {a, b, c};
    const double twice_area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    g.area = 0.5 * twice_area;
    if (!(std::abs(twice_area) > 0.0)) throw SingularGeometry("degenerate triangle");
    for (int i = 0; i < 3; ++i) {
        const Point e = g.vertex[(i + 2) % 3] - g.vertex[(i + 1) % 3];
        g.grad[i] = Point(-e.y(), e.x()) / twice_area;
        g.grad_norm[i] = g.grad[i].norm();
    }
    g.diameter = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    return g;
}

enum class MeshPattern { right, crisscross };

/// Conforming triangulation with edge table, adjacency and boundary tags.
///
/// Immutable after construction. Triangles are reoriented counterclockwise.
class Mesh {
public:
    static constexpr int boundary = -1;

    Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles, double h_param = 0.0)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        if (vertices_.empty() || triangles_.empty()) throw InvalidArgument("mesh needs vertices and triangles");
        const int nv = num_vertices();
        geometry_.reserve(triangles_.size());
        for (auto& t : triangles_) {
            for (int v : t)
                if (v < 0 || v >= nv) throw InvalidArgument("triangle references unknown vertex " + std::to_string(v));
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw SingularGeometry("triangle repeats a vertex");
            auto g = make_triangle_geometry(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
            if (g.area < 0.0) {
                std::swap(t[1], t[2]);
                g = make_triangle_geometry(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
            }
            geometry_.push_back(g);
        }
        build_edges();
        build_vertex_triangles();
        h_max_ = 0.0;
        for (const auto& g : geometry_) h_max_ = std::max(h_max_, g.diameter);
        h_param_ = h_param > 0.0 ? h_param : h_max_;
        bbox_min_ = bbox_max_ = vertices_.front();
        for (const auto& p : vertices_) {
            bbox_min_ = bbox_min_.cwiseMin(p);
            bbox_max_ = bbox_max_.cwiseMax(p);
        }
    }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
    int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const Point& vertex(int v) const { return vertices_[v]; }
    const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
    const std::array<int, 3>& triangle(int k) const { return triangles_[k]; }
    const TriangleGeometry& geometry(int k) const { return geometry_[k]; }

    const std::vector<std::array<int, 2>>& edges() const noexcept { return edges_; }
    /// Global edge ids of triangle k, indexed by the opposite local vertex.
    const std::array<int, 3>& triangle_edges(int k) const { return triangle_edges_[k]; }
    /// Neighbor across the edge opposite local vertex i, or `boundary`.
    const std::array<int, 3>& neighbors(int k) const { return neighbors_[k]; }

    bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }
    bool is_boundary_edge(int e) const { return boundary_edge_[e] != 0; }

    std::span<const int> vertex_triangles(int v) const {
        return {vertex_triangles_.data() + vertex_triangles_offset_[v],
                static_cast<std::size_t>(vertex_triangles_offset_[v + 1] - vertex_triangles_offset_[v])};
    }

    /// Reported mesh parameter (1/N for structured meshes).
    double h_param() const noexcept { return h_param_; }
    double h_max() const noexcept { return h_max_; }
    const Point& bbox_min() const noexcept { return bbox_min_; }
    const Point& bbox_max() const noexcept { return bbox_max_; }

    double total_area() const {
        double a = 0.0;
        for (const auto& g : geometry_) a += g.area;
        return a;
    }

    /// Closest point of the mesh boundary to p.
    Point project_to_boundary(const Point& p) const {
        Point best = p;
        double best_d = std::numeric_limits<double>::infinity();
        for (int e = 0; e < num_edges(); ++e) {
            if (!boundary_edge_[e]) continue;
            const Point& a = vertices_[edges_[e][0]];
            const Point& b = vertices_[edges_[e][1]];
            const Point ab = b - a;
            const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            const Point q = a + s * ab;
            const double d = (p - q).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = q;
            }
        }
        return best;
    }

private:
    void build_edges() {
        const int nt = num_triangles();
        std::unordered_map<std::int64_t, int> edge_of;
        edge_of.reserve(3 * triangles_.size());
        triangle_edges_.assign(nt, {0, 0, 0});
        neighbors_.assign(nt, {boundary, boundary, boundary});
        std::vector<std::array<int, 2>> edge_triangles; // (triangle, local edge) of first owner
        std::vector<int> edge_count;
        const auto nv = static_cast<std::int64_t>(num_vertices());
        for (int k = 0; k < nt; ++k) {
            const auto& t = triangles_[k];
            for (int e = 0; e < 3; ++e) {
                int a = t[(e + 1) % 3], b = t[(e + 2) % 3];
                if (a > b) std::swap(a, b);
                const std::int64_t key = a * nv + b;
                auto [it, inserted] = edge_of.try_emplace(key, static_cast<int>(edges_.size()));
                if (inserted) {
                    edges_.push_back({a, b});
                    edge_triangles.push_back({k, e});
                    edge_count.push_back(1);
                } else {
                    const int id = it->second;
                    if (++edge_count[id] > 2)
                        throw InvalidArgument("non-conforming mesh: edge shared by more than two triangles");
                    const auto [k2, e2] = edge_triangles[id];
                    neighbors_[k][e] = k2;
                    neighbors_[k2][e2] = k;
                }
                triangle_edges_[k][e] = it->second;
            }
        }
        boundary_edge_.assign(edges_.size(), 0);
        boundary_vertex_.assign(vertices_.size(), 0);
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            if (edge_count[e] == 1) {
                boundary_edge_[e] = 1;
                boundary_vertex_[edges_[e][0]] = 1;
                boundary_vertex_[edges_[e][1]] = 1;
            }
        }
    }

    void build_vertex_triangles() {
        vertex_triangles_offset_.assign(vertices_.size() + 1, 0);
        for (const auto& t : triangles_)
            for (int v : t) ++vertex_triangles_offset_[v + 1];
        for (std::size_t v = 0; v < vertices_.size(); ++v)
            vertex_triangles_offset_[v + 1] += vertex_triangles_offset_[v];
        vertex_triangles_.resize(vertex_triangles_offset_.back());
        auto fill = vertex_triangles_offset_;
        for (int k = 0; k < num_triangles(); ++k)
            for (int v : triangles_[k]) vertex_triangles_[fill[v]++] = k;
    }

    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<TriangleGeometry> geometry_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> triangle_edges_;
    std::vector<std::array<int, 3>> neighbors_;
    std::vector<char> boundary_edge_;
    std::vector<char> boundary_vertex_;
    std::vector<int> vertex_triangles_offset_;
    std::vector<int> vertex_triangles_;
    double h_param_ = 0.0;
    double h_max_ = 0.0;
    Point bbox_min_, bbox_max_;
};

/// Structured triangulation of (0,1)^2 with N divisions per side.
///
/// `right` splits each cell along its rising diagonal; `crisscross` adds the
/// cell center and splits into four, so every triangle has an interior vertex.
inline Mesh generate_structured_unit_square(int n, MeshPattern pattern = MeshPattern::crisscross) {
    if (n < 2) throw InvalidArgument("division number must be at least 2, got " + std::to_string(n));
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    const int row = n + 1;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) vertices.emplace_back(double(i) / n, double(j) / n);
    if (pattern == MeshPattern::crisscross) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) vertices.emplace_back((i + 0.5) / n, (j + 0.5) / n);
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = j * row + i, v10 = v00 + 1, v01 = v00 + row, v11 = v01 + 1;
            if (pattern == MeshPattern::right) {
                triangles.push_back({v00, v10, v11});
                triangles.push_back({v00, v11, v01});
            } else {
                const int c = row * row + j * n + i;
                triangles.push_back({v00, v10, c});
                triangles.push_back({v10, v11, c});
                triangles.push_back({v11, v01, c});
                triangles.push_back({v01, v00, c});
            }
        }
    }
    return Mesh(std::move(vertices), std::move(triangles), 1.0 / n);
}

struct MeshQuality {
    double h_max = 0.0;
    double shape_ratio = 0.0; // max diameter / inradius
};

inline MeshQuality mesh_quality(const Mesh& mesh) {
    MeshQuality q;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        const auto& v = g.vertex;
        const double perimeter = (v[1] - v[0]).norm() + (v[2] - v[1]).norm() + (v[0] - v[2]).norm();
        const double inradius = 2.0 * g.area / perimeter;
        q.h_max = std::max(q.h_max, g.diameter);
        q.shape_ratio = std::max(q.shape_ratio, g.diameter / inradius);
    }
    return q;
}

struct PointLocation {
    int element = -1;
    Barycentric barycentric{0.0, 0.0, 0.0};
};

/// Point location by walking through neighbor adjacency with a brute-force
/// fallback. Holds a per-caller start cache; not thread-safe, cheap to copy.
class Locator {
public:
    /// Points within this distance of the closed domain count as inside.
    static constexpr double tolerance = 1e-12;

    explicit Locator(const Mesh& mesh) : mesh_(&mesh) {}

    PointLocation locate(const Point& p) {
        auto found = try_locate(p, last_);
        if (!found)
            throw OutOfDomain("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                              ") lies outside the mesh");
        return *found;
    }

    PointLocation locate(const Point& p, int hint) {
        last_ = hint;
        return locate(p);
    }

    std::optional<PointLocation> try_locate(const Point& p, int hint) {
        const int nt = mesh_->num_triangles();
        int k = (hint >= 0 && hint < nt) ? hint : 0;
        int found = -1;
        for (int step = 0; step < nt; ++step) {
            const auto& g = mesh_->geometry(k);
            const auto l = g.barycentric(p);
            int worst = 0;
            double worst_d = std::numeric_limits<double>::infinity();
            for (int i = 0; i < 3; ++i) {
                const double d = l[i] / g.grad_norm[i];
                if (d < worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            if (worst_d >= -tolerance) {
                found = k;
                break;
            }
            const int next = mesh_->neighbors(k)[worst];
            if (next == Mesh::boundary) break;
            k = next;
        }
        if (found < 0) {
            for (int t = 0; t < nt; ++t) {
                if (mesh_->geometry(t).signed_distance(p) >= -tolerance) {
                    found = t;
                    break;
                }
            }
            if (found < 0) return std::nullopt;
        }
        found = lowest_containing(p, found);
        last_ = found;
        return PointLocation{found, clamp(mesh_->geometry(found).barycentric(p))};
    }

private:
    // Points on shared edges or vertices resolve to the smallest element id.
    int lowest_containing(const Point& p, int k) const {
        const auto& g = mesh_->geometry(k);
        if (g.signed_distance(p) > tolerance) return k;
        int best = k;
        for (int v : mesh_->triangle(k))
            for (int t : mesh_->vertex_triangles(v))
                if (t < best && mesh_->geometry(t).signed_distance(p) >= -tolerance) best = t;
        return best;
    }

    static Barycentric clamp(Barycentric l) {
        if (l[0] >= 0.0 && l[1] >= 0.0 && l[2] >= 0.0) return l;
        double s = 0.0;
        for (double& x : l) {
            x = std::max(x, 0.0);
            s += x;
        }
        for (double& x : l) x /= s;
        return l;
    }

    const Mesh* mesh_;
    int last_ = 0;
};

/// Reads the plain text mesh format: `nv nt`, nv lines `x y boundary_flag`,
/// nt lines `v0 v1 v2` (0-based). Boundary flags must match the topology.
inline Mesh read_mesh(std::istream& in, double h_param = 0.0) {
    long nv = 0, nt = 0;
    if (!(in >> nv >> nt) || nv <= 0 || nt <= 0) throw InvalidArgument("mesh header must be `nv nt` with positive counts");
    std::vector<Point> vertices(nv);
    std::vector<int> flags(nv);
    for (long i = 0; i < nv; ++i) {
        double x, y;
        int f;
        if (!(in >> x >> y >> f)) throw InvalidArgument("truncated vertex list at vertex " + std::to_string(i));
        vertices[i] = Point(x, y);
        flags[i] = f;
    }
    std::vector<std::array<int, 3>> triangles(nt);
    for (long k = 0; k < nt; ++k)
        if (!(in >> triangles[k][0] >> triangles[k][1] >> triangles[k][2]))
            throw InvalidArgument("truncated triangle list at triangle " + std::to_string(k));
    Mesh mesh(std::move(vertices), std::move(triangles), h_param);
    for (long i = 0; i < nv; ++i)
        if ((flags[i] != 0) != mesh.is_boundary_vertex(static_cast<int>(i)))
            throw InvalidArgument("boundary flag of vertex " + std::to_string(i) + " contradicts the topology");
    return mesh;
}

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
    const auto old = out.precision(17);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << ' ' << (mesh.is_boundary_vertex(v) ? 1 : 0) << '\n';
    out.precision(old);
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

} // namespace charfem
