#pragma once

#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/mesh.hpp"
#include "charfem/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace charfem {

/// x -> matrix * x + offset, the restriction of a foot map to one element.
struct AffineMap {
    Eigen::Matrix2d matrix = Eigen::Matrix2d::Identity();
    Point offset = Point::Zero();
    int source_element = -1;

    Point operator()(const Point& x) const { return matrix * x + offset; }
    double determinant() const { return matrix.determinant(); }

    Point inverse(const Point& y) const {
        const double det = determinant();
        if (!(std::abs(det) > 1e-14)) throw SingularMap("affine map is not invertible");
        return matrix.inverse() * (y - offset);
    }
};

/// The affine map x -> x - dt * w(x) on element k0, where w is element-wise linear.
inline AffineMap foot_map_on_element(const P1Field& w, double dt, int k0) {
    const auto& mesh = *w.mesh;
    const auto& t = mesh.triangle(k0);
    std::array<Point, 3> p, q;
    for (int i = 0; i < 3; ++i) {
        p[i] = mesh.vertex(t[i]);
        q[i] = p[i] - dt * w.values[t[i]];
    }
    Eigen::Matrix2d src, dst;
    src << p[1] - p[0], p[2] - p[0];
    dst << q[1] - q[0], q[2] - q[0];
    const double det = src.determinant();
    if (!(std::abs(det) > 0.0)) throw SingularGeometry("degenerate source element");
    AffineMap f;
    f.matrix = dst * src.inverse();
    f.offset = q[0] - f.matrix * p[0];
    f.source_element = k0;
    return f;
}

/// Convex polygon E = K0 ∩ F^{-1}(K1), counterclockwise.
struct ClipPolygon {
    static constexpr int capacity = 9;

    std::array<Point, capacity> vertex;
    int size = 0;
    int source_element = -1;
    int target_element = -1;

    double area() const {
        double a = 0.0;
        for (int i = 0; i < size; ++i) {
            const Point& p = vertex[i];
            const Point& q = vertex[(i + 1) % size];
            a += p.x() * q.y() - p.y() * q.x();
        }
        return 0.5 * a;
    }

    Point centroid_of_vertices() const {
        Point c = Point::Zero();
        for (int i = 0; i < size; ++i) c += vertex[i];
        return c / size;
    }
};

namespace detail {

struct Polygon {
    std::array<Point, ClipPolygon::capacity> v;
    int n = 0;
};

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Keeps the part of `in` left of the directed line a->b.
inline void clip_half_plane(const Polygon& in, const Point& a, const Point& b, Polygon& out) {
    out.n = 0;
    const Point ab = b - a;
    for (int i = 0; i < in.n; ++i) {
        const Point& p = in.v[i];
        const Point& q = in.v[(i + 1) % in.n];
        const double dp = cross(ab, p - a);
        const double dq = cross(ab, q - a);
        if (dp >= 0.0) out.v[out.n++] = p;
        if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) out.v[out.n++] = p + (dp / (dp - dq)) * (q - p);
        if (out.n > ClipPolygon::capacity - 2) break;
    }
}

inline void dedup(Polygon& poly, double tol) {
    if (poly.n == 0) return;
    Polygon out;
    for (int i = 0; i < poly.n; ++i) {
        if (out.n > 0 && (poly.v[i] - out.v[out.n - 1]).lpNorm<Eigen::Infinity>() <= tol) continue;
        out.v[out.n++] = poly.v[i];
    }
    while (out.n > 1 && (out.v[out.n - 1] - out.v[0]).lpNorm<Eigen::Infinity>() <= tol) --out.n;
    poly = out;
}

} // namespace detail

/// Tolerances of the clipping kernel.
struct ClipTolerance {
    double dedup_relative = 1e-13; // times the source diameter
    double drop_relative = 1e-14;  // times the source area
};

/// Clips source triangle k0 against the preimage of target triangle k1 under F.
inline std::optional<ClipPolygon> clip(const TriangleGeometry& k0, const AffineMap& f, const TriangleGeometry& k1,
                                       int source_id = -1, int target_id = -1, ClipTolerance tol = {}) {
    const double det = f.determinant();
    if (!(std::abs(det) > 1e-14)) throw SingularMap("foot map is not invertible on the source element");
    const Eigen::Matrix2d inv = f.matrix.inverse();
    std::array<Point, 3> pre;
    for (int i = 0; i < 3; ++i) pre[i] = inv * (k1.vertex[i] - f.offset);
    if (det < 0.0) std::swap(pre[1], pre[2]);

    // bounding boxes first
    Point lo0 = k0.vertex[0], hi0 = k0.vertex[0], lo1 = pre[0], hi1 = pre[0];
    for (int i = 1; i < 3; ++i) {
        lo0 = lo0.cwiseMin(k0.vertex[i]);
        hi0 = hi0.cwiseMax(k0.vertex[i]);
        lo1 = lo1.cwiseMin(pre[i]);
        hi1 = hi1.cwiseMax(pre[i]);
    }
    if (lo1.x() >= hi0.x() || lo0.x() >= hi1.x() || lo1.y() >= hi0.y() || lo0.y() >= hi1.y()) return std::nullopt;

    detail::Polygon a, b;
    a.n = 3;
    for (int i = 0; i < 3; ++i) a.v[i] = k0.vertex[i];
    for (int e = 0; e < 3 && a.n > 0; ++e) {
        detail::clip_half_plane(a, pre[e], pre[(e + 1) % 3], b);
        std::swap(a, b);
    }
    detail::dedup(a, tol.dedup_relative * k0.diameter);
    if (a.n < 3) return std::nullopt;
    ClipPolygon poly;
    poly.size = a.n;
    for (int i = 0; i < a.n; ++i) poly.vertex[i] = a.v[i];
    poly.source_element = source_id;
    poly.target_element = target_id;
    if (!(poly.area() > tol.drop_relative * k0.area)) return std::nullopt;
    return poly;
}

/// Visits every quadrature point of a fan triangulation of E from its vertex
/// centroid, calling visit(x, weight) with weights that include the area.
template <class Visit>
void for_each_polygon_point(const ClipPolygon& e, const TriangleRule& rule, Visit&& visit) {
    const Point c = e.centroid_of_vertices();
    for (int i = 0; i < e.size; ++i) {
        const Point& p = e.vertex[i];
        const Point& q = e.vertex[(i + 1) % e.size];
        const double area = 0.5 * detail::cross(p - c, q - c);
        if (area <= 0.0) continue;
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const auto& l = rule.points[k];
            visit(Point(l[0] * c + l[1] * p + l[2] * q), area * rule.weights[k]);
        }
    }
}

/// Exact integral over E of (g_target ∘ F) * g_source for polynomial factors
/// of the stated degrees.
template <class TargetFn, class SourceFn>
double integrate_poly_product(const ClipPolygon& e, const AffineMap& f, TargetFn&& g_target, SourceFn&& g_source,
                              int target_degree, int source_degree) {
    const auto& rule = exact_rule();
    if (target_degree < 0 || source_degree < 0 || target_degree + source_degree > rule.degree)
        throw InternalError("quadrature rule of degree " + std::to_string(rule.degree) +
                            " cannot integrate a product of degree " + std::to_string(target_degree + source_degree));
    double sum = 0.0;
    for_each_polygon_point(e, rule, [&](const Point& x, double w) { sum += w * g_target(f(x)) * g_source(x); });
    return sum;
}

/// Image of the source element's vertices under F.
inline std::array<Point, 3> image_vertices(const Mesh& mesh, int k0, const AffineMap& f) {
    const auto& g = mesh.geometry(k0);
    return {f(g.vertex[0]), f(g.vertex[1]), f(g.vertex[2])};
}

/// All nonempty polygons K0 ∩ F^{-1}(K1) over the mesh.
///
/// The search walks outward through neighbors from the element holding the
/// image of the centroid, restricted to elements whose bounding box meets
/// that of F(K0). Throws OutOfDomain if F(K0) leaves the domain.
inline std::vector<ClipPolygon> find_overlaps(const Mesh& mesh, int k0, const AffineMap& f, Locator& locator,
                                              ClipTolerance tol = {}) {
    const auto& g0 = mesh.geometry(k0);
    const auto img = image_vertices(mesh, k0, f);
    int hint = k0;
    for (const auto& y : img) {
        auto loc = locator.try_locate(y, hint);
        if (!loc)
            throw OutOfDomain("image of element " + std::to_string(k0) + " leaves the domain at (" +
                              std::to_string(y.x()) + ", " + std::to_string(y.y()) + ")");
        hint = loc->element;
    }
    const Point centroid_image = f(g0.centroid());
    const int start = locator.locate(centroid_image, hint).element;

    Point lo = img[0], hi = img[0];
    for (int i = 1; i < 3; ++i) {
        lo = lo.cwiseMin(img[i]);
        hi = hi.cwiseMax(img[i]);
    }
    const double pad = 1e-12;
    lo.array() -= pad;
    hi.array() += pad;

    auto meets_box = [&](int k) {
        const auto& v = mesh.geometry(k).vertex;
        Point a = v[0], b = v[0];
        for (int i = 1; i < 3; ++i) {
            a = a.cwiseMin(v[i]);
            b = b.cwiseMax(v[i]);
        }
        return !(a.x() > hi.x() || b.x() < lo.x() || a.y() > hi.y() || b.y() < lo.y());
    };

    std::vector<ClipPolygon> out;
    std::vector<int> visited{start};
    std::vector<int> queue{start};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int k1 = queue[head];
        if (auto poly = clip(g0, f, mesh.geometry(k1), k0, k1, tol)) out.push_back(*poly);
        for (int nb : mesh.neighbors(k1)) {
            if (nb == Mesh::boundary) continue;
            if (std::find(visited.begin(), visited.end(), nb) != visited.end()) continue;
            visited.push_back(nb);
            if (meets_box(nb)) queue.push_back(nb);
        }
    }
    return out;
}

} // namespace charfem
