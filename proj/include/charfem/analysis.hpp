#pragma once

#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace charfem {

enum class NormKind { L2, H1semi };

/// Exact L2 norm or H1 seminorm of a finite element function.
inline double field_norm(const Field& phi, NormKind kind) {
    const auto& space = *phi.space;
    const auto& mesh = space.mesh();
    const auto& rule = exact_rule();
    double sum = 0.0;
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto& g = mesh.geometry(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& l = rule.points[q];
            const double w = g.area * rule.weights[q];
            if (phi.role == Role::pressure) {
                if (kind == NormKind::L2) {
                    const double v = phi.pressure(k, l);
                    sum += w * v * v;
                } else {
                    const auto& d = space.pressure_dofs(k);
                    Point grad = Point::Zero();
                    for (int i = 0; i < 3; ++i) grad += phi.coeffs[d[i]] * g.grad[i];
                    sum += w * grad.squaredNorm();
                }
            } else if (kind == NormKind::L2) {
                sum += w * phi.velocity(k, l).squaredNorm();
            } else {
                sum += w * phi.velocity_gradient(k, l).squaredNorm();
            }
        }
    }
    return std::sqrt(sum);
}

/// Closed-form solution used to measure errors.
struct ExactSolution {
    std::function<Point(const Point&, double)> velocity;
    std::function<Eigen::Matrix2d(const Point&, double)> velocity_gradient;
    std::function<double(const Point&, double)> pressure;
};

/// Relative errors E_X(φ) = ||Π_h φ - φ_h||_X / ||Π_h φ||_X.
struct RelativeErrors {
    double velocity_linf_h1 = 0.0; ///< u in l∞(H1_0), read as the H1 seminorm
    double pressure_l2_l2 = 0.0;   ///< p in l2(L2), steps 1..N_T
    double velocity_linf_l2 = 0.0; ///< u in l∞(L2)
};

/// Accumulates discrete-in-time norms of u_h^n - Π_h u^n and p_h^n - Π_h p^n.
///
/// Pressures are compared after removing the mean of the interpolant.
class ErrorAccumulator {
public:
    ErrorAccumulator(std::shared_ptr<const FESpace> space, ExactSolution exact, double dt)
        : space_(std::move(space)), exact_(std::move(exact)), dt_(dt) {}

    void observe(int n, double t, const Field& u, const Field* p) {
        const Field iu = interpolate_velocity(space_, [&](const Point& x) { return exact_.velocity(x, t); });
        Field diff = iu;
        diff.coeffs -= u.coeffs;
        num_h1_ = std::max(num_h1_, field_norm(diff, NormKind::H1semi));
        den_h1_ = std::max(den_h1_, field_norm(iu, NormKind::H1semi));
        num_l2_ = std::max(num_l2_, field_norm(diff, NormKind::L2));
        den_l2_ = std::max(den_l2_, field_norm(iu, NormKind::L2));
        if (n >= 1 && p) {
            const Field ip = interpolate_pressure(space_, [&](const Point& x) { return exact_.pressure(x, t); },
                                                  MeanPolicy::remove);
            Field pd = ip;
            pd.coeffs -= p->coeffs;
            const double e = field_norm(pd, NormKind::L2), r = field_norm(ip, NormKind::L2);
            num_p_ += dt_ * e * e;
            den_p_ += dt_ * r * r;
        }
    }

    RelativeErrors result() const {
        if (!(den_h1_ > 0.0) || !(den_l2_ > 0.0))
            throw InvalidArgument("exact velocity vanishes identically; velocity relative error is undefined");
        if (!(den_p_ > 0.0))
            throw InvalidArgument("exact pressure vanishes identically; pressure relative error is undefined");
        return {num_h1_ / den_h1_, std::sqrt(num_p_ / den_p_), num_l2_ / den_l2_};
    }

private:
    std::shared_ptr<const FESpace> space_;
    ExactSolution exact_;
    double dt_;
    double num_h1_ = 0.0, den_h1_ = 0.0, num_l2_ = 0.0, den_l2_ = 0.0, num_p_ = 0.0, den_p_ = 0.0;
};

/// Pairwise orders log(E_i/E_{i+1}) / log(h_i/h_{i+1}).
inline std::vector<double> observed_orders(const std::vector<double>& h, const std::vector<double>& e) {
    if (h.size() != e.size()) throw InvalidArgument("h and error lists differ in length");
    if (h.size() < 2) throw InvalidArgument("need at least two entries to estimate an order");
    const bool decreasing = h[1] < h[0];
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(h[i + 1] > 0.0)) throw InvalidArgument("mesh sizes must be positive");
        if (decreasing ? !(h[i + 1] < h[i]) : !(h[i + 1] > h[i]))
            throw InvalidArgument("mesh sizes must be strictly monotone");
    }
    std::vector<double> orders;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) orders.push_back(std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]));
    return orders;
}

/// One row of a convergence study.
struct ErrorRow {
    int n = 0;
    double h = 0.0;
    double dt = 0.0;
    RelativeErrors errors;
    std::string status = "ok";
    double max_divergence_ratio = 0.0; ///< not part of the CSV
    double max_dt_times_grad = 0.0;    ///< not part of the CSV
    double seconds = 0.0;              ///< not part of the CSV

    bool ok() const { return status == "ok"; }
};

struct ErrorSeries {
    std::vector<ErrorRow> rows;

    /// Orders of one error column between consecutive rows; NaN where a row failed.
    std::vector<double> orders(double RelativeErrors::*column) const {
        std::vector<double> out;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const auto& a = rows[i];
            const auto& b = rows[i + 1];
            if (!a.ok() || !b.ok()) {
                out.push_back(std::nan(""));
                continue;
            }
            out.push_back(observed_orders({a.h, b.h}, {a.errors.*column, b.errors.*column}).front());
        }
        return out;
    }
};

} // namespace charfem
