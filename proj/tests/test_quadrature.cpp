#include "charfem/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// ∫_T l1^a l2^b dA / |T| = 2 a! b! / (a+b+2)! on any triangle.
double exact_moment(int a, int b) { return 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2); }

double rule_moment(const charfem::TriangleRule& r, int a, int b) {
    double s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
    return s;
}

void expect_exact_up_to(const charfem::TriangleRule& r, int degree, double tol) {
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            EXPECT_NEAR(rule_moment(r, a, b), exact_moment(a, b), tol) << "monomial l1^" << a << " l2^" << b;
}

} // namespace

TEST(Quadrature, SevenPointRuleIsExactToDegreeFive) {
    const auto r = charfem::seven_point_degree5();
    EXPECT_EQ(r.size(), 7u);
    EXPECT_EQ(r.degree, 5);
    expect_exact_up_to(r, 5, 1e-15);
    EXPECT_GT(std::abs(rule_moment(r, 6, 0) - exact_moment(6, 0)), 1e-8);
}

TEST(Quadrature, ExactRuleIsExactToDegreeEight) {
    const auto& r = charfem::exact_rule();
    EXPECT_GE(r.degree, 8);
    expect_exact_up_to(r, 8, 1e-13);
}

TEST(Quadrature, PointsAreBarycentricAndWeightsSumToOne) {
    for (const auto& r : {charfem::seven_point_degree5(), charfem::exact_rule()}) {
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-14);
        for (const auto& p : r.points) {
            EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-14);
            for (double l : p) EXPECT_GE(l, 0.0);
        }
        for (double w : r.weights) EXPECT_GT(w, 0.0);
    }
}
