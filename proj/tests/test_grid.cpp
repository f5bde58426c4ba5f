#include "pcurv/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pcurv;

TEST(Grid, UniformEndpointsAndSpacing) {
    const auto x = make_grid(0.0, 2.0, 5, UniformLaw{});
    EXPECT_EQ(x, (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
}

TEST(Grid, ClusteredSpacingLaw) {
    const ClusteredLaw law{1.05, 8.0};
    const auto x = make_grid(0.0, 1.0, 201, law, {false, true});
    EXPECT_DOUBLE_EQ(x.front(), 0.0);
    EXPECT_DOUBLE_EQ(x.back(), 1.0);
    ASSERT_TRUE(strictly_increasing(x));
    const double h_last = x[200] - x[199];
    const double h_first = x[1] - x[0];
    EXPECT_NEAR(h_first / h_last, 8.0, 1e-9);
    EXPECT_NEAR((x[199] - x[198]) / h_last, 1.05, 1e-9);
}

TEST(Grid, ClusteredBothEnds) {
    const auto x = make_grid(1.0, 3.0, 101, ClusteredLaw{1.1, 5.0}, {true, true});
    EXPECT_NEAR(x[1] - x[0], x[100] - x[99], 1e-14);
    EXPECT_NEAR((x[50] - x[49]) / (x[1] - x[0]), 5.0, 1e-9);
}

TEST(Grid, SinhLawIsFineNearLeft) {
    const auto x = make_grid(0.0, 100.0, 50, SinhLaw{4.0});
    EXPECT_DOUBLE_EQ(x.back(), 100.0);
    EXPECT_LT(x[1] - x[0], x[49] - x[48]);
}

TEST(Grid, RejectsDegenerateInput) {
    EXPECT_THROW((void)make_grid(1.0, 1.0, 10, UniformLaw{}), domain_error);
    EXPECT_THROW((void)make_grid(0.0, 1.0, 2, UniformLaw{}), discretization_error);
}

TEST(Fornberg, UniformThreePoint) {
    const std::vector<double> x{-0.1, 0.0, 0.1};
    const auto w = fornberg_weights(0.0, x, 2);
    EXPECT_NEAR(w[0][1], 1.0, 1e-14);
    EXPECT_NEAR(w[1][0], -5.0, 1e-12);
    EXPECT_NEAR(w[1][2], 5.0, 1e-12);
    EXPECT_NEAR(w[2][0], 100.0, 1e-10);
    EXPECT_NEAR(w[2][1], -200.0, 1e-10);
}

TEST(Fornberg, ExactOnPolynomials) {
    const std::vector<double> x{0.0, 0.3, 0.45, 1.1};
    const auto w = fornberg_weights(0.2, x, 2);
    auto p = [](double t) { return 2.0 - t + 3.0 * t * t - 0.5 * t * t * t; };
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        d1 += w[1][j] * p(x[j]);
        d2 += w[2][j] * p(x[j]);
    }
    EXPECT_NEAR(d1, -1.0 + 6.0 * 0.2 - 1.5 * 0.04, 1e-12);
    EXPECT_NEAR(d2, 6.0 - 3.0 * 0.2, 1e-11);
}

namespace {

double diff_error(int nodes, const GridLaw& law) {
    const auto x = make_grid(0.2, 1.7, nodes, law);
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::sin(2.0 * x[i]);
    const auto d = differentiate(x, u);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        err = std::max(err, std::abs(d.d1[i] - 2.0 * std::cos(2.0 * x[i])));
        err = std::max(err, std::abs(d.d2[i] + 4.0 * std::sin(2.0 * x[i])));
    }
    return err;
}

}  // namespace

TEST(Differentiate, SecondOrderUnderRefinement) {
    const double e1 = diff_error(101, UniformLaw{});
    const double e2 = diff_error(201, UniformLaw{});
    EXPECT_GT(std::log2(e1 / e2), 1.9);
    const double s1 = diff_error(201, SinhLaw{1.0});
    const double s2 = diff_error(401, SinhLaw{1.0});
    EXPECT_GT(std::log2(s1 / s2), 1.9);
}

TEST(Differentiate, EvenOrigin) {
    const auto x = make_grid(0.0, 1.0, 11, UniformLaw{});
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = 1.0 + x[i] * x[i];
    const auto d = differentiate(x, u, true);
    EXPECT_EQ(d.d1[0], 0.0);
    EXPECT_NEAR(d.d2[0], 2.0, 1e-12);
    EXPECT_NEAR(d.d2[10], 2.0, 1e-9);
}

TEST(Interpolant, ReproducesMonotoneDataAndRejectsExtrapolation) {
    std::vector<double> x, y;
    for (int i = 0; i <= 40; ++i) {
        x.push_back(i / 40.0);
        y.push_back(std::exp(x.back()));
    }
    const MonotoneInterpolant f(x, y);
    EXPECT_DOUBLE_EQ(f(0.5), std::exp(0.5));
    EXPECT_NEAR(f(0.512), std::exp(0.512), 1e-6);
    EXPECT_THROW((void)f(1.01), domain_error);
    EXPECT_THROW((void)f(-1e-9), domain_error);
}

TEST(Trapezoid, ExactForLinear) {
    const auto x = make_grid(0.0, 3.0, 17, ClusteredLaw{});
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] + 1.0;
    EXPECT_NEAR(trapezoid(x, y), 12.0, 1e-12);
}
