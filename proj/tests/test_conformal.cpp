#include "oracles.hpp"
#include "pcurv/conformal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pcurv;

namespace {

std::vector<double> interior(const std::vector<double>& v) { return {v.begin() + 1, v.end() - 1}; }

SchoutenParams random_admissible(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < 0.5) return {-3.0 + 3.9 * u(rng), -1, n};
    return {n - 1 + 0.1 + 3.0 * u(rng), 1, n};
}

}  // namespace

TEST(ScalarCurvature, FlatZeroAndConstantShift) {
    const auto r = make_grid(0.0, 1.0, 21, UniformLaw{});
    for (double v : scalar_curvature_conformal(RadialProfile::sample(r, [](double) { return 0.0; }, 4), BaseGeometry::flat))
        EXPECT_EQ(v, 0.0);
    const auto rs = make_grid(0.1, 2.0, 21, UniformLaw{});
    const auto R = scalar_curvature_conformal(RadialProfile::sample(rs, [](double) { return 0.7; }, 4), BaseGeometry::sphere);
    for (double v : R) EXPECT_NEAR(v, std::exp(-1.4) * 12.0, 1e-10);
}

TEST(ScalarCurvature, PoincareBallIsHyperbolic) {
    for (int n : {3, 4, 5}) {
        double prev = 0.0;
        for (int nodes : {201, 401}) {
            const auto r = make_grid(0.0, 0.8, nodes, UniformLaw{});
            const auto R = scalar_curvature_conformal(RadialProfile::sample(r, PoincareProfile::value, n), BaseGeometry::flat);
            double err = 0.0;
            for (double v : interior(R)) err = std::max(err, std::abs(v + n * (n - 1.0)));
            if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.8);
            EXPECT_LT(err, 1e-2);
            prev = err;
        }
        const auto exact = scalar_curvature_conformal(PoincareProfile::jet(make_grid(0.0, 0.9, 31, UniformLaw{}), n),
                                                      BaseGeometry::flat);
        for (double v : exact) EXPECT_NEAR(v, -n * (n - 1.0), 1e-9);
    }
}

TEST(ScalarCurvature, TooFewNodes) {
    EXPECT_THROW((void)scalar_curvature_conformal(RadialProfile{{0.0, 1.0}, {0.0, 0.0}, 3}, BaseGeometry::flat),
                 discretization_error);
}

TEST(ModifiedSchouten, FlatZeroProfile) {
    const auto r = make_grid(0.0, 1.0, 11, UniformLaw{});
    const auto e = modified_schouten_eigen(RadialProfile::sample(r, [](double) { return 0.0; }, 4), {0.0, -1, 4},
                                           BaseGeometry::flat);
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_EQ(e.tangential[i], 0.0);
        EXPECT_EQ(e.radial[i], 0.0);
    }
}

TEST(ModifiedSchouten, LogProfileClosedFormExactJet) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ub(0.05, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + trial % 4;
        const auto p = random_admissible(rng, n);
        const LogProfile h{ub(rng)};
        const auto r = make_grid(0.0, 5.0, 41, UniformLaw{});
        const auto e = modified_schouten_eigen(h.jet(r, n), p, BaseGeometry::flat);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto [t, rad] = log_profile_schouten_closed_form(h.beta, p, r[i]);
            EXPECT_NEAR(e.tangential[i], t, 1e-12 * std::max(1.0, std::abs(t)));
            EXPECT_NEAR(e.radial[i], rad, 1e-12 * std::max(1.0, std::abs(rad)));
            EXPECT_NEAR(e.tilde_radial[i], std::exp(-2.0 * h.value(r[i])) * rad, 1e-12);
        }
    }
}

TEST(ModifiedSchouten, LogProfileDiscreteSecondOrder) {
    const SchoutenParams p{0.0, -1, 4};
    const LogProfile h{0.3};
    double prev = 0.0;
    for (int nodes : {101, 201, 401}) {
        const auto r = make_grid(0.0, 3.0, nodes, UniformLaw{});
        const auto e = modified_schouten_eigen(RadialProfile::sample(r, [&](double x) { return h.value(x); }, 4), p,
                                               BaseGeometry::flat);
        double err = 0.0;
        for (std::size_t i = 1; i + 1 < r.size(); ++i) {
            const auto [t, rad] = log_profile_schouten_closed_form(h.beta, p, r[i]);
            err = std::max({err, std::abs(e.tangential[i] - t), std::abs(e.radial[i] - rad)});
        }
        if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.9);
        prev = err;
    }
}

TEST(ModifiedSchouten, PoincareEinsteinEigenvalue) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 3;
        const auto p = random_admissible(rng, n);
        const auto e = modified_schouten_eigen(PoincareProfile::jet(make_grid(0.0, 0.95, 51, UniformLaw{}), n), p,
                                               BaseGeometry::flat);
        const double target = p.sign_quantity() / (2.0 * (n - 2));
        for (std::size_t i = 0; i < e.size(); ++i) {
            EXPECT_NEAR(e.tilde_tangential[i], target, 1e-11 * std::abs(target));
            EXPECT_NEAR(e.tilde_radial[i], target, 1e-11 * std::abs(target));
        }
    }
}

TEST(ModifiedSchouten, SpaceFormBases) {
    const auto r = make_grid(0.0, 2.0, 21, UniformLaw{});
    for (auto base : {BaseGeometry::sphere, BaseGeometry::hyperbolic}) {
        const SchoutenParams p{0.5, -1, 5};
        const auto e = modified_schouten_eigen(RadialProfile::sample(r, [](double) { return 0.0; }, 5), p, base);
        const double c = sectional_curvature(base);
        // A = alpha/(n-2)(Ric - tau R/(2(n-1)) g) with Ric = (n-1)c g and R = n(n-1)c
        const double expect = -1.0 / 3.0 * (4.0 * c - 0.5 * 20.0 * c / 8.0);
        for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e.radial[i], expect, 1e-14);
    }
    EXPECT_THROW((void)modified_schouten_eigen(RadialProfile::sample(make_grid(0.0, 3.5, 11, UniformLaw{}),
                                                                     [](double) { return 0.0; }, 5),
                                               SchoutenParams{0.5, -1, 5}, BaseGeometry::sphere),
                 domain_error);
    EXPECT_THROW((void)parse_base("torus"), domain_error);
}

TEST(ModifiedSchouten, ScaleInvariance) {
    const auto r = make_grid(0.0, 2.0, 41, UniformLaw{});
    const SchoutenParams p{3.7, 1, 4};
    const auto a = modified_schouten_eigen(RadialProfile::sample(r, [](double x) { return std::sin(x); }, 4), p,
                                           BaseGeometry::hyperbolic);
    const auto b = modified_schouten_eigen(RadialProfile::sample(r, [](double x) { return std::sin(x) + 0.8; }, 4), p,
                                           BaseGeometry::hyperbolic);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(a.tangential[i], b.tangential[i], 1e-10 * std::max(1.0, std::abs(a.tangential[i])));
        EXPECT_NEAR(b.tilde_tangential[i], std::exp(-1.6) * a.tilde_tangential[i], 1e-10);
        EXPECT_EQ(a.eigen(i).dim(), 4);
        EXPECT_EQ(a.eigen(i)[0], a.eigen(i)[2]);
    }
}

TEST(Ricci, WarpedProductOracle) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ur(0.1, 1.4);
    for (auto base : {BaseGeometry::flat, BaseGeometry::sphere, BaseGeometry::hyperbolic}) {
        for (int n : {3, 4, 6}) {
            auto u = [](double r) { return 0.3 * std::sin(r) + 0.2 * r * r; };
            auto du = [](double r) { return 0.3 * std::cos(r) + 0.4 * r; };
            auto d2u = [](double r) { return -0.3 * std::sin(r) + 0.4; };
            std::vector<double> radii;
            for (int i = 0; i < 10; ++i) radii.push_back(ur(rng));
            std::sort(radii.begin(), radii.end());
            const auto e = ricci_eigen(RadialJet::analytic(radii, u, du, d2u, n), base);
            for (std::size_t i = 0; i < radii.size(); ++i) {
                const double r = radii[i];
                double s = r, ds = 1.0, d2s = 0.0;
                if (base == BaseGeometry::sphere) s = std::sin(r), ds = std::cos(r), d2s = -std::sin(r);
                if (base == BaseGeometry::hyperbolic) s = std::sinh(r), ds = std::cosh(r), d2s = std::sinh(r);
                const auto ref = oracle::warped_minus_ricci(n, s, ds, d2s, u(r), du(r), d2u(r));
                EXPECT_NEAR(e.tangential[i], ref.tangential, 1e-11 * std::max(1.0, std::abs(ref.tangential)));
                EXPECT_NEAR(e.radial[i], ref.radial, 1e-11 * std::max(1.0, std::abs(ref.radial)));
            }
        }
    }
}

TEST(Ricci, LogProfileDisplay) {
    // the displayed values are those of -Ric/(n-2)
    const int n = 5;
    const LogProfile h{0.7};
    const auto r = make_grid(0.0, 4.0, 33, UniformLaw{});
    const auto e = ricci_eigen(h.jet(r, n), BaseGeometry::flat);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double w = 1.0 + r[i] * r[i];
        const double t = 2.0 * h.beta / (w * w) * (2.0 * (1.0 + h.beta) * r[i] * r[i] + (2.0 * n - 2.0) / (n - 2.0));
        const double rad = 4.0 * (n - 1) * h.beta / (w * w * (n - 2.0));
        EXPECT_NEAR(e.tangential[i] / (n - 2), t, 1e-13);
        EXPECT_NEAR(e.radial[i] / (n - 2), rad, 1e-13);
    }
}

TEST(Ricci, HyperbolicBaseAndSchoutenConsistency) {
    const auto r = make_grid(0.0, 2.0, 11, UniformLaw{});
    const auto e = ricci_eigen(RadialProfile::sample(r, [](double) { return 0.0; }, 4), BaseGeometry::hyperbolic);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(e.tangential[i], 3.0, 1e-14);
        EXPECT_NEAR(e.radial[i], 3.0, 1e-14);
    }
    const auto prof = RadialProfile::sample(r, [](double x) { return std::cos(x) * x; }, 4);
    for (auto base : {BaseGeometry::flat, BaseGeometry::sphere, BaseGeometry::hyperbolic}) {
        const auto ric = ricci_eigen(prof, base);
        const auto A = modified_schouten_eigen(prof, {0.0, -1, 4}, base);
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_NEAR(A.tangential[i], ric.tangential[i] / 2.0, 1e-12 * std::max(1.0, std::abs(A.tangential[i])));
            EXPECT_NEAR(A.radial[i], ric.radial[i] / 2.0, 1e-12 * std::max(1.0, std::abs(A.radial[i])));
        }
    }
}

TEST(TraceIdentity, ZeroAndRandomDraws) {
    const auto r = make_grid(0.0, 3.0, 31, UniformLaw{});
    for (double v : trace_identity_residual(RadialProfile::sample(r, [](double) { return 0.0; }, 3), {0.0, -1, 3},
                                            BaseGeometry::flat))
        EXPECT_EQ(v, 0.0);
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> ub(0.01, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + trial % 5;
        const auto p = random_admissible(rng, n);
        const LogProfile h{ub(rng)};
        const auto res = trace_identity_residual(h.jet(r, n), p, BaseGeometry::flat);
        for (double v : res) ASSERT_LE(v, 1e-10);
    }
    const auto hyp = trace_identity_residual(
        RadialProfile::sample(make_grid(0.0, 0.9, 101, UniformLaw{}), PoincareProfile::value, 4), {0.0, -1, 4},
        BaseGeometry::flat);
    for (double v : hyp) EXPECT_LE(v, 1e-9);
}
