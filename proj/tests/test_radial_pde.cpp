#include "pcurv/radial_pde.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pcurv;

namespace {

EquationParams ricci_params(int n, int k) {
    return EquationParams::from_schouten({0.0, -1, n}, CurvatureOperator::sigma_root(n, k));
}

/// psi that makes `u0` an exact discrete solution on `radii`.
Psi manufacture(const RadialProfile& u0, const EquationParams& p) {
    const auto eig = assemble_V_eigen(u0, p);
    std::vector<double> vals(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) {
        const auto lam = eig.eigen(i);
        // boundary nodes only need a positive placeholder
        const double f = in_cone(lam, p.op.cone).inside ? f_eval(p.op, lam) : 1.0;
        vals[i] = f * std::exp(-2.0 * p.gamma * u0.u[i]) / p.rhs_scale;
    }
    return PsiTabulated(u0.radii, vals);
}

}  // namespace

TEST(AssembleV, QuadraticProfileFlat) {
    EquationParams p;
    p.op = CurvatureOperator::quotient(4, 2, 0);
    const auto r = make_grid(0.0, 1.0, 21, UniformLaw{});
    const auto e = assemble_V_eigen(RadialProfile::sample(r, [](double x) { return 0.5 * x * x; }, 4), p);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(e.tangential[i], 4.0, 1e-11);
        EXPECT_NEAR(e.radial[i], 4.0, 1e-11);
    }
}

TEST(AssembleV, ConstantProfileGivesBackground) {
    auto p = EquationParams::from_schouten({0.3, -1, 4}, CurvatureOperator::sigma_root(4, 2), BaseGeometry::hyperbolic);
    const auto e = assemble_V_eigen(
        RadialProfile::sample(make_grid(0.0, 1.0, 11, UniformLaw{}), [](double) { return 2.0; }, 4), p);
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_NEAR(e.tangential[i], p.A_t, 1e-11);
        EXPECT_NEAR(e.radial[i], p.A_r, 1e-11);
    }
}

TEST(AssembleV, SchoutenSpecializationMatchesConformal) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 4;
        const SchoutenParams sp = u(rng) < 0.5 ? SchoutenParams{-2.0 + 2.9 * u(rng), -1, n}
                                               : SchoutenParams{n - 0.5 + 2.0 * u(rng), 1, n};
        const auto base = static_cast<BaseGeometry>(trial % 3);
        const auto p = EquationParams::from_schouten(sp, CurvatureOperator::quotient(n, 1, 0), base);
        const LogProfile h{0.1 + u(rng)};
        const auto jet = h.jet(make_grid(0.0, 2.5, 31, UniformLaw{}), n);
        const auto V = assemble_V_eigen(jet, p);
        const auto A = modified_schouten_eigen(jet, sp, base);
        const double s = EquationParams::schouten_scale(sp);
        for (std::size_t i = 0; i < jet.size(); ++i) {
            EXPECT_NEAR(s * V.tangential[i], A.tangential[i], 1e-12 * std::max(1.0, std::abs(A.tangential[i])));
            EXPECT_NEAR(s * V.radial[i], A.radial[i], 1e-12 * std::max(1.0, std::abs(A.radial[i])));
        }
    }
}

TEST(Params, ValidationGates) {
    EXPECT_THROW((void)EquationParams::from_schouten({1.5, -1, 4}, CurvatureOperator::sigma_root(4, 2)), parameter_error);
    // alpha = 1 below the ellipticity threshold: rho too large for Gamma_4
    const auto bad = EquationParams::from_schouten({1.5, 1, 4}, CurvatureOperator::sigma_root(4, 4));
    EXPECT_THROW(bad.validate(), parameter_error);
    const auto good = EquationParams::from_schouten({3.5, 1, 4}, CurvatureOperator::sigma_root(4, 4));
    EXPECT_NO_THROW(good.validate());
    EXPECT_GT(good.ellipticity_theta(), 0.0);
    auto g = ricci_params(4, 2);
    g.gamma = 0.5;
    EXPECT_THROW(g.validate(), parameter_error);
    EXPECT_EQ(ricci_params(4, 2).ellipticity_theta(), 1.0);
    EXPECT_TRUE(ricci_params(4, 2).barrier_beta().has_value());
}

TEST(Psi, KindsAndErrors) {
    EXPECT_DOUBLE_EQ(psi_at(PsiConstant{2.0}, 5.0), 2.0);
    EXPECT_DOUBLE_EQ(psi_at(PsiRationalDecay{3.0, 1.25}, 1.0), 3.0 * std::pow(2.0, -1.25));
    const PsiTabulated t({0.0, 0.5, 1.0, 1.5}, {1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(psi_at(t, 0.5), 2.0);
    EXPECT_THROW((void)psi_at(t, 1.6), domain_error);
    EXPECT_THROW((void)psi_at(PsiConstant{-1.0}, 0.0), domain_error);
}

TEST(Residual, ManufacturedIsZero) {
    const auto p = ricci_params(4, 2);
    const auto r = make_grid(0.0, 1.0, 101, ClusteredLaw{});
    const auto u0 = RadialProfile::sample(r, [](double x) { return 0.3 * std::log1p(2.0 * x * x) - 0.2; }, 4);
    DirichletSpec spec{Ball{1.0}, u0.u.back(), 0.0, manufacture(u0, p), {101, ClusteredLaw{}}};
    const auto F = residual(u0, p, spec);
    for (double v : F) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(Residual, HyperbolicSecondOrder) {
    const SchoutenParams sp{0.0, -1, 3};
    const auto p = EquationParams::from_schouten(sp, CurvatureOperator::sigma_root(3, 2));
    double prev = 0.0;
    for (int nodes : {401, 801}) {
        DirichletSpec spec{Ball{0.9}, PoincareProfile::value(0.9), 0.0, PsiConstant{sp.hyperbolic_eigenvalue()},
                           {nodes, UniformLaw{}}};
        const auto F = residual(RadialProfile::sample(spec.radii(), PoincareProfile::value, 3), p, spec);
        double err = 0.0;
        for (double v : F) err = std::max(err, std::abs(v));
        if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.9);
        prev = err;
    }
}

TEST(Residual, ZeroTensorIsInadmissible) {
    EquationParams p;
    p.op = CurvatureOperator::sigma_root(3, 2);
    DirichletSpec spec{Ball{1.0}, 0.5, 0.0, PsiConstant{1.0}, {21, UniformLaw{}}};
    try {
        (void)residual(RadialProfile::sample(spec.radii(), [](double) { return 0.5; }, 3), p, spec);
        FAIL();
    } catch (const admissibility_error& e) {
        EXPECT_EQ(e.node(), 0);
        EXPECT_EQ(e.index(), 1);
    }
}

TEST(Linearization, MatchesFiniteDifferences) {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 3 + trial % 3;
        const auto p = trial % 2 ? ricci_params(n, 2)
                                 : EquationParams::from_schouten({n + 0.5, 1, n}, CurvatureOperator::quotient(n, n, 1));
        DirichletSpec spec{trial < 3 ? Domain{Ball{1.2}} : Domain{Annulus{0.3, 1.2}}, 0.0, 0.0, PsiRationalDecay{1.0, 1.25},
                           {61, ClusteredLaw{}}};
        const auto u = RadialProfile::sample(spec.radii(), [](double x) { return 0.4 * std::log1p(x * x) + 0.1; }, n);
        const auto L = linearized_operator(u, p, spec);
        std::vector<double> v(u.size());
        for (double& x : v) x = g(rng);
        const auto Jv = L.system.apply(v);
        const double eps = 1e-8;
        auto shifted = [&](double s) {
            auto w = u;
            for (std::size_t i = 0; i < w.size(); ++i) w.u[i] += s * v[i];
            return residual(w, p, spec);
        };
        const auto Fp = shifted(eps), Fm = shifted(-eps);
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double fd = (Fp[i] - Fm[i]) / (2 * eps);
            scale = std::max(scale, std::abs(fd));
            err = std::max(err, std::abs(fd - Jv[i]));
        }
        EXPECT_LE(err, 1e-6 * scale) << trial;
        EXPECT_GE(L.min_principal_ratio, L.theta - 1e-12);
    }
}

TEST(Linearization, LinearOperatorIsLaplacian) {
    EquationParams p;
    p.op = CurvatureOperator::quotient(3, 1, 0);
    DirichletSpec spec{Annulus{0.5, 1.0}, 0.0, 0.0, PsiConstant{1.0}, {11, UniformLaw{}}};
    const auto u = RadialProfile::sample(spec.radii(), [](double x) { return x * x; }, 3);
    const auto L = linearized_operator(u, p, spec);
    const double h = 0.05;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double r = u.radii[i];
        // f = sigma_1 / 3 = (u'' + 2u'/r): stencil 1/h^2 (1,-2,1) + (2/r)(1/(2h))(-1,0,1), minus 2 e^{2u}
        EXPECT_NEAR(L.system.lower[i - 1], 1.0 / (h * h) - 1.0 / (r * h), 1e-8);
        EXPECT_NEAR(L.system.upper[i], 1.0 / (h * h) + 1.0 / (r * h), 1e-8);
        EXPECT_NEAR(L.system.diag[i], -2.0 / (h * h) - 2.0 * std::exp(2.0 * r * r), 1e-8);
    }
}

TEST(Newton, ManufacturedRecovery) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 3 + trial;
        const auto p = ricci_params(n, 1 + trial % (n - 1));
        const double beta = 0.2 + u(rng), s = 0.5 + u(rng), c0 = u(rng) - 0.5;
        DirichletSpec spec{Ball{1.0}, 0.0, 0.0, PsiConstant{}, {400, ClusteredLaw{}}};
        const auto u0 = RadialProfile::sample(spec.radii(), [&](double x) { return c0 + beta * std::log1p(s * x * x); }, n);
        spec.phi_outer = u0.u.back();
        spec.psi = manufacture(u0, p);
        const auto res = solve_dirichlet(p, spec);
        ASSERT_TRUE(res.report.converged);
        EXPECT_LE(max_abs_diff(res.profile.u, u0.u), 1e-8);
        for (double m : res.report.cone_margin_history) EXPECT_GT(m, 0.0);
        for (double e : res.report.ellipticity_history) EXPECT_GE(e, res.report.theta - 1e-12);
    }
}

TEST(Newton, PoincareBallSecondOrder) {
    const SchoutenParams sp{4.5, 1, 4};
    const auto p = EquationParams::from_schouten(sp, CurvatureOperator::quotient(4, 3, 1));
    std::vector<double> errs;
    for (int nodes : {200, 400}) {
        DirichletSpec spec{Ball{0.9}, PoincareProfile::value(0.9), 0.0, PsiConstant{sp.hyperbolic_eigenvalue()},
                           {nodes, UniformLaw{}}};
        const auto res = solve_dirichlet(p, spec);
        ASSERT_TRUE(res.report.converged);
        double err = 0.0;
        for (std::size_t i = 0; i < res.profile.size(); ++i)
            err = std::max(err, std::abs(res.profile.u[i] - PoincareProfile::value(res.profile.radii[i])));
        errs.push_back(err);
    }
    EXPECT_GT(std::log2(errs[0] / errs[1]), 1.9);
}

TEST(Newton, FineGridStopsAtRoundingFloor) {
    const SchoutenParams sp{4.5, 1, 4};
    const auto p = EquationParams::from_schouten(sp, CurvatureOperator::quotient(4, 3, 1));
    DirichletSpec spec{Ball{0.9}, PoincareProfile::value(0.9), 0.0, PsiConstant{sp.hyperbolic_eigenvalue()},
                       {800, UniformLaw{}}};
    const SolveTolerances tol;
    const auto res = solve_dirichlet(p, spec, tol);
    ASSERT_TRUE(res.report.converged);
    EXPECT_LT(res.report.iterations, 20);
    const auto F = residual(res.profile, p, spec);
    const auto lin = linearized_operator(res.profile, p, spec);
    for (std::size_t i = 0; i < F.size(); ++i)
        EXPECT_LE(std::abs(F[i]), std::max(tol.atol, tol.noise_factor * lin.noise_floor[i])) << i;
}

TEST(Newton, C0BoundsFromSubAndSuper) {
    // constant psi: shifted Poincare profiles are a sub/supersolution pair on a smaller ball
    const SchoutenParams sp{0.0, -1, 3};
    const auto p = EquationParams::from_schouten(sp, CurvatureOperator::sigma_root(3, 2));
    const double psi0 = sp.hyperbolic_eigenvalue();
    DirichletSpec spec{Ball{0.8}, PoincareProfile::value(0.8) + 0.1, 0.0, PsiConstant{psi0}, {201, ClusteredLaw{}}};
    const auto res = solve_dirichlet(p, spec);
    ASSERT_TRUE(res.report.converged);
    // w = u* (smaller boundary data, exact solution of the equation) and v = u* + 0.1 + log of the ratio
    const auto w = RadialProfile::sample(spec.radii(), PoincareProfile::value, 3);
    const auto v = RadialProfile::sample(spec.radii(), [](double r) { return PoincareProfile::value(r) + 0.1; }, 3);
    EXPECT_TRUE(compare_order(w, res.profile, p, spec, 1e-8).ordered);
    EXPECT_TRUE(compare_order(res.profile, v, p, spec, 1e-8).ordered);
    const auto rep = compare_order(res.profile, res.profile, p, spec);
    EXPECT_TRUE(rep.ordered);
    EXPECT_EQ(rep.worst_excess, 0.0);
}

TEST(Newton, AnnulusScalarAuxiliary) {
    // sigma_1 specialization on an annulus with the flat-space blow-up solution as data
    const int n = 4;
    const double R = 1.0;
    auto exact = [&](double r) { return std::log(2.0 * R / (R * R - r * r)) + 0.5 * std::log(n * (n - 1.0)); };
    const auto p = EquationParams::scalar_aux(n);
    DirichletSpec spec{Annulus{0.2, 0.9}, exact(0.9), exact(0.2), PsiConstant{1.0}, {301, ClusteredLaw{}}};
    const auto res = solve_dirichlet(p, spec);
    ASSERT_TRUE(res.report.converged);
    for (std::size_t i = 0; i < res.profile.size(); ++i)
        EXPECT_NEAR(res.profile.u[i], exact(res.profile.radii[i]), 5e-4);
}

TEST(Newton, InadmissibleInitialAndStall) {
    const auto p = ricci_params(3, 2);
    DirichletSpec spec{Ball{1.0}, 0.0, 0.0, PsiConstant{1.0}, {41, UniformLaw{}}};
    const auto flat = RadialProfile::sample(spec.radii(), [](double) { return 0.0; }, 3);
    EXPECT_THROW((void)newton_solve(flat, p, spec), admissibility_error);
    SolveTolerances tight;
    tight.min_step = 0.75;  // any damping counts as a stall
    tight.atol = 0.0;
    tight.noise_factor = 0.0;
    try {
        (void)solve_dirichlet(p, spec, tight);
        FAIL() << "expected stall";
    } catch (const stall_error& e) {
        EXPECT_FALSE(e.report().converged);
        EXPECT_FALSE(e.report().residual_history.empty());
    }
}

TEST(Grid, BoundaryLayerCount) {
    DirichletSpec spec{Annulus{1.0, 2.0}, 0.0, 0.0, PsiConstant{}, {201, ClusteredLaw{1.05, 8.0}}};
    const auto [inner, outer] = boundary_layer_nodes(spec.radii(), 0.01, false);
    EXPECT_GE(inner, 8);
    EXPECT_GE(outer, 8);
}
