#pragma once

// Exhaustion by concentric balls: Dirichlet problems on M_1 c M_2 c ... with
// subsolution boundary data, and the checks that bracket the monotone limit.

#include "pcurv/conformal.hpp"
#include "pcurv/errors.hpp"
#include "pcurv/grid.hpp"
#include "pcurv/radial_pde.hpp"
#include "pcurv/symfunc.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pcurv {

/// A Dirichlet sub-problem of the exhaustion failed.
class subproblem_error : public error {
public:
    subproblem_error(const std::string& what, int k) : error(what), k_(k) {}
    /// 1-based index of the failing ball
    [[nodiscard]] int index() const noexcept { return k_; }

private:
    int k_;
};

/// f(lambda(V[h])) / (rhs_scale psi e^{2 gamma h}) at r for the closed-form
/// profile h; zero when V[h] leaves the cone. A value >= Lambda means h is a
/// subsolution of the equation with psi replaced by Lambda psi.
[[nodiscard]] inline double subsolution_ratio(const EquationParams& p, const LogProfile& h, const Psi& psi, double r) {
    const auto [t, rad] = V_eigen_at(p, r, h.d1(r), h.d2(r));
    const auto lam = EigenTuple::radial(p.dim(), t, rad);
    if (!in_cone(lam, p.op.cone).inside) return 0.0;
    return f_eval(p.op, lam) / (p.rhs_scale * psi_at(psi, r) * std::exp(2.0 * p.gamma * h.value(r)));
}

/// Lambda_1 = inf subsolution_ratio over r = 0 and `nodes` log-spaced radii in [1e-4, r_max].
[[nodiscard]] inline double measure_lambda1(const EquationParams& p, const LogProfile& h, const Psi& psi,
                                            double r_max, int nodes = 4001) {
    double lam1 = subsolution_ratio(p, h, psi, 0.0);
    const double lo = std::log(1e-4), hi = std::log(r_max);
    for (int i = 0; i < nodes; ++i)
        lam1 = std::min(lam1, subsolution_ratio(p, h, psi, std::exp(lo + (hi - lo) * i / (nodes - 1))));
    return lam1;
}

struct ExhaustionSpec {
    EquationParams params;
    /// R_1 < R_2 < ... < R_K
    std::vector<double> radii;
    /// the subsolution u_ = beta log(1 + r^2)
    LogProfile subsolution{0.125};
    Psi psi = PsiConstant{};
    /// uniform nodes on [0, R_1]; this is also the common evaluation grid
    int core_nodes = 401;
    /// geometric spacing in each shell (R_{k-1}, R_k], per unit of log r
    int nodes_per_efold = 400;
    /// convergence threshold for sup |u_{k+1} - u_k| on the common grid
    double ctol = 1e-6;
    /// shift u_ by min(0, log Lambda_1)/2 so that it is a subsolution itself
    bool normalize = true;
    /// measured by measure_lambda1 on [0, max(R_K, lambda1_radius)] when unset
    std::optional<double> lambda1;
    double lambda1_radius = 1e6;
    SolveTolerances tol{.atol = 1e-13, .rtol = 1e-10};
    /// sub-problems solved concurrently (results do not depend on this)
    int parallel = 1;

    void validate() const {
        params.validate();
        if (params.base != BaseGeometry::flat) throw validation_error("exhaustion runs on flat space");
        if (radii.empty()) throw validation_error("exhaustion needs at least one radius");
        if (!(radii.front() > 0.0)) throw validation_error("exhaustion radii must be positive");
        if (!strictly_increasing(radii)) throw validation_error("exhaustion radii must be strictly increasing");
        if (core_nodes < 5) throw validation_error("core_nodes must be at least 5");
        if (nodes_per_efold < 4) throw validation_error("nodes_per_efold must be at least 4");
        if (!(ctol > 0.0)) throw validation_error("ctol must be positive");
        if (!(subsolution.beta > 0.0)) throw validation_error("subsolution beta must be positive");
        if (lambda1 && !(*lambda1 > 0.0)) throw validation_error("Lambda_1 must be positive");
        if (parallel < 1) throw validation_error("parallel must be at least 1");
    }
};

/// Nested grid: uniform on [0, R_1], geometric on each shell. `ends[k]` is the
/// index of R_{k+1}, so the grid of M_k is the prefix up to ends[k-1].
struct NestedGrid {
    std::vector<double> r;
    std::vector<std::size_t> ends;
};

[[nodiscard]] inline NestedGrid nested_grid(const std::vector<double>& radii, int core_nodes, int nodes_per_efold) {
    NestedGrid g;
    g.r = make_grid(0.0, radii.front(), core_nodes, UniformLaw{});
    g.ends.push_back(g.r.size() - 1);
    for (std::size_t k = 1; k < radii.size(); ++k) {
        const double lo = radii[k - 1], hi = radii[k];
        const int m = std::max(2, static_cast<int>(std::ceil(std::log(hi / lo) * nodes_per_efold)));
        for (int j = 1; j < m; ++j) g.r.push_back(lo * std::pow(hi / lo, static_cast<double>(j) / m));
        g.r.push_back(hi);
        g.ends.push_back(g.r.size() - 1);
    }
    return g;
}

struct ExhaustionResult {
    NestedGrid grid;
    /// u_k on the grid of M_k
    std::vector<RadialProfile> profiles;
    std::vector<SolveReport> reports;
    /// Lambda_1 of the supplied subsolution and the shift applied to it
    double lambda1 = 1.0;
    double shift = 0.0;
    /// sup over the common grid of |u_{k+1} - u_k|
    std::vector<double> increments;
    bool converged = false;

    [[nodiscard]] std::size_t levels() const noexcept { return profiles.size(); }
    [[nodiscard]] std::size_t common_size() const noexcept { return grid.ends.front() + 1; }
    /// radii of the common evaluation grid [0, R_1]
    [[nodiscard]] std::vector<double> common_radii() const {
        return {grid.r.begin(), grid.r.begin() + static_cast<std::ptrdiff_t>(common_size())};
    }
    /// u_k restricted to the common grid (k is 0-based)
    [[nodiscard]] std::vector<double> on_common(std::size_t k) const {
        const auto& u = profiles.at(k).u;
        return {u.begin(), u.begin() + static_cast<std::ptrdiff_t>(common_size())};
    }
    /// the last iterate, the estimate of u_infinity
    [[nodiscard]] const RadialProfile& limit() const { return profiles.back(); }
};

/// Boundary data of the approximate problems: u_ + shift.
[[nodiscard]] inline double exhaustion_data(const ExhaustionSpec& spec, double shift, double r) {
    return spec.subsolution.value(r) + shift;
}

[[nodiscard]] inline ExhaustionResult run_exhaustion(const ExhaustionSpec& spec) {
    spec.validate();
    ExhaustionResult res;
    res.lambda1 = spec.lambda1 ? *spec.lambda1
                               : measure_lambda1(spec.params, spec.subsolution, spec.psi,
                                                 std::max(spec.radii.back(), spec.lambda1_radius));
    if (!(res.lambda1 > 0.0))
        throw validation_error("subsolution is not admissible (Lambda_1 = " + std::to_string(res.lambda1) + ")");
    res.shift = spec.normalize ? 0.5 * std::min(0.0, std::log(res.lambda1)) / spec.params.gamma : 0.0;
    res.grid = nested_grid(spec.radii, spec.core_nodes, spec.nodes_per_efold);

    const std::size_t K = spec.radii.size();
    auto solve_one = [&](std::size_t k) -> SolveResult {
        const std::size_t N = res.grid.ends[k] + 1;
        std::vector<double> r(res.grid.r.begin(), res.grid.r.begin() + static_cast<std::ptrdiff_t>(N));
        const double R = spec.radii[k];
        DirichletSpec ds{Ball{R}, exhaustion_data(spec, res.shift, R), 0.0, spec.psi,
                         GridSpec{static_cast<int>(N), UniformLaw{}}};
        auto init = RadialProfile::sample(std::move(r), [&](double x) { return exhaustion_data(spec, res.shift, x); },
                                          spec.params.dim());
        try {
            return newton_solve(std::move(init), spec.params, ds, spec.tol);
        } catch (const std::exception& e) {
            throw subproblem_error("exhaustion ball " + std::to_string(k + 1) + " (R = " + std::to_string(R) +
                                       "): " + e.what(),
                                   static_cast<int>(k + 1));
        }
    };

    std::vector<SolveResult> solved;
    solved.reserve(K);
    for (std::size_t start = 0; start < K; start += static_cast<std::size_t>(spec.parallel)) {
        const std::size_t stop = std::min(K, start + static_cast<std::size_t>(spec.parallel));
        if (spec.parallel == 1) {
            solved.push_back(solve_one(start));
            continue;
        }
        std::vector<std::future<SolveResult>> batch;
        for (std::size_t k = start; k < stop; ++k) batch.push_back(std::async(std::launch::async, solve_one, k));
        for (auto& f : batch) solved.push_back(f.get());
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (!solved[k].report.converged)
            throw subproblem_error("exhaustion ball " + std::to_string(k + 1) + " did not converge",
                                   static_cast<int>(k + 1));
        res.profiles.push_back(std::move(solved[k].profile));
        res.reports.push_back(std::move(solved[k].report));
    }
    for (std::size_t k = 0; k + 1 < K; ++k) res.increments.push_back(max_abs_diff(res.on_common(k), res.on_common(k + 1)));
    res.converged = !res.increments.empty() && res.increments.back() <= spec.ctol;
    return res;
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// Outcome of a pointwise inequality check; `worst` is the largest violation
/// amount (negative when every node has slack).
struct BoundReport {
    bool pass = true;
    double worst = -std::numeric_limits<double>::infinity();
    /// 1-based level and node index of the worst case
    int level = 0;
    int node = -1;

    void record(double excess, int k, int i, double tol) {
        if (excess > worst) {
            worst = excess;
            level = k;
            node = i;
        }
        if (excess > tol) pass = false;
    }
};

/// u_k <= u_{k+1} + tol on the grid of M_k, for every consecutive pair.
[[nodiscard]] inline BoundReport check_monotone(const ExhaustionResult& res, double tol = 1e-6) {
    BoundReport rep;
    for (std::size_t k = 0; k + 1 < res.levels(); ++k) {
        const auto& a = res.profiles[k].u;
        const auto& b = res.profiles[k + 1].u;
        for (std::size_t i = 0; i < a.size(); ++i) rep.record(a[i] - b[i], static_cast<int>(k + 1), static_cast<int>(i), tol);
    }
    return rep;
}

/// u_k >= u_ + min(0, log Lambda_1)/(2 gamma) on M_k for every k.
[[nodiscard]] inline BoundReport check_lower_bound(const ExhaustionResult& res, const ExhaustionSpec& spec,
                                                   double tol = 1e-6) {
    BoundReport rep;
    const double c = 0.5 * std::min(0.0, std::log(res.lambda1)) / spec.params.gamma;
    for (std::size_t k = 0; k < res.levels(); ++k) {
        const auto& p = res.profiles[k];
        for (std::size_t i = 0; i < p.size(); ++i)
            rep.record(spec.subsolution.value(p.radii[i]) + c - p.u[i], static_cast<int>(k + 1), static_cast<int>(i), tol);
    }
    return rep;
}

/// Boundary blow-up solution of 2(n-1) Delta u + (n-1)(n-2)|du|^2 - R_g = e^{2u}
/// on the ball of radius R, approximated by Dirichlet data B - log R for each
/// level B and extrapolated in B.
struct AuxiliaryBlowup {
    double R = 1.0;
    std::vector<double> levels;
    std::vector<RadialProfile> by_level;
    /// Aitken's delta-squared over the last three levels where the increments
    /// contract, otherwise the last level
    RadialProfile extrapolated;
};

[[nodiscard]] inline AuxiliaryBlowup auxiliary_blowup(int n, double R, BaseGeometry base = BaseGeometry::flat,
                                                      std::vector<double> levels = {6.0, 8.0, 10.0},
                                                      GridSpec grid = {801, ClusteredLaw{1.05, 1000.0}}) {
    if (levels.empty() || !strictly_increasing(levels)) throw validation_error("blow-up levels must increase");
    const auto p = EquationParams::scalar_aux(n, base);
    AuxiliaryBlowup aux{R, levels, {}, {}};
    std::optional<RadialProfile> previous;
    for (double B : levels) {
        DirichletSpec spec{Ball{R}, B - std::log(R), 0.0, PsiConstant{1.0}, grid};
        std::optional<RadialProfile> init;
        if (previous) {
            init = *previous;
            init->u.back() = spec.phi_outer;
        }
        auto res = solve_dirichlet(p, spec, SolveTolerances{}, init);
        if (!res.report.converged) throw error("auxiliary blow-up solve did not converge at level " + std::to_string(B));
        previous = res.profile;
        aux.by_level.push_back(std::move(res.profile));
    }
    aux.extrapolated = aux.by_level.back();
    if (levels.size() >= 3) {
        const auto& x0 = aux.by_level[levels.size() - 3].u;
        const auto& x1 = aux.by_level[levels.size() - 2].u;
        const auto& x2 = aux.by_level.back().u;
        for (std::size_t i = 0; i < x2.size(); ++i) {
            const double d1 = x1[i] - x0[i], d2 = x2[i] - x1[i];
            // the interior converges geometrically in B; near the boundary the increments do not contract
            if (d1 > 0.0 && d2 > 0.0 && d2 < 0.2 * d1) aux.extrapolated.u[i] = x2[i] + d2 * d2 / (d1 - d2);
        }
    }
    return aux;
}

/// log(alpha(n tau + 2 - 2n) / (2n(n-1)(n-2) inf psi)) / 2.
[[nodiscard]] inline double envelope_constant(const SchoutenParams& s, double inf_psi) {
    return 0.5 * std::log(s.sign_quantity() / (2.0 * s.n * (s.n - 1.0) * (s.n - 2.0) * inf_psi));
}

struct EnvelopeReport {
    BoundReport monotone;
    BoundReport envelope;
    [[nodiscard]] bool pass() const noexcept { return monotone.pass && envelope.pass; }
};

/// u_k <= u_{k+1} and u_k <= u~_m + envelope_constant on M_m for all k >= m,
/// where aux[m-1] is the blow-up solution on M_m.
[[nodiscard]] inline EnvelopeReport check_monotone_upper(const ExhaustionResult& res, const ExhaustionSpec& spec,
                                                         const std::vector<AuxiliaryBlowup>& aux, double tol = 1e-6) {
    if (!spec.params.schouten) throw validation_error("the upper envelope needs the Schouten specialization");
    if (aux.size() > res.levels()) throw validation_error("more blow-up solutions than exhaustion levels");
    EnvelopeReport rep{check_monotone(res, tol), {}};
    for (std::size_t m = 0; m < aux.size(); ++m) {
        const auto& ref = res.profiles[m];
        double inf_psi = std::numeric_limits<double>::infinity();
        for (double r : ref.radii) inf_psi = std::min(inf_psi, psi_at(spec.psi, r));
        const double C = envelope_constant(*spec.params.schouten, inf_psi);
        const auto& ex = aux[m].extrapolated;
        if (std::abs(ex.radii.back() - ref.radii.back()) > 1e-12 * ref.radii.back())
            throw validation_error("blow-up solution " + std::to_string(m + 1) + " is not on M_" + std::to_string(m + 1));
        const MonotoneInterpolant top(ex.radii, ex.u);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const double bound = top(std::min(ref.radii[i], ex.radii.back())) + C;
            for (std::size_t k = m; k < res.levels(); ++k)
                rep.envelope.record(res.profiles[k].u[i] - bound, static_cast<int>(k + 1), static_cast<int>(i), tol);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Completeness
// ---------------------------------------------------------------------------

struct CompletenessReport {
    bool complete = false;
    /// bounded domains: C = -inf(u + log rho) over the whole collar
    std::optional<double> C;
    /// per level: min of u + log rho over the new part of the collar
    std::vector<double> collar_minima;
    /// outer radius of the integration range per level
    std::vector<double> level_radii;
    /// int_0^{level radius} e^u dr
    std::vector<double> lengths;
    /// lengths[j+1] / lengths[j]
    std::vector<double> growth;
};

namespace detail {

inline void fill_growth(CompletenessReport& rep) {
    for (std::size_t j = 1; j < rep.lengths.size(); ++j) rep.growth.push_back(rep.lengths[j] / rep.lengths[j - 1]);
}

inline bool growth_ok(const CompletenessReport& rep, double min_growth) {
    if (rep.growth.empty()) return false;
    return std::all_of(rep.growth.begin(), rep.growth.end(), [&](double g) { return g >= min_growth; });
}

}  // namespace detail

/// Ball of radius R with rho = R - r. Level j integrates e^u up to gap
/// R factor^{-j}, j = 1..levels. Complete when every level adds at least
/// `min_growth - 1` of the length so far and u + log rho does not drift down by
/// more than log(factor)/2 from one level to the next.
[[nodiscard]] inline CompletenessReport check_completeness_ball(const std::function<double(double)>& u, double R,
                                                                double collar_lo = 0.5, int levels = 4,
                                                                double factor = 10.0, double min_growth = 1.1) {
    if (!(collar_lo > 0.0 && collar_lo < R)) throw validation_error("collar must start inside the ball");
    CompletenessReport rep;
    using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    // in s = log rho the integrand e^{u} rho is smooth up to the boundary
    auto piece = [&](double gap_hi, double gap_lo) {
        return quad::integrate([&](double s) { const double rho = std::exp(s); return std::exp(u(R - rho)) * rho; },
                               std::log(gap_lo), std::log(gap_hi), 15, 1e-13);
    };
    double length = quad::integrate([&](double r) { return std::exp(u(r)); }, 0.0, collar_lo, 15, 1e-13);
    double gap = R - collar_lo;
    double overall = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= levels; ++j) {
        const double next = R * std::pow(factor, -j);
        if (next < gap) length += piece(gap, next);
        double lo_min = std::numeric_limits<double>::infinity();
        const int samples = 200;
        const double a = std::log(std::min(gap, R - collar_lo)), b = std::log(next);
        for (int i = 0; i <= samples; ++i) {
            const double rho = std::exp(a + (b - a) * i / samples);
            lo_min = std::min(lo_min, u(R - rho) + std::log(rho));
        }
        overall = std::min(overall, lo_min);
        rep.collar_minima.push_back(lo_min);
        rep.level_radii.push_back(R - next);
        rep.lengths.push_back(length);
        gap = std::min(gap, next);
    }
    rep.C = -overall;
    detail::fill_growth(rep);
    bool bounded = true;
    for (std::size_t j = 1; j < rep.collar_minima.size(); ++j)
        if (rep.collar_minima[j] < rep.collar_minima[j - 1] - 0.5 * std::log(factor)) bounded = false;
    rep.complete = bounded && detail::growth_ok(rep, min_growth);
    return rep;
}

/// R^n: lengths int_0^{R_j} e^u dr of a sampled profile for each level radius
/// R_j (grid nodes of the profile); complete when each level grows by `min_growth`.
[[nodiscard]] inline CompletenessReport check_completeness_euclidean(const RadialProfile& u,
                                                                     const std::vector<double>& level_radii,
                                                                     double min_growth = 1.1) {
    u.validate();
    CompletenessReport rep;
    std::vector<double> e(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) e[i] = std::exp(u.u[i]);
    for (double R : level_radii) {
        const auto it = std::upper_bound(u.radii.begin(), u.radii.end(), R * (1.0 + 1e-12));
        const auto m = static_cast<std::size_t>(it - u.radii.begin());
        if (m < 2) throw validation_error("level radius below the second grid node");
        rep.level_radii.push_back(u.radii[m - 1]);
        rep.lengths.push_back(trapezoid(std::span(u.radii).first(m), std::span(e).first(m)));
    }
    detail::fill_growth(rep);
    rep.complete = detail::growth_ok(rep, min_growth);
    return rep;
}

}  // namespace pcurv
