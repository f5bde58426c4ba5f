#pragma once

// Radial Dirichlet problems for f(lambda(g^{-1} V[u])) = psi e^{2 gamma u} with
// V[u] = A + Delta u g - rho Hess u + a |du|^2 g + b du (x) du + c L(du),
// solved by damped Newton on a nonuniform grid.

#include "pcurv/conformal.hpp"
#include "pcurv/errors.hpp"
#include "pcurv/grid.hpp"
#include "pcurv/symfunc.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace pcurv {

/// Coefficients of V[u]. L(du) is modelled as u' times the fixed pair
/// (L_t, L_r) of tangential and radial eigenvalues. A is the background tensor,
/// assumed to have constant eigenvalues (A_t, A_r) on the model space.
struct EquationParams {
    double varrho = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double L_t = 0.0;
    double L_r = 0.0;
    double gamma = 1.0;
    CurvatureOperator op = CurvatureOperator::quotient(3, 1, 0);
    BaseGeometry base = BaseGeometry::flat;
    double A_t = 0.0;
    double A_r = 0.0;
    /// the equation solved is f(lambda(V)) = rhs_scale * psi * e^{2 gamma u}
    double rhs_scale = 1.0;
    std::optional<SchoutenParams> schouten;

    [[nodiscard]] int dim() const noexcept { return op.dim(); }

    /// A_{g~}^{tau,alpha} = s V[u] with s = alpha(tau-1)/(n-2), so that
    /// rho = (n-2)/(tau-1), a = (n-2)(tau-2)/(2(tau-1)), b = (n-2)/(tau-1), c = 0.
    /// psi keeps the units of f(lambda(g~^{-1} A_{g~})) = psi.
    [[nodiscard]] static EquationParams from_schouten(const SchoutenParams& p, const CurvatureOperator& op,
                                                      BaseGeometry base = BaseGeometry::flat) {
        p.validate();
        if (op.dim() != p.n) throw parameter_error("operator dimension differs from the Schouten dimension");
        const double s = schouten_scale(p);
        if (!(s > 0.0))
            throw parameter_error("alpha(tau-1) must be positive for the Schouten specialization (tau = " +
                                  std::to_string(p.tau) + ", alpha = " + std::to_string(p.alpha) + ")");
        const int n = p.n;
        EquationParams e;
        e.varrho = (n - 2) / (p.tau - 1.0);
        e.a = (n - 2) * (p.tau - 2.0) / (2.0 * (p.tau - 1.0));
        e.b = (n - 2) / (p.tau - 1.0);
        e.gamma = op.gamma;
        e.op = op;
        e.base = base;
        e.A_t = e.A_r = p.einstein_eigenvalue(sectional_curvature(base)) / s;
        e.rhs_scale = std::pow(s, -op.gamma);
        e.schouten = p;
        return e;
    }

    [[nodiscard]] static double schouten_scale(const SchoutenParams& p) {
        return p.alpha * (p.tau - 1.0) / (p.n - 2.0);
    }

    /// 2(n-1) Delta u + (n-1)(n-2)|du|^2 - R_g = psi e^{2u}, written as
    /// sigma_1(V)/n = psi e^{2u} / (2(n-1)) with a = (n-2)/2 and A = -R_g/(2(n-1)).
    [[nodiscard]] static EquationParams scalar_aux(int n, BaseGeometry base = BaseGeometry::flat) {
        if (n < 3) throw parameter_error("scalar curvature equation needs n >= 3");
        EquationParams e;
        e.a = (n - 2) / 2.0;
        e.op = CurvatureOperator::quotient(n, 1, 0);
        e.base = base;
        e.A_t = e.A_r = -n * (n - 1) * sectional_curvature(base) / (2.0 * (n - 1));
        e.rhs_scale = 1.0 / (2.0 * (n - 1));
        return e;
    }

    /// Ellipticity constant: 1 - rho(1 - kappa vartheta) for rho > 0, 1 otherwise.
    [[nodiscard]] double ellipticity_theta() const {
        if (!(varrho > 0.0)) return 1.0;
        const auto k = ellipticity_constants(op.cone);
        return 1.0 - varrho * (1.0 - k.kappa * k.vartheta);
    }

    /// First beta in 1, 1/2, ..., 2^-30, then 2, 4, ..., 2^30 with
    /// 1/beta + a > 0 and (b - rho/beta >= 0 or a + b + (1 - rho)/beta > 0).
    [[nodiscard]] std::optional<double> barrier_beta() const {
        auto ok = [this](double beta) {
            return 1.0 / beta + a > 0.0 && (b - varrho / beta >= 0.0 || a + b + (1.0 - varrho) / beta > 0.0);
        };
        for (int j = 0; j <= 30; ++j)
            if (ok(std::ldexp(1.0, -j))) return std::ldexp(1.0, -j);
        for (int j = 1; j <= 30; ++j)
            if (ok(std::ldexp(1.0, j))) return std::ldexp(1.0, j);
        return std::nullopt;
    }

    /// Structural checks: gamma matches the operator, the ellipticity
    /// hypothesis on rho holds, and some barrier exponent exists.
    void validate() const {
        op.validate();
        if (std::abs(gamma - op.gamma) > 1e-15)
            throw parameter_error("right-hand-side exponent gamma must equal the operator's homogeneity degree");
        if (!(rhs_scale > 0.0)) throw parameter_error("rhs_scale must be positive");
        if (schouten && schouten->n != dim()) throw parameter_error("Schouten dimension differs from operator");
        if (varrho >= dim()) throw parameter_error("rho must be below n");
        const double theta = ellipticity_theta();
        if (!(theta > 0.0))
            throw parameter_error("ellipticity hypothesis violated: rho = " + std::to_string(varrho) +
                                  " is not below 1/(1 - kappa vartheta) (theta = " + std::to_string(theta) + ")");
        if (!barrier_beta())
            throw parameter_error("no beta > 0 satisfies the collar barrier compatibility conditions");
    }
};

// ---------------------------------------------------------------------------
// Right-hand side and domains
// ---------------------------------------------------------------------------

struct PsiConstant {
    double value = 1.0;
};

/// Lambda2 (1 + r^2)^{-p}
struct PsiRationalDecay {
    double lambda2 = 1.0;
    double p = 1.0;
};

/// Values at given radii, monotone cubic between them; no extrapolation.
struct PsiTabulated {
    std::vector<double> r;
    std::vector<double> values;
    std::shared_ptr<const MonotoneInterpolant> interp;

    PsiTabulated(std::vector<double> radii, std::vector<double> vals) : r(std::move(radii)), values(std::move(vals)) {
        for (double v : values)
            if (!(v > 0.0)) throw domain_error("tabulated psi must be positive");
        interp = std::make_shared<const MonotoneInterpolant>(r, values);
    }
};

struct PsiFunction {
    std::function<double(double)> fn;
    std::string label = "function";
};

using Psi = std::variant<PsiConstant, PsiRationalDecay, PsiTabulated, PsiFunction>;

[[nodiscard]] inline double psi_at(const Psi& psi, double r) {
    double v = std::visit(
        [r](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PsiConstant>) {
                return p.value;
            } else if constexpr (std::is_same_v<T, PsiRationalDecay>) {
                return p.lambda2 * std::pow(1.0 + r * r, -p.p);
            } else if constexpr (std::is_same_v<T, PsiTabulated>) {
                // exact at the nodes; the interpolant rejects radii outside the table
                const auto it = std::lower_bound(p.r.begin(), p.r.end(), r);
                if (it != p.r.end() && *it == r) return p.values[static_cast<std::size_t>(it - p.r.begin())];
                return (*p.interp)(r);
            } else {
                return p.fn(r);
            }
        },
        psi);
    if (!(v > 0.0)) throw domain_error("psi must be positive (psi(" + std::to_string(r) + ") = " + std::to_string(v) + ")");
    return v;
}

struct Ball {
    double R = 1.0;
};

struct Annulus {
    double R0 = 0.5;
    double R1 = 1.0;
};

using Domain = std::variant<Ball, Annulus>;

struct GridSpec {
    int nodes = 201;
    GridLaw law = ClusteredLaw{};
};

struct DirichletSpec {
    Domain domain = Ball{};
    /// boundary value at the outer radius
    double phi_outer = 0.0;
    /// boundary value at the inner radius (annulus only)
    double phi_inner = 0.0;
    Psi psi = PsiConstant{};
    GridSpec grid{};

    [[nodiscard]] bool is_ball() const noexcept { return std::holds_alternative<Ball>(domain); }

    [[nodiscard]] std::pair<double, double> interval() const {
        if (const auto* b = std::get_if<Ball>(&domain)) return {0.0, b->R};
        const auto& an = std::get<Annulus>(domain);
        return {an.R0, an.R1};
    }

    void validate(BaseGeometry base) const {
        const auto [lo, hi] = interval();
        if (!(hi > lo) || lo < 0.0) throw validation_error("domain radii must satisfy 0 <= R0 < R1");
        if (base == BaseGeometry::sphere && !(hi < std::numbers::pi))
            throw validation_error("sphere model domains must stay below radius pi");
        if (grid.nodes < 5) throw validation_error("grid needs at least 5 nodes");
    }

    [[nodiscard]] std::vector<double> radii() const {
        const auto [lo, hi] = interval();
        return make_grid(lo, hi, grid.nodes, grid.law, ClusterEnds{!is_ball(), true});
    }
};

/// Number of nodes within distance delta of each Dirichlet boundary.
[[nodiscard]] inline std::pair<int, int> boundary_layer_nodes(const std::vector<double>& radii, double delta,
                                                              bool ball) {
    int inner = 0, outer = 0;
    for (double r : radii) {
        if (r - radii.front() <= delta) ++inner;
        if (radii.back() - r <= delta) ++outer;
    }
    return {ball ? std::numeric_limits<int>::max() : inner, outer};
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Tangential and radial eigenvalues of g^{-1} V[u] at one node.
[[nodiscard]] inline std::pair<double, double> V_eigen_at(const EquationParams& p, double r, double du, double d2u) {
    const int n = p.dim();
    const double ht = tangential_hessian(p.base, r, du, d2u);
    const double lap = d2u + (n - 1) * ht;
    const double du2 = du * du;
    return {p.A_t + lap - p.varrho * ht + p.a * du2 + p.c * p.L_t * du,
            p.A_r + lap - p.varrho * d2u + (p.a + p.b) * du2 + p.c * p.L_r * du};
}

[[nodiscard]] inline PointwiseTensorEigen assemble_V_eigen(const RadialJet& jet, const EquationParams& p) {
    if (jet.n != p.dim()) throw domain_error("profile dimension differs from the operator dimension");
    PointwiseTensorEigen out{p.dim(), {}, {}, {}, {}, {}};
    for (std::size_t i = 0; i < jet.size(); ++i) {
        const auto [t, rad] = V_eigen_at(p, jet.r[i], jet.du[i], jet.d2u[i]);
        out.push(jet.r[i], t, rad, jet.u[i]);
    }
    return out;
}

[[nodiscard]] inline PointwiseTensorEigen assemble_V_eigen(const RadialProfile& profile, const EquationParams& p) {
    return assemble_V_eigen(RadialJet::from_profile(profile), p);
}

namespace detail {

/// Index range of rows carrying the equation (all others are Dirichlet rows).
inline std::pair<std::size_t, std::size_t> equation_rows(const DirichletSpec& spec, std::size_t nodes) {
    return {spec.is_ball() ? 0 : 1, nodes - 1};
}

inline void check_profile(const RadialProfile& profile, const EquationParams& p, const DirichletSpec& spec) {
    profile.validate();
    if (profile.n != p.dim()) throw domain_error("profile dimension differs from the operator dimension");
    const auto [lo, hi] = spec.interval();
    if (std::abs(profile.radii.front() - lo) > 1e-12 * std::max(1.0, hi) ||
        std::abs(profile.radii.back() - hi) > 1e-12 * std::max(1.0, hi))
        throw domain_error("profile does not span the Dirichlet domain");
    if (spec.is_ball() && profile.radii.front() != 0.0) throw domain_error("ball profiles must start at r = 0");
}

}  // namespace detail

struct NodeState {
    EigenTuple lambda;
    double f = 0.0;
    double margin = 0.0;
};

/// Residual f(lambda_i) - rhs_scale psi(r_i) e^{2 gamma u_i} at equation rows and
/// u - phi at Dirichlet rows. Throws admissibility_error naming the first
/// equation node outside the cone.
[[nodiscard]] inline std::vector<double> residual(const RadialProfile& profile, const EquationParams& p,
                                                  const DirichletSpec& spec) {
    detail::check_profile(profile, p, spec);
    const auto jet = RadialJet::from_profile(profile);
    const std::size_t N = profile.size();
    std::vector<double> F(N);
    const auto [first, last] = detail::equation_rows(spec, N);
    if (!spec.is_ball()) F[0] = profile.u[0] - spec.phi_inner;
    F[N - 1] = profile.u[N - 1] - spec.phi_outer;
    for (std::size_t i = first; i < last; ++i) {
        const auto [t, rad] = V_eigen_at(p, jet.r[i], jet.du[i], jet.d2u[i]);
        const auto lam = EigenTuple::radial(p.dim(), t, rad);
        const auto m = in_cone(lam, p.op.cone);
        if (!m.inside)
            throw admissibility_error("residual: node " + std::to_string(i) + " (r = " + std::to_string(jet.r[i]) +
                                          ") is outside the cone",
                                      m.violated, static_cast<int>(i));
        F[i] = f_eval(p.op, lam) - p.rhs_scale * psi_at(spec.psi, jet.r[i]) * std::exp(2.0 * p.gamma * jet.u[i]);
    }
    return F;
}

struct TridiagonalSystem {
    std::vector<double> lower;  // size N-1, entry i couples row i+1 to column i
    std::vector<double> diag;   // size N
    std::vector<double> upper;  // size N-1, entry i couples row i to column i+1
    std::vector<double> rhs;    // -F

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    /// y = J x
    [[nodiscard]] std::vector<double> apply(const std::vector<double>& x) const {
        const std::size_t N = diag.size();
        std::vector<double> y(N);
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = diag[i] * x[i];
            if (i > 0) y[i] += lower[i - 1] * x[i - 1];
            if (i + 1 < N) y[i] += upper[i] * x[i + 1];
        }
        return y;
    }

    /// Solves J x = rhs with LAPACK's gtsv (partial pivoting).
    [[nodiscard]] std::vector<double> solve() const {
        auto dl = lower, d = diag, du = upper, b = rhs;
        const auto N = static_cast<lapack_int>(d.size());
        const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, N, 1, dl.data(), d.data(), du.data(), b.data(), N);
        if (info != 0) throw discretization_error("tridiagonal Jacobian is singular (gtsv info " + std::to_string(info) + ")");
        return b;
    }
};

struct Linearization {
    TridiagonalSystem system;
    /// lower bound on the ellipticity ratio
    double theta = 1.0;
    /// min over equation nodes and directions of (sum_j f_j - rho f_i) / sum_j f_j
    double min_principal_ratio = std::numeric_limits<double>::infinity();
    double min_cone_margin = std::numeric_limits<double>::infinity();
    /// per row, machine epsilon times the magnitude of the terms summed in F_i
    std::vector<double> noise_floor;
};

namespace detail {

inline Linearization linearize(const RadialProfile& profile, const EquationParams& p, const DirichletSpec& spec,
                               double theta) {
    if (!(theta > 0.0))
        throw parameter_error("ellipticity certificate theta = " + std::to_string(theta) + " is not positive");
    const auto jet = RadialJet::from_profile(profile);
    const auto st = derivative_stencils(profile.radii, spec.is_ball());
    const std::size_t N = profile.size();
    const int n = p.dim();
    Linearization L;
    L.theta = theta;
    auto& S = L.system;
    S.lower.assign(N - 1, 0.0);
    S.diag.assign(N, 0.0);
    S.upper.assign(N - 1, 0.0);
    S.rhs.assign(N, 0.0);
    L.noise_floor.assign(N, 0.0);
    auto add = [&](std::size_t row, std::size_t col, double v) {
        if (col == row) S.diag[row] += v;
        else if (col + 1 == row) S.lower[col] += v;
        else if (col == row + 1) S.upper[row] += v;
        else throw discretization_error("stencil exceeds the tridiagonal band");
    };
    if (!spec.is_ball()) {
        S.diag[0] = 1.0;
        S.rhs[0] = -(profile.u[0] - spec.phi_inner);
    }
    S.diag[N - 1] = 1.0;
    S.rhs[N - 1] = -(profile.u[N - 1] - spec.phi_outer);

    const auto [first, last] = equation_rows(spec, N);
    for (std::size_t i = first; i < last; ++i) {
        const double r = jet.r[i], du = jet.du[i];
        const auto [t, rad] = V_eigen_at(p, r, du, jet.d2u[i]);
        const auto lam = EigenTuple::radial(n, t, rad);
        if (!strictly_inside_normalized(lam, p.op.cone)) {
            const auto m = in_cone(lam, p.op.cone);
            throw admissibility_error("linearization: node " + std::to_string(i) + " is not strictly admissible",
                                      m.violated, static_cast<int>(i));
        }
        L.min_cone_margin = std::min(L.min_cone_margin, in_cone(lam, p.op.cone).margin);
        const auto g = f_gradient(p.op, lam);
        double Ft = 0.0;
        for (int j = 0; j + 1 < n; ++j) Ft += g[static_cast<std::size_t>(j)];
        const double Fr = g.back();
        const double total = Ft + Fr;
        L.min_principal_ratio =
            std::min({L.min_principal_ratio, (total - p.varrho * Fr) / total, (total - p.varrho * Ft / (n - 1)) / total});

        double c2 = 0.0, c1 = 0.0;
        if (r == 0.0) {
            c2 = (Ft + Fr) * (n - p.varrho);
        } else {
            const double q = warp_log_derivative(p.base, r);
            c2 = Ft + Fr * (1.0 - p.varrho);
            c1 = Ft * ((n - 1 - p.varrho) * q + 2.0 * p.a * du + p.c * p.L_t) +
                 Fr * ((n - 1) * q + 2.0 * (p.a + p.b) * du + p.c * p.L_r);
        }
        const auto& s = st[i];
        const double f = f_eval(p.op, lam);
        const double rhs_i = p.rhs_scale * psi_at(spec.psi, r) * std::exp(2.0 * p.gamma * jet.u[i]);
        double magnitude = std::abs(f) + rhs_i + total * (std::abs(p.A_t) + std::abs(p.A_r));
        for (std::size_t j = 0; j < s.d2.size(); ++j) {
            const double w = c2 * s.d2[j] + c1 * s.d1[j];
            add(i, static_cast<std::size_t>(s.first) + j, w);
            magnitude += std::abs(w * profile.u[static_cast<std::size_t>(s.first) + j]);
        }
        add(i, i, -2.0 * p.gamma * rhs_i);
        S.rhs[i] = -(f - rhs_i);
        L.noise_floor[i] = std::numeric_limits<double>::epsilon() * magnitude;
    }
    return L;
}

}  // namespace detail

/// Jacobian of `residual` at `profile` (tridiagonal), with the ellipticity data.
[[nodiscard]] inline Linearization linearized_operator(const RadialProfile& profile, const EquationParams& p,
                                                       const DirichletSpec& spec) {
    detail::check_profile(profile, p, spec);
    return detail::linearize(profile, p, spec, p.ellipticity_theta());
}

// ---------------------------------------------------------------------------
// Newton
// ---------------------------------------------------------------------------

struct SolveTolerances {
    double atol = 1e-10;
    /// rows also pass when |F_i| <= rtol * rhs_scale psi e^{2 gamma u_i}
    double rtol = 0.0;
    int max_iterations = 200;
    double armijo = 1e-4;
    double min_step = 1e-14;
    /// equation rows also pass when |F_i| is within this multiple of the
    /// row's floating-point noise floor (see Linearization::noise_floor)
    double noise_factor = 16.0;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> cone_margin_history;
    std::vector<double> damping_history;
    std::vector<double> ellipticity_history;
    double theta = 1.0;
    bool converged = false;
};

class stall_error : public error {
public:
    stall_error(const std::string& what, SolveReport report) : error(what), report_(std::move(report)) {}
    [[nodiscard]] const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

namespace detail {

struct Evaluation {
    std::vector<double> F;
    std::vector<double> rhs;  // rhs_scale psi e^{2 gamma u} at equation rows
    double norm = 0.0;        // sup |F|
    double margin = 0.0;      // min cone margin over equation nodes
    bool admissible = false;
};

inline std::vector<double> allowed_residual(const Evaluation& ev, const Linearization& lin, const SolveTolerances& tol) {
    std::vector<double> allowed(ev.F.size());
    for (std::size_t i = 0; i < ev.F.size(); ++i)
        allowed[i] = std::max(tol.atol + tol.rtol * ev.rhs[i], tol.noise_factor * lin.noise_floor[i]);
    return allowed;
}

inline bool within_tolerance(const Evaluation& ev, const std::vector<double>& allowed) {
    for (std::size_t i = 0; i < ev.F.size(); ++i)
        if (!(std::abs(ev.F[i]) <= allowed[i])) return false;
    return true;
}

/// Line-search merit max_i |F_i| / allowed_i, so rows already at their
/// rounding floor do not mask progress elsewhere; plain sup |F| when some row
/// has no tolerance.
inline double merit(const Evaluation& ev, const std::vector<double>& allowed) {
    if (*std::min_element(allowed.begin(), allowed.end()) <= 0.0) return ev.norm;
    double m = 0.0;
    for (std::size_t i = 0; i < ev.F.size(); ++i) m = std::max(m, std::abs(ev.F[i]) / allowed[i]);
    return m;
}

inline Evaluation evaluate(const RadialProfile& profile, const EquationParams& p, const DirichletSpec& spec) {
    Evaluation ev;
    const auto jet = RadialJet::from_profile(profile);
    const std::size_t N = profile.size();
    ev.F.assign(N, 0.0);
    ev.rhs.assign(N, 0.0);
    if (!spec.is_ball()) ev.F[0] = profile.u[0] - spec.phi_inner;
    ev.F[N - 1] = profile.u[N - 1] - spec.phi_outer;
    ev.margin = std::numeric_limits<double>::infinity();
    const auto [first, last] = equation_rows(spec, N);
    for (std::size_t i = first; i < last; ++i) {
        const auto [t, rad] = V_eigen_at(p, jet.r[i], jet.du[i], jet.d2u[i]);
        const auto lam = EigenTuple::radial(p.dim(), t, rad);
        if (!strictly_inside_normalized(lam, p.op.cone)) return ev;
        ev.margin = std::min(ev.margin, in_cone(lam, p.op.cone).margin);
        ev.rhs[i] = p.rhs_scale * psi_at(spec.psi, jet.r[i]) * std::exp(2.0 * p.gamma * jet.u[i]);
        ev.F[i] = f_eval(p.op, lam) - ev.rhs[i];
    }
    for (double v : ev.F) ev.norm = std::max(ev.norm, std::abs(v));
    ev.admissible = std::isfinite(ev.norm);
    return ev;
}

}  // namespace detail

struct SolveResult {
    RadialProfile profile;
    SolveReport report;
};

/// Damped Newton from an admissible initial profile. Boundary values are
/// imposed on the initial profile before the first iteration.
[[nodiscard]] inline SolveResult newton_solve(RadialProfile initial, const EquationParams& p,
                                              const DirichletSpec& spec, const SolveTolerances& tol = {}) {
    p.validate();
    spec.validate(p.base);
    detail::check_profile(initial, p, spec);
    if (!spec.is_ball()) initial.u.front() = spec.phi_inner;
    initial.u.back() = spec.phi_outer;

    SolveReport rep;
    rep.theta = p.ellipticity_theta();
    auto ev = detail::evaluate(initial, p, spec);
    if (!ev.admissible) {
        (void)residual(initial, p, spec);  // names the offending node
        throw admissibility_error("initial profile is not strictly admissible", 0);
    }
    RadialProfile u = std::move(initial);
    const std::size_t N = u.size();
    for (;;) {
        rep.residual_history.push_back(ev.norm);
        rep.cone_margin_history.push_back(ev.margin);
        const auto lin = detail::linearize(u, p, spec, rep.theta);
        rep.ellipticity_history.push_back(lin.min_principal_ratio);
        const auto allowed = detail::allowed_residual(ev, lin, tol);
        if (detail::within_tolerance(ev, allowed)) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= tol.max_iterations) break;
        const auto step = lin.system.solve();
        const double current = detail::merit(ev, allowed);
        double t = 1.0;
        for (;;) {
            RadialProfile trial = u;
            for (std::size_t i = 0; i < N; ++i) trial.u[i] += t * step[i];
            auto trial_ev = detail::evaluate(trial, p, spec);
            const double next = trial_ev.admissible ? detail::merit(trial_ev, allowed) : 0.0;
            if (trial_ev.admissible && next < current && next <= (1.0 - tol.armijo * t) * current) {
                u = std::move(trial);
                ev = std::move(trial_ev);
                break;
            }
            t *= 0.5;
            if (t < tol.min_step) {
                ++rep.iterations;
                rep.damping_history.push_back(t);
                throw stall_error("Newton line search stalled at residual " + std::to_string(ev.norm), std::move(rep));
            }
        }
        ++rep.iterations;
        rep.damping_history.push_back(t);
    }
    return {std::move(u), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Initial guesses and ordering
// ---------------------------------------------------------------------------

/// Constant c with f(A) = rhs_scale psi0 e^{2 gamma c}, when A has admissible
/// constant eigenvalues and psi is constant.
[[nodiscard]] inline std::optional<double> constant_solution(const EquationParams& p, const DirichletSpec& spec) {
    const auto* c = std::get_if<PsiConstant>(&spec.psi);
    if (!c) return std::nullopt;
    const auto lam = EigenTuple::radial(p.dim(), p.A_t, p.A_r);
    if (!strictly_inside_normalized(lam, p.op.cone)) return std::nullopt;
    return std::log(f_eval(p.op, lam) / (p.rhs_scale * c->value)) / (2.0 * p.gamma);
}

/// Admissible starting profile: phi + q (r^2 - R^2)/2 (ball) or the linear
/// interpolant of the boundary data plus q (r - R0)(r - R1)/2 (annulus), with
/// q scanned over powers of two and the smallest residual kept. Falls back to
/// the constant solution shifted to the data when that is admissible.
[[nodiscard]] inline RadialProfile initial_guess(const EquationParams& p, const DirichletSpec& spec) {
    const auto radii = spec.radii();
    const auto [lo, hi] = spec.interval();
    std::optional<RadialProfile> best;
    double best_norm = std::numeric_limits<double>::infinity();
    for (int e = -10; e <= 20; ++e) {
        const double q = std::ldexp(1.0, e);
        RadialProfile prof = RadialProfile::sample(
            radii,
            [&](double r) {
                if (spec.is_ball()) return spec.phi_outer + 0.5 * q * (r * r - hi * hi);
                const double lin = spec.phi_inner + (spec.phi_outer - spec.phi_inner) * (r - lo) / (hi - lo);
                return lin + 0.5 * q * (r - lo) * (r - hi);
            },
            p.dim());
        const auto ev = detail::evaluate(prof, p, spec);
        if (ev.admissible && ev.norm < best_norm) {
            best_norm = ev.norm;
            best = std::move(prof);
        }
    }
    if (best) return *best;
    if (const auto c = constant_solution(p, spec)) {
        auto prof = RadialProfile::sample(radii, [&](double) { return *c; }, p.dim());
        if (detail::evaluate(prof, p, spec).admissible) return prof;
    }
    throw admissibility_error("no admissible initial guess found; supply a subsolution", 0);
}

/// Builds the grid, picks an initial guess (or uses `initial`) and runs Newton.
[[nodiscard]] inline SolveResult solve_dirichlet(const EquationParams& p, const DirichletSpec& spec,
                                                 const SolveTolerances& tol = {},
                                                 std::optional<RadialProfile> initial = std::nullopt) {
    return newton_solve(initial ? std::move(*initial) : initial_guess(p, spec), p, spec, tol);
}

struct OrderReport {
    bool ordered = true;
    /// max_i (w_i - v_i)
    double worst_excess = -std::numeric_limits<double>::infinity();
    int worst_node = -1;
    /// informational: residual signs (min F[w] and max F[v] over equation rows) when admissible
    std::optional<double> w_min_residual;
    std::optional<double> v_max_residual;
};

/// Checks w <= v + tol at every node of a shared grid.
[[nodiscard]] inline OrderReport compare_order(const RadialProfile& w, const RadialProfile& v,
                                               const EquationParams& p, const DirichletSpec& spec,
                                               double tol = 1e-8) {
    if (w.radii != v.radii) throw domain_error("compare_order: profiles must share a grid");
    OrderReport rep;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w.u[i] - v.u[i];
        if (d > rep.worst_excess) {
            rep.worst_excess = d;
            rep.worst_node = static_cast<int>(i);
        }
    }
    rep.ordered = rep.worst_excess <= tol;
    const auto [first, last] = detail::equation_rows(spec, w.size());
    auto extreme = [&](const RadialProfile& prof, bool want_min) -> std::optional<double> {
        try {
            const auto F = residual(prof, p, spec);
            double m = want_min ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            for (std::size_t i = first; i < last; ++i) m = want_min ? std::min(m, F[i]) : std::max(m, F[i]);
            return m;
        } catch (const admissibility_error&) {
            return std::nullopt;
        }
    };
    rep.w_min_residual = extreme(w, true);
    rep.v_max_residual = extreme(v, false);
    return rep;
}

}  // namespace pcurv
