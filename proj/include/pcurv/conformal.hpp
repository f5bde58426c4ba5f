#pragma once

// Conformal change g~ = e^{2u} g of a rotationally symmetric model metric:
// scalar curvature, Ricci and the modified Schouten tensor A^{tau,alpha}.

#include "pcurv/errors.hpp"
#include "pcurv/grid.hpp"
#include "pcurv/symfunc.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace pcurv {

/// Model background g = dr^2 + s(r)^2 g_{S^{n-1}} of constant sectional curvature.
enum class BaseGeometry { flat, sphere, hyperbolic };

[[nodiscard]] inline double sectional_curvature(BaseGeometry base) noexcept {
    switch (base) {
        case BaseGeometry::sphere: return 1.0;
        case BaseGeometry::hyperbolic: return -1.0;
        case BaseGeometry::flat: break;
    }
    return 0.0;
}

[[nodiscard]] inline std::string_view to_string(BaseGeometry base) noexcept {
    switch (base) {
        case BaseGeometry::sphere: return "sphere";
        case BaseGeometry::hyperbolic: return "hyperbolic";
        case BaseGeometry::flat: break;
    }
    return "flat";
}

[[nodiscard]] inline BaseGeometry parse_base(std::string_view name) {
    if (name == "flat") return BaseGeometry::flat;
    if (name == "sphere") return BaseGeometry::sphere;
    if (name == "hyperbolic") return BaseGeometry::hyperbolic;
    throw domain_error("unsupported base geometry '" + std::string(name) + "' (flat, sphere, hyperbolic)");
}

/// s'(r)/s(r) for the model warping function (1/r, cot r, coth r).
[[nodiscard]] inline double warp_log_derivative(BaseGeometry base, double r) {
    switch (base) {
        case BaseGeometry::sphere: return std::cos(r) / std::sin(r);
        case BaseGeometry::hyperbolic: return std::cosh(r) / std::sinh(r);
        case BaseGeometry::flat: break;
    }
    return 1.0 / r;
}

/// Tangential Hessian eigenvalue u' s'/s of a radial function; u''(0) at the origin.
[[nodiscard]] inline double tangential_hessian(BaseGeometry base, double r, double du, double d2u) {
    return r == 0.0 ? d2u : du * warp_log_derivative(base, r);
}

/// Radial conformal factor sampled on a grid.
struct RadialProfile {
    std::vector<double> radii;
    std::vector<double> u;
    int n = 3;

    [[nodiscard]] std::size_t size() const noexcept { return radii.size(); }

    void validate() const {
        if (n < 2) throw domain_error("profile dimension must be >= 2");
        if (radii.size() != u.size()) throw domain_error("profile radii and values differ in length");
        if (radii.size() < 3) throw discretization_error("profile needs at least 3 nodes");
        if (radii.front() < 0.0) throw domain_error("profile radii must be nonnegative");
        if (!strictly_increasing(radii)) throw domain_error("profile radii must be strictly increasing");
    }

    [[nodiscard]] static RadialProfile sample(std::vector<double> radii, const std::function<double(double)>& fn, int n) {
        std::vector<double> u(radii.size());
        for (std::size_t i = 0; i < radii.size(); ++i) u[i] = fn(radii[i]);
        return {std::move(radii), std::move(u), n};
    }
};

/// Values and first two radial derivatives at each node.
struct RadialJet {
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> d2u;
    int n = 3;

    [[nodiscard]] std::size_t size() const noexcept { return r.size(); }

    /// Finite-difference jet; the origin, when present, is a center of symmetry.
    [[nodiscard]] static RadialJet from_profile(const RadialProfile& p) {
        p.validate();
        auto d = differentiate(p.radii, p.u, p.radii.front() == 0.0);
        return {p.radii, p.u, std::move(d.d1), std::move(d.d2), p.n};
    }

    /// Exact jet from closed-form derivatives.
    [[nodiscard]] static RadialJet analytic(const std::vector<double>& radii, const std::function<double(double)>& u,
                                            const std::function<double(double)>& du,
                                            const std::function<double(double)>& d2u, int n) {
        RadialJet j{radii, {}, {}, {}, n};
        for (double r : radii) {
            j.u.push_back(u(r));
            j.du.push_back(du(r));
            j.d2u.push_back(d2u(r));
        }
        return j;
    }
};

namespace detail {

inline void check_base_range(BaseGeometry base, const std::vector<double>& radii) {
    if (base == BaseGeometry::sphere && !radii.empty() && !(radii.back() < std::numbers::pi))
        throw domain_error("sphere model requires radii below pi");
}

inline double laplacian(BaseGeometry base, int n, double r, double du, double d2u) {
    return d2u + (n - 1) * tangential_hessian(base, r, du, d2u);
}

}  // namespace detail

/// Modified Schouten tensor A^{tau,alpha} = alpha/(n-2) (Ric - tau R/(2(n-1)) g).
struct SchoutenParams {
    double tau = 0.0;
    int alpha = -1;
    int n = 3;

    void validate() const {
        if (n < 3) throw domain_error("modified Schouten tensor needs n >= 3");
        if (alpha != 1 && alpha != -1) throw domain_error("alpha must be +1 or -1");
    }

    /// alpha (n tau + 2 - 2n), positive under the sign condition.
    [[nodiscard]] double sign_quantity() const noexcept { return alpha * (n * tau + 2.0 - 2.0 * n); }

    /// Common eigenvalue of g^{-1} A for an Einstein metric with Ric = c (n-1) g.
    [[nodiscard]] double einstein_eigenvalue(double c) const noexcept {
        return alpha * c * (2.0 * (n - 1) - n * tau) / (2.0 * (n - 2));
    }

    /// Eigenvalue of g~^{-1} A for the hyperbolic metric (Ric = -(n-1) g~).
    [[nodiscard]] double hyperbolic_eigenvalue() const noexcept { return sign_quantity() / (2.0 * (n - 2)); }
};

/// Per-node eigenvalues of a radially symmetric symmetric 2-tensor: the
/// tangential value has multiplicity n-1, the radial value multiplicity 1.
/// `tangential`/`radial` are taken with respect to g, the `tilde_` versions with
/// respect to g~ = e^{2u} g.
struct PointwiseTensorEigen {
    int n = 3;
    std::vector<double> r;
    std::vector<double> tangential;
    std::vector<double> radial;
    std::vector<double> tilde_tangential;
    std::vector<double> tilde_radial;

    [[nodiscard]] std::size_t size() const noexcept { return r.size(); }
    [[nodiscard]] EigenTuple eigen(std::size_t i) const { return EigenTuple::radial(n, tangential[i], radial[i]); }
    [[nodiscard]] EigenTuple tilde_eigen(std::size_t i) const {
        return EigenTuple::radial(n, tilde_tangential[i], tilde_radial[i]);
    }

    void push(double ri, double t, double rad, double u) {
        const double w = std::exp(-2.0 * u);
        r.push_back(ri);
        tangential.push_back(t);
        radial.push_back(rad);
        tilde_tangential.push_back(w * t);
        tilde_radial.push_back(w * rad);
    }
};

/// R_{g~} = e^{-2u} (R_g - 2(n-1) Delta u - (n-1)(n-2) |du|^2).
[[nodiscard]] inline std::vector<double> scalar_curvature_conformal(const RadialJet& jet, BaseGeometry base) {
    detail::check_base_range(base, jet.r);
    const int n = jet.n;
    const double Rg = n * (n - 1) * sectional_curvature(base);
    std::vector<double> out(jet.size());
    for (std::size_t i = 0; i < jet.size(); ++i) {
        const double lap = detail::laplacian(base, n, jet.r[i], jet.du[i], jet.d2u[i]);
        out[i] = std::exp(-2.0 * jet.u[i]) *
                 (Rg - 2.0 * (n - 1) * lap - (n - 1.0) * (n - 2.0) * jet.du[i] * jet.du[i]);
    }
    return out;
}

[[nodiscard]] inline std::vector<double> scalar_curvature_conformal(const RadialProfile& profile, BaseGeometry base) {
    return scalar_curvature_conformal(RadialJet::from_profile(profile), base);
}

/// Eigenvalues of A^{tau,alpha}_{g~} from
/// A_{g~} = A_g + alpha(tau-1)/(n-2) Delta u g - alpha Hess u + alpha(tau-2)/2 |du|^2 g + alpha du (x) du.
[[nodiscard]] inline PointwiseTensorEigen modified_schouten_eigen(const RadialJet& jet, const SchoutenParams& params,
                                                                  BaseGeometry base) {
    params.validate();
    if (jet.n != params.n) throw domain_error("profile and Schouten parameters disagree on n");
    detail::check_base_range(base, jet.r);
    const int n = params.n;
    const double alpha = params.alpha;
    const double tau = params.tau;
    const double A0 = params.einstein_eigenvalue(sectional_curvature(base));
    PointwiseTensorEigen out{n, {}, {}, {}, {}, {}};
    for (std::size_t i = 0; i < jet.size(); ++i) {
        const double du = jet.du[i], d2u = jet.d2u[i];
        const double ht = tangential_hessian(base, jet.r[i], du, d2u);
        const double lap = d2u + (n - 1) * ht;
        const double common = A0 + alpha * (tau - 1.0) / (n - 2) * lap + alpha * (tau - 2.0) / 2.0 * du * du;
        out.push(jet.r[i], common - alpha * ht, common - alpha * d2u + alpha * du * du, jet.u[i]);
    }
    return out;
}

[[nodiscard]] inline PointwiseTensorEigen modified_schouten_eigen(const RadialProfile& profile,
                                                                  const SchoutenParams& params, BaseGeometry base) {
    return modified_schouten_eigen(RadialJet::from_profile(profile), params, base);
}

/// Eigenvalues of -Ric_{g~} from
/// Ric_{g~} = Ric_g - Delta u g - (n-2) Hess u - (n-2)|du|^2 g + (n-2) du (x) du.
[[nodiscard]] inline PointwiseTensorEigen ricci_eigen(const RadialJet& jet, BaseGeometry base) {
    detail::check_base_range(base, jet.r);
    const int n = jet.n;
    const double ric0 = (n - 1) * sectional_curvature(base);
    PointwiseTensorEigen out{n, {}, {}, {}, {}, {}};
    for (std::size_t i = 0; i < jet.size(); ++i) {
        const double du = jet.du[i], d2u = jet.d2u[i];
        const double ht = tangential_hessian(base, jet.r[i], du, d2u);
        const double lap = d2u + (n - 1) * ht;
        out.push(jet.r[i], -ric0 + lap + (n - 2) * ht + (n - 2) * du * du, -ric0 + lap + (n - 2) * d2u, jet.u[i]);
    }
    return out;
}

[[nodiscard]] inline PointwiseTensorEigen ricci_eigen(const RadialProfile& profile, BaseGeometry base) {
    return ricci_eigen(RadialJet::from_profile(profile), base);
}

/// |tr(g^{-1} A_{g~}) - alpha(n tau + 2 - 2n)/(2(n-1)(n-2)) (2(n-1) Delta u + (n-1)(n-2)|du|^2 - R_g)|
/// per node. The left side comes from the eigenvalue path, the right side from
/// the scalar formula.
[[nodiscard]] inline std::vector<double> trace_identity_residual(const RadialJet& jet, const SchoutenParams& params,
                                                                 BaseGeometry base) {
    const auto eig = modified_schouten_eigen(jet, params, base);
    const int n = params.n;
    const double Rg = n * (n - 1) * sectional_curvature(base);
    const double coef = params.sign_quantity() / (2.0 * (n - 1) * (n - 2));
    std::vector<double> out(jet.size());
    for (std::size_t i = 0; i < jet.size(); ++i) {
        const double lap = detail::laplacian(base, n, jet.r[i], jet.du[i], jet.d2u[i]);
        const double rhs = coef * (2.0 * (n - 1) * lap + (n - 1.0) * (n - 2.0) * jet.du[i] * jet.du[i] - Rg);
        out[i] = std::abs((n - 1) * eig.tangential[i] + eig.radial[i] - rhs);
    }
    return out;
}

[[nodiscard]] inline std::vector<double> trace_identity_residual(const RadialProfile& profile,
                                                                 const SchoutenParams& params, BaseGeometry base) {
    return trace_identity_residual(RadialJet::from_profile(profile), params, base);
}

// ---------------------------------------------------------------------------
// Closed-form radial profiles on flat space
// ---------------------------------------------------------------------------

/// h = beta log(1 + r^2).
struct LogProfile {
    double beta = 1.0;
    [[nodiscard]] double value(double r) const { return beta * std::log1p(r * r); }
    [[nodiscard]] double d1(double r) const { return 2.0 * beta * r / (1.0 + r * r); }
    [[nodiscard]] double d2(double r) const { return 2.0 * beta * (1.0 - r * r) / ((1.0 + r * r) * (1.0 + r * r)); }
    [[nodiscard]] RadialJet jet(const std::vector<double>& radii, int n) const {
        return RadialJet::analytic(
            radii, [this](double r) { return value(r); }, [this](double r) { return d1(r); },
            [this](double r) { return d2(r); }, n);
    }
};

/// Hyperbolic metric on the unit ball: u* = log(2 / (1 - r^2)).
struct PoincareProfile {
    [[nodiscard]] static double value(double r) { return std::log(2.0 / (1.0 - r * r)); }
    [[nodiscard]] static double d1(double r) { return 2.0 * r / (1.0 - r * r); }
    [[nodiscard]] static double d2(double r) { return 2.0 * (1.0 + r * r) / ((1.0 - r * r) * (1.0 - r * r)); }
    [[nodiscard]] static RadialJet jet(const std::vector<double>& radii, int n) {
        return RadialJet::analytic(radii, value, d1, d2, n);
    }
};

/// Eigenvalues of g_0^{-1} A^{tau,alpha} for h = beta log(1+r^2) on flat space:
/// tangential = 2 alpha beta/(1+r^2)^2 ((tau-2)(1+beta) r^2 + (n(tau-2)+2)/(n-2)),
/// radial     = 2 alpha beta/(1+r^2)^2 (tau(1+beta) r^2 + (n(tau-2)+2)/(n-2)).
[[nodiscard]] inline std::pair<double, double> log_profile_schouten_closed_form(double beta,
                                                                               const SchoutenParams& p, double r) {
    const double r2 = r * r;
    const double pref = 2.0 * p.alpha * beta / ((1.0 + r2) * (1.0 + r2));
    const double K = (p.n * (p.tau - 2.0) + 2.0) / (p.n - 2.0);
    return {pref * ((p.tau - 2.0) * (1.0 + beta) * r2 + K), pref * (p.tau * (1.0 + beta) * r2 + K)};
}

}  // namespace pcurv
