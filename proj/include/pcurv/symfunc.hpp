#pragma once

// Elementary symmetric functions, Garding cones and the normalized
// (k,l)-quotient curvature operators defined on them.

#include "pcurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pcurv {

/// Ordered n-vector of real eigenvalues.
class EigenTuple {
public:
    EigenTuple() = default;
    explicit EigenTuple(std::vector<double> values) : values_(std::move(values)) {}
    EigenTuple(std::initializer_list<double> values) : values_(values) {}

    [[nodiscard]] static EigenTuple constant(int n, double value) {
        return EigenTuple(std::vector<double>(static_cast<std::size_t>(n), value));
    }

    /// Radial multiplicity pattern: `tangential` repeated n-1 times, then `radial`.
    [[nodiscard]] static EigenTuple radial(int n, double tangential, double radial) {
        std::vector<double> v(static_cast<std::size_t>(n), tangential);
        v.back() = radial;
        return EigenTuple(std::move(v));
    }

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] double& operator[](std::size_t i) { return values_[i]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& vec() const noexcept { return values_; }

    [[nodiscard]] EigenTuple sorted() const {
        auto v = values_;
        std::sort(v.begin(), v.end());
        return EigenTuple(std::move(v));
    }

    [[nodiscard]] double sup_norm() const noexcept {
        double m = 0.0;
        for (double x : values_) m = std::max(m, std::abs(x));
        return m;
    }

    [[nodiscard]] double sum() const noexcept {
        double s = 0.0;
        for (double x : values_) s += x;
        return s;
    }

    [[nodiscard]] EigenTuple scaled(double t) const {
        auto v = values_;
        for (double& x : v) x *= t;
        return EigenTuple(std::move(v));
    }

    friend bool operator==(const EigenTuple&, const EigenTuple&) = default;

private:
    std::vector<double> values_;
};

[[nodiscard]] inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(c);
}

/// sigma_0..sigma_kmax of `lam` by the product recurrence
/// prod_i (1 + lam_i t) = sum_j sigma_j t^j, truncated at degree kmax.
[[nodiscard]] inline std::vector<double> elementary_sigmas(std::span<const double> lam, int kmax) {
    std::vector<double> e(static_cast<std::size_t>(kmax) + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const int top = std::min<int>(kmax, static_cast<int>(i) + 1);
        for (int j = top; j >= 1; --j) e[j] += lam[i] * e[j - 1];
    }
    return e;
}

[[nodiscard]] inline double elementary_sigma(const EigenTuple& lam, int k) {
    if (k < 0 || k > lam.dim())
        throw domain_error("elementary_sigma: k=" + std::to_string(k) + " outside [0, " +
                           std::to_string(lam.dim()) + "]");
    return elementary_sigmas(lam.values(), k)[static_cast<std::size_t>(k)];
}

/// i-th entry is sigma_{k-1}(lam | i), the derivative of sigma_k in lam_i.
[[nodiscard]] inline std::vector<double> sigma_gradient(const EigenTuple& lam, int k) {
    const int n = lam.dim();
    if (k < 1 || k > n)
        throw domain_error("sigma_gradient: k=" + std::to_string(k) + " outside [1, " +
                           std::to_string(n) + "]");
    std::vector<double> grad(static_cast<std::size_t>(n));
    std::vector<double> rest;
    rest.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rest.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) rest.push_back(lam[static_cast<std::size_t>(j)]);
        grad[static_cast<std::size_t>(i)] = elementary_sigmas(rest, k - 1)[static_cast<std::size_t>(k - 1)];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Cones
// ---------------------------------------------------------------------------

/// mu_i = (sum_j lam_j - rho lam_i) / (n - rho), rho < 1, rho != 0.
struct RhoTransform {
    double rho;
};

/// mu_i = (1/(n-1)) sum_{j != i} lam_j.
struct AveragingTransform {};

using ConeTransform = std::variant<std::monostate, RhoTransform, AveragingTransform>;

/// Garding cone Gamma_k in R^n, optionally pulled back through a linear transform.
struct ConeSpec {
    int n = 0;
    int k = 0;
    ConeTransform transform{};

    [[nodiscard]] static ConeSpec garding(int n, int k) { return {n, k, std::monostate{}}; }
    [[nodiscard]] static ConeSpec rho_transformed(int n, int k, double rho) { return {n, k, RhoTransform{rho}}; }
    [[nodiscard]] static ConeSpec averaged(int n, int k) { return {n, k, AveragingTransform{}}; }

    [[nodiscard]] bool transformed() const noexcept {
        return !std::holds_alternative<std::monostate>(transform);
    }

    void validate() const {
        if (n < 2) throw domain_error("cone dimension must be >= 2");
        if (k < 1 || k > n) throw domain_error("cone index k must satisfy 1 <= k <= n");
        if (const auto* t = std::get_if<RhoTransform>(&transform)) {
            if (!(t->rho < 1.0) || t->rho == 0.0)
                throw domain_error("rho transform requires rho < 1 and rho != 0");
        }
    }
};

/// Slope of the linear transform: mu = (S 1 - rho lam)/(n - rho); averaging is rho = 1.
[[nodiscard]] inline std::optional<double> transform_rho(const ConeTransform& t) {
    if (const auto* r = std::get_if<RhoTransform>(&t)) return r->rho;
    if (std::holds_alternative<AveragingTransform>(t)) return 1.0;
    return std::nullopt;
}

[[nodiscard]] inline EigenTuple cone_transform_mu(const EigenTuple& lam, const ConeTransform& transform) {
    const auto rho = transform_rho(transform);
    if (!rho) return lam;
    if (std::holds_alternative<RhoTransform>(transform) && (!(*rho < 1.0) || *rho == 0.0))
        throw domain_error("rho transform requires rho < 1 and rho != 0");
    const int n = lam.dim();
    const double s = lam.sum();
    std::vector<double> mu(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        mu[static_cast<std::size_t>(i)] = (s - *rho * lam[static_cast<std::size_t>(i)]) / (n - *rho);
    return EigenTuple(std::move(mu));
}

struct ConeMembership {
    bool inside = false;
    /// min_j sigma_j(mu), 1 <= j <= k
    double margin = 0.0;
    /// first violated j (1-based), 0 when inside
    int violated = 0;
};

[[nodiscard]] inline ConeMembership in_cone(const EigenTuple& lam, const ConeSpec& cone) {
    const EigenTuple mu = cone_transform_mu(lam, cone.transform);
    const auto e = elementary_sigmas(mu.values(), cone.k);
    ConeMembership m{true, std::numeric_limits<double>::infinity(), 0};
    for (int j = 1; j <= cone.k; ++j) {
        const double s = e[static_cast<std::size_t>(j)];
        m.margin = std::min(m.margin, s);
        if (!(s > 0.0) && m.violated == 0) m.violated = j;
    }
    m.inside = m.violated == 0;
    return m;
}

/// Strict interior test used before derivative evaluation:
/// margin > 1e-12 * max(1, |lam|_inf^k).
[[nodiscard]] inline bool strictly_inside(const EigenTuple& lam, const ConeSpec& cone) {
    const auto m = in_cone(lam, cone);
    if (!m.inside) return false;
    const double scale = std::max(1.0, std::pow(lam.sup_norm(), cone.k));
    return m.margin > 1e-12 * scale;
}

/// strictly_inside applied to lam / |lam|_inf, so the test does not depend on
/// the overall scale of lam.
[[nodiscard]] inline bool strictly_inside_normalized(const EigenTuple& lam, const ConeSpec& cone) {
    const double s = lam.sup_norm();
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    return strictly_inside(lam.scaled(1.0 / s), cone);
}

// ---------------------------------------------------------------------------
// Curvature operators
// ---------------------------------------------------------------------------

/// f = (C_n^l sigma_k / (C_n^k sigma_l))^{gamma/(k-l)} on Gamma_k, composed with
/// the cone transform when one is set (f~(lam) = f(mu(lam))).
struct CurvatureOperator {
    int k = 1;
    int l = 0;
    double gamma = 1.0;
    ConeSpec cone{};

    [[nodiscard]] static CurvatureOperator quotient(int n, int k, int l, double gamma = 1.0,
                                                    ConeTransform transform = {}) {
        CurvatureOperator op{k, l, gamma, ConeSpec{n, k, transform}};
        op.validate();
        return op;
    }

    /// (sigma_k / C_n^k)^{1/k}
    [[nodiscard]] static CurvatureOperator sigma_root(int n, int k) { return quotient(n, k, 0); }

    [[nodiscard]] int dim() const noexcept { return cone.n; }

    void validate() const {
        cone.validate();
        if (cone.k != k) throw domain_error("operator index k must match its cone");
        if (l < 0 || l >= k) throw domain_error("quotient operator requires 0 <= l < k");
        if (!(gamma > 0.0) || gamma > 1.0) throw domain_error("homogeneity degree must lie in (0, 1]");
    }
};

namespace detail {

inline void require_dim(const CurvatureOperator& op, const EigenTuple& lam) {
    if (lam.dim() != op.dim())
        throw domain_error("eigen tuple has length " + std::to_string(lam.dim()) + ", operator expects " +
                           std::to_string(op.dim()));
}

inline double quotient_value(const CurvatureOperator& op, const std::vector<double>& e) {
    const int n = op.dim();
    const double q = binomial(n, op.l) * e[static_cast<std::size_t>(op.k)] /
                     (binomial(n, op.k) * e[static_cast<std::size_t>(op.l)]);
    return std::pow(q, op.gamma / static_cast<double>(op.k - op.l));
}

}  // namespace detail

[[nodiscard]] inline double f_eval(const CurvatureOperator& op, const EigenTuple& lam) {
    detail::require_dim(op, lam);
    const auto m = in_cone(lam, op.cone);
    if (!m.inside)
        throw admissibility_error("f_eval: eigenvalues outside the cone (sigma_" + std::to_string(m.violated) +
                                      " <= 0)",
                                  m.violated);
    const EigenTuple mu = cone_transform_mu(lam, op.cone.transform);
    return detail::quotient_value(op, elementary_sigmas(mu.values(), op.k));
}

/// Partial derivatives f_i, chained through the cone transform.
[[nodiscard]] inline std::vector<double> f_gradient(const CurvatureOperator& op, const EigenTuple& lam) {
    detail::require_dim(op, lam);
    if (!strictly_inside_normalized(lam, op.cone)) {
        const auto m = in_cone(lam, op.cone);
        throw admissibility_error("f_gradient: eigenvalues not strictly inside the cone", m.violated);
    }
    const int n = op.dim();
    const EigenTuple mu = cone_transform_mu(lam, op.cone.transform);
    const auto e = elementary_sigmas(mu.values(), op.k);
    const double f = detail::quotient_value(op, e);
    const double pref = f * op.gamma / static_cast<double>(op.k - op.l);
    const auto dk = sigma_gradient(mu, op.k);
    std::vector<double> g(static_cast<std::size_t>(n));
    const double sk = e[static_cast<std::size_t>(op.k)];
    const double sl = e[static_cast<std::size_t>(op.l)];
    if (op.l == 0) {
        for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = pref * dk[static_cast<std::size_t>(i)] / sk;
    } else {
        const auto dl = sigma_gradient(mu, op.l);
        for (int i = 0; i < n; ++i)
            g[static_cast<std::size_t>(i)] =
                pref * (dk[static_cast<std::size_t>(i)] / sk - dl[static_cast<std::size_t>(i)] / sl);
    }
    if (const auto rho = transform_rho(op.cone.transform)) {
        double total = 0.0;
        for (double x : g) total += x;
        for (double& x : g) x = (total - *rho * x) / (n - *rho);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Partial uniform ellipticity constants
// ---------------------------------------------------------------------------

struct EllipticityConstants {
    int kappa = 0;
    double vartheta = 0.0;
    /// (-alpha_1, ..., -alpha_kappa, alpha_{kappa+1}, ..., alpha_n), inside the cone
    EigenTuple witness;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
    const double a = std::log10(lo), b = std::log10(hi);
    const int count = static_cast<int>(std::lround((b - a) * per_decade));
    std::vector<double> g(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / count);
    return g;
}

inline EigenTuple block_vector(int n, int negatives, double lead, double neg, double pos) {
    std::vector<double> v(static_cast<std::size_t>(n), pos);
    for (int i = 0; i < negatives; ++i) v[static_cast<std::size_t>(i)] = (i == 0 ? -lead : -neg);
    return EigenTuple(std::move(v));
}

}  // namespace detail

/// kappa_Gamma: largest m such that a vector with m negative and n-m positive
/// entries lies in the cone. Because the cone is symmetric and convex, averaging
/// each sign block of a witness keeps it inside, so two-level vectors
/// (-1,...,-1,t,...,t) with t on a log grid over [1e-6, 1e6] (entry magnitudes
/// in [1e-3, 1e3]) suffice.
[[nodiscard]] inline std::pair<int, EigenTuple> kappa_of_cone(const ConeSpec& cone) {
    cone.validate();
    const int n = cone.n;
    const auto grid = detail::log_grid(1e-6, 1e6, 25);
    for (int m = n - 1; m >= 1; --m) {
        for (double t : grid) {
            auto v = detail::block_vector(n, m, 1.0, 1.0, t);
            if (in_cone(v, cone).inside) return {m, v};
        }
    }
    return {0, EigenTuple::constant(n, 1.0)};
}

/// Certified lower bound for vartheta_Gamma: the maximum over sampled witnesses
/// (-1, -a,...,-a, b,...,b) of 1 / (n (sum of positives - sum of negatives 2..kappa)),
/// with b bisected down to the cone boundary for each a.
[[nodiscard]] inline EllipticityConstants ellipticity_constants(const ConeSpec& cone) {
    auto [kappa, kwitness] = kappa_of_cone(cone);
    const int n = cone.n;
    if (kappa == 0) return {0, 1.0 / n, kwitness};

    auto inside = [&](double a, double b) {
        return in_cone(detail::block_vector(n, kappa, 1.0, a, b), cone).inside;
    };
    const std::vector<double> as = kappa >= 2 ? detail::log_grid(1e-3, 1e3, 16) : std::vector<double>{1.0};

    EllipticityConstants best{kappa, 0.0, kwitness};
    for (double a : as) {
        double hi = 1.0;
        int guard = 0;
        while (!inside(a, hi) && guard++ < 60) hi *= 2.0;
        if (!inside(a, hi)) continue;
        double lo = hi;
        guard = 0;
        while (inside(a, lo) && guard++ < 60) lo *= 0.5;
        if (inside(a, lo)) continue;
        // stop short of the boundary so the witness stays strictly interior
        for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (inside(a, mid) ? hi : lo) = mid;
        }
        const double denom = (n - kappa) * hi - (kappa - 1) * a;
        if (!(denom > 0.0)) continue;
        const double value = 1.0 / (n * denom);
        if (value > best.vartheta) best = {kappa, value, detail::block_vector(n, kappa, 1.0, a, hi)};
    }
    best.vartheta = std::min(best.vartheta, 1.0 / n);
    return best;
}

[[nodiscard]] inline double vartheta_of_cone(const ConeSpec& cone) { return ellipticity_constants(cone).vartheta; }

// ---------------------------------------------------------------------------
// Randomized structural checks
// ---------------------------------------------------------------------------

/// Random point inside the cone: a Gaussian vector shifted along 1 to just past
/// the boundary, then pushed inward by a random amount. Covers both the bulk and
/// a neighbourhood of the boundary.
template <class Rng>
[[nodiscard]] EigenTuple sample_in_cone(const ConeSpec& cone, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = cone.n;
    std::vector<double> x(static_cast<std::size_t>(n));
    double big = 0.0;
    for (double& xi : x) {
        xi = gauss(rng);
        big = std::max(big, std::abs(xi));
    }
    auto shifted = [&](double s) {
        auto v = x;
        for (double& vi : v) vi += s;
        return EigenTuple(std::move(v));
    };
    double lo = -big - 1.0, hi = big + 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (in_cone(shifted(mid), cone).inside ? hi : lo) = mid;
    }
    const double u = unif(rng);
    const double extra = (big + 1.0) * (1e-6 + 3.0 * u * u * u);
    return shifted(hi + extra);
}

struct EllipticityReport {
    int samples = 0;
    int violations = 0;
    int kappa = 0;
    double vartheta = 0.0;
    /// min over samples and checked indices of f_i / sum_j f_j - vartheta
    double worst_margin = std::numeric_limits<double>::infinity();
    std::optional<EigenTuple> witness;
    [[nodiscard]] bool passed() const noexcept { return violations == 0; }
};

/// Samples admissible lam (sorted ascending, rescaled so f(lam) <= tau0) and
/// checks f_i >= vartheta sum_j f_j for i <= kappa+1 and wherever lam_i <= 0.
[[nodiscard]] inline EllipticityReport check_partial_ellipticity(const CurvatureOperator& op, int samples,
                                                                 double tau0, std::uint64_t seed = 0,
                                                                 std::optional<double> vartheta = std::nullopt) {
    if (samples < 1) throw domain_error("check_partial_ellipticity: samples must be >= 1");
    if (!(tau0 > 0.0)) throw domain_error("check_partial_ellipticity: tau0 must exceed sup f on the boundary (0)");
    const auto constants = ellipticity_constants(op.cone);
    EllipticityReport rep;
    rep.kappa = constants.kappa;
    rep.vartheta = vartheta.value_or(constants.vartheta);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    // rounding allowance: margins are ratios of O(1) quantities
    constexpr double tol = 1e-12;
    for (int s = 0; s < samples; ++s) {
        EigenTuple lam = sample_in_cone(op.cone, rng);
        if (!strictly_inside(lam, op.cone)) continue;
        const double f = f_eval(op, lam);
        lam = lam.scaled(std::pow(tau0 * unif(rng) / f, 1.0 / op.gamma)).sorted();
        if (!strictly_inside(lam, op.cone)) continue;
        const auto g = f_gradient(op, lam);
        double total = 0.0;
        for (double gi : g) total += gi;
        ++rep.samples;
        bool bad = false;
        for (int i = 0; i < lam.dim(); ++i) {
            if (i > rep.kappa && lam[static_cast<std::size_t>(i)] > 0.0) continue;
            const double margin = g[static_cast<std::size_t>(i)] / total - rep.vartheta;
            rep.worst_margin = std::min(rep.worst_margin, margin);
            if (margin < -tol) bad = true;
        }
        if (bad) {
            ++rep.violations;
            if (!rep.witness) rep.witness = lam;
        }
    }
    return rep;
}

struct PairingReport {
    int samples = 0;
    int violations = 0;
    /// min over samples of sum_i f_i mu_i / (sum_i f_i * |mu|_inf)
    double worst_pairing = std::numeric_limits<double>::infinity();
    /// min over samples of sum_i f_i lam_i / (gamma f)
    double worst_euler = std::numeric_limits<double>::infinity();
    std::optional<EigenTuple> witness_lambda;
    std::optional<EigenTuple> witness_mu;
    [[nodiscard]] bool passed() const noexcept { return violations == 0; }
};

/// For lam with f(lam) <= tau0 and mu in the cone: sum f_i(lam) mu_i > 0 and
/// sum f_i(lam) lam_i > 0.
[[nodiscard]] inline PairingReport check_positivity_pairing(const CurvatureOperator& op, double tau0, int samples,
                                                            std::uint64_t seed = 0) {
    if (samples < 1) throw domain_error("check_positivity_pairing: samples must be >= 1");
    // sup over the boundary is 0 for the quotient family; sup over the cone is +inf
    if (!(tau0 > 0.0)) throw domain_error("check_positivity_pairing: tau0 must satisfy 0 < tau0");
    PairingReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (int s = 0; s < samples; ++s) {
        EigenTuple lam = sample_in_cone(op.cone, rng);
        const EigenTuple mu = sample_in_cone(op.cone, rng);
        if (!strictly_inside(lam, op.cone)) continue;
        lam = lam.scaled(std::pow(tau0 * unif(rng) / f_eval(op, lam), 1.0 / op.gamma));
        if (!strictly_inside(lam, op.cone)) continue;
        const double f = f_eval(op, lam);
        const auto g = f_gradient(op, lam);
        double pair = 0.0, euler = 0.0, total = 0.0;
        for (int i = 0; i < lam.dim(); ++i) {
            pair += g[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(i)];
            euler += g[static_cast<std::size_t>(i)] * lam[static_cast<std::size_t>(i)];
            total += g[static_cast<std::size_t>(i)];
        }
        ++rep.samples;
        rep.worst_pairing = std::min(rep.worst_pairing, pair / (total * mu.sup_norm()));
        rep.worst_euler = std::min(rep.worst_euler, euler / (op.gamma * f));
        if (!(pair > 0.0) || !(euler > 0.0)) {
            ++rep.violations;
            if (!rep.witness_lambda) {
                rep.witness_lambda = lam;
                rep.witness_mu = mu;
            }
        }
    }
    return rep;
}

struct TauAlphaCheck {
    bool admissible = false;
    /// alpha (n tau + 2 - 2n) > 0
    bool sign_ok = false;
    /// lower bound on tau when alpha = 1: 1 + (n-2)(1 - kappa vartheta)
    double alpha_plus_threshold = 0.0;
};

/// tau < 1 when alpha = -1; tau > 1 + (n-2)(1 - kappa vartheta) when alpha = 1.
/// vartheta is the certified lower bound, so the alpha = 1 threshold is conservative.
[[nodiscard]] inline TauAlphaCheck validate_tau_alpha(double tau, int alpha, const ConeSpec& cone) {
    if (alpha != 1 && alpha != -1) throw domain_error("alpha must be +1 or -1");
    const auto c = ellipticity_constants(cone);
    const int n = cone.n;
    TauAlphaCheck out;
    out.alpha_plus_threshold = 1.0 + (n - 2) * (1.0 - c.kappa * c.vartheta);
    out.admissible = alpha == -1 ? tau < 1.0 : tau > out.alpha_plus_threshold;
    out.sign_ok = alpha * (n * tau + 2.0 - 2.0 * n) > 0.0;
    return out;
}

}  // namespace pcurv
