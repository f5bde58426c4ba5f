#pragma once

// Explicit sub- and supersolutions with numerical certificates: collar barriers
// near the boundary of a ball, the completeness barrier h_k, and Euclidean
// subsolutions beta log(1 + r^2).

#include "pcurv/conformal.hpp"
#include "pcurv/errors.hpp"
#include "pcurv/radial_pde.hpp"
#include "pcurv/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pcurv {

// ---------------------------------------------------------------------------
// Barrier functions of the distance rho to the boundary
// ---------------------------------------------------------------------------

namespace detail {

inline void check_collar_args(double rho, double delta) {
    if (!(rho >= 0.0)) throw domain_error("collar barriers need rho >= 0");
    if (!(delta > 0.0)) throw domain_error("collar width delta must be positive");
}

}  // namespace detail

/// w = beta log(delta^2 / (delta^2 + rho)).
[[nodiscard]] inline double lower_collar(double rho, double beta, double delta) {
    detail::check_collar_args(rho, delta);
    if (!(beta > 0.0)) throw domain_error("lower collar barrier needs beta > 0");
    return beta * std::log(delta * delta / (delta * delta + rho));
}

/// v = beta' log(1 + rho / delta^2) + phi.
[[nodiscard]] inline double upper_collar(double rho, double beta_p, double delta, double phi) {
    detail::check_collar_args(rho, delta);
    if (!(beta_p > 0.0)) throw domain_error("upper collar barrier needs beta' > 0");
    return beta_p * std::log1p(rho / (delta * delta)) + phi;
}

/// h_k = log(k delta^2 / (k rho + delta^2)).
[[nodiscard]] inline double completeness_barrier(double rho, int k, double delta) {
    detail::check_collar_args(rho, delta);
    if (k < 1) throw domain_error("completeness barrier needs k >= 1");
    return std::log(k * delta * delta / (k * rho + delta * delta));
}

/// Value and radial derivatives d/dr, d^2/dr^2 of a barrier at r = R - rho.
struct BarrierJet {
    double u = 0.0;
    double du = 0.0;
    double d2u = 0.0;
};

[[nodiscard]] inline BarrierJet lower_collar_jet(double rho, double beta, double delta, double phi) {
    const double s = delta * delta + rho;
    return {lower_collar(rho, beta, delta) + phi, beta / s, beta / (s * s)};
}

[[nodiscard]] inline BarrierJet upper_collar_jet(double rho, double beta_p, double delta, double phi) {
    const double s = delta * delta + rho;
    return {upper_collar(rho, beta_p, delta, phi), -beta_p / s, -beta_p / (s * s)};
}

[[nodiscard]] inline BarrierJet completeness_jet(double rho, int k, double delta) {
    const double s = k * rho + delta * delta;
    return {completeness_barrier(rho, k, delta), k / s, (k / s) * (k / s)};
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

enum class BarrierKind { lower_collar, upper_collar, completeness, euclidean_subsolution };

[[nodiscard]] inline std::string_view to_string(BarrierKind k) noexcept {
    switch (k) {
        case BarrierKind::lower_collar: return "lower_collar";
        case BarrierKind::upper_collar: return "upper_collar";
        case BarrierKind::completeness: return "completeness";
        case BarrierKind::euclidean_subsolution: break;
    }
    return "euclidean_subsolution";
}

struct BarrierCertificate {
    BarrierKind kind = BarrierKind::lower_collar;
    /// certified interval: rho for collar barriers, r for Euclidean subsolutions
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> points;
    /// slack of the defining inequality at each point
    std::vector<double> margins;
    double margin = -std::numeric_limits<double>::infinity();
    bool pass = false;
    double delta = 0.0;
    double beta = 0.0;
    /// measured constant of the eigenvalue lower bound, when the barrier has one
    std::optional<double> c0;
    /// Euclidean subsolutions: inf of the curvature ratio, tail exponent and,
    /// on failure, the radius where the ratio has dropped to half its peak
    std::optional<double> lambda1;
    std::optional<double> tail_exponent;
    std::optional<double> crossover;
    std::string detail;

    void finish() {
        margin = margins.empty() ? -std::numeric_limits<double>::infinity()
                                 : *std::min_element(margins.begin(), margins.end());
        pass = !margins.empty() && margin > 0.0 && (!c0 || *c0 > 0.0);
    }
};

/// Ball of radius R with constant Dirichlet data phi; rho = R - r.
struct CollarProblem {
    EquationParams params;
    double R = 1.0;
    double phi = 0.0;
    Psi psi = PsiConstant{};

    void validate() const {
        params.validate();
        if (!(R > 0.0)) throw validation_error("collar problem needs R > 0");
    }
};

/// rho = 0, `nodes` uniform points in (0, delta] and `nodes` log-spaced points
/// in [1e-8 delta, delta], sorted.
[[nodiscard]] inline std::vector<double> collar_samples(double delta, int nodes = 400) {
    std::vector<double> rho{0.0};
    for (int i = 1; i <= nodes; ++i) rho.push_back(delta * i / nodes);
    for (int i = 0; i < nodes; ++i) rho.push_back(delta * std::pow(1e-8, 1.0 - static_cast<double>(i) / (nodes - 1)));
    std::sort(rho.begin(), rho.end());
    rho.erase(std::unique(rho.begin(), rho.end()), rho.end());
    return rho;
}

namespace detail {

inline EigenTuple barrier_eigen(const EquationParams& p, double r, const BarrierJet& j) {
    const auto [t, rad] = V_eigen_at(p, r, j.du, j.d2u);
    return EigenTuple::radial(p.dim(), t, rad);
}

inline void check_collar(const CollarProblem& prob, double delta) {
    prob.validate();
    if (!(delta > 0.0 && delta < prob.R)) throw validation_error("collar width must lie in (0, R)");
}

}  // namespace detail

/// Certifies w + phi as a subsolution on the collar rho in [0, delta]:
/// c0 = inf (delta^2 + rho)^2 min eig V[w + phi] > 0 and
/// f(lambda(V[w + phi])) - rhs_scale psi e^{2 gamma (w + phi)} > 0 pointwise.
[[nodiscard]] inline BarrierCertificate certify_lower_collar(const CollarProblem& prob, double beta, double delta,
                                                             int nodes = 400) {
    detail::check_collar(prob, delta);
    const auto& p = prob.params;
    BarrierCertificate c{BarrierKind::lower_collar, 0.0, delta};
    c.delta = delta;
    c.beta = beta;
    double c0 = std::numeric_limits<double>::infinity();
    for (double rho : collar_samples(delta, nodes)) {
        const double r = prob.R - rho;
        const auto j = lower_collar_jet(rho, beta, delta, prob.phi);
        const auto lam = detail::barrier_eigen(p, r, j);
        const double s = delta * delta + rho;
        c0 = std::min(c0, s * s * std::min(lam.values().front(), lam.values().back()));
        double slack = -std::numeric_limits<double>::infinity();
        if (in_cone(lam, p.op.cone).inside)
            slack = f_eval(p.op, lam) - p.rhs_scale * psi_at(prob.psi, r) * std::exp(2.0 * p.gamma * j.u);
        c.points.push_back(rho);
        c.margins.push_back(slack);
    }
    c.c0 = c0;
    c.finish();
    return c;
}

/// First beta' in 1, 1/2, ..., 2^-30 with -n + rho + (n a + b) beta' <= -(n - rho)/2.
[[nodiscard]] inline std::optional<double> upper_collar_beta(const EquationParams& p) {
    const int n = p.dim();
    for (int j = 0; j <= 30; ++j) {
        const double bp = std::ldexp(1.0, -j);
        if (-n + p.varrho + (n * p.a + p.b) * bp <= -(n - p.varrho) / 2.0) return bp;
    }
    return std::nullopt;
}

/// Certifies tr(g^{-1} V[v]) < 0 on the collar for v = beta' log(1 + rho/delta^2) + phi;
/// the slack is -tr.
[[nodiscard]] inline BarrierCertificate certify_upper_collar(const CollarProblem& prob, double beta_p, double delta,
                                                             int nodes = 400) {
    detail::check_collar(prob, delta);
    BarrierCertificate c{BarrierKind::upper_collar, 0.0, delta};
    c.delta = delta;
    c.beta = beta_p;
    for (double rho : collar_samples(delta, nodes)) {
        const auto j = upper_collar_jet(rho, beta_p, delta, prob.phi);
        c.points.push_back(rho);
        c.margins.push_back(-detail::barrier_eigen(prob.params, prob.R - rho, j).sum());
    }
    c.finish();
    return c;
}

/// Certifies f(lambda(V[h_k])) >= rhs_scale psi e^{2 gamma h_k} on the collar
/// for every k in `ks`, with c0 = inf min eig V[h_k] / h_k'^2 > 0. Points and
/// margins are listed k by k.
[[nodiscard]] inline BarrierCertificate certify_completeness(const CollarProblem& prob, const std::vector<int>& ks,
                                                             double delta, int nodes = 400) {
    detail::check_collar(prob, delta);
    if (ks.empty()) throw validation_error("completeness certificate needs at least one k");
    const auto& p = prob.params;
    BarrierCertificate c{BarrierKind::completeness, 0.0, delta};
    c.delta = delta;
    double c0 = std::numeric_limits<double>::infinity();
    for (int k : ks) {
        for (double rho : collar_samples(delta, nodes)) {
            const double r = prob.R - rho;
            const auto j = completeness_jet(rho, k, delta);
            const auto lam = detail::barrier_eigen(p, r, j);
            c0 = std::min(c0, std::min(lam.values().front(), lam.values().back()) / (j.du * j.du));
            double slack = -std::numeric_limits<double>::infinity();
            if (in_cone(lam, p.op.cone).inside)
                slack = f_eval(p.op, lam) - p.rhs_scale * psi_at(prob.psi, r) * std::exp(2.0 * p.gamma * j.u);
            c.points.push_back(rho);
            c.margins.push_back(slack);
        }
    }
    c.c0 = c0;
    c.finish();
    return c;
}

/// Halves delta from `start` until the certificate passes; the last attempt
/// (at or above `floor`) is returned when none does.
[[nodiscard]] inline BarrierCertificate search_delta(const std::function<BarrierCertificate(double)>& certify,
                                                     double start = 0.1, double floor = 1e-4) {
    std::optional<BarrierCertificate> last;
    for (double delta = start; delta >= floor; delta *= 0.5) {
        last = certify(delta);
        if (last->pass) return *last;
    }
    if (!last) throw validation_error("delta search range is empty");
    last->detail = "no delta in [" + std::to_string(floor) + ", " + std::to_string(start) + "] passes";
    return *last;
}

/// Lower collar, upper collar and completeness certificates with delta found by
/// halving. beta and beta' come from EquationParams::barrier_beta and
/// upper_collar_beta.
struct CollarCertificates {
    BarrierCertificate lower;
    BarrierCertificate upper;
    BarrierCertificate completeness;
    [[nodiscard]] bool pass() const noexcept { return lower.pass && upper.pass && completeness.pass; }
};

[[nodiscard]] inline CollarCertificates certify_collars(const CollarProblem& prob,
                                                        const std::vector<int>& ks = {1, 10, 100, 1000}) {
    prob.validate();
    const auto beta = prob.params.barrier_beta();
    const auto beta_p = upper_collar_beta(prob.params);
    if (!beta) throw validation_error("no lower collar exponent beta satisfies the compatibility conditions");
    if (!beta_p) throw validation_error("no upper collar exponent beta' makes the trace coefficient negative");
    const double R = prob.R;
    const double start = std::min(0.1, 0.5 * R);
    return {search_delta([&](double d) { return certify_lower_collar(prob, *beta, d); }, start),
            search_delta([&](double d) { return certify_upper_collar(prob, *beta_p, d); }, start),
            search_delta([&](double d) { return certify_completeness(prob, ks, d); }, start)};
}

// ---------------------------------------------------------------------------
// Euclidean subsolutions
// ---------------------------------------------------------------------------

/// h = beta log(1 + r^2) on flat R^n as a subsolution of
/// f(lambda(g~^{-1} T))^power = psi, with T = tensor_scale * A^{tau,alpha}
/// (-Ric = (n-2) A^{0,-1}) and psi = lambda2 (1 + r^2)^{-p}.
struct EuclideanSubsolutionSpec {
    SchoutenParams schouten{0.0, -1, 4};
    CurvatureOperator op = CurvatureOperator::sigma_root(4, 2);
    double tensor_scale = 1.0;
    double power = 1.0;
    double lambda2 = 1.0;
    double p = 1.25;
    double r0 = 0.0;
    double r_max = 1e6;
    int nodes = 2001;

    void validate() const {
        schouten.validate();
        op.validate();
        if (op.dim() != schouten.n) throw validation_error("operator and Schouten dimensions differ");
        if (!(tensor_scale > 0.0) || !(power > 0.0) || !(lambda2 > 0.0))
            throw validation_error("tensor_scale, power and lambda2 must be positive");
        if (!(r0 >= 0.0) || !(r_max > r0) || nodes < 2) throw validation_error("bad certification range");
    }
};

/// f(lambda(g~^{-1} T))^power / psi at radius r, zero outside the cone.
[[nodiscard]] inline double euclidean_ratio(const EuclideanSubsolutionSpec& s, double beta, double r) {
    const auto [t, rad] = log_profile_schouten_closed_form(beta, s.schouten, r);
    const double w = s.tensor_scale * std::pow(1.0 + r * r, -2.0 * beta);
    const auto lam = EigenTuple::radial(s.schouten.n, w * t, w * rad);
    if (!in_cone(lam, s.op.cone).inside) return 0.0;
    return std::pow(f_eval(s.op, lam), s.power) / (s.lambda2 * std::pow(1.0 + r * r, -s.p));
}

namespace detail {

/// First radius past the peak of the sampled ratio where it has fallen below
/// half the peak; beyond r_max it is extrapolated with the tail exponent.
/// Independent of the scale lambda2.
inline std::optional<double> ratio_crossover(const std::vector<double>& r, const std::vector<double>& ratio, double r_max,
                                             double tail_exponent) {
    const auto peak = std::max_element(ratio.begin(), ratio.end());
    if (!(*peak > 0.0)) return r.front();
    const double target = 0.5 * *peak;
    for (auto it = peak; it != ratio.end(); ++it)
        if (*it < target) return r[static_cast<std::size_t>(it - ratio.begin())];
    if (std::isfinite(tail_exponent) && tail_exponent < 0.0)
        return r_max * std::pow(ratio.back() / target, -1.0 / tail_exponent);
    return std::nullopt;
}

}  // namespace detail

/// Certifies euclidean_ratio >= Lambda_1 > 0 on [r0, infinity): the ratio is
/// sampled at r0 and on a log grid up to r_max, and the tail is bounded by the
/// closed form at 1e9 and 1e12 with the log-log slope between them as tail
/// exponent. Passes when the tail exponent is >= -1e-6 and Lambda_1 > 0. The
/// margins are the sampled ratios.
[[nodiscard]] inline BarrierCertificate euclidean_subsolution_certificate(const EuclideanSubsolutionSpec& s,
                                                                          double beta) {
    s.validate();
    if (!(beta > 0.0)) throw validation_error("subsolution exponent beta must be positive");
    BarrierCertificate c{BarrierKind::euclidean_subsolution, s.r0, std::numeric_limits<double>::infinity()};
    c.beta = beta;
    const double lo = std::log(std::max(s.r0, 1e-4)), hi = std::log(s.r_max);
    c.points.push_back(s.r0);
    for (int i = 0; i < s.nodes; ++i) {
        const double r = std::exp(lo + (hi - lo) * i / (s.nodes - 1));
        if (r > s.r0) c.points.push_back(r);
    }
    for (double r : c.points) c.margins.push_back(euclidean_ratio(s, beta, r));
    const double t1 = euclidean_ratio(s, beta, 1e9), t2 = euclidean_ratio(s, beta, 1e12);
    c.tail_exponent = (t1 > 0.0 && t2 > 0.0) ? std::log(t2 / t1) / std::log(1e3) : -std::numeric_limits<double>::infinity();
    double inf_ratio = *std::min_element(c.margins.begin(), c.margins.end());
    const bool tail_ok = *c.tail_exponent >= -1e-6;
    if (tail_ok) inf_ratio = std::min({inf_ratio, t1, t2});
    c.lambda1 = inf_ratio;
    c.margin = inf_ratio;
    c.pass = tail_ok && inf_ratio > 0.0;
    if (!c.pass) c.crossover = detail::ratio_crossover(c.points, c.margins, s.r_max, *c.tail_exponent);
    if (!c.pass) c.detail = tail_ok ? "subsolution leaves the cone" : "subsolution curvature decays faster than psi";
    return c;
}

/// beta = delta/4 for psi ~ r^{-2-delta} (curvature of h decays like
/// r^{-2-4 beta} when the tangential eigenvalue dominates), then a log grid of
/// 64 values in [1e-3, 10]. Returns the first passing certificate, otherwise
/// the one with the largest tail exponent.
[[nodiscard]] inline BarrierCertificate search_euclidean_beta(const EuclideanSubsolutionSpec& s) {
    std::vector<double> betas;
    const double delta = 2.0 * s.p / s.power - 2.0;
    if (delta > 0.0) betas.push_back(delta / 4.0);
    for (int i = 0; i < 64; ++i) betas.push_back(1e-3 * std::pow(1e4, i / 63.0));
    std::optional<BarrierCertificate> best;
    for (double b : betas) {
        auto c = euclidean_subsolution_certificate(s, b);
        if (c.pass) return c;
        if (!best || *c.tail_exponent > *best->tail_exponent) best = std::move(c);
    }
    return *best;
}

/// sigma_{n,k}(-g~^{-1} Ric) = psi with psi = lambda2 (1 + r^2)^{-exponent/2}:
/// f = (C_n^k sigma_n / sigma_k)^{1/(n-k)} on Gamma_n, power n - k.
[[nodiscard]] inline EuclideanSubsolutionSpec sigma_nk_ricci_spec(int n, int k, double exponent) {
    if (n < 3 || k < 0 || k >= n) throw validation_error("sigma_{n,k} needs n >= 3 and 0 <= k < n");
    EuclideanSubsolutionSpec s;
    s.schouten = {0.0, -1, n};
    s.op = CurvatureOperator::quotient(n, n, k);
    s.tensor_scale = n - 2.0;
    s.power = n - k;
    s.p = exponent / 2.0;
    return s;
}

}  // namespace pcurv
