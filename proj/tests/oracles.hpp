#pragma once

// Independent reference computations used only by the test suites.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// sigma_k by explicit enumeration of all k-subsets.
inline double sigma_enumerate(const std::vector<double>& lam, int k) {
    const int n = static_cast<int>(lam.size());
    if (k == 0) return 1.0;
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        double p = 1.0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) p *= lam[static_cast<std::size_t>(i)];
        total += p;
    }
    return total;
}

/// Central difference of a scalar function of a vector, coordinate i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& fn, std::vector<double> x,
                           std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = fn(x);
    x[i] = x0 - h;
    const double fm = fn(x);
    return (fp - fm) / (2.0 * h);
}

/// Fourth-order central difference.
inline double central_diff4(const std::function<double(const std::vector<double>&)>& fn, std::vector<double> x,
                            std::size_t i, double h) {
    const double x0 = x[i];
    auto at = [&](double t) {
        x[i] = x0 + t;
        return fn(x);
    };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
}

inline std::vector<double> gaussian_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = g(rng);
    return v;
}

/// Garding membership written directly from the definition, by enumeration.
inline bool in_garding_enumerated(const std::vector<double>& lam, int k) {
    for (int j = 1; j <= k; ++j)
        if (!(sigma_enumerate(lam, j) > 0.0)) return false;
    return true;
}

/// Largest m for which some vector with m negative and n-m positive entries,
/// magnitudes drawn from a coarse grid, lies in Gamma_k. Brute force over all
/// magnitude assignments; practical for n <= 4.
inline int kappa_brute_force(int n, int k) {
    const std::vector<double> mags{0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
    const std::size_t q = mags.size();
    int best = 0;
    for (int m = 1; m < n; ++m) {
        std::size_t total = 1;
        for (int i = 0; i < n; ++i) total *= q;
        for (std::size_t code = 0; code < total; ++code) {
            std::vector<double> v(static_cast<std::size_t>(n));
            std::size_t c = code;
            for (int i = 0; i < n; ++i) {
                const double mag = mags[c % q];
                c /= q;
                v[static_cast<std::size_t>(i)] = i < m ? -mag : mag;
            }
            if (in_garding_enumerated(v, k)) {
                best = m;
                break;
            }
        }
    }
    return best;
}

}  // namespace oracle

namespace oracle {

/// Ricci eigenvalues of g~ = e^{2u}(dr^2 + s(r)^2 g_{S^{n-1}}), computed through
/// the arclength form dt^2 + S(t)^2 g_{S^{n-1}} with dt = e^u dr, S = e^u s:
/// Ric(d_t, d_t) = -(n-1) S_tt / S, tangential Ric = -S_tt/S + (n-2)(1 - S_t^2)/S^2.
/// Returned as eigenvalues of -g^{-1} Ric_{g~} (that is, e^{2u} times those of -g~^{-1} Ric).
struct RicciPair {
    double tangential;
    double radial;
};

inline RicciPair warped_minus_ricci(int n, double s, double ds, double d2s, double u, double du, double d2u) {
    const double eu = std::exp(u);
    const double S = eu * s;
    const double St = ds + s * du;                           // dS/dt = (e^u s)_r / e^u
    const double Stt = (d2s + ds * du + s * d2u) / eu;  // d/dr(St) / e^u
    const double ric_r = -(n - 1) * Stt / S;
    const double ric_t = -Stt / S + (n - 2) * (1.0 - St * St) / (S * S);
    const double w = eu * eu;
    return {-ric_t * w, -ric_r * w};
}

}  // namespace oracle
