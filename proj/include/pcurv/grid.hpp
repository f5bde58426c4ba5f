#pragma once

// One-dimensional grids, finite-difference weights and interpolation on them.

#include "pcurv/errors.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pcurv {

/// Equally spaced nodes.
struct UniformLaw {};

/// Spacing shrinks geometrically by `ratio` per interval toward each clustered
/// end, from the interior spacing down to interior/`refine`.
struct ClusteredLaw {
    double ratio = 1.05;
    double refine = 8.0;
};

/// r = a + (b - a) sinh(stretch * xi) / sinh(stretch), xi uniform in [0, 1].
/// Fine near a, coarse near b; suited to long radial domains.
struct SinhLaw {
    double stretch = 3.0;
};

using GridLaw = std::variant<UniformLaw, ClusteredLaw, SinhLaw>;

/// Which ends of the interval a clustered grid refines toward.
struct ClusterEnds {
    bool left = false;
    bool right = true;
};

[[nodiscard]] inline std::vector<double> make_grid(double a, double b, int nodes, const GridLaw& law,
                                                   ClusterEnds ends = {}) {
    if (!(b > a)) throw domain_error("make_grid: empty interval");
    if (nodes < 3) throw discretization_error("make_grid: at least 3 nodes are required");
    const int m = nodes - 1;
    std::vector<double> x(static_cast<std::size_t>(nodes));
    x.front() = a;
    x.back() = b;

    if (std::holds_alternative<UniformLaw>(law)) {
        for (int i = 1; i < m; ++i) x[static_cast<std::size_t>(i)] = a + (b - a) * i / m;
        return x;
    }
    if (const auto* s = std::get_if<SinhLaw>(&law)) {
        if (!(s->stretch > 0.0)) throw domain_error("make_grid: sinh stretch must be positive");
        const double denom = std::sinh(s->stretch);
        for (int i = 1; i < m; ++i)
            x[static_cast<std::size_t>(i)] = a + (b - a) * std::sinh(s->stretch * i / m) / denom;
        return x;
    }

    const auto& c = std::get<ClusteredLaw>(law);
    if (!(c.ratio > 1.0) || !(c.refine >= 1.0)) throw domain_error("make_grid: clustered law needs ratio > 1, refine >= 1");
    // relative width of interval j; the smallest width is 1 at a clustered end
    std::vector<double> w(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        int steps = m;  // distance in intervals to the nearest clustered end
        if (ends.left) steps = std::min(steps, j);
        if (ends.right) steps = std::min(steps, m - 1 - j);
        w[static_cast<std::size_t>(j)] = std::min(std::pow(c.ratio, steps), c.refine);
    }
    double total = 0.0;
    for (double wj : w) total += wj;
    const double h_min = (b - a) / total;
    double pos = a;
    for (int j = 0; j + 1 < m; ++j) {
        pos += h_min * w[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(j) + 1] = pos;
    }
    return x;
}

[[nodiscard]] inline bool strictly_increasing(std::span<const double> x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) return false;
    return true;
}

/// Fornberg's recursion: weights c[d][j] such that f^{(d)}(z) ~ sum_j c[d][j] f(x_j),
/// for derivative orders d = 0..max_order.
[[nodiscard]] inline std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> x,
                                                                       int max_order) {
    const int npts = static_cast<int>(x.size());
    if (npts <= max_order) throw discretization_error("fornberg_weights: too few points for derivative order");
    std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order) + 1,
                                       std::vector<double>(static_cast<std::size_t>(npts), 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < npts; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Stencil of one node: first node index and weights for u' and u''.
struct NodeStencil {
    int first = 0;
    std::vector<double> d1;
    std::vector<double> d2;
};

/// Three-point central stencils in the interior and four-point one-sided stencils
/// at the ends (second order in both derivatives; three-point ends on a 3-node
/// grid). With `even_at_left` the left node is a center of symmetry:
/// u'(x0) = 0 and u''(x0) = 2 (u1 - u0) / h^2.
[[nodiscard]] inline std::vector<NodeStencil> derivative_stencils(std::span<const double> x, bool even_at_left = false) {
    const int n = static_cast<int>(x.size());
    if (n < 3) throw discretization_error("derivative stencils need at least 3 nodes, got " + std::to_string(n));
    const int end_width = std::min(n, 4);
    if (!strictly_increasing(x)) throw domain_error("grid must be strictly increasing");
    std::vector<NodeStencil> st(static_cast<std::size_t>(n));
    auto fill = [&](int i, int first, int count) {
        const auto w = fornberg_weights(x[static_cast<std::size_t>(i)], x.subspan(static_cast<std::size_t>(first),
                                                                                   static_cast<std::size_t>(count)),
                                        2);
        st[static_cast<std::size_t>(i)] = {first, w[1], w[2]};
    };
    for (int i = 1; i < n - 1; ++i) fill(i, i - 1, 3);
    if (even_at_left) {
        const double h = x[1] - x[0];
        st[0] = {0, {0.0, 0.0}, {-2.0 / (h * h), 2.0 / (h * h)}};
    } else {
        fill(0, 0, end_width);
    }
    fill(n - 1, n - end_width, end_width);
    return st;
}

struct Derivatives {
    std::vector<double> d1;
    std::vector<double> d2;
};

[[nodiscard]] inline Derivatives differentiate(std::span<const double> x, std::span<const double> u,
                                               bool even_at_left = false) {
    if (x.size() != u.size()) throw domain_error("differentiate: grid and values differ in length");
    const auto st = derivative_stencils(x, even_at_left);
    Derivatives d{std::vector<double>(x.size()), std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& s = st[i];
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < s.d1.size(); ++j) {
            a += s.d1[j] * u[static_cast<std::size_t>(s.first) + j];
            b += s.d2[j] * u[static_cast<std::size_t>(s.first) + j];
        }
        d.d1[i] = a;
        d.d2[i] = b;
    }
    return d;
}

/// Monotone piecewise cubic Hermite interpolant; evaluation outside the data
/// range is an error.
class MonotoneInterpolant {
public:
    MonotoneInterpolant(std::vector<double> x, std::vector<double> y)
        : lo_(x.empty() ? 0.0 : x.front()), hi_(x.empty() ? 0.0 : x.back()), impl_(make(std::move(x), std::move(y))) {}

    [[nodiscard]] double operator()(double t) const {
        if (t < lo_ || t > hi_)
            throw domain_error("interpolation abscissa " + std::to_string(t) + " outside [" + std::to_string(lo_) +
                               ", " + std::to_string(hi_) + "]");
        return impl_(t);
    }

    [[nodiscard]] std::vector<double> operator()(std::span<const double> t) const {
        std::vector<double> out(t.size());
        std::transform(t.begin(), t.end(), out.begin(), [this](double s) { return (*this)(s); });
        return out;
    }

private:
    using impl_type = boost::math::interpolators::pchip<std::vector<double>>;

    static impl_type make(std::vector<double> x, std::vector<double> y) {
        if (x.size() != y.size()) throw domain_error("interpolant: abscissas and ordinates differ in length");
        if (x.size() < 4) throw discretization_error("interpolant: at least 4 points are required");
        if (!strictly_increasing(x)) throw domain_error("interpolant: abscissas must be strictly increasing");
        return impl_type(std::move(x), std::move(y));
    }

    double lo_;
    double hi_;
    impl_type impl_;
};

/// Composite trapezoid rule on a nonuniform grid.
[[nodiscard]] inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw domain_error("trapezoid: length mismatch");
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

/// Sup norm of the difference of two equally sized vectors.
[[nodiscard]] inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw domain_error("max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace pcurv
