#pragma once

// Internal numeric helpers shared by the solver translation units. Not part
// of the public headers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace reroute::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum exp(v_i)) with the running-max trick; -inf for an empty span.
inline double log_sum_exp(std::span<const double> v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Bisect f over [lo, hi] given f(lo) and f(hi) have opposite signs.
/// Shrinks the bracket to width max(tol_abs, 4 eps |mid|) and returns the
/// midpoint. f only needs a correct sign, not a smooth value.
inline double bisect_sign(const std::function<double(double)>& f, double lo, double hi,
                          double tol_abs = 1e-13) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::logic_error("bisect_sign: endpoints do not bracket a sign change");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double width = hi - lo;
        if (width < std::max(tol_abs, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)))
            return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Golden-section minimization of f over [lo, hi] to relative interval width
/// rel_tol; returns the argmin estimate. Assumes f is continuous (unimodality
/// is not required when only the sign of the minimum matters downstream and
/// the true minimizer lies inside the bracket).
inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         double rel_tol = 1e-9) {
    static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > rel_tol * (std::abs(a) + std::abs(b)) + 1e-300) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

/// Real roots of a x^2 + b x + c in increasing order, computed with the
/// cancellation-free quadratic formula.
inline std::vector<double> quadratic_roots(double a, double b, double c) {
    if (a == 0.0) {
        if (b == 0.0) return {};
        return {-c / b};
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return {};
    if (disc == 0.0) return {-b / (2.0 * a)};
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    double r1 = q / a;
    double r2 = (q == 0.0) ? -b / a - r1 : c / q;
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

}  // namespace reroute::detail
