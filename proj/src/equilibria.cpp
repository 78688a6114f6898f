#include "reroute/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "numerics.hpp"

namespace reroute {
namespace {

using detail::bisect_sign;
using detail::golden_min;
using detail::log_sum_exp;
using detail::quadratic_roots;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

int sign_of_log(double log_value) {
    // The defining functions below all have the form 1 - e^L; positive iff L < 0.
    if (log_value < 0.0) return 1;
    if (log_value > 0.0) return -1;
    return 0;
}

double one_minus_exp(double log_value) {
    return -std::expm1(std::min(log_value, 700.0));
}

std::string count_regime(std::size_t n) {
    return std::to_string(n) + (n == 1 ? "-root" : "-roots");
}

// log G(z) where G(z) = z sum_{m=0}^{C-1} (C!/m!) (rho1 + rho2 z)^{m-C}.
// The unbounded-retrial defining function is positive iff G < 1.
double log_g_unbounded(double log_z, double rho1, double rho2, int C) {
    const double w = rho1 + rho2 * std::exp(log_z);
    const double logw = std::log(w);
    const double lgc = std::lgamma(C + 1.0);
    std::vector<double> terms(static_cast<std::size_t>(C));
    for (int m = 0; m < C; ++m)
        terms[static_cast<std::size_t>(m)] =
            lgc - std::lgamma(m + 1.0) + (m - C) * logw;
    return log_z + log_sum_exp(terms);
}

// log z below which G < e^-2 is guaranteed: G(z) <= z sum (C!/m!) rho1^(m-C)
// since w >= rho1.
double guaranteed_positive_log_z(double rho1, int C) {
    const double lgc = std::lgamma(C + 1.0);
    const double logr = std::log(rho1);
    std::vector<double> terms(static_cast<std::size_t>(C));
    for (int m = 0; m < C; ++m)
        terms[static_cast<std::size_t>(m)] =
            lgc - std::lgamma(m + 1.0) + (m - C) * logr;
    return -log_sum_exp(terms) - 2.0;
}

FixedPointRoot finish_rist_root(double theta, double theta_lo, double theta_hi,
                                double rho1, double rho2, int C, std::string hint) {
    FixedPointRoot r;
    r.log_z = theta;
    r.z = std::exp(theta);
    r.r_or_s = r.z / (1.0 + r.z);
    r.residual = std::abs(std::expm1(log_g_unbounded(theta, rho1, rho2, C)));
    r.bracket_lo = std::exp(theta_lo);
    r.bracket_hi = std::exp(theta_hi);
    r.stable_hint = std::move(hint);
    return r;
}

// Positive roots (ascending) of the derivative factor
// q(z) = rho2 (C - rho2) z^2 + rho2 (C - rho1 - 1) z - rho1.
std::vector<double> positive_q_roots(double rho1, double rho2, int C) {
    std::vector<double> out;
    for (double r : quadratic_roots(rho2 * (C - rho2), rho2 * (C - rho1 - 1.0), -rho1))
        if (r > 0.0) out.push_back(r);
    return out;
}

struct CubicRoot {
    double z;
    double lo, hi;
    bool ascending;  // target function increasing through the root
};

// Roots in (0,1) of (1-z) h(z) = 1/nu for quadratic h, split at the maximizer
// x0 of the left side. Shared by the limiting saturation model and the
// non-linear M/M/1 queue, whose fixed-point equations coincide.
std::vector<CubicRoot> quadratic_h_roots(double nu, double a, double x0) {
    const auto psi = [a](double z) { return (1.0 - z) * (1.0 + a * z * (1.0 - z)); };
    const double target = 1.0 / nu;
    std::vector<CubicRoot> out;
    const double lo = 1e-15, hi = 1.0 - 1e-15;
    const auto f = [&](double z) { return psi(z) - target; };
    if ((f(lo) > 0.0) != (f(x0) > 0.0) && f(lo) != 0.0 && f(x0) != 0.0)
        out.push_back({bisect_sign(f, lo, x0), lo, x0, true});
    if ((f(x0) > 0.0) != (f(hi) > 0.0) && f(x0) != 0.0 && f(hi) != 0.0)
        out.push_back({bisect_sign(f, x0, hi), x0, hi, false});
    return out;
}

EquilibriumReport quadratic_h_report(FixedPointModel model, double nu, double a) {
    const double x0 = (2.0 - std::sqrt((a + 3.0) / a)) / 3.0;
    EquilibriumReport rep;
    rep.model = model;
    for (const CubicRoot& c : quadratic_h_roots(nu, a, x0)) {
        FixedPointRoot r;
        r.z = c.z;
        r.log_z = std::log(c.z);
        r.r_or_s = c.z;
        r.residual = std::abs(nu * (1.0 - c.z) * (1.0 + a * c.z * (1.0 - c.z)) - 1.0);
        r.bracket_lo = c.lo;
        r.bracket_hi = c.hi;
        r.stable_hint = c.ascending ? "unstable" : "stable";
        const double nuh = nu * (1.0 + a * c.z * (1.0 - c.z));
        r.branch = nuh < 1.0 ? "nu*h<1" : (nuh > 1.0 ? "nu*h>1" : "nu*h=1");
        rep.roots.push_back(std::move(r));
    }
    rep.regime = count_regime(rep.roots.size());
    if (model == FixedPointModel::DarLimit) {
        rep.x0 = x0;
        rep.nu_a = 1.0 / ((1.0 - x0) * (1.0 + a * x0 * (1.0 - x0)));
        rep.nu_a_printed =
            3.0 / (1.0 + (2.0 / 9.0) * a +
                   (2.0 / 3.0) * std::pow(a + 3.0, 1.5) / std::sqrt(a));
    }
    return rep;
}

ProbVec product_form_pair_dist(double rho1_eff, double rho2_eff, int C) {
    RistStateSpace space(C);
    const double l1 = std::log(rho1_eff);
    const double l2 = std::log(rho2_eff);
    std::vector<double> lw(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto [x, y] = space.states()[i];
        lw[i] = x * l1 - std::lgamma(x + 1.0) + y * l2 - std::lgamma(y + 1.0);
    }
    const double lz = log_sum_exp(lw);
    std::vector<double> p(lw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) sum += p[i] = std::exp(lw[i] - lz);
    for (double& v : p) v /= sum;
    return ProbVec(ProbVec::Space::RistPairs, std::move(p));
}

}  // namespace

SignValue phi_sign(double z, double rho1, double rho2, int C) {
    require(std::isfinite(z) && z > 0.0, "phi_sign: z must be positive and finite");
    require(std::isfinite(rho1) && rho1 > 0.0, "phi_sign: rho1 must be positive");
    require(std::isfinite(rho2) && rho2 > 0.0, "phi_sign: rho2 must be positive");
    require(C >= 1, "phi_sign: capacity must be at least 1");
    const double L = log_g_unbounded(std::log(z), rho1, rho2, C);
    return {sign_of_log(L), one_minus_exp(L)};
}

EquilibriumReport rist_equilibria(double rho1, double rho2, int C) {
    require(std::isfinite(rho1) && rho1 > 0.0, "rist_equilibria: rho1 must be positive");
    require(std::isfinite(rho2) && rho2 > 0.0, "rist_equilibria: rho2 must be positive");
    require(C >= 1, "rist_equilibria: capacity must be at least 1");
    require(rho1 < C, "rist_equilibria: rho1 must be below the capacity");

    EquilibriumReport rep;
    rep.model = FixedPointModel::RistUnbounded;
    rep.regime = rho2 < C ? "Underloaded" : (rho2 > C ? "Overloaded" : "Critical");
    rep.singular_saturation = rho2 > C;

    if (C == 1) {
        // Closed form: the defining function is rho1/z + rho2 - 1.
        if (rho2 < 1.0) {
            const double z = rho1 / (1.0 - rho2);
            FixedPointRoot r;
            r.z = z;
            r.log_z = std::log(z);
            r.r_or_s = z / (1.0 + z);
            r.residual = std::abs(std::expm1(log_g_unbounded(r.log_z, rho1, rho2, C)));
            r.bracket_lo = r.bracket_hi = z;
            r.stable_hint = "stable";
            rep.roots.push_back(std::move(r));
        }
        return rep;
    }

    const auto sgn = [&](double theta) {
        return -log_g_unbounded(theta, rho1, rho2, C);  // positive iff G < 1
    };
    const double theta_lo = guaranteed_positive_log_z(rho1, C);
    const auto q_roots = positive_q_roots(rho1, rho2, C);

    if (rho2 <= C) {
        // At most one positive root of q; the defining function decreases to
        // its global minimum there and increases toward 0 afterwards, so the
        // unique root lies left of it.
        if (q_roots.empty()) return rep;  // critical regime with rho1 >= C-1
        const double theta_hi = std::log(q_roots.front());
        if (sgn(theta_hi) < 0.0) {
            const double t = bisect_sign(sgn, theta_lo, theta_hi);
            rep.roots.push_back(
                finish_rist_root(t, theta_lo, theta_hi, rho1, rho2, C, "stable"));
        } else if (std::abs(std::expm1(log_g_unbounded(theta_hi, rho1, rho2, C))) < 1e-8) {
            // Tangency at the minimum (possible only by rounding at near-critical
            // parameters): report the osculation point.
            rep.roots.push_back(
                finish_rist_root(theta_hi, theta_lo, theta_hi, rho1, rho2, C, "marginal"));
        } else {
            throw std::runtime_error("rist_equilibria: bracketing failed below capacity");
        }
        return rep;
    }

    // Overloaded regime: zero or two roots around the interior minimum.
    if (q_roots.size() < 2) return rep;
    const double t1 = std::log(q_roots[0]);
    const double t2 = std::log(q_roots[1]);
    const int s_min = sign_of_log(log_g_unbounded(t1, rho1, rho2, C));
    if (s_min > 0) return rep;  // minimum positive: no fixed point
    if (s_min == 0) {
        rep.roots.push_back(finish_rist_root(t1, theta_lo, t2, rho1, rho2, C, "marginal"));
        return rep;
    }
    const double ta = bisect_sign(sgn, theta_lo, t1);
    rep.roots.push_back(finish_rist_root(ta, theta_lo, t1, rho1, rho2, C, "stable"));
    const double tb = bisect_sign(sgn, t1, t2);
    rep.roots.push_back(finish_rist_root(tb, t1, t2, rho1, rho2, C, "unstable"));
    return rep;
}

double phi_c(double rho2, int C) {
    require(C >= 2, "phi_c: capacity must be at least 2");
    require(std::isfinite(rho2) && rho2 > C, "phi_c: requires the overloaded regime rho2 > C");

    // Sign of the minimum of the defining function over z > 0 at a given rho1.
    const auto min_sign = [&](double rho1) {
        const auto q_roots = positive_q_roots(rho1, rho2, C);
        if (q_roots.size() < 2) return 1;  // function decreases to 0 from above
        const auto value = [&](double z) {
            return one_minus_exp(log_g_unbounded(std::log(z), rho1, rho2, C));
        };
        // The minimizer is the first q root; golden section around it can only
        // drive the probe lower, so the sign of the smaller of the two is exact.
        const double zm = golden_min(value, 0.5 * q_roots[0], 0.5 * (q_roots[0] + q_roots[1]));
        const double v = std::min(value(zm), value(q_roots[0]));
        return v < 0.0 ? -1 : (v > 0.0 ? 1 : 0);
    };

    double lo = 1e-12;
    double hi = C - 1.0 - 1e-12;
    if (min_sign(lo) >= 0) return 0.0;
    if (min_sign(hi) <= 0) return C - 1.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (min_sign(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

EquilibriumReport rist1_equilibria(double rho1, double rho2, int C) {
    require(std::isfinite(rho1) && rho1 > 0.0, "rist1_equilibria: rho1 must be positive");
    require(std::isfinite(rho2) && rho2 > 0.0, "rist1_equilibria: rho2 must be positive");
    require(C >= 1, "rist1_equilibria: capacity must be at least 1");

    const double lgc = std::lgamma(C + 1.0);
    const double w_hi = rho1 + rho2;

    // D(w) = log of the ratio of the two sides of the fixed-point equation in
    // w = rho1 + rho2 S; the defining function has the sign of D.
    std::vector<double> lse_buf(static_cast<std::size_t>(C) + 1);
    const auto D = [&](double theta) {
        const double d = std::exp(theta);  // w - rho1
        const double w = rho1 + d;
        const double logw = std::log(w);
        for (int m = 0; m <= C; ++m)
            lse_buf[static_cast<std::size_t>(m)] = m * logw - std::lgamma(m + 1.0);
        return std::log(rho2) + C * logw - lgc - theta - log_sum_exp(lse_buf);
    };

    // Monotone pieces are delimited by the roots in (rho1, rho1 + rho2) of the
    // cubic derivative factor f(w).
    const auto cubic = [&](double w) {
        return ((w - (2.0 * rho1 + rho2)) * w + (rho1 * rho1 + rho1 * rho2 + rho2 * (C - 1.0))) * w -
               C * rho1 * rho2;
    };
    std::vector<double> marks{rho1, w_hi};
    for (double w : quadratic_roots(3.0, -2.0 * (2.0 * rho1 + rho2),
                                    rho1 * rho1 + rho1 * rho2 + rho2 * (C - 1.0)))
        if (w > rho1 && w < w_hi) marks.push_back(w);
    std::sort(marks.begin(), marks.end());
    std::vector<double> breaks;
    for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
        const double a = marks[i], b = marks[i + 1];
        if (b - a < 1e-14) continue;
        const double fa = cubic(std::max(a, std::nextafter(a, b)));
        const double fb = cubic(b);
        if (fa == 0.0 || fb == 0.0 || (fa > 0.0) == (fb > 0.0)) continue;
        breaks.push_back(bisect_sign(cubic, a, b));
    }

    // theta below which D >= 2 is guaranteed (bounds both logw terms).
    for (int m = 0; m <= C; ++m)
        lse_buf[static_cast<std::size_t>(m)] = m * std::log(w_hi) - std::lgamma(m + 1.0);
    const double theta_floor =
        std::log(rho2) + C * std::log(rho1) - lgc - log_sum_exp(lse_buf) - 2.0;

    std::vector<double> thetas{std::min(theta_floor, std::log(breaks.empty()
                                                                  ? rho2
                                                                  : breaks.front() - rho1) -
                                                         5.0)};
    for (double b : breaks) thetas.push_back(std::log(b - rho1));
    thetas.push_back(std::log(rho2));  // w = rho1 + rho2
    std::sort(thetas.begin(), thetas.end());

    EquilibriumReport rep;
    rep.model = FixedPointModel::RistOneRetrial;
    for (std::size_t i = 0; i + 1 < thetas.size(); ++i) {
        const double a = thetas[i], b = thetas[i + 1];
        if (b - a < 1e-14) continue;
        const double da = D(a), db = D(b);
        if (da == 0.0 || db == 0.0 || (da > 0.0) == (db > 0.0)) continue;
        const double t = bisect_sign(D, a, b);
        FixedPointRoot r;
        r.log_z = t - std::log(rho2);
        r.z = std::exp(r.log_z);
        r.r_or_s = r.z;
        r.residual = std::abs(std::expm1(std::max(std::min(D(t), 700.0), -700.0)));
        r.bracket_lo = std::exp(a) / rho2;
        r.bracket_hi = std::exp(b) / rho2;
        r.stable_hint = cubic(rho1 + std::exp(t)) < 0.0 ? "stable" : "unstable";
        rep.roots.push_back(std::move(r));
    }
    // Merge duplicates that can arise from a tangent cubic root.
    std::sort(rep.roots.begin(), rep.roots.end(),
              [](const FixedPointRoot& x, const FixedPointRoot& y) { return x.log_z < y.log_z; });
    rep.roots.erase(std::unique(rep.roots.begin(), rep.roots.end(),
                                [](const FixedPointRoot& x, const FixedPointRoot& y) {
                                    return std::abs(x.log_z - y.log_z) < 1e-9;
                                }),
                    rep.roots.end());
    rep.regime = count_regime(rep.roots.size());
    return rep;
}

SignValue psi_dar(double z, double nu, double a, int C) {
    require(std::isfinite(z) && z > 0.0 && z < 1.0, "psi_dar: z must lie in (0,1)");
    DarParams params(nu, a, C);  // validates nu, a, C
    const double logr = std::log(nu * params.h(z));
    std::vector<double> terms(static_cast<std::size_t>(C) + 1);
    double cum = 0.0;
    terms[0] = 0.0;
    for (int k = 1; k <= C; ++k) {
        cum += std::log1p(-static_cast<double>(k - 1) / C);
        terms[static_cast<std::size_t>(k)] = cum - k * logr;
    }
    const double L = std::log(z) + log_sum_exp(terms);
    return {sign_of_log(L), one_minus_exp(L)};
}

EquilibriumReport dar_fixed_points(double nu, double a, int C) {
    DarParams params(nu, a, C);

    // Precompute the occupancy-ratio log factors once; each sign query is then
    // a single log-sum-exp pass.
    std::vector<double> cum(static_cast<std::size_t>(C) + 1, 0.0);
    for (int k = 1; k <= C; ++k)
        cum[static_cast<std::size_t>(k)] =
            cum[static_cast<std::size_t>(k - 1)] + std::log1p(-static_cast<double>(k - 1) / C);
    std::vector<double> buf(cum.size());
    const auto log_level = [&](double u) {  // u = log z; defining fn positive iff < 0
        const double z = std::exp(u);
        const double logr = std::log(nu * params.h(z));
        for (int k = 0; k <= C; ++k)
            buf[static_cast<std::size_t>(k)] = cum[static_cast<std::size_t>(k)] - k * logr;
        return u + log_sum_exp(buf);
    };
    const auto sgn = [&](double u) { return -log_level(u); };

    // Scan grid: uniform over (0,1) plus a logarithmic sub-grid so light-load
    // roots below the uniform resolution are still bracketed.
    std::vector<double> us;
    const int uniform_n = 2000, log_n = 600;
    for (int i = 1; i <= uniform_n; ++i)
        us.push_back(std::log(static_cast<double>(i) / (uniform_n + 1)));
    const double u_min = std::log(1e-12), u_max = std::log(0.5);
    for (int i = 0; i <= log_n; ++i)
        us.push_back(u_min + (u_max - u_min) * i / log_n);
    us.push_back(std::log1p(-1e-9));
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());

    EquilibriumReport rep;
    rep.model = FixedPointModel::DarFinite;
    double prev_u = us.front();
    double prev_s = sgn(prev_u);
    for (std::size_t i = 1; i < us.size(); ++i) {
        const double s = sgn(us[i]);
        if ((prev_s > 0.0) != (s > 0.0)) {
            const double u = bisect_sign(sgn, prev_u, us[i]);
            FixedPointRoot r;
            r.log_z = u;
            r.z = std::exp(u);
            r.r_or_s = r.z;
            r.residual = std::abs(std::expm1(std::max(std::min(log_level(u), 700.0), -700.0)));
            r.bracket_lo = std::exp(prev_u);
            r.bracket_hi = std::exp(us[i]);
            r.stable_hint = prev_s > 0.0 ? "stable" : "unstable";
            const double nuh = nu * params.h(r.z);
            r.branch = nuh < 1.0 ? "nu*h<1" : (nuh > 1.0 ? "nu*h>1" : "nu*h=1");
            rep.roots.push_back(std::move(r));
        }
        prev_u = us[i];
        prev_s = s;
    }
    if (rep.roots.empty())
        throw std::runtime_error("dar_fixed_points: no root bracketed; the equation "
                                 "always has at least one");
    rep.regime = count_regime(rep.roots.size());
    return rep;
}

EquilibriumReport dar_limit_fixed_points(double nu, double a) {
    require(std::isfinite(nu) && nu > 0.0, "dar_limit_fixed_points: nu must be positive");
    require(std::isfinite(a) && a > 1.0, "dar_limit_fixed_points: a must exceed 1");
    return quadratic_h_report(FixedPointModel::DarLimit, nu, a);
}

EquilibriumReport nlmm1_fixed_points(double nu, const std::function<double(double)>& h) {
    require(std::isfinite(nu) && nu > 0.0, "nlmm1_fixed_points: nu must be positive");
    require(static_cast<bool>(h), "nlmm1_fixed_points: service profile callback required");

    const double target = 1.0 / nu;
    const auto f = [&](double s) {
        const double hv = h(s);
        if (!(hv >= 1.0 - 1e-9) || !std::isfinite(hv))
            throw std::invalid_argument("nlmm1_fixed_points: h must be finite and at least 1");
        return (1.0 - s) * hv - target;
    };

    EquilibriumReport rep;
    rep.model = FixedPointModel::NlMm1;
    const int n = 4000;
    double prev_s = 1e-12;
    double prev_f = f(prev_s);
    for (int i = 1; i <= n; ++i) {
        const double s = (i == n) ? 1.0 - 1e-12 : static_cast<double>(i) / n;
        const double fs = f(s);
        if (prev_f == 0.0 || ((prev_f > 0.0) != (fs > 0.0))) {
            const double root = prev_f == 0.0 ? prev_s : bisect_sign(f, prev_s, s);
            FixedPointRoot r;
            r.z = root;
            r.log_z = std::log(root);
            r.r_or_s = root;
            r.residual = std::abs(nu * (1.0 - root) * h(root) - 1.0);
            r.bracket_lo = prev_s;
            r.bracket_hi = s;
            r.stable_hint = prev_f > 0.0 ? "stable" : "unstable";
            rep.roots.push_back(std::move(r));
        }
        prev_s = s;
        prev_f = fs;
    }
    // A grid point landing exactly on a root enters once as a bracket end and
    // once through the prev_f == 0 branch; keep one copy.
    rep.roots.erase(std::unique(rep.roots.begin(), rep.roots.end(),
                                [](const FixedPointRoot& x, const FixedPointRoot& y) {
                                    return std::abs(x.z - y.z) < 1e-9;
                                }),
                    rep.roots.end());
    rep.regime = count_regime(rep.roots.size());
    return rep;
}

EquilibriumReport nlmm1_fixed_points(double nu, double a) {
    require(std::isfinite(nu) && nu > 0.0, "nlmm1_fixed_points: nu must be positive");
    require(std::isfinite(a) && a > 0.0, "nlmm1_fixed_points: a must be positive");
    return quadratic_h_report(FixedPointModel::NlMm1, nu, a);
}

ProbVec rist_pi(double R, const RistParams& params) {
    require(std::isfinite(R) && R > 0.0 && R < 1.0, "rist_pi: R must lie in (0,1)");
    const double z = R / (1.0 - R);
    return product_form_pair_dist(params.rho1(), params.rho2() * z, params.C);
}

ProbVec rist1_pi(double S, const RistParams& params) {
    require(std::isfinite(S) && S > 0.0 && S < 1.0, "rist1_pi: S must lie in (0,1)");
    return product_form_pair_dist(params.rho1(), params.rho2() * S, params.C);
}

ProbVec dar_fixed_point_vector(double z, const DarParams& params) {
    require(std::isfinite(z) && z > 0.0 && z < 1.0,
            "dar_fixed_point_vector: z must lie in (0,1)");
    const int C = params.C;
    const double logr = std::log(params.nu * params.h(z));
    std::vector<double> lw(static_cast<std::size_t>(C) + 1);
    double cum = 0.0;
    lw[static_cast<std::size_t>(C)] = std::log(z);  // occupancy C, depth k = 0
    for (int k = 1; k <= C; ++k) {
        cum += std::log1p(-static_cast<double>(k - 1) / C);
        lw[static_cast<std::size_t>(C - k)] = std::log(z) + cum - k * logr;
    }
    const double lz = log_sum_exp(lw);
    std::vector<double> p(lw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) sum += p[i] = std::exp(lw[i] - lz);
    for (double& v : p) v /= sum;
    return ProbVec(ProbVec::Space::DarOccupancy, std::move(p));
}

ProbVec nlmm1_pi(double S, double nu, const std::function<double(double)>& h, int K) {
    require(std::isfinite(S) && S > 0.0 && S < 1.0, "nlmm1_pi: S must lie in (0,1)");
    require(K >= 1, "nlmm1_pi: truncation must be at least 1");
    const double rate = nu * h(S);
    require(rate > 1.0, "nlmm1_pi: requires nu h(S) > 1");
    const double r = 1.0 / rate;
    std::vector<double> p(static_cast<std::size_t>(K) + 1);
    double sum = 0.0;
    double t = 1.0;
    for (int k = 0; k <= K; ++k, t *= r) sum += p[static_cast<std::size_t>(k)] = t;
    for (double& v : p) v /= sum;
    return ProbVec(ProbVec::Space::QueueLengths, std::move(p));
}

}  // namespace reroute
