#include "reroute/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "numerics.hpp"
#include "reroute/equilibria.hpp"

namespace reroute {
namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, run until the
// off-diagonal Frobenius norm falls below 1e-12 relative to the matrix norm.
// All rotation parameters depend only on entry ratios, so rescaling the
// matrix by a power of two rescales the result exactly.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    const auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
    double fro = 0.0;
    for (double v : a) fro += v * v;
    fro = std::sqrt(fro);
    const double tol = 1e-12 * std::max(1e-300, fro);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * at(p, q) * at(p, q);
        if (std::sqrt(off) <= tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                at(p, p) -= t * apq;
                at(q, q) += t * apq;
                at(p, q) = 0.0;
                at(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = at(i, p);
                    const double aiq = at(i, q);
                    at(i, p) = aip - s * (aiq + tau * aip);
                    at(i, q) = aiq + s * (aip - tau * aiq);
                    at(p, i) = at(i, p);
                    at(q, i) = at(i, q);
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

double quintic_upper(double a, double x) {  // endpoint polynomial, root in (sqrt2/2, 1)
    return ((((a * x - a) * x - 3.0 * a) * x - a) * x + (a - 1.0)) * x + a + 1.0;
}

double quintic_lower(double a, double x) {  // endpoint polynomial, root in (0, sqrt2/2)
    return ((((a * x - a) * x + a) * x + 3.0 * a) * x - (1.0 + a)) * x + 1.0 - a;
}

}  // namespace

LinearGenerator build_rist_linear_generator(double R, const RistParams& params) {
    require(std::isfinite(R) && R > 0.0 && R < 1.0,
            "build_rist_linear_generator: R must lie in (0,1)");
    RistStateSpace space(params.C);
    const std::size_t n = space.size();
    std::vector<double> q(n * n, 0.0);
    const double reroute = params.lambda * R / (1.0 - R);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x, y] = space.states()[i];
        double out = 0.0;
        if (x + y < space.capacity()) {
            q[i * n + space.index(x + 1, y)] += params.lambda;
            q[i * n + space.index(x, y + 1)] += reroute;
            out += params.lambda + reroute;
        }
        if (x >= 1) {
            q[i * n + space.index(x - 1, y)] += params.mu1 * x;
            out += params.mu1 * x;
        }
        if (y >= 1) {
            q[i * n + space.index(x, y - 1)] += params.mu2 * y;
            out += params.mu2 * y;
        }
        q[i * n + i] = -out;
    }
    LinearGenerator gen{n, std::move(q), rist_pi(R, params), 0.0, false};
    double resid = 0.0;
    double qmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            resid = std::max(resid, std::abs(gen.stationary[i] * gen.q[i * n + j] -
                                             gen.stationary[j] * gen.q[j * n + i]));
            qmax = std::max({qmax, std::abs(gen.q[i * n + j]), std::abs(gen.q[j * n + i])});
        }
    gen.detailed_balance_residual = resid;
    gen.reversible = resid <= 1e-10 * std::max(1.0, qmax);
    return gen;
}

double spectral_gap(const LinearGenerator& gen) {
    require(gen.dim >= 2, "spectral_gap: need at least two states");
    require(gen.dim <= 2000, "spectral_gap: dimension above 2000 refused");
    require(gen.q.size() == gen.dim * gen.dim && gen.stationary.size() == gen.dim,
            "spectral_gap: inconsistent generator");
    if (!gen.reversible)
        throw std::invalid_argument("spectral_gap: generator is not reversible");
    const std::size_t n = gen.dim;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gen.stationary[i] > 0.0))
            throw std::invalid_argument("spectral_gap: stationary law must be positive");
        sq[i] = std::sqrt(gen.stationary[i]);
    }
    // A = D^{1/2} (-Q) D^{-1/2}; reversibility makes it symmetric up to
    // rounding, which the symmetrized copy absorbs.
    std::vector<double> a(n * n);
    double amax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            a[i * n + j] = -sq[i] * gen.q[i * n + j] / sq[j];
            amax = std::max(amax, std::abs(a[i * n + j]));
        }
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::abs(a[i * n + j] - a[j * n + i]));
            const double m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    if (asym > 1e-8 * std::max(1.0, amax))
        throw std::invalid_argument("spectral_gap: symmetrization residual too large");
    const auto ev = jacobi_eigenvalues(std::move(a), n);
    if (std::abs(ev.front()) > 1e-8 * std::max(1.0, amax))
        throw std::runtime_error("spectral_gap: zero eigenvalue not resolved");
    return std::max(ev[1], 0.0);
}

StabilityReport check_rist_criterion(double R, const RistParams& params) {
    require(std::isfinite(R) && R > 0.0 && R < 1.0, "check_rist_criterion: R must lie in (0,1)");
    const ProbVec pi = rist_pi(R, params);
    RistStateSpace space(params.C);
    double boundary_mass = 0.0;
    for (std::size_t i : space.boundary()) boundary_mass += pi[i];
    if (std::abs(boundary_mass - R) > 1e-8)
        throw std::invalid_argument(
            "check_rist_criterion: R does not solve the fixed-point identity");
    const LinearGenerator gen = build_rist_linear_generator(R, params);
    StabilityReport rep;
    rep.model = "RistUnbounded";
    rep.kappa = spectral_gap(gen);
    rep.threshold = params.lambda / (1.0 - R) * std::sqrt(params.C / params.rho2());
    rep.margin = rep.kappa - rep.threshold;
    rep.verdict = rep.kappa > rep.threshold ? Verdict::Met : Verdict::NotMet;
    rep.detailed_balance_residual = gen.detailed_balance_residual;
    rep.method = "jacobi-gap";
    return rep;
}

double nlmm1_gap(double S, double nu, const std::function<double(double)>& h) {
    require(std::isfinite(S) && S > 0.0 && S < 1.0, "nlmm1_gap: S must lie in (0,1)");
    require(std::isfinite(nu) && nu > 0.0, "nlmm1_gap: nu must be positive");
    const double level = nu * h(S);
    require(level > 1.0, "nlmm1_gap: requires nu h(S) > 1");
    const double r = std::sqrt(level) - 1.0;
    return r * r;
}

StabilityReport check_nlmm1_criterion(double S, double nu,
                                      const std::function<double(double)>& h,
                                      const std::function<double(double)>& hprime) {
    require(std::isfinite(S) && S > 0.0 && S < 1.0,
            "check_nlmm1_criterion: S must lie in (0,1)");
    if (std::abs(nu * (1.0 - S) * h(S) - 1.0) > 1e-8)
        throw std::invalid_argument(
            "check_nlmm1_criterion: S does not solve the fixed-point identity");
    StabilityReport rep;
    rep.model = "NlMm1";
    rep.kappa = nlmm1_gap(S, nu, h);
    rep.threshold = nu * S * std::abs(hprime(S));
    rep.margin = rep.kappa - rep.threshold;
    rep.verdict = rep.kappa > rep.threshold ? Verdict::Met : Verdict::NotMet;
    rep.method = "closed-form";
    return rep;
}

StabilityReport check_nlmm1_criterion(double S, double nu, double a) {
    require(std::isfinite(a) && a > 0.0, "check_nlmm1_criterion: a must be positive");
    StabilityReport rep = check_nlmm1_criterion(
        S, nu, [a](double x) { return 1.0 + a * x * (1.0 - x); },
        [a](double x) { return a * (1.0 - 2.0 * x); });
    // Equivalent polynomial form of the same inequality; must agree away from
    // the margin boundary.
    const double lhs = a * S * std::abs(1.0 - 2.0 * S);
    const double root = 1.0 - std::sqrt(1.0 - S);
    const double rhs = root * root * (1.0 + a * S * (1.0 - S));
    const bool met_poly = lhs < rhs;
    if (met_poly != (rep.verdict == Verdict::Met) &&
        std::abs(rep.margin) > 1e-10 * std::max(1.0, rep.kappa))
        throw std::logic_error("check_nlmm1_criterion: equivalent forms disagree");
    return rep;
}

std::pair<double, double> nlmm1_stability_interval(double a) {
    require(std::isfinite(a) && a > 1.0, "nlmm1_stability_interval: a must exceed 1");
    const double half = std::sqrt(0.5);
    const double z_upper = detail::bisect_sign([a](double x) { return quintic_upper(a, x); },
                                               half, 1.0 - 1e-15);
    const double z_lower = detail::bisect_sign([a](double x) { return quintic_lower(a, x); },
                                               1e-15, half);
    const auto nu_of = [a](double z) {
        const double z2 = z * z;
        return 1.0 / (z2 * (1.0 + a * z2 - a * z2 * z2));
    };
    double lo = nu_of(z_upper);
    double hi = nu_of(z_lower);
    if (lo > hi) std::swap(lo, hi);
    return {lo, hi};
}

ProbeReport linearized_probe(
    const std::function<void(std::span<const double>, std::span<double>)>& rhs,
    std::span<const double> equilibrium, int n_directions, double horizon, RngStream& rng) {
    require(n_directions >= 1, "linearized_probe: need at least one direction");
    require(std::isfinite(horizon) && horizon > 0.0, "linearized_probe: horizon must be positive");
    const std::size_t n = equilibrium.size();
    require(n >= 2, "linearized_probe: need at least two coordinates");

    std::vector<double> f0(n);
    rhs(equilibrium, f0);
    for (double v : f0)
        if (std::abs(v) > 1e-8)
            throw std::invalid_argument("linearized_probe: point is not an equilibrium");

    const double fd_step = 1e-6;
    std::vector<double> xp(n), xm(n), fp(n), fm(n);
    const auto apply_j = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            xp[i] = equilibrium[i] + fd_step * v[i];
            xm[i] = equilibrium[i] - fd_step * v[i];
        }
        rhs(xp, fp);
        rhs(xm, fm);
        for (std::size_t i = 0; i < n; ++i) out[i] = (fp[i] - fm[i]) / (2.0 * fd_step);
    };

    const auto project_normalize = [&](std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(n);
        double norm = 0.0;
        for (double& x : v) {
            x -= mean;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& x : v) x /= norm;
        return norm;
    };

    // Step size resolving the stiffest rate seen from a first probe.
    std::vector<double> v(n), jv(n);
    for (double& x : v) x = rng.next_double() - 0.5;
    project_normalize(v);
    apply_j(v, jv);
    double rate = 0.0;
    for (double x : jv) rate = std::max(rate, std::abs(x));
    const double dt = std::min(0.02, 0.2 / std::max(rate, 1.0));
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const double step = horizon / static_cast<double>(steps);

    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const auto propagate = [&](std::vector<double>& w) {
        for (std::size_t s = 0; s < steps; ++s) {
            apply_j(w, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * step * k1[i];
            apply_j(tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * step * k2[i];
            apply_j(tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + step * k3[i];
            apply_j(tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                w[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };

    double best = -detail::kInf;
    for (int d = 0; d < n_directions; ++d) {
        for (double& x : v) x = rng.next_double() - 0.5;
        project_normalize(v);
        double growth = 0.0, prev = detail::kInf;
        for (int it = 0; it < 60; ++it) {
            propagate(v);
            // Re-project before reading the norm: rounding in the finite
            // differences keeps injecting the conserved-mass mode, which
            // never decays and would otherwise swallow the iteration.
            const double norm = project_normalize(v);
            if (norm <= 1e-300) {
                growth = -detail::kInf;
                break;
            }
            growth = std::log(norm) / horizon;
            if (std::abs(growth - prev) < 1e-6 * std::max(1.0, std::abs(growth))) break;
            prev = growth;
        }
        best = std::max(best, growth);
    }

    ProbeReport rep;
    rep.growth_rate = best;
    rep.label = best > 1e-4 ? "Unstable" : (best < -1e-4 ? "Stable" : "Marginal");
    return rep;
}

double log_slope(std::span<const double> times, std::span<const double> values) {
    require(times.size() == values.size() && times.size() >= 2,
            "log_slope: need matching samples, at least two");
    const auto n = static_cast<double>(times.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(values[i] > 0.0, "log_slope: values must be positive");
        const double y = std::log(values[i]);
        st += times[i];
        sy += y;
        stt += times[i] * times[i];
        sty += times[i] * y;
    }
    const double denom = n * stt - st * st;
    require(denom > 0.0, "log_slope: degenerate time grid");
    return (n * sty - st * sy) / denom;
}

}  // namespace reroute
