#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "reroute/core.hpp"
#include "reroute/equilibria.hpp"
#include "reroute/mfode.hpp"
#include "reroute/stability.hpp"

using namespace reroute;

namespace {

const auto kQuadH2 = [](double x) { return 1.0 + 2.0 * x * (1.0 - x); };
const auto kQuadH2p = [](double x) { return 2.0 * (1.0 - 2.0 * x); };

// Forward-equation propagation dp/dt = p Q by plain fixed-step RK4; the
// reference semigroup for decay-rate fits.
std::vector<double> propagate_forward(const LinearGenerator& gen, std::vector<double> p,
                                      double t_end, double dt) {
    const std::size_t n = gen.dim;
    const auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += v[i] * gen.q[i * n + j];
            out[j] = s;
        }
    };
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const int steps = static_cast<int>(std::ceil(t_end / dt));
    const double h = t_end / steps;
    for (int s = 0; s < steps; ++s) {
        apply(p, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        apply(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        apply(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
        apply(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return p;
}

double euclid_dist(const std::vector<double>& a, const ProbVec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double underloaded_root(const RistParams& params) {
    const EquilibriumReport rep = rist_equilibria(params.rho1(), params.rho2(), params.C);
    REQUIRE(rep.roots.size() == 1);
    return rep.roots[0].r_or_s;
}

}  // namespace

TEST_CASE("constructed pair generators are conservative and reversible") {
    const RistParams params(1.0, 1.0, 0.5, 3);
    const LinearGenerator gen = build_rist_linear_generator(underloaded_root(params), params);
    const std::size_t n = gen.dim;
    REQUIRE(n == RistStateSpace(3).size());
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) CHECK(gen.q[i * n + j] >= 0.0);
            row += gen.q[i * n + j];
        }
        CHECK(std::abs(row) < 1e-12);
    }
    CHECK(gen.reversible);
    CHECK(gen.detailed_balance_residual < 1e-10);

    // Stationarity: pi Q = 0.
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += gen.stationary[i] * gen.q[i * n + j];
        CHECK(std::abs(s) < 1e-10);
    }
    CHECK_THROWS_AS((void)build_rist_linear_generator(0.0, params), std::invalid_argument);
    CHECK_THROWS_AS((void)build_rist_linear_generator(1.0, params), std::invalid_argument);
}

TEST_CASE("three-state generator matches the hand stationary solve") {
    // C = 1, R = 1/2: star chain around the empty state with
    // pi(0,1)/pi(0,0) = lambda z / mu2 and pi(1,0)/pi(0,0) = lambda/mu1.
    const RistParams params(1.0, 1.0, 0.5, 1);
    const LinearGenerator gen = build_rist_linear_generator(0.5, params);
    REQUIRE(gen.dim == 3);
    // Enumeration order (0,0), (0,1), (1,0); z = R/(1-R) = 1.
    CHECK(gen.stationary[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(gen.stationary[1] == doctest::Approx(0.50).epsilon(1e-12));
    CHECK(gen.stationary[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("two-state chain gap equals the total switching rate") {
    const double alpha = 0.3, beta = 1.1;
    LinearGenerator gen{
        2,
        {-alpha, alpha, beta, -beta},
        ProbVec(ProbVec::Space::QueueLengths, {beta / (alpha + beta), alpha / (alpha + beta)}),
        0.0,
        true};
    CHECK(spectral_gap(gen) == doctest::Approx(alpha + beta).epsilon(1e-10));
}

TEST_CASE("gap is positive for constructed pair generators") {
    for (const RistParams& params :
         {RistParams(1.0, 1.0, 0.5, 3), RistParams(2.0, 1.0, 1.0, 4)}) {
        const LinearGenerator gen =
            build_rist_linear_generator(underloaded_root(params), params);
        CHECK(spectral_gap(gen) > 0.0);
    }
}

TEST_CASE("gap matches the slowest semigroup decay rate within two percent") {
    const RistParams params(1.0, 1.0, 0.5, 3);
    const LinearGenerator gen = build_rist_linear_generator(underloaded_root(params), params);
    const double kappa = spectral_gap(gen);

    std::vector<double> start(gen.dim, 0.0);
    start[0] = 1.0;
    std::vector<double> times, dists;
    const std::vector<double> at5 = propagate_forward(gen, start, 5.0, 0.002);
    std::vector<double> p = at5;
    for (int s = 0; s <= 20; ++s) {
        const double t = 5.0 + 0.25 * s;
        if (s > 0) p = propagate_forward(gen, p, 0.25, 0.002);
        times.push_back(t);
        dists.push_back(euclid_dist(p, gen.stationary));
    }
    const double fitted = -log_slope(times, dists);
    CHECK(std::abs(fitted - kappa) / kappa < 0.02);
}

TEST_CASE("gap scales linearly under time rescaling") {
    const RistParams params(1.0, 1.0, 0.5, 3);
    const LinearGenerator gen = build_rist_linear_generator(underloaded_root(params), params);
    const double kappa = spectral_gap(gen);
    for (double c : {0.5, 2.0}) {
        LinearGenerator scaled = gen;
        for (double& v : scaled.q) v *= c;
        scaled.detailed_balance_residual *= c;
        CHECK(spectral_gap(scaled) == doctest::Approx(c * kappa).epsilon(1e-10));
    }
}

TEST_CASE("non-reversible generators are refused") {
    // Directed 3-cycle: uniform stationary law but no detailed balance.
    LinearGenerator cycle{3,
                          {-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0},
                          ProbVec(ProbVec::Space::QueueLengths, {1.0 / 3, 1.0 / 3, 1.0 / 3}),
                          1.0 / 3,
                          false};
    CHECK_THROWS_AS((void)spectral_gap(cycle), std::invalid_argument);
}

TEST_CASE("pair certificate reports gap, threshold, and a consistent verdict") {
    const RistParams params(1.0, 1.0, 0.5, 3);
    const double R = underloaded_root(params);
    const StabilityReport rep = check_rist_criterion(R, params);
    CHECK(rep.model == "RistUnbounded");
    CHECK(rep.method == "jacobi-gap");
    CHECK(rep.kappa > 0.0);
    CHECK(rep.threshold ==
          doctest::Approx(params.lambda / (1.0 - R) * std::sqrt(params.C / params.rho2()))
              .epsilon(1e-12));
    CHECK(rep.margin == doctest::Approx(rep.kappa - rep.threshold).epsilon(1e-12));
    CHECK((rep.verdict == Verdict::Met) == (rep.margin > 0.0));
    CHECK(rep.detailed_balance_residual < 1e-10);

    CHECK_THROWS_AS((void)check_rist_criterion(0.9 * R, params), std::invalid_argument);
}

TEST_CASE("pair certificate verdict is invariant under uniform rate scaling") {
    const RistParams base(1.0, 1.0, 0.5, 3);
    const RistParams fast(2.0, 2.0, 1.0, 3);  // same rho1, rho2
    const double R = underloaded_root(base);
    const StabilityReport slow = check_rist_criterion(R, base);
    const StabilityReport quick = check_rist_criterion(R, fast);
    CHECK(quick.kappa == doctest::Approx(2.0 * slow.kappa).epsilon(1e-10));
    CHECK(quick.threshold == doctest::Approx(2.0 * slow.threshold).epsilon(1e-10));
    CHECK(quick.verdict == slow.verdict);
}

TEST_CASE("queue gap closed form") {
    const auto flat = [](double) { return 1.0; };
    CHECK(nlmm1_gap(0.5, 2.0, flat) ==
          doctest::Approx((std::sqrt(2.0) - 1.0) * (std::sqrt(2.0) - 1.0)).epsilon(1e-12));

    const double S = nlmm1_fixed_points(1.4, 2.0).roots[0].z;
    const double kappa = nlmm1_gap(S, 1.4, kQuadH2);
    // At a fixed point nu h(S) = 1/(1-S), so the gap is (1/sqrt(1-S) - 1)^2.
    const double via_identity = std::pow(1.0 / std::sqrt(1.0 - S) - 1.0, 2.0);
    CHECK(kappa == doctest::Approx(via_identity).epsilon(1e-10));
    CHECK(kappa == doctest::Approx(0.20124723132369635).epsilon(1e-9));

    // Continuity into the degenerate point: the gap vanishes as the service
    // level approaches 1 from above.
    CHECK(nlmm1_gap(0.5, 1.0 + 1e-8, flat) < 1e-7);
    CHECK_THROWS_AS((void)nlmm1_gap(0.5, 0.5, flat), std::invalid_argument);
}

TEST_CASE("queue certificate matches frozen values at the reference load") {
    const double S = nlmm1_fixed_points(1.4, 2.0).roots[0].z;
    const StabilityReport rep = check_nlmm1_criterion(S, 1.4, 2.0);
    CHECK(rep.model == "NlMm1");
    CHECK(rep.method == "closed-form");
    CHECK(rep.verdict == Verdict::Met);
    CHECK(rep.kappa == doctest::Approx(0.20124723132369635).epsilon(1e-9));
    CHECK(rep.threshold == doctest::Approx(0.06876956022187866).epsilon(1e-9));
    CHECK(rep.margin == doctest::Approx(0.13247767110181768).epsilon(1e-9));
}

TEST_CASE("queue certificate across loads") {
    const double s13 = nlmm1_fixed_points(1.3, 2.0).roots[0].z;
    CHECK(check_nlmm1_criterion(s13, 1.3, 2.0).verdict == Verdict::Met);

    const double s17 = nlmm1_fixed_points(1.7, 2.0).roots[0].z;
    CHECK(check_nlmm1_criterion(s17, 1.7, 2.0).verdict == Verdict::NotMet);

    CHECK_THROWS_AS((void)check_nlmm1_criterion(0.3, 1.4, 2.0), std::invalid_argument);
}

TEST_CASE("half-load point is certified for any amplification") {
    // nu = 8/(4+a) puts the fixed point at 1/2 where h' vanishes; the
    // certificate threshold is zero and the gap positive.
    for (double a : {2.0, 5.0, 10.0}) {
        const double nu = 8.0 / (4.0 + a);
        const StabilityReport rep = check_nlmm1_criterion(0.5, nu, a);
        CHECK(rep.verdict == Verdict::Met);
        CHECK(rep.threshold == doctest::Approx(0.0));
        CHECK(rep.kappa > 0.0);
    }
}

TEST_CASE("closed-form and callback certificates agree on a random grid") {
    RngStream rng(404);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double a = 1.1 + 4.9 * rng.next_double();
        const double nu =
            (trial % 2 == 0) ? 1.05 + 1.95 * rng.next_double() : 0.95 + 0.05 * rng.next_double();
        const auto h = [a](double x) { return 1.0 + a * x * (1.0 - x); };
        const auto hp = [a](double x) { return a * (1.0 - 2.0 * x); };
        for (const FixedPointRoot& r : nlmm1_fixed_points(nu, a).roots) {
            const StabilityReport closed = check_nlmm1_criterion(r.z, nu, a);
            const StabilityReport general = check_nlmm1_criterion(r.z, nu, h, hp);
            CHECK(closed.verdict == general.verdict);
            CHECK(closed.kappa == doctest::Approx(general.kappa).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("stability interval at the reference amplification") {
    const auto [lo, hi] = nlmm1_stability_interval(2.0);
    CHECK(lo == doctest::Approx(1.2067767147759219).epsilon(1e-9));
    CHECK(hi == doctest::Approx(1.5978411855658965).epsilon(1e-9));
    CHECK(std::abs(lo - 1.2068) < 5e-4);
    CHECK(std::abs(hi - 1.5978) < 5e-4);
}

TEST_CASE("interval endpoints separate certified from uncertified loads") {
    for (double a : {2.0, 5.0}) {
        const auto [lo, hi] = nlmm1_stability_interval(a);
        REQUIRE(lo < hi);
        // Below unit load two fixed points coexist; the interval certifies the
        // one on the falling branch, which is the last root in z order.
        const auto verdict_at = [&](double nu) {
            const EquilibriumReport rep = nlmm1_fixed_points(nu, a);
            REQUIRE(!rep.roots.empty());
            return check_nlmm1_criterion(rep.roots.back().z, nu, a).verdict;
        };
        CHECK(verdict_at(lo + 1e-3) == Verdict::Met);
        CHECK(verdict_at(hi - 1e-3) == Verdict::Met);
        CHECK(verdict_at(lo - 1e-3) == Verdict::NotMet);
        CHECK(verdict_at(hi + 1e-3) == Verdict::NotMet);
    }
    // The certified window always straddles the half-load point 8/(4+a):
    // the mapping from the bracketing polynomial roots to loads is monotone
    // across it. At a = 6 that places the lower endpoint below unit load.
    for (double a : {2.0, 6.0}) {
        const auto [lo, hi] = nlmm1_stability_interval(a);
        const double u = 8.0 / (4.0 + a);
        CHECK(lo < u);
        CHECK(u < hi);
    }
}

TEST_CASE("linearized probe labels known equilibria") {
    RngStream rng(7);

    SUBCASE("occupancy model, light load") {
        const DarParams params(0.5, 2.0, 20);
        const EquilibriumReport rep = dar_fixed_points(0.5, 2.0, 20);
        REQUIRE(rep.roots.size() == 1);
        const ProbVec eq = dar_fixed_point_vector(rep.roots[0].z, params);
        const auto rhs = [&](std::span<const double> in, std::span<double> out) {
            dar_flow(params, in, out);
        };
        const ProbeReport probe = linearized_probe(rhs, eq.values(), 6, 30.0, rng);
        CHECK(probe.label == "Stable");
        CHECK(probe.growth_rate < -0.1);
    }

    SUBCASE("queue at the certified load") {
        const double S = nlmm1_fixed_points(1.4, 2.0).roots[0].z;
        const int K = nlmm1_default_truncation(1.4);
        const ProbVec eq = nlmm1_pi(S, 1.4, kQuadH2, K);
        const auto rhs = [&](std::span<const double> in, std::span<double> out) {
            nlmm1_flow(1.4, kQuadH2, in, out);
        };
        const ProbeReport probe = linearized_probe(rhs, eq.values(), 6, 30.0, rng);
        CHECK(probe.label == "Stable");
        // Exact tangent spectrum has leading nonzero eigenvalue -0.2039.
        CHECK(std::abs(probe.growth_rate + 0.2039) < 0.01);
    }

    SUBCASE("pair model, underloaded") {
        const RistParams params(1.0, 1.0, 0.5, 3);
        const RistStateSpace space(3);
        const double R = underloaded_root(params);
        const ProbVec eq = rist_pi(R, params);
        const auto rhs = [&](std::span<const double> in, std::span<double> out) {
            if (!rist_unbounded_flow(params, space, in, 1e-6, out))
                throw SingularFlowError(0.0);
        };
        const ProbeReport probe = linearized_probe(rhs, eq.values(), 6, 30.0, rng);
        CHECK(probe.label == "Stable");
    }

    SUBCASE("queue below unit load separates the two branches") {
        // nu = 0.96 has two fixed points; the one on the rising branch of
        // (1-S)h(S) repels, the falling one attracts.
        const EquilibriumReport rep = nlmm1_fixed_points(0.96, 2.0);
        REQUIRE(rep.roots.size() == 2);
        const int K = 600;
        const auto rhs = [&](std::span<const double> in, std::span<double> out) {
            nlmm1_flow(0.96, kQuadH2, in, out);
        };
        const ProbVec lo_eq = nlmm1_pi(rep.roots[0].z, 0.96, kQuadH2, K);
        const ProbeReport lo_probe = linearized_probe(rhs, lo_eq.values(), 6, 30.0, rng);
        CHECK(lo_probe.label == "Unstable");
        CHECK(rep.roots[0].stable_hint == "unstable");

        const ProbVec hi_eq = nlmm1_pi(rep.roots[1].z, 0.96, kQuadH2, K);
        const ProbeReport hi_probe = linearized_probe(rhs, hi_eq.values(), 6, 30.0, rng);
        CHECK(hi_probe.label == "Stable");
        CHECK(rep.roots[1].stable_hint == "stable");
    }

    SUBCASE("non-equilibrium points are rejected") {
        const DarParams params(0.5, 2.0, 20);
        std::vector<double> flat(21, 1.0 / 21.0);
        const auto rhs = [&](std::span<const double> in, std::span<double> out) {
            dar_flow(params, in, out);
        };
        CHECK_THROWS_AS((void)linearized_probe(rhs, flat, 6, 30.0, rng),
                        std::invalid_argument);
    }
}

TEST_CASE("log slope recovers a known exponential rate") {
    std::vector<double> times, values;
    for (int i = 0; i <= 20; ++i) {
        const double t = 0.5 * i;
        times.push_back(t);
        values.push_back(3.0 * std::exp(-0.7 * t));
    }
    CHECK(log_slope(times, values) == doctest::Approx(-0.7).epsilon(1e-9));

    const std::vector<double> bad_vals{1.0, -1.0};
    const std::vector<double> two_times{0.0, 1.0};
    CHECK_THROWS_AS((void)log_slope(two_times, bad_vals), std::invalid_argument);
    const std::vector<double> single{1.0};
    CHECK_THROWS_AS((void)log_slope(single, single), std::invalid_argument);
}
