#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "reroute/core.hpp"
#include "reroute/equilibria.hpp"

using namespace reroute;

namespace {

// Independent oracles. These deliberately avoid the library's log-domain
// paths: plain floating sums, the classical blocking recurrence, and brute
// sign scans.

// Blocking probability of an M/M/C/C queue at offered load w, by the stable
// recurrence B_c = w B_{c-1} / (c + w B_{c-1}).
double erlang_b(double w, int C) {
    double b = 1.0;
    for (int c = 1; c <= C; ++c) b = w * b / (c + w * b);
    return b;
}

// Naive G(z) = z sum_{m<C} (C!/m!) (rho1 + rho2 z)^(m-C); usable while the
// factorial ratios stay in range (C <= 30 or so).
double naive_g(double z, double rho1, double rho2, int C) {
    const double w = rho1 + rho2 * z;
    double fact = 1.0;  // C!/m! for m = C-1 down to 0
    double wpow = 1.0 / w;
    double sum = 0.0;
    for (int m = C - 1; m >= 0; --m) {
        fact *= m + 1;
        sum += fact * wpow;
        wpow /= w;
    }
    return z * sum;
}

// Naive saturation sum z sum_{k<=C} prod_{i<k}(1-i/C) (nu h(z))^(-k).
double naive_dar_sum(double z, double nu, double a, int C) {
    const double r = 1.0 / (nu * (1.0 + a * z * (1.0 - z)));
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= C; ++k) {
        term *= (1.0 - static_cast<double>(k - 1) / C) * r;
        sum += term;
    }
    return z * sum;
}

// Sign-change midpoints of f over a uniform n-point scan of (lo, hi).
std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi,
                               int n) {
    std::vector<double> roots;
    const double step = (hi - lo) / n;
    double prev_x = lo;
    double prev_f = f(prev_x);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + step * i;
        const double fx = f(x);
        if ((prev_f > 0.0) != (fx > 0.0)) roots.push_back(0.5 * (prev_x + x));
        prev_x = x;
        prev_f = fx;
    }
    return roots;
}

// Matches solver roots against scan midpoints: equal counts, each root within
// one scan step of its midpoint.
void check_against_scan(const EquilibriumReport& rep, const std::vector<double>& scanned,
                        double step) {
    REQUIRE(rep.roots.size() == scanned.size());
    for (std::size_t i = 0; i < scanned.size(); ++i)
        CHECK(std::abs(rep.roots[i].z - scanned[i]) < step);
}

// Bisection on (1-z)(1+az(1-z)) - 1/nu over a given bracket; the reference
// for every quadratic-profile fixed point.
double limit_cubic_root(double nu, double a, double lo, double hi) {
    const auto f = [&](double z) { return (1.0 - z) * (1.0 + a * z * (1.0 - z)) - 1.0 / nu; };
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((f(lo) > 0.0) == (f(mid) > 0.0) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("sign function matches hand algebra at capacity one") {
    // C=1: G = z/(rho1 + rho2 z); unique root z = rho1/(1-rho2) when rho2 < 1.
    const double rho1 = 0.5, rho2 = 0.5;
    const double z_star = rho1 / (1.0 - rho2);
    CHECK(phi_sign(0.9 * z_star, rho1, rho2, 1).sign == 1);
    CHECK(phi_sign(1.1 * z_star, rho1, rho2, 1).sign == -1);
    const SignValue v = phi_sign(0.5, rho1, rho2, 1);
    CHECK(v.value == doctest::Approx(1.0 - 0.5 / (0.5 + 0.25)).epsilon(1e-12));
}

TEST_CASE("sign changes bracket the quadratic roots at capacity two") {
    // rho1=0.2, rho2=3: the defining function vanishes at the roots of
    // 3 z^2 - 1.2 z + 0.04.
    const double disc = std::sqrt(1.2 * 1.2 - 4.0 * 3.0 * 0.04);
    const double z_lo = (1.2 - disc) / 6.0;
    const double z_hi = (1.2 + disc) / 6.0;
    CHECK(phi_sign(0.9 * z_lo, 0.2, 3.0, 2).sign == 1);
    CHECK(phi_sign(0.5 * (z_lo + z_hi), 0.2, 3.0, 2).sign == -1);
    CHECK(phi_sign(1.1 * z_hi, 0.2, 3.0, 2).sign == 1);
}

TEST_CASE("sign function is positive near zero") {
    // The positivity region shrinks like 1/C!, so the probe point must too.
    for (int C : {1, 2, 5, 50, 100, 150}) {
        const double z = std::exp(-(std::lgamma(C + 1.0) + 5.0));
        REQUIRE(z > 0.0);
        CHECK(phi_sign(z, 1.0, 2.0 * C, C).sign == 1);
    }
}

TEST_CASE("log-domain evaluation agrees with naive arithmetic at small capacity") {
    RngStream rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int C = 1 + static_cast<int>(rng.next_below(30));
        const double rho1 = 0.05 + (C - 0.1) * rng.next_double();
        const double rho2 = 0.1 + 2.0 * C * rng.next_double();
        const double z = 0.01 + 3.0 * rng.next_double();
        const double g_lib = 1.0 - phi_sign(z, rho1, rho2, C).value;
        const double g_ref = naive_g(z, rho1, rho2, C);
        REQUIRE(std::isfinite(g_ref));
        CHECK(std::abs(g_lib - g_ref) <= 1e-9 * std::max(1.0, g_ref));
    }
    for (int trial = 0; trial < 200; ++trial) {
        const int C = 2 + static_cast<int>(rng.next_below(29));
        const double nu = 0.2 + 2.0 * rng.next_double();
        const double a = 1.1 + 4.0 * rng.next_double();
        const double z = 0.01 + 0.98 * rng.next_double();
        const double s_lib = 1.0 - psi_dar(z, nu, a, C).value;
        const double s_ref = naive_dar_sum(z, nu, a, C);
        CHECK(std::abs(s_lib - s_ref) <= 1e-9 * std::max(1.0, s_ref));
    }
}

TEST_CASE("unique underloaded root is increasing in the rerouted load") {
    double prev = 0.0;
    for (double rho2 : {0.5, 1.0, 1.5, 2.0, 2.5, 2.9}) {
        const EquilibriumReport rep = rist_equilibria(1.0, rho2, 3);
        REQUIRE(rep.roots.size() == 1);
        CHECK(rep.regime == "Underloaded");
        CHECK_FALSE(rep.singular_saturation);
        CHECK(rep.roots[0].z > prev);
        prev = rep.roots[0].z;
    }
}

TEST_CASE("underloaded root satisfies the blocking identity both ways") {
    const RistParams params(1.0, 1.0, 0.5, 3);  // rho1=1, rho2=2
    const EquilibriumReport rep = rist_equilibria(params.rho1(), params.rho2(), params.C);
    REQUIRE(rep.roots.size() == 1);
    const FixedPointRoot& r = rep.roots[0];
    CHECK(r.residual < 1e-10);

    // Blocking mass of the product-form law at R equals R.
    const RistStateSpace space(params.C);
    const ProbVec pi = rist_pi(r.r_or_s, params);
    CHECK(pi.mass(space.boundary()) == doctest::Approx(r.r_or_s).epsilon(1e-10));

    // Same identity through the classical recurrence at load rho1 + rho2 z.
    const double w = params.rho1() + params.rho2() * r.z;
    CHECK(erlang_b(w, params.C) == doctest::Approx(r.r_or_s).epsilon(1e-9));
}

TEST_CASE("capacity-one closed form") {
    const EquilibriumReport rep = rist_equilibria(0.5, 0.5, 1);
    REQUIRE(rep.roots.size() == 1);
    CHECK(rep.roots[0].z == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.roots[0].r_or_s == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("overloaded capacity two splits by the critical load") {
    // Below the critical load: two roots, at the quadratic-formula positions.
    const EquilibriumReport two = rist_equilibria(0.2, 3.0, 2);
    CHECK(two.regime == "Overloaded");
    CHECK(two.singular_saturation);
    REQUIRE(two.roots.size() == 2);
    const double disc = std::sqrt(1.2 * 1.2 - 4.0 * 3.0 * 0.04);
    CHECK(two.roots[0].z == doctest::Approx((1.2 - disc) / 6.0).epsilon(1e-9));
    CHECK(two.roots[1].z == doctest::Approx((1.2 + disc) / 6.0).epsilon(1e-9));
    CHECK(two.roots[0].stable_hint == "stable");
    CHECK(two.roots[1].stable_hint == "unstable");
    for (const auto& r : two.roots) CHECK(r.residual < 1e-10);

    // Above it: no finite root, but the saturated flag stays on.
    const EquilibriumReport none = rist_equilibria(1.0, 3.0, 2);
    CHECK(none.roots.empty());
    CHECK(none.singular_saturation);
}

TEST_CASE("critical boundary keeps a root only below capacity minus one") {
    const EquilibriumReport one = rist_equilibria(1.0, 3.0, 3);
    CHECK(one.regime == "Critical");
    CHECK_FALSE(one.singular_saturation);
    CHECK(one.roots.size() == 1);

    const EquilibriumReport none = rist_equilibria(2.5, 3.0, 3);
    CHECK(none.regime == "Critical");
    CHECK(none.roots.empty());
}

TEST_CASE("critical load threshold matches the closed form at capacity two") {
    for (double rho2 : {2.5, 3.0, 5.0, 10.0}) {
        const double closed = rho2 - 1.0 - std::sqrt(rho2 * (rho2 - 2.0));
        CHECK(phi_c(rho2, 2) == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("critical load threshold at capacity three matches the frozen value") {
    // Reference frozen from a high-resolution scan of the two-root/zero-root
    // transition in rho1 at rho2 = 4.
    CHECK(phi_c(4.0, 3) == doctest::Approx(0.9369179164).epsilon(1e-6));
}

TEST_CASE("threshold splits root counts in the overloaded regime") {
    const double t = phi_c(4.0, 3);
    CHECK(rist_equilibria(t * 0.98, 4.0, 3).roots.size() == 2);
    CHECK(rist_equilibria(t * 1.02, 4.0, 3).roots.size() == 0);
}

TEST_CASE("root sets equal exhaustive grid scans at small capacity") {
    const int n = 1000000;

    SUBCASE("pair model, two overloaded roots") {
        const auto f = [](double z) { return 1.0 - naive_g(z, 0.2, 3.0, 2); };
        check_against_scan(rist_equilibria(0.2, 3.0, 2), scan_roots(f, 1e-6, 2.0, n), 2.0 / n);
    }
    SUBCASE("pair model, underloaded") {
        const auto f = [](double z) { return 1.0 - naive_g(z, 1.0, 2.0, 3); };
        check_against_scan(rist_equilibria(1.0, 2.0, 3), scan_roots(f, 1e-6, 5.0, n), 5.0 / n);
    }
    SUBCASE("one-retrial model, light rerouting") {
        const double rho1 = 0.5, rho2 = 0.1;
        const int C = 5;
        const auto f = [&](double s) {
            const double w = rho1 + rho2 * s;
            double sum = 1.0, wp = 1.0, fact = 1.0, top = 1.0;
            for (int m = 1; m <= C; ++m) {
                wp *= w;
                fact *= m;
                sum += wp / fact;
            }
            top = wp / fact;  // w^C / C!
            return top - s * sum;
        };
        check_against_scan(rist1_equilibria(rho1, rho2, C), scan_roots(f, 1e-9, 1.0 - 1e-9, n),
                           1.0 / n);
    }
    SUBCASE("one-retrial model, heavy rerouting at small capacity") {
        const double rho1 = 1.0, rho2 = 10.0;
        const int C = 2;
        const auto f = [&](double s) {
            const double w = rho1 + rho2 * s;
            return w * w / 2.0 - s * (1.0 + w + w * w / 2.0);
        };
        check_against_scan(rist1_equilibria(rho1, rho2, C), scan_roots(f, 1e-9, 1.0 - 1e-9, n),
                           1.0 / n);
    }
    SUBCASE("occupancy model, above critical load") {
        const auto f = [](double z) { return 1.0 - naive_dar_sum(z, 1.2, 2.0, 5); };
        check_against_scan(dar_fixed_points(1.2, 2.0, 5), scan_roots(f, 1e-9, 1.0 - 1e-9, n),
                          1.0 / n);
    }
    SUBCASE("occupancy model, near-critical load") {
        const auto f = [](double z) { return 1.0 - naive_dar_sum(z, 0.97, 2.0, 5); };
        check_against_scan(dar_fixed_points(0.97, 2.0, 5), scan_roots(f, 1e-9, 1.0 - 1e-9, n),
                          1.0 / n);
    }
    SUBCASE("limit cubic") {
        const auto f = [](double z) { return (1.0 - z) * (1.0 + 2.0 * z * (1.0 - z)) - 1.0 / 0.97; };
        check_against_scan(dar_limit_fixed_points(0.97, 2.0),
                           scan_roots(f, 1e-9, 1.0 - 1e-9, n), 1.0 / n);
    }
}

TEST_CASE("one-retrial roots back-substitute into the blocking recurrence") {
    struct Instance {
        double rho1, rho2;
        int C;
    };
    for (const Instance& in : {Instance{0.5, 0.1, 5}, Instance{1.0, 10.0, 2},
                               Instance{1.0, 2000.0, 400}, Instance{2.0, 8.0, 4}}) {
        const EquilibriumReport rep = rist1_equilibria(in.rho1, in.rho2, in.C);
        REQUIRE(!rep.roots.empty());
        for (const FixedPointRoot& r : rep.roots) {
            CHECK(r.residual < 1e-10);
            if (r.z < 1e-300) continue;  // below double range; covered by the residual
            const double w = in.rho1 + in.rho2 * r.z;
            CHECK(std::abs(erlang_b(w, in.C) - r.z) < 1e-9);
        }
    }
}

TEST_CASE("one-retrial triple point under heavy rerouting") {
    // rho2 = 5C with C = 400: three roots; the top two sit near the surd pair
    // (1 +- sqrt(1 - 4/5))/2 and the light one underflows but keeps its log.
    const EquilibriumReport rep = rist1_equilibria(1.0, 2000.0, 400);
    REQUIRE(rep.roots.size() == 3);
    CHECK(rep.regime == "3-roots");

    // Light root: S ~ w^C/(C! e) with w ~ 1, so log S = -(log(400!) + 1).
    CHECK(rep.roots[0].log_z ==
          doctest::Approx(-(std::lgamma(401.0) + 1.0)).epsilon(1e-9));

    CHECK(rep.roots[1].z == doctest::Approx(0.2726962325462413).epsilon(1e-9));
    CHECK(rep.roots[2].z == doctest::Approx(0.7243387311728946).epsilon(1e-9));
    const double surd = std::sqrt(1.0 - 4.0 / 5.0);
    CHECK(std::abs(rep.roots[1].z - (1.0 - surd) / 2.0) < 0.02);
    CHECK(std::abs(rep.roots[2].z - (1.0 + surd) / 2.0) < 0.02);

    CHECK(rep.roots[0].stable_hint == "stable");
    CHECK(rep.roots[1].stable_hint == "unstable");
    CHECK(rep.roots[2].stable_hint == "stable");
}

TEST_CASE("one-retrial light load admits a single equilibrium") {
    const EquilibriumReport rep = rist1_equilibria(0.5, 0.1, 5);
    REQUIRE(rep.roots.size() == 1);
    CHECK(rep.roots[0].z < 0.01);
}

TEST_CASE("saturation sign function approaches its large-capacity limit") {
    // For fixed z with nu h(z) > 1 the defining value tends to
    // 1 - z/(1 - 1/(nu h(z))).
    const double nu = 1.2, a = 2.0;
    for (double z : {0.2, 0.3, 0.5}) {
        const double nuh = nu * (1.0 + a * z * (1.0 - z));
        REQUIRE(nuh > 1.0);
        const double limit = 1.0 - z / (1.0 - 1.0 / nuh);
        CHECK(std::abs(psi_dar(z, nu, a, 10000).value - limit) < 1e-3);
    }
}

TEST_CASE("saturation sign function decreases with capacity") {
    for (double z : {0.1, 0.3, 0.5, 0.9}) {
        double prev = psi_dar(z, 0.97, 2.0, 5).value;
        for (int C : {10, 20, 50, 100}) {
            const double cur = psi_dar(z, 0.97, 2.0, C).value;
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("light load keeps one vanishing root, decreasing with capacity") {
    const EquilibriumReport r50 = dar_fixed_points(0.5, 2.0, 50);
    const EquilibriumReport r100 = dar_fixed_points(0.5, 2.0, 100);
    REQUIRE(r50.roots.size() == 1);
    REQUIRE(r100.roots.size() == 1);
    CHECK(r50.roots[0].z < 1e-3);
    CHECK(r100.roots[0].z < r50.roots[0].z);
    CHECK(r50.roots[0].branch == "nu*h<1");
}

TEST_CASE("unique root above critical load converges to the limit cubic") {
    const double cubic = limit_cubic_root(1.2, 2.0, 0.14, 1.0 - 1e-12);
    double prev = 1.0;
    for (int C : {50, 100, 200}) {
        const EquilibriumReport rep = dar_fixed_points(1.2, 2.0, C);
        REQUIRE(rep.roots.size() == 1);
        CHECK(rep.roots[0].residual < 1e-10);
        CHECK(rep.roots[0].branch == "nu*h>1");
        CHECK(rep.roots[0].z < prev);
        prev = rep.roots[0].z;
    }
    CHECK(dar_fixed_points(1.2, 2.0, 200).roots[0].z ==
          doctest::Approx(0.4456716737688121).epsilon(1e-9));
    CHECK(std::abs(prev - cubic) < 0.02);
}

TEST_CASE("near-critical root structure versus capacity") {
    // At nu = 0.97 the lower pair of roots only separates from zero at very
    // large capacity: one root at C = 1000, three by C = 10000.
    const EquilibriumReport k = dar_fixed_points(0.97, 2.0, 1000);
    REQUIRE(k.roots.size() == 1);
    CHECK(k.roots[0].z == doctest::Approx(0.2551706991928349).epsilon(1e-9));

    const EquilibriumReport tk = dar_fixed_points(0.97, 2.0, 10000);
    REQUIRE(tk.roots.size() == 3);
    CHECK(tk.roots[0].z == doctest::Approx(4.1488e-05).epsilon(1e-3));
    CHECK(tk.roots[1].z == doctest::Approx(0.0320957).epsilon(1e-3));
    CHECK(tk.roots[2].z == doctest::Approx(0.251003).epsilon(1e-3));
    CHECK(tk.roots[0].branch == "nu*h<1");
}

TEST_CASE("limit model reports critical load, maximizer, and printed variant") {
    const EquilibriumReport rep = dar_limit_fixed_points(1.2, 2.0);
    REQUIRE(rep.nu_a);
    REQUIRE(rep.nu_a_printed);
    REQUIRE(rep.x0);
    CHECK(*rep.nu_a == doctest::Approx(0.9371294336139656).epsilon(1e-10));
    CHECK(std::abs(*rep.nu_a - 0.9371) < 5e-4);
    CHECK(std::abs((1.0 - *rep.nu_a) - 0.063) < 1e-3);  // multi-root window width
    CHECK(*rep.x0 == doctest::Approx((2.0 - std::sqrt(2.5)) / 3.0).epsilon(1e-12));
    // The closed-form variant is surfaced and visibly disagrees with the
    // operational value; consumers can see both.
    CHECK(*rep.nu_a_printed == doctest::Approx(0.446767156351847).epsilon(1e-9));
    CHECK(std::abs(*rep.nu_a - *rep.nu_a_printed) > 0.4);

    CHECK(*dar_limit_fixed_points(1.0, 5.0).nu_a == doctest::Approx(0.6880983473).epsilon(1e-8));
    CHECK(*dar_limit_fixed_points(1.0, 10.0).nu_a == doctest::Approx(0.4604007518).epsilon(1e-8));
}

TEST_CASE("limit cubic root structure across load regimes") {
    CHECK(dar_limit_fixed_points(0.9, 2.0).roots.empty());  // below the critical load

    const EquilibriumReport mid = dar_limit_fixed_points(0.97, 2.0);
    REQUIRE(mid.roots.size() == 2);
    CHECK(mid.roots[0].z == doctest::Approx(0.03602573794929493).epsilon(1e-10));
    CHECK(mid.roots[1].z == doctest::Approx(0.25051440589934376).epsilon(1e-10));
    CHECK(mid.roots[0].stable_hint == "unstable");
    CHECK(mid.roots[1].stable_hint == "stable");
    // Every limit root has nu h = 1/(1-z) > 1.
    for (const auto& r : mid.roots) CHECK(r.branch == "nu*h>1");

    const EquilibriumReport high = dar_limit_fixed_points(1.2, 2.0);
    REQUIRE(high.roots.size() == 1);
    CHECK(high.roots[0].z ==
          doctest::Approx(limit_cubic_root(1.2, 2.0, 0.14, 1.0 - 1e-12)).epsilon(1e-10));
    CHECK(dar_limit_fixed_points(2.0, 2.0).roots.size() == 1);
}

TEST_CASE("state-dependent queue fixed points and identities") {
    const EquilibriumReport r14 = nlmm1_fixed_points(1.4, 2.0);
    REQUIRE(r14.roots.size() == 1);
    const double S = r14.roots[0].z;
    CHECK(S == doctest::Approx(0.5234598299772151).epsilon(1e-9));
    // Fixed-point identity: service level equals 1/(1-S).
    const double nuh = 1.4 * (1.0 + 2.0 * S * (1.0 - S));
    CHECK(nuh == doctest::Approx(1.0 / (1.0 - S)).epsilon(1e-10));

    CHECK(nlmm1_fixed_points(1.3, 2.0).roots[0].z ==
          doctest::Approx(0.4870650598218928).epsilon(1e-9));
    CHECK(nlmm1_fixed_points(1.7, 2.0).roots[0].z == doctest::Approx(0.60229428).epsilon(1e-6));
}

TEST_CASE("general service profile path agrees with the quadratic overload") {
    const auto h = [](double x) { return 1.0 + 2.0 * x * (1.0 - x); };
    const EquilibriumReport gen = nlmm1_fixed_points(1.4, h);
    const EquilibriumReport quad = nlmm1_fixed_points(1.4, 2.0);
    REQUIRE(gen.roots.size() == quad.roots.size());
    for (std::size_t i = 0; i < gen.roots.size(); ++i)
        CHECK(gen.roots[i].z == doctest::Approx(quad.roots[i].z).epsilon(1e-9));

    // Constant profile: S = 1 - 1/nu.
    const auto flat = [](double) { return 1.0; };
    const EquilibriumReport lin = nlmm1_fixed_points(2.0, flat);
    REQUIRE(lin.roots.size() == 1);
    CHECK(lin.roots[0].z == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("half-load fixed point is exact at the matched service level") {
    // nu = 8/(4+a) makes S = 1/2 solve (1-S)h(S) = 1/nu exactly.
    for (double a : {2.0, 5.0, 10.0}) {
        const double nu = 8.0 / (4.0 + a);
        const double residual = std::abs(nu * 0.5 * (1.0 + a * 0.25) - 1.0);
        CHECK(residual < 1e-12);
        const EquilibriumReport rep = nlmm1_fixed_points(nu, a);
        double best = 1.0;
        for (const auto& r : rep.roots) best = std::min(best, std::abs(r.z - 0.5));
        CHECK(best < 1e-9);
    }
}

TEST_CASE("fixed-point distributions satisfy their defining identities") {
    SUBCASE("occupancy vector tops out at the saturated fraction") {
        const DarParams params(1.2, 2.0, 60);
        const EquilibriumReport rep = dar_fixed_points(1.2, 2.0, 60);
        REQUIRE(rep.roots.size() == 1);
        const double z = rep.roots[0].z;
        CHECK(z == doctest::Approx(0.45359069772678606).epsilon(1e-9));
        const ProbVec v = dar_fixed_point_vector(z, params);
        REQUIRE(v.size() == 61);
        CHECK(v.values().back() == doctest::Approx(z).epsilon(1e-10));
    }
    SUBCASE("small occupancy vector matches frozen values") {
        const DarParams params(0.5, 2.0, 5);
        const EquilibriumReport rep = dar_fixed_points(0.5, 2.0, 5);
        REQUIRE(rep.roots.size() == 1);
        const ProbVec v = dar_fixed_point_vector(rep.roots[0].z, params);
        const std::vector<double> frozen{0.05510006, 0.16444974, 0.24540548,
                                         0.24414289, 0.1821651,  0.10873672};
        REQUIRE(v.size() == frozen.size());
        for (std::size_t i = 0; i < frozen.size(); ++i)
            CHECK(v[i] == doctest::Approx(frozen[i]).epsilon(1e-6));
    }
    SUBCASE("queue law is geometric with the fixed-point ratio") {
        const auto h = [](double x) { return 1.0 + 2.0 * x * (1.0 - x); };
        const double S = nlmm1_fixed_points(1.4, 2.0).roots[0].z;
        const ProbVec pi = nlmm1_pi(S, 1.4, h, 400);
        const double ratio = 1.0 / (1.4 * h(S));
        for (std::size_t k = 0; k + 1 < 20; ++k)
            CHECK(pi[k + 1] / pi[k] == doctest::Approx(ratio).epsilon(1e-12));
        // Deep truncation: the head probability equals S itself.
        CHECK(pi[0] == doctest::Approx(S).epsilon(1e-8));
        CHECK_THROWS_AS((void)nlmm1_pi(0.5, 0.5, [](double) { return 1.0; }, 50),
                        std::invalid_argument);
    }
}

TEST_CASE("solver input validation") {
    CHECK_THROWS_AS((void)phi_sign(0.0, 1.0, 2.0, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)phi_sign(-1.0, 1.0, 2.0, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)rist_equilibria(3.0, 2.0, 3), std::invalid_argument);  // rho1 >= C
    CHECK_THROWS_AS((void)rist_equilibria(-1.0, 2.0, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)phi_c(2.0, 2), std::invalid_argument);  // needs rho2 > C
    CHECK_THROWS_AS((void)phi_c(5.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)psi_dar(0.0, 1.0, 2.0, 10), std::invalid_argument);
    CHECK_THROWS_AS((void)psi_dar(1.0, 1.0, 2.0, 10), std::invalid_argument);
    CHECK_THROWS_AS((void)dar_limit_fixed_points(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)nlmm1_fixed_points(0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS((void)rist_pi(1.0, RistParams(1.0, 1.0, 0.5, 3)), std::invalid_argument);
    CHECK_THROWS_AS((void)rist_pi(0.0, RistParams(1.0, 1.0, 0.5, 3)), std::invalid_argument);
    CHECK_THROWS_AS((void)dar_fixed_point_vector(0.0, DarParams(1.0, 2.0, 5)),
                    std::invalid_argument);
}
