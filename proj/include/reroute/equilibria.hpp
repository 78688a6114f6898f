#pragma once

// Fixed-point solvers for all five equilibrium equations: the two RIST
// blocking-mass equations (unbounded retrials and one retrial), the finite-C
// and limiting DAR saturation equations, and the non-linear M/M/1 queue.
// All defining functions are evaluated in log domain so the solvers stay
// exact for capacities up to 10^4.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reroute/core.hpp"

namespace reroute {

enum class FixedPointModel { RistUnbounded, RistOneRetrial, DarFinite, DarLimit, NlMm1 };

/// Sign and magnitude of a normalized defining function at a point. The sign
/// is exact even when the magnitude saturates.
struct SignValue {
    int sign;      // -1, 0, +1
    double value;  // normalized function value (may be -inf when it overflows)
};

/// One root of a fixed-point equation with its bracketing evidence.
struct FixedPointRoot {
    double z;            // solver variable: z_R for the unbounded RIST model,
                         // S for the one-retrial and M/M/1 models, x_C for DAR
    double log_z;        // exact log of z (meaningful when z underflows to 0)
    double r_or_s;       // blocking mass: R = z/(1+z) for the unbounded model,
                         // z itself for all others
    double residual;     // |normalized defining function| at the root
    double bracket_lo;
    double bracket_hi;
    std::string stable_hint;  // "stable" / "unstable" heuristic from the
                              // crossing direction; not a proof
    std::string branch;       // load label, e.g. "nu*h<1" (DAR models)
};

struct EquilibriumReport {
    FixedPointModel model;
    std::string regime;  // Underloaded/Critical/Overloaded or "<n>-roots"
    std::vector<FixedPointRoot> roots;
    bool singular_saturation = false;
    // Limit-model extras: critical load, its printed-form variant and the
    // maximizer of (1-z)h(z). Only set by dar_limit_fixed_points.
    std::optional<double> nu_a;
    std::optional<double> nu_a_printed;
    std::optional<double> x0;
};

/// Sign of the unbounded-retrial fixed-point function at z > 0, computed from
/// the normalized form G(z) = z * sum_{m<C} C!/m! (rho1+rho2 z)^{m-C}; the
/// function is positive iff G < 1. Returns {sign(1-G), 1-G}.
[[nodiscard]] SignValue phi_sign(double z, double rho1, double rho2, int C);

/// All positive roots of the unbounded-retrial fixed-point equation, with the
/// regime classification by rho2 vs C. Requires rho1 < C. The saturated
/// equilibrium (R = 1) existing for rho2 > C is reported as a flag, never as
/// a numeric root.
[[nodiscard]] EquilibriumReport rist_equilibria(double rho1, double rho2, int C);

/// Critical rho1 below which the overloaded regime (rho2 > C) has two roots.
/// Outer bisection on rho1 against the sign of min_z of the defining
/// function; the minimum is located by golden section around the positive
/// root of the derivative's quadratic factor.
[[nodiscard]] double phi_c(double rho2, int C);

/// Up to three roots S in (0,1) of the one-retrial fixed-point equation.
/// Monotone pieces are separated by the real roots of the cubic derivative
/// factor; the light-traffic root is refined in log(S) since it underflows
/// for large C.
[[nodiscard]] EquilibriumReport rist1_equilibria(double rho1, double rho2, int C);

/// Sign of the DAR saturation function at z in (0,1), via the term-ratio
/// recurrence t_k = t_{k-1} (1-(k-1)/C)/(nu h(z)) accumulated with
/// log-sum-exp. Exact sign even when partial sums exceed 1e300.
[[nodiscard]] SignValue psi_dar(double z, double nu, double a, int C);

/// All roots of the finite-C DAR fixed-point equation in (0,1). The scan
/// grid includes a logarithmic sub-grid down to 1e-12 so the light-load root
/// is not missed at large C. Each root is labeled by nu*h(root) vs 1.
[[nodiscard]] EquilibriumReport dar_fixed_points(double nu, double a, int C);

/// Roots in (0,1) of the C->infinity cubic (1-z)h(z) = 1/nu, plus the
/// critical load nu_a = 1/max (1-z)h(z), its maximizer x0, and the printed
/// closed-form variant of nu_a (which disagrees; both are surfaced).
[[nodiscard]] EquilibriumReport dar_limit_fixed_points(double nu, double a);

/// Roots S in (0,1) of S = 1 - 1/(nu h(S)) for a general continuously
/// differentiable h >= 1, by sign scan and bisection of (1-S)h(S) - 1/nu.
[[nodiscard]] EquilibriumReport nlmm1_fixed_points(double nu,
                                                   const std::function<double(double)>& h);
/// Quadratic-h overload, h(x) = 1 + a x (1-x): same bracketed-bisection path
/// as the limit cubic.
[[nodiscard]] EquilibriumReport nlmm1_fixed_points(double nu, double a);

/// Product-form two-class Erlang distribution with class-2 intensity
/// amplified by z_R = R/(1-R); the stationary law of the linearized RIST
/// process. R in (0,1).
[[nodiscard]] ProbVec rist_pi(double R, const RistParams& params);

/// Product-form distribution of the one-retrial model with class-2 intensity
/// rho2*S. S in (0,1).
[[nodiscard]] ProbVec rist1_pi(double S, const RistParams& params);

/// Full occupancy distribution (x_0..x_C) of the DAR fixed point with
/// saturated fraction z, built from the top by the birth-death ratio.
[[nodiscard]] ProbVec dar_fixed_point_vector(double z, const DarParams& params);

/// Geometric distribution with ratio 1/(nu h(S)), truncated to {0..K} and
/// renormalized. Requires nu h(S) > 1.
[[nodiscard]] ProbVec nlmm1_pi(double S, double nu,
                               const std::function<double(double)>& h, int K);

}  // namespace reroute
