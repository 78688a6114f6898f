#pragma once

// Spectral stability certificates. The linearized pair model is reversible,
// so its relaxation rate is the spectral gap of a symmetrized generator; the
// state-dependent M/M/1 gap has a closed form. Both feed sufficient-condition
// checks whose failure is inconclusive, not a proof of instability.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reroute/core.hpp"

namespace reroute {

/// Dense Markov generator with a known stationary law. Rows sum to zero.
struct LinearGenerator {
    std::size_t dim;
    std::vector<double> q;  // row-major, dim x dim
    ProbVec stationary;
    double detailed_balance_residual;  // max_ij |pi_i q_ij - pi_j q_ji|
    bool reversible;
};

enum class Verdict { Met, NotMet };

struct StabilityReport {
    std::string model;   // "RistUnbounded" or "NlMm1"
    double kappa;        // relaxation rate (spectral gap)
    double threshold;    // certificate requires kappa > threshold
    double margin;       // kappa - threshold
    Verdict verdict;     // NotMet means inconclusive
    double detailed_balance_residual = 0.0;
    std::string method;  // "jacobi-gap" or "closed-form"
};

/// Generator of the pair process linearized at blocking mass R: arrivals
/// lambda and lambda R/(1-R) from interior states, services mu1 x and mu2 y.
/// Its stationary law is the product-form distribution at R.
[[nodiscard]] LinearGenerator build_rist_linear_generator(double R, const RistParams& params);

/// Smallest nonzero eigenvalue of -Q symmetrized by the stationary law,
/// computed by cyclic Jacobi sweeps to off-diagonal norm 1e-12. Refuses
/// non-reversible generators and dimensions above 2000.
[[nodiscard]] double spectral_gap(const LinearGenerator& gen);

/// Exponential-stability certificate for the pair model at fixed point R:
/// gap > lambda/(1-R) sqrt(C/rho2). R must solve the fixed-point identity to
/// 1e-8.
[[nodiscard]] StabilityReport check_rist_criterion(double R, const RistParams& params);

/// Closed-form gap (sqrt(nu h(S)) - 1)^2 of the M/M/1 queue with service
/// level nu h(S). Requires nu h(S) > 1.
[[nodiscard]] double nlmm1_gap(double S, double nu, const std::function<double(double)>& h);

/// Certificate nu S |h'(S)| < gap at a fixed point S of the state-dependent
/// queue. The quadratic-h overload cross-checks an equivalent polynomial form
/// of the same inequality and refuses to answer if the two disagree.
[[nodiscard]] StabilityReport check_nlmm1_criterion(double S, double nu, double a);
[[nodiscard]] StabilityReport check_nlmm1_criterion(double S, double nu,
                                                    const std::function<double(double)>& h,
                                                    const std::function<double(double)>& hprime);

/// Open interval of loads nu over which the certificate holds at the unique
/// fixed point for h(x) = 1 + a x (1-x), a > 1. Endpoints are roots of two
/// quintics in sqrt(1-S), mapped back to nu.
[[nodiscard]] std::pair<double, double> nlmm1_stability_interval(double a);

struct ProbeReport {
    double growth_rate;  // largest propagator exponent found
    std::string label;   // "Stable" / "Unstable" / "Marginal"
};

/// Direct check of a flow's linearization at an equilibrium point: power
/// iteration on the finite-difference propagator restricted to the
/// mass-conserving tangent space. The equilibrium must satisfy
/// ||rhs||_inf < 1e-8.
[[nodiscard]] ProbeReport linearized_probe(
    const std::function<void(std::span<const double>, std::span<double>)>& rhs,
    std::span<const double> equilibrium, int n_directions, double horizon, RngStream& rng);

/// Least-squares slope of log(values) against times; values must be positive.
[[nodiscard]] double log_slope(std::span<const double> times, std::span<const double> values);

}  // namespace reroute
