#pragma once

// Deterministic density flows of the four models and a shared adaptive
// Runge-Kutta integrator. The unbounded-retrial flow divides by the interior
// mass and blows up in finite time in the overloaded regime; the integrator
// localizes that time instead of failing.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "reroute/core.hpp"

namespace reroute {

/// Raised by the unbounded-retrial flow when the interior mass is at or below
/// the singularity threshold and the rerouting ratio is undefined.
class SingularFlowError : public std::runtime_error {
  public:
    explicit SingularFlowError(double interior_mass);
    [[nodiscard]] double interior_mass() const noexcept { return interior_mass_; }

  private:
    double interior_mass_;
};

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.1;
    double singularity_threshold = 1e-6;  // interior-mass cutoff, unbounded flow only
    double renormalize_drift = 1e-10;     // renormalize when |sum-1| exceeds this
};

enum class OdeStatus { ReachedHorizon, SingularityAt, StepUnderflow };

struct OdeResult {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    OdeStatus status = OdeStatus::ReachedHorizon;
    double stop_time = 0.0;  // blow-up or underflow time; horizon otherwise
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
};

/// Sum of the rerouting fan-out series R + R^2 + ... + R^p0, continuous at
/// R = 1 where it equals p0.
[[nodiscard]] double retrial_factor(double R, int p0);

/// Density flow of the unbounded-retrial pair model. Throws SingularFlowError
/// when the interior mass is at or below eps_interior.
[[nodiscard]] std::vector<double> rist_rhs_unbounded(const RistParams& params,
                                                     const ProbVec& state,
                                                     double eps_interior = 1e-6);

/// Density flow of the bounded-retrial pair model (requires params.p0).
[[nodiscard]] std::vector<double> rist_rhs_retrials(const RistParams& params,
                                                    const ProbVec& state);

/// Density flow of the duplication-assignment occupancy model.
[[nodiscard]] std::vector<double> dar_rhs(const DarParams& params, const ProbVec& state);

/// Forward equations of the state-dependent M/M/1 queue truncated at K
/// (arrivals blocked in the top state). K = state dimension - 1, at least 10.
[[nodiscard]] std::vector<double> nlmm1_rhs(double nu, const std::function<double(double)>& h,
                                            const ProbVec& state);

// Span kernels backing the wrappers above; out must have state's size. The
// unbounded kernel returns false (out untouched) when the interior mass is at
// or below eps_interior.
bool rist_unbounded_flow(const RistParams& params, const RistStateSpace& space,
                         std::span<const double> state, double eps_interior,
                         std::span<double> out);
void rist_retrial_flow(const RistParams& params, const RistStateSpace& space,
                       std::span<const double> state, std::span<double> out);
void dar_flow(const DarParams& params, std::span<const double> state, std::span<double> out);
void nlmm1_flow(double nu, const std::function<double(double)>& h,
                std::span<const double> state, std::span<double> out);

/// Truncation level with geometric tail below 1e-10 for the slowest service
/// rate nu (capped to [10, 2000]; 400 when nu is too close to 1 for the tail
/// bound to bite).
[[nodiscard]] int nlmm1_default_truncation(double nu);

OdeResult integrate_rist_unbounded(const RistParams& params, const ProbVec& init,
                                   double horizon, double grid_dt, OdeOptions opts = {});
OdeResult integrate_rist_retrials(const RistParams& params, const ProbVec& init,
                                  double horizon, double grid_dt, OdeOptions opts = {});
OdeResult integrate_dar(const DarParams& params, const ProbVec& init, double horizon,
                        double grid_dt, OdeOptions opts = {});
OdeResult integrate_nlmm1(double nu, const std::function<double(double)>& h,
                          const ProbVec& init, double horizon, double grid_dt,
                          OdeOptions opts = {});

/// Renormalizing ProbVec view of a stored state (stored states may carry sum
/// drift up to the renormalization threshold).
[[nodiscard]] ProbVec to_prob_vec(ProbVec::Space space, const std::vector<double>& state);

}  // namespace reroute
