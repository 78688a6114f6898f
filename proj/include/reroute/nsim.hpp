#pragma once

// Event-driven simulators for the finite-N systems: the rerouting network,
// the duplication-assignment network, the dominating two-coordinate chain,
// and the pathwise coupling between the latter and the network. Node picks
// use sum trees, so a step costs O(log N).

#include <cstdint>
#include <optional>
#include <vector>

#include "reroute/core.hpp"

namespace reroute {

/// Per-node state of the rerouting network: primary[i] jobs arrived at node
/// i, rerouted[i] jobs pushed there after a blocked arrival.
struct RistNetworkState {
    std::vector<int> primary;
    std::vector<int> rerouted;
};

struct DarNetworkState {
    std::vector<int> occupancy;
};

struct TrajectorySample {
    double t;
    std::vector<double> dist;  // empirical distribution over the state space
    double saturated_frac;     // fraction of nodes at full capacity
    double mean_secondary;     // mean rerouted load per node (mean occupancy for
                               // the duplication model)
    double empty_places;       // total free capacity summed over nodes
};

struct SimCounters {
    long long accepted = 0;  // arrivals served where they landed
    long long rerouted = 0;  // arrivals placed elsewhere
    long long rejected = 0;  // arrivals dropped
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    SimCounters counters;
    double final_time = 0.0;
};

/// Rerouting network with N nodes. params.p0 selects the blocked-arrival
/// policy: unset probes the non-saturated nodes directly, 0 drops, k > 0
/// makes at most k uniform probes (with replacement) over all nodes.
[[nodiscard]] Trajectory simulate_rist(const RistParams& params, const RistNetworkState& init,
                                       double horizon, double grid_dt, RngStream& rng);

/// Duplication network: a blocked arrival picks two distinct other nodes and
/// is copied to both if both have room, otherwise dropped. Needs N >= 3.
[[nodiscard]] Trajectory simulate_dar(const DarParams& params, const DarNetworkState& init,
                                      double horizon, double grid_dt, RngStream& rng);

struct USample {
    double t;
    long long u0, u1, u2;
};

struct UResult {
    std::vector<USample> path;
    std::optional<double> boundary_hit;  // first time u0 + u1 == N
};

/// Two-coordinate dominating chain on {u0 + u1 <= N}; moves that would leave
/// the domain are suppressed. u2 = C N - u0 - u1 is derived.
[[nodiscard]] UResult simulate_u(const RistParams& params, int N, long long u0, long long u1,
                                 double horizon, double grid_dt, RngStream& rng);

struct CouplingEvent {
    double t;
    long long u0, u1, u2, z0, z1, z2;
    bool ok;
};

struct CouplingResult {
    std::vector<CouplingEvent> events;  // filled when record_events is set
    std::optional<double> first_violation;
    std::optional<double> boundary_hit;  // chain boundary time; the run stops there
    long long events_total = 0;
    long long shadow_service_wins = 0;  // the structurally losing race; must stay 0
};

/// Joint run of the network and the dominating chain driven by one race per
/// event, replicated literally from the monotone construction (including the
/// shared-exponential service race that can never win). After every event the
/// domination inequalities are checked and any breach is recorded.
[[nodiscard]] CouplingResult simulate_coupled(const RistParams& params,
                                              const RistNetworkState& init, double horizon,
                                              RngStream& rng, bool record_events = true);

/// Fraction of independent runs whose mean rerouted load stays at or above
/// C - eps throughout [t0, t0 + T], started with floor(eta N) nodes one job
/// short of capacity and the rest full.
[[nodiscard]] double saturation_experiment(const RistParams& params, int N, double eta,
                                           double t0, double T, double eps, int runs,
                                           RngStream& rng);

}  // namespace reroute
