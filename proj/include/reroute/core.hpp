#pragma once

// Shared foundations: validated model parameters, state-space enumeration,
// probability vectors, distances, and the reproducible RNG contract.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reroute {

/// Parameters of the RIST network: per-node Poisson arrivals at rate lambda,
/// fresh jobs served at rate mu1, rerouted jobs at rate mu2 <= mu1, node
/// capacity C, and a retrial budget p0 (nullopt = unbounded retrials,
/// 0 = blocked arrivals are dropped immediately).
struct RistParams {
    double lambda;
    double mu1;
    double mu2;
    int C;
    std::optional<int> p0;

    RistParams(double lambda, double mu1, double mu2, int C,
               std::optional<int> p0 = std::nullopt);

    [[nodiscard]] double rho1() const { return lambda / mu1; }
    [[nodiscard]] double rho2() const { return lambda / mu2; }
    [[nodiscard]] bool unbounded_retrials() const { return !p0.has_value(); }
};

/// Parameters of the dynamic-alternative-routing network. Arrivals per node
/// come at rate lambda = nu*C; a blocked request grabs one place in each of
/// two random other nodes. The rerouting feedback enters through
/// h(x) = 1 + a*x*(1-x), the effective arrival amplification when a fraction
/// x of nodes is saturated.
struct DarParams {
    double nu;
    double a;
    int C;
    double lambda;  // derived: nu * C

    DarParams(double nu, double a, int C);

    [[nodiscard]] double h(double x) const { return 1.0 + a * x * (1.0 - x); }
};

/// Enumeration of X = {(x,y) : x,y >= 0, x+y <= C} in lexicographic order,
/// with index sets for the non-saturated part (x+y < C) and the saturated
/// boundary (x+y = C). Immutable after construction.
class RistStateSpace {
public:
    explicit RistStateSpace(int C);

    [[nodiscard]] int capacity() const { return C_; }
    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] const std::vector<std::pair<int, int>>& states() const { return states_; }
    /// Indices of states with x+y < C.
    [[nodiscard]] const std::vector<int>& interior() const { return interior_; }
    /// Indices of saturated states (x+y = C).
    [[nodiscard]] const std::vector<int>& boundary() const { return boundary_; }

    [[nodiscard]] bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x + y <= C_;
    }
    /// Lexicographic rank of (x,y); caller must ensure contains(x,y).
    [[nodiscard]] int index(int x, int y) const {
        return x * (C_ + 1) - x * (x - 1) / 2 + y;
    }

private:
    int C_;
    std::vector<std::pair<int, int>> states_;
    std::vector<int> interior_;
    std::vector<int> boundary_;
};

/// Dense probability vector over a finite enumerated space. Construction
/// rejects negative entries; a total mass within 1e-12 of 1 is renormalized,
/// anything further off is rejected.
class ProbVec {
public:
    enum class Space { RistPairs, DarOccupancy, QueueLengths };

    ProbVec(Space space, std::vector<double> values);

    [[nodiscard]] Space space() const { return space_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    /// Exact sum of the entries at the given indices.
    [[nodiscard]] double mass(std::span<const int> indices) const;

    static constexpr double kSumTolerance = 1e-12;

private:
    Space space_;
    std::vector<double> values_;
};

/// Chi-square-type distance sum_z (mu(z)-pi(z))^2 / pi(z). Requires pi > 0
/// everywhere. Zero iff mu == pi.
[[nodiscard]] double weighted_l2_sq(const ProbVec& mu, const ProbVec& pi);
[[nodiscard]] double weighted_l2_sq(std::span<const double> mu, std::span<const double> pi);

/// Total variation distance (1/2) sum_z |mu(z)-nu(z)|.
[[nodiscard]] double total_variation(const ProbVec& mu, const ProbVec& nu);
[[nodiscard]] double total_variation(std::span<const double> mu, std::span<const double> nu);

/// Deterministic 64-bit PRNG (xoshiro256++) with splitmix64 seeding.
/// Identical (master_seed, stream_index) pairs reproduce identical draw
/// sequences on every platform; child streams are derived by the splitmix64
/// finalizer applied to master_seed XOR stream_index, so parallel runs can
/// partition seeds without overlap by construction.
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_index = 0);

    /// Independent stream derived from the same master seed.
    [[nodiscard]] RngStream child(std::uint64_t stream_index) const {
        return RngStream(master_seed_, stream_index);
    }

    std::uint64_t next_u64();
    /// Uniform on [0,1) with 53 random bits.
    double next_double();
    /// Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
    std::uint64_t next_below(std::uint64_t n);
    /// Exponential holding time with the given rate > 0.
    double exponential(double rate);

    [[nodiscard]] std::uint64_t master_seed() const { return master_seed_; }
    [[nodiscard]] std::uint64_t stream_index() const { return stream_index_; }

private:
    std::uint64_t state_[4];
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
};

}  // namespace reroute
