#include "reroute/core.hpp"

#include <cmath>
#include <numeric>

namespace reroute {

RistParams::RistParams(double lambda_, double mu1_, double mu2_, int C_,
                       std::optional<int> p0_)
    : lambda(lambda_), mu1(mu1_), mu2(mu2_), C(C_), p0(p0_) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("RistParams: lambda must be positive and finite");
    if (!(mu1 > 0.0) || !(mu2 > 0.0))
        throw std::invalid_argument("RistParams: service rates must be positive");
    if (mu2 > mu1)
        throw std::invalid_argument("RistParams: rerouted service rate mu2 must not exceed mu1");
    if (C < 1)
        throw std::invalid_argument("RistParams: capacity C must be >= 1");
    if (p0 && *p0 < 0)
        throw std::invalid_argument("RistParams: retrial budget p0 must be >= 0");
}

DarParams::DarParams(double nu_, double a_, int C_)
    : nu(nu_), a(a_), C(C_), lambda(nu_ * C_) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw std::invalid_argument("DarParams: nu must be positive and finite");
    if (!(a > 1.0))
        throw std::invalid_argument("DarParams: amplification coefficient a must be > 1");
    if (C < 1)
        throw std::invalid_argument("DarParams: capacity C must be >= 1");
}

RistStateSpace::RistStateSpace(int C) : C_(C) {
    if (C < 1) throw std::invalid_argument("RistStateSpace: capacity C must be >= 1");
    states_.reserve(static_cast<std::size_t>(C + 1) * (C + 2) / 2);
    for (int x = 0; x <= C; ++x)
        for (int y = 0; y + x <= C; ++y) states_.emplace_back(x, y);
    for (int i = 0; i < static_cast<int>(states_.size()); ++i) {
        const auto [x, y] = states_[i];
        if (x + y < C)
            interior_.push_back(i);
        else
            boundary_.push_back(i);
    }
}

ProbVec::ProbVec(Space space, std::vector<double> values)
    : space_(space), values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("ProbVec: empty vector");
    double sum = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0))  // also catches NaN
            throw std::invalid_argument("ProbVec: negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw std::invalid_argument("ProbVec: total mass deviates from 1 beyond tolerance");
    if (sum != 1.0)
        for (double& v : values_) v /= sum;
}

double ProbVec::mass(std::span<const int> indices) const {
    double m = 0.0;
    for (int i : indices) m += values_[static_cast<std::size_t>(i)];
    return m;
}

double weighted_l2_sq(std::span<const double> mu, std::span<const double> pi) {
    if (mu.size() != pi.size())
        throw std::invalid_argument("weighted_l2_sq: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(pi[i] > 0.0))
            throw std::domain_error("weighted_l2_sq: reference distribution must be strictly positive");
        const double d = mu[i] - pi[i];
        acc += d * d / pi[i];
    }
    return acc;
}

double weighted_l2_sq(const ProbVec& mu, const ProbVec& pi) {
    if (mu.space() != pi.space())
        throw std::invalid_argument("weighted_l2_sq: mismatched state spaces");
    return weighted_l2_sq(std::span(mu.values()), std::span(pi.values()));
}

double total_variation(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size())
        throw std::invalid_argument("total_variation: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) acc += std::abs(mu[i] - nu[i]);
    return 0.5 * acc;
}

double total_variation(const ProbVec& mu, const ProbVec& nu) {
    if (mu.space() != nu.space())
        throw std::invalid_argument("total_variation: mismatched state spaces");
    return total_variation(std::span(mu.values()), std::span(nu.values()));
}

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// splitmix64 finalizer; also used as the seed expander.
constexpr std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index) {
    std::uint64_t s = master_seed ^ stream_index;
    // One finalization round decorrelates neighboring stream indices, then the
    // splitmix64 chain fills the xoshiro256++ state.
    std::uint64_t seed = splitmix64(s);
    for (auto& w : state_) w = splitmix64(seed);
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::next_below: n must be >= 1");
    const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("RngStream::exponential: rate must be > 0");
    // u in [0,1) so 1-u in (0,1]; -log(1-u) is a standard exponential.
    return -std::log1p(-next_double()) / rate;
}

}  // namespace reroute
