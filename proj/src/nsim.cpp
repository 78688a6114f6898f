#include "reroute/nsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reroute {
namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

/// Fenwick tree over nonnegative integer weights; find() inverts the prefix
/// sum so a node can be drawn proportionally to its weight in O(log n).
class SumTree {
  public:
    explicit SumTree(std::size_t n) : n_(n), tree_(n + 1, 0) {}

    void add(std::size_t i, long long d) {
        total_ += d;
        for (++i; i <= n_; i += i & (~i + 1)) tree_[i] += d;
    }

    [[nodiscard]] long long total() const { return total_; }

    // Smallest index whose inclusive prefix sum exceeds target; target must
    // lie in [0, total).
    [[nodiscard]] std::size_t find(long long target) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) <= n_) mask <<= 1;
        for (; mask != 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next <= n_ && tree_[next] <= target) {
                pos = next;
                target -= tree_[next];
            }
        }
        return pos;
    }

  private:
    std::size_t n_;
    long long total_ = 0;
    std::vector<long long> tree_;
};

/// Shared per-node machinery of the rerouting network: weighted service
/// picks, the non-saturated node pool, and the state histogram.
struct RistEngine {
    const RistParams& p;
    int N;
    RistStateSpace space;
    std::vector<int> x, y;
    SumTree tx, ty;
    std::vector<int> nonsat;  // node ids below capacity
    std::vector<int> pos;     // position in nonsat, -1 when saturated
    std::vector<long long> hist;
    long long sum_x = 0, sum_y = 0;
    SimCounters counters;

    RistEngine(const RistParams& params, const RistNetworkState& init)
        : p(params),
          N(static_cast<int>(init.primary.size())),
          space(params.C),
          x(init.primary),
          y(init.rerouted),
          tx(init.primary.size()),
          ty(init.primary.size()),
          pos(init.primary.size(), -1),
          hist(space.size(), 0) {
        require(!x.empty() && x.size() == y.size(),
                "simulate_rist: node vectors must be nonempty and equal length");
        for (int i = 0; i < N; ++i) {
            require(x[i] >= 0 && y[i] >= 0 && x[i] + y[i] <= p.C,
                    "simulate_rist: initial node state outside the capacity simplex");
            tx.add(static_cast<std::size_t>(i), x[i]);
            ty.add(static_cast<std::size_t>(i), y[i]);
            sum_x += x[i];
            sum_y += y[i];
            ++hist[space.index(x[i], y[i])];
            if (x[i] + y[i] < p.C) {
                pos[i] = static_cast<int>(nonsat.size());
                nonsat.push_back(i);
            }
        }
    }

    [[nodiscard]] int saturated() const { return N - static_cast<int>(nonsat.size()); }

    void move(int i, int dx, int dy) {
        --hist[space.index(x[i], y[i])];
        const bool was_free = x[i] + y[i] < p.C;
        x[i] += dx;
        y[i] += dy;
        ++hist[space.index(x[i], y[i])];
        if (dx != 0) tx.add(static_cast<std::size_t>(i), dx);
        if (dy != 0) ty.add(static_cast<std::size_t>(i), dy);
        sum_x += dx;
        sum_y += dy;
        const bool is_free = x[i] + y[i] < p.C;
        if (was_free && !is_free) {
            const int last = nonsat.back();
            nonsat[static_cast<std::size_t>(pos[i])] = last;
            pos[last] = pos[i];
            nonsat.pop_back();
            pos[i] = -1;
        } else if (!was_free && is_free) {
            pos[i] = static_cast<int>(nonsat.size());
            nonsat.push_back(i);
        }
    }

    [[nodiscard]] int pick_free(RngStream& rng) const {
        return nonsat[static_cast<std::size_t>(rng.next_below(nonsat.size()))];
    }

    void serve_primary(RngStream& rng) {
        move(static_cast<int>(tx.find(static_cast<long long>(
                 rng.next_below(static_cast<std::uint64_t>(sum_x))))),
             -1, 0);
    }

    void serve_secondary(RngStream& rng) {
        move(static_cast<int>(ty.find(static_cast<long long>(
                 rng.next_below(static_cast<std::uint64_t>(sum_y))))),
             0, -1);
    }

    // One network event; advances nothing but the node states and counters.
    void arrival(RngStream& rng) {
        const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N)));
        if (x[j] + y[j] < p.C) {
            move(j, 1, 0);
            ++counters.accepted;
            return;
        }
        if (p.unbounded_retrials()) {
            if (!nonsat.empty()) {
                move(pick_free(rng), 0, 1);
                ++counters.rerouted;
            } else {
                ++counters.rejected;
            }
            return;
        }
        for (int probe = 0; probe < *p.p0; ++probe) {
            const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N)));
            if (x[k] + y[k] < p.C) {
                move(k, 0, 1);
                ++counters.rerouted;
                return;
            }
        }
        ++counters.rejected;
    }

    [[nodiscard]] TrajectorySample sample(double t) const {
        TrajectorySample s;
        s.t = t;
        s.dist.resize(hist.size());
        for (std::size_t i = 0; i < hist.size(); ++i)
            s.dist[i] = static_cast<double>(hist[i]) / N;
        s.saturated_frac = static_cast<double>(saturated()) / N;
        s.mean_secondary = static_cast<double>(sum_y) / N;
        s.empty_places = static_cast<double>(static_cast<long long>(p.C) * N - sum_x - sum_y);
        return s;
    }
};

void check_time_args(double horizon, double grid_dt) {
    require(std::isfinite(horizon) && horizon >= 0.0, "simulate: horizon must be nonnegative");
    require(std::isfinite(grid_dt) && grid_dt > 0.0, "simulate: grid step must be positive");
}

}  // namespace

Trajectory simulate_rist(const RistParams& params, const RistNetworkState& init,
                         double horizon, double grid_dt, RngStream& rng) {
    check_time_args(horizon, grid_dt);
    RistEngine eng(params, init);

    Trajectory traj;
    std::size_t next = 0;
    const auto emit_until = [&](double t_new) {
        while (true) {
            const double ts = static_cast<double>(next) * grid_dt;
            if (ts > horizon || ts > t_new) break;
            traj.samples.push_back(eng.sample(ts));
            ++next;
        }
    };

    double t = 0.0;
    while (true) {
        const double total = params.lambda * eng.N + params.mu1 * static_cast<double>(eng.sum_x) +
                             params.mu2 * static_cast<double>(eng.sum_y);
        const double t_new = t + rng.exponential(total);
        emit_until(t_new);
        if (t_new > horizon) break;
        t = t_new;
        const double u = rng.next_double() * total;
        if (u < params.lambda * eng.N) {
            eng.arrival(rng);
        } else if (u < params.lambda * eng.N + params.mu1 * static_cast<double>(eng.sum_x)) {
            eng.serve_primary(rng);
        } else {
            eng.serve_secondary(rng);
        }
    }
    if (traj.samples.empty() || traj.samples.back().t < horizon)
        traj.samples.push_back(eng.sample(horizon));
    traj.counters = eng.counters;
    traj.final_time = horizon;
    return traj;
}

Trajectory simulate_dar(const DarParams& params, const DarNetworkState& init, double horizon,
                        double grid_dt, RngStream& rng) {
    check_time_args(horizon, grid_dt);
    const int N = static_cast<int>(init.occupancy.size());
    require(N >= 3, "simulate_dar: duplication needs at least three nodes");
    const int C = params.C;
    std::vector<int> occ(init.occupancy);
    SumTree tree(static_cast<std::size_t>(N));
    std::vector<long long> hist(static_cast<std::size_t>(C) + 1, 0);
    long long sum = 0;
    int full = 0;
    for (int i = 0; i < N; ++i) {
        require(occ[i] >= 0 && occ[i] <= C, "simulate_dar: occupancy outside [0, C]");
        tree.add(static_cast<std::size_t>(i), occ[i]);
        sum += occ[i];
        ++hist[static_cast<std::size_t>(occ[i])];
        if (occ[i] == C) ++full;
    }

    const auto bump = [&](int i, int d) {
        --hist[static_cast<std::size_t>(occ[i])];
        if (occ[i] == C) --full;
        occ[i] += d;
        ++hist[static_cast<std::size_t>(occ[i])];
        if (occ[i] == C) ++full;
        tree.add(static_cast<std::size_t>(i), d);
        sum += d;
    };

    Trajectory traj;
    const auto sample = [&](double ts) {
        TrajectorySample s;
        s.t = ts;
        s.dist.resize(hist.size());
        for (std::size_t k = 0; k < hist.size(); ++k)
            s.dist[k] = static_cast<double>(hist[k]) / N;
        s.saturated_frac = static_cast<double>(full) / N;
        s.mean_secondary = static_cast<double>(sum) / N;
        s.empty_places = static_cast<double>(static_cast<long long>(C) * N - sum);
        traj.samples.push_back(std::move(s));
    };

    std::size_t next = 0;
    double t = 0.0;
    while (true) {
        const double total = params.lambda * N + static_cast<double>(sum);
        const double t_new = t + rng.exponential(total);
        while (true) {
            const double ts = static_cast<double>(next) * grid_dt;
            if (ts > horizon || ts > t_new) break;
            sample(ts);
            ++next;
        }
        if (t_new > horizon) break;
        t = t_new;
        const double u = rng.next_double() * total;
        if (u < params.lambda * N) {
            const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N)));
            if (occ[j] < C) {
                bump(j, 1);
                ++traj.counters.accepted;
            } else {
                // Copy to two distinct other nodes, or drop if either is full.
                const auto r1 =
                    static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N - 1)));
                const int k = r1 >= j ? r1 + 1 : r1;
                auto l = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N - 2)));
                const int lo = std::min(j, k), hi = std::max(j, k);
                if (l >= lo) ++l;
                if (l >= hi) ++l;
                if (occ[k] < C && occ[l] < C) {
                    bump(k, 1);
                    bump(l, 1);
                    ++traj.counters.rerouted;
                } else {
                    ++traj.counters.rejected;
                }
            }
        } else {
            bump(static_cast<int>(tree.find(static_cast<long long>(
                     rng.next_below(static_cast<std::uint64_t>(sum))))),
                 -1);
        }
    }
    if (traj.samples.empty() || traj.samples.back().t < horizon) sample(horizon);
    traj.final_time = horizon;
    return traj;
}

UResult simulate_u(const RistParams& params, int N, long long u0, long long u1,
                   double horizon, double grid_dt, RngStream& rng) {
    check_time_args(horizon, grid_dt);
    require(N >= 1, "simulate_u: need at least one node");
    require(u0 >= 0 && u1 >= 0 && u0 + u1 <= N,
            "simulate_u: initial point outside the chain's domain");
    const long long places = static_cast<long long>(params.C) * N;

    UResult res;
    std::size_t next = 0;
    double t = 0.0;
    const auto note_boundary = [&] {
        if (!res.boundary_hit && u0 + u1 == N) res.boundary_hit = t;
    };
    note_boundary();
    while (true) {
        const double r_shift = params.lambda * static_cast<double>(u0);
        const double r_drain = u0 > 0 ? params.lambda * static_cast<double>(N - u0) : 0.0;
        const double r_serve1 = params.mu1 * static_cast<double>(u1);
        const double r_grow =
            u0 + u1 < N ? params.mu2 * static_cast<double>(places - u0 - u1) : 0.0;
        const double total = r_shift + r_drain + r_serve1 + r_grow;
        const double t_new = total > 0.0 ? t + rng.exponential(total) : horizon + 1.0;
        while (true) {
            const double ts = static_cast<double>(next) * grid_dt;
            if (ts > horizon || ts > t_new) break;
            res.path.push_back({ts, u0, u1, places - u0 - u1});
            ++next;
        }
        if (t_new > horizon) break;
        t = t_new;
        const double u = rng.next_double() * total;
        if (u < r_shift) {
            --u0;
            ++u1;
        } else if (u < r_shift + r_drain) {
            --u0;
        } else if (u < r_shift + r_drain + r_serve1) {
            ++u0;
            --u1;
        } else {
            ++u0;
        }
        note_boundary();
    }
    if (res.path.empty() || res.path.back().t < horizon)
        res.path.push_back({horizon, u0, u1, places - u0 - u1});
    return res;
}

CouplingResult simulate_coupled(const RistParams& params, const RistNetworkState& init,
                                double horizon, RngStream& rng, bool record_events) {
    require(std::isfinite(horizon) && horizon >= 0.0, "simulate: horizon must be nonnegative");
    require(params.unbounded_retrials(),
            "simulate_coupled: the construction couples the unbounded-retrial network");
    RistEngine eng(params, init);
    const int N = eng.N;
    const long long places = static_cast<long long>(params.C) * N;

    long long u0 = places - eng.sum_x - eng.sum_y;  // equals the empty places at t = 0
    long long u1 = eng.sum_x;
    require(u0 + u1 <= N,
            "simulate_coupled: initial margins leave the dominating chain's domain");

    CouplingResult res;
    const double inf = std::numeric_limits<double>::infinity();

    const auto reroute_z = [&](RngStream& r) {
        if (!eng.nonsat.empty()) eng.move(eng.pick_free(r), 0, 1);
    };

    double t = 0.0;
    const auto note = [&](bool force) {
        const long long u2 = places - u0 - u1;
        const bool ok = u2 <= eng.sum_y && u1 + u2 <= eng.sum_x + eng.sum_y;
        if (!ok && !res.first_violation) res.first_violation = t;
        if (record_events || force)
            res.events.push_back({t,
                                  u0,
                                  u1,
                                  u2,
                                  places - eng.sum_x - eng.sum_y,
                                  eng.sum_x,
                                  eng.sum_y,
                                  ok});
    };
    note(true);

    while (t < horizon && u0 + u1 < N) {
        const auto atilde = static_cast<long long>(eng.nonsat.size());
        const long long z1 = eng.sum_x;
        const long long z2 = eng.sum_y;
        const long long u2 = places - u0 - u1;

        // Race clocks, one exponential per entry; zero-rate entries never win.
        enum Race {
            kArrFree,
            kArrBlockedInside,
            kArrBlockedOutside,
            kGrowShared,
            kServe1Both,
            kServe1ZOnly,
            kServe2ZOnly,
            kServe1UOnly,
            kShadow,
        };
        struct Clock {
            double when;
            Race what;
        };
        std::vector<Clock> clocks;
        clocks.reserve(8);
        const auto put = [&](double rate, Race what) {
            if (rate > 0.0) clocks.push_back({rng.exponential(rate), what});
        };
        put(params.lambda * static_cast<double>(atilde), kArrFree);
        put(params.lambda * static_cast<double>(std::max<long long>(u0 - atilde, 0)),
            kArrBlockedInside);
        if (u0 > 0) put(params.lambda * static_cast<double>(N - u0), kArrBlockedOutside);
        put(params.mu2 * static_cast<double>(u2), kGrowShared);
        if (u1 <= z1) {
            put(params.mu1 * static_cast<double>(u1), kServe1Both);
            put(params.mu1 * static_cast<double>(z1 - u1), kServe1ZOnly);
            put(params.mu2 * static_cast<double>(z2 - u2), kServe2ZOnly);
        } else {
            put(params.mu1 * static_cast<double>(z1), kServe1Both);
            // Shared exponential for the excess jobs: the chain's service wins
            // at F/mu1, the network's shadow copy would need F/mu2 >= F/mu1.
            const double f = rng.exponential(static_cast<double>(u1 - z1));
            clocks.push_back({f / params.mu1, kServe1UOnly});
            clocks.push_back({f / params.mu2, kShadow});
            put(params.mu2 * static_cast<double>(std::max<long long>(z2 - u2 - (u1 - z1), 0)),
                kServe2ZOnly);
        }

        double best = inf;
        Race what = kShadow;
        for (const Clock& c : clocks)
            if (c.when < best || (c.when == best && c.what < what)) {
                best = c.when;
                what = c.what;
            }
        if (t + best > horizon) {
            t = horizon;
            break;
        }
        t += best;

        switch (what) {
            case kArrFree:
                eng.move(eng.pick_free(rng), 1, 0);
                --u0;
                ++u1;
                break;
            case kArrBlockedInside:
                reroute_z(rng);
                --u0;
                ++u1;
                break;
            case kArrBlockedOutside:
                reroute_z(rng);
                --u0;
                break;
            case kGrowShared:
                eng.serve_secondary(rng);
                ++u0;
                break;
            case kServe1Both:
                eng.serve_primary(rng);
                ++u0;
                --u1;
                break;
            case kServe1ZOnly:
                eng.serve_primary(rng);
                break;
            case kServe2ZOnly:
                eng.serve_secondary(rng);
                break;
            case kServe1UOnly:
                ++u0;
                --u1;
                break;
            case kShadow:
                ++res.shadow_service_wins;
                break;
        }
        ++res.events_total;
        note(false);
    }
    if (u0 + u1 == N) res.boundary_hit = t;
    return res;
}

double saturation_experiment(const RistParams& params, int N, double eta, double t0, double T,
                             double eps, int runs, RngStream& rng) {
    require(N >= 1, "saturation_experiment: need at least one node");
    require(std::isfinite(eta) && eta >= 0.0 && eta <= params.C,
            "saturation_experiment: eta must lie in [0, C]");
    require(std::isfinite(eps) && eps > 0.0, "saturation_experiment: eps must be positive");
    require(std::isfinite(t0) && t0 >= 0.0 && std::isfinite(T) && T > 0.0,
            "saturation_experiment: window must have t0 >= 0, T > 0");
    require(runs >= 1, "saturation_experiment: need at least one run");

    RistNetworkState init;
    init.primary.assign(static_cast<std::size_t>(N), 0);
    init.rerouted.assign(static_cast<std::size_t>(N), params.C);
    const auto short_nodes = static_cast<std::size_t>(eta * N);
    for (std::size_t i = 0; i < std::min(short_nodes, static_cast<std::size_t>(N)); ++i)
        init.rerouted[i] = params.C - 1;

    const double horizon = t0 + T;
    const double floor_level = params.C - eps;
    int good = 0;
    for (int run = 0; run < runs; ++run) {
        RngStream local(rng.next_u64());
        RistEngine eng(params, init);
        double t = 0.0;
        bool ok = true;
        while (ok) {
            const double total = params.lambda * eng.N +
                                 params.mu1 * static_cast<double>(eng.sum_x) +
                                 params.mu2 * static_cast<double>(eng.sum_y);
            const double t_new = t + local.exponential(total);
            // The state held on [t, t_new) must stay saturated wherever that
            // interval meets the observation window.
            if (t < horizon && t_new > t0 &&
                static_cast<double>(eng.sum_y) / N < floor_level) {
                ok = false;
                break;
            }
            if (t_new > horizon) break;
            t = t_new;
            const double u = local.next_double() * total;
            if (u < params.lambda * eng.N) {
                eng.arrival(local);
            } else if (u < params.lambda * eng.N +
                               params.mu1 * static_cast<double>(eng.sum_x)) {
                eng.serve_primary(local);
            } else {
                eng.serve_secondary(local);
            }
        }
        if (ok) ++good;
    }
    return static_cast<double>(good) / runs;
}

}  // namespace reroute
