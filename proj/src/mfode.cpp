#include "reroute/mfode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace reroute {
namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double interior_mass(const RistStateSpace& space, std::span<const double> state) {
    double m = 0.0;
    for (std::size_t i : space.interior()) m += state[i];
    return m;
}

// Common pair-flow body; reroute_coeff multiplies the class-2 inflow stream.
void pair_flow(const RistParams& p, const RistStateSpace& space,
               std::span<const double> state, double reroute_coeff, std::span<double> out) {
    const int C = space.capacity();
    const double lambda = p.lambda;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto [x, y] = space.states()[i];
        const bool interior = x + y < C;
        double d = 0.0;
        if (x >= 1) d += lambda * state[space.index(x - 1, y)];
        if (y >= 1) d += reroute_coeff * state[space.index(x, y - 1)];
        if (interior) d -= (lambda + reroute_coeff) * state[i];
        if (x + y + 1 <= C) {
            d += p.mu1 * (x + 1) * state[space.index(x + 1, y)];
            d += p.mu2 * (y + 1) * state[space.index(x, y + 1)];
        }
        d -= (p.mu1 * x + p.mu2 * y) * state[i];
        out[i] = d;
    }
}

// Dormand-Prince 5(4) tableau.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kErr[7] = {71.0 / 57600,      0.0,         -71.0 / 16695, 71.0 / 1920,
                            -17253.0 / 339200, 22.0 / 525,  -1.0 / 40};

struct Stepper {
    std::function<bool(std::span<const double>, std::span<double>)> rhs;
    std::size_t n;
    std::vector<std::vector<double>> k{7};
    std::vector<double> tmp, ynew, yerr;

    Stepper(std::function<bool(std::span<const double>, std::span<double>)> f, std::size_t dim)
        : rhs(std::move(f)), n(dim), tmp(dim), ynew(dim), yerr(dim) {
        for (auto& ki : k) ki.resize(dim);
    }

    // One trial step of size h from y. Returns false if any stage evaluation
    // hit the singular set; err_norm < 0 signals that too.
    bool attempt(std::span<const double> y, double h, double& err_norm, double abs_tol,
                 double rel_tol) {
        if (!rhs(y, k[0])) return false;
        for (int s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = y[i];
                for (int j = 0; j < s; ++j) acc += h * kA[s][j] * k[j][i];
                tmp[i] = acc;
            }
            if (s == 6) break;  // stage 7 state equals the 5th-order result
            if (!rhs(tmp, k[s])) return false;
        }
        std::copy(tmp.begin(), tmp.end(), ynew.begin());
        if (!rhs(ynew, k[6])) return false;  // FSAL slope, also validates ynew
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (int j = 0; j < 7; ++j) e += kErr[j] * k[j][i];
            e *= h;
            const double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            sum += (e / sc) * (e / sc);
        }
        err_norm = std::sqrt(sum / static_cast<double>(n));
        return true;
    }
};

OdeResult integrate_generic(std::function<bool(std::span<const double>, std::span<double>)> rhs,
                            const std::function<double(std::span<const double>)>& singular_gauge,
                            double singular_cut, const ProbVec& init, double horizon,
                            double grid_dt, const OdeOptions& opts) {
    require(std::isfinite(horizon) && horizon >= 0.0, "integrate: horizon must be nonnegative");
    require(std::isfinite(grid_dt) && grid_dt > 0.0, "integrate: grid step must be positive");
    require(opts.rel_tol > 0.0 && opts.abs_tol > 0.0 && opts.max_step > 0.0 &&
                opts.renormalize_drift > 0.0,
            "integrate: tolerances must be strictly positive");

    OdeResult res;
    std::vector<double> y(init.values());
    const std::size_t n = y.size();
    Stepper st(std::move(rhs), n);

    const auto record = [&](double t) {
        if (!res.times.empty() && t <= res.times.back() + 1e-15 * std::max(1.0, t)) return;
        res.times.push_back(t);
        res.states.push_back(y);
    };

    double t = 0.0;
    record(0.0);
    if (singular_gauge && singular_gauge(y) <= singular_cut) {
        res.status = OdeStatus::SingularityAt;
        res.stop_time = 0.0;
        return res;
    }
    if (horizon == 0.0) {
        res.stop_time = 0.0;
        return res;
    }

    std::size_t next_grid = 1;
    double h = std::min({opts.max_step, grid_dt, horizon});
    std::vector<double> ycur(n);

    const auto finish_accept = [&](std::span<const double> ynew) {
        y.assign(ynew.begin(), ynew.end());
        double sum = 0.0;
        for (double& v : y) {
            if (v < 0.0 && v >= -1e-12) v = 0.0;
            sum += v;
        }
        if (std::abs(sum - 1.0) > opts.renormalize_drift)
            for (double& v : y) v /= sum;
    };

    while (t < horizon - 1e-15 * std::max(1.0, horizon)) {
        const double t_goal = std::min(horizon, static_cast<double>(next_grid) * grid_dt);
        double h_try = std::min({h, opts.max_step, t_goal - t});
        const double h_floor = 1e-14 * std::max(1.0, std::abs(t));

        double err = -1.0;
        bool ok = st.attempt(y, h_try, err, opts.abs_tol, opts.rel_tol);
        bool negative_breach = false;
        bool singular_hit = false;
        if (ok && err <= 1.0) {
            for (std::size_t i = 0; i < n; ++i)
                if (st.ynew[i] < -1e-12) negative_breach = true;
            if (!negative_breach && singular_gauge && singular_gauge(st.ynew) <= singular_cut)
                singular_hit = true;
        }

        if (ok && err <= 1.0 && !negative_breach && !singular_hit) {
            t += h_try;
            finish_accept(st.ynew);
            ++res.steps_accepted;
            if (t >= t_goal - 1e-15 * std::max(1.0, t_goal)) {
                t = t_goal;  // snap so grid times come out as clean multiples
                record(t);
                if (t_goal < horizon) ++next_grid;
            }
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h = h_try * std::clamp(grow, 0.2, 5.0);
            continue;
        }

        if (singular_hit) {
            // A valid step crossed the interior-mass cut, so the crossing lies
            // in (t, t+h_try]. Shrink the bracket; only fully valid sub-steps
            // that stay on the regular side advance the lower end.
            double lo = 0.0, hi = h_try;
            const double t_res = std::max(1e-13, 1e-11 * std::max(1.0, t));
            const auto fine = [&](double step) {
                double e2 = -1.0;
                if (!st.attempt(y, step, e2, opts.abs_tol, opts.rel_tol) || e2 > 1.0)
                    return false;
                for (std::size_t i = 0; i < n; ++i)
                    if (st.ynew[i] < -1e-12) return false;
                return singular_gauge(st.ynew) > singular_cut;
            };
            while (hi - lo > t_res) {
                const double mid = 0.5 * (lo + hi);
                if (fine(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if (lo > 0.0 && fine(lo)) {
                t += lo;
                finish_accept(st.ynew);
                ++res.steps_accepted;
            }
            record(t);
            res.status = OdeStatus::SingularityAt;
            res.stop_time = t + (hi - lo);
            return res;
        }

        // Plain rejection: accuracy breach, a stage overshooting the singular
        // set, or negative entries. All are cured by a smaller step while the
        // current state is regular.
        ++res.steps_rejected;
        h = h_try * (err > 1.0 && std::isfinite(err)
                         ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9)
                         : 0.5);
        if (h < h_floor) {
            record(t);
            // Trapped against the singular set: the state sits essentially on
            // the cut and no representable step stays valid.
            if (singular_gauge && singular_gauge(y) <= 2.0 * singular_cut) {
                res.status = OdeStatus::SingularityAt;
            } else {
                res.status = OdeStatus::StepUnderflow;
            }
            res.stop_time = t;
            return res;
        }
    }

    record(horizon);
    res.stop_time = horizon;
    return res;
}

}  // namespace

SingularFlowError::SingularFlowError(double mass)
    : std::runtime_error("interior mass " + std::to_string(mass) +
                         " too small for the rerouting ratio"),
      interior_mass_(mass) {}

double retrial_factor(double R, int p0) {
    require(std::isfinite(R) && R >= 0.0 && R <= 1.0, "retrial_factor: R must lie in [0,1]");
    require(p0 >= 0, "retrial_factor: p0 must be nonnegative");
    if (p0 == 0 || R == 0.0) return 0.0;
    if (R == 1.0) return static_cast<double>(p0);
    const double lr = std::log(R);
    return R * std::expm1(p0 * lr) / std::expm1(lr);
}

bool rist_unbounded_flow(const RistParams& p, const RistStateSpace& space,
                         std::span<const double> state, double eps_interior,
                         std::span<double> out) {
    const double mi = interior_mass(space, state);
    if (mi <= eps_interior) return false;
    double mb = 0.0;
    for (std::size_t i : space.boundary()) mb += state[i];
    pair_flow(p, space, state, p.lambda * mb / mi, out);
    return true;
}

void rist_retrial_flow(const RistParams& p, const RistStateSpace& space,
                       std::span<const double> state, std::span<double> out) {
    double mb = 0.0;
    for (std::size_t i : space.boundary()) mb += state[i];
    const double R = std::clamp(mb, 0.0, 1.0);
    pair_flow(p, space, state, p.lambda * retrial_factor(R, *p.p0), out);
}

void dar_flow(const DarParams& p, std::span<const double> state, std::span<double> out) {
    const int C = p.C;
    const double lh = p.lambda * p.h(state[static_cast<std::size_t>(C)]);
    out[0] = state[1] - lh * state[0];
    for (int j = 1; j < C; ++j) {
        const auto i = static_cast<std::size_t>(j);
        out[i] = lh * state[i - 1] + (j + 1) * state[i + 1] - (lh + j) * state[i];
    }
    const auto c = static_cast<std::size_t>(C);
    out[c] = lh * state[c - 1] - C * state[c];
}

void nlmm1_flow(double nu, const std::function<double(double)>& h,
                std::span<const double> state, std::span<double> out) {
    const std::size_t K = state.size() - 1;
    const double m = nu * h(state[0]);
    out[0] = m * state[1] - state[0];
    for (std::size_t k = 1; k < K; ++k)
        out[k] = state[k - 1] + m * state[k + 1] - (1.0 + m) * state[k];
    out[K] = state[K - 1] - m * state[K];
}

std::vector<double> rist_rhs_unbounded(const RistParams& params, const ProbVec& state,
                                       double eps_interior) {
    require(state.space() == ProbVec::Space::RistPairs, "rist_rhs_unbounded: wrong state space");
    RistStateSpace space(params.C);
    require(state.size() == space.size(), "rist_rhs_unbounded: state dimension mismatch");
    std::vector<double> out(state.size());
    if (!rist_unbounded_flow(params, space, state.values(), eps_interior, out))
        throw SingularFlowError(interior_mass(space, state.values()));
    return out;
}

std::vector<double> rist_rhs_retrials(const RistParams& params, const ProbVec& state) {
    require(state.space() == ProbVec::Space::RistPairs, "rist_rhs_retrials: wrong state space");
    require(!params.unbounded_retrials(), "rist_rhs_retrials: params.p0 must be finite");
    RistStateSpace space(params.C);
    require(state.size() == space.size(), "rist_rhs_retrials: state dimension mismatch");
    std::vector<double> out(state.size());
    rist_retrial_flow(params, space, state.values(), out);
    return out;
}

std::vector<double> dar_rhs(const DarParams& params, const ProbVec& state) {
    require(state.space() == ProbVec::Space::DarOccupancy, "dar_rhs: wrong state space");
    require(state.size() == static_cast<std::size_t>(params.C) + 1,
            "dar_rhs: state dimension mismatch");
    std::vector<double> out(state.size());
    dar_flow(params, state.values(), out);
    return out;
}

std::vector<double> nlmm1_rhs(double nu, const std::function<double(double)>& h,
                              const ProbVec& state) {
    require(state.space() == ProbVec::Space::QueueLengths, "nlmm1_rhs: wrong state space");
    require(std::isfinite(nu) && nu > 0.0, "nlmm1_rhs: nu must be positive");
    require(state.size() >= 11, "nlmm1_rhs: truncation must be at least 10");
    std::vector<double> out(state.size());
    nlmm1_flow(nu, h, state.values(), out);
    return out;
}

int nlmm1_default_truncation(double nu) {
    require(std::isfinite(nu) && nu > 0.0, "nlmm1_default_truncation: nu must be positive");
    if (nu <= 1.02) return 400;
    // Tail of the slowest geometric profile: r^(K+1)/(1-r) < 1e-10, r = 1/nu.
    const double lr = -std::log(nu);
    const double k = (std::log(1e-10) + std::log1p(-1.0 / nu)) / lr;
    return std::clamp(static_cast<int>(std::ceil(k)), 10, 2000);
}

OdeResult integrate_rist_unbounded(const RistParams& params, const ProbVec& init,
                                   double horizon, double grid_dt, OdeOptions opts) {
    require(init.space() == ProbVec::Space::RistPairs, "integrate: wrong state space");
    require(opts.singularity_threshold > 0.0 && opts.singularity_threshold <= 0.1,
            "integrate: singularity threshold must lie in (0, 0.1]");
    auto space = std::make_shared<RistStateSpace>(params.C);
    require(init.size() == space->size(), "integrate: state dimension mismatch");
    auto rhs = [params, space, eps = opts.singularity_threshold](
                   std::span<const double> s, std::span<double> out) {
        return rist_unbounded_flow(params, *space, s, eps, out);
    };
    auto gauge = [space](std::span<const double> s) { return interior_mass(*space, s); };
    return integrate_generic(rhs, gauge, opts.singularity_threshold, init, horizon, grid_dt,
                             opts);
}

OdeResult integrate_rist_retrials(const RistParams& params, const ProbVec& init,
                                  double horizon, double grid_dt, OdeOptions opts) {
    require(init.space() == ProbVec::Space::RistPairs, "integrate: wrong state space");
    require(!params.unbounded_retrials(), "integrate: params.p0 must be finite");
    auto space = std::make_shared<RistStateSpace>(params.C);
    require(init.size() == space->size(), "integrate: state dimension mismatch");
    auto rhs = [params, space](std::span<const double> s, std::span<double> out) {
        rist_retrial_flow(params, *space, s, out);
        return true;
    };
    return integrate_generic(rhs, nullptr, 0.0, init, horizon, grid_dt, opts);
}

OdeResult integrate_dar(const DarParams& params, const ProbVec& init, double horizon,
                        double grid_dt, OdeOptions opts) {
    require(init.space() == ProbVec::Space::DarOccupancy, "integrate: wrong state space");
    require(init.size() == static_cast<std::size_t>(params.C) + 1,
            "integrate: state dimension mismatch");
    auto rhs = [params](std::span<const double> s, std::span<double> out) {
        dar_flow(params, s, out);
        return true;
    };
    return integrate_generic(rhs, nullptr, 0.0, init, horizon, grid_dt, opts);
}

OdeResult integrate_nlmm1(double nu, const std::function<double(double)>& h,
                          const ProbVec& init, double horizon, double grid_dt,
                          OdeOptions opts) {
    require(init.space() == ProbVec::Space::QueueLengths, "integrate: wrong state space");
    require(std::isfinite(nu) && nu > 0.0, "integrate: nu must be positive");
    require(init.size() >= 11, "integrate: truncation must be at least 10");
    auto rhs = [nu, h](std::span<const double> s, std::span<double> out) {
        nlmm1_flow(nu, h, s, out);
        return true;
    };
    return integrate_generic(rhs, nullptr, 0.0, init, horizon, grid_dt, opts);
}

ProbVec to_prob_vec(ProbVec::Space space, const std::vector<double>& state) {
    std::vector<double> v(state);
    double sum = 0.0;
    for (double& x : v) {
        if (x < 0.0 && x >= -1e-9) x = 0.0;
        sum += x;
    }
    if (sum <= 0.0) throw std::invalid_argument("to_prob_vec: state has no mass");
    for (double& x : v) x /= sum;
    return ProbVec(space, std::move(v));
}

}  // namespace reroute
