// Command-line front end: subcommand dispatch, JSON config handling with
// flag overrides, CSV/JSON/SVG emission, and the exit-code contract
// (input errors 2, numeric failures 3, invariant violations 4).

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reroute/core.hpp"
#include "reroute/equilibria.hpp"
#include "reroute/mfode.hpp"
#include "reroute/nsim.hpp"
#include "reroute/report.hpp"
#include "reroute/stability.hpp"

namespace {

using nlohmann::json;
using namespace reroute;

constexpr const char* kVersion = "1.0.0";

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInvariant = 4;

/// Registry of options that can also come from a JSON config file. Flags
/// given on the command line win; file values fill the rest; the built-in
/// defaults cover whatever remains.
class Bindings {
  public:
    template <typename T>
    CLI::Option* bind(CLI::App* app, const std::string& flag, T& ref, const std::string& desc) {
        CLI::Option* opt = app->add_option(flag, ref, desc);
        entries_.push_back({flag.substr(2), opt,
                            [&ref](const json& j) { ref = j.get<T>(); },
                            [&ref]() { return json(ref); }});
        return opt;
    }

    CLI::Option* bind_flag(CLI::App* app, const std::string& flag, bool& ref,
                           const std::string& desc) {
        CLI::Option* opt = app->add_flag(flag, ref, desc);
        entries_.push_back({flag.substr(2), opt,
                            [&ref](const json& j) { ref = j.get<bool>(); },
                            [&ref]() { return json(ref); }});
        return opt;
    }

    void load(const json& cfg) {
        for (auto& e : entries_)
            if (e.opt->count() == 0 && cfg.contains(e.key)) e.set(cfg.at(e.key));
    }

    [[nodiscard]] json effective() const {
        json j = json::object();
        for (const auto& e : entries_) j[e.key] = e.get();
        return j;
    }

    [[nodiscard]] bool given(const std::string& key, const json& cfg) const {
        for (const auto& e : entries_)
            if (e.key == key) return e.opt->count() > 0 || cfg.contains(key);
        return false;
    }

  private:
    struct Entry {
        std::string key;
        CLI::Option* opt;
        std::function<void(const json&)> set;
        std::function<json()> get;
    };
    std::vector<Entry> entries_;
};

/// Flags shared by every subcommand.
struct Common {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out = ".";
    bool plot = false;
    int jobs = 0;  // 0 = hardware concurrency

    void add(Bindings& bag, CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file; flags override its values");
        bag.bind(app, "--seed", seed, "master seed for all random streams");
        bag.bind(app, "--out", out, "output directory");
        bag.bind_flag(app, "--plot", plot, "also write SVG plots");
        bag.bind(app, "--jobs", jobs, "worker threads for sweeps and batches (0 = auto)");
    }

    [[nodiscard]] json load_file() const {
        if (config_path.empty()) return json::object();
        std::ifstream is(config_path);
        if (!is) throw std::invalid_argument("cannot read config file " + config_path);
        json cfg;
        try {
            is >> cfg;
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file " + config_path + ": " + e.what());
        }
        if (!cfg.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        return cfg;
    }
};

struct RistFlags {
    double lambda = 2.0, mu1 = 1.0, mu2 = 0.2;
    int C = 3;
    int p0 = -1;  // -1 = unbounded

    void add(Bindings& bag, CLI::App* app, bool with_p0 = true) {
        bag.bind(app, "--lambda", lambda, "arrival rate per node");
        bag.bind(app, "--mu1", mu1, "fresh-job service rate");
        bag.bind(app, "--mu2", mu2, "rerouted-job service rate");
        bag.bind(app, "--C", C, "node capacity");
        if (with_p0) bag.bind(app, "--p0", p0, "retrial budget, -1 = unbounded");
    }

    [[nodiscard]] RistParams params() const {
        return RistParams(lambda, mu1, mu2, C,
                          p0 < 0 ? std::nullopt : std::optional<int>(p0));
    }
};

struct DarFlags {
    double nu = 0.97, a = 2.0;
    int C = 100;

    void add(Bindings& bag, CLI::App* app) {
        bag.bind(app, "--nu", nu, "load per unit capacity");
        bag.bind(app, "--a", a, "rerouting amplification coefficient");
        bag.bind(app, "--C", C, "node capacity");
    }
};

struct InitFlags {
    std::string init = "empty";  // empty | saturated | near-saturated
    double mix = 0.001;          // mass moved to the empty state by near-saturated (ODE)
    double eta = 0.3;            // fraction of nodes one job short (simulators)
    std::string init_file;       // JSON array overriding the named shapes (ODE)

    void add(Bindings& bag, CLI::App* app, bool ode) {
        bag.bind(app, "--init", init, "initial shape: empty, saturated or near-saturated");
        if (ode) {
            bag.bind(app, "--mix", mix, "empty-state mass of the near-saturated shape");
            bag.bind(app, "--init-file", init_file, "JSON array with the full initial vector");
        } else {
            bag.bind(app, "--eta", eta, "near-saturated: fraction of nodes one job short");
        }
    }
};

struct OdeFlags {
    double horizon = 10.0, grid_dt = 0.1;
    double rel_tol = 1e-10, abs_tol = 1e-12, max_step = 0.1;

    void add(Bindings& bag, CLI::App* app) {
        bag.bind(app, "--horizon", horizon, "integration horizon");
        bag.bind(app, "--grid-dt", grid_dt, "output grid spacing");
        bag.bind(app, "--rel-tol", rel_tol, "relative step tolerance");
        bag.bind(app, "--abs-tol", abs_tol, "absolute step tolerance");
        bag.bind(app, "--max-step", max_step, "largest internal step");
    }

    [[nodiscard]] OdeOptions options() const {
        OdeOptions o;
        o.rel_tol = rel_tol;
        o.abs_tol = abs_tol;
        o.max_step = max_step;
        return o;
    }
};

int exit_code = 0;  // set by handlers that detect invariant violations

std::filesystem::path out_path(const std::string& dir, const std::string& name) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p / name;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    auto p = out_path(dir, name);
    std::ofstream os(p);
    if (!os) throw std::invalid_argument("cannot open output file " + p.string());
    return os;
}

json wrap(const std::string& command, const Bindings& bag, json report) {
    json cfg = bag.effective();
    cfg["version"] = kVersion;
    cfg["command"] = command;
    return json{{"config", std::move(cfg)}, {"report", std::move(report)}};
}

/// Config echo for CSV headers: the same object as wrap()'s "config".
json csv_config(const std::string& command, const Bindings& bag) {
    json cfg = bag.effective();
    cfg["version"] = kVersion;
    cfg["command"] = command;
    return cfg;
}

void emit_report(const std::string& command, const Bindings& bag, const Common& common,
                 const json& cfg_file, json report, const std::string& file_name) {
    json doc = wrap(command, bag, std::move(report));
    std::cout << doc.dump(2) << "\n";
    if (bag.given("out", cfg_file)) {
        auto os = open_out(common.out, file_name);
        os << doc.dump(2) << "\n";
    }
}

ProbVec vec_from_file(ProbVec::Space space, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read init file " + path);
    json j;
    is >> j;
    return ProbVec(space, j.get<std::vector<double>>());
}

ProbVec delta_mix_init(ProbVec::Space space, std::size_t dim, std::size_t full_idx,
                       const std::string& kind, double mix) {
    std::vector<double> v(dim, 0.0);
    if (kind == "empty") {
        v[0] = 1.0;
    } else if (kind == "saturated") {
        v[full_idx] = 1.0;
    } else if (kind == "near-saturated") {
        v[full_idx] = 1.0 - mix;
        v[0] += mix;
    } else {
        throw std::invalid_argument("unknown init shape '" + kind + "'");
    }
    return ProbVec(space, std::move(v));
}

ProbVec make_pair_init(const InitFlags& f, int C) {
    if (!f.init_file.empty()) return vec_from_file(ProbVec::Space::RistPairs, f.init_file);
    RistStateSpace space(C);
    // (0,C) is the all-rerouted saturated state
    return delta_mix_init(ProbVec::Space::RistPairs, space.size(),
                          static_cast<std::size_t>(space.index(0, C)), f.init, f.mix);
}

ProbVec make_level_init(const InitFlags& f, ProbVec::Space space, int top) {
    if (!f.init_file.empty()) return vec_from_file(space, f.init_file);
    return delta_mix_init(space, static_cast<std::size_t>(top) + 1,
                          static_cast<std::size_t>(top), f.init, f.mix);
}

RistNetworkState make_rist_init(const InitFlags& f, int N, int C) {
    RistNetworkState s;
    s.primary.assign(N, 0);
    s.rerouted.assign(N, 0);
    if (f.init == "empty") return s;
    const int short_nodes = f.init == "near-saturated"
                                ? static_cast<int>(f.eta * N)
                                : (f.init == "saturated"
                                       ? 0
                                       : throw std::invalid_argument("unknown init shape '" +
                                                                     f.init + "'"));
    for (int i = 0; i < N; ++i) s.rerouted[i] = i < short_nodes ? C - 1 : C;
    return s;
}

DarNetworkState make_dar_init(const InitFlags& f, int N, int C) {
    DarNetworkState s;
    s.occupancy.assign(N, 0);
    if (f.init == "empty") return s;
    const int short_nodes = f.init == "near-saturated"
                                ? static_cast<int>(f.eta * N)
                                : (f.init == "saturated"
                                       ? 0
                                       : throw std::invalid_argument("unknown init shape '" +
                                                                     f.init + "'"));
    for (int i = 0; i < N; ++i) s.occupancy[i] = i < short_nodes ? C - 1 : C;
    return s;
}

void maybe_plot_trajectory(const Common& common, const std::string& base,
                           std::span<const double> times, std::span<const double> saturated,
                           std::span<const double> mean_secondary, const std::string& title) {
    if (!common.plot) return;
    PlotSeries sat, mean;
    sat.label = "saturated_frac";
    mean.label = "mean_y";
    for (std::size_t i = 0; i < times.size(); ++i) {
        sat.points.emplace_back(times[i], saturated[i]);
        mean.points.emplace_back(times[i], mean_secondary[i]);
    }
    auto os = open_out(common.out, base + ".svg");
    write_svg_plot(os, {sat, mean}, title, "t", "value");
}

void report_csv_written(const std::string& dir, const std::string& name,
                        std::size_t rows, const std::string& status) {
    std::cout << "wrote " << out_path(dir, name).string() << " (" << rows << " rows"
              << (status.empty() ? "" : ", status=" + status) << ")\n";
}

std::string status_name(OdeStatus s) {
    switch (s) {
        case OdeStatus::ReachedHorizon: return "ReachedHorizon";
        case OdeStatus::SingularityAt: return "SingularityAt";
        case OdeStatus::StepUnderflow: return "StepUnderflow";
    }
    return "unknown";
}

int resolve_jobs(int jobs, std::size_t work_items) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    return static_cast<int>(std::min<std::size_t>(jobs, std::max<std::size_t>(work_items, 1)));
}

/// Run fn(i) for i in [0, n) on a worker pool; the first exception wins and
/// is rethrown on the caller thread.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mx;
    auto worker = [&] {
        std::size_t i;
        while (!failed.load(std::memory_order_relaxed) && (i = next.fetch_add(1)) < n) {
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mx);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    const int workers = resolve_jobs(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// equilibria

void add_equilibria(CLI::App& app, Common& common) {
    auto* cmd = app.add_subcommand("equilibria", "fixed points of a mean-field model");
    cmd->require_subcommand(1);

    struct RhoFlags {
        double rho1 = 1.0, rho2 = 3.0;
        int C = 2;
    };

    for (const char* name : {"rist", "rist1"}) {
        auto* sub = cmd->add_subcommand(
            name, std::string(name) == "rist"
                      ? "unbounded-retrial pair model roots"
                      : "one-retrial pair model roots");
        auto bag = std::make_shared<Bindings>();
        auto fl = std::make_shared<RhoFlags>();
        bag->bind(sub, "--rho1", fl->rho1, "fresh-job load lambda/mu1");
        bag->bind(sub, "--rho2", fl->rho2, "rerouted-job load lambda/mu2");
        bag->bind(sub, "--C", fl->C, "node capacity");
        common.add(*bag, sub);
        const bool one_retrial = std::string(name) == "rist1";
        sub->callback([&common, bag, fl, one_retrial] {
            const json cfg = common.load_file();
            bag->load(cfg);
            EquilibriumReport rep = one_retrial
                                        ? rist1_equilibria(fl->rho1, fl->rho2, fl->C)
                                        : rist_equilibria(fl->rho1, fl->rho2, fl->C);
            const std::string cmd_name = one_retrial ? "equilibria rist1" : "equilibria rist";
            emit_report(cmd_name, *bag, common, cfg, to_json(rep),
                        one_retrial ? "equilibria_rist1.json" : "equilibria_rist.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("dar", "finite-capacity duplication-model roots");
        auto bag = std::make_shared<Bindings>();
        auto fl = std::make_shared<DarFlags>();
        fl->C = 1000;
        fl->add(*bag, sub);
        common.add(*bag, sub);
        sub->callback([&common, bag, fl] {
            const json cfg = common.load_file();
            bag->load(cfg);
            emit_report("equilibria dar", *bag, common, cfg,
                        to_json(dar_fixed_points(fl->nu, fl->a, fl->C)),
                        "equilibria_dar.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("dar-limit",
                                        "large-capacity duplication-model roots and critical load");
        auto bag = std::make_shared<Bindings>();
        auto fl = std::make_shared<DarFlags>();
        bag->bind(sub, "--nu", fl->nu, "load per unit capacity");
        bag->bind(sub, "--a", fl->a, "rerouting amplification coefficient");
        common.add(*bag, sub);
        sub->callback([&common, bag, fl] {
            const json cfg = common.load_file();
            bag->load(cfg);
            emit_report("equilibria dar-limit", *bag, common, cfg,
                        to_json(dar_limit_fixed_points(fl->nu, fl->a)),
                        "equilibria_dar_limit.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("nlmm1", "state-dependent single-queue roots");
        auto bag = std::make_shared<Bindings>();
        auto fl = std::make_shared<DarFlags>();
        fl->nu = 1.4;
        bag->bind(sub, "--nu", fl->nu, "base service level");
        bag->bind(sub, "--a", fl->a, "feedback amplification coefficient");
        common.add(*bag, sub);
        sub->callback([&common, bag, fl] {
            const json cfg = common.load_file();
            bag->load(cfg);
            emit_report("equilibria nlmm1", *bag, common, cfg,
                        to_json(nlmm1_fixed_points(fl->nu, fl->a)), "equilibria_nlmm1.json");
        });
    }
}

// ---------------------------------------------------------------------------
// ode

void add_ode(CLI::App& app, Common& common) {
    auto* cmd = app.add_subcommand("ode", "integrate a mean-field density flow");
    cmd->require_subcommand(1);

    struct NlFlags {
        double nu = 1.4, a = 2.0;
        int K = 0;  // 0 = pick from the service level
    };

    auto emit = [&common](const std::string& cmd_name, const Bindings& bag,
                          const OdeResult& res, ProbVec::Space space, int capacity,
                          const std::string& base) {
        {
            auto os = open_out(common.out, base + ".csv");
            write_ode_csv(os, res, space, capacity, csv_config(cmd_name, bag));
        }
        if (common.plot && !res.times.empty()) {
            std::vector<double> sat, mean;
            RistStateSpace pair_space(space == ProbVec::Space::RistPairs ? capacity : 1);
            for (const auto& s : res.states) {
                double sf = 0.0, m = 0.0;
                if (space == ProbVec::Space::RistPairs) {
                    for (std::size_t i = 0; i < s.size(); ++i) {
                        const auto [x, y] = pair_space.states()[i];
                        if (x + y == capacity) sf += s[i];
                        m += y * s[i];
                    }
                } else if (space == ProbVec::Space::DarOccupancy) {
                    sf = s.back();
                    for (std::size_t k = 0; k < s.size(); ++k) m += static_cast<double>(k) * s[k];
                } else {
                    sf = s.front();
                    for (std::size_t k = 0; k < s.size(); ++k) m += static_cast<double>(k) * s[k];
                }
                sat.push_back(sf);
                mean.push_back(m);
            }
            maybe_plot_trajectory(common, base, res.times, sat, mean, cmd_name);
        }
        report_csv_written(common.out, base + ".csv", res.times.size(),
                           status_name(res.status));
    };

    {
        auto* sub = cmd->add_subcommand("rist", "unbounded-retrial pair flow");
        sub->alias("rist-unbounded");
        auto bag = std::make_shared<Bindings>();
        auto rf = std::make_shared<RistFlags>();
        auto inf = std::make_shared<InitFlags>();
        auto of = std::make_shared<OdeFlags>();
        auto eps = std::make_shared<double>(1e-6);
        rf->add(*bag, sub, /*with_p0=*/false);
        inf->add(*bag, sub, /*ode=*/true);
        of->add(*bag, sub);
        bag->bind(sub, "--singular-eps", *eps, "interior-mass cutoff for the singularity");
        common.add(*bag, sub);
        sub->callback([&common, bag, rf, inf, of, eps, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            RistParams params = rf->params();
            OdeOptions opts = of->options();
            opts.singularity_threshold = *eps;
            OdeResult res = integrate_rist_unbounded(params, make_pair_init(*inf, params.C),
                                                     of->horizon, of->grid_dt, opts);
            emit("ode rist", *bag, res, ProbVec::Space::RistPairs, params.C, "ode_rist");
        });
    }

    {
        auto* sub = cmd->add_subcommand("rist-p0", "bounded-retrial pair flow");
        auto bag = std::make_shared<Bindings>();
        auto rf = std::make_shared<RistFlags>();
        rf->p0 = 1;
        auto inf = std::make_shared<InitFlags>();
        auto of = std::make_shared<OdeFlags>();
        rf->add(*bag, sub);
        inf->add(*bag, sub, /*ode=*/true);
        of->add(*bag, sub);
        common.add(*bag, sub);
        sub->callback([&common, bag, rf, inf, of, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            if (rf->p0 < 0)
                throw std::invalid_argument("ode rist-p0 needs a finite retrial budget --p0");
            RistParams params = rf->params();
            OdeResult res = integrate_rist_retrials(params, make_pair_init(*inf, params.C),
                                                    of->horizon, of->grid_dt, of->options());
            emit("ode rist-p0", *bag, res, ProbVec::Space::RistPairs, params.C, "ode_rist_p0");
        });
    }

    {
        auto* sub = cmd->add_subcommand("dar", "duplication-model occupancy flow");
        auto bag = std::make_shared<Bindings>();
        auto df = std::make_shared<DarFlags>();
        df->C = 5;
        auto inf = std::make_shared<InitFlags>();
        auto of = std::make_shared<OdeFlags>();
        df->add(*bag, sub);
        inf->add(*bag, sub, /*ode=*/true);
        of->add(*bag, sub);
        common.add(*bag, sub);
        sub->callback([&common, bag, df, inf, of, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            DarParams params(df->nu, df->a, df->C);
            OdeResult res =
                integrate_dar(params, make_level_init(*inf, ProbVec::Space::DarOccupancy, df->C),
                              of->horizon, of->grid_dt, of->options());
            emit("ode dar", *bag, res, ProbVec::Space::DarOccupancy, df->C, "ode_dar");
        });
    }

    {
        auto* sub = cmd->add_subcommand("nlmm1", "state-dependent single-queue flow");
        auto bag = std::make_shared<Bindings>();
        auto nf = std::make_shared<NlFlags>();
        auto inf = std::make_shared<InitFlags>();
        auto of = std::make_shared<OdeFlags>();
        bag->bind(sub, "--nu", nf->nu, "base service level");
        bag->bind(sub, "--a", nf->a, "feedback amplification coefficient");
        bag->bind(sub, "--K", nf->K, "truncation level (0 = auto)");
        inf->add(*bag, sub, /*ode=*/true);
        of->add(*bag, sub);
        common.add(*bag, sub);
        sub->callback([&common, bag, nf, inf, of, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            const int K = nf->K > 0 ? nf->K : nlmm1_default_truncation(nf->nu);
            const double a = nf->a;
            auto h = [a](double x) { return 1.0 + a * x * (1.0 - x); };
            OdeResult res =
                integrate_nlmm1(nf->nu, h, make_level_init(*inf, ProbVec::Space::QueueLengths, K),
                                of->horizon, of->grid_dt, of->options());
            emit("ode nlmm1", *bag, res, ProbVec::Space::QueueLengths, K, "ode_nlmm1");
        });
    }
}

// ---------------------------------------------------------------------------
// simulate

void add_simulate(CLI::App& app, Common& common) {
    auto* cmd = app.add_subcommand("simulate", "event-driven finite-N runs");
    cmd->require_subcommand(1);

    struct SimFlags {
        int N = 100;
        double horizon = 10.0, grid_dt = 0.1;

        void add(Bindings& bag, CLI::App* app_) {
            bag.bind(app_, "--N", N, "number of nodes");
            bag.bind(app_, "--horizon", horizon, "simulated time");
            bag.bind(app_, "--grid-dt", grid_dt, "sampling grid spacing");
        }
    };

    auto emit = [&common](const std::string& cmd_name, const Bindings& bag,
                          const Trajectory& traj, const std::vector<std::string>& names,
                          const std::string& base) {
        {
            auto os = open_out(common.out, base + ".csv");
            write_trajectory_csv(os, traj, names, csv_config(cmd_name, bag));
        }
        if (common.plot && !traj.samples.empty()) {
            std::vector<double> t, sat, mean;
            for (const auto& s : traj.samples) {
                t.push_back(s.t);
                sat.push_back(s.saturated_frac);
                mean.push_back(s.mean_secondary);
            }
            maybe_plot_trajectory(common, base, t, sat, mean, cmd_name);
        }
        report_csv_written(common.out, base + ".csv", traj.samples.size(), "");
        std::cout << "counters: accepted=" << traj.counters.accepted
                  << " rerouted=" << traj.counters.rerouted
                  << " rejected=" << traj.counters.rejected << "\n";
    };

    {
        auto* sub = cmd->add_subcommand("rist", "rerouting network");
        auto bag = std::make_shared<Bindings>();
        auto rf = std::make_shared<RistFlags>();
        auto sf = std::make_shared<SimFlags>();
        auto inf = std::make_shared<InitFlags>();
        rf->add(*bag, sub);
        sf->add(*bag, sub);
        inf->add(*bag, sub, /*ode=*/false);
        common.add(*bag, sub);
        sub->callback([&common, bag, rf, sf, inf, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            RistParams params = rf->params();
            RngStream rng(common.seed);
            Trajectory traj = simulate_rist(params, make_rist_init(*inf, sf->N, params.C),
                                            sf->horizon, sf->grid_dt, rng);
            emit("simulate rist", *bag, traj, pair_state_names(params.C), "sim_rist");
        });
    }

    {
        auto* sub = cmd->add_subcommand("dar", "duplication network");
        auto bag = std::make_shared<Bindings>();
        auto df = std::make_shared<DarFlags>();
        df->C = 5;
        auto sf = std::make_shared<SimFlags>();
        auto inf = std::make_shared<InitFlags>();
        df->add(*bag, sub);
        sf->add(*bag, sub);
        inf->add(*bag, sub, /*ode=*/false);
        common.add(*bag, sub);
        sub->callback([&common, bag, df, sf, inf, emit] {
            const json cfg = common.load_file();
            bag->load(cfg);
            DarParams params(df->nu, df->a, df->C);
            RngStream rng(common.seed);
            Trajectory traj = simulate_dar(params, make_dar_init(*inf, sf->N, df->C),
                                           sf->horizon, sf->grid_dt, rng);
            emit("simulate dar", *bag, traj, level_state_names(df->C), "sim_dar");
        });
    }

    {
        auto* sub = cmd->add_subcommand("u", "two-coordinate dominating chain");
        auto bag = std::make_shared<Bindings>();
        auto rf = std::make_shared<RistFlags>();
        auto sf = std::make_shared<SimFlags>();
        auto u0 = std::make_shared<long long>(30);
        auto u1 = std::make_shared<long long>(0);
        rf->add(*bag, sub, /*with_p0=*/false);
        sf->add(*bag, sub);
        bag->bind(sub, "--u0", *u0, "initial empty places");
        bag->bind(sub, "--u1", *u1, "initial fresh jobs");
        common.add(*bag, sub);
        sub->callback([&common, bag, rf, sf, u0, u1] {
            const json cfg = common.load_file();
            bag->load(cfg);
            RistParams params = rf->params();
            RngStream rng(common.seed);
            UResult res = simulate_u(params, sf->N, *u0, *u1, sf->horizon, sf->grid_dt, rng);
            {
                auto os = open_out(common.out, "sim_u.csv");
                os << "# config=" << csv_config("simulate u", *bag).dump() << "\n";
                os << "t,u0,u1,u2\n";
                for (const auto& s : res.path)
                    os << csv_number(s.t) << "," << s.u0 << "," << s.u1 << "," << s.u2 << "\n";
                os << "# boundary_hit="
                   << (res.boundary_hit ? csv_number(*res.boundary_hit) : "none") << "\n";
            }
            if (common.plot && !res.path.empty()) {
                PlotSeries s0, s1;
                s0.label = "u0";
                s1.label = "u1";
                for (const auto& s : res.path) {
                    s0.points.emplace_back(s.t, static_cast<double>(s.u0));
                    s1.points.emplace_back(s.t, static_cast<double>(s.u1));
                }
                auto os = open_out(common.out, "sim_u.svg");
                write_svg_plot(os, {s0, s1}, "simulate u", "t", "count");
            }
            report_csv_written(common.out, "sim_u.csv", res.path.size(),
                               res.boundary_hit ? "boundary-hit" : "no-boundary");
        });
    }
}

// ---------------------------------------------------------------------------
// couple-check / saturation

void add_couple_check(CLI::App& app, Common& common) {
    auto* sub = app.add_subcommand(
        "couple-check", "pathwise domination check of the chain over the network");
    auto bag = std::make_shared<Bindings>();
    auto rf = std::make_shared<RistFlags>();
    auto fl = std::make_shared<InitFlags>();
    auto N = std::make_shared<int>(100);
    auto runs = std::make_shared<int>(100);
    auto horizon = std::make_shared<double>(5.0);
    rf->add(*bag, sub, /*with_p0=*/false);
    fl->init = "near-saturated";
    fl->add(*bag, sub, /*ode=*/false);
    bag->bind(sub, "--N", *N, "number of nodes");
    bag->bind(sub, "--runs", *runs, "independent seeds");
    bag->bind(sub, "--horizon", *horizon, "simulated time per run");
    common.add(*bag, sub);
    sub->callback([&common, bag, rf, fl, N, runs, horizon] {
        const json cfg = common.load_file();
        bag->load(cfg);
        RistParams params = rf->params();
        RistNetworkState init = make_rist_init(*fl, *N, params.C);
        const std::size_t n = static_cast<std::size_t>(std::max(*runs, 0));
        std::vector<CouplingResult> results(n);
        parallel_for(n, common.jobs, [&](std::size_t i) {
            RngStream rng(common.seed, i);
            results[i] = simulate_coupled(params, init, *horizon, rng, /*record_events=*/i == 0);
        });

        long long violations = 0, shadow = 0, boundary = 0, events = 0;
        std::vector<double> violation_times;
        for (const auto& r : results) {
            if (r.first_violation) {
                ++violations;
                violation_times.push_back(*r.first_violation);
            }
            shadow += r.shadow_service_wins;
            if (r.boundary_hit) ++boundary;
            events += r.events_total;
        }
        if (!results.empty()) {
            auto os = open_out(common.out, "couple_events.csv");
            write_coupling_csv(os, results.front(), csv_config("couple-check", *bag));
        }
        json rep{{"runs", *runs},
                 {"violations", violations},
                 {"violation_times", violation_times},
                 {"shadow_service_wins", shadow},
                 {"boundary_hits", boundary},
                 {"events_total", events}};
        emit_report("couple-check", *bag, common, cfg, std::move(rep), "couple_check.json");
        if (violations > 0 || shadow > 0) exit_code = kExitInvariant;
    });
}

void add_saturation(CLI::App& app, Common& common) {
    auto* sub = app.add_subcommand("saturation",
                                   "frequency of runs whose rerouted load stays near capacity");
    auto bag = std::make_shared<Bindings>();
    auto rf = std::make_shared<RistFlags>();
    auto N = std::make_shared<int>(500);
    auto eta = std::make_shared<double>(0.3);
    auto t0 = std::make_shared<double>(1.0);
    auto T = std::make_shared<double>(10.0);
    auto eps = std::make_shared<double>(0.5);
    auto runs = std::make_shared<int>(50);
    rf->add(*bag, sub, /*with_p0=*/false);
    bag->bind(sub, "--N", *N, "number of nodes");
    bag->bind(sub, "--eta", *eta, "initial fraction of nodes one job short");
    bag->bind(sub, "--t0", *t0, "start of the observation window");
    bag->bind(sub, "--T", *T, "length of the observation window");
    bag->bind(sub, "--eps", *eps, "allowed mean-load slack below capacity");
    bag->bind(sub, "--runs", *runs, "independent runs");
    common.add(*bag, sub);
    sub->callback([&common, bag, rf, N, eta, t0, T, eps, runs] {
        const json cfg = common.load_file();
        bag->load(cfg);
        RngStream rng(common.seed);
        const double freq =
            saturation_experiment(rf->params(), *N, *eta, *t0, *T, *eps, *runs, rng);
        emit_report("saturation", *bag, common, cfg,
                    json{{"success_frequency", freq}, {"runs", *runs}}, "saturation.json");
    });
}

// ---------------------------------------------------------------------------
// stability

void add_stability(CLI::App& app, Common& common) {
    auto* cmd = app.add_subcommand("stability", "spectral certificates and probes");
    cmd->require_subcommand(1);

    {
        auto* sub = cmd->add_subcommand("rist", "pair-model certificate at a fixed point");
        auto bag = std::make_shared<Bindings>();
        auto rf = std::make_shared<RistFlags>();
        auto R = std::make_shared<double>(-1.0);
        rf->add(*bag, sub, /*with_p0=*/false);
        bag->bind(sub, "--R", *R, "blocking mass of the fixed point (<0 = solve)");
        common.add(*bag, sub);
        sub->callback([&common, bag, rf, R] {
            const json cfg = common.load_file();
            bag->load(cfg);
            RistParams params = rf->params();
            double r = *R;
            if (r < 0.0) {
                EquilibriumReport rep =
                    rist_equilibria(params.rho1(), params.rho2(), params.C);
                if (rep.roots.empty())
                    throw std::runtime_error("stability rist: no fixed point to certify");
                if (rep.roots.size() > 1)
                    throw std::invalid_argument(
                        "stability rist: several fixed points; pass --R explicitly");
                r = rep.roots.front().r_or_s;
            }
            emit_report("stability rist", *bag, common, cfg,
                        to_json(check_rist_criterion(r, params)), "stability_rist.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("nlmm1", "single-queue certificate at a fixed point");
        auto bag = std::make_shared<Bindings>();
        auto fl = std::make_shared<DarFlags>();
        fl->nu = 1.4;
        auto S = std::make_shared<double>(-1.0);
        bag->bind(sub, "--nu", fl->nu, "base service level");
        bag->bind(sub, "--a", fl->a, "feedback amplification coefficient");
        bag->bind(sub, "--S", *S, "empty-state mass of the fixed point (<0 = solve)");
        common.add(*bag, sub);
        sub->callback([&common, bag, fl, S] {
            const json cfg = common.load_file();
            bag->load(cfg);
            double s = *S;
            if (s < 0.0) {
                EquilibriumReport rep = nlmm1_fixed_points(fl->nu, fl->a);
                if (rep.roots.empty())
                    throw std::runtime_error("stability nlmm1: no fixed point to certify");
                if (rep.roots.size() > 1)
                    throw std::invalid_argument(
                        "stability nlmm1: several fixed points; pass --S explicitly");
                s = rep.roots.front().z;
            }
            emit_report("stability nlmm1", *bag, common, cfg,
                        to_json(check_nlmm1_criterion(s, fl->nu, fl->a)),
                        "stability_nlmm1.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("interval",
                                        "load interval where the single-queue certificate holds");
        auto bag = std::make_shared<Bindings>();
        auto a = std::make_shared<double>(2.0);
        bag->bind(sub, "--a", *a, "feedback amplification coefficient");
        common.add(*bag, sub);
        sub->callback([&common, bag, a] {
            const json cfg = common.load_file();
            bag->load(cfg);
            auto [lo, hi] = nlmm1_stability_interval(*a);
            emit_report("stability interval", *bag, common, cfg,
                        json{{"lower", lo}, {"upper", hi}}, "stability_interval.json");
        });
    }

    {
        auto* sub = cmd->add_subcommand("probe",
                                        "finite-difference growth rate at an equilibrium");
        auto bag = std::make_shared<Bindings>();
        auto model = std::make_shared<std::string>("dar");
        auto fl = std::make_shared<DarFlags>();
        fl->C = 60;
        auto rho1 = std::make_shared<double>(1.0);
        auto rho2 = std::make_shared<double>(3.0);
        auto root_index = std::make_shared<int>(-1);
        auto directions = std::make_shared<int>(6);
        auto horizon = std::make_shared<double>(30.0);
        auto K = std::make_shared<int>(0);
        bag->bind(sub, "--model", *model, "flow to probe: dar, nlmm1 or rist");
        fl->add(*bag, sub);
        bag->bind(sub, "--rho1", *rho1, "fresh-job load (rist)");
        bag->bind(sub, "--rho2", *rho2, "rerouted-job load (rist)");
        bag->bind(sub, "--root", *root_index, "which root to probe (-1 = the only one)");
        bag->bind(sub, "--directions", *directions, "random tangent directions");
        bag->bind(sub, "--probe-horizon", *horizon, "propagation time per iteration");
        bag->bind(sub, "--K", *K, "truncation level for nlmm1 (0 = auto)");
        common.add(*bag, sub);
        sub->callback([&common, bag, model, fl, rho1, rho2, root_index, directions, horizon, K] {
            const json cfg = common.load_file();
            bag->load(cfg);
            RngStream rng(common.seed);

            auto pick = [&](const EquilibriumReport& rep) -> const FixedPointRoot& {
                if (*root_index >= 0) {
                    if (static_cast<std::size_t>(*root_index) >= rep.roots.size())
                        throw std::invalid_argument("probe: --root out of range, " +
                                                    std::to_string(rep.roots.size()) +
                                                    " roots found");
                    return rep.roots[static_cast<std::size_t>(*root_index)];
                }
                if (rep.roots.size() != 1)
                    throw std::invalid_argument("probe: " + std::to_string(rep.roots.size()) +
                                                " roots found; pass --root");
                return rep.roots.front();
            };

            ProbeReport probe;
            json extra;
            if (*model == "dar") {
                DarParams params(fl->nu, fl->a, fl->C);
                const EquilibriumReport roots = dar_fixed_points(fl->nu, fl->a, fl->C);
                const FixedPointRoot& root = pick(roots);
                ProbVec eq = dar_fixed_point_vector(root.z, params);
                auto rhs = [&params](std::span<const double> s, std::span<double> out) {
                    dar_flow(params, s, out);
                };
                probe = linearized_probe(rhs, eq.values(), *directions, *horizon, rng);
                extra["root"] = root.z;
            } else if (*model == "nlmm1") {
                const double a = fl->a;
                auto h = [a](double x) { return 1.0 + a * x * (1.0 - x); };
                const EquilibriumReport roots = nlmm1_fixed_points(fl->nu, fl->a);
                const FixedPointRoot& root = pick(roots);
                const int top = *K > 0 ? *K : nlmm1_default_truncation(fl->nu);
                ProbVec eq = nlmm1_pi(root.z, fl->nu, h, top);
                const double nu = fl->nu;
                auto rhs = [nu, h](std::span<const double> s, std::span<double> out) {
                    nlmm1_flow(nu, h, s, out);
                };
                probe = linearized_probe(rhs, eq.values(), *directions, *horizon, rng);
                extra["root"] = root.z;
            } else if (*model == "rist") {
                RistParams params(1.0, 1.0 / *rho1, 1.0 / *rho2, fl->C);
                const EquilibriumReport roots = rist_equilibria(*rho1, *rho2, fl->C);
                const FixedPointRoot& root = pick(roots);
                ProbVec eq = rist_pi(root.r_or_s, params);
                RistStateSpace space(params.C);
                auto rhs = [&params, &space](std::span<const double> s, std::span<double> out) {
                    if (!rist_unbounded_flow(params, space, s, 1e-12, out))
                        throw SingularFlowError(0.0);
                };
                probe = linearized_probe(rhs, eq.values(), *directions, *horizon, rng);
                extra["root"] = root.r_or_s;
            } else {
                throw std::invalid_argument("probe: unknown model '" + *model + "'");
            }
            json rep = to_json(probe);
            rep.update(extra);
            emit_report("stability probe", *bag, common, cfg, std::move(rep),
                        "stability_probe.json");
        });
    }
}

// ---------------------------------------------------------------------------
// sweep

void add_sweep(CLI::App& app, Common& common) {
    auto* sub = app.add_subcommand("sweep", "root structure along one parameter axis");
    auto bag = std::make_shared<Bindings>();
    auto model = std::make_shared<std::string>("dar");
    auto var = std::make_shared<std::string>("nu");
    auto from = std::make_shared<double>(0.90);
    auto to = std::make_shared<double>(1.02);
    auto points = std::make_shared<int>(121);
    auto fl = std::make_shared<DarFlags>();
    fl->C = 1000;
    auto rho1 = std::make_shared<double>(1.0);
    auto rho2 = std::make_shared<double>(5.0);
    bag->bind(sub, "--model", *model, "rist, rist1, dar, dar-limit or nlmm1");
    bag->bind(sub, "--var", *var, "swept parameter: nu, a, rho1 or rho2");
    bag->bind(sub, "--from", *from, "first grid value");
    bag->bind(sub, "--to", *to, "last grid value");
    bag->bind(sub, "--points", *points, "grid size");
    bag->bind(sub, "--nu", fl->nu, "fixed load (when not swept)");
    bag->bind(sub, "--a", fl->a, "fixed amplification (when not swept)");
    bag->bind(sub, "--C", fl->C, "capacity (finite models)");
    bag->bind(sub, "--rho1", *rho1, "fixed fresh-job load (when not swept)");
    bag->bind(sub, "--rho2", *rho2, "fixed rerouted-job load (when not swept)");
    common.add(*bag, sub);
    sub->callback([&common, bag, model, var, from, to, points, fl, rho1, rho2] {
        const json cfg = common.load_file();
        bag->load(cfg);
        const bool pair_model = *model == "rist" || *model == "rist1";
        const bool level_model =
            *model == "dar" || *model == "dar-limit" || *model == "nlmm1";
        if (!pair_model && !level_model)
            throw std::invalid_argument("sweep: unknown model '" + *model + "'");
        if (pair_model && *var != "rho1" && *var != "rho2")
            throw std::invalid_argument("sweep: model " + *model + " sweeps rho1 or rho2");
        if (level_model && *var != "nu" && *var != "a")
            throw std::invalid_argument("sweep: model " + *model + " sweeps nu or a");
        if (*points < 1) throw std::invalid_argument("sweep: need at least one grid point");
        if (*points > 1 && !(*to > *from))
            throw std::invalid_argument("sweep: empty range, need --to > --from");

        const std::size_t n = static_cast<std::size_t>(*points);
        auto value_at = [&](std::size_t i) {
            return n == 1 ? *from
                          : *from + (*to - *from) * static_cast<double>(i) /
                                        static_cast<double>(n - 1);
        };

        struct Row {
            EquilibriumReport rep;
            std::vector<std::string> verdicts;
        };
        std::vector<Row> rows(n);

        auto solve = [&](double v) -> EquilibriumReport {
            const double r1 = *var == "rho1" ? v : *rho1;
            const double r2 = *var == "rho2" ? v : *rho2;
            const double nu = *var == "nu" ? v : fl->nu;
            const double a = *var == "a" ? v : fl->a;
            if (*model == "rist") return rist_equilibria(r1, r2, fl->C);
            if (*model == "rist1") return rist1_equilibria(r1, r2, fl->C);
            if (*model == "dar") return dar_fixed_points(nu, a, fl->C);
            if (*model == "dar-limit") return dar_limit_fixed_points(nu, a);
            return nlmm1_fixed_points(nu, a);
        };

        auto verdict_for = [&](const EquilibriumReport& rep, double v) {
            std::vector<std::string> verdicts(rep.roots.size());
            const double nu = *var == "nu" ? v : fl->nu;
            const double a = *var == "a" ? v : fl->a;
            for (std::size_t k = 0; k < rep.roots.size(); ++k) {
                try {
                    if (*model == "rist") {
                        const double r1 = *var == "rho1" ? v : *rho1;
                        const double r2 = *var == "rho2" ? v : *rho2;
                        RistParams p(1.0, 1.0 / r1, 1.0 / r2, fl->C);
                        StabilityReport sr = check_rist_criterion(rep.roots[k].r_or_s, p);
                        verdicts[k] = sr.verdict == Verdict::Met ? "Met" : "NotMet";
                    } else if (*model == "dar-limit" || *model == "nlmm1") {
                        StabilityReport sr = check_nlmm1_criterion(rep.roots[k].z, nu, a);
                        verdicts[k] = sr.verdict == Verdict::Met ? "Met" : "NotMet";
                    }
                } catch (...) {
                    // certificate not computable here; leave the cell empty
                }
            }
            return verdicts;
        };

        parallel_for(n, common.jobs, [&](std::size_t i) {
            const double v = value_at(i);
            rows[i].rep = solve(v);
            rows[i].verdicts = verdict_for(rows[i].rep, v);
        });

        {
            auto os = open_out(common.out, "sweep.csv");
            os << "# config=" << csv_config("sweep", *bag).dump() << "\n";
            os << *var << ",n_roots,regime,singular";
            for (int k = 1; k <= 3; ++k)
                os << ",root" << k << ",hint" << k << ",verdict" << k;
            os << "\n";
            for (std::size_t i = 0; i < n; ++i) {
                const Row& row = rows[i];
                os << csv_number(value_at(i)) << "," << row.rep.roots.size() << ","
                   << row.rep.regime << "," << (row.rep.singular_saturation ? 1 : 0);
                for (std::size_t k = 0; k < 3; ++k) {
                    if (k < row.rep.roots.size())
                        os << "," << csv_number(row.rep.roots[k].r_or_s) << ","
                           << row.rep.roots[k].stable_hint << "," << row.verdicts[k];
                    else
                        os << ",,,";
                }
                os << "\n";
            }
        }

        std::size_t multi = 0;
        double window_lo = 0.0, window_hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].rep.roots.size() > 1) {
                if (multi == 0) window_lo = value_at(i);
                window_hi = value_at(i);
                ++multi;
            }
        }
        report_csv_written(common.out, "sweep.csv", n, "");
        if (multi > 0)
            std::cout << "multi-root window: [" << csv_number(window_lo) << ", "
                      << csv_number(window_hi) << "] (" << multi << " of " << n
                      << " grid points)\n";
        else
            std::cout << "multi-root window: empty\n";

        if (common.plot) {
            PlotSeries stable, unstable, other;
            stable.label = "stable";
            stable.line = false;
            unstable.label = "unstable";
            unstable.line = false;
            other.label = "unlabeled";
            other.line = false;
            for (std::size_t i = 0; i < n; ++i)
                for (const auto& root : rows[i].rep.roots) {
                    PlotSeries& dst = root.stable_hint == "stable"
                                          ? stable
                                          : (root.stable_hint == "unstable" ? unstable : other);
                    dst.points.emplace_back(value_at(i), root.r_or_s);
                }
            std::vector<PlotSeries> series;
            for (auto* s : {&stable, &unstable, &other})
                if (!s->points.empty()) series.push_back(*s);
            auto os = open_out(common.out, "sweep.svg");
            write_svg_plot(os, series, "fixed points of " + *model, *var, "root");
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field analysis and simulation of loss-network rerouting policies"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    add_equilibria(app, common);
    add_ode(app, common);
    add_simulate(app, common);
    add_couple_check(app, common);
    add_saturation(app, common);
    add_stability(app, common);
    add_sweep(app, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::runtime_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return exit_code;
}
