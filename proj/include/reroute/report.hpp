#pragma once

// Serialization of solver and simulator outputs: JSON reports, CSV
// trajectories with the effective configuration echoed in a comment line,
// and static SVG plots. Numbers are written with 17 significant digits so
// repeated runs produce byte-identical files.

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reroute/equilibria.hpp"
#include "reroute/mfode.hpp"
#include "reroute/nsim.hpp"
#include "reroute/stability.hpp"

namespace reroute {

[[nodiscard]] std::string model_name(FixedPointModel model);

[[nodiscard]] nlohmann::json to_json(const EquilibriumReport& rep);
[[nodiscard]] nlohmann::json to_json(const StabilityReport& rep);
[[nodiscard]] nlohmann::json to_json(const ProbeReport& rep);

/// Fixed-width scientific rendering of a double (17 significant digits).
[[nodiscard]] std::string csv_number(double v);

/// Column names for the pair simplex in enumeration order: p_x_y.
[[nodiscard]] std::vector<std::string> pair_state_names(int C);
/// Column names p_0..p_top for level-indexed distributions.
[[nodiscard]] std::vector<std::string> level_state_names(int top);

/// CSV rows t,<state columns>,saturated_frac,mean_y,empty_places preceded by
/// a `# config=` echo line.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& state_names,
                          const nlohmann::json& config);

/// Same schema as write_trajectory_csv; the summary columns are the matching
/// expectations under the flow state, and a final `# status=` line reports
/// how integration ended.
void write_ode_csv(std::ostream& os, const OdeResult& res, ProbVec::Space space, int capacity,
                   const nlohmann::json& config);

/// CSV rows t,u0,u1,u2,z0,z1,z2,ok for a coupled run.
void write_coupling_csv(std::ostream& os, const CouplingResult& res,
                        const nlohmann::json& config);

struct PlotSeries {
    std::vector<std::pair<double, double>> points;
    std::string label;
    bool line = true;  // polyline when set, markers otherwise
};

/// Small static SVG scatter/line plot with axes and a legend.
void write_svg_plot(std::ostream& os, const std::vector<PlotSeries>& series,
                    const std::string& title, const std::string& xlabel,
                    const std::string& ylabel);

}  // namespace reroute
