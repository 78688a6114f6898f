#include "reroute/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace reroute {
namespace {

using nlohmann::json;

json root_to_json(const FixedPointRoot& r) {
    json j{{"z", r.z},
           {"log_z", r.log_z},
           {"R_or_S", r.r_or_s},
           {"residual", r.residual},
           {"stable_hint", r.stable_hint},
           {"bracket", {r.bracket_lo, r.bracket_hi}}};
    if (!r.branch.empty()) j["branch"] = r.branch;
    return j;
}

void write_summary_header(std::ostream& os, const std::vector<std::string>& state_names,
                          const json& config) {
    os << "# config=" << config.dump() << "\n";
    os << "t";
    for (const auto& n : state_names) os << "," << n;
    os << ",saturated_frac,mean_y,empty_places\n";
}

}  // namespace

std::string model_name(FixedPointModel model) {
    switch (model) {
        case FixedPointModel::RistUnbounded: return "RistUnbounded";
        case FixedPointModel::RistOneRetrial: return "RistOneRetrial";
        case FixedPointModel::DarFinite: return "DarFinite";
        case FixedPointModel::DarLimit: return "DarLimit";
        case FixedPointModel::NlMm1: return "NlMm1";
    }
    return "unknown";
}

json to_json(const EquilibriumReport& rep) {
    json roots = json::array();
    for (const auto& r : rep.roots) roots.push_back(root_to_json(r));
    json j{{"model", model_name(rep.model)},
           {"regime", rep.regime},
           {"roots", std::move(roots)},
           {"singular_saturation", rep.singular_saturation}};
    if (rep.nu_a) j["nu_a"] = *rep.nu_a;
    if (rep.nu_a_printed) j["nu_a_printed"] = *rep.nu_a_printed;
    if (rep.x0) j["x0"] = *rep.x0;
    return j;
}

json to_json(const StabilityReport& rep) {
    return json{{"model", rep.model},
                {"kappa", rep.kappa},
                {"threshold", rep.threshold},
                {"margin", rep.margin},
                {"verdict", rep.verdict == Verdict::Met ? "Met" : "NotMet"},
                {"detailed_balance_residual", rep.detailed_balance_residual},
                {"method", rep.method}};
}

json to_json(const ProbeReport& rep) {
    return json{{"growth_rate", rep.growth_rate}, {"label", rep.label}};
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> pair_state_names(int C) {
    RistStateSpace space(C);
    std::vector<std::string> names;
    names.reserve(space.size());
    for (const auto& [x, y] : space.states())
        names.push_back("p_" + std::to_string(x) + "_" + std::to_string(y));
    return names;
}

std::vector<std::string> level_state_names(int top) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(top) + 1);
    for (int k = 0; k <= top; ++k) names.push_back("p_" + std::to_string(k));
    return names;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& state_names, const json& config) {
    write_summary_header(os, state_names, config);
    for (const auto& s : traj.samples) {
        os << csv_number(s.t);
        for (double v : s.dist) os << "," << csv_number(v);
        os << "," << csv_number(s.saturated_frac) << "," << csv_number(s.mean_secondary)
           << "," << csv_number(s.empty_places) << "\n";
    }
}

void write_ode_csv(std::ostream& os, const OdeResult& res, ProbVec::Space space, int capacity,
                   const json& config) {
    std::vector<std::string> names;
    RistStateSpace pair_space(space == ProbVec::Space::RistPairs ? capacity : 1);
    if (space == ProbVec::Space::RistPairs) {
        names = pair_state_names(capacity);
    } else if (!res.states.empty()) {
        names = level_state_names(static_cast<int>(res.states.front().size()) - 1);
    }
    write_summary_header(os, names, config);
    for (std::size_t row = 0; row < res.times.size(); ++row) {
        const auto& s = res.states[row];
        double saturated = 0.0, mean = 0.0, empty = 0.0;
        if (space == ProbVec::Space::RistPairs) {
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto [x, y] = pair_space.states()[i];
                if (x + y == capacity) saturated += s[i];
                mean += y * s[i];
                empty += (capacity - x - y) * s[i];
            }
        } else if (space == ProbVec::Space::DarOccupancy) {
            saturated = s.back();
            for (std::size_t k = 0; k < s.size(); ++k) {
                mean += static_cast<double>(k) * s[k];
                empty += static_cast<double>(s.size() - 1 - k) * s[k];
            }
        } else {
            saturated = s.front();
            for (std::size_t k = 0; k < s.size(); ++k) mean += static_cast<double>(k) * s[k];
            empty = mean;
        }
        os << csv_number(res.times[row]);
        for (double v : s) os << "," << csv_number(v);
        os << "," << csv_number(saturated) << "," << csv_number(mean) << ","
           << csv_number(empty) << "\n";
    }
    os << "# status=";
    switch (res.status) {
        case OdeStatus::ReachedHorizon: os << "ReachedHorizon"; break;
        case OdeStatus::SingularityAt:
            os << "SingularityAt t=" << csv_number(res.stop_time);
            break;
        case OdeStatus::StepUnderflow:
            os << "StepUnderflow t=" << csv_number(res.stop_time);
            break;
    }
    os << "\n";
}

void write_coupling_csv(std::ostream& os, const CouplingResult& res, const json& config) {
    os << "# config=" << config.dump() << "\n";
    os << "t,u0,u1,u2,z0,z1,z2,ok\n";
    for (const auto& e : res.events)
        os << csv_number(e.t) << "," << e.u0 << "," << e.u1 << "," << e.u2 << "," << e.z0
           << "," << e.z1 << "," << e.z2 << "," << (e.ok ? 1 : 0) << "\n";
}

void write_svg_plot(std::ostream& os, const std::vector<PlotSeries>& series,
                    const std::string& title, const std::string& xlabel,
                    const std::string& ylabel) {
    const double W = 800, H = 560, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (const auto& [px, py] : s.points) {
            xmin = std::min(xmin, px);
            xmax = std::max(xmax, px);
            ymin = std::min(ymin, py);
            ymax = std::max(ymax, py);
        }
    if (!(xmin < xmax)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymin < ymax)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.03 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;
    const auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto sy = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
       << H - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    char buf[64];
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        std::snprintf(buf, sizeof buf, "%.4g", fx);
        os << "<line x1=\"" << sx(fx) << "\" y1=\"" << H - mb << "\" x2=\"" << sx(fx)
           << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>"
           << "<text x=\"" << sx(fx) << "\" y=\"" << H - mb + 20
           << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.4g", fy);
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\""
           << sy(fy) << "\" stroke=\"black\"/>"
           << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
       << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % 6];
        if (s.line && s.points.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [px, py] : s.points) os << sx(px) << "," << sy(py) << " ";
            os << "\"/>\n";
        } else {
            for (const auto& [px, py] : s.points)
                os << "<circle cx=\"" << sx(px) << "\" cy=\"" << sy(py)
                   << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        if (!s.label.empty()) {
            const double ly = mt + 16 + 18 * static_cast<double>(k);
            os << "<line x1=\"" << W - mr - 130 << "\" y1=\"" << ly << "\" x2=\""
               << W - mr - 105 << "\" y2=\"" << ly << "\" stroke=\"" << color
               << "\" stroke-width=\"2\"/>"
               << "<text x=\"" << W - mr - 100 << "\" y=\"" << ly + 4
               << "\" font-size=\"12\">" << s.label << "</text>\n";
        }
    }
    os << "</svg>\n";
}

}  // namespace reroute
