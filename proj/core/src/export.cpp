#include "platoonlab/export.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace platoonlab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal self-contained SVG line plot: axes, ticks, series in distinct
// colors, optional horizontal guide lines.
std::string svg_plot(const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series,
                     const std::vector<double>& guides = {}) {
  const int width = 880, height = 460;
  const int ml = 70, mr = 160, mt = 40, mb = 50;
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
    for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
  }
  for (double g : guides) { y_min = std::min(y_min, g); y_max = std::max(y_max, g); }
  if (!(x_max > x_min)) { x_min = 0; x_max = 1; }
  if (!(y_max > y_min)) { y_min -= 1; y_max += 1; }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
     << "' height='" << height << "' font-family='sans-serif' font-size='12'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='15'>"
     << title << "</text>\n";
  os << "<rect x='" << ml << "' y='" << mt << "' width='" << plot_w
     << "' height='" << plot_h << "' fill='none' stroke='black'/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    const double yv = y_min + (y_max - y_min) * i / 5.0;
    char tick[40];
    std::snprintf(tick, sizeof(tick), "%.4g", xv);
    os << "<line x1='" << px(xv) << "' y1='" << mt + plot_h << "' x2='" << px(xv)
       << "' y2='" << mt + plot_h + 5 << "' stroke='black'/>"
       << "<text x='" << px(xv) << "' y='" << mt + plot_h + 20
       << "' text-anchor='middle'>" << tick << "</text>\n";
    std::snprintf(tick, sizeof(tick), "%.4g", yv);
    os << "<line x1='" << ml - 5 << "' y1='" << py(yv) << "' x2='" << ml
       << "' y2='" << py(yv) << "' stroke='black'/>"
       << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
       << "' text-anchor='end'>" << tick << "</text>\n";
  }
  os << "<text x='" << ml + plot_w / 2 << "' y='" << height - 10
     << "' text-anchor='middle'>" << x_label << "</text>\n";
  os << "<text x='18' y='" << mt + plot_h / 2
     << "' text-anchor='middle' transform='rotate(-90 18 " << mt + plot_h / 2
     << ")'>" << y_label << "</text>\n";

  for (double g : guides) {
    os << "<line x1='" << ml << "' y1='" << py(g) << "' x2='" << ml + plot_w
       << "' y2='" << py(g) << "' stroke='#888' stroke-dasharray='6 4'/>\n";
  }

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill='none' stroke='" << colors[si % 8]
       << "' stroke-width='1.2' points='";
    const size_t stride = std::max<size_t>(1, s.x.size() / 4000);
    for (size_t i = 0; i < s.x.size(); i += stride) {
      os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    if (!s.x.empty()) os << px(s.x.back()) << "," << py(s.y.back());
    os << "'/>\n";
    os << "<text x='" << width - mr + 10 << "' y='" << mt + 16 * (si + 1)
       << "' fill='" << colors[si % 8] << "'>" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string trajectory_csv(const SimulationLog& log) {
  std::ostringstream os;
  const int vehicles =
      log.rows.empty() ? 0 : static_cast<int>(log.rows.front().states.size());
  const int n_x = log.rows.empty() ? 0 : static_cast<int>(log.rows.front().errors.size());
  const int n_xi = n_x + 4;

  os << "t,v_ref,phase";
  for (int i = 0; i < vehicles; ++i)
    os << ",p_" << i << ",v_" << i << ",a_" << i;
  for (int i = 0; i < n_x; ++i) os << ",x_" << i;
  os << ",u_leader,u_rear,u_hat";
  for (int i = 0; i < n_xi; ++i) os << ",xi_hat_" << i;
  os << ",target_u_bar,target_h_rear,mpc_status,mpc_fallback,target_fallback,"
        "mpc_seconds\n";

  for (const auto& row : log.rows) {
    os << fmt(row.t) << "," << fmt(row.v_ref) << "," << row.phase;
    for (const auto& st : row.states)
      os << "," << fmt(st.p) << "," << fmt(st.v) << "," << fmt(st.a);
    for (int i = 0; i < n_x; ++i) os << "," << fmt(row.errors(i));
    os << "," << fmt(row.u_leader) << "," << fmt(row.u_rear) << ","
       << fmt(row.u_hat);
    for (int i = 0; i < n_xi; ++i)
      os << "," << (row.xi_hat.size() == n_xi ? fmt(row.xi_hat(i)) : "0");
    const double target_h =
        row.target_x_bar.size() >= 3 ? row.target_x_bar(n_x - 3) : 0.0;
    os << "," << fmt(row.target_u_bar) << "," << fmt(target_h) << ","
       << row.mpc_status << "," << (row.mpc_fallback ? 1 : 0) << ","
       << (row.target_fallback ? 1 : 0) << "," << fmt(row.mpc_seconds) << "\n";
  }
  return os.str();
}

std::string metrics_json(const Metrics& metrics, const SimulationLog& log) {
  nlohmann::json j;
  auto window = [](const WindowMetrics& w) {
    nlohmann::json jw;
    jw["t_begin"] = w.t_begin;
    jw["t_end"] = w.t_end;
    jw["peak_v_tilde"] = w.peak_v_tilde;
    jw["rms_rear_spacing_error"] = w.rms_rear_spacing_error;
    jw["max_rear_spacing_error"] = w.max_rear_spacing_error;
    jw["input_violations"] = w.input_violations;
    if (w.head_to_tail_defined) {
      jw["head_to_tail_ratio"] = w.head_to_tail_ratio;
      jw["hv_chain_ratio"] = w.hv_chain_ratio;
    } else {
      jw["head_to_tail_ratio"] = nullptr;
      jw["head_to_tail_undefined"] = true;
    }
    jw["mean_mpc_seconds"] = w.mean_mpc_seconds;
    jw["max_mpc_seconds"] = w.max_mpc_seconds;
    return jw;
  };
  j["post_synthesis"] = window(metrics.post_synthesis);
  j["cycle"] = window(metrics.cycle);
  j["collision"] = metrics.collision;
  j["tripwire_count"] = metrics.tripwire_count;
  j["mpc_infeasible_count"] = log.mpc_infeasible_count;
  j["target_fallback_count"] = log.target_fallback_count;
  j["controller"] = log.controller == ControllerKind::ACC ? "acc" : "dual";
  j["scenario_hash"] = log.scenario_hash;
  j["abort_reason"] = log.abort_reason;
  if (log.synthesis.has_value()) {
    j["synthesis"] = {
        {"delta", log.synthesis->bound.delta},
        {"gamma", log.synthesis->gain.gamma},
        {"epsilon", log.synthesis->gain.epsilon},
        {"epsilon_o", log.synthesis->observer.epsilon_o},
        {"observer_rho", log.synthesis->observer.error_spectral_radius},
        {"seconds", log.synthesis->synthesis_seconds},
        {"detectable", log.synthesis->model.detectable},
    };
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> export_results(const SimulationLog& log,
                                        const Metrics& metrics,
                                        const std::string& out_dir,
                                        const ExportFormats& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<std::string> manifest;
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
    manifest.push_back(p.string());
  };

  if (formats.csv) {
    write("trajectory.csv", trajectory_csv(log));
    write("metrics.json", metrics_json(metrics, log));
  }
  if (formats.svg && !log.rows.empty()) {
    const int vehicles = static_cast<int>(log.rows.front().states.size());
    const int n_x = static_cast<int>(log.rows.front().errors.size());
    std::vector<double> t;
    t.reserve(log.rows.size());
    for (const auto& r : log.rows) t.push_back(r.t);

    Series ref{"v_ref", t, {}};
    for (const auto& r : log.rows) ref.y.push_back(r.v_ref);
    write("reference_velocity.svg",
          svg_plot("Reference velocity", "t [s]", "v [m/s]", {ref}));

    Series u{"u_rear", t, {}};
    for (const auto& r : log.rows) u.y.push_back(r.u_rear);
    write("rear_command.svg",
          svg_plot("Rear AV acceleration command", "t [s]", "u [m/s^2]", {u},
                   {log.u_max, -log.u_max}));

    Series vt{"vtilde_rear", t, {}};
    for (const auto& r : log.rows)
      vt.y.push_back(r.states.back().v - r.v_ref);
    write("rear_velocity_deviation.svg",
          svg_plot("Rear AV velocity deviation", "t [s]", "v - v_ref [m/s]",
                   {vt}, {0.0}));

    Series gap{"gap", t, {}};
    for (const auto& r : log.rows)
      gap.y.push_back(r.states[vehicles - 2].p - r.states[vehicles - 1].p);
    // d_safe guide reconstructed from the rear error definition.
    const double d_safe =
        gap.y.front() - log.rows.front().errors(n_x - 3);
    write("rear_gap.svg", svg_plot("Spacing ahead of the rear AV", "t [s]",
                                   "gap [m]", {gap}, {d_safe}));

    std::vector<Series> devs;
    for (int i = 0; i < vehicles; ++i) {
      Series s{"vehicle " + std::to_string(i), t, {}};
      for (const auto& r : log.rows) s.y.push_back(r.states[i].v - r.v_ref);
      devs.push_back(std::move(s));
    }
    write("velocity_deviations.svg",
          svg_plot("Velocity deviations from the reference", "t [s]",
                   "v - v_ref [m/s]", devs, {0.0}));
  }
  return manifest;
}

}  // namespace platoonlab
