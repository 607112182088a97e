#pragma once

#include "platoonlab/experiment.hpp"

#include <string>
#include <vector>

namespace platoonlab {

struct ExportFormats {
  bool csv = true;
  bool svg = true;
};

/// Writes trajectory.csv, metrics.json and the SVG line plots into out_dir.
/// Returns the list of files written. I/O failures surface with full paths.
std::vector<std::string> export_results(const SimulationLog& log,
                                        const Metrics& metrics,
                                        const std::string& out_dir,
                                        const ExportFormats& formats = {});

/// Serializes the full per-step log (17 significant digits; byte-stable
/// across identical runs).
std::string trajectory_csv(const SimulationLog& log);

std::string metrics_json(const Metrics& metrics, const SimulationLog& log);

}  // namespace platoonlab
