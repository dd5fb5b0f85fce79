#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddshaper/types.hpp"

namespace ddshaper {

enum class Figure {
  Fig2Square,
  Fig2Shaped,
  Fig3Scaling,
  Fig3Zoom,
  Fig4TwoTone,
  Fig4C13,
  FigS1Shapes,
};

const char* to_string(Figure figure);
Figure figure_from_string(const std::string& name);

// Binds a figure to a runnable configuration. Override keys must name a
// known parameter of that figure; unknown keys are rejected.
struct ExperimentSpec {
  Figure kind = Figure::Fig2Shaped;
  std::map<std::string, double> overrides;
};

struct Resonance {
  double tau_min = 0.0;    // parabolic-interpolated minimum position [s]
  double linewidth = 0.0;  // FWHM of the (1 - p) dip [s]
  double p_min = 1.0;
};

// Deepest interior minimum of the scan. Throws if there is none.
Resonance find_resonance(const ScanResult& scan);

// All interior local minima with at least 20% of the deepest dip's depth,
// ordered by position.
std::vector<Resonance> find_local_minima(const ScanResult& scan);

struct ExperimentResult {
  std::vector<ScanResult> scans;
  json summary;
  json params;
};

// Runs the figure's experiment with defaults + overrides. When out_dir is
// non-empty, writes scan.csv (per-shape files for comparison runs),
// summary.json and params.json into it atomically.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::filesystem::path& out_dir = {},
                                int threads = 0);

}  // namespace ddshaper
