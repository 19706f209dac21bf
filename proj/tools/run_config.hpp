#pragma once

#include <slitscan/field.hpp>
#include <slitscan/geometry.hpp>
#include <slitscan/instrument.hpp>
#include <slitscan/metrics.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slitscan::cli {

struct SourceSettings {
  double illumination_tilt = 0.2;
  GridSpec grid;
};

struct ScanEntry {
  ScanConfig scan;
  bool auto_exposure = true;
};

struct ReconstructionSettings {
  double cutoff = 1e-10;
  double smoothing_rms_m = 0.15e-3;
  double window_m = 5e-3;
  bool clamp_nonnegative = false;
};

struct MetricsSettings {
  PeakSelector peak_selector = PeakSelector::second_third;
  std::size_t guard_px = 20;
  std::optional<double> h_scale; ///< defaults to L_S / D
  double prominence = 0.02;
};

struct RunConfig {
  Geometry geometry;
  SourceSettings source;
  std::vector<ScanEntry> scans;
  DetectorConfig detector;
  ReconstructionSettings reconstruction;
  MetricsSettings metrics;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  double h_scale() const;
  /// Detector settings for scan `index`: noise streams are seeded with
  /// seed + index.
  DetectorConfig detector_for_scan(std::size_t index) const;
};

/// Defaults: the desk-scale bench with 4 mm and 5 mm scans and noise on.
RunConfig default_run_config();

/// Parses a JSON run configuration. The geometry block is required; every
/// other block falls back to the defaults. Unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text);

/// Effective configuration as canonical JSON (sorted keys, all defaults
/// filled in); hashed into the run manifest.
std::string canonical_json(const RunConfig& config);

/// Tag used in file names, e.g. "4mm" or "4.5mm".
std::string width_tag(double aperture_width_m);

} // namespace slitscan::cli
