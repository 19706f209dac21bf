#pragma once

#include "slitscan/field.hpp"
#include "slitscan/geometry.hpp"
#include "slitscan/instrument.hpp"
#include "slitscan/metrics.hpp"
#include "slitscan/reconstruct.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slitscan {

/// Shortest text that reads back to the same double (17 significant digits
/// at most).
std::string format_number(double v);

/// Geometry as a JSON object with keys wavelength_m, slit_width_m,
/// slit_sep_m, l_slits_lens_m, l_lens_det_m, d_direct_m, focal_m.
std::string geometry_to_json(const Geometry& geom);
/// Every key is required; a missing or non-numeric key raises ConfigError
/// naming it.
Geometry geometry_from_json(std::string_view json_text);

/// Two-column CSV `position_m,value`; fields are written as |a|^2.
void write_profile_csv(const std::filesystem::path& path, const IntensityProfile& profile);
void write_field_csv(const std::filesystem::path& path, const SampledField& field);
/// Reads a `position_m,value` CSV. Positions must be uniformly spaced.
IntensityProfile read_profile_csv(const std::filesystem::path& path);

/// Flux columns of a scan without the detector profiles.
struct FluxTable {
  std::vector<std::size_t> steps;
  std::vector<double> s_m;
  std::vector<double> total;
  std::vector<double> left;
  std::vector<double> right;

  std::size_t size() const { return steps.size(); }
  /// Same ordering as flux_by_aperture_offset.
  std::vector<double> by_aperture_offset(Signal signal) const;
};

FluxTable flux_table(const ScanSeries& series);

/// Header `step,s_mm,F,left,right`, one row per step. With `profile_dir`
/// each detector profile goes to profile_dir/step_NNN.csv.
void write_scan_csv(const std::filesystem::path& path, const ScanSeries& series,
                    const std::optional<std::filesystem::path>& profile_dir = std::nullopt);
/// Raises DataError naming the file and line on malformed rows.
FluxTable read_scan_csv(const std::filesystem::path& path);

/// `position_mm,P_hat` CSV plus a JSON sidecar with residual_norm,
/// effective_rank, cutoff and smoothing_rms.
void write_reconstruction(const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path,
                          const ReconstructionResult& result);
/// Reads the CSV written above as a profile in metres.
IntensityProfile read_reconstruction_csv(const std::filesystem::path& path);

/// JSON object with keys V, D, duality, violated, V_method, D_method.
std::string duality_report_json(const DualityReport& report);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

} // namespace slitscan
