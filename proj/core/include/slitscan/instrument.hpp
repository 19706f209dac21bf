#pragma once

#include "slitscan/field.hpp"
#include "slitscan/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slitscan {

/// Which edge of the aperture stop stays put when its width changes.
enum class Opening { rightward, leftward, centered };

/// How the detector is split into left and right signals.
enum class MidlineMode {
  detector_center, ///< fixed at the centre of the pixel row
  centroid,        ///< per step, midway between the flux centroids of the two halves
};

std::string_view to_string(Opening o);
std::string_view to_string(MidlineMode m);
Opening parse_opening(std::string_view s);
MidlineMode parse_midline(std::string_view s);

struct ScanConfig {
  double aperture_width_m = 4e-3;
  double step_m = 0.1e-3;
  std::size_t n_steps = 301;
  /// Slit position of the first step; the default scan is centred on zero.
  double start_m = -15e-3;
  /// Camera travel per unit slit travel, in the opposite direction.
  double stage_ratio = 1.07;
  double exposure_s = 1.0;
  std::size_t frames_per_step = 4;
  Opening opening = Opening::rightward;
  /// Distance from the aperture reference point to its fixed edge.
  double reference_half_width_m = 2e-3;

  void validate() const;
  double slit_position(std::size_t k) const { return start_m + static_cast<double>(k) * step_m; }
};

struct DetectorConfig {
  double pixel_pitch_m = 13e-6;
  std::size_t n_pixels = 1024;
  double readout_noise_e = 6.0;
  /// Photoelectrons per simulated intensity unit per second of exposure.
  double gain = 1e10;
  double full_well_e = 1e5;
  bool noise_enabled = false;
  std::uint64_t rng_seed = 1;
  MidlineMode midline = MidlineMode::centroid;

  void validate() const;
};

/// One scan step. total_flux is left_signal + right_signal by construction.
struct ScanStepRecord {
  std::size_t step_index;
  double slit_position_m;
  IntensityProfile detector_profile;
  double midline_px;
  double total_flux;
  double left_signal;
  double right_signal;
};

struct ScanSeries {
  ScanConfig config;
  std::vector<ScanStepRecord> records;
};

/// Multiplies the field by the aperture indicator. `center_offset_m` is the
/// aperture reference point; the transmitted interval is
///   rightward: [c - h, c - h + a)   (fixed left edge)
///   leftward:  [c + h - a, c + h)   (fixed right edge)
///   centered:  [c - a/2, c + a/2)
/// with h = reference_half_width_m. A sample whose cell is cut by an edge is
/// scaled by the square root of its open fraction so transmitted power adds
/// up exactly across adjacent apertures. An aperture outside the grid yields
/// an all-zero field.
SampledField apply_aperture(const SampledField& pupil_field, double center_offset_m,
                            double aperture_width_m, Opening opening,
                            double reference_half_width_m = 2e-3);

/// Interval [lo, hi) transmitted by `apply_aperture`.
std::pair<double, double> aperture_interval(double center_offset_m, double aperture_width_m,
                                            Opening opening, double reference_half_width_m);

/// Per-step inputs of the detector model. With noise enabled each frame gets
/// Poisson shot noise plus Gaussian readout noise from an RNG seeded with
/// (detector.rng_seed, stream), and frames are averaged.
struct Exposure {
  double seconds = 1.0;
  std::size_t frames = 1;
  std::uint64_t stream = 0;
};

/// Images the masked pupil through the thin lens onto the pixel row. The
/// lens phase exp(-i pi u^2 / (lambda f)) is applied at the pupil, the field
/// is propagated over L_C, and |field|^2 is integrated over each pixel. The
/// pixel row is centred on `detector_center_offset_m`. Values are
/// photoelectrons: intensity * gain * exposure.
///
/// A defocused camera (lens_equation_defect > 5%) is allowed; callers that
/// care check the defect themselves.
IntensityProfile image_slits(const SampledField& masked_pupil, const Geometry& geom,
                             const DetectorConfig& detector, double detector_center_offset_m,
                             const Exposure& exposure = {});

struct SignalSplit {
  double left = 0.0;
  double right = 0.0;
};

/// Pixel i (centre at coordinate i) goes left when i < midline_px, right
/// otherwise.
SignalSplit split_signals(const IntensityProfile& profile, double midline_px);

/// Midline of one profile under the given mode, in pixel coordinates.
double locate_midline(const IntensityProfile& profile, MidlineMode mode);

/// Runs a full scan. The source field is propagated to the pupil once; at
/// step k the slits sit at s_k = start + k * step, i.e. the fixed aperture
/// samples the pupil pattern at offset -s_k, and the camera sits at
/// -stage_ratio * s_k. Errors raised by a step are rethrown with its index.
ScanSeries run_scan(const SampledField& source_field, const Geometry& geom, const ScanConfig& scan,
                    const DetectorConfig& detector);

/// Same scan from a pupil field that has already been propagated.
ScanSeries run_scan_from_pupil(const SampledField& pupil_field, const Geometry& geom,
                               const ScanConfig& scan, const DetectorConfig& detector);

/// Exposure (s) that puts the brightest noiseless pixel of the step nearest
/// s = 0 at 70% of the full well.
double auto_exposure(const SampledField& pupil_field, const Geometry& geom, const ScanConfig& scan,
                     const DetectorConfig& detector);

struct AssignmentStats {
  double contamination_fraction = 0.0;
  double p_correct = 0.0;
  double distinguishability = 0.0;
};

/// Bounds wrong-slit assignment by the flux lying more than `guard_px` pixels
/// beyond each step's midline, summed over the scan and divided by the total
/// flux.
AssignmentStats assignment_probability(const ScanSeries& series, std::size_t guard_px);

enum class Signal { total, left, right };
std::string_view to_string(Signal s);
Signal parse_signal(std::string_view s);

/// Flux vector ordered by increasing aperture offset (-s), which is the row
/// order of the aperture matrices, i.e. reversed step order.
std::vector<double> flux_by_aperture_offset(const ScanSeries& series, Signal signal);

} // namespace slitscan
