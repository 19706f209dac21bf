#pragma once

#include "slitscan/field.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace slitscan {

enum class PeakSelector {
  central,      ///< central peak against its two neighbouring troughs
  second_third, ///< peaks 2 and 3 counted from the centre and the troughs between them
};

std::string_view to_string(PeakSelector s);
PeakSelector parse_peak_selector(std::string_view s);

struct Peak {
  std::size_t index;
  double value;
  double prominence;
};

/// Local maxima whose topographic prominence is at least
/// `min_prominence_fraction` of the profile maximum. Flat tops report their
/// middle sample. Sorted by index.
std::vector<Peak> find_peaks(std::span<const double> values, double min_prominence_fraction);

struct VisibilityEstimate {
  double value;
  double i_max;
  double i_min;
  std::string method;
};

/// Fringe contrast (I_max - I_min) / (I_max + I_min). I_max is the mean of the
/// selected peaks, I_min the mean of the minima between them. The central
/// peak is the highest one found.
///
/// Throws NumericalError when the profile lacks the required extrema.
VisibilityEstimate visibility(const IntensityProfile& profile, PeakSelector selector,
                              double min_prominence_fraction = 0.02);

/// D = 2 (p - 1/2). p must lie in [1/2, 1].
double distinguishability(double p_correct);

struct DualityReport {
  double visibility;
  double distinguishability;
  double duality; ///< V^2 + D^2
  bool violated;  ///< duality > 1
  std::string v_method;
  std::string d_method;
};

DualityReport duality_check(double visibility, double distinguishability,
                            std::string v_method = {}, std::string d_method = {});

struct MatchOptions {
  double window_half_width_m = 5e-3;
  double window_center_m = 0.0;
  /// Shifts are searched over +-search_half_width_m.
  double search_half_width_m = 5e-3;
};

struct ProfileMatch {
  double shift_m;
  double v_scale;
  /// RMS of (reconstructed - v_scale * shifted reference) over the window,
  /// divided by the reconstructed central peak height.
  double rms_residual;
  std::size_t samples;
};

/// Aligns a reference profile with a reconstruction. Reference coordinates
/// are multiplied by `h_scale` first; the vertical scale matches the central
/// peak heights; the horizontal shift (applied to the reference) is the only
/// free parameter and minimises the RMS residual over the central window.
ProfileMatch match_profiles(const IntensityProfile& reconstructed,
                            const IntensityProfile& reference, double h_scale,
                            const MatchOptions& options = {});

/// Pupil-plane length per detector pixel for a directly imaged fringe
/// pattern: pixel pitch * L_S / D.
double pixel_to_pupil_scale(double pixel_pitch_m, double l_slits_lens_m, double d_direct_m);

/// Width of a curve at half its maximum, using the outermost crossings with
/// linear interpolation. Throws NumericalError if the curve never falls to
/// half maximum on either side.
double half_max_width(const IntensityProfile& curve);

} // namespace slitscan
