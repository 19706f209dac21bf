#pragma once

#include <string>

namespace slitscan {

/// Physical layout of the bench. Defaults are the desk-scale setup: 650 nm
/// light, 89 um slits 248 um apart, lens of 300 mm focal length 58 cm from the
/// slits and 63 cm from the camera, direct fringe image 25 cm from the slits.
struct Geometry {
  double wavelength_m = 650e-9;
  double slit_width_m = 89e-6;
  double slit_sep_m = 248e-6;       ///< centre to centre
  double l_slits_lens_m = 0.58;
  double l_lens_det_m = 0.63;
  double d_direct_m = 0.25;
  double focal_m = 0.300;

  /// Throws ConfigError unless all lengths are positive and the slits do not
  /// overlap.
  void validate() const;
};

/// |1/L_S + 1/L_C - 1/f| * f, zero for a perfectly focused camera.
double lens_equation_defect(const Geometry& geom);

/// L_C / L_S; slit images are inverted and scaled by this factor.
double magnification(const Geometry& geom);

/// Characteristic fringe period at the pupil, lambda * L_S / d.
double fringe_scale(const Geometry& geom);

/// Slit-pair Fresnel number d^2 / (lambda L) at distance L.
double fresnel_number(const Geometry& geom, double distance_m);

struct ConstraintReport {
  double aperture_over_fringe;      ///< a / W
  double aperture_times_angle;      ///< a d / (lambda L_S)
  std::string verdict;              ///< resolves-fringes | separates-slits | conflict zone
};

/// Compares an aperture width with the fringe scale. Below W/3 the aperture
/// resolves the fringes, above 3W it separates the slit images, anything in
/// between is a conflict.
ConstraintReport constraint_report(const Geometry& geom, double aperture_width_m);

} // namespace slitscan
