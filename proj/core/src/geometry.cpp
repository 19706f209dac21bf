#include "slitscan/geometry.hpp"

#include "slitscan/error.hpp"

#include <cmath>

namespace slitscan {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError(std::string("geometry: ") + name + " must be positive and finite");
}

} // namespace

void Geometry::validate() const {
  require_positive(wavelength_m, "wavelength_m");
  require_positive(slit_width_m, "slit_width_m");
  require_positive(slit_sep_m, "slit_sep_m");
  require_positive(l_slits_lens_m, "l_slits_lens_m");
  require_positive(l_lens_det_m, "l_lens_det_m");
  require_positive(d_direct_m, "d_direct_m");
  require_positive(focal_m, "focal_m");
  if (!(slit_sep_m > slit_width_m))
    throw ConfigError("geometry: slit_sep_m must exceed slit_width_m (slits overlap)");
}

double lens_equation_defect(const Geometry& geom) {
  return std::abs(1.0 / geom.l_slits_lens_m + 1.0 / geom.l_lens_det_m - 1.0 / geom.focal_m) *
         geom.focal_m;
}

double magnification(const Geometry& geom) { return geom.l_lens_det_m / geom.l_slits_lens_m; }

double fringe_scale(const Geometry& geom) {
  return geom.wavelength_m * geom.l_slits_lens_m / geom.slit_sep_m;
}

double fresnel_number(const Geometry& geom, double distance_m) {
  return geom.slit_sep_m * geom.slit_sep_m / (geom.wavelength_m * std::abs(distance_m));
}

ConstraintReport constraint_report(const Geometry& geom, double aperture_width_m) {
  if (!(aperture_width_m > 0.0))
    throw ConfigError("constraint_report: aperture width must be positive");
  ConstraintReport r;
  r.aperture_over_fringe = aperture_width_m / fringe_scale(geom);
  r.aperture_times_angle =
      aperture_width_m * geom.slit_sep_m / (geom.wavelength_m * geom.l_slits_lens_m);
  if (r.aperture_over_fringe < 1.0 / 3.0)
    r.verdict = "resolves-fringes";
  else if (r.aperture_over_fringe > 3.0)
    r.verdict = "separates-slits";
  else
    r.verdict = "conflict zone";
  return r;
}

} // namespace slitscan
