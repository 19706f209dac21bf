#pragma once

#include "slitscan/field.hpp"
#include "slitscan/geometry.hpp"

#include <cstddef>
#include <optional>

namespace slitscan {

/// Amplitude transmitted by the double-slit mask under plane-wave
/// illumination. The slit centred at +d/2 carries (1 + tilt/2), the one at
/// -d/2 carries (1 - tilt/2). Samples straddling a slit edge take the
/// fraction of their cell that is open.
///
/// Requires at least 16 samples per slit width, both slits inside the grid
/// and |tilt| <= 2.
SampledField double_slit_field(const Geometry& geom, const GridSpec& grid,
                               double illumination_tilt = 0.0);

struct FresnelOptions {
  /// Length of the zero-padded transform; 0 keeps the input length. Larger
  /// values give a proportionally finer output pitch over the same window.
  std::size_t output_samples = 0;
  /// Coordinate the output grid is centred on (sample output_samples/2).
  /// Defaults to the centre of the input grid.
  std::optional<double> output_center;
};

/// Fraction of output power tolerated in the outer eighth of the output
/// window on either side before a propagation is rejected as aliased.
inline constexpr double kMaxEdgePowerFraction = 0.01;

/// Fresnel diffraction integral over `distance_m`, evaluated with a single
/// chirped FFT (direct-integral method). The output pitch is
/// lambda |z| / (M * input pitch), so the output window spans lambda |z| / pitch.
///
/// The discrete sum is a faithful quadrature only if the integrand, input
/// field times exp(i pi x^2 / (lambda z)), is band limited on the input grid.
/// Energy that aliases past the band limit wraps into the edges of the output
/// window, so the propagation is rejected (ConfigError, with the sample count
/// that would sample the input quadratic phase at Nyquist) when more than
/// kMaxEdgePowerFraction of the output power lands in the outer eighths.
///
/// |H| = 1 per frequency, so power is conserved exactly; z followed by -z
/// (centred back on the original grid) is the identity. distance 0 returns
/// the input unchanged.
SampledField propagate_fresnel(const SampledField& field, double distance_m, double wavelength_m,
                               const FresnelOptions& options = {});

/// Smallest sample count whose grid (at the current span) samples the
/// quadratic phase exp(i pi x^2 / (lambda z)) at Nyquist everywhere.
std::size_t min_samples_for_chirp(double span_m, double distance_m, double wavelength_m);

/// sin(u)/u with sinc(0) = 1.
double sinc(double u);

/// Far-field double-slit intensity normalised to 1 on axis:
/// cos^2(pi d x / (lambda L)) * sinc^2(pi delta x / (lambda L)).
double fraunhofer_intensity(const Geometry& geom, double screen_distance_m, double x_m);

/// Whether the far-field formula is a fair oracle at `screen_distance_m`
/// (slit-pair Fresnel number below 0.3).
bool far_field_applicable(const Geometry& geom, double screen_distance_m);

/// Integral of |field|^2 over [lo, hi), counting partially covered cells by
/// their covered fraction.
double integrate_power(const SampledField& field, double lo_m, double hi_m);

} // namespace slitscan
