#include "slitscan/optics.hpp"

#include "fft.hpp"
#include "slitscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace slitscan {

namespace {

/// exp(2 pi i * cycles), reducing the argument first so that large chirp
/// phases keep their fractional part.
Complex cis_cycles(double cycles) {
  const double frac = cycles - std::round(cycles);
  return std::polar(1.0, 2.0 * std::numbers::pi * frac);
}

double overlap(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
}

} // namespace

SampledField double_slit_field(const Geometry& geom, const GridSpec& grid,
                               double illumination_tilt) {
  geom.validate();
  if (grid.samples < 2 || !(grid.half_span_m > 0.0))
    throw ConfigError("double_slit_field: grid needs >= 2 samples and a positive span");
  if (!(std::abs(illumination_tilt) <= 2.0))
    throw ConfigError("double_slit_field: illumination_tilt must lie in [-2, 2]");

  const double pitch = grid.pitch();
  const double per_slit = geom.slit_width_m / pitch;
  if (per_slit < 16.0) {
    std::ostringstream msg;
    msg << "double_slit_field: grid too coarse, " << per_slit
        << " samples per slit width (need >= 16)";
    throw ConfigError(msg.str());
  }
  const double outer = 0.5 * (geom.slit_sep_m + geom.slit_width_m);
  if (outer + pitch > grid.half_span_m)
    throw ConfigError("double_slit_field: grid does not cover both slits");

  const double half = 0.5 * geom.slit_width_m;
  const double right_c = 0.5 * geom.slit_sep_m;
  const double left_c = -right_c;
  const double right_amp = 1.0 + 0.5 * illumination_tilt;
  const double left_amp = 1.0 - 0.5 * illumination_tilt;

  std::vector<Complex> amps(grid.samples);
  for (std::size_t i = 0; i < grid.samples; ++i) {
    const double x = grid.origin() + static_cast<double>(i) * pitch;
    const double lo = x - 0.5 * pitch;
    const double hi = x + 0.5 * pitch;
    const double r = overlap(lo, hi, right_c - half, right_c + half) / pitch;
    const double l = overlap(lo, hi, left_c - half, left_c + half) / pitch;
    amps[i] = Complex(right_amp * r + left_amp * l, 0.0);
  }
  return {grid.origin(), pitch, std::move(amps)};
}

std::size_t min_samples_for_chirp(double span_m, double distance_m, double wavelength_m) {
  return static_cast<std::size_t>(
      std::ceil(span_m * span_m / (wavelength_m * std::abs(distance_m))));
}

SampledField propagate_fresnel(const SampledField& field, double distance_m, double wavelength_m,
                               const FresnelOptions& options) {
  if (!(wavelength_m > 0.0))
    throw ConfigError("propagate_fresnel: wavelength must be positive");
  if (!std::isfinite(distance_m))
    throw ConfigError("propagate_fresnel: distance must be finite");

  const std::size_t n = field.size();
  const std::size_t m_out = options.output_samples == 0 ? n : options.output_samples;
  if (m_out < n)
    throw ConfigError("propagate_fresnel: output_samples must be >= input samples");

  if (distance_m == 0.0) {
    const bool same_grid =
        m_out == n && (!options.output_center || *options.output_center == field.center());
    if (!same_grid)
      throw ConfigError("propagate_fresnel: zero distance cannot resample the grid");
    return field;
  }

  const double az = std::abs(distance_m);
  const double sgn = distance_m > 0.0 ? 1.0 : -1.0;
  const double lz = wavelength_m * az;
  const double d1 = field.pitch();
  const double o1 = field.origin();
  const double d2 = lz / (static_cast<double>(m_out) * d1);
  const double center = options.output_center.value_or(field.center());
  const double o2 = center - static_cast<double>(m_out / 2) * d2;

  // Kernel exp(-2 pi i x1 x2 / (lambda z)) split into a pure DFT plus
  // input- and output-side linear phases from the grid origins.
  const double in_lin = sgn * d1 * o2 / lz;
  const double out_lin = sgn * d2 * o1 / lz;
  const double chirp = 1.0 / (2.0 * wavelength_m * distance_m);

  std::vector<Complex> buf(m_out, Complex{});
  const auto amps = field.amplitudes();
  for (std::size_t k = 0; k < n; ++k) {
    if (amps[k] == Complex{})
      continue;
    const double x1 = o1 + static_cast<double>(k) * d1;
    buf[k] = amps[k] * cis_cycles(x1 * x1 * chirp - static_cast<double>(k) * in_lin);
  }

  detail::fft_inplace(buf, sgn > 0 ? detail::FftSign::forward : detail::FftSign::backward);

  const Complex prefactor = d1 / std::sqrt(Complex(0.0, wavelength_m * distance_m));
  const double const_cycles = -sgn * o1 * o2 / lz;
  for (std::size_t m = 0; m < m_out; ++m) {
    const double x2 = o2 + static_cast<double>(m) * d2;
    buf[m] *= prefactor *
              cis_cycles(const_cycles - static_cast<double>(m) * out_lin + x2 * x2 * chirp);
  }

  double total = 0.0;
  double edge = 0.0;
  const std::size_t eighth = m_out / 8;
  for (std::size_t m = 0; m < m_out; ++m) {
    const double p = std::norm(buf[m]);
    total += p;
    if (m < eighth || m >= m_out - eighth)
      edge += p;
  }
  if (total > 0.0 && edge > kMaxEdgePowerFraction * total) {
    std::ostringstream msg;
    msg << "propagate_fresnel: aliasing bound violated over z = " << distance_m << " m: "
        << 100.0 * edge / total << "% of the output power reaches the window edges; "
        << "sampling the input quadratic phase needs at least "
        << min_samples_for_chirp(static_cast<double>(n) * d1, distance_m, wavelength_m)
        << " samples over the current span (have " << n << ")";
    throw ConfigError(msg.str());
  }

  return {o2, d2, std::move(buf)};
}

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

double fraunhofer_intensity(const Geometry& geom, double screen_distance_m, double x_m) {
  const double scale = std::numbers::pi * x_m / (geom.wavelength_m * screen_distance_m);
  const double c = std::cos(scale * geom.slit_sep_m);
  const double s = sinc(scale * geom.slit_width_m);
  return c * c * s * s;
}

bool far_field_applicable(const Geometry& geom, double screen_distance_m) {
  return fresnel_number(geom, screen_distance_m) < 0.3;
}

double integrate_power(const SampledField& field, double lo_m, double hi_m) {
  if (!(hi_m > lo_m))
    return 0.0;
  const double p = field.pitch();
  const auto amps = field.amplitudes();
  const double t_lo = (lo_m - field.origin()) / p - 0.5;
  const double t_hi = (hi_m - field.origin()) / p + 0.5;
  const auto first = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(t_lo)));
  const auto last = static_cast<std::ptrdiff_t>(
      std::min(static_cast<double>(amps.size()) - 1.0, std::ceil(t_hi)));
  double sum = 0.0;
  for (std::ptrdiff_t k = first; k <= last; ++k) {
    const double x = field.position(static_cast<std::size_t>(k));
    sum += std::norm(amps[static_cast<std::size_t>(k)]) *
           overlap(x - 0.5 * p, x + 0.5 * p, lo_m, hi_m);
  }
  return sum;
}

} // namespace slitscan
