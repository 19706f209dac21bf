#include "slitscan/instrument.hpp"

#include "slitscan/error.hpp"
#include "slitscan/metrics.hpp"
#include "slitscan/optics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace slitscan {

namespace {

double overlap(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
}

Complex cis_cycles(double cycles) {
  const double frac = cycles - std::round(cycles);
  return std::polar(1.0, 2.0 * std::numbers::pi * frac);
}

template <class E>
[[noreturn]] void rethrow_at_step(const E& e, std::size_t step) {
  throw E("scan step " + std::to_string(step) + ": " + e.what());
}

void add_detector_noise(std::vector<double>& electrons, const DetectorConfig& det,
                        const Exposure& exposure) {
  std::seed_seq seq{static_cast<std::uint32_t>(det.rng_seed),
                    static_cast<std::uint32_t>(det.rng_seed >> 32),
                    static_cast<std::uint32_t>(exposure.stream),
                    static_cast<std::uint32_t>(exposure.stream >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> readout(0.0, det.readout_noise_e);

  const std::size_t frames = std::max<std::size_t>(1, exposure.frames);
  std::vector<double> sum(electrons.size(), 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < electrons.size(); ++i) {
      double shot = 0.0;
      if (electrons[i] > 0.0) {
        std::poisson_distribution<long long> poisson(electrons[i]);
        shot = static_cast<double>(poisson(rng));
      }
      sum[i] += shot + (det.readout_noise_e > 0.0 ? readout(rng) : 0.0);
    }
  }
  for (std::size_t i = 0; i < electrons.size(); ++i)
    electrons[i] = sum[i] / static_cast<double>(frames);
}

} // namespace

std::string_view to_string(Opening o) {
  switch (o) {
  case Opening::rightward: return "rightward";
  case Opening::leftward: return "leftward";
  case Opening::centered: return "centered";
  }
  return "?";
}

std::string_view to_string(MidlineMode m) {
  return m == MidlineMode::centroid ? "centroid" : "center";
}

Opening parse_opening(std::string_view s) {
  if (s == "rightward") return Opening::rightward;
  if (s == "leftward") return Opening::leftward;
  if (s == "centered") return Opening::centered;
  throw ConfigError("unknown aperture opening '" + std::string(s) +
                    "' (expected rightward, leftward or centered)");
}

MidlineMode parse_midline(std::string_view s) {
  if (s == "center") return MidlineMode::detector_center;
  if (s == "centroid") return MidlineMode::centroid;
  throw ConfigError("unknown midline mode '" + std::string(s) + "' (expected center or centroid)");
}

std::string_view to_string(Signal s) {
  switch (s) {
  case Signal::total: return "total";
  case Signal::left: return "left";
  case Signal::right: return "right";
  }
  return "?";
}

Signal parse_signal(std::string_view s) {
  if (s == "total") return Signal::total;
  if (s == "left") return Signal::left;
  if (s == "right") return Signal::right;
  throw ConfigError("unknown signal '" + std::string(s) + "' (expected total, left or right)");
}

void ScanConfig::validate() const {
  if (!(aperture_width_m > 0.0)) throw ConfigError("scan: aperture_width_m must be positive");
  if (!(step_m > 0.0)) throw ConfigError("scan: step_m must be positive");
  if (n_steps < 1) throw ConfigError("scan: n_steps must be at least 1");
  if (!(stage_ratio > 0.0)) throw ConfigError("scan: stage_ratio must be positive");
  if (!(exposure_s > 0.0)) throw ConfigError("scan: exposure_s must be positive");
  if (frames_per_step < 1) throw ConfigError("scan: frames_per_step must be at least 1");
  if (!(reference_half_width_m >= 0.0))
    throw ConfigError("scan: reference_half_width_m must be non-negative");
  if (!std::isfinite(start_m)) throw ConfigError("scan: start_m must be finite");
}

void DetectorConfig::validate() const {
  if (!(pixel_pitch_m > 0.0)) throw ConfigError("detector: pixel_pitch_m must be positive");
  if (n_pixels < 64) throw ConfigError("detector: n_pixels must be at least 64");
  if (!(readout_noise_e >= 0.0)) throw ConfigError("detector: readout_noise_e must be >= 0");
  if (!(gain > 0.0)) throw ConfigError("detector: gain must be positive");
  if (!(full_well_e > 0.0)) throw ConfigError("detector: full_well_e must be positive");
}

std::pair<double, double> aperture_interval(double center_offset_m, double aperture_width_m,
                                            Opening opening, double reference_half_width_m) {
  switch (opening) {
  case Opening::rightward: {
    const double lo = center_offset_m - reference_half_width_m;
    return {lo, lo + aperture_width_m};
  }
  case Opening::leftward: {
    const double hi = center_offset_m + reference_half_width_m;
    return {hi - aperture_width_m, hi};
  }
  case Opening::centered:
    break;
  }
  return {center_offset_m - 0.5 * aperture_width_m, center_offset_m + 0.5 * aperture_width_m};
}

SampledField apply_aperture(const SampledField& pupil_field, double center_offset_m,
                            double aperture_width_m, Opening opening,
                            double reference_half_width_m) {
  if (!(aperture_width_m > 0.0))
    throw ConfigError("apply_aperture: aperture width must be positive");
  const auto [lo, hi] =
      aperture_interval(center_offset_m, aperture_width_m, opening, reference_half_width_m);
  const double p = pupil_field.pitch();
  const auto in = pupil_field.amplitudes();
  std::vector<Complex> out(in.size(), Complex{});
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = pupil_field.position(i);
    if (x - 0.5 * p >= lo && x + 0.5 * p <= hi) {
      out[i] = in[i];
      continue;
    }
    const double frac = overlap(x - 0.5 * p, x + 0.5 * p, lo, hi) / p;
    if (frac >= 1.0)
      out[i] = in[i];
    else if (frac > 0.0)
      out[i] = in[i] * std::sqrt(frac);
  }
  return {pupil_field.origin(), p, std::move(out)};
}

IntensityProfile image_slits(const SampledField& masked_pupil, const Geometry& geom,
                             const DetectorConfig& detector, double detector_center_offset_m,
                             const Exposure& exposure) {
  geom.validate();
  detector.validate();
  if (!(exposure.seconds > 0.0))
    throw ConfigError("image_slits: exposure must be positive");

  const std::size_t npx = detector.n_pixels;
  const double pp = detector.pixel_pitch_m;
  const double det_origin = detector_center_offset_m - 0.5 * static_cast<double>(npx - 1) * pp;
  const double du = masked_pupil.pitch();
  const double lambda = geom.wavelength_m;
  const double window = lambda * geom.l_lens_det_m / du;
  const double det_span = static_cast<double>(npx) * pp;
  if (det_span > 0.75 * window) {
    std::ostringstream msg;
    msg << "image_slits: detector span " << det_span << " m is not covered by the simulation "
        << "window " << window << " m (pupil pitch too coarse)";
    throw ConfigError(msg.str());
  }

  std::vector<double> electrons(npx, 0.0);

  const auto amps = masked_pupil.amplitudes();
  std::size_t first = amps.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (amps[i] != Complex{}) {
      first = std::min(first, i);
      last = i;
    }
  }

  if (first <= last && first < amps.size()) {
    const std::size_t count = std::max<std::size_t>(2, last - first + 1);
    std::vector<Complex> crop(count, Complex{});
    const double inv_2lf = 1.0 / (2.0 * lambda * geom.focal_m);
    for (std::size_t k = 0; k < count && first + k < amps.size(); ++k) {
      const double u = masked_pupil.position(first + k);
      crop[k] = amps[first + k] * cis_cycles(-u * u * inv_2lf);
    }
    const SampledField lensed(masked_pupil.position(first), du, std::move(crop));

    const auto min_for_pitch = static_cast<std::size_t>(std::ceil(8.0 * window / pp));
    const std::size_t m_out = std::bit_ceil(std::max(count, min_for_pitch));
    const SampledField at_detector = propagate_fresnel(
        lensed, geom.l_lens_det_m, lambda, {.output_samples = m_out,
                                            .output_center = detector_center_offset_m});

    // Cumulative power up to the left edge of each output cell.
    const auto out = at_detector.amplitudes();
    const double d2 = at_detector.pitch();
    std::vector<double> cum(out.size() + 1, 0.0);
    for (std::size_t m = 0; m < out.size(); ++m)
      cum[m + 1] = cum[m] + std::norm(out[m]) * d2;
    const double cell0 = at_detector.origin() - 0.5 * d2;
    auto cumulative_at = [&](double x) {
      const double t = (x - cell0) / d2;
      if (t <= 0.0) return 0.0;
      const auto i = static_cast<std::size_t>(std::floor(t));
      if (i >= out.size()) return cum.back();
      return cum[i] + (t - static_cast<double>(i)) * (cum[i + 1] - cum[i]);
    };

    const double scale = detector.gain * exposure.seconds;
    double prev = cumulative_at(det_origin - 0.5 * pp);
    for (std::size_t j = 0; j < npx; ++j) {
      const double next = cumulative_at(det_origin + (static_cast<double>(j) + 0.5) * pp);
      electrons[j] = (next - prev) * scale;
      prev = next;
    }
  }

  if (detector.noise_enabled)
    add_detector_noise(electrons, detector, exposure);

  return {det_origin, pp, std::move(electrons), detector.noise_enabled};
}

SignalSplit split_signals(const IntensityProfile& profile, double midline_px) {
  const auto v = profile.values();
  if (!(midline_px >= 0.0) || midline_px > static_cast<double>(v.size() - 1))
    throw ConfigError("split_signals: midline outside the profile");
  SignalSplit s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (static_cast<double>(i) < midline_px)
      s.left += v[i];
    else
      s.right += v[i];
  }
  return s;
}

double locate_midline(const IntensityProfile& profile, MidlineMode mode) {
  const auto v = profile.values();
  const double center = 0.5 * static_cast<double>(v.size() - 1);
  if (mode == MidlineMode::detector_center)
    return center;

  auto centroid = [&](std::size_t lo, std::size_t hi, double fallback) {
    double w = 0.0;
    double wx = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double p = std::max(0.0, v[i]);
      w += p;
      wx += p * static_cast<double>(i);
    }
    return w > 0.0 ? wx / w : fallback;
  };
  const double c = centroid(0, v.size(), center);
  const auto split = static_cast<std::size_t>(std::ceil(c));
  const double left = centroid(0, split, c);
  const double right = centroid(split, v.size(), c);
  return std::clamp(0.5 * (left + right), 0.0, static_cast<double>(v.size() - 1));
}

double auto_exposure(const SampledField& pupil_field, const Geometry& geom, const ScanConfig& scan,
                     const DetectorConfig& detector) {
  std::size_t k0 = 0;
  for (std::size_t k = 1; k < scan.n_steps; ++k)
    if (std::abs(scan.slit_position(k)) < std::abs(scan.slit_position(k0)))
      k0 = k;
  const double s = scan.slit_position(k0);
  DetectorConfig quiet = detector;
  quiet.noise_enabled = false;
  const auto masked = apply_aperture(pupil_field.shifted(s), 0.0, scan.aperture_width_m,
                                     scan.opening, scan.reference_half_width_m);
  const auto profile = image_slits(masked, geom, quiet, -scan.stage_ratio * s, {.seconds = 1.0});
  const auto v = profile.values();
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0))
    throw NumericalError("auto_exposure: no light reaches the detector at s = " +
                         std::to_string(s) + " m");
  return 0.7 * detector.full_well_e / peak;
}

ScanSeries run_scan_from_pupil(const SampledField& pupil_field, const Geometry& geom,
                               const ScanConfig& scan, const DetectorConfig& detector) {
  geom.validate();
  scan.validate();
  detector.validate();

  ScanSeries series{scan, {}};
  series.records.reserve(scan.n_steps);
  for (std::size_t k = 0; k < scan.n_steps; ++k) {
    try {
      const double s = scan.slit_position(k);
      const auto masked = apply_aperture(pupil_field.shifted(s), 0.0, scan.aperture_width_m,
                                         scan.opening, scan.reference_half_width_m);
      auto profile = image_slits(masked, geom, detector, -scan.stage_ratio * s,
                                 {.seconds = scan.exposure_s,
                                  .frames = scan.frames_per_step,
                                  .stream = k});
      const double midline = locate_midline(profile, detector.midline);
      const auto split = split_signals(profile, midline);
      series.records.push_back({.step_index = k,
                                .slit_position_m = s,
                                .detector_profile = std::move(profile),
                                .midline_px = midline,
                                .total_flux = split.left + split.right,
                                .left_signal = split.left,
                                .right_signal = split.right});
    } catch (const DomainError& e) {
      rethrow_at_step(e, k);
    } catch (const ConfigError& e) {
      rethrow_at_step(e, k);
    } catch (const DataError& e) {
      rethrow_at_step(e, k);
    } catch (const NumericalError& e) {
      rethrow_at_step(e, k);
    }
  }
  return series;
}

ScanSeries run_scan(const SampledField& source_field, const Geometry& geom, const ScanConfig& scan,
                    const DetectorConfig& detector) {
  geom.validate();
  const auto pupil = propagate_fresnel(source_field, geom.l_slits_lens_m, geom.wavelength_m);
  return run_scan_from_pupil(pupil, geom, scan, detector);
}

AssignmentStats assignment_probability(const ScanSeries& series, std::size_t guard_px) {
  double wrong = 0.0;
  double total = 0.0;
  const auto g = static_cast<double>(guard_px);
  for (const auto& rec : series.records) {
    const auto v = rec.detector_profile.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = static_cast<double>(i);
      if (x > rec.midline_px + g || x < rec.midline_px - g)
        wrong += v[i];
    }
    total += rec.total_flux;
  }
  if (!(total > 0.0))
    throw NumericalError("assignment_probability: total flux is zero, statistics undefined");
  AssignmentStats s;
  s.contamination_fraction = wrong / total;
  s.p_correct = 1.0 - s.contamination_fraction;
  s.distinguishability = distinguishability(s.p_correct);
  return s;
}

std::vector<double> flux_by_aperture_offset(const ScanSeries& series, Signal signal) {
  std::vector<double> out;
  out.reserve(series.records.size());
  for (auto it = series.records.rbegin(); it != series.records.rend(); ++it) {
    switch (signal) {
    case Signal::total: out.push_back(it->total_flux); break;
    case Signal::left: out.push_back(it->left_signal); break;
    case Signal::right: out.push_back(it->right_signal); break;
    }
  }
  return out;
}

} // namespace slitscan
