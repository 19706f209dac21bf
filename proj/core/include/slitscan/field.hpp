#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace slitscan {

using Complex = std::complex<double>;

/// Uniform 1-D sampling: `samples` points spanning [-half_span, +half_span)
/// with the sample at index samples/2 sitting exactly on x = 0.
struct GridSpec {
  std::size_t samples = std::size_t{1} << 16;
  double half_span_m = 20e-3;

  double pitch() const { return 2.0 * half_span_m / static_cast<double>(samples); }
  double origin() const { return -half_span_m; }
};

class IntensityProfile;

/// Coherent scalar field sampled on a uniform grid. Sample i sits at
/// origin + i * pitch and represents the cell [x - pitch/2, x + pitch/2).
class SampledField {
public:
  SampledField(double origin_m, double pitch_m, std::vector<Complex> amplitudes);

  double origin() const { return origin_; }
  double pitch() const { return pitch_; }
  std::size_t size() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }

  double position(std::size_t i) const { return origin_ + static_cast<double>(i) * pitch_; }
  /// Coordinate of sample size()/2, the natural centre of an FFT grid.
  double center() const { return position(size() / 2); }

  /// Sum |a|^2 * pitch.
  double power() const;
  IntensityProfile intensity() const;

  /// Same samples, grid moved by `offset_m`.
  SampledField shifted(double offset_m) const;

private:
  double origin_;
  double pitch_;
  std::vector<Complex> amplitudes_;
};

/// Non-negative power per sample on a uniform grid (same conventions as
/// SampledField). Noisy detector profiles may dip below zero; those are
/// built with `allow_negative`.
class IntensityProfile {
public:
  IntensityProfile(double origin_m, double pitch_m, std::vector<double> values,
                   bool allow_negative = false);

  double origin() const { return origin_; }
  double pitch() const { return pitch_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double position(std::size_t i) const { return origin_ + static_cast<double>(i) * pitch_; }

  double total() const;
  /// Linear interpolation between sample centres; `outside` beyond the ends.
  double interpolate(double x, double outside = 0.0) const;

private:
  double origin_;
  double pitch_;
  std::vector<double> values_;
};

} // namespace slitscan
