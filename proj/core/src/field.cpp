#include "slitscan/field.hpp"

#include "slitscan/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace slitscan {

namespace {

void check_grid(double pitch, std::size_t n) {
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    throw ConfigError("grid pitch must be positive and finite");
  if (n < 2)
    throw ConfigError("a sampled grid needs at least 2 samples, got " + std::to_string(n));
}

} // namespace

SampledField::SampledField(double origin_m, double pitch_m, std::vector<Complex> amplitudes)
    : origin_(origin_m), pitch_(pitch_m), amplitudes_(std::move(amplitudes)) {
  check_grid(pitch_, amplitudes_.size());
  if (!std::isfinite(origin_))
    throw ConfigError("grid origin must be finite");
}

double SampledField::power() const {
  double sum = 0.0;
  for (const auto& a : amplitudes_)
    sum += std::norm(a);
  return sum * pitch_;
}

IntensityProfile SampledField::intensity() const {
  std::vector<double> values(amplitudes_.size());
  for (std::size_t i = 0; i < amplitudes_.size(); ++i)
    values[i] = std::norm(amplitudes_[i]) * pitch_;
  return {origin_, pitch_, std::move(values)};
}

SampledField SampledField::shifted(double offset_m) const {
  return {origin_ + offset_m, pitch_, amplitudes_};
}

IntensityProfile::IntensityProfile(double origin_m, double pitch_m, std::vector<double> values,
                                   bool allow_negative)
    : origin_(origin_m), pitch_(pitch_m), values_(std::move(values)) {
  if (!(pitch_ > 0.0) || !std::isfinite(pitch_))
    throw ConfigError("profile pitch must be positive and finite");
  if (values_.empty())
    throw ConfigError("profile must not be empty");
  for (double v : values_) {
    if (!std::isfinite(v))
      throw DataError("profile contains a non-finite value");
    if (!allow_negative && v < 0.0)
      throw DataError("intensity profile contains a negative value");
  }
}

double IntensityProfile::total() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double IntensityProfile::interpolate(double x, double outside) const {
  const double t = (x - origin_) / pitch_;
  const double last = static_cast<double>(values_.size() - 1);
  if (t < 0.0 || t > last)
    return outside;
  auto i = static_cast<std::size_t>(std::floor(t));
  if (i >= values_.size() - 1)
    return values_.back();
  const double f = t - static_cast<double>(i);
  return values_[i] + f * (values_[i + 1] - values_[i]);
}

} // namespace slitscan
