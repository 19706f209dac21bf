#include "slitscan/metrics.hpp"

#include "slitscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace slitscan {

std::string_view to_string(PeakSelector s) {
  return s == PeakSelector::central ? "central" : "second_third";
}

PeakSelector parse_peak_selector(std::string_view s) {
  if (s == "central") return PeakSelector::central;
  if (s == "second_third") return PeakSelector::second_third;
  throw ConfigError("unknown peak selector '" + std::string(s) +
                    "' (expected central or second_third)");
}

std::vector<Peak> find_peaks(std::span<const double> v, double min_prominence_fraction) {
  std::vector<Peak> peaks;
  const std::size_t n = v.size();
  if (n < 3)
    return peaks;
  const double vmax = *std::max_element(v.begin(), v.end());
  const double threshold = min_prominence_fraction * std::abs(vmax);

  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(v[i] > v[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && v[j + 1] == v[i])
      ++j;
    if (j + 1 >= n || !(v[j + 1] < v[i])) {
      i = j + 1;
      continue;
    }
    const double top = v[i];
    double left_min = top;
    for (std::size_t k = i; k-- > 0;) {
      if (v[k] > top) break;
      left_min = std::min(left_min, v[k]);
    }
    double right_min = top;
    for (std::size_t k = j + 1; k < n; ++k) {
      if (v[k] > top) break;
      right_min = std::min(right_min, v[k]);
    }
    const double prominence = top - std::max(left_min, right_min);
    if (prominence >= threshold && prominence > 0.0)
      peaks.push_back({(i + j) / 2, top, prominence});
    i = j + 1;
  }
  return peaks;
}

namespace {

double min_between(std::span<const double> v, std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(a),
                           v.begin() + static_cast<std::ptrdiff_t>(b) + 1);
}

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

} // namespace

VisibilityEstimate visibility(const IntensityProfile& profile, PeakSelector selector,
                              double min_prominence_fraction) {
  const auto v = profile.values();
  const auto peaks = find_peaks(v, min_prominence_fraction);
  if (peaks.size() < 2) {
    std::ostringstream msg;
    msg << "visibility: found " << peaks.size() << " peak(s) with prominence >= "
        << 100.0 * min_prominence_fraction << "% of the maximum, need at least 2";
    throw NumericalError(msg.str());
  }
  const auto c = static_cast<std::ptrdiff_t>(
      std::max_element(peaks.begin(), peaks.end(),
                       [](const Peak& a, const Peak& b) { return a.value < b.value; }) -
      peaks.begin());
  const auto np = static_cast<std::ptrdiff_t>(peaks.size());
  auto has = [&](std::ptrdiff_t k) { return k >= 0 && k < np; };
  auto at = [&](std::ptrdiff_t k) { return peaks[static_cast<std::size_t>(k)]; };

  std::vector<double> maxima;
  std::vector<double> minima;
  std::string method;
  if (selector == PeakSelector::central) {
    maxima.push_back(at(c).value);
    for (const std::ptrdiff_t side : {-1, 1})
      if (has(c + side))
        minima.push_back(min_between(v, at(c).index, at(c + side).index));
    method = "central peak vs adjacent troughs";
  } else {
    for (const std::ptrdiff_t side : {-1, 1}) {
      if (!has(c + side) || !has(c + 2 * side))
        continue;
      maxima.push_back(at(c + side).value);
      maxima.push_back(at(c + 2 * side).value);
      minima.push_back(min_between(v, at(c + side).index, at(c + 2 * side).index));
    }
    if (maxima.empty()) {
      std::ostringstream msg;
      msg << "visibility: second and third peaks not found on either side of the central peak ("
          << peaks.size() << " peaks in total)";
      throw NumericalError(msg.str());
    }
    method = "second/third peaks vs enclosed troughs";
  }
  std::ostringstream desc;
  desc << method << ", " << maxima.size() << " peak(s), " << minima.size()
       << " trough(s), prominence >= " << 100.0 * min_prominence_fraction << "%";

  const double i_max = mean(maxima);
  const double i_min = mean(minima);
  if (!(i_max + i_min > 0.0))
    throw NumericalError("visibility: I_max + I_min is not positive");
  return {(i_max - i_min) / (i_max + i_min), i_max, i_min, desc.str()};
}

double distinguishability(double p_correct) {
  if (!(p_correct >= 0.5 && p_correct <= 1.0)) {
    std::ostringstream msg;
    msg << "distinguishability: probability " << p_correct << " outside [1/2, 1]";
    throw DomainError(msg.str());
  }
  return 2.0 * (p_correct - 0.5);
}

DualityReport duality_check(double visibility, double distinguishability, std::string v_method,
                            std::string d_method) {
  const double q = visibility * visibility + distinguishability * distinguishability;
  return {visibility, distinguishability, q, q > 1.0, std::move(v_method), std::move(d_method)};
}

ProfileMatch match_profiles(const IntensityProfile& rec, const IntensityProfile& ref,
                            double h_scale, const MatchOptions& opt) {
  if (!(h_scale > 0.0))
    throw ConfigError("match_profiles: h_scale must be positive");
  if (!(opt.window_half_width_m > 0.0) || !(opt.search_half_width_m >= 0.0))
    throw ConfigError("match_profiles: window and search widths must be positive");

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double x = rec.position(i);
    if (std::abs(x - opt.window_center_m) <= opt.window_half_width_m * (1.0 + 1e-12)) {
      xs.push_back(x);
      ys.push_back(rec.values()[i]);
    }
  }
  if (xs.empty())
    throw ConfigError("match_profiles: no reconstructed samples inside the matching window");

  const double ref_lo = h_scale * ref.origin() - opt.search_half_width_m;
  const double ref_hi =
      h_scale * ref.position(ref.size() - 1) + opt.search_half_width_m;
  if (ref_hi < xs.front() || ref_lo > xs.back())
    throw ConfigError("match_profiles: scaled reference does not overlap the matching window");

  const double rec_peak = *std::max_element(ys.begin(), ys.end());
  const auto rv = ref.values();
  const double ref_peak = *std::max_element(rv.begin(), rv.end());
  if (!(rec_peak > 0.0) || !(ref_peak > 0.0))
    throw NumericalError("match_profiles: profiles need a positive central peak");
  const double v_scale = rec_peak / ref_peak;

  auto cost = [&](double shift) {
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = v_scale * ref.interpolate((xs[i] - shift) / h_scale, 0.0);
      ss += (ys[i] - r) * (ys[i] - r);
    }
    return ss;
  };

  const double step = 0.25 * rec.pitch();
  const auto half = static_cast<long long>(std::ceil(opt.search_half_width_m / step));
  double best = 0.0;
  double best_cost = cost(0.0);
  for (long long k = -half; k <= half; ++k) {
    const double s = static_cast<double>(k) * step;
    const double c = cost(s);
    if (c < best_cost) {
      best_cost = c;
      best = s;
    }
  }

  // Golden-section refinement inside the bracket around the coarse optimum.
  {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best - step;
    double b = best + step;
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = cost(x1);
    double f2 = cost(x2);
    for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = cost(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = cost(x2);
      }
    }
    const double s = 0.5 * (a + b);
    const double c = cost(s);
    if (c < best_cost) {
      best_cost = c;
      best = s;
    }
  }

  // Shifts that put reference knots exactly on reconstruction samples.
  {
    const double t = ((xs.front() - best) / h_scale - ref.origin()) / ref.pitch();
    for (const double j : {std::floor(t), std::ceil(t)}) {
      const double s = xs.front() - h_scale * (ref.origin() + j * ref.pitch());
      const double c = cost(s);
      if (c < best_cost) {
        best_cost = c;
        best = s;
      }
    }
  }

  const double rms = std::sqrt(best_cost / static_cast<double>(xs.size()));
  return {best, v_scale, rms / rec_peak, xs.size()};
}

double pixel_to_pupil_scale(double pixel_pitch_m, double l_slits_lens_m, double d_direct_m) {
  if (!(pixel_pitch_m > 0.0) || !(l_slits_lens_m > 0.0) || !(d_direct_m > 0.0))
    throw ConfigError("pixel_to_pupil_scale: arguments must be positive");
  return pixel_pitch_m * l_slits_lens_m / d_direct_m;
}

double half_max_width(const IntensityProfile& curve) {
  const auto v = curve.values();
  const auto top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const double half = 0.5 * v[top];
  if (!(v[top] > 0.0))
    throw NumericalError("half_max_width: curve has no positive maximum");

  std::size_t lo = 0;
  bool lo_found = false;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= half) {
      lo = i;
      lo_found = i > 0;
      break;
    }
  std::size_t hi = v.size() - 1;
  bool hi_found = false;
  for (std::size_t i = v.size(); i-- > 0;)
    if (v[i] >= half) {
      hi = i;
      hi_found = i + 1 < v.size();
      break;
    }
  if (!lo_found || !hi_found)
    throw NumericalError("half_max_width: curve does not fall to half maximum on both sides");

  const double x_lo = curve.position(lo - 1) +
                      curve.pitch() * (half - v[lo - 1]) / (v[lo] - v[lo - 1]);
  const double x_hi = curve.position(hi) +
                      curve.pitch() * (v[hi] - half) / (v[hi] - v[hi + 1]);
  return x_hi - x_lo;
}

} // namespace slitscan
