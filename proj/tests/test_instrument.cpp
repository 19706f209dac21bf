#include <slitscan/error.hpp>
#include <slitscan/instrument.hpp>
#include <slitscan/metrics.hpp>
#include <slitscan/optics.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace slitscan;

namespace {

const SampledField& pupil(double tilt) {
  static const SampledField p0 =
      propagate_fresnel(double_slit_field(Geometry{}, GridSpec{}, 0.0), 0.58, 650e-9);
  static const SampledField p2 =
      propagate_fresnel(double_slit_field(Geometry{}, GridSpec{}, 0.2), 0.58, 650e-9);
  return tilt == 0.0 ? p0 : p2;
}

std::vector<std::size_t> local_maxima(std::span<const double> v, double min_fraction) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > min_fraction * top) out.push_back(i);
  return out;
}

ScanConfig short_scan(double width, std::size_t n = 41) {
  ScanConfig s;
  s.aperture_width_m = width;
  s.n_steps = n;
  s.start_m = -0.5 * static_cast<double>(n - 1) * s.step_m;
  return s;
}

} // namespace

TEST(Aperture, WiderThanTheGridIsANoOp) {
  const auto& p = pupil(0.2);
  const auto out = apply_aperture(p, 0.0, 10.0, Opening::centered);
  EXPECT_TRUE(std::equal(p.amplitudes().begin(), p.amplitudes().end(), out.amplitudes().begin()));
}

TEST(Aperture, TransmitsExactlyThePowerInsideTheWindow) {
  const auto& p = pupil(0.2);
  const auto out = apply_aperture(p, 0.0, 4e-3, Opening::centered);
  EXPECT_NEAR(out.power() / p.power(), integrate_power(p, -2e-3, 2e-3) / p.power(), 1e-13);
}

TEST(Aperture, OffsetBeyondTheGridGivesZeroField) {
  const auto& p = pupil(0.0);
  const auto out = apply_aperture(p, 5.0, 4e-3, Opening::rightward);
  EXPECT_EQ(out.power(), 0.0);
}

TEST(Aperture, AdjacentAperturesAddUpInPower) {
  const auto& p = pupil(0.2);
  const double a = apply_aperture(p, 0.0, 1.234e-3, Opening::rightward).power();
  const double b = apply_aperture(p, 1.234e-3, 2.1e-3, Opening::rightward).power();
  const double c = apply_aperture(p, 0.0, 3.334e-3, Opening::rightward).power();
  EXPECT_NEAR(a + b, c, 1e-12 * c);
}

TEST(Aperture, IntervalsFollowTheOpeningConvention) {
  auto [lo, hi] = aperture_interval(1e-3, 4e-3, Opening::rightward, 2e-3);
  EXPECT_DOUBLE_EQ(lo, -1e-3);
  EXPECT_DOUBLE_EQ(hi, 3e-3);
  std::tie(lo, hi) = aperture_interval(1e-3, 5e-3, Opening::rightward, 2e-3);
  EXPECT_DOUBLE_EQ(lo, -1e-3);
  EXPECT_DOUBLE_EQ(hi, 4e-3);
  std::tie(lo, hi) = aperture_interval(1e-3, 5e-3, Opening::leftward, 2e-3);
  EXPECT_DOUBLE_EQ(lo, -2e-3);
  EXPECT_DOUBLE_EQ(hi, 3e-3);
  std::tie(lo, hi) = aperture_interval(1e-3, 5e-3, Opening::centered, 2e-3);
  EXPECT_DOUBLE_EQ(lo, -1.5e-3);
  EXPECT_DOUBLE_EQ(hi, 3.5e-3);
}

TEST(ImageSlits, LensAperturePupilShowsTwoImagesAbout20PixelsApart) {
  const auto masked = apply_aperture(pupil(0.0), 0.0, 16e-3, Opening::centered);
  const auto img = image_slits(masked, Geometry{}, DetectorConfig{}, 0.0);
  const auto peaks = local_maxima(img.values(), 0.5);
  ASSERT_EQ(peaks.size(), 2u);
  const double sep = static_cast<double>(peaks[1] - peaks[0]);
  EXPECT_NEAR(sep, 20.0, 1.0);
  // Geometric image separation d * L_C / L_S in pixels.
  EXPECT_NEAR(sep, 248e-6 * 0.63 / 0.58 / 13e-6, 1.0);
}

TEST(ImageSlits, FourMillimetreApertureStillSeparatesTheSlits) {
  const auto masked = apply_aperture(pupil(0.0), 0.0, 4e-3, Opening::centered);
  const auto img = image_slits(masked, Geometry{}, DetectorConfig{}, 0.0);
  const auto peaks = local_maxima(img.values(), 0.2);
  ASSERT_GE(peaks.size(), 2u);
  const auto v = img.values();
  std::vector<std::size_t> top(peaks);
  std::sort(top.begin(), top.end(), [&](auto a, auto b) { return v[a] > v[b]; });
  const auto d = top[0] > top[1] ? top[0] - top[1] : top[1] - top[0];
  EXPECT_GE(d, 10u);
}

TEST(ImageSlits, ConservesThePowerThatReachesTheDetector) {
  const auto masked = apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward);
  DetectorConfig det;
  det.gain = 1.0;
  const auto img = image_slits(masked, Geometry{}, det, 0.0);
  EXPECT_NEAR(img.total(), masked.power(), 1e-3 * masked.power());
}

TEST(ImageSlits, ZeroPupilGivesZeroProfile) {
  const SampledField zero(-1e-3, 1e-5, std::vector<Complex>(200));
  const auto img = image_slits(zero, Geometry{}, DetectorConfig{}, 0.0);
  for (const double v : img.values()) EXPECT_EQ(v, 0.0);
  DetectorConfig noisy;
  noisy.noise_enabled = true;
  const auto n = image_slits(zero, Geometry{}, noisy, 0.0, {.frames = 1});
  const double mean = n.total() / static_cast<double>(n.size());
  EXPECT_NEAR(mean, 0.0, 4.0 * 6.0 / std::sqrt(1024.0));
}

TEST(ImageSlits, DetectorOutsideTheSimulationWindowIsRejected) {
  const auto masked = apply_aperture(pupil(0.0), 0.0, 4e-3, Opening::centered);
  DetectorConfig det;
  det.n_pixels = 4096;
  EXPECT_THROW(image_slits(masked, Geometry{}, det, 0.0), ConfigError);
}

TEST(ImageSlits, ExposureIsLinear) {
  const auto masked = apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward);
  const auto a = image_slits(masked, Geometry{}, DetectorConfig{}, 0.0, {.seconds = 0.7});
  const auto b = image_slits(masked, Geometry{}, DetectorConfig{}, 0.0, {.seconds = 1.4});
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(2.0 * a.values()[i], b.values()[i]);
}

TEST(ImageSlits, AveragingFourFramesQuartersTheVariance) {
  const auto masked = apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward);
  DetectorConfig det;
  det.noise_enabled = true;
  det.gain = 1e7;
  auto variance = [&](std::size_t frames) {
    std::vector<double> f;
    for (std::uint64_t s = 0; s < 150; ++s)
      f.push_back(image_slits(masked, Geometry{}, det, 0.0, {.frames = frames, .stream = s}).total());
    const double m = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    double v = 0.0;
    for (const double x : f) v += (x - m) * (x - m);
    return v / static_cast<double>(f.size() - 1);
  };
  const double ratio = variance(4) / variance(1);
  EXPECT_NEAR(ratio, 0.25, 0.08);
}

TEST(ImageSlits, NoiseIsDeterministicPerSeedAndStream) {
  const auto masked = apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward);
  DetectorConfig det;
  det.noise_enabled = true;
  const auto a = image_slits(masked, Geometry{}, det, 0.0, {.frames = 4, .stream = 7});
  const auto b = image_slits(masked, Geometry{}, det, 0.0, {.frames = 4, .stream = 7});
  const auto c = image_slits(masked, Geometry{}, det, 0.0, {.frames = 4, .stream = 8});
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(SplitSignals, Examples) {
  const IntensityProfile sym(0.0, 1.0, {1, 2, 3, 3, 2, 1});
  const auto s = split_signals(sym, 2.5);
  EXPECT_EQ(s.left, s.right);
  const IntensityProfile left(0.0, 1.0, {4, 5, 0, 0, 0, 0});
  const auto l = split_signals(left, 2.5);
  EXPECT_EQ(l.right, 0.0);
  EXPECT_EQ(l.left, 9.0);
  EXPECT_THROW(split_signals(sym, 6.0), ConfigError);
}

TEST(SplitSignals, TiltedCentralImageCarriesTheSlitPowerRatio) {
  // Images are reversed: the brighter right slit lands left of the midline.
  const auto masked = apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward);
  const auto img = image_slits(masked, Geometry{}, DetectorConfig{}, 0.0);
  const auto s = split_signals(img, locate_midline(img, MidlineMode::centroid));
  EXPECT_NEAR(s.left / s.right, 1.494, 0.1 * 1.494);
}

TEST(Midline, CentroidModeSitsBetweenTheTwoImages) {
  std::vector<double> v(1024, 0.0);
  for (int k = -3; k <= 3; ++k) {
    v[static_cast<std::size_t>(400 + k)] = 3.0 * (4 - std::abs(k));
    v[static_cast<std::size_t>(600 + k)] = 1.0 * (4 - std::abs(k));
  }
  const IntensityProfile p(0.0, 13e-6, v);
  EXPECT_NEAR(locate_midline(p, MidlineMode::centroid), 500.0, 1e-9);
  EXPECT_DOUBLE_EQ(locate_midline(p, MidlineMode::detector_center), 511.5);
}

TEST(RunScan, SingleStepMatchesADirectImage) {
  ScanConfig scan = short_scan(4e-3, 1);
  scan.start_m = 0.0;
  scan.exposure_s = 0.5;
  scan.frames_per_step = 1;
  DetectorConfig det;
  const auto series = run_scan_from_pupil(pupil(0.2), Geometry{}, scan, det);
  ASSERT_EQ(series.records.size(), 1u);
  const auto direct = image_slits(apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward),
                                  Geometry{}, det, 0.0, {.seconds = 0.5});
  const auto& r = series.records[0];
  EXPECT_TRUE(std::equal(direct.values().begin(), direct.values().end(),
                         r.detector_profile.values().begin()));
  EXPECT_EQ(r.total_flux, r.left_signal + r.right_signal);
}

TEST(RunScan, PositionsAdvanceByTheStepAndFluxesAdd) {
  DetectorConfig det;
  det.noise_enabled = true;
  const auto series = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3), det);
  ASSERT_EQ(series.records.size(), 41u);
  for (std::size_t k = 0; k < series.records.size(); ++k) {
    const auto& r = series.records[k];
    EXPECT_EQ(r.step_index, k);
    EXPECT_NEAR(r.slit_position_m, -2e-3 + 1e-4 * static_cast<double>(k), 1e-15);
    EXPECT_EQ(r.total_flux, r.left_signal + r.right_signal);
  }
}

TEST(RunScan, UntiltedSourceGivesAnEvenFluxCurve) {
  const auto series = run_scan_from_pupil(pupil(0.0), Geometry{}, short_scan(4e-3, 61),
                                          DetectorConfig{});
  const auto& r = series.records;
  double top = 0.0;
  for (const auto& x : r) top = std::max(top, x.total_flux);
  for (std::size_t k = 0; k < r.size(); ++k)
    EXPECT_NEAR(r[k].total_flux, r[r.size() - 1 - k].total_flux, 1e-6 * top) << k;
}

TEST(RunScan, WiderApertureNeverCollectsLess) {
  const auto a = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3), DetectorConfig{});
  const auto b = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(5e-3), DetectorConfig{});
  for (std::size_t k = 0; k < a.records.size(); ++k)
    EXPECT_GE(b.records[k].total_flux, a.records[k].total_flux * (1.0 - 1e-12)) << k;
}

TEST(RunScan, ShiftingPatternAndScanTogetherRelabelsSteps) {
  const double delta = 0.5e-3;
  const ScanConfig scan = short_scan(4e-3, 21);
  ScanConfig moved = scan;
  moved.start_m -= delta;
  const auto& p = pupil(0.2);
  const auto q = p.shifted(delta);
  DetectorConfig det;
  det.gain = 1.0;
  const auto a = run_scan_from_pupil(p, Geometry{}, scan, det);
  const auto b = run_scan_from_pupil(q, Geometry{}, moved, det);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    // Pupil plane: the transmitted field is the same.
    const double pa = apply_aperture(p.shifted(scan.slit_position(k)), 0.0, 4e-3,
                                     Opening::rightward).power();
    const double pb = apply_aperture(q.shifted(moved.slit_position(k)), 0.0, 4e-3,
                                     Opening::rightward).power();
    EXPECT_NEAR(pa, pb, 1e-12 * pa) << k;
    // The camera sits elsewhere in the two runs, so only the diffraction
    // tails that miss the detector may differ.
    const double fa = a.records[k].total_flux / scan.exposure_s;
    const double fb = b.records[k].total_flux / moved.exposure_s;
    EXPECT_LE(std::abs(fa - fb), std::abs(pa - fa) + std::abs(pb - fb) + 1e-9 * pa) << k;
    EXPECT_LT(std::abs(fa - fb), 1e-4 * pa) << k;
  }
}

TEST(RunScan, ErrorsCarryTheStepIndexAndKeepTheirType) {
  DetectorConfig det;
  det.n_pixels = 4096;
  try {
    (void)run_scan_from_pupil(pupil(0.0), Geometry{}, short_scan(4e-3, 3), det);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("scan step 0"), std::string::npos) << e.what();
  }
}

TEST(RunScan, NoiseIsReproducible) {
  DetectorConfig det;
  det.noise_enabled = true;
  det.rng_seed = 42;
  const auto a = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3, 11), det);
  const auto b = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3, 11), det);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].total_flux, b.records[k].total_flux);
    EXPECT_EQ(a.records[k].left_signal, b.records[k].left_signal);
  }
}

TEST(RunScan, FullSourcePathMatchesThePupilPath) {
  const auto src = double_slit_field(Geometry{}, GridSpec{}, 0.2);
  const auto a = run_scan(src, Geometry{}, short_scan(4e-3, 3), DetectorConfig{});
  const auto b = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3, 3), DetectorConfig{});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.records[k].total_flux, b.records[k].total_flux);
}

TEST(AutoExposure, PutsThePeakPixelAt70PercentOfFullWell) {
  const ScanConfig scan = short_scan(4e-3, 5);
  const DetectorConfig det;
  const double t = auto_exposure(pupil(0.2), Geometry{}, scan, det);
  const auto img = image_slits(apply_aperture(pupil(0.2), 0.0, 4e-3, Opening::rightward),
                               Geometry{}, det, 0.0, {.seconds = t});
  const auto v = img.values();
  EXPECT_NEAR(*std::max_element(v.begin(), v.end()), 0.7e5, 1e-6 * 0.7e5);
}

TEST(Assignment, ContaminationExamples) {
  auto series_with = [](double wrong) {
    std::vector<double> v(1000, 0.0);
    v[500] = 1.0 - wrong;
    v[600] = wrong;
    ScanSeries s{ScanConfig{}, {}};
    s.records.push_back({0, 0.0, IntensityProfile(0.0, 13e-6, v), 499.5, 1.0, 0.0, 1.0});
    return s;
  };
  const auto a = assignment_probability(series_with(0.051), 20);
  EXPECT_NEAR(a.p_correct, 0.949, 1e-12);
  EXPECT_NEAR(a.distinguishability, 0.898, 1e-12);
  const auto b = assignment_probability(series_with(0.042), 20);
  EXPECT_NEAR(b.distinguishability, 0.916, 1e-12);
  // Flux within the guard band does not count as contamination.
  const auto c = assignment_probability(series_with(0.051), 150);
  EXPECT_EQ(c.contamination_fraction, 0.0);
  EXPECT_EQ(c.distinguishability, 1.0);
}

TEST(Assignment, ZeroFluxIsUndefined) {
  ScanSeries s{ScanConfig{}, {}};
  s.records.push_back({0, 0.0, IntensityProfile(0.0, 13e-6, std::vector<double>(64, 0.0)), 31.5,
                       0.0, 0.0, 0.0});
  EXPECT_THROW(assignment_probability(s, 20), NumericalError);
}

TEST(FluxOrdering, ReversesStepOrder) {
  const auto series = run_scan_from_pupil(pupil(0.2), Geometry{}, short_scan(4e-3, 5),
                                          DetectorConfig{});
  const auto f = flux_by_aperture_offset(series, Signal::left);
  ASSERT_EQ(f.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(f[i], series.records[4 - i].left_signal);
}

TEST(Config, ValidationAndEnumParsing) {
  ScanConfig s;
  s.step_m = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = ScanConfig{};
  s.exposure_s = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  DetectorConfig d;
  d.n_pixels = 32;
  EXPECT_THROW(d.validate(), ConfigError);
  EXPECT_EQ(parse_opening("leftward"), Opening::leftward);
  EXPECT_EQ(parse_midline("center"), MidlineMode::detector_center);
  EXPECT_EQ(parse_signal(to_string(Signal::right)), Signal::right);
  EXPECT_THROW(parse_opening("up"), ConfigError);
}
