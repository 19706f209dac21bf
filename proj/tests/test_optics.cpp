#include "oracles/oracles.hpp"

#include <slitscan/error.hpp>
#include <slitscan/geometry.hpp>
#include <slitscan/optics.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace slitscan;

namespace {

double max_abs(std::span<const Complex> v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, std::abs(c));
  return m;
}

SampledField gaussian(double w0, std::size_t n, double half_span) {
  const GridSpec g{n, half_span};
  std::vector<Complex> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.origin() + static_cast<double>(i) * g.pitch();
    a[i] = std::exp(-x * x / (w0 * w0));
  }
  return {g.origin(), g.pitch(), std::move(a)};
}

} // namespace

TEST(Grid, DefaultGridPutsTheCentreSampleOnZero) {
  const GridSpec g;
  EXPECT_EQ(g.samples, 65536u);
  EXPECT_DOUBLE_EQ(g.origin() + static_cast<double>(g.samples / 2) * g.pitch(), 0.0);
}

TEST(Field, RejectsBadGrids) {
  EXPECT_THROW(SampledField(0.0, 0.0, std::vector<Complex>(4)), ConfigError);
  EXPECT_THROW(SampledField(0.0, 1.0, std::vector<Complex>(1)), ConfigError);
  EXPECT_THROW(IntensityProfile(0.0, 1.0, {1.0, -1.0}), DataError);
  EXPECT_NO_THROW(IntensityProfile(0.0, 1.0, {1.0, -1.0}, true));
}

TEST(DoubleSlit, BlocksHaveTheSlitWidthAndSit124umOffAxis) {
  const Geometry geom;
  const auto f = double_slit_field(geom, GridSpec{}, 0.0);
  double area_r = 0.0, area_l = 0.0, mom_r = 0.0, mom_l = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f.position(i);
    const double a = f.amplitudes()[i].real();
    EXPECT_EQ(f.amplitudes()[i].imag(), 0.0);
    (x > 0 ? area_r : area_l) += a * f.pitch();
    (x > 0 ? mom_r : mom_l) += a * x * f.pitch();
  }
  EXPECT_NEAR(area_r, 89e-6, 1e-15);
  EXPECT_NEAR(area_l, 89e-6, 1e-15);
  // Edge cells carry their coverage at the cell centre.
  const double tol = f.pitch() * f.pitch() / 89e-6;
  EXPECT_NEAR(mom_r / area_r, 124e-6, tol);
  EXPECT_NEAR(mom_l / area_l, -124e-6, tol);
}

TEST(DoubleSlit, UntiltedFieldIsEven) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.0);
  const std::size_t c = f.size() / 2;
  for (std::size_t k = 1; k < c; ++k)
    ASSERT_EQ(f.amplitudes()[c + k], f.amplitudes()[c - k]) << k;
}

TEST(DoubleSlit, TiltSetsThePowerRatio) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.2);
  double pr = 0.0, pl = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    (f.position(i) > 0 ? pr : pl) += std::norm(f.amplitudes()[i]);
  EXPECT_NEAR(pr / pl, (1.1 / 0.9) * (1.1 / 0.9), 1e-12);
  EXPECT_NEAR(pr / pl, 1.494, 1e-3);
}

TEST(DoubleSlit, RejectsCoarseOrShortGrids) {
  EXPECT_THROW(double_slit_field(Geometry{}, GridSpec{4096, 20e-3}), ConfigError);
  EXPECT_THROW(double_slit_field(Geometry{}, GridSpec{1024, 0.15e-3}), ConfigError);
  EXPECT_THROW(double_slit_field(Geometry{}, GridSpec{}, 3.0), ConfigError);
}

TEST(Fresnel, ZeroDistanceIsTheIdentity) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.2);
  const auto g = propagate_fresnel(f, 0.0, 650e-9);
  EXPECT_EQ(g.origin(), f.origin());
  EXPECT_EQ(g.pitch(), f.pitch());
  EXPECT_TRUE(std::equal(f.amplitudes().begin(), f.amplitudes().end(), g.amplitudes().begin()));
  EXPECT_THROW(propagate_fresnel(f, 0.0, 650e-9, {.output_samples = 2 * f.size()}), ConfigError);
}

TEST(Fresnel, ConservesPower) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.2);
  for (const double z : {0.25, 0.58, -0.58}) {
    const auto g = propagate_fresnel(f, z, 650e-9);
    EXPECT_NEAR(g.power() / f.power(), 1.0, 1e-10) << z;
  }
  const auto padded = propagate_fresnel(f, 0.58, 650e-9, {.output_samples = 2 * f.size()});
  EXPECT_NEAR(padded.power() / f.power(), 1.0, 1e-10);
}

TEST(Fresnel, OutputPitchFollowsTheSamplingRelation) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.0);
  const auto g = propagate_fresnel(f, 0.58, 650e-9, {.output_samples = 131072, .output_center = 1e-3});
  EXPECT_NEAR(g.pitch(), 650e-9 * 0.58 / (131072 * f.pitch()), 1e-20);
  EXPECT_NEAR(g.center(), 1e-3, 1e-15);
}

TEST(Fresnel, IsLinear) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.0);
  const auto g = gaussian(0.3e-3, GridSpec{}.samples, 20e-3);
  const Complex alpha(0.3, -1.2), beta(2.0, 0.5);
  std::vector<Complex> mix(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    mix[i] = alpha * f.amplitudes()[i] + beta * g.amplitudes()[i];
  const SampledField h(f.origin(), f.pitch(), mix);
  const auto pf = propagate_fresnel(f, 0.58, 650e-9);
  const auto pg = propagate_fresnel(g, 0.58, 650e-9);
  const auto ph = propagate_fresnel(h, 0.58, 650e-9);
  double err = 0.0;
  for (std::size_t i = 0; i < ph.size(); ++i)
    err = std::max(err, std::abs(ph.amplitudes()[i] - alpha * pf.amplitudes()[i] -
                                 beta * pg.amplitudes()[i]));
  EXPECT_LT(err / max_abs(ph.amplitudes()), 1e-10);
}

TEST(Fresnel, ForwardThenBackwardIsTheIdentity) {
  const auto f = double_slit_field(Geometry{}, GridSpec{}, 0.2);
  const auto g = propagate_fresnel(f, 0.58, 650e-9);
  const auto back = propagate_fresnel(g, -0.58, 650e-9, {.output_center = f.center()});
  ASSERT_EQ(back.size(), f.size());
  EXPECT_NEAR(back.pitch(), f.pitch(), 1e-18);
  EXPECT_NEAR(back.origin(), f.origin(), 1e-15);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    err = std::max(err, std::abs(back.amplitudes()[i] - f.amplitudes()[i]));
  EXPECT_LT(err / max_abs(f.amplitudes()), 1e-8);
}

TEST(Fresnel, UntiltedPupilIntensityIsEven) {
  const auto g = propagate_fresnel(double_slit_field(Geometry{}, GridSpec{}, 0.0), 0.58, 650e-9);
  const auto a = g.amplitudes();
  const std::size_t c = a.size() / 2;
  ASSERT_NEAR(g.position(c), 0.0, 1e-15);
  double peak = 0.0;
  for (const auto& v : a) peak = std::max(peak, std::norm(v));
  for (std::size_t k = 1; k < c; ++k)
    ASSERT_NEAR(std::norm(a[c + k]), std::norm(a[c - k]), 1e-10 * peak) << k;
}

TEST(Fresnel, MatchesTheGaussianBeamClosedForm) {
  const double lambda = 650e-9;
  for (const double z : {0.1, 0.58, 2.0}) {
    const auto f = gaussian(0.25e-3, 16384, 10e-3);
    const auto g = propagate_fresnel(f, z, lambda);
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ref = oracle::gaussian_beam(g.position(i), 0.25e-3, lambda, z);
      err = std::max(err, std::abs(g.amplitudes()[i] - ref));
      peak = std::max(peak, std::abs(ref));
    }
    EXPECT_LT(err / peak, 1e-9) << "z = " << z;

    // Intensity stays Gaussian with 1/e^2 radius w(z) = w0 sqrt(1 + (z/zR)^2).
    const double zr = std::numbers::pi * 0.25e-3 * 0.25e-3 / lambda;
    const double wz = 0.25e-3 * std::sqrt(1.0 + (z / zr) * (z / zr));
    double m0 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = std::norm(g.amplitudes()[i]);
      m0 += p;
      m2 += p * g.position(i) * g.position(i);
    }
    EXPECT_NEAR(std::sqrt(m2 / m0), 0.5 * wz, 1e-6 * wz) << "z = " << z;
  }
}

TEST(Fresnel, PupilFringePeriodIsLambdaLOverD) {
  const Geometry geom;
  const auto g = propagate_fresnel(double_slit_field(geom, GridSpec{}, 0.0), 0.58, 650e-9);
  // First interference null next to the axis sits at W/2.
  const std::size_t c = g.size() / 2;
  std::size_t k = c;
  while (std::norm(g.amplitudes()[k + 1]) < std::norm(g.amplitudes()[k]) ||
         g.position(k) < 0.3e-3)
    ++k;
  EXPECT_NEAR(2.0 * g.position(k), fringe_scale(geom), 0.02 * fringe_scale(geom));
  EXPECT_NEAR(fringe_scale(geom), 1.52e-3, 0.01e-3);
}

TEST(Fresnel, AgreesWithTheFarFieldOracleAt58cm) {
  const Geometry geom;
  ASSERT_TRUE(far_field_applicable(geom, 0.58));
  const auto g = propagate_fresnel(double_slit_field(geom, GridSpec{}, 0.0), 0.58, 650e-9);
  const double i0 = std::norm(g.amplitudes()[g.size() / 2]);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i);
    if (std::abs(x) > 10e-3) continue;
    const double d = std::norm(g.amplitudes()[i]) / i0 -
                     oracle::two_slit_far_field(x, 650e-9, 0.58, 89e-6, 248e-6);
    ss += d * d;
    ++n;
  }
  EXPECT_LT(std::sqrt(ss / static_cast<double>(n)), 0.01);
}

TEST(Fresnel, RejectsAliasedPropagationNamingTheSampleCount) {
  // A 30 mm top hat over a 38.6 mm output window wraps into the edges.
  const GridSpec grid{4096, 20e-3};
  std::vector<Complex> a(grid.samples);
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = std::abs(grid.origin() + static_cast<double>(i) * grid.pitch()) < 15e-3 ? 1.0 : 0.0;
  const SampledField f(grid.origin(), grid.pitch(), a);
  try {
    (void)propagate_fresnel(f, 0.58, 650e-9);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(min_samples_for_chirp(40e-3, 0.58, 650e-9))),
              std::string::npos)
        << msg;
  }
  // 0.04^2 / (650e-9 * 0.58) = 4244.03
  EXPECT_EQ(min_samples_for_chirp(40e-3, 0.58, 650e-9), 4245u);
}

TEST(FarField, ExamplesOnAxisAndAtTheNulls) {
  const Geometry geom;
  EXPECT_DOUBLE_EQ(fraunhofer_intensity(geom, 0.58, 0.0), 1.0);
  const double w = 650e-9 * 0.58 / 248e-6;
  EXPECT_LT(fraunhofer_intensity(geom, 0.58, 0.5 * w), 1e-25);
  const double env = 650e-9 * 0.58 / 89e-6;
  EXPECT_NEAR(env, 4.24e-3, 0.005e-3);
  EXPECT_LT(fraunhofer_intensity(geom, 0.58, env), 1e-25);
  EXPECT_DOUBLE_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(std::numbers::pi), 0.0, 1e-16);
  for (const double x : {-3e-3, 0.4e-3, 2.2e-3, 7e-3})
    EXPECT_NEAR(fraunhofer_intensity(geom, 0.58, x),
                oracle::two_slit_far_field(x, 650e-9, 0.58, 89e-6, 248e-6), 1e-12);
}

TEST(FarField, ApplicabilityFollowsTheFresnelNumber) {
  const Geometry geom;
  EXPECT_NEAR(fresnel_number(geom, 0.58), 0.163, 0.001);
  EXPECT_TRUE(far_field_applicable(geom, 0.58));
  EXPECT_FALSE(far_field_applicable(geom, 0.05));
}

TEST(IntegratePower, IsAdditiveOverAdjacentIntervals) {
  const auto g = propagate_fresnel(double_slit_field(Geometry{}, GridSpec{}, 0.2), 0.58, 650e-9);
  const double a = integrate_power(g, -3.3e-3, 0.71e-3);
  const double b = integrate_power(g, 0.71e-3, 4.05e-3);
  const double c = integrate_power(g, -3.3e-3, 4.05e-3);
  EXPECT_NEAR(a + b, c, 1e-12 * c);
  EXPECT_NEAR(integrate_power(g, -1.0, 1.0), g.power(), 1e-12 * g.power());
  EXPECT_EQ(integrate_power(g, 1e-3, 1e-3), 0.0);
}

TEST(Geometry, FringeScaleAndHomogeneity) {
  Geometry geom;
  EXPECT_NEAR(fringe_scale(geom), 1.520e-3, 1.520e-6);
  const double w = fringe_scale(geom);
  Geometry wide = geom;
  wide.slit_sep_m *= 2.0;
  wide.slit_width_m *= 2.0;
  EXPECT_DOUBLE_EQ(fringe_scale(wide), 0.5 * w);
  Geometry far = geom;
  far.l_slits_lens_m *= 2.0;
  EXPECT_DOUBLE_EQ(fringe_scale(far), 2.0 * w);
}

TEST(Geometry, DefaultsSatisfyTheLensEquation) {
  const Geometry geom;
  EXPECT_LT(lens_equation_defect(geom), 0.01);
  EXPECT_NEAR(magnification(geom), 0.63 / 0.58, 1e-15);
}

TEST(Geometry, ValidateRejectsBadLayouts) {
  Geometry g;
  g.wavelength_m = -1.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = Geometry{};
  g.slit_sep_m = g.slit_width_m;
  EXPECT_THROW(g.validate(), ConfigError);
  g = Geometry{};
  g.focal_m = 0.0;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(ConstraintReport, Examples) {
  const Geometry geom;
  const auto r4 = constraint_report(geom, 4e-3);
  EXPECT_NEAR(r4.aperture_over_fringe, 2.63, 0.005);
  EXPECT_EQ(r4.verdict, "conflict zone");
  const auto r5 = constraint_report(geom, 5e-3);
  EXPECT_NEAR(r5.aperture_over_fringe, 3.29, 0.005);
  EXPECT_EQ(r5.verdict, "separates-slits");
  const auto rw = constraint_report(geom, fringe_scale(geom));
  EXPECT_DOUBLE_EQ(rw.aperture_over_fringe, 1.0);
  EXPECT_DOUBLE_EQ(rw.aperture_times_angle, 1.0);
  EXPECT_EQ(constraint_report(geom, 0.3e-3).verdict, "resolves-fringes");
}
