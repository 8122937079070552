#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <mrmlink/resonator.hpp>

using namespace mrm;

namespace {

constexpr double kPi = std::numbers::pi;

// Field picture: sum the round trips explicitly instead of using the closed
// form. Terms are added until they fall below 1e-18.
struct SeriesPorts {
  double thru;
  double drop;
};

SeriesPorts series_ports(double phi, double r1, double r2, double a) {
  const double k1 = std::sqrt(1.0 - r1 * r1);
  const double k2 = std::sqrt(1.0 - r2 * r2);
  const std::complex<double> rt = r1 * r2 * a * std::polar(1.0, phi);
  std::complex<double> geo = 0.0;
  std::complex<double> term = 1.0;
  for (int n = 0; n < 200000 && std::abs(term) > 1e-18; ++n) {
    geo += term;
    term *= rt;
  }
  const std::complex<double> et = r1 - k1 * k1 * r2 * a * std::polar(1.0, phi) * geo;
  const std::complex<double> ed = -k1 * k2 * std::sqrt(a) * std::polar(1.0, 0.5 * phi) * geo;
  return {std::norm(et), std::norm(ed)};
}

// Half-depth phase: T = 1 - K / den, so the midpoint of T(0) and T(pi) is
// the midpoint of 1/den.
double half_depth_phase(double r1, double r2, double a) {
  const double x = r1 * r2 * a;
  const double inv = 0.5 * (1.0 / ((1 - x) * (1 - x)) + 1.0 / ((1 + x) * (1 + x)));
  const double den = 1.0 / inv;
  return std::acos((1.0 + x * x - den) / (2.0 * x));
}

}  // namespace

TEST(Resonator, MatchesRoundTripSeries) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(0.5, 0.95);
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const double r1 = r(rng), r2 = r(rng), a = r(rng), phi = ph(rng);
    const auto s = series_ports(phi, r1, r2, a);
    EXPECT_NEAR(thru_gain(phi, r1, r2, a), s.thru, 1e-12);
    EXPECT_NEAR(drop_gain(phi, r1, r2, a), s.drop, 1e-12);
  }
}

TEST(Resonator, AllPassLimit) {
  // r2 = 1 removes the drop bus.
  for (double phi : {0.0, 0.3, 1.0, kPi}) {
    EXPECT_DOUBLE_EQ(drop_gain(phi, 0.9, 1.0, 0.95), 0.0);
    const double c = std::cos(phi);
    const double want = (0.95 * 0.95 - 2 * 0.9 * 0.95 * c + 0.81) / (1 - 2 * 0.9 * 0.95 * c + 0.81 * 0.9025);
    EXPECT_NEAR(thru_gain(phi, 0.9, 1.0, 0.95), want, 1e-14);
  }
}

TEST(Resonator, RandomPropertyDraws) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.01, 0.999);
  std::uniform_real_distribution<double> ph(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const double r1 = u(rng), r2 = u(rng), a = u(rng), phi = ph(rng);
    const double t = thru_gain(phi, r1, r2, a);
    const double d = drop_gain(phi, r1, r2, a);
    ASSERT_GE(t, -1e-12);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(t + d, 1.0 + 1e-12);
    ASSERT_NEAR(thru_gain(phi + 2 * kPi, r1, r2, a), t, 1e-12);
    ASSERT_NEAR(thru_gain(-phi, r1, r2, a), t, 1e-14);
    ASSERT_NEAR(thru_gain(phi, r1, r2, 1.0) + drop_gain(phi, r1, r2, 1.0), 1.0, 1e-12);
  }
}

TEST(Resonator, CriticalCouplingNull) {
  EXPECT_NEAR(thru_gain(0.0, 0.95, 1.0, 0.95), 0.0, 1e-12);
  EXPECT_NEAR(thru_gain(0.0, 0.9 * 0.97, 0.9, 0.97), 0.0, 1e-12);
  EXPECT_GT(thru_gain(0.0, 0.97, 0.97, 0.99), 1e-4);
}

TEST(Resonator, FreeSpectralRange) {
  RingDevice d;
  d.round_trip_length_um = 100.0;
  d.group_index = 4.0;
  EXPECT_NEAR(fsr_pm(d, 1310.0), 1310.0 * 1310.0 / 400.0, 1e-9);
  EXPECT_NEAR(round_trip_phase(1310.0 + fsr_pm(d, 1310.0) * 1e-3, d, 1310.0), 2 * kPi, 1e-12);
  // Shifting the resonance and the laser together leaves the phase unchanged.
  EXPECT_NEAR(round_trip_phase(1310.3, d, 1310.1), round_trip_phase(1310.2, d, 1310.0), 1e-9);
  EXPECT_TRUE(within_first_order_range(d, 1310.5));
  EXPECT_FALSE(within_first_order_range(d, 1320.0));
}

TEST(Resonator, LoadedQMatchesClosedForm) {
  for (double r : {0.9, 0.95, 0.97, 0.99}) {
    for (double a : {0.9, 0.99, 1.0}) {
      RingDevice d;
      d.self_coupling_thru = r;
      d.self_coupling_drop = r;
      d.round_trip_amplitude = a;
      const double fsr_nm = fsr_pm(d, d.resonance_wavelength_nm) * 1e-3;
      const double fwhm_nm = 2.0 * half_depth_phase(r, r, a) / (2 * kPi) * fsr_nm;
      EXPECT_NEAR(loaded_q(d) / (d.resonance_wavelength_nm / fwhm_nm), 1.0, 1e-8) << r << " " << a;
    }
  }
}

TEST(Resonator, LoadedQMonotoneAndConverged) {
  double prev = 0.0;
  for (double r : {0.8, 0.9, 0.95, 0.97, 0.99}) {
    RingDevice d;
    d.self_coupling_thru = r;
    d.self_coupling_drop = r;
    const double q = loaded_q(d, 512);
    EXPECT_GT(q, prev);
    EXPECT_NEAR(q / loaded_q(d, 2048), 1.0, 1e-8);
    prev = q;
  }
  prev = 0.0;
  for (double a : {0.8, 0.9, 0.99, 1.0}) {
    RingDevice d;
    d.round_trip_amplitude = a;
    const double q = loaded_q(d);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(Resonator, Validation) {
  RingDevice d;
  d.self_coupling_thru = 1.0;
  EXPECT_THROW(d.validate(), InvalidArgument);
  d = RingDevice{};
  d.group_index = 0.0;
  EXPECT_THROW(fsr_pm(d, 1310.0), InvalidArgument);
  EXPECT_THROW(thru_gain(0.0, 0.5, 0.5, 1.5), InvalidArgument);
  EXPECT_THROW(drop_gain(0.0, 0.0, 0.5, 0.5), InvalidArgument);
}
