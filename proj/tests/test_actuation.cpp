#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include <mrmlink/actuation.hpp>
#include <mrmlink/dft.hpp>

using namespace mrm;

TEST(Actuation, ResonanceShift) {
  OperatingPoint op;
  op.heater_detuning_pm = -20.0;
  op.bias_tuning_pm_per_v = 50.0;
  EXPECT_DOUBLE_EQ(resonance_shift_pm(op, 0.0), -20.0);
  EXPECT_DOUBLE_EQ(resonance_shift_pm(op, 2.0), 80.0);
  op.bias_tuning_quadratic_pm_per_v2 = 3.0;
  EXPECT_DOUBLE_EQ(resonance_shift_pm(op, 2.0), 92.0);
  EXPECT_THROW(resonance_shift_pm(op, NAN), InvalidArgument);
}

TEST(Actuation, RampHitsBothEnds) {
  OperatingPoint op;
  op.v_min = -1.0;
  op.v_max = 3.0;
  const auto w = make_waveform(RampSpec{33}, op);
  ASSERT_EQ(w.samples.size(), 33u);
  EXPECT_EQ(w.samples.front(), -1.0);
  EXPECT_EQ(w.samples.back(), 3.0);
  EXPECT_DOUBLE_EQ(w.samples[16], 1.0);
  EXPECT_THROW(make_waveform(RampSpec{1}, op), InvalidArgument);
}

TEST(Actuation, TwoToneIsCoherent) {
  OperatingPoint op;
  op.v_max = 4.0;
  TwoToneSpec s;
  s.guard_samples = 40;
  const auto w = make_waveform(s, op);
  ASSERT_EQ(w.samples.size(), 640u + 80u);
  EXPECT_EQ(w.record_begin, 40u);
  // Guards repeat the record periodically.
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(w.samples[i], w.samples[i + 640]);
    EXPECT_EQ(w.samples[w.samples.size() - 1 - i], w.samples[w.samples.size() - 1 - i - 640]);
  }
  std::span<const double> rec(w.samples.data() + w.record_begin, w.record_length);
  const auto p = one_sided_power(rec);
  // Bins 79 and 81 carry (A^2 / 2) each, A = FS/4 = 1 V.
  EXPECT_NEAR(p[79], 0.5, 1e-12);
  EXPECT_NEAR(p[81], 0.5, 1e-12);
  EXPECT_NEAR(p[0], 4.0, 1e-12);
  EXPECT_NEAR(p[80], 0.0, 1e-20);
  for (double v : w.samples) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 4.0);
  }
}

TEST(Actuation, TwoToneRejectsLeakageAndOverflow) {
  OperatingPoint op;
  TwoToneSpec s;
  s.f1_ghz = 7.95;
  EXPECT_THROW(make_waveform(s, op), InvalidArgument);
  s = TwoToneSpec{};
  s.amplitude_v = 0.3;
  EXPECT_THROW(make_waveform(s, op), InvalidArgument);
  s = TwoToneSpec{};
  s.sample_rate_ghz = 16.0;
  EXPECT_THROW(make_waveform(s, op), InvalidArgument);
}

TEST(Actuation, PamIsSeededAndUniform) {
  OperatingPoint op;
  op.v_max = 4.0;
  PamSpec s;
  s.n_symbols = 8000;
  s.seed = 42;
  const auto a = make_waveform(s, op);
  const auto b = make_waveform(s, op);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.symbols, b.symbols);
  s.seed = 43;
  EXPECT_NE(make_waveform(s, op).symbols, a.symbols);

  std::vector<int> counts(8, 0);
  for (auto sym : a.symbols) ++counts[sym];
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);

  const auto levels = detail::pam_levels(s, op);
  EXPECT_EQ(levels.front(), 0.0);
  EXPECT_EQ(levels.back(), 4.0);
  std::set<double> seen(a.samples.begin(), a.samples.end());
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_DOUBLE_EQ(a.sample_rate_ghz, 40.0 / 3.0 * 16.0);
}

TEST(Actuation, PamLevelsInsideFullScale) {
  OperatingPoint op;
  PamSpec s;
  s.level_lo_v = 0.2;
  s.level_hi_v = 0.6;
  s.levels = 4;
  const auto l = detail::pam_levels(s, op);
  EXPECT_DOUBLE_EQ(l[1] - l[0], l[3] - l[2]);
  s.level_hi_v = 1.5;
  EXPECT_THROW(make_waveform(s, op), InvalidArgument);
}

TEST(Actuation, UniformIndexStaysInRange) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 2u, 3u, 7u, 1000u}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(detail::uniform_index(rng, n), n);
  }
}
