#pragma once

// End-to-end analyses of one link architecture: static transfer + INL inside
// the full-scale window, two-tone IMD at equal output full scale, and PAM-N
// level metrics with an eye raster.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "actuation.hpp"
#include "dual_link.hpp"
#include "metrics.hpp"

namespace mrm {

struct AnalysisSettings {
  double g_lo = 0.25;
  double g_hi = 0.75;
  std::size_t transfer_points = 513;
  std::size_t pam_levels = 8;
  // Tone frequencies, sample rate and record length; center/amplitude are
  // derived from the window unless set explicitly.
  TwoToneSpec two_tone;
  // Per-tone amplitude as a fraction of the window's electrical span. 0.25
  // makes the two-tone peak-to-peak swing cover the window exactly.
  double tone_swing_fraction = 0.25;
  std::optional<double> noise_floor_db_hz;
  PamSpec pam;
  std::size_t eye_width = 256;
  std::size_t eye_height = 128;

  void validate() const {
    detail::require(0.0 <= g_lo && g_lo < g_hi && g_hi <= 1.0, "analysis.window must satisfy 0 <= lo < hi <= 1");
    detail::require(transfer_points >= 33, "analysis.transfer_points must be >= 33");
    detail::require(pam_levels >= 2, "analysis.pam_levels must be >= 2");
    detail::require(tone_swing_fraction > 0.0 && tone_swing_fraction <= 0.25,
                    "analysis.tone_swing_fraction must lie in (0, 0.25]");
    detail::require(pam.oversampling >= 16, "pam.oversampling must be >= 16 for eye rendering");
    detail::require(eye_width >= 2 && eye_height >= 2, "analysis.eye raster must be at least 2x2");
  }

  bool operator==(const AnalysisSettings&) const = default;
};

struct StaticAnalysis {
  TransferCurve curve;
  WindowedCurve window;
  LinearityReport linearity;
};

inline StaticAnalysis analyze_static(const LinkConfig& cfg, Architecture arch, const AnalysisSettings& s) {
  StaticAnalysis a;
  a.curve = static_transfer(cfg, arch, s.transfer_points);
  a.curve.g_lo = s.g_lo;
  a.curve.g_hi = s.g_hi;
  a.window = fs_window(a.curve, s.g_lo, s.g_hi);
  a.linearity = inl(a.window.curve);
  return a;
}

struct TwoToneResult {
  DriveWaveform drive;
  LinkOutput link;
  SpectrumReport spectrum;
  double center_v = 0.0;
  double amplitude_v = 0.0;
};

namespace detail {

inline std::size_t delay_guard_samples(const LinkConfig& cfg, double fs_ghz) {
  const double d = std::max(std::abs(cfg.fiber_delay_thru_ps), std::abs(cfg.fiber_delay_drop_ps)) * fs_ghz * 1e-3;
  if (d == 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(d)) + cfg.delay_kernel_half_width + 1;
}

}  // namespace detail

/// Two-tone test biased at the window center with a swing proportional to the
/// window span, so both architectures are compared at equal output full scale.
inline TwoToneResult run_two_tone(const LinkConfig& cfg, Architecture arch, const AnalysisSettings& s,
                                  const WindowedCurve& window) {
  TwoToneResult r;
  TwoToneSpec spec = s.two_tone;
  if (!spec.center_v) spec.center_v = 0.5 * (window.v_start + window.v_end);
  if (!spec.amplitude_v) spec.amplitude_v = s.tone_swing_fraction * window.span_v;
  if (spec.guard_samples == 0) spec.guard_samples = detail::delay_guard_samples(cfg, spec.sample_rate_ghz);
  r.center_v = *spec.center_v;
  r.amplitude_v = *spec.amplitude_v;
  r.drive = make_waveform(spec, cfg.ring1.op);
  r.link = simulate_link(cfg, r.drive, arch);
  const std::size_t start = std::max(r.drive.record_begin, r.link.valid_begin);
  detail::require(start + r.drive.record_length <= r.link.valid_end,
                  "two-tone: delay edges leave no complete coherent record");
  std::span<const double> rec(r.link.v_out.data() + start, r.drive.record_length);
  r.spectrum = two_tone_analysis(rec, spec.sample_rate_ghz, spec.f1_ghz, spec.f2_ghz, s.noise_floor_db_hz);
  return r;
}

struct PamResult {
  LinearityReport static_levels;  // evaluated on the static map (authoritative)
  LinearityReport eye_levels;     // recovered from simulated eye centers
  EyeRaster raster;
  DriveWaveform drive;
};

inline PamResult run_pam(const LinkConfig& cfg, Architecture arch, const AnalysisSettings& s,
                         const WindowedCurve& window) {
  PamResult r;
  r.static_levels = pam_level_report(gain_model(cfg, arch), window, s.pam_levels);
  PamSpec spec = s.pam;
  spec.levels = s.pam_levels;
  spec.level_lo_v = std::min(window.v_start, window.v_end);
  spec.level_hi_v = std::max(window.v_start, window.v_end);
  r.drive = make_waveform(spec, cfg.ring1.op);
  const auto link = simulate_link(cfg, r.drive, arch);
  r.eye_levels = level_report(eye_center_levels(link, r.drive));
  r.raster = render_eye(link, spec.oversampling, s.eye_width, s.eye_height);
  return r;
}

}  // namespace mrm
