#pragma once

// Electrical control of the resonance position and the drive waveforms used
// by every experiment (static ramps, coherent two-tone stimuli, PAM-N data).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace mrm {

/// Static heater offset plus linearized reverse-bias tuning of one ring.
/// The heater knob is expressed directly as a spectral detuning; the constant
/// cathode supply is folded into the drive voltage.
struct OperatingPoint {
  double heater_detuning_pm = 0.0;
  double bias_tuning_pm_per_v = 10.0;
  // Sensitivity-study hook; all modeled nonlinearity stays in the resonator
  // while this is zero.
  double bias_tuning_quadratic_pm_per_v2 = 0.0;
  double v_min = 0.0;
  double v_max = 1.0;

  void validate(const std::string& path = "operating_point") const {
    detail::require(std::isfinite(heater_detuning_pm),
                    path + ".heater_detuning_pm must be finite");
    detail::require(std::isfinite(bias_tuning_pm_per_v) &&
                        bias_tuning_pm_per_v != 0.0,
                    path + ".bias_tuning_pm_per_v must be finite and nonzero");
    detail::require(std::isfinite(bias_tuning_quadratic_pm_per_v2),
                    path + ".bias_tuning_quadratic_pm_per_v2 must be finite");
    detail::require(std::isfinite(v_min) && std::isfinite(v_max) && v_min < v_max,
                    path + ": v_min must be < v_max");
  }

  double full_scale_v() const { return v_max - v_min; }

  bool operator==(const OperatingPoint&) const = default;
};

/// Resonance shift in pm for drive voltage `v_drive`.
inline double resonance_shift_pm(const OperatingPoint& op, double v_drive) {
  detail::require(std::isfinite(v_drive), "resonance_shift: non-finite drive");
  return op.heater_detuning_pm + op.bias_tuning_pm_per_v * v_drive +
         op.bias_tuning_quadratic_pm_per_v2 * v_drive * v_drive;
}

struct RampSpec {
  std::size_t n_points = 513;

  bool operator==(const RampSpec&) const = default;
};

/// Two equal-amplitude tones on a common bias. `n_samples` is the coherent
/// record; `guard_samples` of periodic continuation are added on both sides
/// so delay edges can be discarded without breaking coherence.
struct TwoToneSpec {
  double f1_ghz = 7.9;
  double f2_ghz = 8.1;
  double sample_rate_ghz = 64.0;
  std::size_t n_samples = 640;
  std::size_t guard_samples = 0;
  std::optional<double> center_v;     // default: middle of the electrical FS
  std::optional<double> amplitude_v;  // per tone; default: FS / 4

  bool operator==(const TwoToneSpec&) const = default;
};

struct PamSpec {
  double symbol_rate_gbaud = 40.0 / 3.0;
  std::size_t levels = 8;
  std::size_t n_symbols = 512;
  std::size_t oversampling = 16;
  std::uint64_t seed = 1;
  std::optional<double> level_lo_v;  // default: v_min
  std::optional<double> level_hi_v;  // default: v_max

  bool operator==(const PamSpec&) const = default;
};

using WaveformSpec = std::variant<RampSpec, TwoToneSpec, PamSpec>;

inline constexpr const char* kPrngName = "mt19937_64";

struct DriveWaveform {
  std::vector<double> samples;  // volts
  double sample_rate_ghz = 1.0;
  WaveformSpec spec;
  // Coherent analysis record inside `samples` (whole record for ramp/pam).
  std::size_t record_begin = 0;
  std::size_t record_length = 0;
  std::vector<std::size_t> symbols;  // pam only
};

namespace detail {

inline double exact_bin(double f_ghz, double fs_ghz, std::size_t n,
                        const char* name) {
  const double bin = f_ghz * static_cast<double>(n) / fs_ghz;
  const double rounded = std::round(bin);
  require(std::abs(bin - rounded) <= 1e-9 * std::max(1.0, bin),
          std::string("two-tone: ") + name +
              " is not an integer bin of the record (spectral leakage)");
  return rounded;
}

// Uniform integer in [0, n) without modulo bias.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range) - 1;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return static_cast<std::size_t>(draw % range);
}

inline DriveWaveform make_ramp(const RampSpec& spec, const OperatingPoint& op) {
  require(spec.n_points >= 2, "ramp: n_points must be >= 2");
  DriveWaveform w;
  w.spec = spec;
  w.samples.resize(spec.n_points);
  const double n1 = static_cast<double>(spec.n_points - 1);
  for (std::size_t i = 0; i < spec.n_points; ++i) {
    const double t = static_cast<double>(i) / n1;
    w.samples[i] = (i + 1 == spec.n_points) ? op.v_max
                                            : op.v_min + t * (op.v_max - op.v_min);
  }
  w.record_length = spec.n_points;
  return w;
}

inline DriveWaveform make_two_tone(const TwoToneSpec& spec,
                                   const OperatingPoint& op) {
  require(spec.n_samples >= 16, "two-tone: n_samples must be >= 16");
  require(spec.f1_ghz > 0.0 && spec.f2_ghz > 0.0 && spec.f1_ghz != spec.f2_ghz,
          "two-tone: tones must be positive and distinct");
  require(spec.sample_rate_ghz > 2.0 * std::max(spec.f1_ghz, spec.f2_ghz),
          "two-tone: sample rate must exceed twice the highest tone");
  const double k1 = exact_bin(spec.f1_ghz, spec.sample_rate_ghz, spec.n_samples, "f1");
  const double k2 = exact_bin(spec.f2_ghz, spec.sample_rate_ghz, spec.n_samples, "f2");

  const double center = spec.center_v.value_or(0.5 * (op.v_min + op.v_max));
  const double amp = spec.amplitude_v.value_or(0.25 * op.full_scale_v());
  require(std::isfinite(center) && std::isfinite(amp) && amp > 0.0,
          "two-tone: amplitude must be > 0");
  require(center - 2.0 * amp >= op.v_min - 1e-12 &&
              center + 2.0 * amp <= op.v_max + 1e-12,
          "two-tone: peak swing overflows the electrical full scale");

  DriveWaveform w;
  w.spec = spec;
  w.sample_rate_ghz = spec.sample_rate_ghz;
  const std::size_t total = spec.n_samples + 2 * spec.guard_samples;
  w.samples.resize(total);
  w.record_begin = spec.guard_samples;
  w.record_length = spec.n_samples;
  const double n = static_cast<double>(spec.n_samples);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < total; ++i) {
    // Phase reduced modulo the record so guard samples repeat exactly.
    const auto idx = static_cast<long long>(i) - static_cast<long long>(spec.guard_samples);
    const long long nn = static_cast<long long>(spec.n_samples);
    const double m = static_cast<double>(((idx % nn) + nn) % nn);
    const double p1 = std::fmod(k1 * m, n) / n;
    const double p2 = std::fmod(k2 * m, n) / n;
    const double v = center + amp * (std::sin(two_pi * p1) + std::sin(two_pi * p2));
    w.samples[i] = std::clamp(v, op.v_min, op.v_max);
  }
  return w;
}

inline std::vector<double> pam_levels(const PamSpec& spec, const OperatingPoint& op) {
  const double lo = spec.level_lo_v.value_or(op.v_min);
  const double hi = spec.level_hi_v.value_or(op.v_max);
  std::vector<double> levels(spec.levels);
  const double n1 = static_cast<double>(spec.levels - 1);
  for (std::size_t k = 0; k < spec.levels; ++k) {
    levels[k] = (k + 1 == spec.levels) ? hi : lo + (hi - lo) * static_cast<double>(k) / n1;
  }
  return levels;
}

inline DriveWaveform make_pam(const PamSpec& spec, const OperatingPoint& op) {
  require(spec.levels >= 2, "pam: levels must be >= 2");
  require(spec.n_symbols >= 1, "pam: n_symbols must be >= 1");
  require(spec.oversampling >= 2, "pam: oversampling must be >= 2");
  require(spec.symbol_rate_gbaud > 0.0 && std::isfinite(spec.symbol_rate_gbaud),
          "pam: symbol rate must be > 0");
  const double lo = spec.level_lo_v.value_or(op.v_min);
  const double hi = spec.level_hi_v.value_or(op.v_max);
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
          "pam: level_lo_v must be < level_hi_v");
  require(lo >= op.v_min - 1e-12 && hi <= op.v_max + 1e-12,
          "pam: levels overflow the electrical full scale");

  const auto levels = pam_levels(spec, op);
  std::mt19937_64 rng(spec.seed);
  DriveWaveform w;
  w.spec = spec;
  w.sample_rate_ghz = spec.symbol_rate_gbaud * static_cast<double>(spec.oversampling);
  w.symbols.resize(spec.n_symbols);
  w.samples.reserve(spec.n_symbols * spec.oversampling);
  for (std::size_t s = 0; s < spec.n_symbols; ++s) {
    const std::size_t sym = uniform_index(rng, spec.levels);
    w.symbols[s] = sym;
    for (std::size_t k = 0; k < spec.oversampling; ++k) w.samples.push_back(levels[sym]);
  }
  w.record_length = w.samples.size();
  return w;
}

}  // namespace detail

/// Generates the drive for `spec` inside the electrical full scale of `op`.
inline DriveWaveform make_waveform(const WaveformSpec& spec, const OperatingPoint& op) {
  op.validate();
  return std::visit(
      [&](const auto& s) -> DriveWaveform {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, RampSpec>) {
          return detail::make_ramp(s, op);
        } else if constexpr (std::is_same_v<S, TwoToneSpec>) {
          return detail::make_two_tone(s, op);
        } else {
          return detail::make_pam(s, op);
        }
      },
      spec);
}

}  // namespace mrm
