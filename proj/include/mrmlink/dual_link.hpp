#pragma once

// Dual-ring link: a notch ring (through port) and a bandpass ring (drop port)
// share the same electrical drive; their output powers are detected by a
// dual-input photodiode and summed incoherently, then converted by an ideal
// TIA. Two topologies are supported:
//
//   two_fiber_single_lambda   one laser split into both rings, two fibers
//   single_fiber_dual_lambda  one laser per ring, both carried on one fiber
//
// The optical response is quasi-static: every time sample is evaluated
// through the static transfer function, then each path is delayed by its
// fiber latency before summation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actuation.hpp"
#include "errors.hpp"
#include "resonator.hpp"

namespace mrm {

enum class Topology { two_fiber_single_lambda, single_fiber_dual_lambda };

// Which ports reach the photodiode.
enum class Architecture { notch_only, dual };

struct Laser {
  double wavelength_nm = 1310.0;
  double power_mw = 1.0;

  bool operator==(const Laser&) const = default;
};

struct RingChannel {
  RingDevice device;
  OperatingPoint op;

  bool operator==(const RingChannel&) const = default;
};

struct LinkConfig {
  RingChannel ring1;  // through port used
  RingChannel ring2;  // drop port used
  Topology topology = Topology::two_fiber_single_lambda;
  Laser laser1;
  Laser laser2;  // single_fiber_dual_lambda only
  // Ring-2 injection relative to its laser: two-fiber topology splits
  // (1 + w) * P_in so that ring 1 sees P_in and ring 2 sees w * P_in.
  double drop_power_weight = 1.0;
  double fiber_delay_thru_ps = 0.0;
  double fiber_delay_drop_ps = 0.0;
  double pd_responsivity_a_per_w = 1.0;
  double tia_transimpedance_ohm = 1000.0;
  double min_spacing_linewidths = 5.0;
  bool dual_lambda_crosstalk = false;
  std::optional<double> lowpass_cutoff_ghz;
  std::size_t delay_kernel_half_width = 16;

  void validate() const;

  bool operator==(const LinkConfig&) const = default;
};

struct PortPowers {
  double thru_mw = 0.0;
  double drop_mw = 0.0;
};

namespace detail {

inline bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Largest notch/peak linewidth of the two rings, in nm.
inline double widest_linewidth_nm(const LinkConfig& cfg) {
  double widest = 0.0;
  for (const auto* ch : {&cfg.ring1, &cfg.ring2}) {
    try {
      widest = std::max(widest, linewidth_pm(ch->device) * 1e-3);
    } catch (const DegenerateResponse&) {
    }
  }
  return widest;
}

}  // namespace detail

inline void LinkConfig::validate() const {
  ring1.device.validate("ring1.device");
  ring2.device.validate("ring2.device");
  ring1.op.validate("ring1.operating_point");
  ring2.op.validate("ring2.operating_point");
  detail::require(
      ring1.op.v_min == ring2.op.v_min && ring1.op.v_max == ring2.op.v_max,
      "ring1 and ring2 share one drive and must have the same v_min/v_max");
  detail::require(detail::positive_finite(laser1.wavelength_nm),
                  "laser1.wavelength_nm must be > 0");
  detail::require(detail::positive_finite(laser1.power_mw),
                  "laser1.power_mw must be > 0");
  detail::require(detail::positive_finite(drop_power_weight),
                  "link.drop_power_weight must be > 0");
  detail::require(detail::positive_finite(pd_responsivity_a_per_w),
                  "link.pd_responsivity_a_per_w must be > 0");
  detail::require(detail::positive_finite(tia_transimpedance_ohm),
                  "link.tia_transimpedance_ohm must be > 0");
  detail::require(std::isfinite(fiber_delay_thru_ps) &&
                      std::isfinite(fiber_delay_drop_ps),
                  "link fiber delays must be finite");
  detail::require(delay_kernel_half_width >= 1,
                  "link.delay_kernel_half_width must be >= 1");
  if (lowpass_cutoff_ghz) {
    detail::require(detail::positive_finite(*lowpass_cutoff_ghz),
                    "link.lowpass_cutoff_ghz must be > 0");
  }
  if (topology == Topology::single_fiber_dual_lambda) {
    detail::require(detail::positive_finite(laser2.wavelength_nm),
                    "laser2.wavelength_nm must be > 0");
    detail::require(detail::positive_finite(laser2.power_mw),
                    "laser2.power_mw must be > 0");
    detail::require(fiber_delay_thru_ps == fiber_delay_drop_ps,
                    "single-fiber topology forces equal path delays");
    detail::require(std::isfinite(min_spacing_linewidths) && min_spacing_linewidths >= 0.0,
                    "link.min_spacing_linewidths must be >= 0");
    const double spacing = std::abs(laser1.wavelength_nm - laser2.wavelength_nm);
    const double needed = min_spacing_linewidths * detail::widest_linewidth_nm(*this);
    detail::require(spacing >= needed,
                    "laser1/laser2 spacing " + std::to_string(spacing) +
                        " nm is below the required " + std::to_string(needed) + " nm");
  }
}

namespace detail {

inline double ring_phase(const RingChannel& ch, double wavelength_nm, double v) {
  const double res = ch.device.resonance_wavelength_nm + resonance_shift_pm(ch.op, v) * 1e-3;
  return round_trip_phase(wavelength_nm, ch.device, res);
}

inline double ring2_injection_mw(const LinkConfig& cfg) {
  const double base = cfg.topology == Topology::two_fiber_single_lambda
                          ? cfg.laser1.power_mw
                          : cfg.laser2.power_mw;
  return cfg.drop_power_weight * base;
}

inline PortPowers port_powers_unchecked(const LinkConfig& cfg, double v) {
  PortPowers out;
  if (cfg.topology == Topology::two_fiber_single_lambda) {
    const double lam = cfg.laser1.wavelength_nm;
    out.thru_mw = cfg.laser1.power_mw * thru_gain(ring_phase(cfg.ring1, lam, v), cfg.ring1.device);
    out.drop_mw = ring2_injection_mw(cfg) * drop_gain(ring_phase(cfg.ring2, lam, v), cfg.ring2.device);
    return out;
  }
  const double p1 = cfg.laser1.power_mw;
  const double p2 = ring2_injection_mw(cfg);
  const double l1 = cfg.laser1.wavelength_nm;
  const double l2 = cfg.laser2.wavelength_nm;
  out.thru_mw = p1 * thru_gain(ring_phase(cfg.ring1, l1, v), cfg.ring1.device);
  out.drop_mw = p2 * drop_gain(ring_phase(cfg.ring2, l2, v), cfg.ring2.device);
  if (cfg.dual_lambda_crosstalk) {
    // Both wavelengths visit both rings; each port adds the other laser's
    // contribution incoherently.
    out.thru_mw += p2 * thru_gain(ring_phase(cfg.ring1, l2, v), cfg.ring1.device);
    out.drop_mw += p1 * drop_gain(ring_phase(cfg.ring2, l1, v), cfg.ring2.device);
  }
  return out;
}

}  // namespace detail

/// Quasi-static optical output powers of both ports at drive `v_drive`.
inline PortPowers port_powers(const LinkConfig& cfg, double v_drive) {
  cfg.validate();
  detail::require(std::isfinite(v_drive), "port_powers: non-finite drive");
  return detail::port_powers_unchecked(cfg, v_drive);
}

/// (P_thru + P_drop) / P_in, with P_in the ring-1 injection.
inline double summed_gain(const LinkConfig& cfg, double v_drive) {
  const auto p = port_powers(cfg, v_drive);
  return (p.thru_mw + p.drop_mw) / cfg.laser1.power_mw;
}

inline double thru_only_gain(const LinkConfig& cfg, double v_drive) {
  return port_powers(cfg, v_drive).thru_mw / cfg.laser1.power_mw;
}

/// Static drive -> normalized power gain map for one architecture. The
/// config is validated once; the returned callable is cheap to evaluate.
inline std::function<double(double)> gain_model(const LinkConfig& cfg, Architecture arch) {
  cfg.validate();
  return [cfg, arch](double v) {
    const auto p = detail::port_powers_unchecked(cfg, v);
    const double total = arch == Architecture::dual ? p.thru_mw + p.drop_mw : p.thru_mw;
    return total / cfg.laser1.power_mw;
  };
}

// ---------------------------------------------------------------------------
// Fractional delay

inline constexpr double kKaiserBeta = 10.0;

struct DelayedSeries {
  std::vector<double> samples;
  std::size_t valid_begin = 0;  // first sample with full interpolation support
  std::size_t valid_end = 0;    // one past the last valid sample
};

namespace detail {

inline double kaiser_sinc(double x, double half_width) {
  const double r = x / half_width;
  if (std::abs(r) >= 1.0) return 0.0;
  const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
                   std::cyl_bessel_i(0.0, kKaiserBeta);
  const double s = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  return s * w;
}

}  // namespace detail

/// y[n] = x(n - delay_samples) via Kaiser-windowed sinc interpolation with
/// `half_width` taps on each side. Integer delays are exact shifts.
inline DelayedSeries delay_series(std::span<const double> x, double delay_samples,
                                  std::size_t half_width = 16) {
  detail::require(std::isfinite(delay_samples), "delay: non-finite delay");
  detail::require(half_width >= 1, "delay: half_width must be >= 1");
  const auto n = static_cast<long long>(x.size());
  const auto w = static_cast<long long>(half_width);
  const long long shift = static_cast<long long>(std::floor(delay_samples));
  const double frac = delay_samples - static_cast<double>(shift);

  // t = i - delay = (i - shift - 1) + (1 - frac); integer delays use mu == 0.
  const bool integer = frac == 0.0;
  const double mu = integer ? 0.0 : 1.0 - frac;
  const long long base_off = integer ? -shift : -shift - 1;
  std::vector<double> taps;
  long long k_lo = 0;
  long long k_hi = 0;
  if (!integer) {
    k_lo = -w + 1;
    k_hi = w;
    for (long long k = k_lo; k <= k_hi; ++k) {
      taps.push_back(detail::kaiser_sinc(mu - static_cast<double>(k), static_cast<double>(w)));
    }
  }

  DelayedSeries out;
  out.samples.assign(x.size(), 0.0);
  long long first_valid = n;
  long long last_valid = -1;
  for (long long i = 0; i < n; ++i) {
    const long long m = i + base_off;
    if (m + k_lo < 0 || m + k_hi >= n) {
      const long long c = std::clamp(m, 0LL, n - 1);
      out.samples[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(c)];
      continue;
    }
    if (integer) {
      out.samples[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(m)];
    } else {
      double acc = 0.0;
      for (long long k = k_lo; k <= k_hi; ++k) {
        acc += x[static_cast<std::size_t>(m + k)] * taps[static_cast<std::size_t>(k - k_lo)];
      }
      out.samples[static_cast<std::size_t>(i)] = acc;
    }
    first_valid = std::min(first_valid, i);
    last_valid = std::max(last_valid, i);
  }
  if (last_valid >= first_valid) {
    out.valid_begin = static_cast<std::size_t>(first_valid);
    out.valid_end = static_cast<std::size_t>(last_valid + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time-domain link

struct LinkOutput {
  std::vector<double> v_out;    // TIA output, volts
  std::vector<double> thru_mw;  // delayed through-port power at the PD
  std::vector<double> drop_mw;  // delayed drop-port power at the PD
  double sample_rate_ghz = 1.0;
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;

  std::size_t valid_count() const { return valid_end > valid_begin ? valid_end - valid_begin : 0; }
};

/// Runs `drive` through the link: quasi-static port powers, per-path fiber
/// delay, photodiode summation and TIA conversion. Samples outside
/// [valid_begin, valid_end) are affected by delay edges.
inline LinkOutput simulate_link(const LinkConfig& cfg, const DriveWaveform& drive,
                                Architecture arch = Architecture::dual) {
  cfg.validate();
  const std::size_t n = drive.samples.size();
  detail::require(n >= 16, "simulate_link: drive needs at least 16 samples");
  detail::require(detail::positive_finite(drive.sample_rate_ghz),
                  "simulate_link: sample rate must be > 0");
  for (double v : drive.samples) {
    detail::require(std::isfinite(v), "simulate_link: non-finite drive sample");
  }

  // ps * GHz = 1e-3 samples
  const double d_thru = cfg.fiber_delay_thru_ps * drive.sample_rate_ghz * 1e-3;
  const double d_drop = cfg.fiber_delay_drop_ps * drive.sample_rate_ghz * 1e-3;
  const double limit = 0.1 * static_cast<double>(n);
  detail::require(std::abs(d_thru) <= limit && std::abs(d_drop) <= limit,
                  "simulate_link: fiber delay exceeds 10% of the record length");

  std::vector<double> thru(n);
  std::vector<double> drop(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = detail::port_powers_unchecked(cfg, drive.samples[i]);
    thru[i] = p.thru_mw;
    drop[i] = arch == Architecture::dual ? p.drop_mw : 0.0;
  }

  auto dt = delay_series(thru, d_thru, cfg.delay_kernel_half_width);
  auto dd = delay_series(drop, d_drop, cfg.delay_kernel_half_width);

  LinkOutput out;
  out.sample_rate_ghz = drive.sample_rate_ghz;
  out.valid_begin = std::max(dt.valid_begin, dd.valid_begin);
  out.valid_end = std::min(dt.valid_end, dd.valid_end);
  if (out.valid_end < out.valid_begin) out.valid_end = out.valid_begin;

  // mW -> W
  const double gain = cfg.tia_transimpedance_ohm * cfg.pd_responsivity_a_per_w * 1e-3;
  out.v_out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.v_out[i] = gain * (dt.samples[i] + dd.samples[i]);

  if (cfg.lowpass_cutoff_ghz) {
    const double alpha =
        1.0 - std::exp(-2.0 * std::numbers::pi * *cfg.lowpass_cutoff_ghz / drive.sample_rate_ghz);
    double y = out.v_out.front();
    for (auto& s : out.v_out) {
      y += alpha * (s - y);
      s = y;
    }
  }
  out.thru_mw = std::move(dt.samples);
  out.drop_mw = std::move(dd.samples);
  return out;
}

}  // namespace mrm
