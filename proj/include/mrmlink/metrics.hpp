#pragma once

// Linearity metrology: static transfer extraction, full-scale windowing,
// endpoint-fit INL/DNL, extinction ratio, dB <-> bit conversion, two-tone
// IMD3/OIP3/SFDR and PAM-N level analysis.
//
// Conventions
//   * optical power ratios (extinction ratio) use 10*log10
//   * INL/DNL improvement ratios use 20*log10 with 20*log10(2) dB per bit
//   * INL uses the endpoint-fit line, so the window endpoints are exactly 0
//   * two-tone analysis uses a rectangular window on a coherent record

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actuation.hpp"
#include "dft.hpp"
#include "dual_link.hpp"
#include "errors.hpp"

namespace mrm {

using GainModel = std::function<double(double)>;

inline constexpr double kDbPerBit = 6.020599913279624;  // 20*log10(2)

inline double db_to_bits(double delta_db) {
  detail::require(std::isfinite(delta_db), "db_to_bits: non-finite input");
  return delta_db / kDbPerBit;
}

inline double bits_to_db(double bits) {
  detail::require(std::isfinite(bits), "bits_to_db: non-finite input");
  return bits * kDbPerBit;
}

inline double extinction_ratio_db(double g_lo, double g_hi) {
  detail::require(std::isfinite(g_lo) && std::isfinite(g_hi) && g_lo > 0.0 && g_lo <= g_hi,
                  "extinction_ratio_db: need 0 < g_lo <= g_hi");
  return 10.0 * std::log10(g_hi / g_lo);
}

/// Amplitude-ratio improvement of `test_pp` over `ref_pp`, in dB.
inline double improvement_db(double ref_pp, double test_pp) {
  detail::require(ref_pp > 0.0 && test_pp > 0.0, "improvement_db: peak-to-peak values must be > 0");
  return 20.0 * std::log10(ref_pp / test_pp);
}

// ---------------------------------------------------------------------------
// Transfer curves

struct TransferCurve {
  std::vector<double> v_norm;
  std::vector<double> gain_norm;
  double g_lo = 0.25;
  double g_hi = 0.75;
  // Affine maps back to physical units: v = v_min + v_norm * (v_max - v_min),
  // gain = gain_min + gain_norm * (gain_max - gain_min).
  double v_min = 0.0;
  double v_max = 1.0;
  double gain_min = 0.0;
  double gain_max = 1.0;

  std::size_t size() const { return v_norm.size(); }

  void validate() const {
    detail::require(v_norm.size() == gain_norm.size(), "transfer curve: column length mismatch");
    for (std::size_t i = 0; i < v_norm.size(); ++i) {
      detail::require(std::isfinite(v_norm[i]) && std::isfinite(gain_norm[i]),
                      "transfer curve: non-finite sample");
      if (i > 0) detail::require(v_norm[i] > v_norm[i - 1], "transfer curve: v_norm must be strictly increasing");
    }
    detail::require(0.0 <= g_lo && g_lo < g_hi && g_hi <= 1.0,
                    "transfer curve: window must satisfy 0 <= g_lo < g_hi <= 1");
  }
};

/// Normalizes raw (x, gain) samples: x maps to [0, 1] over its range and the
/// gain extremes of the sweep map to 0 and 1.
inline TransferCurve transfer_from_samples(std::span<const double> x, std::span<const double> gain) {
  detail::require(x.size() == gain.size(), "transfer: x/gain length mismatch");
  detail::require(x.size() >= 2, "transfer: need at least 2 samples");
  const auto [gmin_it, gmax_it] = std::minmax_element(gain.begin(), gain.end());
  const double gmin = *gmin_it;
  const double gmax = *gmax_it;
  if (!(gmax > gmin)) throw DegenerateResponse("transfer: flat response, cannot normalize");

  TransferCurve c;
  c.v_min = x.front();
  c.v_max = x.back();
  c.gain_min = gmin;
  c.gain_max = gmax;
  const double span = c.v_max - c.v_min;
  detail::require(span > 0.0, "transfer: x range must be increasing");
  c.v_norm.resize(x.size());
  c.gain_norm.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.v_norm[i] = (x[i] - c.v_min) / span;
    c.gain_norm[i] = (gain[i] - gmin) / (gmax - gmin);
  }
  c.v_norm.back() = 1.0;
  c.validate();
  return c;
}

/// Ramp the drive over [v_min, v_max] with `n_points` samples through `model`.
inline TransferCurve static_transfer(const GainModel& model, double v_min, double v_max,
                                     std::size_t n_points) {
  detail::require(n_points >= 33, "static_transfer: n_points must be >= 33");
  OperatingPoint op;
  op.v_min = v_min;
  op.v_max = v_max;
  const auto ramp = make_waveform(RampSpec{n_points}, op);
  std::vector<double> g(ramp.samples.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = model(ramp.samples[i]);
    detail::require(std::isfinite(g[i]), "static_transfer: model returned non-finite gain");
  }
  return transfer_from_samples(ramp.samples, g);
}

inline TransferCurve static_transfer(const LinkConfig& cfg, Architecture arch, std::size_t n_points) {
  return static_transfer(gain_model(cfg, arch), cfg.ring1.op.v_min, cfg.ring1.op.v_max, n_points);
}

struct WindowedCurve {
  TransferCurve curve;          // both axes renormalized to [0, 1] inside the window
  double v_start = 0.0;         // physical drive at the window entry crossing
  double v_end = 0.0;           // physical drive at the window exit crossing
  double span_v = 0.0;          // |v_end - v_start|
  double span_fraction = 0.0;   // span_v / electrical full scale
  bool increasing = true;
  std::size_t candidates = 0;   // monotone intervals that reach the window

  bool ambiguous() const { return candidates > 1; }
};

/// Extracts the monotone sub-interval whose gain spans exactly [g_lo, g_hi],
/// with crossings located by linear interpolation. When several intervals
/// qualify, the one needing the smallest electrical span wins.
inline WindowedCurve fs_window(const TransferCurve& curve, double g_lo, double g_hi) {
  curve.validate();
  detail::require(std::isfinite(g_lo) && std::isfinite(g_hi) && 0.0 <= g_lo && g_lo < g_hi && g_hi <= 1.0,
                  "fs_window: window must satisfy 0 <= g_lo < g_hi <= 1");
  const auto& v = curve.v_norm;
  const auto& g = curve.gain_norm;
  const std::size_t n = v.size();

  auto crossing = [&](std::size_t s, std::size_t e, double level, bool inc) {
    for (std::size_t j = s; j < e; ++j) {
      const bool hit = inc ? g[j + 1] >= level : g[j + 1] <= level;
      if (hit) {
        const double t = (level - g[j]) / (g[j + 1] - g[j]);
        return v[j] + t * (v[j + 1] - v[j]);
      }
    }
    return v[e];
  };

  struct Candidate {
    double va, vb;
    std::size_t s, e;
    bool inc;
  };
  std::vector<Candidate> found;
  std::size_t s = 0;
  while (s + 1 < n) {
    const double d0 = g[s + 1] - g[s];
    if (d0 == 0.0) {
      ++s;
      continue;
    }
    const bool inc = d0 > 0.0;
    std::size_t e = s + 1;
    while (e + 1 < n && (inc ? g[e + 1] > g[e] : g[e + 1] < g[e])) ++e;
    const bool reaches = inc ? (g[s] <= g_lo && g[e] >= g_hi) : (g[s] >= g_hi && g[e] <= g_lo);
    if (reaches) {
      const double va = crossing(s, e, inc ? g_lo : g_hi, inc);
      const double vb = crossing(s, e, inc ? g_hi : g_lo, inc);
      found.push_back({va, vb, s, e, inc});
    }
    s = e;
  }
  if (found.empty()) {
    throw WindowUnreachable("fs_window: no monotone interval spans the gain window [" +
                            std::to_string(g_lo) + ", " + std::to_string(g_hi) + "]");
  }
  const auto best = std::min_element(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return (a.vb - a.va) < (b.vb - b.va);
  });

  WindowedCurve out;
  out.candidates = found.size();
  out.increasing = best->inc;
  const double fs = curve.v_max - curve.v_min;
  out.v_start = curve.v_min + best->va * fs;
  out.v_end = curve.v_min + best->vb * fs;
  out.span_v = std::abs(out.v_end - out.v_start);
  out.span_fraction = best->vb - best->va;

  const double width = best->vb - best->va;
  detail::require(width > 0.0, "fs_window: degenerate window span");
  auto& w = out.curve;
  w.g_lo = 0.0;
  w.g_hi = 1.0;
  w.v_min = out.v_start;
  w.v_max = out.v_end;
  w.gain_min = curve.gain_min + g_lo * (curve.gain_max - curve.gain_min);
  w.gain_max = curve.gain_min + g_hi * (curve.gain_max - curve.gain_min);
  const double gspan = g_hi - g_lo;
  w.v_norm.push_back(0.0);
  w.gain_norm.push_back(best->inc ? 0.0 : 1.0);
  for (std::size_t i = best->s; i <= best->e; ++i) {
    if (v[i] > best->va && v[i] < best->vb) {
      const double vn = (v[i] - best->va) / width;
      if (vn <= w.v_norm.back() || vn >= 1.0) continue;
      w.v_norm.push_back(vn);
      w.gain_norm.push_back((g[i] - g_lo) / gspan);
    }
  }
  w.v_norm.push_back(1.0);
  w.gain_norm.push_back(best->inc ? 1.0 : 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// INL / DNL

struct LinearityReport {
  std::vector<double> inl;  // fraction of output FS (curves) or LSB (levels)
  double inl_pp = 0.0;
  std::vector<double> levels;  // level-based reports only
  std::vector<double> dnl;     // LSB, level-based reports only
  double dnl_pp = 0.0;
  bool level_based = false;
};

namespace detail {

inline double peak_to_peak(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

}  // namespace detail

/// Endpoint-fit INL of a monotone curve in fraction of its output span.
inline LinearityReport inl(const TransferCurve& curve) {
  detail::require(curve.size() >= 3, "inl: need at least 3 points");
  curve.validate();
  const auto& x = curve.v_norm;
  const auto& y = curve.gain_norm;
  const std::size_t n = x.size();
  const double rise = y.back() - y.front();
  detail::require(rise != 0.0, "inl: curve endpoints have equal gain");
  for (std::size_t i = 1; i < n; ++i) {
    detail::require((y[i] - y[i - 1]) * rise >= 0.0, "inl: curve is not monotone");
  }
  const double run = x.back() - x.front();
  LinearityReport r;
  r.inl.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double line = y.front() + rise * (x[i] - x.front()) / run;
    r.inl[i] = (y[i] - line) / rise;
  }
  r.inl.front() = 0.0;
  r.inl.back() = 0.0;
  r.inl_pp = detail::peak_to_peak(r.inl);
  return r;
}

/// DNL/INL of an ordered level ladder, in LSB of the endpoint-fit step.
inline LinearityReport level_report(std::span<const double> levels) {
  const std::size_t n = levels.size();
  detail::require(n >= 2, "level_report: need at least 2 levels");
  for (double l : levels) detail::require(std::isfinite(l), "level_report: non-finite level");
  const double step = (levels.back() - levels.front()) / static_cast<double>(n - 1);
  detail::require(step != 0.0, "level_report: first and last levels coincide");
  LinearityReport r;
  r.level_based = true;
  r.levels.assign(levels.begin(), levels.end());
  r.dnl.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double ratio = (levels[k + 1] - levels[k]) / step;
    detail::require(ratio > 0.0, "level_report: levels are not resolvable as a monotone ladder");
    r.dnl[k] = ratio - 1.0;
  }
  r.inl.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.inl[k] = (levels[k] - levels.front()) / step - static_cast<double>(k);
  }
  r.inl.front() = 0.0;
  r.inl.back() = 0.0;
  r.dnl_pp = detail::peak_to_peak(r.dnl);
  r.inl_pp = detail::peak_to_peak(r.inl);
  return r;
}

/// Drive voltages of an N-level ladder spanning the window's electrical range.
inline std::vector<double> window_drive_levels(const WindowedCurve& window, std::size_t n_levels) {
  detail::require(n_levels >= 2, "pam levels: n_levels must be >= 2");
  const double lo = std::min(window.v_start, window.v_end);
  const double hi = std::max(window.v_start, window.v_end);
  std::vector<double> v(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) {
    v[k] = (k + 1 == n_levels) ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_levels - 1);
  }
  return v;
}

/// Quasi-static PAM eye-center levels evaluated directly on the static map.
inline LinearityReport pam_level_report(const GainModel& model, const WindowedCurve& window,
                                        std::size_t n_levels) {
  const auto drive = window_drive_levels(window, n_levels);
  std::vector<double> levels(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) levels[k] = model(drive[k]);
  return level_report(levels);
}

/// Level ladder recovered from the settled eye centers of a simulated PAM
/// record: the sample in the middle of each symbol, averaged per symbol value.
inline std::vector<double> eye_center_levels(const LinkOutput& out, const DriveWaveform& pam) {
  const auto* spec = std::get_if<PamSpec>(&pam.spec);
  detail::require(spec != nullptr, "eye_center_levels: drive is not a PAM waveform");
  const std::size_t os = spec->oversampling;
  std::vector<double> sum(spec->levels, 0.0);
  std::vector<std::size_t> count(spec->levels, 0);
  for (std::size_t s = 0; s < pam.symbols.size(); ++s) {
    const std::size_t idx = s * os + os / 2;
    if (idx < out.valid_begin || idx >= out.valid_end) continue;
    sum[pam.symbols[s]] += out.v_out[idx];
    ++count[pam.symbols[s]];
  }
  std::vector<double> levels(spec->levels);
  for (std::size_t k = 0; k < spec->levels; ++k) {
    detail::require(count[k] > 0, "eye_center_levels: level " + std::to_string(k) + " never transmitted");
    levels[k] = sum[k] / static_cast<double>(count[k]);
  }
  return levels;
}

// 2-UI eye raster, row 0 at the top (highest voltage).
struct EyeRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  double v_lo = 0.0;
  double v_hi = 0.0;
  std::vector<std::uint32_t> counts;  // row-major, height x width

  std::uint32_t at(std::size_t row, std::size_t col) const { return counts[row * width + col]; }
};

inline EyeRaster render_eye(const LinkOutput& out, std::size_t samples_per_symbol, std::size_t width,
                            std::size_t height) {
  detail::require(width >= 2 && height >= 2, "render_eye: raster must be at least 2x2");
  detail::require(samples_per_symbol >= 2, "render_eye: need >= 2 samples per symbol");
  detail::require(out.valid_count() >= 2 * samples_per_symbol, "render_eye: record too short");
  EyeRaster r;
  r.width = width;
  r.height = height;
  r.counts.assign(width * height, 0);
  const auto first = out.v_out.begin() + static_cast<std::ptrdiff_t>(out.valid_begin);
  const auto last = out.v_out.begin() + static_cast<std::ptrdiff_t>(out.valid_end);
  const auto [lo, hi] = std::minmax_element(first, last);
  const double margin = std::max(1e-12, 0.05 * (*hi - *lo));
  r.v_lo = *lo - margin;
  r.v_hi = *hi + margin;

  const double period = 2.0 * static_cast<double>(samples_per_symbol);
  const std::size_t substeps = std::max<std::size_t>(1, width / (2 * samples_per_symbol));
  for (std::size_t i = out.valid_begin; i + 1 < out.valid_end; ++i) {
    for (std::size_t k = 0; k < substeps; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(substeps);
      const double pos = std::fmod(static_cast<double>(i) + t, period) / period;
      const double v = out.v_out[i] + t * (out.v_out[i + 1] - out.v_out[i]);
      const auto col = std::min(width - 1, static_cast<std::size_t>(pos * static_cast<double>(width)));
      const double yn = (r.v_hi - v) / (r.v_hi - r.v_lo);
      const auto row = std::min(height - 1, static_cast<std::size_t>(std::max(0.0, yn) * static_cast<double>(height)));
      ++r.counts[row * width + col];
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Two-tone

struct ToneBins {
  std::size_t f1 = 0;
  std::size_t f2 = 0;
  std::size_t imd_lo = 0;  // 2*f1 - f2
  std::size_t imd_hi = 0;  // 2*f2 - f1
};

struct SpectrumReport {
  double sample_rate_ghz = 0.0;
  std::size_t record_length = 0;
  ToneBins bins;
  std::vector<double> bin_power;      // one-sided, sums to the record mean square
  std::vector<double> bin_power_dbc;  // relative to the stronger fundamental
  double fund_power_db = 0.0;
  double imd3_power_db = 0.0;
  double imd3_dbc = 0.0;
  double oip3_db = 0.0;
  std::optional<double> noise_floor_db_hz;
  std::optional<double> sfdr_db_hz23;

  double bin_frequency_ghz(std::size_t k) const {
    return sample_rate_ghz * static_cast<double>(k) / static_cast<double>(record_length);
  }
};

namespace detail {

inline std::size_t integer_bin(double f, double fs, std::size_t n, const char* name) {
  return static_cast<std::size_t>(exact_bin(f, fs, n, name));
}

inline double to_db(double p) {
  return p > 0.0 ? 10.0 * std::log10(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Coherent two-tone analysis of `record`. Powers are in dB relative to one
/// squared output unit; OIP3 = P_fund + (P_fund - P_IMD3) / 2 and, when a
/// noise floor (dB/Hz, same reference) is supplied, SFDR = 2/3 (OIP3 - floor).
inline SpectrumReport two_tone_analysis(std::span<const double> record, double sample_rate_ghz,
                                        double f1_ghz, double f2_ghz,
                                        std::optional<double> noise_floor_db_hz = std::nullopt) {
  const std::size_t n = record.size();
  detail::require(n >= 16, "two_tone_analysis: record needs at least 16 samples");
  detail::require(sample_rate_ghz > 0.0 && std::isfinite(sample_rate_ghz), "two_tone_analysis: bad sample rate");
  for (double x : record) detail::require(std::isfinite(x), "two_tone_analysis: non-finite sample");
  ToneBins b;
  b.f1 = detail::integer_bin(f1_ghz, sample_rate_ghz, n, "f1");
  b.f2 = detail::integer_bin(f2_ghz, sample_rate_ghz, n, "f2");
  const long long k1 = static_cast<long long>(b.f1);
  const long long k2 = static_cast<long long>(b.f2);
  const long long lo = 2 * k1 - k2;
  const long long hi = 2 * k2 - k1;
  const long long nyq = static_cast<long long>(n / 2);
  detail::require(k1 != k2, "two_tone_analysis: tones share a bin");
  detail::require(k1 > 0 && k2 > 0 && k1 < nyq && k2 < nyq, "two_tone_analysis: tones must lie strictly inside (0, fs/2)");
  detail::require(lo > 0 && hi > 0 && lo < nyq && hi < nyq,
                  "two_tone_analysis: IMD3 products fall outside (0, fs/2)");
  detail::require(lo != k1 && lo != k2 && hi != k1 && hi != k2 && lo != hi,
                  "two_tone_analysis: IMD3 bins collide with the fundamentals");
  b.imd_lo = static_cast<std::size_t>(lo);
  b.imd_hi = static_cast<std::size_t>(hi);

  SpectrumReport r;
  r.sample_rate_ghz = sample_rate_ghz;
  r.record_length = n;
  r.bins = b;
  r.bin_power = one_sided_power(record);
  const double fund = std::max(r.bin_power[b.f1], r.bin_power[b.f2]);
  detail::require(fund > 0.0, "two_tone_analysis: fundamentals are absent");
  const double imd = std::max(r.bin_power[b.imd_lo], r.bin_power[b.imd_hi]);
  r.bin_power_dbc.resize(r.bin_power.size());
  for (std::size_t k = 0; k < r.bin_power.size(); ++k) {
    r.bin_power_dbc[k] = detail::to_db(r.bin_power[k] / fund);
  }
  r.fund_power_db = detail::to_db(fund);
  r.imd3_power_db = detail::to_db(imd);
  r.imd3_dbc = r.imd3_power_db - r.fund_power_db;
  r.oip3_db = r.fund_power_db + (r.fund_power_db - r.imd3_power_db) / 2.0;
  if (noise_floor_db_hz) {
    r.noise_floor_db_hz = noise_floor_db_hz;
    r.sfdr_db_hz23 = 2.0 / 3.0 * (r.oip3_db - *noise_floor_db_hz);
  }
  return r;
}

/// SFDR improvement of `test` over `ref` under a common noise floor.
inline double delta_sfdr_db(const SpectrumReport& ref, const SpectrumReport& test) {
  return 2.0 / 3.0 * (test.oip3_db - ref.oip3_db);
}

}  // namespace mrm
