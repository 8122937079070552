#pragma once

// Measured-spectrum ingestion. Lab sweeps (tunable laser + power meter or
// sampling scope) arrive as two-column CSV files; the through spectrum of the
// notch device and the drop spectrum of the bandpass device are resampled to
// a common grid, scaled by one shared reference and summed. The wavelength
// sweep then plays the role of the drive sweep in the usual window/INL
// pipeline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"

namespace mrm {

enum class Port { thru, drop };

inline constexpr std::string_view to_string(Port p) { return p == Port::thru ? "thru" : "drop"; }

struct MeasuredSpectrum {
  std::string device;
  Port port = Port::thru;
  std::vector<double> wavelength_nm;
  std::vector<double> power_mw;

  void validate() const {
    detail::require(wavelength_nm.size() == power_mw.size(), "spectrum: column length mismatch");
    for (std::size_t i = 0; i < wavelength_nm.size(); ++i) {
      detail::require(std::isfinite(wavelength_nm[i]) && std::isfinite(power_mw[i]) && power_mw[i] >= 0.0,
                      "spectrum: invalid row " + std::to_string(i + 1));
      if (i > 0) {
        detail::require(wavelength_nm[i] > wavelength_nm[i - 1],
                        "spectrum: wavelengths must be strictly increasing");
      }
    }
  }
};

inline constexpr std::size_t kMinSpectrumRows = 16;

namespace detail {

inline double parse_field(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(where + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

}  // namespace detail

/// Parses CSV text with the header `wavelength_nm,power_mw`. Row numbers in
/// error messages are 1-based file lines.
inline MeasuredSpectrum parse_spectrum_csv(const std::string& text, Port port, const std::string& label) {
  MeasuredSpectrum s;
  s.device = label;
  s.port = port;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (line != "wavelength_nm,power_mw") {
        throw ParseError(label + " line 1: expected header 'wavelength_nm,power_mw'");
      }
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const std::string where = label + " row " + std::to_string(lineno);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(where + ": expected exactly two columns");
    }
    const double wl = detail::parse_field(std::string_view(line).substr(0, comma), where);
    const double p = detail::parse_field(std::string_view(line).substr(comma + 1), where);
    if (p < 0.0) throw ParseError(where + ": negative power");
    if (!s.wavelength_nm.empty()) {
      if (wl == s.wavelength_nm.back()) throw ParseError(where + ": duplicate wavelength");
      if (wl < s.wavelength_nm.back()) throw ParseError(where + ": wavelengths are not increasing");
    }
    s.wavelength_nm.push_back(wl);
    s.power_mw.push_back(p);
  }
  if (!header) throw ParseError(label + ": empty file");
  if (s.wavelength_nm.size() < kMinSpectrumRows) {
    throw ParseError(label + ": " + std::to_string(s.wavelength_nm.size()) + " rows, need at least " +
                     std::to_string(kMinSpectrumRows));
  }
  return s;
}

inline MeasuredSpectrum ingest_spectrum_csv(const std::string& path, Port port) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spectrum file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spectrum_csv(ss.str(), port, path);
}

/// Linear interpolation of `s` at the increasing wavelengths `grid`, which
/// must lie inside the measured range.
inline std::vector<double> resample(const MeasuredSpectrum& s, std::span<const double> grid) {
  const auto& x = s.wavelength_nm;
  const auto& y = s.power_mw;
  detail::require(x.size() >= 2, "resample: spectrum too short");
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = grid[i];
    detail::require(g >= x.front() && g <= x.back(), "resample: grid point outside measured range");
    while (j + 2 < x.size() && x[j + 1] < g) ++j;
    if (g == x[j]) {
      out[i] = y[j];
    } else if (g == x[j + 1]) {
      out[i] = y[j + 1];
    } else {
      const double t = (g - x[j]) / (x[j + 1] - x[j]);
      out[i] = y[j] + t * (y[j + 1] - y[j]);
    }
  }
  return out;
}

struct CombinedSpectrum {
  std::vector<double> wavelength_nm;
  std::vector<double> thru_gain;   // scaled by the shared reference
  std::vector<double> drop_gain;
  std::vector<double> summed_gain;
  double reference_mw = 0.0;
};

/// Resamples both spectra onto a uniform grid spanning their overlap with as
/// many points as the denser input (so the result does not depend on which
/// input is denser), then scales both by the through spectrum's maximum.
inline CombinedSpectrum combine_spectra(const MeasuredSpectrum& thru, const MeasuredSpectrum& drop) {
  thru.validate();
  drop.validate();
  detail::require(thru.port == Port::thru && drop.port == Port::drop,
                  "combine_spectra: need one thru and one drop spectrum");
  const double lo = std::max(thru.wavelength_nm.front(), drop.wavelength_nm.front());
  const double hi = std::min(thru.wavelength_nm.back(), drop.wavelength_nm.back());
  detail::require(hi > lo, "combine_spectra: spectra do not overlap");
  const std::size_t n = std::max(thru.wavelength_nm.size(), drop.wavelength_nm.size());

  CombinedSpectrum c;
  c.wavelength_nm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.wavelength_nm[i] = (i + 1 == n) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  auto t = resample(thru, c.wavelength_nm);
  auto d = resample(drop, c.wavelength_nm);
  c.reference_mw = *std::max_element(t.begin(), t.end());
  detail::require(c.reference_mw > 0.0, "combine_spectra: through spectrum is all zero");
  c.thru_gain.resize(n);
  c.drop_gain.resize(n);
  c.summed_gain.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.thru_gain[i] = t[i] / c.reference_mw;
    c.drop_gain[i] = d[i] / c.reference_mw;
    c.summed_gain[i] = c.thru_gain[i] + c.drop_gain[i];
  }
  return c;
}

struct MeasuredAnalysis {
  CombinedSpectrum spectrum;
  TransferCurve notch_curve;
  TransferCurve dual_curve;
  WindowedCurve notch_window;
  WindowedCurve dual_window;
  LinearityReport notch;
  LinearityReport dual;
};

/// Full-scale window and INL of the measured notch and summed responses,
/// with the wavelength sweep standing in for the drive sweep.
inline MeasuredAnalysis analyze_measured(const MeasuredSpectrum& thru, const MeasuredSpectrum& drop, double g_lo,
                                         double g_hi) {
  MeasuredAnalysis a;
  a.spectrum = combine_spectra(thru, drop);
  a.notch_curve = transfer_from_samples(a.spectrum.wavelength_nm, a.spectrum.thru_gain);
  a.dual_curve = transfer_from_samples(a.spectrum.wavelength_nm, a.spectrum.summed_gain);
  a.notch_window = fs_window(a.notch_curve, g_lo, g_hi);
  a.dual_window = fs_window(a.dual_curve, g_lo, g_hi);
  a.notch = inl(a.notch_window.curve);
  a.dual = inl(a.dual_window.curve);
  return a;
}

}  // namespace mrm
