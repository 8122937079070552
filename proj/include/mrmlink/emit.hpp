#pragma once

// Report emission: CSV tables, JSON reports and SVG figures. All writes are
// atomic (temp file + rename) and all floating-point output uses the shortest
// representation that round-trips, so identical inputs give identical bytes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "actuation.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "metrics.hpp"

namespace mrm {

inline constexpr std::string_view kToolName = "mrmlink";
inline constexpr std::string_view kToolVersion = "1.0.0";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// CSV

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::span<const double> values) {
    detail::require(values.size() == columns_.size(), "csv: row width mismatch");
    rows_.emplace_back(values.begin(), values.end());
  }

  void add_row(std::initializer_list<double> values) { add_row(std::span<const double>(values.begin(), values.size())); }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) s += ',';
      s += columns_[i];
    }
    s += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ',';
        s += format_double(r[i]);
      }
      s += '\n';
    }
    return s;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

inline std::string transfer_csv(const TransferCurve& c) {
  CsvTable t({"v_norm", "gain_norm"});
  for (std::size_t i = 0; i < c.size(); ++i) t.add_row({c.v_norm[i], c.gain_norm[i]});
  return t.str();
}

inline std::string inl_csv(const TransferCurve& windowed, const LinearityReport& r) {
  CsvTable t({"v_norm", "inl"});
  for (std::size_t i = 0; i < windowed.size(); ++i) t.add_row({windowed.v_norm[i], r.inl[i]});
  return t.str();
}

inline std::string levels_csv(const LinearityReport& r) {
  CsvTable t({"level", "value", "inl_lsb", "dnl_lsb"});
  for (std::size_t k = 0; k < r.levels.size(); ++k) {
    const double dnl = k < r.dnl.size() ? r.dnl[k] : std::nan("");
    t.add_row({static_cast<double>(k), r.levels[k], r.inl[k], dnl});
  }
  return t.str();
}

inline std::string spectrum_bins_csv(const SpectrumReport& r) {
  CsvTable t({"bin", "frequency_ghz", "power", "power_dbc"});
  for (std::size_t k = 0; k < r.bin_power.size(); ++k) {
    t.add_row({static_cast<double>(k), r.bin_frequency_ghz(k), r.bin_power[k], r.bin_power_dbc[k]});
  }
  return t.str();
}

inline std::string spectrum_csv_text(std::span<const double> wavelength_nm, std::span<const double> power_mw) {
  CsvTable t({"wavelength_nm", "power_mw"});
  for (std::size_t i = 0; i < wavelength_nm.size(); ++i) t.add_row({wavelength_nm[i], power_mw[i]});
  return t.str();
}

// ---------------------------------------------------------------------------
// JSON reports

/// Wraps `results` with the tool identity, the fully resolved config and the
/// PRNG seed so that the report alone is enough to reproduce it.
/// The echoed config omits output_dir so reports do not depend on where they
/// were written.
inline nlohmann::json report_envelope(std::string_view command, const RunConfig& cfg, nlohmann::json results) {
  auto echo = config_to_json(cfg);
  echo.erase("output_dir");
  return nlohmann::json{{"tool", std::string(kToolName)},
                        {"version", std::string(kToolVersion)},
                        {"command", std::string(command)},
                        {"prng", kPrngName},
                        {"seed", cfg.seed},
                        {"config", std::move(echo)},
                        {"results", std::move(results)}};
}

inline nlohmann::json to_json(const LinearityReport& r) {
  nlohmann::json j{{"inl_pp", r.inl_pp}};
  if (r.level_based) {
    j["dnl_pp"] = r.dnl_pp;
    j["levels"] = r.levels;
    j["inl_lsb"] = r.inl;
    j["dnl_lsb"] = r.dnl;
  }
  return j;
}

inline nlohmann::json to_json(const SpectrumReport& r) {
  nlohmann::json j{{"record_length", r.record_length},
                   {"sample_rate_ghz", r.sample_rate_ghz},
                   {"bins", {{"f1", r.bins.f1}, {"f2", r.bins.f2}, {"imd_lo", r.bins.imd_lo}, {"imd_hi", r.bins.imd_hi}}},
                   {"fund_power_db", r.fund_power_db},
                   {"imd3_power_db", r.imd3_power_db},
                   {"imd3_dbc", r.imd3_dbc},
                   {"oip3_db", r.oip3_db}};
  if (r.sfdr_db_hz23) {
    j["noise_floor_db_hz"] = *r.noise_floor_db_hz;
    j["sfdr_db_hz23"] = *r.sfdr_db_hz23;
  }
  return j;
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace detail

inline std::string svg_line_plot(std::string_view title, std::string_view xlabel, std::string_view ylabel,
                                 const std::vector<Series>& series, int width = 640, int height = 400) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                  std::to_string(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::fixed(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(top) + "\" width=\"" + detail::fixed(pw) +
       "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"" + detail::fixed(height - 10.0) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + detail::xml_escape(xlabel) + "</text>\n";
  s += "<text x=\"15\" y=\"" + detail::fixed(top + ph / 2) + "\" font-size=\"12\" transform=\"rotate(-90 15 " +
       detail::fixed(top + ph / 2) + ")\" text-anchor=\"middle\">" + detail::xml_escape(ylabel) + "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    s += "<text x=\"" + detail::fixed(sx(xv)) + "\" y=\"" + detail::fixed(top + ph + 15) +
         "\" text-anchor=\"middle\" font-size=\"10\">" + detail::fixed(xv, 3) + "</text>\n";
    s += "<text x=\"" + detail::fixed(left - 5) + "\" y=\"" + detail::fixed(sy(yv) + 3) +
         "\" text-anchor=\"end\" font-size=\"10\">" + detail::fixed(yv, 3) + "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto* color = detail::kPalette[k % std::size(detail::kPalette)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].x[i]) || !std::isfinite(series[k].y[i])) continue;
      s += detail::fixed(sx(series[k].x[i])) + "," + detail::fixed(sy(series[k].y[i])) + " ";
    }
    s += "\"/>\n";
    s += "<text x=\"" + detail::fixed(left + 10) + "\" y=\"" + detail::fixed(top + 15 + 14.0 * k) + "\" fill=\"" +
         color + "\" font-size=\"11\">" + detail::xml_escape(series[k].name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Stem plot of bin powers in dBc, clipped at `floor_dbc`.
inline std::string svg_tone_bars(std::string_view title, const std::vector<std::pair<std::string, const SpectrumReport*>>& reports,
                                 double floor_dbc = -140.0, int width = 640, int height = 400) {
  std::vector<Series> series;
  for (const auto& [name, r] : reports) {
    Series s{name, {}, {}};
    for (std::size_t k = 1; k < r->bin_power_dbc.size(); ++k) {
      const double db = std::max(floor_dbc, r->bin_power_dbc[k]);
      const double f = r->bin_frequency_ghz(k);
      s.x.insert(s.x.end(), {f, f, f});
      s.y.insert(s.y.end(), {floor_dbc, db, floor_dbc});
    }
    series.push_back(std::move(s));
  }
  return svg_line_plot(title, "frequency (GHz)", "power (dBc)", series, width, height);
}

/// Eye raster as an SVG whose pixel size equals the raster size.
inline std::string svg_eye(const EyeRaster& r) {
  std::uint32_t peak = 1;
  for (auto c : r.counts) peak = std::max(peak, c);
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(r.width) + "\" height=\"" +
                  std::to_string(r.height) + "\" shape-rendering=\"crispEdges\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n";
  for (std::size_t row = 0; row < r.height; ++row) {
    for (std::size_t col = 0; col < r.width; ++col) {
      const auto c = r.at(row, col);
      if (c == 0) continue;
      const int level = 64 + static_cast<int>(191.0 * std::sqrt(static_cast<double>(c) / peak));
      s += "<rect x=\"" + std::to_string(col) + "\" y=\"" + std::to_string(row) +
           "\" width=\"1\" height=\"1\" fill=\"rgb(" + std::to_string(level) + "," + std::to_string(level) + ",0)\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace mrm
