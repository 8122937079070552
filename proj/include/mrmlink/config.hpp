#pragma once

// Run configuration: JSON load/save with strict key checking.
//
// Every key is optional; missing keys take the canonical defaults below.
// Unknown keys are rejected with their full path so that a typo in a
// physics parameter can never be silently absorbed. See docs/config.md for
// the schema.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dual_link.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "optimizer.hpp"

namespace mrm {

struct SweepAxisSpec {
  FreeParam param = FreeParam::ring2_heater_detuning;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t points = 2;

  bool operator==(const SweepAxisSpec&) const = default;
};

struct SweepSpec {
  std::vector<SweepAxisSpec> axes;
  std::size_t cap = kDefaultSweepCap;

  std::vector<SweepAxis> grid() const {
    std::vector<SweepAxis> out;
    for (const auto& a : axes) out.push_back({a.param, linspace(a.lo, a.hi, a.points)});
    return out;
  }

  bool operator==(const SweepSpec&) const = default;
};

// Laser-wavelength sweep around the laser used by the `spectrum` command.
struct SpectrumSweep {
  double span_pm = 1200.0;
  std::size_t points = 1201;

  bool operator==(const SpectrumSweep&) const = default;
};

struct RunConfig {
  LinkConfig link;
  AnalysisSettings analysis;
  SearchSpec optimizer;
  SweepSpec sweep;
  SpectrumSweep spectrum;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  void validate() const {
    link.validate();
    analysis.validate();
    optimizer.validate();
    detail::require(spectrum.points >= 16, "spectrum.points must be >= 16");
    detail::require(std::isfinite(spectrum.span_pm) && spectrum.span_pm > 0.0, "spectrum.span_pm must be > 0");
    for (const auto& a : sweep.axes) {
      detail::require(std::isfinite(a.lo) && std::isfinite(a.hi) && a.lo <= a.hi && a.points >= 1,
                      "sweep axis " + std::string(to_string(a.param)) + " needs lo <= hi and points >= 1");
    }
  }

  bool operator==(const RunConfig&) const = default;
};

/// The documented default device: two identical 10-um-radius O-band add-drop
/// rings with a 50 pm/V reverse-bias tuning slope over a 0-4 V drive.
inline RunConfig canonical_config() {
  RunConfig c;
  for (auto* ch : {&c.link.ring1, &c.link.ring2}) {
    ch->device = RingDevice{};
    ch->op.bias_tuning_pm_per_v = 50.0;
    ch->op.v_min = 0.0;
    ch->op.v_max = 4.0;
  }
  c.link.ring1.op.heater_detuning_pm = 0.0;
  c.link.ring2.op.heater_detuning_pm = -150.0;
  c.link.laser1 = {1310.0, 1.0};
  c.link.laser2 = {1312.0, 1.0};
  c.analysis.two_tone = TwoToneSpec{};
  c.analysis.pam = PamSpec{};
  c.optimizer.free_params = {{FreeParam::ring1_heater_detuning, -450.0, 150.0},
                             {FreeParam::ring2_heater_detuning, -450.0, 150.0}};
  c.sweep.axes = {{FreeParam::ring1_heater_detuning, -450.0, 150.0, 64},
                  {FreeParam::ring2_heater_detuning, -450.0, 150.0, 64}};
  return c;
}

namespace detail {

using nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where() + ": expected an object");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ParseError(child(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ParseError(child(key) + ": expected a number or null");
      }
    }
  }

  template <typename Int>
  void count(const std::string& key, Int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) {
        throw ParseError(child(key) + ": expected a non-negative integer");
      }
      out = static_cast<Int>(v->get<unsigned long long>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ParseError(child(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ParseError(child(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParseError(child(it.key()) + ": unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline FreeParam free_param_from(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path + ": expected a parameter name");
  const auto p = parse_free_param(v.get<std::string>());
  if (!p) throw ParseError(path + ": unknown parameter '" + v.get<std::string>() + "'");
  return *p;
}

inline void read_device(ObjectReader& parent, const std::string& key, RingDevice& d) {
  const auto* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.child(key));
  r.number("round_trip_length_um", d.round_trip_length_um);
  r.number("group_index", d.group_index);
  r.number("resonance_wavelength_nm", d.resonance_wavelength_nm);
  r.number("self_coupling_thru", d.self_coupling_thru);
  r.number("self_coupling_drop", d.self_coupling_drop);
  r.number("round_trip_amplitude", d.round_trip_amplitude);
  r.finish();
}

inline void read_op(ObjectReader& parent, const std::string& key, OperatingPoint& op) {
  const auto* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.child(key));
  r.number("heater_detuning_pm", op.heater_detuning_pm);
  r.number("bias_tuning_pm_per_v", op.bias_tuning_pm_per_v);
  r.number("bias_tuning_quadratic_pm_per_v2", op.bias_tuning_quadratic_pm_per_v2);
  r.number("v_min", op.v_min);
  r.number("v_max", op.v_max);
  r.finish();
}

inline void read_channel(ObjectReader& parent, const std::string& key, RingChannel& ch) {
  const auto* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.child(key));
  read_device(r, "device", ch.device);
  read_op(r, "operating_point", ch.op);
  r.finish();
}

inline void read_laser(ObjectReader& parent, const std::string& key, Laser& l) {
  const auto* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.child(key));
  r.number("wavelength_nm", l.wavelength_nm);
  r.number("power_mw", l.power_mw);
  r.finish();
}

inline void read_link(ObjectReader& parent, LinkConfig& l) {
  const auto* v = parent.find("link");
  if (!v) return;
  ObjectReader r(*v, "link");
  if (const auto* t = r.find("topology")) {
    if (*t == "two_fiber_single_lambda") {
      l.topology = Topology::two_fiber_single_lambda;
    } else if (*t == "single_fiber_dual_lambda") {
      l.topology = Topology::single_fiber_dual_lambda;
    } else {
      throw ParseError("link.topology: expected two_fiber_single_lambda or single_fiber_dual_lambda");
    }
  }
  read_laser(r, "laser1", l.laser1);
  read_laser(r, "laser2", l.laser2);
  r.number("drop_power_weight", l.drop_power_weight);
  r.number("fiber_delay_thru_ps", l.fiber_delay_thru_ps);
  r.number("fiber_delay_drop_ps", l.fiber_delay_drop_ps);
  r.number("pd_responsivity_a_per_w", l.pd_responsivity_a_per_w);
  r.number("tia_transimpedance_ohm", l.tia_transimpedance_ohm);
  r.number("min_spacing_linewidths", l.min_spacing_linewidths);
  r.boolean("dual_lambda_crosstalk", l.dual_lambda_crosstalk);
  r.optional_number("lowpass_cutoff_ghz", l.lowpass_cutoff_ghz);
  r.count("delay_kernel_half_width", l.delay_kernel_half_width);
  r.finish();
}

inline void read_window(ObjectReader& r, AnalysisSettings& a) {
  const auto* w = r.find("window");
  if (!w) return;
  if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number() || !(*w)[1].is_number()) {
    throw ParseError("analysis.window: expected [lo, hi]");
  }
  a.g_lo = (*w)[0].get<double>();
  a.g_hi = (*w)[1].get<double>();
}

inline void read_analysis(ObjectReader& root, RunConfig& c) {
  if (const auto* v = root.find("analysis")) {
    ObjectReader r(*v, "analysis");
    read_window(r, c.analysis);
    r.count("transfer_points", c.analysis.transfer_points);
    r.count("pam_levels", c.analysis.pam_levels);
    r.number("tone_swing_fraction", c.analysis.tone_swing_fraction);
    r.optional_number("noise_floor_db_hz", c.analysis.noise_floor_db_hz);
    r.count("eye_width", c.analysis.eye_width);
    r.count("eye_height", c.analysis.eye_height);
    r.finish();
  }
  if (const auto* v = root.find("two_tone")) {
    ObjectReader r(*v, "two_tone");
    auto& t = c.analysis.two_tone;
    r.number("f1_ghz", t.f1_ghz);
    r.number("f2_ghz", t.f2_ghz);
    r.number("sample_rate_ghz", t.sample_rate_ghz);
    r.count("n_samples", t.n_samples);
    r.finish();
  }
  if (const auto* v = root.find("pam")) {
    ObjectReader r(*v, "pam");
    auto& p = c.analysis.pam;
    r.number("symbol_rate_gbaud", p.symbol_rate_gbaud);
    r.count("n_symbols", p.n_symbols);
    r.count("oversampling", p.oversampling);
    r.finish();
  }
  if (const auto* v = root.find("spectrum")) {
    ObjectReader r(*v, "spectrum");
    r.number("span_pm", c.spectrum.span_pm);
    r.count("points", c.spectrum.points);
    r.finish();
  }
}

inline void read_optimizer(ObjectReader& root, RunConfig& c) {
  if (const auto* v = root.find("optimizer")) {
    ObjectReader r(*v, "optimizer");
    if (const auto* fp = r.find("free_params")) {
      if (!fp->is_array()) throw ParseError("optimizer.free_params: expected an array");
      c.optimizer.free_params.clear();
      for (std::size_t i = 0; i < fp->size(); ++i) {
        const std::string path = "optimizer.free_params[" + std::to_string(i) + "]";
        ObjectReader e((*fp)[i], path);
        ParamBound b;
        const auto* name = e.find("param");
        if (!name) throw ParseError(path + ".param: missing");
        b.param = free_param_from(*name, path + ".param");
        e.number("lo", b.lo);
        e.number("hi", b.hi);
        e.finish();
        c.optimizer.free_params.push_back(b);
      }
    }
    if (const auto* o = r.find("objective")) {
      if (*o == "inl_pp") {
        c.optimizer.objective = Objective::inl_pp;
      } else if (*o == "imd3_dbc") {
        c.optimizer.objective = Objective::imd3_dbc;
      } else {
        throw ParseError("optimizer.objective: expected inl_pp or imd3_dbc");
      }
    }
    r.count("budget", c.optimizer.budget);
    r.count("grid_points_per_dim", c.optimizer.grid_points_per_dim);
    r.count("refine_starts", c.optimizer.refine_starts);
    r.number("xtol", c.optimizer.xtol);
    r.finish();
  }
  if (const auto* v = root.find("sweep")) {
    ObjectReader r(*v, "sweep");
    if (const auto* ax = r.find("axes")) {
      if (!ax->is_array()) throw ParseError("sweep.axes: expected an array");
      c.sweep.axes.clear();
      for (std::size_t i = 0; i < ax->size(); ++i) {
        const std::string path = "sweep.axes[" + std::to_string(i) + "]";
        ObjectReader e((*ax)[i], path);
        SweepAxisSpec a;
        const auto* name = e.find("param");
        if (!name) throw ParseError(path + ".param: missing");
        a.param = free_param_from(*name, path + ".param");
        e.number("lo", a.lo);
        e.number("hi", a.hi);
        e.count("points", a.points);
        e.finish();
        c.sweep.axes.push_back(a);
      }
    }
    r.count("cap", c.sweep.cap);
    r.finish();
  }
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

/// Parses and validates a config document. Schema problems raise ParseError;
/// physically invalid values raise InvalidArgument naming the field.
inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c = canonical_config();
  detail::ObjectReader root(j, "");
  detail::read_channel(root, "ring1", c.link.ring1);
  detail::read_channel(root, "ring2", c.link.ring2);
  detail::read_link(root, c.link);
  detail::read_analysis(root, c);
  detail::read_optimizer(root, c);
  root.count("seed", c.seed);
  root.string("output_dir", c.output_dir);
  root.finish();
  c.analysis.pam.seed = c.seed;
  c.validate();
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Complete, defaults-resolved echo of a config.
inline nlohmann::json config_to_json(const RunConfig& c) {
  using nlohmann::json;
  auto device = [](const RingDevice& d) {
    return json{{"round_trip_length_um", d.round_trip_length_um},
                {"group_index", d.group_index},
                {"resonance_wavelength_nm", d.resonance_wavelength_nm},
                {"self_coupling_thru", d.self_coupling_thru},
                {"self_coupling_drop", d.self_coupling_drop},
                {"round_trip_amplitude", d.round_trip_amplitude}};
  };
  auto op = [](const OperatingPoint& o) {
    return json{{"heater_detuning_pm", o.heater_detuning_pm},
                {"bias_tuning_pm_per_v", o.bias_tuning_pm_per_v},
                {"bias_tuning_quadratic_pm_per_v2", o.bias_tuning_quadratic_pm_per_v2},
                {"v_min", o.v_min},
                {"v_max", o.v_max}};
  };
  auto channel = [&](const RingChannel& ch) {
    return json{{"device", device(ch.device)}, {"operating_point", op(ch.op)}};
  };
  auto laser = [](const Laser& l) { return json{{"wavelength_nm", l.wavelength_nm}, {"power_mw", l.power_mw}}; };
  const auto& l = c.link;
  json link{{"topology", l.topology == Topology::two_fiber_single_lambda ? "two_fiber_single_lambda"
                                                                         : "single_fiber_dual_lambda"},
            {"laser1", laser(l.laser1)},
            {"laser2", laser(l.laser2)},
            {"drop_power_weight", l.drop_power_weight},
            {"fiber_delay_thru_ps", l.fiber_delay_thru_ps},
            {"fiber_delay_drop_ps", l.fiber_delay_drop_ps},
            {"pd_responsivity_a_per_w", l.pd_responsivity_a_per_w},
            {"tia_transimpedance_ohm", l.tia_transimpedance_ohm},
            {"min_spacing_linewidths", l.min_spacing_linewidths},
            {"dual_lambda_crosstalk", l.dual_lambda_crosstalk},
            {"lowpass_cutoff_ghz", detail::optional_json(l.lowpass_cutoff_ghz)},
            {"delay_kernel_half_width", l.delay_kernel_half_width}};
  const auto& a = c.analysis;
  json analysis{{"window", json::array({a.g_lo, a.g_hi})},
                {"transfer_points", a.transfer_points},
                {"pam_levels", a.pam_levels},
                {"tone_swing_fraction", a.tone_swing_fraction},
                {"noise_floor_db_hz", detail::optional_json(a.noise_floor_db_hz)},
                {"eye_width", a.eye_width},
                {"eye_height", a.eye_height}};
  json two_tone{{"f1_ghz", a.two_tone.f1_ghz},
                {"f2_ghz", a.two_tone.f2_ghz},
                {"sample_rate_ghz", a.two_tone.sample_rate_ghz},
                {"n_samples", a.two_tone.n_samples}};
  json pam{{"symbol_rate_gbaud", a.pam.symbol_rate_gbaud},
           {"n_symbols", a.pam.n_symbols},
           {"oversampling", a.pam.oversampling}};
  json free = json::array();
  for (const auto& b : c.optimizer.free_params) {
    free.push_back({{"param", std::string(to_string(b.param))}, {"lo", b.lo}, {"hi", b.hi}});
  }
  json optimizer{{"free_params", free},
                 {"objective", c.optimizer.objective == Objective::inl_pp ? "inl_pp" : "imd3_dbc"},
                 {"budget", c.optimizer.budget},
                 {"grid_points_per_dim", c.optimizer.grid_points_per_dim},
                 {"refine_starts", c.optimizer.refine_starts},
                 {"xtol", c.optimizer.xtol}};
  json axes = json::array();
  for (const auto& ax : c.sweep.axes) {
    axes.push_back({{"param", std::string(to_string(ax.param))}, {"lo", ax.lo}, {"hi", ax.hi}, {"points", ax.points}});
  }
  return json{{"ring1", channel(l.ring1)},
              {"ring2", channel(l.ring2)},
              {"link", link},
              {"analysis", analysis},
              {"two_tone", two_tone},
              {"pam", pam},
              {"spectrum", {{"span_pm", c.spectrum.span_pm}, {"points", c.spectrum.points}}},
              {"optimizer", optimizer},
              {"sweep", {{"axes", axes}, {"cap", c.sweep.cap}}},
              {"seed", c.seed},
              {"output_dir", c.output_dir}};
}

}  // namespace mrm
