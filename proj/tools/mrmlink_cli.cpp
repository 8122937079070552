// mrmlink: command-line front end for the dual-ring link simulator.
//
//   mrmlink <command> [--config FILE] [overrides...]
//
// Commands: spectrum, transfer, inl, two-tone, eye, optimize, sweep, ingest.
// Exit codes: 0 success, 2 config/parse error, 3 infeasible analysis,
// 4 I/O error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <mrmlink/mrmlink.hpp>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kConfigError = 2, kInfeasible = 3, kIoError = 4 };

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::optional<double> detune1_pm;
  std::optional<double> detune2_pm;
  std::string window;
  std::optional<double> f1_ghz;
  std::optional<double> f2_ghz;
  std::optional<std::size_t> levels;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration (canonical device if omitted)");
  cmd->add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
  cmd->add_option("--detune1-pm", o.detune1_pm, "Ring 1 heater detuning in pm");
  cmd->add_option("--detune2-pm", o.detune2_pm, "Ring 2 heater detuning in pm");
  cmd->add_option("--window", o.window, "Normalized gain window lo:hi, e.g. 0.25:0.75");
  cmd->add_option("--f1", o.f1_ghz, "First tone in GHz");
  cmd->add_option("--f2", o.f2_ghz, "Second tone in GHz");
  cmd->add_option("--levels", o.levels, "PAM levels");
  cmd->add_option("--seed", o.seed, "PRNG seed");
}

mrm::RunConfig resolve(const Overrides& o) {
  mrm::RunConfig cfg = o.config_path.empty() ? mrm::canonical_config() : mrm::load_config(o.config_path);
  if (o.detune1_pm) cfg.link.ring1.op.heater_detuning_pm = *o.detune1_pm;
  if (o.detune2_pm) cfg.link.ring2.op.heater_detuning_pm = *o.detune2_pm;
  if (!o.window.empty()) {
    const auto colon = o.window.find(':');
    if (colon == std::string::npos) throw mrm::ParseError("--window: expected lo:hi");
    try {
      cfg.analysis.g_lo = std::stod(o.window.substr(0, colon));
      cfg.analysis.g_hi = std::stod(o.window.substr(colon + 1));
    } catch (const std::exception&) {
      throw mrm::ParseError("--window: expected two numbers as lo:hi");
    }
  }
  if (o.f1_ghz) cfg.analysis.two_tone.f1_ghz = *o.f1_ghz;
  if (o.f2_ghz) cfg.analysis.two_tone.f2_ghz = *o.f2_ghz;
  if (o.levels) cfg.analysis.pam_levels = *o.levels;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  cfg.analysis.pam.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

class Writer {
 public:
  explicit Writer(const mrm::RunConfig& cfg) : dir_(cfg.output_dir) {}

  void put(const std::string& name, const std::string& content) {
    mrm::write_atomic(dir_ / name, content);
    std::cout << (dir_ / name).string() << "\n";
  }

 private:
  fs::path dir_;
};

json window_json(const mrm::WindowedCurve& w) {
  return json{{"v_start", w.v_start},
              {"v_end", w.v_end},
              {"span_v", w.span_v},
              {"span_fraction", w.span_fraction},
              {"increasing", w.increasing},
              {"candidates", w.candidates},
              {"ambiguous", w.ambiguous()}};
}

json improvement_json(double ref, double test) {
  const double db = mrm::improvement_db(ref, test);
  return json{{"db", db}, {"bits", mrm::db_to_bits(db)}};
}

mrm::Series curve_series(const std::string& name, const mrm::TransferCurve& c) {
  return {name, c.v_norm, c.gain_norm};
}

// --------------------------------------------------------------------------

void cmd_spectrum(const mrm::RunConfig& cfg) {
  const auto& link = cfg.link;
  const double center = link.laser1.wavelength_nm;
  const auto grid = mrm::linspace(center - 0.5e-3 * cfg.spectrum.span_pm, center + 0.5e-3 * cfg.spectrum.span_pm,
                                  cfg.spectrum.points);
  mrm::CsvTable table({"wavelength_nm", "thru_gain", "drop_gain", "summed_gain"});
  std::vector<double> thru_mw, drop_mw, tg, dg, sg;
  const double v = link.ring1.op.v_min;
  for (double lam : grid) {
    // Sweep the laser: both rings see the same wavelength at v_min.
    mrm::LinkConfig c = link;
    c.topology = mrm::Topology::two_fiber_single_lambda;
    c.laser1.wavelength_nm = lam;
    const auto p = mrm::port_powers(c, v);
    const double t = p.thru_mw / c.laser1.power_mw;
    const double d = p.drop_mw / c.laser1.power_mw;
    table.add_row({lam, t, d, t + d});
    thru_mw.push_back(p.thru_mw);
    drop_mw.push_back(p.drop_mw);
    tg.push_back(t);
    dg.push_back(d);
    sg.push_back(t + d);
  }
  json rings = json::array();
  for (const auto* ch : {&link.ring1, &link.ring2}) {
    json r{{"fsr_pm", mrm::fsr_pm(ch->device, ch->device.resonance_wavelength_nm)}};
    try {
      r["loaded_q"] = mrm::loaded_q(ch->device);
      r["linewidth_pm"] = mrm::linewidth_pm(ch->device);
    } catch (const mrm::DegenerateResponse&) {
      r["loaded_q"] = nullptr;
    }
    rings.push_back(r);
  }
  Writer w(cfg);
  w.put("spectrum.csv", table.str());
  w.put("spectrum_thru.csv", mrm::spectrum_csv_text(grid, thru_mw));
  w.put("spectrum_drop.csv", mrm::spectrum_csv_text(grid, drop_mw));
  w.put("spectrum.svg", mrm::svg_line_plot("Power-gain spectra at v_min", "wavelength (nm)", "power gain",
                                           {{"ring 1 through", grid, tg}, {"ring 2 drop", grid, dg}, {"sum", grid, sg}}));
  w.put("spectrum.json", mrm::dump_json(mrm::report_envelope("spectrum", cfg, {{"rings", rings}})));
}

void cmd_transfer(const mrm::RunConfig& cfg) {
  const auto notch = mrm::analyze_static(cfg.link, mrm::Architecture::notch_only, cfg.analysis);
  const auto dual = mrm::analyze_static(cfg.link, mrm::Architecture::dual, cfg.analysis);
  Writer w(cfg);
  w.put("transfer_notch.csv", mrm::transfer_csv(notch.curve));
  w.put("transfer_dual.csv", mrm::transfer_csv(dual.curve));
  w.put("transfer.svg", mrm::svg_line_plot("Static transfer", "normalized drive", "normalized gain",
                                           {curve_series("notch only", notch.curve), curve_series("dual", dual.curve)}));
  json res{{"extinction_ratio_db", mrm::extinction_ratio_db(cfg.analysis.g_lo, cfg.analysis.g_hi)},
           {"notch", {{"window", window_json(notch.window)}}},
           {"dual", {{"window", window_json(dual.window)}}},
           {"span_ratio", dual.window.span_v / notch.window.span_v}};
  w.put("transfer.json", mrm::dump_json(mrm::report_envelope("transfer", cfg, res)));
}

void cmd_inl(const mrm::RunConfig& cfg) {
  const auto notch = mrm::analyze_static(cfg.link, mrm::Architecture::notch_only, cfg.analysis);
  const auto dual = mrm::analyze_static(cfg.link, mrm::Architecture::dual, cfg.analysis);
  Writer w(cfg);
  w.put("inl_notch.csv", mrm::inl_csv(notch.window.curve, notch.linearity));
  w.put("inl_dual.csv", mrm::inl_csv(dual.window.curve, dual.linearity));
  w.put("inl.svg", mrm::svg_line_plot("INL inside the full-scale window", "normalized drive", "INL (fraction of FS)",
                                      {{"notch only", notch.window.curve.v_norm, notch.linearity.inl},
                                       {"dual", dual.window.curve.v_norm, dual.linearity.inl}}));
  json res{{"extinction_ratio_db", mrm::extinction_ratio_db(cfg.analysis.g_lo, cfg.analysis.g_hi)},
           {"notch", {{"inl_pp", notch.linearity.inl_pp}, {"window", window_json(notch.window)}}},
           {"dual", {{"inl_pp", dual.linearity.inl_pp}, {"window", window_json(dual.window)}}},
           {"delta_inl", improvement_json(notch.linearity.inl_pp, dual.linearity.inl_pp)}};
  w.put("inl.json", mrm::dump_json(mrm::report_envelope("inl", cfg, res)));
}

void cmd_two_tone(const mrm::RunConfig& cfg) {
  const auto notch = mrm::analyze_static(cfg.link, mrm::Architecture::notch_only, cfg.analysis);
  const auto dual = mrm::analyze_static(cfg.link, mrm::Architecture::dual, cfg.analysis);
  const auto tn = mrm::run_two_tone(cfg.link, mrm::Architecture::notch_only, cfg.analysis, notch.window);
  const auto td = mrm::run_two_tone(cfg.link, mrm::Architecture::dual, cfg.analysis, dual.window);
  Writer w(cfg);
  w.put("two_tone_notch.csv", mrm::spectrum_bins_csv(tn.spectrum));
  w.put("two_tone_dual.csv", mrm::spectrum_bins_csv(td.spectrum));
  w.put("two_tone.svg", mrm::svg_tone_bars("Two-tone output spectra", {{"notch only", &tn.spectrum}, {"dual", &td.spectrum}}));
  auto arch = [](const mrm::TwoToneResult& t) {
    auto j = mrm::to_json(t.spectrum);
    j["center_v"] = t.center_v;
    j["amplitude_v"] = t.amplitude_v;
    return j;
  };
  json res{{"notch", arch(tn)},
           {"dual", arch(td)},
           {"imd3_gap_db", tn.spectrum.imd3_dbc - td.spectrum.imd3_dbc},
           {"delta_sfdr_db", mrm::delta_sfdr_db(tn.spectrum, td.spectrum)}};
  w.put("two_tone.json", mrm::dump_json(mrm::report_envelope("two-tone", cfg, res)));
}

void cmd_eye(const mrm::RunConfig& cfg) {
  const auto notch = mrm::analyze_static(cfg.link, mrm::Architecture::notch_only, cfg.analysis);
  const auto dual = mrm::analyze_static(cfg.link, mrm::Architecture::dual, cfg.analysis);
  const auto pn = mrm::run_pam(cfg.link, mrm::Architecture::notch_only, cfg.analysis, notch.window);
  const auto pd = mrm::run_pam(cfg.link, mrm::Architecture::dual, cfg.analysis, dual.window);
  Writer w(cfg);
  w.put("eye_levels_notch.csv", mrm::levels_csv(pn.static_levels));
  w.put("eye_levels_dual.csv", mrm::levels_csv(pd.static_levels));
  w.put("eye_notch.svg", mrm::svg_eye(pn.raster));
  w.put("eye_dual.svg", mrm::svg_eye(pd.raster));
  json res{{"levels", cfg.analysis.pam_levels},
           {"notch", mrm::to_json(pn.static_levels)},
           {"dual", mrm::to_json(pd.static_levels)},
           {"delta_dnl", improvement_json(pn.static_levels.dnl_pp, pd.static_levels.dnl_pp)},
           {"delta_inl", improvement_json(pn.static_levels.inl_pp, pd.static_levels.inl_pp)},
           {"eye_center_check",
            {{"notch_inl_pp", pn.eye_levels.inl_pp}, {"dual_inl_pp", pd.eye_levels.inl_pp}}}};
  w.put("eye.json", mrm::dump_json(mrm::report_envelope("eye", cfg, res)));
}

void cmd_optimize(const mrm::RunConfig& cfg) {
  const auto baseline = mrm::analyze_static(cfg.link, mrm::Architecture::notch_only, cfg.analysis);
  const auto r = mrm::optimize(cfg.link, cfg.optimizer, cfg.analysis);
  json best = json::object();
  for (const auto& [p, v] : r.best) best[std::string(mrm::to_string(p))] = v;
  json res{{"best", best},
           {"objective", r.objective},
           {"best_grid_objective", r.best_grid_objective},
           {"evaluations", r.evaluations},
           {"notch_inl_pp", baseline.linearity.inl_pp},
           {"before", r.before ? mrm::to_json(*r.before) : json(nullptr)},
           {"after", mrm::to_json(r.after)},
           {"delta_inl_vs_notch", improvement_json(baseline.linearity.inl_pp, r.after.inl_pp)}};
  mrm::CsvTable trace({"step", "objective"});
  for (std::size_t i = 0; i < r.trace.size(); ++i) trace.add_row({static_cast<double>(i), r.trace[i]});
  mrm::RunConfig tuned = cfg;
  tuned.link = r.tuned;
  Writer w(cfg);
  w.put("optimize_trace.csv", trace.str());
  auto tuned_json = mrm::config_to_json(tuned);
  tuned_json.erase("output_dir");
  w.put("tuned_config.json", mrm::dump_json(tuned_json));
  w.put("optimize.json", mrm::dump_json(mrm::report_envelope("optimize", cfg, res)));
}

void cmd_sweep(const mrm::RunConfig& cfg) {
  if (cfg.sweep.axes.empty()) throw mrm::InvalidArgument("sweep: config defines no sweep.axes");
  const auto axes = cfg.sweep.grid();
  const auto rows = mrm::grid_sweep(cfg.link, axes, cfg.analysis, cfg.sweep.cap);
  std::vector<std::string> cols;
  for (const auto& a : axes) cols.emplace_back(mrm::to_string(a.param));
  cols.insert(cols.end(), {"inl_pp", "span_v", "reachable"});
  mrm::CsvTable t(cols);
  std::size_t reachable = 0;
  const mrm::SweepRow* best = nullptr;
  for (const auto& r : rows) {
    std::vector<double> v = r.params;
    v.insert(v.end(), {r.inl_pp, r.span_v, r.reachable ? 1.0 : 0.0});
    t.add_row(v);
    if (r.reachable) {
      ++reachable;
      if (!best || r.inl_pp < best->inl_pp) best = &r;
    }
  }
  json res{{"rows", rows.size()}, {"reachable", reachable}};
  if (best) res["best"] = {{"params", best->params}, {"inl_pp", best->inl_pp}};
  Writer w(cfg);
  w.put("sweep.csv", t.str());
  w.put("sweep.json", mrm::dump_json(mrm::report_envelope("sweep", cfg, res)));
}

void cmd_ingest(const mrm::RunConfig& cfg, const std::string& thru_path, const std::string& drop_path) {
  const auto thru = mrm::ingest_spectrum_csv(thru_path, mrm::Port::thru);
  const auto drop = mrm::ingest_spectrum_csv(drop_path, mrm::Port::drop);
  const auto a = mrm::analyze_measured(thru, drop, cfg.analysis.g_lo, cfg.analysis.g_hi);
  mrm::CsvTable t({"wavelength_nm", "thru_gain", "drop_gain", "summed_gain"});
  for (std::size_t i = 0; i < a.spectrum.wavelength_nm.size(); ++i) {
    t.add_row({a.spectrum.wavelength_nm[i], a.spectrum.thru_gain[i], a.spectrum.drop_gain[i], a.spectrum.summed_gain[i]});
  }
  Writer w(cfg);
  w.put("ingest_spectrum.csv", t.str());
  w.put("ingest_inl_notch.csv", mrm::inl_csv(a.notch_window.curve, a.notch));
  w.put("ingest_inl_dual.csv", mrm::inl_csv(a.dual_window.curve, a.dual));
  json res{{"thru_file", fs::path(thru_path).filename().string()},
           {"drop_file", fs::path(drop_path).filename().string()},
           {"grid_points", a.spectrum.wavelength_nm.size()},
           {"reference_mw", a.spectrum.reference_mw},
           {"notch", {{"inl_pp", a.notch.inl_pp}, {"window", window_json(a.notch_window)}}},
           {"dual", {{"inl_pp", a.dual.inl_pp}, {"window", window_json(a.dual_window)}}},
           {"delta_inl", improvement_json(a.notch.inl_pp, a.dual.inl_pp)}};
  w.put("ingest.json", mrm::dump_json(mrm::report_envelope("ingest", cfg, res)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual micro-ring modulator link simulator and linearity toolkit"};
  app.require_subcommand(1);
  Overrides o;
  std::string thru_path, drop_path;

  auto* spectrum = app.add_subcommand("spectrum", "Through/drop/summed power-gain spectra");
  auto* transfer = app.add_subcommand("transfer", "Static transfer curves and full-scale window");
  auto* inl = app.add_subcommand("inl", "Endpoint-fit INL of notch-only vs dual");
  auto* two_tone = app.add_subcommand("two-tone", "Two-tone IMD3 / OIP3 / SFDR");
  auto* eye = app.add_subcommand("eye", "PAM-N level DNL/INL and eye rasters");
  auto* optimize = app.add_subcommand("optimize", "Tune design parameters for linearity");
  auto* sweep = app.add_subcommand("sweep", "Exhaustive grid sweep of design parameters");
  auto* ingest = app.add_subcommand("ingest", "Analyze measured thru/drop spectra from CSV");
  for (auto* c : {spectrum, transfer, inl, two_tone, eye, optimize, sweep, ingest}) add_common(c, o);
  ingest->add_option("--thru", thru_path, "Through-port spectrum CSV (wavelength_nm,power_mw)")->required();
  ingest->add_option("--drop", drop_path, "Drop-port spectrum CSV (wavelength_nm,power_mw)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    const auto cfg = resolve(o);
    if (spectrum->parsed()) cmd_spectrum(cfg);
    if (transfer->parsed()) cmd_transfer(cfg);
    if (inl->parsed()) cmd_inl(cfg);
    if (two_tone->parsed()) cmd_two_tone(cfg);
    if (eye->parsed()) cmd_eye(cfg);
    if (optimize->parsed()) cmd_optimize(cfg);
    if (sweep->parsed()) cmd_sweep(cfg);
    if (ingest->parsed()) cmd_ingest(cfg, thru_path, drop_path);
  } catch (const mrm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const mrm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mrm::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mrm::WindowUnreachable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const mrm::InfeasibleSearch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const mrm::DegenerateResponse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
