// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support.hpp"

using namespace mrm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double wrap_cycles(double c) { return c - std::round(c); }

// ---------------------------------------------------------------------------

Outcome physics_invariants() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coupling(0.05, 0.995);
  std::uniform_real_distribution<double> phase(-4 * kPi, 4 * kPi);
  const int draws = 5000;
  double conservation = 0.0, periodicity = 0.0, null_depth = 0.0, excess = -1.0, negative = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double r1 = coupling(rng), r2 = coupling(rng), a = coupling(rng), phi = phase(rng);
    const double t = thru_gain(phi, r1, r2, a), d = drop_gain(phi, r1, r2, a);
    conservation = std::max(conservation, std::abs(thru_gain(phi, r1, r2, 1.0) + drop_gain(phi, r1, r2, 1.0) - 1.0));
    excess = std::max(excess, t + d - 1.0);
    negative = std::min({negative, t, d});
    periodicity = std::max({periodicity, std::abs(thru_gain(phi + 2 * kPi, r1, r2, a) - t),
                            std::abs(drop_gain(phi + 2 * kPi, r1, r2, a) - d)});
    // Critical coupling of the through port: r1 = r2 * a.
    null_depth = std::max(null_depth, thru_gain(2 * kPi * std::round(phi / (2 * kPi)), r2 * a, r2, a));
  }
  const double secs = seconds_since(t0);
  const bool ok = conservation <= 1e-12 && excess <= 1e-12 && negative >= -1e-12 && periodicity <= 1e-12 &&
                  null_depth <= 1e-12 && secs < 5.0;
  return {ok, fmt("%d draws: max|T+D-1| (a=1) %.1e, max(T+D-1) %.1e, min gain %.1e, 2pi drift %.1e, "
                  "critical null %.1e; %.2f s (limit 5 s)",
                  draws, conservation, excess, negative, periodicity, null_depth, secs)};
}

Outcome extinction_ratio() {
  const double er = extinction_ratio_db(0.25, 0.75);
  const bool ok = std::abs(er - 4.7712) <= 0.001 && std::abs(er - 4.8) < 0.05;
  return {ok, fmt("ER(0.25, 0.75) = %.4f dB; published 4.8 dB", er)};
}

Outcome db_bit_pairs() {
  const double pairs[][2] = {{16.0, 2.65}, {14.2, 2.36}, {14.7, 2.44}, {17.9, 2.97}};
  bool ok = true;
  std::string s;
  for (const auto& p : pairs) {
    const double bits = db_to_bits(p[0]);
    ok = ok && std::abs(bits - p[1]) <= 0.05;
    s += fmt("%.1f dB -> %.3f bit (published %.2f); ", p[0], bits, p[1]);
  }
  s.resize(s.size() - 2);
  return {ok, s};
}

Outcome latency_phase() {
  // 8 GHz tone, 64 GS/s, 640-sample coherent record (bin 80), 10 ps skew.
  const std::size_t n = 640, k = 80, guard = 48;
  auto cfg = canonical_config().link;
  DriveWaveform drive;
  drive.sample_rate_ghz = 64.0;
  for (std::size_t i = 0; i < n + 2 * guard; ++i) {
    const double m = static_cast<double>((i + n - guard) % n);
    drive.samples.push_back(1.5 + 0.4 * std::sin(2 * kPi * std::fmod(k * m, double(n)) / double(n)));
  }
  const auto ref = simulate_link(cfg, drive, Architecture::notch_only);
  cfg.fiber_delay_thru_ps = 10.0;
  cfg.fiber_delay_drop_ps = 10.0;
  const auto del = simulate_link(cfg, drive, Architecture::notch_only);
  if (del.valid_begin > guard) return {false, "delay edge overlaps the analysis record"};
  std::span<const double> a(ref.v_out.data() + guard, n), b(del.v_out.data() + guard, n);
  const double cycles = -wrap_cycles(bin_phase_cycles(b, k) - bin_phase_cycles(a, k));
  const double err = std::abs(cycles - 0.08);
  return {err <= 1e-6, fmt("10 ps on 8 GHz: %.9f cycles = %.6f%% of 125 ps (target 8%%); error %.1e cycle",
                           cycles, 100 * cycles, err)};
}

std::vector<double> cubic_record(double amp) {
  const std::size_t n = 640;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = amp * (std::sin(2 * kPi * double(79 * i % n) / n) + std::sin(2 * kPi * double(81 * i % n) / n));
    y[i] = x + 0.1 * x * x * x;
  }
  return y;
}

Outcome imd_oracle() {
  const auto a = two_tone_analysis(cubic_record(0.1), 64.0, 7.9, 8.1);
  const auto b = two_tone_analysis(cubic_record(0.1 * std::pow(10.0, -6.0 / 20.0)), 64.0, 7.9, 8.1);
  const double slope = b.imd3_power_db - a.imd3_power_db;
  const bool ok = std::abs(a.imd3_dbc + 62.5) <= 0.1 && std::abs(slope + 18.0) <= 0.3;
  return {ok, fmt("y = x + 0.1x^3, A = 0.1: IMD3 %.3f dBc (target -62.5 +/- 0.1); -6 dB drive -> IMD3 power %+.3f dB "
                  "(target -18 +/- 0.3)",
                  a.imd3_dbc, slope)};
}

struct Tuned {
  RunConfig rc;
  OptimizeResult opt;
  double seconds = 0.0;
};

Outcome headline(const Tuned& t) {
  const auto t0 = Clock::now();
  const auto& rc = t.rc;
  const auto& link = t.opt.tuned;
  const auto notch = analyze_static(link, Architecture::notch_only, rc.analysis);
  const auto dual = analyze_static(link, Architecture::dual, rc.analysis);
  const double d_inl = improvement_db(notch.linearity.inl_pp, dual.linearity.inl_pp);

  const auto tn = run_two_tone(link, Architecture::notch_only, rc.analysis, notch.window);
  const auto td = run_two_tone(link, Architecture::dual, rc.analysis, dual.window);
  const double gap = tn.spectrum.imd3_dbc - td.spectrum.imd3_dbc;
  const double d_sfdr = delta_sfdr_db(tn.spectrum, td.spectrum);

  const auto pn = run_pam(link, Architecture::notch_only, rc.analysis, notch.window);
  const auto pd = run_pam(link, Architecture::dual, rc.analysis, dual.window);
  const auto& ln = pn.static_levels;
  const auto& ld = pd.static_levels;
  const double secs = t.seconds + seconds_since(t0);

  const bool a = d_inl >= 10.0;
  const bool b = gap >= 3.0;
  const bool c = ld.dnl_pp < ln.dnl_pp && ld.inl_pp < ln.inl_pp;
  std::string s;
  s += fmt("heaters (%.2f, %.2f) pm after %zu evaluations; ", link.ring1.op.heater_detuning_pm,
           link.ring2.op.heater_detuning_pm, t.opt.evaluations);
  s += fmt("(a) INL_pp %.5f -> %.5f, dINL %.2f dB [%s, >= 10; published 16.0 sim / 17.9 meas]; ", notch.linearity.inl_pp,
           dual.linearity.inl_pp, d_inl, a ? "ok" : "FAIL");
  s += fmt("(b) IMD3 %.2f -> %.2f dBc at %.1f/%.1f GHz, gap %.2f dB, dSFDR %.2f dB [%s, >= 3; published dSFDR 6.1]; ",
           tn.spectrum.imd3_dbc, td.spectrum.imd3_dbc, rc.analysis.two_tone.f1_ghz, rc.analysis.two_tone.f2_ghz, gap,
           d_sfdr, b ? "ok" : "FAIL");
  s += fmt("(c) PAM-%zu DNL_pp %.4f -> %.4f (%.2f dB), INL_pp %.4f -> %.4f LSB (%.2f dB) [%s; published 14.2 / 14.7]; ",
           rc.analysis.pam_levels, ln.dnl_pp, ld.dnl_pp, improvement_db(ln.dnl_pp, ld.dnl_pp), ln.inl_pp, ld.inl_pp,
           improvement_db(ln.inl_pp, ld.inl_pp), c ? "ok" : "FAIL");
  s += fmt("%.2f s (limit 60 s)", secs);
  return {a && b && c && secs < 60.0, s};
}

Outcome oracle_equivalence(const Tuned& t) {
  const auto& rc = t.rc;
  // Optimizer vs exhaustive 64 x 64 grid over the same box.
  std::vector<SweepAxis> axes;
  for (const auto& b : rc.optimizer.free_params) axes.push_back({b.param, linspace(b.lo, b.hi, 64)});
  const auto rows = grid_sweep(rc.link, axes, rc.analysis);
  double grid_best = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.reachable) grid_best = std::min(grid_best, r.inl_pp);
  }
  const bool opt_ok = t.opt.objective <= grid_best + 1e-9;

  // Time-domain eye centers vs static map, both architectures.
  double eye_err = 0.0;
  for (auto arch : {Architecture::notch_only, Architecture::dual}) {
    const auto st = analyze_static(t.opt.tuned, arch, rc.analysis);
    const auto p = run_pam(t.opt.tuned, arch, rc.analysis, st.window);
    for (std::size_t k = 0; k < p.static_levels.inl.size(); ++k) {
      eye_err = std::max(eye_err, std::abs(p.eye_levels.inl[k] - p.static_levels.inl[k]));
    }
    for (std::size_t k = 0; k < p.static_levels.dnl.size(); ++k) {
      eye_err = std::max(eye_err, std::abs(p.eye_levels.dnl[k] - p.static_levels.dnl[k]));
    }
  }
  const bool eye_ok = eye_err <= 1e-6;

  // Simulator spectra through the CSV ingestion path vs direct simulation.
  double ingest_err = 0.0;
  for (const auto* link : {&rc.link, &t.opt.tuned}) {
    const auto sim = test_support::simulated_spectra(*link, rc.analysis.transfer_points);
    const auto m = analyze_measured(parse_spectrum_csv(sim.thru_csv, Port::thru, "thru"),
                                    parse_spectrum_csv(sim.drop_csv, Port::drop, "drop"), rc.analysis.g_lo,
                                    rc.analysis.g_hi);
    const double n = analyze_static(*link, Architecture::notch_only, rc.analysis).linearity.inl_pp;
    const double d = analyze_static(*link, Architecture::dual, rc.analysis).linearity.inl_pp;
    ingest_err = std::max({ingest_err, std::abs(m.notch.inl_pp - n), std::abs(m.dual.inl_pp - d)});
  }
  const bool ingest_ok = ingest_err <= 1e-6;

  return {opt_ok && eye_ok && ingest_ok,
          fmt("optimizer %.9g vs 64x64 grid %.9g [%s]; eye vs static max |diff| %.1e LSB [%s]; "
              "CSV ingestion vs direct INL max |diff| %.1e FS [%s]",
              t.opt.objective, grid_best, opt_ok ? "ok" : "FAIL", eye_err, eye_ok ? "ok" : "FAIL", ingest_err,
              ingest_ok ? "ok" : "FAIL")};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MRMLINK_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto work = fs::temp_directory_path() / "mrmlink_acceptance_determinism";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();
  const std::vector<std::string> commands = {
      "spectrum", "transfer", "inl", "two-tone", "eye", "optimize", "sweep",
      "ingest --thru " + w + "/spectrum/spectrum_thru.csv --drop " + w + "/spectrum/spectrum_drop.csv",
  };
  std::size_t files = 0;
  std::string failed;
  for (const auto& cmd : commands) {
    const std::string name = cmd.substr(0, cmd.find(' '));
    for (const char* run : {"", "_again"}) {
      if (run_cli(cmd + " --seed 7 --out " + w + "/" + name + run) != 0) failed += name + "(exit) ";
    }
    const fs::path a = work / name, b = work / (name + "_again");
    if (!fs::exists(a) || !fs::exists(b)) continue;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (slurp(e.path()) != slurp(b / e.path().filename())) failed += name + "/" + e.path().filename().string() + " ";
    }
  }
  fs::remove_all(work);
  return {failed.empty() && files > 0,
          fmt("%zu commands x 2 runs, %zu output files compared byte-for-byte%s%s", commands.size(), files,
              failed.empty() ? "" : "; differing: ", failed.c_str())};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("AC%d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "physics invariants", physics_invariants);
  report(2, "extinction-ratio window", extinction_ratio);
  report(3, "dB/bit pairings", db_bit_pairs);
  report(4, "latency-mismatch phase", latency_phase);
  report(5, "IMD oracle", imd_oracle);

  Tuned tuned;
  std::string tune_error;
  try {
    const auto t0 = Clock::now();
    tuned.rc = canonical_config();
    tuned.opt = optimize(tuned.rc.link, tuned.rc.optimizer, tuned.rc.analysis);
    tuned.seconds = seconds_since(t0);
  } catch (const std::exception& e) {
    tune_error = e.what();
  }
  const auto needs_tuning = [&](auto f) {
    return [&, f]() -> Outcome {
      if (!tune_error.empty()) return {false, "optimizer failed: " + tune_error};
      return f(tuned);
    };
  };
  report(6, "headline improvement (canonical device, tuned heaters)", needs_tuning(headline));
  report(7, "oracle equivalence", needs_tuning(oracle_equivalence));
  report(8, "determinism", determinism);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
