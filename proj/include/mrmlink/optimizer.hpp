#pragma once

// Design-space search for the dual-ring link.
//
// The search is a deterministic multistart: an exhaustive coarse grid over
// the box, then Nelder-Mead refinement from the best few grid seeds in
// box-normalized coordinates. The evaluation budget is a hard cap that covers
// both phases.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dual_link.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "metrics.hpp"

namespace mrm {

enum class FreeParam {
  ring1_heater_detuning,
  ring2_heater_detuning,
  ring2_self_coupling_thru,
  ring2_self_coupling_drop,
  drop_power_weight,
};

inline constexpr std::string_view to_string(FreeParam p) {
  switch (p) {
    case FreeParam::ring1_heater_detuning: return "ring1.heater_detuning";
    case FreeParam::ring2_heater_detuning: return "ring2.heater_detuning";
    case FreeParam::ring2_self_coupling_thru: return "ring2.self_coupling_thru";
    case FreeParam::ring2_self_coupling_drop: return "ring2.self_coupling_drop";
    case FreeParam::drop_power_weight: return "drop_power_weight";
  }
  return "?";
}

inline std::optional<FreeParam> parse_free_param(std::string_view name) {
  for (auto p : {FreeParam::ring1_heater_detuning, FreeParam::ring2_heater_detuning,
                 FreeParam::ring2_self_coupling_thru, FreeParam::ring2_self_coupling_drop,
                 FreeParam::drop_power_weight}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

inline void set_param(LinkConfig& cfg, FreeParam p, double value) {
  switch (p) {
    case FreeParam::ring1_heater_detuning: cfg.ring1.op.heater_detuning_pm = value; break;
    case FreeParam::ring2_heater_detuning: cfg.ring2.op.heater_detuning_pm = value; break;
    case FreeParam::ring2_self_coupling_thru: cfg.ring2.device.self_coupling_thru = value; break;
    case FreeParam::ring2_self_coupling_drop: cfg.ring2.device.self_coupling_drop = value; break;
    case FreeParam::drop_power_weight: cfg.drop_power_weight = value; break;
  }
}

inline double get_param(const LinkConfig& cfg, FreeParam p) {
  switch (p) {
    case FreeParam::ring1_heater_detuning: return cfg.ring1.op.heater_detuning_pm;
    case FreeParam::ring2_heater_detuning: return cfg.ring2.op.heater_detuning_pm;
    case FreeParam::ring2_self_coupling_thru: return cfg.ring2.device.self_coupling_thru;
    case FreeParam::ring2_self_coupling_drop: return cfg.ring2.device.self_coupling_drop;
    case FreeParam::drop_power_weight: return cfg.drop_power_weight;
  }
  return 0.0;
}

struct ParamBound {
  FreeParam param = FreeParam::ring2_heater_detuning;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const ParamBound&) const = default;
};

enum class Objective { inl_pp, imd3_dbc };

struct SearchSpec {
  std::vector<ParamBound> free_params;
  Objective objective = Objective::inl_pp;
  std::size_t budget = 2000;
  std::size_t grid_points_per_dim = 8;
  std::size_t refine_starts = 4;
  double xtol = 1e-6;  // fraction of each box span

  void validate() const {
    detail::require(!free_params.empty(), "optimizer.free_params must not be empty");
    for (std::size_t i = 0; i < free_params.size(); ++i) {
      const auto& b = free_params[i];
      detail::require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi,
                      "optimizer bounds for " + std::string(to_string(b.param)) + " must be finite with lo < hi");
      for (std::size_t j = 0; j < i; ++j) {
        detail::require(free_params[j].param != b.param,
                        "optimizer.free_params lists " + std::string(to_string(b.param)) + " twice");
      }
    }
    detail::require(budget >= 50, "optimizer.budget must be >= 50");
    detail::require(grid_points_per_dim >= 2, "optimizer.grid_points_per_dim must be >= 2");
    detail::require(refine_starts >= 1, "optimizer.refine_starts must be >= 1");
    detail::require(xtol > 0.0 && xtol < 1.0, "optimizer.xtol must lie in (0, 1)");
  }

  bool operator==(const SearchSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Generic box-constrained minimizer

struct BoxOptions {
  std::size_t budget = 2000;
  std::size_t grid_points_per_dim = 8;
  std::size_t refine_starts = 4;
  double xtol = 1e-6;
};

struct BoxResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> trace;  // best-so-far after the grid and each simplex iteration
  std::size_t evaluations = 0;
  double best_grid_value = std::numeric_limits<double>::infinity();
};

namespace detail {

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Orders (value, point) pairs; non-finite values sort last, ties break
// lexicographically on the point.
inline bool better(double fa, std::span<const double> a, double fb, std::span<const double> b) {
  const bool ga = std::isfinite(fa);
  const bool gb = std::isfinite(fb);
  if (ga != gb) return ga;
  if (ga && fa != fb) return fa < fb;
  return lex_less(a, b);
}

class BudgetedObjective {
 public:
  BudgetedObjective(const std::function<double(std::span<const double>)>& f, std::span<const double> lo,
                    std::span<const double> hi, std::size_t budget)
      : f_(f), lo_(lo.begin(), lo.end()), hi_(hi.begin(), hi.end()), budget_(budget) {}

  bool exhausted() const { return used_ >= budget_; }
  std::size_t used() const { return used_; }

  std::vector<double> to_box(std::span<const double> u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      x[i] = (u[i] >= 1.0) ? hi_[i] : lo_[i] + std::clamp(u[i], 0.0, 1.0) * (hi_[i] - lo_[i]);
    }
    return x;
  }

  // Returns nullopt once the budget is spent.
  std::optional<double> operator()(std::span<const double> u) {
    if (exhausted()) return std::nullopt;
    ++used_;
    const auto x = to_box(u);
    const double v = f_(x);
    const double value = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    if (better(value, x, best_value_, best_x_)) {
      best_value_ = value;
      best_x_ = x;
    }
    return value;
  }

  double best_value() const { return best_value_; }
  const std::vector<double>& best_x() const { return best_x_; }

 private:
  const std::function<double(std::span<const double>)>& f_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::size_t budget_;
  std::size_t used_ = 0;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
};

struct Vertex {
  std::vector<double> u;
  double f;
};

inline void nelder_mead(BudgetedObjective& obj, std::vector<double> start, double start_value, double step,
                        double xtol, std::size_t max_evals, std::vector<double>& trace) {
  const std::size_t d = start.size();
  const std::size_t stop_at = obj.used() + max_evals;
  auto eval = [&](const std::vector<double>& u) -> std::optional<double> {
    if (obj.used() >= stop_at) return std::nullopt;
    return obj(u);
  };
  auto clamp01 = [](std::vector<double> u) {
    for (auto& x : u) x = std::clamp(x, 0.0, 1.0);
    return u;
  };

  std::vector<Vertex> simplex;
  simplex.push_back({start, start_value});
  for (std::size_t i = 0; i < d; ++i) {
    auto u = start;
    u[i] += (u[i] + step <= 1.0) ? step : -step;
    u = clamp01(u);
    const auto f = eval(u);
    if (!f) return;
    simplex.push_back({u, *f});
  }
  auto order = [&] {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return better(a.f, a.u, b.f, b.u); });
  };
  order();

  while (true) {
    double diam = 0.0;
    for (std::size_t k = 1; k <= d; ++k) {
      for (std::size_t i = 0; i < d; ++i) diam = std::max(diam, std::abs(simplex[k].u[i] - simplex[0].u[i]));
    }
    if (diam < xtol) return;

    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < d; ++i) centroid[i] += simplex[k].u[i] / static_cast<double>(d);
    }
    auto along = [&](double t) {
      std::vector<double> u(d);
      for (std::size_t i = 0; i < d; ++i) u[i] = centroid[i] + t * (simplex[d].u[i] - centroid[i]);
      return clamp01(u);
    };
    const auto ur = along(-1.0);
    const auto fr = eval(ur);
    if (!fr) return;
    if (*fr < simplex[0].f) {
      const auto ue = along(-2.0);
      const auto fe = eval(ue);
      if (!fe) return;
      simplex[d] = (*fe < *fr) ? Vertex{ue, *fe} : Vertex{ur, *fr};
    } else if (*fr < simplex[d - 1].f) {
      simplex[d] = {ur, *fr};
    } else {
      const bool outside = *fr < simplex[d].f;
      const auto uc = along(outside ? -0.5 : 0.5);
      const auto fc = eval(uc);
      if (!fc) return;
      if (*fc < (outside ? *fr : simplex[d].f)) {
        simplex[d] = {uc, *fc};
      } else {
        for (std::size_t k = 1; k <= d; ++k) {
          for (std::size_t i = 0; i < d; ++i) simplex[k].u[i] = simplex[0].u[i] + 0.5 * (simplex[k].u[i] - simplex[0].u[i]);
          const auto fs = eval(simplex[k].u);
          if (!fs) return;
          simplex[k].f = *fs;
        }
      }
    }
    order();
    trace.push_back(obj.best_value());
  }
}

}  // namespace detail

/// Minimizes `f` over the box [lo, hi]. Non-finite objective values mark
/// infeasible points. Deterministic for a deterministic `f`.
inline BoxResult minimize_box(const std::function<double(std::span<const double>)>& f, std::span<const double> lo,
                              std::span<const double> hi, const BoxOptions& opt = {}) {
  const std::size_t d = lo.size();
  detail::require(d >= 1 && hi.size() == d, "minimize_box: bounds dimension mismatch");
  detail::require(opt.budget >= 2, "minimize_box: budget too small");

  // Grid resolution shrinks so the grid never takes more than half the budget.
  std::size_t g = opt.grid_points_per_dim;
  while (g > 2 && std::pow(static_cast<double>(g), static_cast<double>(d)) > 0.5 * static_cast<double>(opt.budget)) --g;

  detail::BudgetedObjective obj(f, lo, hi, opt.budget);
  std::vector<detail::Vertex> seeds;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= g;
  for (std::size_t n = 0; n < total; ++n) {
    // Last dimension varies fastest.
    std::vector<double> u(d);
    std::size_t rem = n;
    for (std::size_t i = d; i-- > 0;) {
      u[i] = static_cast<double>(rem % g) / static_cast<double>(g - 1);
      rem /= g;
    }
    const auto v = obj(u);
    if (!v) break;
    seeds.push_back({u, *v});
  }

  BoxResult r;
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return detail::better(a.f, a.u, b.f, b.u); });
  if (seeds.empty() || !std::isfinite(seeds.front().f)) {
    throw InfeasibleSearch("minimize_box: objective infeasible at every grid seed");
  }
  r.best_grid_value = seeds.front().f;
  r.trace.push_back(obj.best_value());

  const double step = 1.0 / static_cast<double>(g - 1);
  std::size_t starts = 0;
  for (const auto& s : seeds) {
    if (starts >= opt.refine_starts || obj.exhausted() || !std::isfinite(s.f)) break;
    const std::size_t remaining = opt.budget - obj.used();
    const std::size_t share = remaining / (opt.refine_starts - starts);
    detail::nelder_mead(obj, s.u, s.f, step, opt.xtol, std::max<std::size_t>(share, d + 2), r.trace);
    ++starts;
  }

  r.x = obj.best_x();
  r.value = obj.best_value();
  r.evaluations = obj.used();
  return r;
}

// ---------------------------------------------------------------------------
// Link optimization

/// Objective value of a configuration; +inf when the window is unreachable or
/// the configuration is physically invalid.
inline double evaluate_objective(const LinkConfig& cfg, Objective objective, const AnalysisSettings& s) {
  try {
    const auto a = analyze_static(cfg, Architecture::dual, s);
    if (objective == Objective::inl_pp) return a.linearity.inl_pp;
    return run_two_tone(cfg, Architecture::dual, s, a.window).spectrum.imd3_dbc;
  } catch (const InvalidArgument&) {
  } catch (const WindowUnreachable&) {
  } catch (const DegenerateResponse&) {
  }
  return std::numeric_limits<double>::infinity();
}

struct OptimizeResult {
  std::vector<std::pair<FreeParam, double>> best;
  double objective = 0.0;
  double best_grid_objective = 0.0;
  std::vector<double> trace;
  std::size_t evaluations = 0;
  LinkConfig tuned;
  std::optional<LinearityReport> before;  // dual architecture at the starting config
  LinearityReport after;
};

namespace detail {

inline std::vector<ParamBound> canonical_order(std::vector<ParamBound> b) {
  std::sort(b.begin(), b.end(), [](const auto& x, const auto& y) { return x.param < y.param; });
  return b;
}

}  // namespace detail

inline OptimizeResult optimize(const LinkConfig& cfg, const SearchSpec& spec, const AnalysisSettings& s) {
  cfg.validate();
  spec.validate();
  s.validate();
  const auto bounds = detail::canonical_order(spec.free_params);
  std::vector<double> lo;
  std::vector<double> hi;
  for (const auto& b : bounds) {
    lo.push_back(b.lo);
    hi.push_back(b.hi);
  }
  const std::function<double(std::span<const double>)> f = [&](std::span<const double> x) {
    LinkConfig c = cfg;
    for (std::size_t i = 0; i < bounds.size(); ++i) set_param(c, bounds[i].param, x[i]);
    return evaluate_objective(c, spec.objective, s);
  };
  BoxOptions opt{spec.budget, spec.grid_points_per_dim, spec.refine_starts, spec.xtol};
  BoxResult box;
  try {
    box = minimize_box(f, lo, hi, opt);
  } catch (const InfeasibleSearch&) {
    throw InfeasibleSearch("optimize: full-scale window unreachable at every seed");
  }

  OptimizeResult r;
  r.tuned = cfg;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    set_param(r.tuned, bounds[i].param, box.x[i]);
    r.best.emplace_back(bounds[i].param, box.x[i]);
  }
  r.objective = box.value;
  r.best_grid_objective = box.best_grid_value;
  r.trace = std::move(box.trace);
  r.evaluations = box.evaluations;
  try {
    r.before = analyze_static(cfg, Architecture::dual, s).linearity;
  } catch (const WindowUnreachable&) {
  }
  r.after = analyze_static(r.tuned, Architecture::dual, s).linearity;
  return r;
}

// ---------------------------------------------------------------------------
// Exhaustive sweep

struct SweepAxis {
  FreeParam param = FreeParam::ring2_heater_detuning;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct SweepRow {
  std::vector<double> params;  // in axis order
  double inl_pp = std::numeric_limits<double>::quiet_NaN();
  double span_v = std::numeric_limits<double>::quiet_NaN();
  bool reachable = false;
};

inline constexpr std::size_t kDefaultSweepCap = 1'000'000;

/// Evaluates every grid point; rows are in lexicographic order with the
/// first axis varying slowest. Unreachable windows are flagged, not dropped.
inline std::vector<SweepRow> grid_sweep(const LinkConfig& cfg, const std::vector<SweepAxis>& axes,
                                        const AnalysisSettings& s, std::size_t cap = kDefaultSweepCap) {
  cfg.validate();
  s.validate();
  detail::require(!axes.empty(), "grid_sweep: need at least one axis");
  double total = 1.0;
  for (const auto& a : axes) {
    detail::require(!a.values.empty(), "grid_sweep: axis " + std::string(to_string(a.param)) + " is empty");
    total *= static_cast<double>(a.values.size());
  }
  detail::require(total <= static_cast<double>(cap),
                  "grid_sweep: " + std::to_string(static_cast<long long>(total)) + " points exceed the cap of " +
                      std::to_string(cap));

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(total); ++n) {
    SweepRow row;
    LinkConfig c = cfg;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      row.params.push_back(axes[i].values[idx[i]]);
      set_param(c, axes[i].param, axes[i].values[idx[i]]);
    }
    try {
      const auto a = analyze_static(c, Architecture::dual, s);
      row.inl_pp = a.linearity.inl_pp;
      row.span_v = a.window.span_v;
      row.reachable = true;
    } catch (const WindowUnreachable&) {
    } catch (const InvalidArgument&) {
    } catch (const DegenerateResponse&) {
    }
    rows.push_back(std::move(row));
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < axes[k].values.size()) break;
      idx[k] = 0;
    }
  }
  return rows;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  detail::require(n >= 1, "linspace: n must be >= 1");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (i + 1 == n) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

}  // namespace mrm
