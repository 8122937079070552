#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <mrmlink/config.hpp>
#include <mrmlink/optimizer.hpp>

using namespace mrm;

namespace {

using Fn = std::function<double(std::span<const double>)>;

BoxResult run(const Fn& f, std::vector<double> lo, std::vector<double> hi, std::size_t budget = 400) {
  BoxOptions o;
  o.budget = budget;
  return minimize_box(f, lo, hi, o);
}

}  // namespace

TEST(Optimizer, FindsBowlMinimum) {
  const Fn f = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); };
  const auto r = run(f, {-1.0}, {2.0});
  EXPECT_NEAR(r.x[0], 0.3, 1e-4);
  EXPECT_LT(r.value, 1e-8);
  EXPECT_LE(r.value, r.best_grid_value);
}

TEST(Optimizer, TwoDimensionalRosenbrock) {
  const Fn f = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  const auto r = run(f, {-2.0, -1.0}, {2.0, 3.0}, 3000);
  EXPECT_NEAR(r.x[0], 1.0, 1e-2);
  EXPECT_NEAR(r.x[1], 1.0, 2e-2);
}

TEST(Optimizer, BudgetIsHardCap) {
  std::size_t calls = 0;
  const Fn f = [&](std::span<const double> x) {
    ++calls;
    return std::sin(5 * x[0]) * std::cos(3 * x[1]) + 0.1 * x[2] * x[2];
  };
  for (std::size_t budget : {50u, 137u, 600u}) {
    calls = 0;
    BoxOptions o;
    o.budget = budget;
    o.grid_points_per_dim = 8;  // 512 grid points; truncated to half the budget
    const auto r = minimize_box(f, std::vector<double>{0, 0, -1}, std::vector<double>{1, 1, 1}, o);
    EXPECT_LE(calls, budget);
    EXPECT_EQ(r.evaluations, calls);
  }
}

TEST(Optimizer, TraceIsMonotone) {
  const Fn f = [](std::span<const double> x) { return std::pow(x[0] - 0.7, 2) + std::pow(x[1] + 0.2, 2); };
  const auto r = run(f, {-1.0, -1.0}, {1.0, 1.0});
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_EQ(r.trace.back(), r.value);
}

TEST(Optimizer, InfeasibleEverywhere) {
  const Fn f = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(run(f, {0.0}, {1.0}), InfeasibleSearch);
}

TEST(Optimizer, SkipsInfeasibleRegions) {
  const Fn f = [](std::span<const double> x) {
    return x[0] < 0.5 ? std::numeric_limits<double>::infinity() : (x[0] - 0.8) * (x[0] - 0.8);
  };
  const auto r = run(f, {0.0}, {1.0});
  EXPECT_NEAR(r.x[0], 0.8, 1e-4);
}

TEST(Optimizer, Deterministic) {
  const Fn f = [](std::span<const double> x) { return std::cos(7 * x[0]) + std::sin(4 * x[1]) + x[0] * x[1]; };
  const auto a = run(f, {0.0, 0.0}, {2.0, 2.0});
  const auto b = run(f, {0.0, 0.0}, {2.0, 2.0});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(Optimizer, ParamNamesRoundTrip) {
  for (auto p : {FreeParam::ring1_heater_detuning, FreeParam::ring2_heater_detuning, FreeParam::drop_power_weight}) {
    EXPECT_EQ(parse_free_param(to_string(p)), p);
  }
  EXPECT_FALSE(parse_free_param("ring3.heater_detuning").has_value());
  LinkConfig c = canonical_config().link;
  set_param(c, FreeParam::ring2_heater_detuning, -42.0);
  EXPECT_EQ(c.ring2.op.heater_detuning_pm, -42.0);
  EXPECT_EQ(get_param(c, FreeParam::ring2_heater_detuning), -42.0);
}

TEST(Optimizer, LinkSearchIsOrderInvariant) {
  auto rc = canonical_config();
  rc.analysis.transfer_points = 129;
  rc.optimizer.budget = 150;
  const auto a = optimize(rc.link, rc.optimizer, rc.analysis);
  std::swap(rc.optimizer.free_params[0], rc.optimizer.free_params[1]);
  const auto b = optimize(rc.link, rc.optimizer, rc.analysis);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_LE(a.evaluations, 150u);
  EXPECT_EQ(a.after.inl_pp, a.objective);
}

TEST(Optimizer, LinkSearchBeatsCoarseGrid) {
  auto rc = canonical_config();
  rc.analysis.transfer_points = 129;
  rc.optimizer.budget = 300;
  const auto r = optimize(rc.link, rc.optimizer, rc.analysis);
  std::vector<SweepAxis> axes = {{FreeParam::ring1_heater_detuning, linspace(-450, 150, 16)},
                                 {FreeParam::ring2_heater_detuning, linspace(-450, 150, 16)}};
  const auto rows = grid_sweep(rc.link, axes, rc.analysis);
  ASSERT_EQ(rows.size(), 256u);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    if (row.reachable) best = std::min(best, row.inl_pp);
  }
  EXPECT_LE(r.objective, best);
  EXPECT_EQ(rows[1].params, (std::vector<double>{-450.0, -410.0}));
}

TEST(Optimizer, SpecValidation) {
  SearchSpec s;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.free_params = {{FreeParam::ring1_heater_detuning, 0, 1}, {FreeParam::ring1_heater_detuning, 0, 1}};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.free_params = {{FreeParam::ring1_heater_detuning, 1, 0}};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.free_params = {{FreeParam::ring1_heater_detuning, 0, 1}};
  s.budget = 10;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Optimizer, SweepCap) {
  const auto rc = canonical_config();
  std::vector<SweepAxis> axes = {{FreeParam::ring1_heater_detuning, linspace(-450, 150, 100)},
                                 {FreeParam::ring2_heater_detuning, linspace(-450, 150, 100)}};
  EXPECT_THROW(grid_sweep(rc.link, axes, rc.analysis, 5000), InvalidArgument);
}
