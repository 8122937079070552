#pragma once

// Helpers shared by the unit and acceptance tests.

#include <algorithm>
#include <stdexcept>
#include <string>

#include <mrmlink/mrmlink.hpp>

namespace mrm::test_support {

struct SimulatedSpectra {
  std::string thru_csv;
  std::string drop_csv;
};

/// Through/drop spectra of a two-fiber link swept in laser wavelength at
/// v_min. With a linear tuning slope k shared by both rings, laser
/// wavelength lambda_i = lambda_laser - k * v_i reproduces drive sample v_i,
/// so the grid is the drive ramp mapped into wavelength.
inline SimulatedSpectra simulated_spectra(const LinkConfig& cfg, std::size_t n_points) {
  if (cfg.topology != Topology::two_fiber_single_lambda || cfg.ring1.op.bias_tuning_pm_per_v != cfg.ring2.op.bias_tuning_pm_per_v ||
      cfg.ring1.op.bias_tuning_quadratic_pm_per_v2 != 0.0 || cfg.ring2.op.bias_tuning_quadratic_pm_per_v2 != 0.0) {
    throw std::invalid_argument("simulated_spectra: needs a two-fiber link with one linear tuning slope");
  }
  const auto ramp = make_waveform(RampSpec{n_points}, cfg.ring1.op);
  const double k_nm = cfg.ring1.op.bias_tuning_pm_per_v * 1e-3;
  const double v0 = cfg.ring1.op.v_min;
  std::vector<double> wl, thru, drop;
  for (std::size_t i = ramp.samples.size(); i-- > 0;) {
    const double v = ramp.samples[i];
    LinkConfig c = cfg;
    c.laser1.wavelength_nm = cfg.laser1.wavelength_nm - k_nm * (v - v0);
    const auto p = port_powers(c, v0);
    wl.push_back(c.laser1.wavelength_nm);
    thru.push_back(p.thru_mw);
    drop.push_back(p.drop_mw);
  }
  if (wl.front() > wl.back()) {
    std::reverse(wl.begin(), wl.end());
    std::reverse(thru.begin(), thru.end());
    std::reverse(drop.begin(), drop.end());
  }
  return {spectrum_csv_text(wl, thru), spectrum_csv_text(wl, drop)};
}

}  // namespace mrm::test_support
