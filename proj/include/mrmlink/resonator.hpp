#pragma once

// Closed-form power-gain spectra of a single ring or racetrack resonator.
//
// A device is described by its round-trip length, group index, the two
// coupler self-coupling (field transmission) coefficients and the round-trip
// field amplitude. Racetracks use the same model; they simply supply a
// different round-trip length and coupling values.
//
// Round-trip phase uses a first-order dispersion model:
//
//   phi = 2*pi * (lambda - lambda_res) / FSR,   FSR = lambda_res^2 / (n_g * L)
//
// which is accurate within roughly one FSR of the resonance.

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace mrm {

struct RingDevice {
  double round_trip_length_um = 62.83185307179586;  // 2*pi*10 um
  double group_index = 4.0;
  double resonance_wavelength_nm = 1310.0;
  double self_coupling_thru = 0.97;  // r1, input-bus coupler
  double self_coupling_drop = 0.97;  // r2, 1.0 means no drop bus (pure notch)
  double round_trip_amplitude = 0.99;

  static RingDevice circular(double radius_um, double group_index,
                             double resonance_wavelength_nm, double r1,
                             double r2, double a) {
    return {2.0 * std::numbers::pi * radius_um, group_index,
            resonance_wavelength_nm, r1, r2, a};
  }

  void validate(const std::string& path = "device") const {
    auto finite = [](double x) { return std::isfinite(x); };
    detail::require(finite(round_trip_length_um) && round_trip_length_um > 0.0,
                    path + ".round_trip_length_um must be > 0");
    detail::require(finite(group_index) && group_index > 0.0,
                    path + ".group_index must be > 0");
    detail::require(
        finite(resonance_wavelength_nm) && resonance_wavelength_nm > 0.0,
        path + ".resonance_wavelength_nm must be > 0");
    detail::require(finite(self_coupling_thru) && self_coupling_thru > 0.0 &&
                        self_coupling_thru < 1.0,
                    path + ".self_coupling_thru must lie in (0, 1)");
    detail::require(finite(self_coupling_drop) && self_coupling_drop > 0.0 &&
                        self_coupling_drop <= 1.0,
                    path + ".self_coupling_drop must lie in (0, 1]");
    detail::require(finite(round_trip_amplitude) &&
                        round_trip_amplitude > 0.0 &&
                        round_trip_amplitude <= 1.0,
                    path + ".round_trip_amplitude must lie in (0, 1]");
  }

  bool operator==(const RingDevice&) const = default;
};

namespace detail {

inline void check_coupling(double r1, double r2, double a) {
  require(std::isfinite(r1) && r1 > 0.0 && r1 < 1.0,
          "self_coupling_thru must lie in (0, 1)");
  require(std::isfinite(r2) && r2 > 0.0 && r2 <= 1.0,
          "self_coupling_drop must lie in (0, 1]");
  require(std::isfinite(a) && a > 0.0 && a <= 1.0,
          "round_trip_amplitude must lie in (0, 1]");
}

inline double fsr_nm_unchecked(const RingDevice& d, double wavelength_nm) {
  // nm^2 / um = 1e-3 nm
  return wavelength_nm * wavelength_nm /
         (d.group_index * d.round_trip_length_um) * 1e-3;
}

}  // namespace detail

/// Free spectral range at `wavelength_nm`, in picometres.
inline double fsr_pm(const RingDevice& device, double wavelength_nm) {
  device.validate();
  detail::require(std::isfinite(wavelength_nm) && wavelength_nm > 0.0,
                  "wavelength must be finite and > 0");
  return detail::fsr_nm_unchecked(device, wavelength_nm) * 1e3;
}

/// Round-trip phase (radians) of light at `wavelength_nm` in a ring whose
/// resonance currently sits at `resonance_nm`. The FSR is taken at the
/// device's nominal resonance, so a resonance shift and an opposite laser
/// detuning give the same phase.
inline double round_trip_phase(double wavelength_nm, const RingDevice& device,
                               double resonance_nm) {
  detail::require(std::isfinite(wavelength_nm) && std::isfinite(resonance_nm),
                  "round_trip_phase: non-finite wavelength");
  const double fsr =
      detail::fsr_nm_unchecked(device, device.resonance_wavelength_nm);
  return 2.0 * std::numbers::pi * (wavelength_nm - resonance_nm) / fsr;
}

/// True when `wavelength_nm` lies within one FSR of the device's nominal
/// resonance, i.e. where the first-order phase model is trustworthy.
inline bool within_first_order_range(const RingDevice& device,
                                     double wavelength_nm) {
  const double fsr =
      detail::fsr_nm_unchecked(device, device.resonance_wavelength_nm);
  return std::abs(wavelength_nm - device.resonance_wavelength_nm) <= fsr;
}

/// Through-port power transmission of an add-drop ring. With r2 = 1 this is
/// the all-pass notch response.
inline double thru_gain(double phi, double r1, double r2, double a) {
  detail::check_coupling(r1, r2, a);
  const double c = std::cos(phi);
  const double rra = r1 * r2 * a;
  const double num = r2 * r2 * a * a - 2.0 * rra * c + r1 * r1;
  const double den = 1.0 - 2.0 * rra * c + rra * rra;
  return num / den;
}

/// Drop-port power transmission of an add-drop ring.
inline double drop_gain(double phi, double r1, double r2, double a) {
  detail::check_coupling(r1, r2, a);
  const double c = std::cos(phi);
  const double rra = r1 * r2 * a;
  const double den = 1.0 - 2.0 * rra * c + rra * rra;
  return (1.0 - r1 * r1) * (1.0 - r2 * r2) * a / den;
}

inline double thru_gain(double phi, const RingDevice& d) {
  return thru_gain(phi, d.self_coupling_thru, d.self_coupling_drop,
                   d.round_trip_amplitude);
}

inline double drop_gain(double phi, const RingDevice& d) {
  return drop_gain(phi, d.self_coupling_thru, d.self_coupling_drop,
                   d.round_trip_amplitude);
}

/// Loaded quality factor lambda_res / FWHM of the through-port notch.
///
/// The half level is the midpoint between T(0) and T(pi). The crossing is
/// bracketed by a uniform scan of `scan_points` samples over (0, pi] and then
/// refined by bisection to a relative tolerance of 1e-10.
inline double loaded_q(const RingDevice& device, int scan_points = 1024) {
  device.validate();
  detail::require(scan_points >= 8, "loaded_q: scan_points must be >= 8");
  constexpr double pi = std::numbers::pi;
  const double t0 = thru_gain(0.0, device);
  const double tpi = thru_gain(pi, device);
  if (!(tpi - t0 > 1e-12)) {
    throw DegenerateResponse("loaded_q: through-port response has no notch");
  }
  const double half = 0.5 * (t0 + tpi);

  double lo = 0.0;
  double hi = pi;
  for (int i = 1; i <= scan_points; ++i) {
    const double phi = pi * static_cast<double>(i) / scan_points;
    if (thru_gain(phi, device) >= half) {
      hi = phi;
      lo = pi * static_cast<double>(i - 1) / scan_points;
      break;
    }
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (thru_gain(mid, device) < half) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double fwhm_phase = 2.0 * 0.5 * (lo + hi);
  const double fsr = detail::fsr_nm_unchecked(device, device.resonance_wavelength_nm);
  const double fwhm_nm = fwhm_phase / (2.0 * pi) * fsr;
  return device.resonance_wavelength_nm / fwhm_nm;
}

/// Full width at half depth of the notch, in picometres.
inline double linewidth_pm(const RingDevice& device) {
  return device.resonance_wavelength_nm / loaded_q(device) * 1e3;
}

}  // namespace mrm
