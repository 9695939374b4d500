#include "freqbin/receiver.hpp"

#include <cmath>
#include <stdexcept>

#include "freqbin/constants.hpp"

namespace freqbin {

namespace {
constexpr double kPortSnap = 1e-12;
}

double demux_spacing(double delta_l) {
  if (!(delta_l > 0.0)) {
    throw std::domain_error("demux_spacing: path difference must be > 0");
  }
  return kPi * kSpeedOfLight / delta_l;
}

double required_path_difference(double delta_omega) {
  if (!(delta_omega > 0.0)) {
    throw std::domain_error(
        "required_path_difference: separation must be > 0");
  }
  return kPi * kSpeedOfLight / delta_omega;
}

PortDistribution z_basis_ports(double omega, const MziConfig& cfg) {
  if (!(cfg.delta_l > 0.0)) {
    throw std::invalid_argument("MziConfig: delta_l must be > 0");
  }
  if (!(cfg.v_z_eps >= 0.0 && cfg.v_z_eps <= 1.0)) {
    throw std::invalid_argument("MziConfig: v_z_eps must be in [0,1]");
  }
  const double phase =
      (omega - cfg.omega_ref) * cfg.delta_l / kSpeedOfLight + cfg.phi_align;
  double p0 = 0.5 * (1.0 + cfg.v_z_eps * std::cos(phase));
  if (p0 < kPortSnap) p0 = 0.0;
  if (p0 > 1.0 - kPortSnap) p0 = 1.0;
  return {p0, 1.0 - p0};
}

double x_basis_rate(const FBinQubit& q, const VisibilityFactors& f, double t) {
  return beat_signal(q, f, t);
}

}  // namespace freqbin
