#pragma once

#include "freqbin/qstate.hpp"

namespace freqbin {

// Measurement basis of the analyzer. Z runs the full unbalanced
// interferometer as a frequency demultiplexer; X blocks the long arm and
// detects the beat directly. A run uses one fixed basis (mechanical
// shutter), never a per-photon choice.
enum class Basis { z, x };

// Unbalanced Mach-Zehnder analyzer settings. omega_ref is the frequency
// steered fully to port 0 when phi_align = 0 and v_z_eps = 1; real
// interferometers drift, so the alignment phase stays an explicit
// parameter.
struct MziConfig {
  double delta_l = 0.0;    // path length difference, m, > 0
  double omega_ref = 0.0;  // rad/s
  double phi_align = 0.0;  // rad
  double v_z_eps = 1.0;    // interferometer imperfection visibility
  Basis basis = Basis::z;
};

struct PortDistribution {
  double p_port0 = 0.0;
  double p_port1 = 0.0;
};

// Demultiplexer channel spacing for a path difference: pi c / delta_l.
double demux_spacing(double delta_l);

// Path difference placing bins separated by delta_omega on opposite
// ports: pi c / delta_omega. Exact inverse of demux_spacing.
double required_path_difference(double delta_omega);

// Output-port probabilities for a monochromatic input at omega:
// p0 = (1 + v_z_eps cos((omega - omega_ref) delta_l / c + phi_align)) / 2.
// Probabilities within 1e-12 of {0,1} snap exactly so ideal configurations
// stay lossless-exclusive.
PortDistribution z_basis_ports(double omega, const MziConfig& cfg);

// Long arm blocked: the detector sees the raw beat of the input state.
// Single-bin inputs give the flat half-level rate (no beat).
double x_basis_rate(const FBinQubit& q, const VisibilityFactors& f, double t);

}  // namespace freqbin
