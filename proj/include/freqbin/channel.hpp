#pragma once

#include <complex>
#include <filesystem>
#include <utility>
#include <vector>

#include "freqbin/qstate.hpp"

namespace freqbin {

enum class TrajectoryMode { static_range, linear, sampled };

// Source-receiver range profile R(t). Sampled trajectories interpolate
// with a monotone cubic (no overshoot between samples) and differentiate
// by centred finite differences at the local sample spacing; at the domain
// edges the difference is one-sided and flagged.
class PlatformTrajectory {
 public:
  struct RateSample {
    double value = 0.0;  // m/s
    bool one_sided = false;
  };

  static PlatformTrajectory static_range(double r0_m);
  static PlatformTrajectory linear(double velocity_m_per_s, double r0_m = 0.0);
  // Samples as (t_s, range_m) with strictly increasing t and R >= 0.
  static PlatformTrajectory from_samples(
      std::vector<std::pair<double, double>> samples);
  // CSV with header "t_s,range_m"; violations reported with line numbers.
  static PlatformTrajectory from_csv(const std::filesystem::path& path);

  TrajectoryMode mode() const { return mode_; }
  double range(double t) const;
  double range_rate(double t) const { return range_rate_ex(t).value; }
  RateSample range_rate_ex(double t) const;

  // Valid query window; unbounded except in sampled mode.
  double t_min() const;
  double t_max() const;

  double velocity() const { return velocity_; }
  double r0() const { return r0_; }
  const std::vector<std::pair<double, double>>& samples() const {
    return samples_;
  }

 private:
  PlatformTrajectory() = default;

  TrajectoryMode mode_ = TrajectoryMode::static_range;
  double velocity_ = 0.0;  // m/s (linear mode)
  double r0_ = 0.0;        // m
  std::vector<std::pair<double, double>> samples_;
  std::vector<double> tangents_;  // monotone cubic slopes at the samples

  std::size_t interval_for(double t) const;
  double local_spacing(double t) const;
};

// Free-space channel parameters. Attenuation acts on event rates only,
// never on state amplitudes; turbulence and pointing enter through the
// visibility factors.
struct ChannelConfig {
  PlatformTrajectory trajectory = PlatformTrajectory::static_range(0.0);
  double attenuation_db = 0.0;
  double v_x_eps = 1.0;
  double v_z_eps = 1.0;
};

// Qubit after losing time-reference coherence: populations plus the scaled
// off-diagonal term.
struct DephasedState {
  double p0 = 0.0;
  double p1 = 0.0;
  std::complex<double> coherence;  // |coherence| <= sqrt(p0 p1)
};

// Relativistic Doppler factor sqrt((c+v)/(c-v)); v > 0 approaching.
double doppler_shift(double omega, double velocity_m_per_s);

// Relative phase between the two bins accumulated over the flight:
// delta_omega * (1 + dR/dt / c) * R(t) / c.
double phase_of_flight(const BinPair& pair, const PlatformTrajectory& traj,
                       double t);

struct PhaseRate {
  double hz = 0.0;
  bool one_sided = false;  // set when a one-sided difference was used
};

// Rate of change of the flight phase in Hz: (1/2pi) d/dt [phase_of_flight].
// Exact for static and linear trajectories; finite differences otherwise.
PhaseRate phase_change_rate(const BinPair& pair, const PlatformTrajectory& traj,
                            double t);

// Coherence scaling sin(x)/x, x = delta_omega * t_r, from averaging the
// beat phase over a rectangular time-reference window of half-width t_r.
double reference_window_coherence_factor(double delta_omega, double t_r);

// Applies the reference-window average to a qubit: populations unchanged,
// coherence scaled by the sinc factor. t_r = 0 is the identity; t_r -> inf
// is the completely dephasing map.
DephasedState dephase_by_reference_window(const FBinQubit& q, double t_r);

// Fidelity cos^2(delta_omega * timing_error / 2) between the intended
// equator state and one compensated with a time reference off by
// timing_error.
double compensation_fidelity(double delta_omega, double timing_error);

// Inverse of compensation_fidelity: largest timing error keeping at least
// the given fidelity.
double required_timing_accuracy(double delta_omega, double fidelity);

}  // namespace freqbin
