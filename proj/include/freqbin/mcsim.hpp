#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "freqbin/tags.hpp"

namespace freqbin {

// One detector channel: timing response, throughput and noise.
struct DetectorModel {
  std::string name;
  double jitter_fwhm_ps = 0.0;
  double efficiency = 1.0;   // [0,1]
  double dark_rate_hz = 0.0;
  double dead_time_ps = 0.0;
};

// Time-tagging unit: quantization grid plus the synchronization channel.
struct TaggerModel {
  double resolution_ps = 0.0;          // bin quantum, e.g. 78.125
  std::int64_t marker_period_ps = 0;   // T_M
  int marker_channel = kMarkerChannel;
};

// Quadrature sum of FWHM jitter components.
double combine_jitter_fwhm(std::span<const double> fwhm_values);

// Deterministic RNG substream seed for (run seed, chunk, channel, purpose).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t chunk,
                             std::uint64_t channel, std::uint64_t purpose);

// Inhomogeneous Poisson sampling by thinning over [t0_ps, t1_ps).
// rate_hz(t_ps) must never exceed lambda_max_hz; candidates arrive at the
// bound and are accepted with probability rate/bound, which is exact (no
// discretization). Constant rates are handled by the same path.
std::vector<double> thin_poisson(double t0_ps, double t1_ps,
                                 double lambda_max_hz,
                                 const std::function<double(double)>& rate_hz,
                                 std::mt19937_64& rng);

// Floor of a continuous event time onto the tagger grid, reported in whole
// picoseconds. Grid points at non-integral picoseconds truncate to the
// enclosing picosecond.
std::int64_t quantize_event_ps(double t_ps, std::int64_t resolution_fs);

// Same quantization for exact integer inputs (markers).
std::int64_t quantize_exact_ps(std::int64_t t_ps, std::int64_t resolution_fs);

struct Scenario;

// Runs the full detection chain for the scenario: markers on the
// synchronization channel, schedule-driven photon statistics per detector
// port, Gaussian timestamp jitter, dark counts, dead time and tagger
// quantization. Identical scenario and seed give a bit-identical stream
// for any thread count; chunked substreams make that hold.
TagStream simulate(const Scenario& scenario, unsigned threads = 1);

}  // namespace freqbin
