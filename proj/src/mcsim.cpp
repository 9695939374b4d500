#include "freqbin/mcsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "freqbin/constants.hpp"
#include "freqbin/scenario.hpp"

namespace freqbin {

double combine_jitter_fwhm(std::span<const double> fwhm_values) {
  double sum_sq = 0.0;
  for (double f : fwhm_values) {
    if (!(f >= 0.0)) {
      throw std::invalid_argument("combine_jitter_fwhm: components must be >= 0");
    }
    sum_sq += f * f;
  }
  return std::sqrt(sum_sq);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t chunk,
                             std::uint64_t channel, std::uint64_t purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ chunk);
  h = splitmix64(h ^ (channel << 32));
  h = splitmix64(h ^ purpose);
  return h;
}

std::vector<double> thin_poisson(double t0_ps, double t1_ps,
                                 double lambda_max_hz,
                                 const std::function<double(double)>& rate_hz,
                                 std::mt19937_64& rng) {
  std::vector<double> events;
  if (!(lambda_max_hz > 0.0) || !(t1_ps > t0_ps)) return events;
  const double mean_gap_ps = 1e12 / lambda_max_hz;
  std::exponential_distribution<double> gap(1.0);
  std::uniform_real_distribution<double> accept(0.0, 1.0);
  double t = t0_ps;
  for (;;) {
    t += gap(rng) * mean_gap_ps;
    if (t >= t1_ps) break;
    const double lambda = rate_hz(t);
    if (accept(rng) * lambda_max_hz < lambda) events.push_back(t);
  }
  return events;
}

std::int64_t quantize_event_ps(double t_ps, std::int64_t resolution_fs) {
  const double tick =
      std::floor(t_ps * 1000.0 / static_cast<double>(resolution_fs));
  const std::int64_t t_fs = static_cast<std::int64_t>(tick) * resolution_fs;
  return t_fs / 1000;
}

std::int64_t quantize_exact_ps(std::int64_t t_ps, std::int64_t resolution_fs) {
  const __int128 t_fs = __int128(t_ps) * 1000;
  const __int128 grid_fs = (t_fs / resolution_fs) * resolution_fs;
  return static_cast<std::int64_t>(grid_fs / 1000);
}

namespace {

// Relative beat phase from the channel: constant or linear in time except
// for sampled trajectories, which evaluate the flight phase directly.
struct ChannelPhase {
  bool general = false;
  double c0 = 0.0;
  double c1_per_ps = 0.0;
  const BinPair* pair = nullptr;
  const PlatformTrajectory* traj = nullptr;

  double operator()(double t_ps) const {
    if (!general) return c0 + c1_per_ps * t_ps;
    return phase_of_flight(*pair, *traj, t_ps * kPicosecond);
  }
};

struct RawEvent {
  double t_ps;
  int detector;  // 0 or 1
};

bool record_order(const TagRecord& a, const TagRecord& b) {
  if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
  return a.channel < b.channel;
}

}  // namespace

TagStream simulate(const Scenario& s, unsigned threads) {
  const std::int64_t n_b = s.n_b();  // validates beat/marker commensurability
  (void)n_b;
  if (s.detectors.size() != 2) {
    throw std::invalid_argument("simulate: exactly two detectors required");
  }
  if (s.duration_ps < 0) {
    throw std::invalid_argument("simulate: negative duration");
  }
  const std::int64_t res_fs = s.resolution_fs();
  const std::int64_t duration = s.duration_ps;
  const auto windows =
      duration > 0 ? schedule_windows(s.schedule, duration)
                   : std::vector<SegmentWindow>{};
  const double att = s.attenuation_factor();
  const BinPair pair = s.bin_pair();
  const double dw = s.source.delta_omega_rad_per_s;
  const double v_x = s.source.v_x_eps * s.channel.v_x_eps;
  const double phi0 = s.source.beat_phase_rad;

  ChannelPhase phase;
  switch (s.channel.trajectory.mode()) {
    case TrajectoryMode::static_range:
      phase.c0 = dw * s.channel.trajectory.r0() / kSpeedOfLight;
      break;
    case TrajectoryMode::linear: {
      const double v = s.channel.trajectory.velocity();
      const double beta = v / kSpeedOfLight;
      phase.c0 = dw * (1.0 + beta) * s.channel.trajectory.r0() / kSpeedOfLight;
      phase.c1_per_ps = dw * (1.0 + beta) * beta * kPicosecond;
      break;
    }
    case TrajectoryMode::sampled:
      phase.general = true;
      phase.pair = &pair;
      phase.traj = &s.channel.trajectory;
      break;
  }

  // Z-basis routing per transmitted bin. Arriving frequencies carry the
  // Doppler shift of the range rate at mid-run; bandwidth spreads the MZI
  // phase of each bin by 2 pi sigma delta_l / c, averaging its contrast
  // down by the usual Gaussian factor.
  const double mid_s = 0.5 * static_cast<double>(duration) * kPicosecond;
  const double rdot = s.channel.trajectory.mode() == TrajectoryMode::sampled
                          ? s.channel.trajectory.range_rate(
                                std::clamp(mid_s, s.channel.trajectory.t_min(),
                                           s.channel.trajectory.t_max()))
                          : s.channel.trajectory.range_rate(mid_s);
  MziConfig mzi0 = s.mzi_for_bin(0);
  MziConfig mzi1 = s.mzi_for_bin(1);
  const double spread0 =
      kTwoPi * pair.bin0.sigma * mzi0.delta_l / kSpeedOfLight;
  const double spread1 =
      kTwoPi * pair.bin1.sigma * mzi1.delta_l / kSpeedOfLight;
  mzi0.v_z_eps *= std::exp(-0.5 * spread0 * spread0);
  mzi1.v_z_eps *= std::exp(-0.5 * spread1 * spread1);
  const PortDistribution route_z0 =
      z_basis_ports(doppler_shift(pair.bin0.omega_center, rdot), mzi0);
  const PortDistribution route_z1 =
      z_basis_ports(doppler_shift(pair.bin1.omega_center, rdot), mzi1);

  // Per-detector scaling and jitter.
  std::array<double, 2> det_scale{};
  std::array<double, 2> sigma_draw_ps{};
  for (int d = 0; d < 2; ++d) {
    const auto& det = s.detectors[d];
    det_scale[d] = att * det.efficiency;
    const std::array<double, 2> comps{det.jitter_fwhm_ps,
                                      s.tagger.resolution_ps};
    sigma_draw_ps[d] =
        jitter_sigma_eff(combine_jitter_fwhm(comps), s.jitter_convention);
  }

  const std::int64_t chunk_ps = std::max<std::int64_t>(s.chunk_ps, 1);
  const std::size_t n_chunks = duration > 0
      ? static_cast<std::size_t>((duration + chunk_ps - 1) / chunk_ps)
      : 0;

  auto generate_chunk = [&](std::size_t ci) {
    std::vector<TagRecord> out;
    const std::int64_t lo = static_cast<std::int64_t>(ci) * chunk_ps;
    const std::int64_t hi = std::min(lo + chunk_ps, duration);
    for (int d = 0; d < 2; ++d) {
      std::mt19937_64 rng(substream_seed(s.seed, ci, d, 0));
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> times;
      const auto emit = [&](double t_raw) {
        double t = t_raw;
        if (sigma_draw_ps[d] > 0.0) t += sigma_draw_ps[d] * gauss(rng);
        if (t < 0.0) return;  // jittered before acquisition start
        const std::int64_t q = quantize_event_ps(t, res_fs);
        if (q <= duration) out.push_back({d + 1, q});
      };
      for (const auto& w : windows) {
        if (w.end_ps <= lo || w.begin_ps >= hi) continue;
        const double wlo = static_cast<double>(std::max(w.begin_ps, lo));
        const double whi = static_cast<double>(std::min(w.end_ps, hi));
        const double base = w.rate_hz * det_scale[d];
        if (!(base > 0.0) || w.state == StateLabel::vacuum) continue;

        if (s.receiver.basis == Basis::x) {
          if (w.state == StateLabel::x_plus) {
            const double lambda0 = 0.5 * base;
            const double lambda_max = lambda0 * (1.0 + v_x);
            auto rate = [&](double t_ps) {
              const double theta =
                  dw * t_ps * kPicosecond + phi0 + phase(t_ps);
              return lambda0 * (1.0 + v_x * std::cos(theta));
            };
            times = thin_poisson(wlo, whi, lambda_max, rate, rng);
          } else {
            // Single-bin input with the long arm blocked: flat half level.
            const double lambda = 0.5 * base;
            times = thin_poisson(wlo, whi, lambda,
                                 [&](double) { return lambda; }, rng);
          }
        } else {
          double p = 0.0;
          switch (w.state) {
            case StateLabel::z0:
              p = d == 0 ? route_z0.p_port0 : route_z0.p_port1;
              break;
            case StateLabel::z1:
              p = d == 0 ? route_z1.p_port0 : route_z1.p_port1;
              break;
            case StateLabel::x_plus:
              // Balanced superposition through the demultiplexer: equal
              // incoherent mixture of the two bin routings.
              p = 0.5 * ((d == 0 ? route_z0.p_port0 : route_z0.p_port1) +
                         (d == 0 ? route_z1.p_port0 : route_z1.p_port1));
              break;
            case StateLabel::vacuum:
              break;
          }
          const double lambda = base * p;
          times = thin_poisson(wlo, whi, lambda,
                               [&](double) { return lambda; }, rng);
        }
        for (double t : times) emit(t);
      }

      // Dark counts: homogeneous, channel-intrinsic, no optical jitter.
      const double dark = s.detectors[d].dark_rate_hz;
      if (dark > 0.0 && hi > lo) {
        std::mt19937_64 dark_rng(substream_seed(s.seed, ci, d, 1));
        const auto darks = thin_poisson(static_cast<double>(lo),
                                        static_cast<double>(hi), dark,
                                        [&](double) { return dark; }, dark_rng);
        for (double t : darks) {
          out.push_back({d + 1, quantize_event_ps(t, res_fs)});
        }
      }
    }
    return out;
  };

  std::vector<std::vector<TagRecord>> chunks(n_chunks);
  if (threads <= 1 || n_chunks <= 1) {
    for (std::size_t ci = 0; ci < n_chunks; ++ci) chunks[ci] = generate_chunk(ci);
  } else {
    const unsigned n_workers = std::min<unsigned>(threads, n_chunks);
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < n_workers; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t ci = w; ci < n_chunks; ci += n_workers) {
          chunks[ci] = generate_chunk(ci);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  TagStream stream;
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  stream.records.reserve(total + static_cast<std::size_t>(duration / s.tagger.marker_period_ps) + 2);
  for (const auto& c : chunks) {
    stream.records.insert(stream.records.end(), c.begin(), c.end());
  }
  for (std::int64_t m = 0; m * s.tagger.marker_period_ps <= duration; ++m) {
    stream.records.push_back(
        {s.tagger.marker_channel,
         quantize_exact_ps(m * s.tagger.marker_period_ps, res_fs)});
  }
  std::sort(stream.records.begin(), stream.records.end(), record_order);

  // Dead-time pass per detector channel.
  for (int d = 0; d < 2; ++d) {
    const double dead = s.detectors[d].dead_time_ps;
    if (!(dead > 0.0)) continue;
    const std::int64_t dead_ps = static_cast<std::int64_t>(std::ceil(dead));
    std::int64_t last = std::numeric_limits<std::int64_t>::min() / 2;
    std::erase_if(stream.records, [&](const TagRecord& rec) {
      if (rec.channel != d + 1) return false;
      if (rec.timestamp_ps - last < dead_ps) return true;
      last = rec.timestamp_ps;
      return false;
    });
  }

  stream.meta.resolution_ps = s.tagger.resolution_ps;
  stream.meta.marker_period_ps = s.tagger.marker_period_ps;
  stream.meta.delta_omega_rad_per_s = dw;
  stream.meta.seed = s.seed;
  stream.meta.scenario_digest = s.digest();
  return stream;
}

}  // namespace freqbin
