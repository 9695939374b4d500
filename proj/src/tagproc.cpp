#include "freqbin/tagproc.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "freqbin/constants.hpp"

namespace freqbin {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool is_detector_channel(const FoldingConfig& cfg, int channel) {
  for (int c : cfg.detector_channels) {
    if (c == channel) return true;
  }
  return false;
}

// Solves the symmetric 3x3 system M x = b and inverts M for the
// covariance. Throws on a (numerically) singular system.
struct Solved3 {
  std::array<double, 3> x;
  std::array<std::array<double, 3>, 3> inv;
};

Solved3 solve3(std::array<std::array<double, 3>, 3> m,
               std::array<double, 3> b) {
  std::array<std::array<double, 3>, 3> inv{
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-30) {
      throw std::runtime_error("fit_beat: degenerate normal equations");
    }
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    std::swap(b[col], b[pivot]);
    const double d = m[col][col];
    for (int c = 0; c < 3; ++c) {
      m[col][c] /= d;
      inv[col][c] /= d;
    }
    b[col] /= d;
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      for (int c = 0; c < 3; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
      b[r] -= f * b[col];
    }
  }
  return {b, inv};
}

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::int64_t beat_cycles_per_marker(double delta_omega,
                                    std::int64_t marker_period_ps) {
  if (!(delta_omega > 0.0) || marker_period_ps <= 0) {
    throw std::invalid_argument(
        "beat_cycles_per_marker: positive separation and period required");
  }
  const double cycles =
      delta_omega * static_cast<double>(marker_period_ps) * 1e-12 / kTwoPi;
  const double rounded = std::nearbyint(cycles);
  if (!(rounded >= 1.0) || std::abs(cycles - rounded) > 1e-9) {
    throw std::invalid_argument(
        "marker period must hold an integral number of beat cycles; got " +
        std::to_string(cycles));
  }
  return static_cast<std::int64_t>(rounded);
}

kernels::FoldParams fold_params(const FoldingConfig& cfg) {
  if (cfg.bin_width_fs <= 0) {
    throw std::invalid_argument("FoldingConfig: bin_width_fs must be > 0");
  }
  kernels::FoldParams p;
  p.marker_period_ps = cfg.marker_period_ps;
  p.n_b = beat_cycles_per_marker(cfg.delta_omega, cfg.marker_period_ps);
  p.bin_width_fs = cfg.bin_width_fs;
  // Bin width must not exceed the beat period.
  const __int128 beat_fs = __int128(cfg.marker_period_ps) * 1000;
  if (__int128(p.bin_width_fs) * p.n_b > beat_fs) {
    throw std::invalid_argument(
        "FoldingConfig: bin width exceeds the beat period");
  }
  return p;
}

ReferencedTags reference_against_markers(
    std::span<const std::int64_t> detections_sorted,
    std::span<const std::int64_t> markers_sorted) {
  if (markers_sorted.empty()) {
    throw std::invalid_argument("reference_to_marker: no marker events");
  }
  ReferencedTags out;
  out.delta_t_ps.reserve(detections_sorted.size());
  std::size_t m = 0;
  for (std::int64_t t : detections_sorted) {
    while (m + 1 < markers_sorted.size() && markers_sorted[m + 1] <= t) ++m;
    if (t < markers_sorted[m]) {
      ++out.dropped;
      continue;
    }
    out.delta_t_ps.push_back(t - markers_sorted[m]);
  }
  return out;
}

ReferencedTags reference_to_marker(const TagStream& stream,
                                   const FoldingConfig& cfg) {
  std::vector<std::int64_t> markers;
  std::vector<std::int64_t> detections;
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  for (const auto& rec : stream.records) {
    if (rec.timestamp_ps < prev) {
      throw std::invalid_argument(
          "reference_to_marker: timestamps are not non-decreasing");
    }
    prev = rec.timestamp_ps;
    if (rec.channel == cfg.marker_channel) {
      markers.push_back(rec.timestamp_ps);
    } else if (is_detector_channel(cfg, rec.channel)) {
      detections.push_back(rec.timestamp_ps);
    }
  }
  return reference_against_markers(detections, markers);
}

FoldedTimes fold(std::span<const std::int64_t> delta_ts,
                 const FoldingConfig& cfg) {
  const auto p = fold_params(cfg);
  FoldedTimes out;
  out.n_b = p.n_b;
  out.numerators.resize(delta_ts.size());
  kernels::fold_numerators(delta_ts, p, out.numerators);
  return out;
}

double BeatHistogram::beat_period_ps() const {
  return static_cast<double>(marker_period_ps) / static_cast<double>(n_b);
}

double BeatHistogram::final_bin_fraction() const {
  return kernels::final_bin_fraction({marker_period_ps, n_b, bin_width_fs});
}

double BeatHistogram::bin_center_ps(std::size_t k) const {
  const double w = static_cast<double>(bin_width_fs) / 1000.0;
  if (k + 1 < counts.size()) {
    return (static_cast<double>(k) + 0.5) * w;
  }
  return 0.5 * (static_cast<double>(k) * w + beat_period_ps());
}

BeatHistogram histogram(const FoldedTimes& folded, const FoldingConfig& cfg) {
  const auto p = fold_params(cfg);
  if (folded.n_b != p.n_b) {
    throw std::invalid_argument("histogram: folded times use a different n_b");
  }
  BeatHistogram h;
  h.bin_width_fs = cfg.bin_width_fs;
  h.marker_period_ps = cfg.marker_period_ps;
  h.n_b = p.n_b;
  h.counts.assign(kernels::bin_count(p), 0);
  std::vector<std::uint32_t> idx(folded.numerators.size());
  kernels::bin_indices(folded.numerators, p, idx);
  for (std::uint32_t k : idx) {
    ++h.counts[k];
  }
  h.total = folded.numerators.size();
  return h;
}

BeatFit fit_beat(const BeatHistogram& h, double delta_omega,
                 std::uint64_t min_events) {
  if (h.total < min_events) {
    throw std::runtime_error("fit_beat: only " + std::to_string(h.total) +
                             " events, need " + std::to_string(min_events));
  }
  const std::size_t k_bins = h.counts.size();
  if (k_bins < 4) {
    throw std::runtime_error("fit_beat: too few bins to constrain the model");
  }
  const double final_frac = h.final_bin_fraction();

  std::array<std::array<double, 3>, 3> m{};
  std::array<double, 3> rhs{};
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double frac = (k + 1 < k_bins) ? 1.0 : final_frac;
    const double theta = delta_omega * h.bin_center_ps(k) * kPicosecond;
    const std::array<double, 3> row{frac, frac * std::cos(theta),
                                    frac * std::sin(theta)};
    const double n = static_cast<double>(h.counts[k]);
    const double w = 1.0 / std::max(n, 1.0);  // Poisson variance weight
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += w * row[i] * row[j];
      rhs[i] += w * row[i] * n;
    }
  }
  const auto solved = solve3(m, rhs);
  const double alpha = solved.x[0];
  const double beta = solved.x[1];
  const double gamma = solved.x[2];
  if (!(alpha > 0.0)) {
    throw std::runtime_error("fit_beat: non-positive baseline");
  }

  const double s = std::hypot(beta, gamma);
  BeatFit fit;
  fit.offset = alpha;
  fit.phase = std::atan2(-gamma, beta);
  double v = s / alpha;
  if (v > 1.0) {
    v = 1.0;
    fit.clamped = true;
  }
  fit.v = v;

  // Delta-method error from the parameter covariance.
  const auto& c = solved.inv;
  if (s > 0.0) {
    const std::array<double, 3> g{-s / (alpha * alpha), beta / (alpha * s),
                                  gamma / (alpha * s)};
    double var = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) var += g[i] * c[i][j] * g[j];
    }
    fit.v_err = std::sqrt(std::max(var, 0.0));
  } else {
    fit.v_err = std::sqrt(std::max(c[1][1] + c[2][2], 0.0)) / alpha;
  }

  // Raw-extrema contrast over the full bins, for comparison with the fit.
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0;
  const std::size_t full_bins = final_frac < 1.0 ? k_bins - 1 : k_bins;
  for (std::size_t k = 0; k < full_bins; ++k) {
    lo = std::min(lo, h.counts[k]);
    hi = std::max(hi, h.counts[k]);
  }
  fit.v_peak_trough =
      (hi + lo) > 0 ? static_cast<double>(hi - lo) / static_cast<double>(hi + lo)
                    : 0.0;
  return fit;
}

RatioVisibility z_visibility(double counts_peak, double counts_leak,
                             double var_peak, double var_leak) {
  RatioVisibility out;
  if (counts_peak < 0.0) {
    counts_peak = 0.0;
    out.clamped = true;
  }
  if (counts_leak < 0.0) {
    counts_leak = 0.0;
    out.clamped = true;
  }
  const double total = counts_peak + counts_leak;
  if (!(total > 0.0)) {
    throw std::invalid_argument("z_visibility: no events after subtraction");
  }
  if (var_peak < 0.0) var_peak = counts_peak;
  if (var_leak < 0.0) var_leak = counts_leak;
  out.v = (counts_peak - counts_leak) / total;
  // d v / d peak = 2 leak / total^2, d v / d leak = -2 peak / total^2.
  const double dp = 2.0 * counts_leak / (total * total);
  const double dl = 2.0 * counts_peak / (total * total);
  out.err = std::sqrt(dp * dp * var_peak + dl * dl * var_leak);
  return out;
}

double qber_from_visibility(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("qber_from_visibility: v must be in [0,1]");
  }
  return 0.5 * (1.0 - v);
}

namespace {

struct StateTallies {
  std::int64_t duration_ps = 0;
  std::array<std::uint64_t, 2> counts{};  // per detector channel (port0, port1)
};

int port_index(const FoldingConfig& cfg, int channel) {
  for (std::size_t i = 0; i < cfg.detector_channels.size(); ++i) {
    if (cfg.detector_channels[i] == channel) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

AnalysisResult analyze_stream(const TagStream& stream,
                              const AnalysisConfig& cfg) {
  AnalysisResult result;
  VisibilityReport& rep = result.report;
  rep.v_fit = rep.v_fit_err = rep.phase_rad = rep.v_peak_trough = kNan;
  rep.v_z_omega0 = rep.v_z_omega0_err = kNan;
  rep.v_z_omega1 = rep.v_z_omega1_err = kNan;
  rep.v_z_combined = rep.qber = kNan;

  // Pass 1: split the stream into markers and detector events, checking
  // monotonicity once.
  std::vector<std::int64_t> markers;
  std::vector<std::int64_t> det_times;
  std::vector<int> det_channels;
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  for (const auto& rec : stream.records) {
    if (rec.timestamp_ps < prev) {
      throw std::invalid_argument(
          "analyze_stream: timestamps are not non-decreasing");
    }
    prev = rec.timestamp_ps;
    if (rec.channel == cfg.folding.marker_channel) {
      markers.push_back(rec.timestamp_ps);
    } else if (is_detector_channel(cfg.folding, rec.channel)) {
      det_times.push_back(rec.timestamp_ps);
      det_channels.push_back(rec.channel);
    }
  }
  rep.events_total = det_times.size();
  if (markers.empty()) {
    throw std::invalid_argument("analyze_stream: stream has no marker events");
  }

  // Dropped bookkeeping over every detector event.
  {
    const auto all_ref = reference_against_markers(det_times, markers);
    rep.events_dropped = all_ref.dropped;
  }

  // Beat fit over the configured segment class (or everything when no
  // schedule is known).
  std::vector<std::int64_t> beat_times;
  if (cfg.windows.empty()) {
    beat_times = det_times;
  } else {
    std::size_t w = 0;
    for (std::size_t i = 0; i < det_times.size(); ++i) {
      const std::int64_t t = det_times[i];
      while (w < cfg.windows.size() && cfg.windows[w].end_ps <= t) ++w;
      if (w >= cfg.windows.size()) break;
      if (t >= cfg.windows[w].begin_ps &&
          cfg.windows[w].state == cfg.beat_state) {
        beat_times.push_back(t);
      }
    }
  }
  const auto beat_ref = reference_against_markers(beat_times, markers);
  const auto folded = fold(beat_ref.delta_t_ps, cfg.folding);
  result.beat_histogram = histogram(folded, cfg.folding);
  if (beat_ref.dropped + result.beat_histogram.total != beat_times.size()) {
    throw std::logic_error("analyze_stream: event count not conserved");
  }
  try {
    const auto fit = fit_beat(result.beat_histogram, cfg.folding.delta_omega,
                              cfg.min_fit_events);
    rep.v_fit = fit.v;
    rep.v_fit_err = fit.v_err;
    rep.phase_rad = fit.phase;
    rep.v_peak_trough = fit.v_peak_trough;
    rep.qber = qber_from_visibility(fit.v);
    rep.fit_valid = true;
    rep.fit_clamped = fit.clamped;
  } catch (const std::runtime_error& e) {
    rep.fit_error = e.what();
  }

  // Demultiplexer visibilities from the Z segments, background-subtracted
  // with the vacuum floor.
  if (!cfg.windows.empty()) {
    StateTallies z0, z1, vac;
    for (const auto& w : cfg.windows) {
      StateTallies* t = nullptr;
      if (w.state == StateLabel::z0) t = &z0;
      if (w.state == StateLabel::z1) t = &z1;
      if (w.state == StateLabel::vacuum) t = &vac;
      if (t) t->duration_ps += w.end_ps - w.begin_ps;
    }
    std::size_t w = 0;
    for (std::size_t i = 0; i < det_times.size(); ++i) {
      const std::int64_t t = det_times[i];
      while (w < cfg.windows.size() && cfg.windows[w].end_ps <= t) ++w;
      if (w >= cfg.windows.size()) break;
      if (t < cfg.windows[w].begin_ps) continue;
      const int port = port_index(cfg.folding, det_channels[i]);
      if (port < 0 || port > 1) continue;
      switch (cfg.windows[w].state) {
        case StateLabel::z0:
          ++z0.counts[port];
          break;
        case StateLabel::z1:
          ++z1.counts[port];
          break;
        case StateLabel::vacuum:
          ++vac.counts[port];
          break;
        default:
          break;
      }
    }
    if (z0.duration_ps > 0 && z1.duration_ps > 0) {
      auto subtracted = [&](const StateTallies& s, int port) {
        double count = static_cast<double>(s.counts[port]);
        double var = count;
        if (vac.duration_ps > 0) {
          const double ratio = static_cast<double>(s.duration_ps) /
                               static_cast<double>(vac.duration_ps);
          count -= ratio * static_cast<double>(vac.counts[port]);
          var += ratio * ratio * static_cast<double>(vac.counts[port]);
        }
        return std::pair<double, double>(count, var);
      };
      try {
        const auto [pk0, vpk0] = subtracted(z0, 0);
        const auto [lk0, vlk0] = subtracted(z0, 1);
        const auto [pk1, vpk1] = subtracted(z1, 1);
        const auto [lk1, vlk1] = subtracted(z1, 0);
        const auto v0 = z_visibility(pk0, lk0, vpk0, vlk0);
        const auto v1 = z_visibility(pk1, lk1, vpk1, vlk1);
        rep.v_z_omega0 = v0.v;
        rep.v_z_omega0_err = v0.err;
        rep.v_z_omega1 = v1.v;
        rep.v_z_omega1_err = v1.err;
        // Event-weighted mean of the per-bin contrasts.
        const double w0 = std::max(pk0, 0.0) + std::max(lk0, 0.0);
        const double w1 = std::max(pk1, 0.0) + std::max(lk1, 0.0);
        rep.v_z_combined = (w0 * v0.v + w1 * v1.v) / (w0 + w1);
        rep.z_valid = true;
        rep.z_clamped = v0.clamped || v1.clamped;
      } catch (const std::invalid_argument&) {
        // No usable Z counts; fields stay null.
      }
    }
  }
  return result;
}

void write_report_json(const VisibilityReport& report,
                       const std::filesystem::path& path) {
  nlohmann::json j{
      {"v_fit", number_or_null(report.v_fit)},
      {"v_fit_err", number_or_null(report.v_fit_err)},
      {"phase_rad", number_or_null(report.phase_rad)},
      {"v_peak_trough", number_or_null(report.v_peak_trough)},
      {"v_z_omega0", number_or_null(report.v_z_omega0)},
      {"v_z_omega0_err", number_or_null(report.v_z_omega0_err)},
      {"v_z_omega1", number_or_null(report.v_z_omega1)},
      {"v_z_omega1_err", number_or_null(report.v_z_omega1_err)},
      {"v_z_combined", number_or_null(report.v_z_combined)},
      {"qber", number_or_null(report.qber)},
      {"events_total", report.events_total},
      {"events_dropped", report.events_dropped},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write report: " + path.string());
  }
  out << j.dump(2) << "\n";
}

void write_histogram_csv(const BeatHistogram& h,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write histogram: " + path.string());
  }
  out << "bin_index,tau_ps,count\n";
  char buf[64];
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    out << k << ',';
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), h.bin_center_ps(k));
    out.write(buf, p - buf);
    out << ',' << h.counts[k] << '\n';
  }
}

}  // namespace freqbin
