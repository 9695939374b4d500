#include "freqbin/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "freqbin/constants.hpp"

namespace freqbin {

namespace {

// Fritsch-Carlson monotone cubic tangents: secant-limited so the Hermite
// interpolant never overshoots the bracketing samples.
std::vector<double> monotone_tangents(
    const std::vector<std::pair<double, double>>& s) {
  const std::size_t n = s.size();
  std::vector<double> m(n, 0.0);
  if (n == 1) return m;
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    secant[i] = (s[i + 1].second - s[i].second) / (s[i + 1].first - s[i].first);
  }
  m[0] = secant[0];
  m[n - 1] = secant[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (secant[i - 1] * secant[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      m[i] = 0.5 * (secant[i - 1] + secant[i]);
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (secant[i] == 0.0) {
      m[i] = 0.0;
      m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / secant[i];
    const double b = m[i + 1] / secant[i];
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m[i] = tau * a * secant[i];
      m[i + 1] = tau * b * secant[i];
    }
  }
  return m;
}

}  // namespace

PlatformTrajectory PlatformTrajectory::static_range(double r0_m) {
  if (!(r0_m >= 0.0)) {
    throw std::invalid_argument("PlatformTrajectory: range must be >= 0");
  }
  PlatformTrajectory t;
  t.mode_ = TrajectoryMode::static_range;
  t.r0_ = r0_m;
  return t;
}

PlatformTrajectory PlatformTrajectory::linear(double velocity_m_per_s,
                                              double r0_m) {
  if (!(r0_m >= 0.0)) {
    throw std::invalid_argument("PlatformTrajectory: range must be >= 0");
  }
  PlatformTrajectory t;
  t.mode_ = TrajectoryMode::linear;
  t.velocity_ = velocity_m_per_s;
  t.r0_ = r0_m;
  return t;
}

PlatformTrajectory PlatformTrajectory::from_samples(
    std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument(
        "PlatformTrajectory: sampled mode needs at least two samples");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].second >= 0.0)) {
      throw std::invalid_argument("PlatformTrajectory: range must be >= 0");
    }
    if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
      throw std::invalid_argument(
          "PlatformTrajectory: sample times must be strictly increasing");
    }
  }
  PlatformTrajectory t;
  t.mode_ = TrajectoryMode::sampled;
  t.samples_ = std::move(samples);
  t.tangents_ = monotone_tangents(t.samples_);
  return t;
}

PlatformTrajectory PlatformTrajectory::from_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open trajectory file: " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                             ": " + what);
  };
  if (!std::getline(in, line)) fail("empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,range_m") fail("expected header 't_s,range_m'");
  std::vector<std::pair<double, double>> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected 't,range'");
    double t = 0.0, r = 0.0;
    try {
      std::size_t used = 0;
      t = std::stod(line.substr(0, comma), &used);
      if (used != comma) fail("malformed time field");
      const std::string rest = line.substr(comma + 1);
      r = std::stod(rest, &used);
      if (used != rest.size()) fail("malformed range field");
    } catch (const std::logic_error&) {
      fail("malformed numeric field");
    }
    if (!samples.empty() && !(t > samples.back().first)) {
      fail("sample times must be strictly increasing");
    }
    if (!(r >= 0.0)) fail("range must be >= 0");
    samples.emplace_back(t, r);
  }
  try {
    return from_samples(std::move(samples));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

double PlatformTrajectory::t_min() const {
  return mode_ == TrajectoryMode::sampled
             ? samples_.front().first
             : -std::numeric_limits<double>::infinity();
}

double PlatformTrajectory::t_max() const {
  return mode_ == TrajectoryMode::sampled
             ? samples_.back().first
             : std::numeric_limits<double>::infinity();
}

std::size_t PlatformTrajectory::interval_for(double t) const {
  if (t < t_min() || t > t_max()) {
    throw std::out_of_range("PlatformTrajectory: time outside sampled span");
  }
  const auto it = std::upper_bound(
      samples_.begin(), samples_.end(), t,
      [](double v, const auto& s) { return v < s.first; });
  std::size_t idx = static_cast<std::size_t>(it - samples_.begin());
  if (idx > 0) --idx;
  if (idx + 1 >= samples_.size()) idx = samples_.size() - 2;
  return idx;
}

double PlatformTrajectory::local_spacing(double t) const {
  const std::size_t i = interval_for(t);
  return samples_[i + 1].first - samples_[i].first;
}

double PlatformTrajectory::range(double t) const {
  switch (mode_) {
    case TrajectoryMode::static_range:
      return r0_;
    case TrajectoryMode::linear: {
      const double r = r0_ + velocity_ * t;
      if (r < 0.0) {
        throw std::out_of_range("PlatformTrajectory: negative range at t");
      }
      return r;
    }
    case TrajectoryMode::sampled:
      break;
  }
  const std::size_t i = interval_for(t);
  const double h = samples_[i + 1].first - samples_[i].first;
  const double u = (t - samples_[i].first) / h;
  const double y0 = samples_[i].second, y1 = samples_[i + 1].second;
  const double m0 = tangents_[i] * h, m1 = tangents_[i + 1] * h;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 +
         (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
}

PlatformTrajectory::RateSample PlatformTrajectory::range_rate_ex(
    double t) const {
  switch (mode_) {
    case TrajectoryMode::static_range:
      return {0.0, false};
    case TrajectoryMode::linear:
      return {velocity_, false};
    case TrajectoryMode::sampled:
      break;
  }
  const double h = local_spacing(t);
  const double lo = t_min(), hi = t_max();
  if (t - h >= lo && t + h <= hi) {
    return {(range(t + h) - range(t - h)) / (2.0 * h), false};
  }
  if (t + h <= hi) return {(range(t + h) - range(t)) / h, true};
  if (t - h >= lo) return {(range(t) - range(t - h)) / h, true};
  // Interval shorter than the spacing on both sides: fall back to the
  // bracketing secant.
  const std::size_t i = interval_for(t);
  const double dy = samples_[i + 1].second - samples_[i].second;
  const double dx = samples_[i + 1].first - samples_[i].first;
  return {dy / dx, true};
}

double doppler_shift(double omega, double velocity_m_per_s) {
  if (!(std::abs(velocity_m_per_s) < kSpeedOfLight)) {
    throw std::domain_error("doppler_shift: |v| must be below c");
  }
  return omega * std::sqrt((kSpeedOfLight + velocity_m_per_s) /
                           (kSpeedOfLight - velocity_m_per_s));
}

double phase_of_flight(const BinPair& pair, const PlatformTrajectory& traj,
                       double t) {
  const double r = traj.range(t);
  const double rdot = traj.range_rate(t);
  return pair.delta_omega() * (1.0 + rdot / kSpeedOfLight) * r / kSpeedOfLight;
}

PhaseRate phase_change_rate(const BinPair& pair,
                            const PlatformTrajectory& traj, double t) {
  const double dw = pair.delta_omega();
  switch (traj.mode()) {
    case TrajectoryMode::static_range:
      return {0.0, false};
    case TrajectoryMode::linear: {
      const double beta = traj.velocity() / kSpeedOfLight;
      return {dw * (1.0 + beta) * beta / kTwoPi, false};
    }
    case TrajectoryMode::sampled:
      break;
  }
  // Centred difference of the flight phase at the local sample spacing;
  // one-sided at the edges of the sampled span.
  const auto& s = traj.samples();
  double spacing = s[1].first - s[0].first;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (t <= s[i + 1].first) {
      spacing = s[i + 1].first - s[i].first;
      break;
    }
  }
  const double lo = traj.t_min(), hi = traj.t_max();
  if (t - spacing >= lo && t + spacing <= hi) {
    const double dphi = phase_of_flight(pair, traj, t + spacing) -
                        phase_of_flight(pair, traj, t - spacing);
    return {dphi / (2.0 * spacing) / kTwoPi, false};
  }
  if (t + spacing <= hi) {
    const double dphi =
        phase_of_flight(pair, traj, t + spacing) - phase_of_flight(pair, traj, t);
    return {dphi / spacing / kTwoPi, true};
  }
  if (t - spacing >= lo) {
    const double dphi =
        phase_of_flight(pair, traj, t) - phase_of_flight(pair, traj, t - spacing);
    return {dphi / spacing / kTwoPi, true};
  }
  const double dphi = phase_of_flight(pair, traj, hi) -
                      phase_of_flight(pair, traj, lo);
  return {dphi / (hi - lo) / kTwoPi, true};
}

double reference_window_coherence_factor(double delta_omega, double t_r) {
  if (!(t_r >= 0.0)) {
    throw std::invalid_argument("reference window half-width must be >= 0");
  }
  const double x = delta_omega * t_r;
  if (x == 0.0) return 1.0;
  return std::sin(x) / x;
}

DephasedState dephase_by_reference_window(const FBinQubit& q, double t_r) {
  const double factor =
      reference_window_coherence_factor(q.pair().delta_omega(), t_r);
  DephasedState out;
  out.p0 = std::norm(q.a0());
  out.p1 = std::norm(q.a1());
  out.coherence = std::conj(q.a0()) * q.a1() * factor;
  return out;
}

double compensation_fidelity(double delta_omega, double timing_error) {
  if (!(timing_error >= 0.0)) {
    throw std::invalid_argument("compensation_fidelity: error must be >= 0");
  }
  const double c = std::cos(0.5 * delta_omega * timing_error);
  return c * c;
}

double required_timing_accuracy(double delta_omega, double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw std::invalid_argument("required_timing_accuracy: fidelity in [0,1]");
  }
  if (!(delta_omega > 0.0)) {
    throw std::invalid_argument("required_timing_accuracy: delta_omega > 0");
  }
  return 2.0 * std::acos(std::sqrt(fidelity)) / delta_omega;
}

}  // namespace freqbin
