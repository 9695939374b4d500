#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "freqbin/channel.hpp"
#include "freqbin/constants.hpp"

using namespace freqbin;

namespace {

BinPair make_pair_dw(double dw) {
  return BinPair(FrequencyBin(2.4e15, 0), FrequencyBin(2.4e15 + dw, 0));
}

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("doppler_shift values and round trip") {
  CHECK(doppler_shift(2.4e15, 0.0) == doctest::Approx(2.4e15));
  // 6 km/s approach: factor 1 + 2.0014e-5.
  const double f = doppler_shift(1.0, 6e3);
  CHECK(f - 1.0 == doctest::Approx(2.0014045992944318e-05).epsilon(1e-10));
  const double fr = doppler_shift(1.0, -6e3);
  CHECK(1.0 - fr == doctest::Approx(2.0013645438909933e-05).epsilon(1e-9));
  // Agreement with the first-order form to O((v/c)^2).
  const double beta = 6e3 / kSpeedOfLight;
  CHECK(std::abs(f - (1.0 + beta)) < 2.0 * beta * beta);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3e7, 3e7);
  for (int i = 0; i < 100; ++i) {
    const double v = u(rng);
    const double w = 2.4e15;
    const double round = doppler_shift(doppler_shift(w, v), -v);
    CHECK(std::abs(round - w) / w < 1e-12);
  }
  CHECK_THROWS_AS(doppler_shift(1.0, kSpeedOfLight), std::domain_error);
  CHECK_THROWS_AS(doppler_shift(1.0, -kSpeedOfLight), std::domain_error);
}

TEST_CASE("phase_of_flight") {
  auto pair = make_pair_dw(1.634e9);
  // Zero range, zero phase.
  CHECK(phase_of_flight(pair, PlatformTrajectory::static_range(0.0), 5.0) ==
        0.0);
  // Linear at 6 km/s, t = 1 s.
  const auto lin = PlatformTrajectory::linear(6e3);
  CHECK(phase_of_flight(pair, lin, 1.0) ==
        doctest::Approx(32703.278398495793).epsilon(1e-12));
  // Static range: constant in t.
  const auto stat = PlatformTrajectory::static_range(1234.0);
  CHECK(phase_of_flight(pair, stat, 0.0) ==
        doctest::Approx(phase_of_flight(pair, stat, 1e3)).epsilon(1e-15));
}

TEST_CASE("phase_change_rate") {
  auto pair = make_pair_dw(kTwoPi * 260e6);
  const auto lin = PlatformTrajectory::linear(6e3);
  const auto rate = phase_change_rate(pair, lin, 1.0);
  CHECK_FALSE(rate.one_sided);
  // delta_omega is reconstructed by subtracting ~2.4e15 rad/s centres, so
  // agreement below ~1e-10 relative is not meaningful.
  CHECK(rate.hz == doctest::Approx(5203.704029136417).epsilon(1e-9));
  // Within the (v/c)^2 correction of the first-order value 5203.6 Hz.
  CHECK(std::abs(rate.hz - 5203.599885091171) / 5203.6 < 2.1e-5);

  // v = 0 gives zero rate.
  CHECK(phase_change_rate(pair, PlatformTrajectory::linear(0.0), 1.0).hz ==
        0.0);
  // First-order linearity: doubling v doubles the rate within 1e-4.
  const double r1 = phase_change_rate(pair, PlatformTrajectory::linear(3e3), 1.0).hz;
  const double r2 = phase_change_rate(pair, PlatformTrajectory::linear(6e3), 1.0).hz;
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(1e-4));
  // Linear trajectories: time-independent.
  CHECK(phase_change_rate(pair, lin, 1.0).hz ==
        doctest::Approx(phase_change_rate(pair, lin, 10.0).hz).epsilon(1e-15));
}

TEST_CASE("sampled trajectory interpolation and rates") {
  // Dense samples of a linear pass reproduce the analytic numbers.
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i <= 100; ++i) samples.emplace_back(i * 0.1, 5e5 + 6e3 * i * 0.1);
  const auto traj = PlatformTrajectory::from_samples(samples);
  auto pair = make_pair_dw(kTwoPi * 260e6);

  CHECK(traj.range(3.05) == doctest::Approx(5e5 + 6e3 * 3.05).epsilon(1e-12));
  const auto mid = traj.range_rate_ex(5.0);
  CHECK_FALSE(mid.one_sided);
  CHECK(mid.value == doctest::Approx(6e3).epsilon(1e-9));
  // Edge rates are one-sided and flagged.
  CHECK(traj.range_rate_ex(0.0).one_sided);
  CHECK(traj.range_rate_ex(10.0).one_sided);
  CHECK(phase_change_rate(pair, traj, 0.0).one_sided);

  const auto rate = phase_change_rate(pair, traj, 5.0);
  CHECK_FALSE(rate.one_sided);
  CHECK(rate.hz == doctest::Approx(5203.7).epsilon(1e-3));

  CHECK_THROWS_AS(traj.range(-1.0), std::out_of_range);
  CHECK_THROWS_AS(phase_of_flight(pair, traj, 11.0), std::out_of_range);
}

TEST_CASE("monotone interpolation does not overshoot") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> samples;
    double t = 0.0, r = 1e3 + u(rng) * 1e5;
    for (int i = 0; i < 12; ++i) {
      samples.emplace_back(t, r);
      t += 0.1 + u(rng);
      r += (u(rng) - 0.3) * 1e4;
      r = std::max(r, 0.0);
    }
    const auto traj = PlatformTrajectory::from_samples(samples);
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      const double lo = std::min(samples[i].second, samples[i + 1].second);
      const double hi = std::max(samples[i].second, samples[i + 1].second);
      for (int k = 1; k < 10; ++k) {
        const double tq = samples[i].first +
                          k * (samples[i + 1].first - samples[i].first) / 10.0;
        const double rq = traj.range(tq);
        CHECK(rq >= lo - 1e-9 * (hi - lo + 1));
        CHECK(rq <= hi + 1e-9 * (hi - lo + 1));
      }
    }
  }
}

TEST_CASE("trajectory csv ingest") {
  const auto good = write_temp("fbq_traj_good.csv",
                               "t_s,range_m\n0,500000\n1,506000\n2,512000\n");
  const auto traj = PlatformTrajectory::from_csv(good);
  CHECK(traj.range(1.0) == doctest::Approx(506000.0));

  const auto bad_header = write_temp("fbq_traj_bh.csv", "time,range\n0,1\n");
  CHECK_THROWS_WITH_AS(PlatformTrajectory::from_csv(bad_header),
                       doctest::Contains(":1:"), std::runtime_error);

  const auto non_mono =
      write_temp("fbq_traj_nm.csv", "t_s,range_m\n0,1\n2,2\n1,3\n");
  CHECK_THROWS_WITH_AS(PlatformTrajectory::from_csv(non_mono),
                       doctest::Contains(":4:"), std::runtime_error);

  const auto bad_field =
      write_temp("fbq_traj_bf.csv", "t_s,range_m\n0,1\nx,2\n");
  CHECK_THROWS_WITH_AS(PlatformTrajectory::from_csv(bad_field),
                       doctest::Contains(":3:"), std::runtime_error);
}

TEST_CASE("dephase_by_reference_window") {
  const double dw = 1.634e9;
  auto q = FBinQubit::balanced(make_pair_dw(dw));

  // Perfect time knowledge: identity.
  auto s0 = dephase_by_reference_window(q, 0.0);
  CHECK(std::abs(s0.coherence) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s0.p0 + s0.p1 == doctest::Approx(1.0).epsilon(1e-15));

  // First sinc zero.
  auto s1 = dephase_by_reference_window(q, kPi / dw);
  CHECK(std::abs(s1.coherence) < 1e-12);

  // Quarter window: factor 2/pi.
  CHECK(reference_window_coherence_factor(dw, kPi / (2.0 * dw)) ==
        doctest::Approx(2.0 / kPi).epsilon(1e-12));

  // Trace preserved and coherence bounded for arbitrary states.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    FBinQubit qr(make_pair_dw(dw), {u(rng) + 0.01, u(rng)},
                 {u(rng) + 0.01, -u(rng)});
    const double tr = u(rng) * 10.0 / dw;
    auto s = dephase_by_reference_window(qr, tr);
    CHECK(s.p0 + s.p1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.coherence) <= std::sqrt(s.p0 * s.p1) + 1e-12);
    const double f = reference_window_coherence_factor(dw, tr);
    CHECK(std::abs(f) <= 1.0);
    if (tr > 0.0) CHECK(std::abs(f) < 1.0);
  }
  CHECK_THROWS_AS(dephase_by_reference_window(q, -1.0), std::invalid_argument);
}

TEST_CASE("compensation_fidelity and timing budget") {
  const double dw = 1.634e9;
  CHECK(compensation_fidelity(dw, 0.0) == doctest::Approx(1.0));
  CHECK(compensation_fidelity(dw, kPi / dw) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // 99.9% fidelity needs ~38.7 ps at this separation.
  CHECK(required_timing_accuracy(dw, 0.999) ==
        doctest::Approx(38.712423e-12).epsilon(1e-6));
  CHECK(compensation_fidelity(dw, required_timing_accuracy(dw, 0.999)) ==
        doctest::Approx(0.999).epsilon(1e-12));

  // Bounded and periodic with period 2 pi / dw.
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 5e-9);
  for (int i = 0; i < 200; ++i) {
    const double e = u(rng);
    const double f = compensation_fidelity(dw, e);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(compensation_fidelity(dw, e + kTwoPi / dw) ==
          doctest::Approx(f).epsilon(1e-6));
  }
}
