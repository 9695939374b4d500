// Command-line front end: scenario simulation, tag analysis, analytic
// prediction curves and moving-platform budgets.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 analysis error.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqbin/channel.hpp"
#include "freqbin/constants.hpp"
#include "freqbin/mcsim.hpp"
#include "freqbin/qstate.hpp"
#include "freqbin/receiver.hpp"
#include "freqbin/scenario.hpp"
#include "freqbin/tagproc.hpp"
#include "freqbin/tags.hpp"

namespace fs = std::filesystem;
using namespace freqbin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAnalysis = 2;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

struct RunManifest {
  std::string command;
  std::string config_digest;
  nlohmann::json resolved_config;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  void write(const fs::path& dir) const {
    nlohmann::json j{
        {"tool", "freqbin"},
        {"version", kToolVersion},
        {"command", command},
        {"created_utc", utc_now()},
        {"config_digest", config_digest},
        {"resolved_config", resolved_config},
        {"outputs", outputs},
        {"warnings", warnings},
    };
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j.dump(2) << "\n";
  }
};

void write_curve_csv(const fs::path& path, const std::string& header,
                     const std::vector<std::pair<double, double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  out << header << "\n";
  for (const auto& [x, y] : rows) {
    out << format_double(x) << ',' << format_double(y) << "\n";
  }
}

// Shared config loading: file (optional) + overrides + seed override.
struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path,
                                "scenario configuration JSON");
    if (config_required) opt->required();
    cmd->add_option("--override", overrides,
                    "config override key.path=value (repeatable)");
    cmd->add_option("--seed", seed, "override the scenario seed");
  }

  // Returns nullopt and prints diagnostics when the config is invalid.
  std::optional<Scenario> load(nlohmann::json* resolved_out) const {
    nlohmann::json doc;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "config error: cannot open " << config_path << "\n";
        return std::nullopt;
      }
      doc = nlohmann::json::parse(in, nullptr, false);
      if (doc.is_discarded()) {
        std::cerr << "config error: " << config_path << " is not valid JSON\n";
        return std::nullopt;
      }
    } else {
      doc = make_demo_scenario(Basis::x).to_json();
    }
    try {
      for (const auto& ov : overrides) apply_override(doc, ov);
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return std::nullopt;
    }
    if (seed) doc["seed"] = *seed;
    auto parsed = parse_scenario(doc);
    if (!parsed.scenario) {
      for (const auto& issue : parsed.issues) {
        std::cerr << "config error: " << issue.field << ": " << issue.message
                  << "\n";
      }
      return std::nullopt;
    }
    if (resolved_out) *resolved_out = parsed.scenario->to_json();
    return parsed.scenario;
  }
};

int run_simulation_to(const Scenario& scenario, const fs::path& out_dir,
                      const std::string& name, unsigned threads,
                      RunManifest& manifest, fs::path* csv_out) {
  fs::create_directories(out_dir);
  const auto stream = simulate(scenario, threads);
  const fs::path csv = out_dir / (name + ".csv");
  write_tag_csv(stream, csv);
  write_tag_meta(stream.meta, meta_path_for(csv));
  manifest.outputs.push_back(csv.string());
  manifest.outputs.push_back(meta_path_for(csv).string());
  if (csv_out) *csv_out = csv;
  return kExitOk;
}

int cmd_simulate(const ConfigOptions& cfg, const std::string& out_dir,
                 const std::string& name, unsigned threads) {
  nlohmann::json resolved;
  const auto scenario = cfg.load(&resolved);
  if (!scenario) return kExitConfig;
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.resolved_config = resolved;
  manifest.config_digest = scenario->digest();
  fs::path csv;
  run_simulation_to(*scenario, out_dir, name, threads, manifest, &csv);
  manifest.write(out_dir);
  std::cout << "wrote " << csv.string() << "\n";
  return kExitOk;
}

struct AnalyzeOutcome {
  VisibilityReport report;
  int exit_code = kExitOk;
};

AnalyzeOutcome analyze_to(const fs::path& tags_path,
                          const std::optional<Scenario>& scenario,
                          const std::string& beat_state_str,
                          double bin_width_ps_override,
                          const fs::path& out_dir, RunManifest& manifest) {
  AnalyzeOutcome outcome;
  fs::create_directories(out_dir);

  TagStream stream = read_tag_csv(tags_path);
  const fs::path meta_path = meta_path_for(tags_path);
  bool have_meta = fs::exists(meta_path);
  if (have_meta) stream.meta = read_tag_meta(meta_path);
  if (!have_meta && !scenario) {
    throw std::runtime_error("no metadata sidecar and no --config given");
  }

  AnalysisConfig acfg;
  acfg.folding.marker_channel =
      scenario ? scenario->tagger.marker_channel : kMarkerChannel;
  acfg.folding.detector_channels = {kPort0Channel, kPort1Channel};
  acfg.folding.delta_omega = scenario ? scenario->source.delta_omega_rad_per_s
                                      : stream.meta.delta_omega_rad_per_s;
  acfg.folding.marker_period_ps = scenario ? scenario->tagger.marker_period_ps
                                           : stream.meta.marker_period_ps;
  if (have_meta && scenario) {
    const double rel =
        std::abs(scenario->source.delta_omega_rad_per_s -
                 stream.meta.delta_omega_rad_per_s) /
        stream.meta.delta_omega_rad_per_s;
    if (rel > 1e-9) {
      manifest.warnings.push_back(
          "configured delta_omega differs from tag metadata by relative " +
          format_double(rel) + "; using the configured value");
    }
  }
  double bin_width_ps = bin_width_ps_override > 0.0
                            ? bin_width_ps_override
                            : (have_meta ? stream.meta.resolution_ps
                                         : scenario->tagger.resolution_ps);
  acfg.folding.bin_width_fs = std::llround(bin_width_ps * 1000.0);

  if (scenario) {
    acfg.windows =
        schedule_windows(scenario->schedule, scenario->duration_ps);
  }
  if (auto st = state_from_string(beat_state_str)) {
    acfg.beat_state = *st;
  } else {
    throw std::runtime_error("unknown beat state: " + beat_state_str);
  }

  const auto result = analyze_stream(stream, acfg);
  outcome.report = result.report;

  const fs::path report_path = out_dir / "report.json";
  const fs::path hist_path = out_dir / "histogram.csv";
  write_report_json(result.report, report_path);
  write_histogram_csv(result.beat_histogram, hist_path);
  manifest.outputs.push_back(report_path.string());
  manifest.outputs.push_back(hist_path.string());

  if (result.report.events_total == 0 || !result.report.fit_valid) {
    if (!result.report.fit_error.empty()) {
      manifest.warnings.push_back("beat fit unavailable: " +
                                  result.report.fit_error);
    }
    outcome.exit_code =
        result.report.events_total == 0 ? kExitAnalysis : kExitOk;
  }
  return outcome;
}

void print_report(const VisibilityReport& r) {
  std::printf("events: %llu total, %llu before first marker\n",
              static_cast<unsigned long long>(r.events_total),
              static_cast<unsigned long long>(r.events_dropped));
  if (r.fit_valid) {
    std::printf("beat fit: v = %.4f +/- %.4f  (phase %.3f rad, peak/trough %.4f)\n",
                r.v_fit, r.v_fit_err, r.phase_rad, r.v_peak_trough);
    std::printf("QBER: %.4f\n", r.qber);
  } else {
    std::printf("beat fit: unavailable\n");
  }
  if (r.z_valid) {
    std::printf("V(omega0) = %.4f +/- %.4f\n", r.v_z_omega0, r.v_z_omega0_err);
    std::printf("V(omega1) = %.4f +/- %.4f\n", r.v_z_omega1, r.v_z_omega1_err);
    std::printf("Z combined = %.4f\n", r.v_z_combined);
  }
}

int cmd_analyze(const ConfigOptions& cfg, const std::string& tags,
                const std::string& out_dir, const std::string& beat_state,
                double bin_width_ps) {
  std::optional<Scenario> scenario;
  nlohmann::json resolved;
  if (!cfg.config_path.empty()) {
    scenario = cfg.load(&resolved);
    if (!scenario) return kExitConfig;
  }
  RunManifest manifest;
  manifest.command = "analyze";
  manifest.resolved_config = resolved;
  manifest.config_digest =
      scenario ? scenario->digest() : std::string("none");
  try {
    const auto outcome = analyze_to(tags, scenario, beat_state, bin_width_ps,
                                    out_dir, manifest);
    manifest.write(out_dir);
    print_report(outcome.report);
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    manifest.warnings.push_back(e.what());
    manifest.write(out_dir);
    return kExitAnalysis;
  }
}

int cmd_predict(const std::string& out_dir, const std::string& sweep,
                double v0, double fixed_jitter_ps, double fixed_dw,
                double lo, double hi, unsigned points,
                const std::string& convention) {
  if (points < 2) {
    std::cerr << "usage error: --points must be at least 2\n";
    return kExitConfig;
  }
  JitterConvention conv = JitterConvention::fwhm;
  if (convention == "stddev") {
    conv = JitterConvention::stddev;
  } else if (convention != "fwhm") {
    std::cerr << "usage error: --convention must be fwhm or stddev\n";
    return kExitConfig;
  }
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.command = "predict";
  manifest.config_digest = "none";
  manifest.resolved_config = {
      {"v0", v0},
      {"fixed_jitter_fwhm_ps", fixed_jitter_ps},
      {"fixed_delta_omega_rad_per_s", fixed_dw},
      {"sweep", sweep.empty() ? "both" : sweep},
      {"convention", convention},
  };

  const bool do_spacing = sweep.empty() || sweep == "spacing";
  const bool do_jitter = sweep.empty() || sweep == "jitter";
  if (!do_spacing && !do_jitter) {
    std::cerr << "usage error: --sweep must be 'spacing' or 'jitter'; each "
                 "curve varies exactly one parameter\n";
    return kExitConfig;
  }

  if (do_spacing) {
    // Visibility vs bin separation at fixed timing jitter.
    const double a = lo > 0 ? lo : kTwoPi * 1e6;
    const double b = hi > a ? hi : kTwoPi * 1e9;
    std::vector<double> dws(points);
    for (unsigned i = 0; i < points; ++i) {
      dws[i] = a * std::pow(b / a, static_cast<double>(i) / (points - 1));
    }
    const auto curve = visibility_vs_spacing_curve(
        v0, fixed_jitter_ps * 1e-12, dws, conv);
    const fs::path path = fs::path(out_dir) / "visibility_vs_spacing.csv";
    write_curve_csv(path, "delta_omega_rad_per_s,visibility", curve);
    manifest.outputs.push_back(path.string());
  }
  if (do_jitter) {
    // Visibility vs system jitter at fixed bin separation.
    const double a = lo >= 0 && !do_spacing ? lo : 0.0;
    const double b = hi > a && !do_spacing ? hi : 500.0;
    std::vector<std::pair<double, double>> curve;
    curve.reserve(points);
    for (unsigned i = 0; i < points; ++i) {
      const double jitter_ps =
          a + (b - a) * static_cast<double>(i) / (points - 1);
      curve.emplace_back(
          jitter_ps, jitter_visibility(v0, fixed_dw, jitter_ps * 1e-12, conv));
    }
    const fs::path path = fs::path(out_dir) / "visibility_vs_jitter.csv";
    write_curve_csv(path, "jitter_fwhm_ps,visibility", curve);
    manifest.outputs.push_back(path.string());
  }
  manifest.write(out_dir);
  for (const auto& o : manifest.outputs) std::cout << "wrote " << o << "\n";
  return kExitOk;
}

int cmd_satellite(const std::string& out_dir, const std::string& trajectory_csv,
                  double velocity, double r0, double duration_s,
                  unsigned samples, double dw) {
  PlatformTrajectory traj = PlatformTrajectory::static_range(0.0);
  double t_lo = 0.0, t_hi = duration_s;
  try {
    if (!trajectory_csv.empty()) {
      traj = PlatformTrajectory::from_csv(trajectory_csv);
      t_lo = traj.t_min();
      t_hi = traj.t_max();
    } else {
      traj = PlatformTrajectory::linear(velocity, r0);
    }
  } catch (const std::exception& e) {
    std::cerr << "trajectory error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!(t_hi > t_lo) || samples < 2) {
    std::cerr << "usage error: need a positive time span and >= 2 samples\n";
    return kExitConfig;
  }
  fs::create_directories(out_dir);
  const BinPair pair(FrequencyBin(2.4e15, 0.0), FrequencyBin(2.4e15 + dw, 0.0));

  RunManifest manifest;
  manifest.command = "satellite";
  manifest.config_digest = "none";
  manifest.resolved_config = {
      {"delta_omega_rad_per_s", dw},
      {"trajectory", trajectory_csv.empty() ? "linear" : trajectory_csv},
      {"velocity_m_per_s", velocity},
      {"r0_m", r0},
  };

  const fs::path profile = fs::path(out_dir) / "phase_profile.csv";
  {
    std::ofstream out(profile, std::ios::binary);
    out << "t_s,range_m,range_rate_m_per_s,delta_phi_rad,delta_f_hz\n";
    for (unsigned i = 0; i < samples; ++i) {
      const double t =
          t_lo + (t_hi - t_lo) * static_cast<double>(i) / (samples - 1);
      const double r = traj.range(t);
      const double rr = traj.range_rate(t);
      const double phi = phase_of_flight(pair, traj, t);
      const double df = phase_change_rate(pair, traj, t).hz;
      out << format_double(t) << ',' << format_double(r) << ','
          << format_double(rr) << ',' << format_double(phi) << ','
          << format_double(df) << "\n";
    }
  }
  manifest.outputs.push_back(profile.string());

  const fs::path budget = fs::path(out_dir) / "compensation_budget.csv";
  {
    std::ofstream out(budget, std::ios::binary);
    out << "fidelity,max_timing_error_ps\n";
    for (double f : {0.99, 0.999, 0.9999}) {
      out << format_double(f) << ','
          << format_double(required_timing_accuracy(dw, f) * 1e12) << "\n";
    }
  }
  manifest.outputs.push_back(budget.string());
  manifest.write(out_dir);

  const double df_mid = phase_change_rate(pair, traj, 0.5 * (t_lo + t_hi)).hz;
  std::printf("phase change rate at mid-span: %.1f Hz\n", df_mid);
  std::printf("timing budget: 99%% -> %.1f ps, 99.9%% -> %.1f ps, 99.99%% -> %.1f ps\n",
              required_timing_accuracy(dw, 0.99) * 1e12,
              required_timing_accuracy(dw, 0.999) * 1e12,
              required_timing_accuracy(dw, 0.9999) * 1e12);
  std::printf("\ncompensation requirements by encoding:\n");
  std::printf("  %-14s %-12s %s\n", "DOF", "sensitivity", "compensation");
  std::printf("  %-14s %-12s %s\n", "polarization", "< 1 Hz",
              "polarization reference + control");
  std::printf("  %-14s %-12s %s\n", "time-bin", "< 1 Hz", "phase modulation");
  std::printf("  %-14s %-12s %s\n", "frequency-bin", "~ 5 kHz",
              "GPS time sync + fast phase modulation");
  std::cout << "wrote " << profile.string() << "\n";
  std::cout << "wrote " << budget.string() << "\n";
  return kExitOk;
}

int cmd_demo(const std::string& out_dir, double duration_s,
             std::optional<std::uint64_t> seed, unsigned threads) {
  RunManifest manifest;
  manifest.command = "demo";

  auto make = [&](Basis basis) {
    Scenario s = make_demo_scenario(basis);
    s.duration_ps = static_cast<std::int64_t>(std::llround(duration_s * 1e12));
    if (seed) s.seed = *seed;
    return s;
  };
  const Scenario z_scenario = make(Basis::z);
  const Scenario x_scenario = make(Basis::x);
  manifest.resolved_config = {{"z", z_scenario.to_json()},
                              {"x", x_scenario.to_json()}};
  manifest.config_digest = config_digest(manifest.resolved_config);

  auto run_basis = [&](const Scenario& s, const char* subdir) {
    const fs::path dir = fs::path(out_dir) / subdir;
    fs::path csv;
    run_simulation_to(s, dir, "tags", threads, manifest, &csv);
    return analyze_to(csv, s, "X+", 0.0, dir, manifest).report;
  };
  const VisibilityReport z_report = run_basis(z_scenario, "z-basis");
  const VisibilityReport x_report = run_basis(x_scenario, "x-basis");
  manifest.write(out_dir);

  const Scenario& s = x_scenario;
  std::printf("== demo summary ==\n");
  std::printf("%-22s %.6g rad/s\n", "delta_omega",
              s.source.delta_omega_rad_per_s);
  std::printf("%-22s %.0f kHz\n", "marker rate",
              1e9 / static_cast<double>(s.tagger.marker_period_ps));
  std::printf("%-22s %.2g Hz\n", "shutter rate",
              1e12 / static_cast<double>(s.schedule.cycle_ps()));
  std::printf("%-22s %.4f +/- %.4f\n", "V(omega0)", z_report.v_z_omega0,
              z_report.v_z_omega0_err);
  std::printf("%-22s %.4f +/- %.4f\n", "V(omega1)", z_report.v_z_omega1,
              z_report.v_z_omega1_err);
  std::printf("%-22s %.4f\n", "Z-basis visibility", z_report.v_z_combined);
  std::printf("%-22s %.4f +/- %.4f\n", "X-basis visibility", x_report.v_fit,
              x_report.v_fit_err);
  std::printf("%-22s %.4f\n", "X-basis QBER", x_report.qber);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-bin qubit link simulator and time-tag analysis"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();  // --out may follow the subcommand name

  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a detector tag stream");
  ConfigOptions sim_cfg;
  sim_cfg.attach(sim, true);
  std::string sim_name = "tags";
  unsigned sim_threads = 2;
  sim->add_option("--name", sim_name, "tag file stem")->capture_default_str();
  sim->add_option("--threads", sim_threads, "worker threads")
      ->capture_default_str();

  // analyze
  auto* ana = app.add_subcommand("analyze", "fold and fit a tag stream");
  ConfigOptions ana_cfg;
  ana_cfg.attach(ana, false);
  std::string ana_tags;
  std::string beat_state = "X+";
  double bin_width_ps = 0.0;
  ana->add_option("--tags", ana_tags, "tag CSV file")->required();
  ana->add_option("--beat-state", beat_state,
                  "segment state folded for the beat fit")
      ->capture_default_str();
  ana->add_option("--bin-width-ps", bin_width_ps,
                  "histogram bin width (default: tagger resolution)");

  // predict
  auto* pre = app.add_subcommand("predict", "analytic visibility curves");
  std::string sweep;
  double v0 = 0.95, fixed_jitter = 100.0, fixed_dw = kTwoPi * 260e6;
  double sweep_lo = 0.0, sweep_hi = 0.0;
  unsigned points = 200;
  std::string convention = "fwhm";
  pre->add_option("--sweep", sweep,
                  "'spacing' or 'jitter' (default: both standard curves)");
  pre->add_option("--v0", v0, "zero-jitter visibility")->capture_default_str();
  pre->add_option("--fixed-jitter-fwhm-ps", fixed_jitter,
                  "jitter for the spacing sweep")
      ->capture_default_str();
  pre->add_option("--fixed-delta-omega-rad-per-s", fixed_dw,
                  "separation for the jitter sweep")
      ->capture_default_str();
  pre->add_option("--min", sweep_lo, "sweep start");
  pre->add_option("--max", sweep_hi, "sweep end");
  pre->add_option("--points", points, "samples per curve")
      ->capture_default_str();
  pre->add_option("--convention", convention, "fwhm or stddev")
      ->capture_default_str();

  // satellite
  auto* sat = app.add_subcommand("satellite",
                                 "moving-platform phase profile and budget");
  std::string traj_csv;
  double velocity = 6000.0, r0 = 0.0, duration_s = 10.0;
  double sat_dw = kTwoPi * 260e6;
  unsigned samples = 101;
  sat->add_option("--trajectory", traj_csv, "trajectory CSV (t_s,range_m)");
  sat->add_option("--velocity-m-per-s", velocity, "radial velocity")
      ->capture_default_str();
  sat->add_option("--r0-m", r0, "initial range")->capture_default_str();
  sat->add_option("--duration-s", duration_s, "profile span")
      ->capture_default_str();
  sat->add_option("--samples", samples, "profile samples")
      ->capture_default_str();
  sat->add_option("--delta-omega-rad-per-s", sat_dw, "bin separation")
      ->capture_default_str();

  // demo
  auto* demo = app.add_subcommand(
      "demo", "replication run: simulate both bases and summarize");
  double demo_duration = 60.0;
  std::optional<std::uint64_t> demo_seed;
  unsigned demo_threads = 2;
  demo->add_option("--duration-s", demo_duration, "run length per basis")
      ->capture_default_str();
  demo->add_option("--seed", demo_seed, "override the demo seed");
  demo->add_option("--threads", demo_threads, "worker threads")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_cfg, out_dir, sim_name, sim_threads);
    }
    if (ana->parsed()) {
      return cmd_analyze(ana_cfg, ana_tags, out_dir, beat_state, bin_width_ps);
    }
    if (pre->parsed()) {
      return cmd_predict(out_dir, sweep, v0, fixed_jitter, fixed_dw, sweep_lo,
                         sweep_hi, points, convention);
    }
    if (sat->parsed()) {
      return cmd_satellite(out_dir, traj_csv, velocity, r0, duration_s,
                           samples, sat_dw);
    }
    if (demo->parsed()) {
      return cmd_demo(out_dir, demo_duration, demo_seed, demo_threads);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitConfig;
}
