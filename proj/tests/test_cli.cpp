#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "freqbin/scenario.hpp"

namespace fs = std::filesystem;
using namespace freqbin;

namespace {

const fs::path kWork = fs::temp_directory_path() / "freqbin_cli_test";

int run_cli(const std::string& args, const std::string& log = "cli.log") {
  const std::string cmd = std::string(FREQBIN_CLI_PATH) + " " + args + " >" +
                          (kWork / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path write_small_config() {
  Scenario s = make_demo_scenario(Basis::x);
  s.duration_ps = 1'000'000'000'000;  // one full shutter cycle
  s.seed = 777;
  for (auto& det : s.detectors) det.dark_rate_hz = 0.0;
  const fs::path path = kWork / "config.json";
  std::ofstream out(path);
  out << s.to_json().dump(2) << "\n";
  return path;
}

}  // namespace

TEST_CASE("cli end to end") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const fs::path config = write_small_config();

  SUBCASE("simulate then analyze") {
    const fs::path out_a = kWork / "run_a";
    const fs::path out_b = kWork / "run_b";
    CHECK(run_cli("simulate --config " + config.string() + " --out " +
                  out_a.string()) == 0);
    CHECK(run_cli("simulate --config " + config.string() + " --out " +
                  out_b.string()) == 0);
    REQUIRE(fs::exists(out_a / "tags.csv"));
    REQUIRE(fs::exists(out_a / "tags.meta.json"));
    REQUIRE(fs::exists(out_a / "manifest.json"));
    // Equal seeds through the CLI give byte-identical tag files.
    CHECK(slurp(out_a / "tags.csv") == slurp(out_b / "tags.csv"));

    // Artifacts re-derive from the manifest's embedded config.
    const auto manifest = nlohmann::json::parse(slurp(out_a / "manifest.json"));
    CHECK(manifest["config_digest"] ==
          config_digest(manifest["resolved_config"]));
    const fs::path rederive_cfg = kWork / "from_manifest.json";
    {
      std::ofstream out(rederive_cfg);
      out << manifest["resolved_config"].dump(2) << "\n";
    }
    const fs::path out_c = kWork / "run_c";
    CHECK(run_cli("simulate --config " + rederive_cfg.string() + " --out " +
                  out_c.string()) == 0);
    CHECK(slurp(out_a / "tags.csv") == slurp(out_c / "tags.csv"));

    // Analysis over the simulated stream.
    const fs::path out_an = kWork / "analysis";
    CHECK(run_cli("analyze --tags " + (out_a / "tags.csv").string() +
                  " --config " + config.string() + " --out " +
                  out_an.string()) == 0);
    REQUIRE(fs::exists(out_an / "report.json"));
    REQUIRE(fs::exists(out_an / "histogram.csv"));
    const auto report = nlohmann::json::parse(slurp(out_an / "report.json"));
    const std::set<std::string> expected_keys{
        "v_fit",          "v_fit_err",      "phase_rad",
        "v_peak_trough",  "v_z_omega0",     "v_z_omega0_err",
        "v_z_omega1",     "v_z_omega1_err", "v_z_combined",
        "qber",           "events_total",   "events_dropped"};
    std::set<std::string> got;
    for (const auto& [k, v] : report.items()) got.insert(k);
    CHECK(got == expected_keys);
    CHECK(report["events_total"].get<std::int64_t>() > 1000);
    CHECK(report["v_fit"].get<double>() > 0.8);

    // A mismatched separation override is warned about in the manifest.
    // 2*pi*250 MHz is commensurate with the marker period but differs from
    // the stream metadata.
    const fs::path out_mis = kWork / "mismatch";
    CHECK(run_cli("analyze --tags " + (out_a / "tags.csv").string() +
                  " --config " + config.string() +
                  " --override source.delta_omega_rad_per_s=1570796326.7948966" +
                  " --out " + out_mis.string()) == 0);
    const auto mmanifest =
        nlohmann::json::parse(slurp(out_mis / "manifest.json"));
    CHECK(mmanifest["warnings"].size() >= 1);
  }

  SUBCASE("config validation failures exit with code 1") {
    auto doc = nlohmann::json::parse(slurp(config));
    doc["source"]["v_x_eps"] = 2.0;
    const fs::path bad = kWork / "bad.json";
    {
      std::ofstream out(bad);
      out << doc.dump(2) << "\n";
    }
    CHECK(run_cli("simulate --config " + bad.string() + " --out " +
                  (kWork / "bad_out").string(),
                  "bad.log") == 1);
    const auto log = slurp(kWork / "bad.log");
    CHECK(log.find("source.v_x_eps") != std::string::npos);
    CHECK(run_cli("simulate --config /nonexistent.json --out " +
                  (kWork / "bad_out2").string(),
                  "bad2.log") == 1);
  }

  SUBCASE("analysis failures exit with code 2") {
    const fs::path garbage = kWork / "garbage.csv";
    {
      std::ofstream out(garbage);
      out << "channel,timestamp_ps\n1,abc\n";
    }
    CHECK(run_cli("analyze --tags " + garbage.string() + " --config " +
                  config.string() + " --out " + (kWork / "g_out").string(),
                  "garbage.log") == 2);

    // A stream with no detector events reports zero totals and fails.
    const fs::path markers_only = kWork / "markers_only.csv";
    {
      std::ofstream out(markers_only);
      out << "channel,timestamp_ps\n0,0\n0,2000000\n0,4000000\n";
    }
    const fs::path out_dir = kWork / "empty_out";
    CHECK(run_cli("analyze --tags " + markers_only.string() + " --config " +
                  config.string() + " --out " + out_dir.string(),
                  "empty.log") == 2);
    const auto report = nlohmann::json::parse(slurp(out_dir / "report.json"));
    CHECK(report["events_total"].get<std::int64_t>() == 0);
  }

  SUBCASE("predict emits the standard curves") {
    const fs::path out = kWork / "predict";
    CHECK(run_cli("predict --out " + out.string()) == 0);
    CHECK(fs::exists(out / "visibility_vs_spacing.csv"));
    CHECK(fs::exists(out / "visibility_vs_jitter.csv"));
    CHECK(run_cli("predict --sweep nonsense --out " + out.string(),
                  "pbad.log") == 1);
  }

  SUBCASE("satellite profile from a trajectory file") {
    const fs::path traj = kWork / "pass.csv";
    {
      std::ofstream out(traj);
      out << "t_s,range_m\n0,500000\n5,530000\n10,560000\n";
    }
    const fs::path out = kWork / "sat";
    CHECK(run_cli("satellite --trajectory " + traj.string() + " --out " +
                  out.string()) == 0);
    CHECK(fs::exists(out / "phase_profile.csv"));
    CHECK(fs::exists(out / "compensation_budget.csv"));
  }
}
