#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "freqbin/constants.hpp"
#include "freqbin/scenario.hpp"

using namespace freqbin;

namespace {

nlohmann::json demo_json() { return make_demo_scenario(Basis::x).to_json(); }

}  // namespace

TEST_CASE("demo scenario round-trips through its own JSON") {
  const auto j = demo_json();
  auto parsed = parse_scenario(j);
  for (const auto& issue : parsed.issues) {
    CAPTURE(issue.field);
    CAPTURE(issue.message);
    CHECK(false);
  }
  REQUIRE(parsed.scenario.has_value());
  const Scenario& s = *parsed.scenario;
  CHECK(s.n_b() == 520);
  CHECK(s.duration_ps == 60'000'000'000'000);
  CHECK(s.detectors.size() == 2);
  CHECK(s.receiver.basis == Basis::x);
  CHECK(s.resolution_fs() == 78'125);
  CHECK(s.schedule.cycle_ps() == 1'000'000'000'000);
  // Re-serialization digests identically.
  CHECK(s.digest() == config_digest(j));
}

TEST_CASE("digest is stable under key reordering and sensitive to values") {
  const char* a = R"({"alpha": 1, "beta": {"x": 2.5, "y": "z"}})";
  const char* b = R"({"beta": {"y": "z", "x": 2.5}, "alpha": 1})";
  CHECK(config_digest(nlohmann::json::parse(a)) ==
        config_digest(nlohmann::json::parse(b)));
  const char* c = R"({"alpha": 1, "beta": {"x": 2.500001, "y": "z"}})";
  CHECK(config_digest(nlohmann::json::parse(a)) !=
        config_digest(nlohmann::json::parse(c)));
}

TEST_CASE("validation reports every offending field") {
  auto j = demo_json();
  j["source"]["v_x_eps"] = 1.7;                 // out of range
  j["channel"]["attenuation_db"] = -3.0;        // negative loss
  j["tagger"]["resolution_ps"] = -1.0;          // non-positive
  j["detectors"] = nlohmann::json::array();     // wrong arity
  j["receiver"]["basis"] = "Q";                 // unknown basis
  auto parsed = parse_scenario(j);
  CHECK_FALSE(parsed.scenario.has_value());
  CHECK(parsed.issues.size() >= 5);
  auto has_issue = [&](const std::string& field) {
    for (const auto& i : parsed.issues) {
      if (i.field == field) return true;
    }
    return false;
  };
  CHECK(has_issue("source.v_x_eps"));
  CHECK(has_issue("channel.attenuation_db"));
  CHECK(has_issue("tagger.resolution_ps"));
  CHECK(has_issue("detectors"));
  CHECK(has_issue("receiver.basis"));
}

TEST_CASE("incommensurate beat separation is a validation issue") {
  auto j = demo_json();
  j["source"]["delta_omega_rad_per_s"] = 1.634e9;
  auto parsed = parse_scenario(j);
  CHECK_FALSE(parsed.scenario.has_value());
  REQUIRE(parsed.issues.size() == 1);
  CHECK(parsed.issues[0].field == "source.delta_omega_rad_per_s");
}

TEST_CASE("missing required fields are reported, not thrown") {
  auto parsed = parse_scenario(nlohmann::json::object());
  CHECK_FALSE(parsed.scenario.has_value());
  CHECK(parsed.issues.size() >= 5);
  auto parsed2 = parse_scenario(nlohmann::json(3.14));
  CHECK_FALSE(parsed2.scenario.has_value());
}

TEST_CASE("delta_l defaults to the demux condition") {
  auto j = demo_json();
  j["receiver"].erase("delta_l_m");
  auto parsed = parse_scenario(j);
  REQUIRE(parsed.scenario.has_value());
  CHECK(parsed.scenario->receiver.delta_l_m ==
        doctest::Approx(kPi * kSpeedOfLight / (kTwoPi * 260e6)).epsilon(1e-12));
}

TEST_CASE("overrides hit dotted paths with JSON or string values") {
  auto j = demo_json();
  apply_override(j, "seed=99");
  apply_override(j, "source.v_x_eps=0.9");
  apply_override(j, "receiver.basis=Z");
  apply_override(j, "notes.operator=free text");
  CHECK(j["seed"] == 99);
  CHECK(j["source"]["v_x_eps"] == 0.9);
  CHECK(j["receiver"]["basis"] == "Z");
  CHECK(j["notes"]["operator"] == "free text");
  CHECK_THROWS_AS(apply_override(j, "novalue"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(j, "=5"), std::invalid_argument);
  // Paths through arrays or scalars are rejected with a diagnostic.
  CHECK_THROWS_AS(apply_override(j, "detectors.extra=1"),
                  std::invalid_argument);
}

TEST_CASE("sampled trajectory config") {
  auto j = demo_json();
  j["channel"]["trajectory"] = {
      {"mode", "sampled"},
      {"samples", {{0.0, 5e5}, {30.0, 6e5}, {61.0, 7e5}}}};
  auto parsed = parse_scenario(j);
  REQUIRE(parsed.scenario.has_value());
  CHECK(parsed.scenario->channel.trajectory.mode() == TrajectoryMode::sampled);

  // A trajectory that stops short of the run duration is rejected.
  j["channel"]["trajectory"]["samples"] = {{0.0, 5e5}, {30.0, 6e5}};
  auto bad = parse_scenario(j);
  CHECK_FALSE(bad.scenario.has_value());
}

TEST_CASE("tag stream csv and metadata round trip") {
  std::mt19937_64 rng(11);
  TagStream s;
  std::int64_t t = 0;
  for (int i = 0; i < 5000; ++i) {
    t += static_cast<std::int64_t>(rng() % 100'000);
    s.records.push_back({static_cast<std::int32_t>(rng() % 3), t});
  }
  s.meta.resolution_ps = 78.125;
  s.meta.marker_period_ps = 2'000'000;
  s.meta.delta_omega_rad_per_s = kTwoPi * 260e6;
  s.meta.seed = 31415;
  s.meta.scenario_digest = "0123456789abcdef";

  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = dir / "fbq_tags_roundtrip.csv";
  write_tag_csv(s, csv);
  write_tag_meta(s.meta, meta_path_for(csv));

  auto back = read_tag_csv(csv);
  back.meta = read_tag_meta(meta_path_for(csv));
  REQUIRE(back.records.size() == s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    CHECK(back.records[i].channel == s.records[i].channel);
    CHECK(back.records[i].timestamp_ps == s.records[i].timestamp_ps);
  }
  CHECK(back.meta.resolution_ps == s.meta.resolution_ps);
  CHECK(back.meta.marker_period_ps == s.meta.marker_period_ps);
  CHECK(back.meta.delta_omega_rad_per_s == s.meta.delta_omega_rad_per_s);
  CHECK(back.meta.seed == s.meta.seed);
  CHECK(back.meta.scenario_digest == s.meta.scenario_digest);
}

TEST_CASE("tag csv violations carry line numbers") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "fbq_tags_bad.csv";
  {
    std::ofstream out(path);
    out << "channel,timestamp_ps\n1,100\n2,oops\n";
  }
  CHECK_THROWS_WITH_AS(read_tag_csv(path), doctest::Contains(":3:"),
                       std::runtime_error);
  {
    std::ofstream out(path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_WITH_AS(read_tag_csv(path), doctest::Contains(":1:"),
                       std::runtime_error);
}
