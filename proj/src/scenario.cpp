#include "freqbin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "freqbin/constants.hpp"
#include "freqbin/tagproc.hpp"

namespace freqbin {

namespace {

constexpr std::int64_t kMaxDurationPs = 9'000'000'000'000'000;  // 9000 s

nlohmann::json trajectory_to_json(const PlatformTrajectory& t) {
  nlohmann::json j;
  switch (t.mode()) {
    case TrajectoryMode::static_range:
      j["mode"] = "static";
      j["r0_m"] = t.r0();
      break;
    case TrajectoryMode::linear:
      j["mode"] = "linear";
      j["velocity_m_per_s"] = t.velocity();
      j["r0_m"] = t.r0();
      break;
    case TrajectoryMode::sampled: {
      j["mode"] = "sampled";
      nlohmann::json samples = nlohmann::json::array();
      for (const auto& [ts, r] : t.samples()) {
        samples.push_back({ts, r});
      }
      j["samples"] = std::move(samples);
      break;
    }
  }
  return j;
}

// Collects issues while pulling typed values out of the document, so a
// single pass reports every problem instead of stopping at the first.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::vector<ValidationIssue>& issues)
      : root_(j), issues_(issues) {}

  void add(const std::string& field, const std::string& message) {
    issues_.push_back({field, message});
  }

  const nlohmann::json* find(const std::string& path) const {
    const nlohmann::json* cur = &root_;
    std::size_t start = 0;
    for (;;) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(
          start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!cur->is_object() || !cur->contains(key)) return nullptr;
      cur = &cur->at(key);
      if (dot == std::string::npos) return cur;
      start = dot + 1;
    }
  }

  double number(const std::string& path, double fallback,
                bool required = false) {
    const auto* v = find(path);
    if (!v) {
      if (required) add(path, "missing required number");
      return fallback;
    }
    if (!v->is_number()) {
      add(path, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::string text(const std::string& path, const std::string& fallback,
                   bool required = false) {
    const auto* v = find(path);
    if (!v) {
      if (required) add(path, "missing required string");
      return fallback;
    }
    if (!v->is_string()) {
      add(path, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::uint64_t unsigned_int(const std::string& path, std::uint64_t fallback,
                             bool required = false) {
    const auto* v = find(path);
    if (!v) {
      if (required) add(path, "missing required integer");
      return fallback;
    }
    if (!v->is_number_unsigned() && !v->is_number_integer()) {
      add(path, "expected an integer");
      return fallback;
    }
    if (v->is_number_integer() && v->get<std::int64_t>() < 0) {
      add(path, "expected a non-negative integer");
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  void require_range(const std::string& path, double value, double lo,
                     double hi) {
    if (!(value >= lo && value <= hi)) {
      add(path, "value " + std::to_string(value) + " outside [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }

  const nlohmann::json& root() const { return root_; }

 private:
  const nlohmann::json& root_;
  std::vector<ValidationIssue>& issues_;
};

std::int64_t seconds_to_ps(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1e12));
}

}  // namespace

BinPair Scenario::bin_pair() const {
  return BinPair(
      FrequencyBin(source.omega0_rad_per_s, source.sigma_rad_per_s),
      FrequencyBin(source.omega0_rad_per_s + source.delta_omega_rad_per_s,
                   source.sigma_rad_per_s));
}

std::int64_t Scenario::n_b() const {
  return beat_cycles_per_marker(source.delta_omega_rad_per_s,
                                tagger.marker_period_ps);
}

MziConfig Scenario::mzi_for_bin(int bin) const {
  MziConfig cfg;
  cfg.delta_l = receiver.delta_l_m > 0.0
                    ? receiver.delta_l_m
                    : required_path_difference(source.delta_omega_rad_per_s);
  cfg.omega_ref = source.omega0_rad_per_s;
  cfg.phi_align = receiver.phi_align_rad;
  cfg.v_z_eps = (bin == 0 ? receiver.v_z_eps_bin0 : receiver.v_z_eps_bin1) *
                channel.v_z_eps;
  cfg.basis = receiver.basis;
  return cfg;
}

double Scenario::attenuation_factor() const {
  return std::pow(10.0, -channel.attenuation_db / 10.0);
}

std::int64_t Scenario::resolution_fs() const {
  const std::int64_t fs = std::llround(tagger.resolution_ps * 1000.0);
  if (fs <= 0 || std::abs(tagger.resolution_ps * 1000.0 - fs) > 1e-6) {
    throw std::invalid_argument(
        "tagger resolution must be a positive whole number of femtoseconds");
  }
  return fs;
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["seed"] = seed;
  j["duration_s"] = static_cast<double>(duration_ps) * 1e-12;
  j["chunk_duration_s"] = static_cast<double>(chunk_ps) * 1e-12;
  j["jitter_convention"] =
      jitter_convention == JitterConvention::fwhm ? "fwhm" : "stddev";
  j["envelope_model"] =
      envelope_model == EnvelopeModel::closed_form ? "closed_form"
                                                   : "quadrature";
  j["source"] = {{"omega0_rad_per_s", source.omega0_rad_per_s},
                 {"delta_omega_rad_per_s", source.delta_omega_rad_per_s},
                 {"sigma_rad_per_s", source.sigma_rad_per_s},
                 {"v_x_eps", source.v_x_eps},
                 {"beat_phase_rad", source.beat_phase_rad}};
  j["channel"] = {{"attenuation_db", channel.attenuation_db},
                  {"v_x_eps", channel.v_x_eps},
                  {"v_z_eps", channel.v_z_eps},
                  {"trajectory", trajectory_to_json(channel.trajectory)}};
  j["receiver"] = {{"basis", receiver.basis == Basis::x ? "X" : "Z"},
                   {"delta_l_m", receiver.delta_l_m},
                   {"phi_align_rad", receiver.phi_align_rad},
                   {"v_z_eps_bin0", receiver.v_z_eps_bin0},
                   {"v_z_eps_bin1", receiver.v_z_eps_bin1}};
  j["detectors"] = nlohmann::json::array();
  for (const auto& d : detectors) {
    j["detectors"].push_back({{"name", d.name},
                              {"jitter_fwhm_ps", d.jitter_fwhm_ps},
                              {"efficiency", d.efficiency},
                              {"dark_rate_hz", d.dark_rate_hz},
                              {"dead_time_ps", d.dead_time_ps}});
  }
  j["tagger"] = {{"resolution_ps", tagger.resolution_ps},
                 {"marker_period_ps", tagger.marker_period_ps},
                 {"marker_channel", tagger.marker_channel}};
  j["schedule"] = {{"segments", nlohmann::json::array()}};
  for (const auto& seg : schedule.segments) {
    j["schedule"]["segments"].push_back(
        {{"state", to_string(seg.state)},
         {"duration_s", static_cast<double>(seg.duration_ps) * 1e-12},
         {"rate_hz", seg.rate_hz}});
  }
  return j;
}

std::string Scenario::digest() const { return config_digest(to_json()); }

ScenarioParse parse_scenario(const nlohmann::json& j) {
  ScenarioParse result;
  auto& issues = result.issues;
  if (!j.is_object()) {
    issues.push_back({"", "config root must be a JSON object"});
    return result;
  }
  ConfigReader r(j, issues);
  Scenario s;

  const double schema = r.number("schema_version", 1, true);
  if (schema != 1) r.add("schema_version", "unsupported schema version");
  s.schema_version = 1;
  s.seed = r.unsigned_int("seed", 1, true);

  const double duration_s = r.number("duration_s", 0.0, true);
  if (!(duration_s >= 0.0)) {
    r.add("duration_s", "must be >= 0");
  } else {
    s.duration_ps = seconds_to_ps(duration_s);
    if (s.duration_ps > kMaxDurationPs) {
      r.add("duration_s", "runs longer than 9000 s are not supported");
    }
  }
  const double chunk_s = r.number("chunk_duration_s", 1.0);
  if (!(chunk_s > 0.0)) {
    r.add("chunk_duration_s", "must be > 0");
  } else {
    s.chunk_ps = seconds_to_ps(chunk_s);
  }

  const std::string conv = r.text("jitter_convention", "fwhm");
  if (conv == "fwhm") {
    s.jitter_convention = JitterConvention::fwhm;
  } else if (conv == "stddev") {
    s.jitter_convention = JitterConvention::stddev;
  } else {
    r.add("jitter_convention", "expected 'fwhm' or 'stddev'");
  }
  const std::string env = r.text("envelope_model", "closed_form");
  if (env == "closed_form") {
    s.envelope_model = EnvelopeModel::closed_form;
  } else if (env == "quadrature") {
    s.envelope_model = EnvelopeModel::quadrature;
  } else {
    r.add("envelope_model", "expected 'closed_form' or 'quadrature'");
  }

  // Source.
  s.source.omega0_rad_per_s = r.number("source.omega0_rad_per_s", 0.0, true);
  if (!(s.source.omega0_rad_per_s > 0.0)) {
    r.add("source.omega0_rad_per_s", "must be > 0");
  }
  s.source.delta_omega_rad_per_s =
      r.number("source.delta_omega_rad_per_s", 0.0, true);
  if (!(s.source.delta_omega_rad_per_s > 0.0)) {
    r.add("source.delta_omega_rad_per_s", "must be > 0");
  }
  s.source.sigma_rad_per_s = r.number("source.sigma_rad_per_s", 0.0);
  if (!(s.source.sigma_rad_per_s >= 0.0)) {
    r.add("source.sigma_rad_per_s", "must be >= 0");
  }
  s.source.v_x_eps = r.number("source.v_x_eps", 1.0);
  r.require_range("source.v_x_eps", s.source.v_x_eps, 0.0, 1.0);
  s.source.beat_phase_rad = r.number("source.beat_phase_rad", 0.0);

  // Channel.
  s.channel.attenuation_db = r.number("channel.attenuation_db", 0.0);
  if (!(s.channel.attenuation_db >= 0.0)) {
    r.add("channel.attenuation_db", "must be >= 0");
  }
  s.channel.v_x_eps = r.number("channel.v_x_eps", 1.0);
  r.require_range("channel.v_x_eps", s.channel.v_x_eps, 0.0, 1.0);
  s.channel.v_z_eps = r.number("channel.v_z_eps", 1.0);
  r.require_range("channel.v_z_eps", s.channel.v_z_eps, 0.0, 1.0);

  const std::string mode = r.text("channel.trajectory.mode", "static");
  try {
    if (mode == "static") {
      s.channel.trajectory = PlatformTrajectory::static_range(
          r.number("channel.trajectory.r0_m", 0.0));
    } else if (mode == "linear") {
      s.channel.trajectory = PlatformTrajectory::linear(
          r.number("channel.trajectory.velocity_m_per_s", 0.0, true),
          r.number("channel.trajectory.r0_m", 0.0));
    } else if (mode == "sampled") {
      if (const auto* csv = r.find("channel.trajectory.csv");
          csv && csv->is_string()) {
        s.channel.trajectory =
            PlatformTrajectory::from_csv(csv->get<std::string>());
      } else if (const auto* samples = r.find("channel.trajectory.samples");
                 samples && samples->is_array()) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : *samples) {
          if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
              !p[1].is_number()) {
            r.add("channel.trajectory.samples", "expected [t_s, range_m] pairs");
            break;
          }
          pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        if (pts.size() >= 2) {
          s.channel.trajectory = PlatformTrajectory::from_samples(pts);
        } else {
          r.add("channel.trajectory.samples", "need at least two samples");
        }
      } else {
        r.add("channel.trajectory", "sampled mode needs 'samples' or 'csv'");
      }
    } else {
      r.add("channel.trajectory.mode",
            "expected 'static', 'linear' or 'sampled'");
    }
  } catch (const std::exception& e) {
    r.add("channel.trajectory", e.what());
  }

  // Receiver.
  const std::string basis = r.text("receiver.basis", "", true);
  if (basis == "X") {
    s.receiver.basis = Basis::x;
  } else if (basis == "Z") {
    s.receiver.basis = Basis::z;
  } else {
    r.add("receiver.basis", "expected 'X' or 'Z'");
  }
  s.receiver.delta_l_m = r.number("receiver.delta_l_m", 0.0);
  if (s.receiver.delta_l_m == 0.0 && s.source.delta_omega_rad_per_s > 0.0) {
    s.receiver.delta_l_m =
        required_path_difference(s.source.delta_omega_rad_per_s);
  }
  if (!(s.receiver.delta_l_m > 0.0)) {
    r.add("receiver.delta_l_m", "must be > 0");
  }
  s.receiver.phi_align_rad = r.number("receiver.phi_align_rad", 0.0);
  s.receiver.v_z_eps_bin0 = r.number("receiver.v_z_eps_bin0", 1.0);
  r.require_range("receiver.v_z_eps_bin0", s.receiver.v_z_eps_bin0, 0.0, 1.0);
  s.receiver.v_z_eps_bin1 = r.number("receiver.v_z_eps_bin1", 1.0);
  r.require_range("receiver.v_z_eps_bin1", s.receiver.v_z_eps_bin1, 0.0, 1.0);

  // Detectors.
  const auto* dets = r.find("detectors");
  if (!dets || !dets->is_array() || dets->size() != 2) {
    r.add("detectors", "expected an array of exactly two detectors");
  } else {
    for (std::size_t i = 0; i < dets->size(); ++i) {
      const std::string prefix = "detectors[" + std::to_string(i) + "]";
      const auto& dj = (*dets)[i];
      DetectorModel d;
      if (dj.contains("name") && dj["name"].is_string()) {
        d.name = dj["name"].get<std::string>();
      } else {
        d.name = "detector" + std::to_string(i);
      }
      auto num_field = [&](const char* key, double fallback) {
        if (!dj.contains(key)) return fallback;
        if (!dj[key].is_number()) {
          r.add(prefix + "." + key, "expected a number");
          return fallback;
        }
        return dj[key].get<double>();
      };
      d.jitter_fwhm_ps = num_field("jitter_fwhm_ps", 0.0);
      if (!(d.jitter_fwhm_ps >= 0.0)) r.add(prefix + ".jitter_fwhm_ps", "must be >= 0");
      d.efficiency = num_field("efficiency", 1.0);
      r.require_range(prefix + ".efficiency", d.efficiency, 0.0, 1.0);
      d.dark_rate_hz = num_field("dark_rate_hz", 0.0);
      if (!(d.dark_rate_hz >= 0.0)) r.add(prefix + ".dark_rate_hz", "must be >= 0");
      d.dead_time_ps = num_field("dead_time_ps", 0.0);
      if (!(d.dead_time_ps >= 0.0)) r.add(prefix + ".dead_time_ps", "must be >= 0");
      s.detectors.push_back(std::move(d));
    }
  }

  // Tagger.
  s.tagger.resolution_ps = r.number("tagger.resolution_ps", 0.0, true);
  if (!(s.tagger.resolution_ps > 0.0)) {
    r.add("tagger.resolution_ps", "must be > 0");
  } else {
    const double fs = s.tagger.resolution_ps * 1000.0;
    if (std::abs(fs - std::llround(fs)) > 1e-6 || std::llround(fs) < 1) {
      r.add("tagger.resolution_ps",
            "must be a whole number of femtoseconds");
    }
  }
  const double marker_period = r.number("tagger.marker_period_ps", 0.0, true);
  if (!(marker_period > 0.0) ||
      marker_period != std::floor(marker_period)) {
    r.add("tagger.marker_period_ps", "must be a positive integer");
  } else {
    s.tagger.marker_period_ps = static_cast<std::int64_t>(marker_period);
  }
  s.tagger.marker_channel = static_cast<int>(r.number("tagger.marker_channel",
                                                      kMarkerChannel));
  if (s.tagger.marker_channel == kPort0Channel ||
      s.tagger.marker_channel == kPort1Channel) {
    r.add("tagger.marker_channel", "collides with a detector channel");
  }

  // Schedule.
  const auto* segs = r.find("schedule.segments");
  if (!segs || !segs->is_array() || segs->empty()) {
    r.add("schedule.segments", "expected a non-empty array");
  } else {
    for (std::size_t i = 0; i < segs->size(); ++i) {
      const std::string prefix = "schedule.segments[" + std::to_string(i) + "]";
      const auto& sj = (*segs)[i];
      ScheduleSegment seg;
      if (!sj.contains("state") || !sj["state"].is_string()) {
        r.add(prefix + ".state", "missing state label");
      } else if (auto st = state_from_string(sj["state"].get<std::string>())) {
        seg.state = *st;
      } else {
        r.add(prefix + ".state", "expected one of Z0, X+, Z1, vac");
      }
      if (!sj.contains("duration_s") || !sj["duration_s"].is_number() ||
          !(sj["duration_s"].get<double>() > 0.0)) {
        r.add(prefix + ".duration_s", "must be a number > 0");
      } else {
        seg.duration_ps = seconds_to_ps(sj["duration_s"].get<double>());
      }
      if (sj.contains("rate_hz")) {
        if (!sj["rate_hz"].is_number() || sj["rate_hz"].get<double>() < 0.0) {
          r.add(prefix + ".rate_hz", "must be a number >= 0");
        } else {
          seg.rate_hz = sj["rate_hz"].get<double>();
        }
      }
      s.schedule.segments.push_back(seg);
    }
  }

  // Cross-field constraints.
  if (s.source.delta_omega_rad_per_s > 0.0 && s.tagger.marker_period_ps > 0) {
    try {
      const std::int64_t n_b = beat_cycles_per_marker(
          s.source.delta_omega_rad_per_s, s.tagger.marker_period_ps);
      const double beat_ps = static_cast<double>(s.tagger.marker_period_ps) /
                             static_cast<double>(n_b);
      if (s.tagger.resolution_ps > 0.0 && s.tagger.resolution_ps >= beat_ps) {
        r.add("tagger.resolution_ps",
              "resolution does not resolve the beat period");
      }
    } catch (const std::invalid_argument& e) {
      r.add("source.delta_omega_rad_per_s", e.what());
    }
  }
  if (s.channel.trajectory.mode() == TrajectoryMode::sampled &&
      s.duration_ps > 0) {
    if (s.channel.trajectory.t_min() > 0.0 ||
        s.channel.trajectory.t_max() <
            static_cast<double>(s.duration_ps) * 1e-12) {
      r.add("channel.trajectory",
            "sampled trajectory must cover the whole run");
    }
  }

  if (issues.empty()) result.scenario = std::move(s);
  return result;
}

ScenarioParse load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  ScenarioParse result;
  if (!in) {
    result.issues.push_back({"", "cannot open config: " + path.string()});
    return result;
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    result.issues.push_back({"", "config is not valid JSON: " + path.string()});
    return result;
  }
  return parse_scenario(j);
}

void apply_override(nlohmann::json& config, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like key.path=value");
  }
  const std::string path = key_eq_value.substr(0, eq);
  const std::string raw = key_eq_value.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* cur = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) {
      throw std::invalid_argument("override has an empty path segment");
    }
    if (!cur->is_object() && !cur->is_null()) {
      throw std::invalid_argument("override path crosses a non-object at '" +
                                  key + "'");
    }
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

std::string config_digest(const nlohmann::json& config) {
  // nlohmann objects iterate in sorted key order, so dump() is canonical
  // under key reordering.
  const std::string canonical = config.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

Scenario make_demo_scenario(Basis basis) {
  Scenario s;
  s.seed = 20260811;
  s.duration_ps = 60'000'000'000'000;  // 60 s
  s.chunk_ps = 1'000'000'000'000;

  s.source.omega0_rad_per_s = kTwoPi * kSpeedOfLight / 780e-9;  // 780 nm
  s.source.delta_omega_rad_per_s = kTwoPi * 260e6;
  s.source.sigma_rad_per_s = kTwoPi * 300e3;
  s.source.v_x_eps = 0.95;
  s.source.beat_phase_rad = 0.0;

  s.channel.attenuation_db = 0.0;
  s.channel.v_x_eps = 1.0;
  s.channel.v_z_eps = 1.0;
  s.channel.trajectory = PlatformTrajectory::static_range(2.0);

  s.receiver.basis = basis;
  s.receiver.delta_l_m =
      required_path_difference(s.source.delta_omega_rad_per_s);
  s.receiver.phi_align_rad = 0.0;
  s.receiver.v_z_eps_bin0 = 0.889;
  s.receiver.v_z_eps_bin1 = 0.821;

  DetectorModel det;
  det.jitter_fwhm_ps = 50.0;  // paired with the 78.125 ps tagger: ~93 ps
  det.efficiency = 1.0;
  det.dark_rate_hz = 100.0;
  det.dead_time_ps = 0.0;
  det.name = "apd-port0";
  s.detectors.push_back(det);
  det.name = "apd-port1";
  s.detectors.push_back(det);

  s.tagger.resolution_ps = 78.125;
  s.tagger.marker_period_ps = 2'000'000;  // 500 kHz
  s.tagger.marker_channel = kMarkerChannel;

  // 1 Hz shutter cycle; rates are artifact defaults, not measured values.
  const std::int64_t quarter = 250'000'000'000;
  s.schedule.segments = {
      {StateLabel::z0, quarter, 1e4},
      {StateLabel::x_plus, quarter, 1e4},
      {StateLabel::z1, quarter, 1e4},
      {StateLabel::vacuum, quarter, 0.0},
  };
  return s;
}

}  // namespace freqbin
