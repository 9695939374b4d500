#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqbin/channel.hpp"
#include "freqbin/mcsim.hpp"
#include "freqbin/qstate.hpp"
#include "freqbin/receiver.hpp"
#include "freqbin/schedule.hpp"

namespace freqbin {

struct SourceConfig {
  double omega0_rad_per_s = 0.0;
  double delta_omega_rad_per_s = 0.0;
  double sigma_rad_per_s = 0.0;  // linewidth of each bin
  double v_x_eps = 1.0;
  double beat_phase_rad = 0.0;
};

struct ReceiverSettings {
  Basis basis = Basis::z;
  double delta_l_m = 0.0;  // 0: derive from the bin separation
  double phi_align_rad = 0.0;
  double v_z_eps_bin0 = 1.0;
  double v_z_eps_bin1 = 1.0;
};

// Fully resolved run configuration. Parsed from JSON with explicit
// unit-suffixed keys; every physical quantity carries its unit in the key
// name so mixed-unit sources cannot be confused silently.
struct Scenario {
  int schema_version = 1;
  SourceConfig source;
  ChannelConfig channel;
  ReceiverSettings receiver;
  std::vector<DetectorModel> detectors;  // exactly two: port 0 and port 1
  TaggerModel tagger;
  StateSchedule schedule;
  std::int64_t duration_ps = 0;
  std::uint64_t seed = 0;
  JitterConvention jitter_convention = JitterConvention::fwhm;
  EnvelopeModel envelope_model = EnvelopeModel::closed_form;
  std::int64_t chunk_ps = 1'000'000'000'000;  // 1 s

  BinPair bin_pair() const;
  // Beat cycles per marker period (validates commensurability).
  std::int64_t n_b() const;
  // Interferometer settings as seen by one bin (0 or 1).
  MziConfig mzi_for_bin(int bin) const;
  double attenuation_factor() const;
  std::int64_t resolution_fs() const;

  nlohmann::json to_json() const;
  std::string digest() const;
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

struct ScenarioParse {
  std::optional<Scenario> scenario;
  std::vector<ValidationIssue> issues;
};

// Validation is total: every offending field yields an issue instead of an
// exception, and the scenario is only produced when the list is empty.
ScenarioParse parse_scenario(const nlohmann::json& j);
ScenarioParse load_scenario_file(const std::filesystem::path& path);

// Applies a dotted-path override "a.b.c=value" to a config document; the
// value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& key_eq_value);

// Canonical digest of a config document: stable under key reordering.
std::string config_digest(const nlohmann::json& config);

// Built-in replication scenario: 260 MHz bin separation, 500 kHz markers,
// 1 Hz shutter cycle {Z0, X+, Z1, vac}, per-bin demultiplexer visibilities
// and a detector pair matching the reference hardware. The basis selects
// the receiver shutter position for the run.
Scenario make_demo_scenario(Basis basis);

}  // namespace freqbin
