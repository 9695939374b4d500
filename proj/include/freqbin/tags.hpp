#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace freqbin {

// Tagger channel assignment used throughout: 0 carries the periodic
// synchronization markers, 1 and 2 the two detector ports.
inline constexpr int kMarkerChannel = 0;
inline constexpr int kPort0Channel = 1;
inline constexpr int kPort1Channel = 2;

struct TagRecord {
  std::int32_t channel = 0;
  std::int64_t timestamp_ps = 0;
};

struct TagStreamMeta {
  double resolution_ps = 0.0;
  std::int64_t marker_period_ps = 0;
  double delta_omega_rad_per_s = 0.0;
  std::uint64_t seed = 0;
  std::string scenario_digest;
};

// Time-ordered tag records plus the acquisition metadata carried in the
// sidecar file.
struct TagStream {
  std::vector<TagRecord> records;
  TagStreamMeta meta;
};

// CSV with header "channel,timestamp_ps", one record per line.
void write_tag_csv(const TagStream& stream, const std::filesystem::path& path);

// Parses the record CSV; format violations raise with the offending line
// number. Metadata is loaded separately from the sidecar.
TagStream read_tag_csv(const std::filesystem::path& path);

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);
void write_tag_meta(const TagStreamMeta& meta,
                    const std::filesystem::path& path);
TagStreamMeta read_tag_meta(const std::filesystem::path& path);

}  // namespace freqbin
