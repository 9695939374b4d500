#include "freqbin/tags.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace freqbin {

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path,
                          std::size_t line_no, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

}  // namespace

void write_tag_csv(const TagStream& stream,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write tag file: " + path.string());
  }
  out << "channel,timestamp_ps\n";
  char buf[64];
  for (const auto& rec : stream.records) {
    char* p = std::to_chars(buf, buf + 16, rec.channel).ptr;
    *p++ = ',';
    p = std::to_chars(p, buf + 62, rec.timestamp_ps).ptr;
    *p++ = '\n';
    out.write(buf, p - buf);
  }
  if (!out) {
    throw std::runtime_error("short write to tag file: " + path.string());
  }
}

TagStream read_tag_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open tag file: " + path.string());
  }
  TagStream stream;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail_at(path, 1, "empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "channel,timestamp_ps") {
    fail_at(path, line_no, "expected header 'channel,timestamp_ps'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* begin = line.data();
    const char* end = begin + line.size();
    TagRecord rec;
    auto [p, ec] = std::from_chars(begin, end, rec.channel);
    if (ec != std::errc{} || p == end || *p != ',') {
      fail_at(path, line_no, "malformed channel field");
    }
    auto [p2, ec2] = std::from_chars(p + 1, end, rec.timestamp_ps);
    if (ec2 != std::errc{} || p2 != end) {
      fail_at(path, line_no, "malformed timestamp field");
    }
    if (rec.channel < 0) fail_at(path, line_no, "negative channel id");
    if (rec.timestamp_ps < 0) fail_at(path, line_no, "negative timestamp");
    stream.records.push_back(rec);
  }
  return stream;
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_tag_meta(const TagStreamMeta& meta,
                    const std::filesystem::path& path) {
  nlohmann::json j{
      {"resolution_ps", meta.resolution_ps},
      {"marker_period_ps", meta.marker_period_ps},
      {"delta_omega_rad_per_s", meta.delta_omega_rad_per_s},
      {"seed", meta.seed},
      {"scenario_digest", meta.scenario_digest},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write metadata: " + path.string());
  }
  out << j.dump(2) << "\n";
}

TagStreamMeta read_tag_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open metadata: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  TagStreamMeta meta;
  try {
    meta.resolution_ps = j.at("resolution_ps").get<double>();
    meta.marker_period_ps = j.at("marker_period_ps").get<std::int64_t>();
    meta.delta_omega_rad_per_s =
        j.at("delta_omega_rad_per_s").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.scenario_digest = j.at("scenario_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return meta;
}

}  // namespace freqbin
