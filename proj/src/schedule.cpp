#include "freqbin/schedule.hpp"

#include <stdexcept>

namespace freqbin {

const char* to_string(StateLabel s) {
  switch (s) {
    case StateLabel::z0:
      return "Z0";
    case StateLabel::x_plus:
      return "X+";
    case StateLabel::z1:
      return "Z1";
    case StateLabel::vacuum:
      return "vac";
  }
  return "?";
}

std::optional<StateLabel> state_from_string(std::string_view s) {
  if (s == "Z0") return StateLabel::z0;
  if (s == "X+") return StateLabel::x_plus;
  if (s == "Z1") return StateLabel::z1;
  if (s == "vac") return StateLabel::vacuum;
  return std::nullopt;
}

std::int64_t StateSchedule::cycle_ps() const {
  std::int64_t total = 0;
  for (const auto& seg : segments) total += seg.duration_ps;
  return total;
}

std::vector<SegmentWindow> schedule_windows(const StateSchedule& schedule,
                                            std::int64_t duration_ps) {
  if (schedule.segments.empty()) {
    throw std::invalid_argument("schedule has no segments");
  }
  for (const auto& seg : schedule.segments) {
    if (seg.duration_ps <= 0) {
      throw std::invalid_argument("schedule segment durations must be > 0");
    }
    if (seg.rate_hz < 0.0) {
      throw std::invalid_argument("schedule segment rates must be >= 0");
    }
  }
  std::vector<SegmentWindow> windows;
  std::int64_t t = 0;
  while (t < duration_ps) {
    for (const auto& seg : schedule.segments) {
      if (t >= duration_ps) break;
      const std::int64_t end = std::min(t + seg.duration_ps, duration_ps);
      windows.push_back({seg.state, t, end, seg.rate_hz});
      t = end;
    }
  }
  return windows;
}

}  // namespace freqbin
