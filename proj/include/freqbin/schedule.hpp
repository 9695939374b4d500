#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace freqbin {

// Encoder state transmitted during a schedule segment. The shutter
// sequence cycles through these; vacuum means both shutters closed.
enum class StateLabel { z0, x_plus, z1, vacuum };

const char* to_string(StateLabel s);
std::optional<StateLabel> state_from_string(std::string_view s);

struct ScheduleSegment {
  StateLabel state = StateLabel::vacuum;
  std::int64_t duration_ps = 0;  // > 0
  double rate_hz = 0.0;          // mean photon rate while the state is on
};

// Ordered encoder segments, repeated cyclically for the run duration.
struct StateSchedule {
  std::vector<ScheduleSegment> segments;

  std::int64_t cycle_ps() const;
};

// One concrete on-air window of a segment within [0, duration).
struct SegmentWindow {
  StateLabel state = StateLabel::vacuum;
  std::int64_t begin_ps = 0;
  std::int64_t end_ps = 0;  // exclusive
  double rate_hz = 0.0;
};

// Unrolls the cyclic schedule across [0, duration_ps); the final window is
// truncated at the run end.
std::vector<SegmentWindow> schedule_windows(const StateSchedule& schedule,
                                            std::int64_t duration_ps);

}  // namespace freqbin
