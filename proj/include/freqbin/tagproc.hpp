#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "freqbin/fold_kernels.hpp"
#include "freqbin/schedule.hpp"
#include "freqbin/tags.hpp"

namespace freqbin {

// Parameters of the marker-referenced folding pipeline. The beat period is
// the exact rational marker_period_ps / n_b; all folding runs on integers,
// never on a floating-point period.
struct FoldingConfig {
  double delta_omega = 0.0;           // rad/s
  std::int64_t marker_period_ps = 0;  // T_M
  int marker_channel = kMarkerChannel;
  std::vector<int> detector_channels{kPort0Channel, kPort1Channel};
  std::int64_t bin_width_fs = 0;  // histogram bin width, femtoseconds
};

// Beat cycles per marker period. The marker period must hold an integral
// number of beat cycles (within 1e-9 cycles); anything else is rejected
// because folding would smear the phase.
std::int64_t beat_cycles_per_marker(double delta_omega,
                                    std::int64_t marker_period_ps);

kernels::FoldParams fold_params(const FoldingConfig& cfg);

struct ReferencedTags {
  std::vector<std::int64_t> delta_t_ps;  // t_i - latest marker at or before
  std::size_t dropped = 0;               // detections before the first marker
};

// Core referencing primitive over pre-extracted, time-ordered lists.
ReferencedTags reference_against_markers(
    std::span<const std::int64_t> detections_sorted,
    std::span<const std::int64_t> markers_sorted);

// References every record on a detector channel to the latest marker.
// Requires at least one marker and non-decreasing timestamps.
ReferencedTags reference_to_marker(const TagStream& stream,
                                   const FoldingConfig& cfg);

// Folded event times tau_i = delta_t_i mod T_b as exact rationals:
// tau_ps = numerators[i] / n_b.
struct FoldedTimes {
  std::vector<std::int64_t> numerators;
  std::int64_t n_b = 0;
};

FoldedTimes fold(std::span<const std::int64_t> delta_ts,
                 const FoldingConfig& cfg);

struct BeatHistogram {
  std::vector<std::uint64_t> counts;
  std::int64_t bin_width_fs = 0;
  std::int64_t marker_period_ps = 0;
  std::int64_t n_b = 0;
  std::uint64_t total = 0;
  int channel = -1;  // -1: all configured detector channels combined

  double beat_period_ps() const;
  double final_bin_fraction() const;
  // Centre of bin k in ps; the final partial bin is centred on its actual
  // extent.
  double bin_center_ps(std::size_t k) const;
};

BeatHistogram histogram(const FoldedTimes& folded, const FoldingConfig& cfg);

// Beat-model fit a (1 + v cos(delta_omega tau + phase)) over bin centres,
// weighted by Poisson variances; the frequency is fixed by configuration,
// never fitted. The final partial bin enters with its width fraction and is
// excluded from the peak/trough statistic.
struct BeatFit {
  double v = 0.0;
  double v_err = 0.0;
  double phase = 0.0;    // rad
  double offset = 0.0;   // per-bin baseline counts
  double v_peak_trough = 0.0;
  bool clamped = false;  // raw |v| exceeded 1 and was clamped
};

BeatFit fit_beat(const BeatHistogram& h, double delta_omega,
                 std::uint64_t min_events = 1000);

// Peak/leak contrast (peak - leak) / (peak + leak) with Poisson error
// propagation. Inputs are background-subtracted counts; negative
// subtracted counts clamp to zero and set the flag. Variances default to
// the counts themselves.
struct RatioVisibility {
  double v = 0.0;
  double err = 0.0;
  bool clamped = false;
};

RatioVisibility z_visibility(double counts_peak, double counts_leak,
                             double var_peak = -1.0, double var_leak = -1.0);

double qber_from_visibility(double v);

// Full analysis over a tag stream. Windows come from the run schedule;
// without them the beat fit uses every detector event and the per-bin
// demultiplexer visibilities are unavailable.
struct AnalysisConfig {
  FoldingConfig folding;
  std::vector<SegmentWindow> windows;
  StateLabel beat_state = StateLabel::x_plus;
  std::uint64_t min_fit_events = 1000;
};

struct VisibilityReport {
  double v_fit = 0.0;
  double v_fit_err = 0.0;
  double phase_rad = 0.0;
  double v_peak_trough = 0.0;
  double v_z_omega0 = 0.0;
  double v_z_omega0_err = 0.0;
  double v_z_omega1 = 0.0;
  double v_z_omega1_err = 0.0;
  double v_z_combined = 0.0;
  double qber = 0.0;
  std::uint64_t events_total = 0;    // detector records in the stream
  std::uint64_t events_dropped = 0;  // before the first marker

  // Diagnostics, not part of the serialized report.
  bool fit_valid = false;
  bool fit_clamped = false;
  bool z_valid = false;
  bool z_clamped = false;
  std::string fit_error;
};

struct AnalysisResult {
  VisibilityReport report;
  BeatHistogram beat_histogram;
};

AnalysisResult analyze_stream(const TagStream& stream,
                              const AnalysisConfig& cfg);

// Serialized report: exactly the documented keys, unavailable values null.
void write_report_json(const VisibilityReport& report,
                       const std::filesystem::path& path);

// Histogram CSV with header "bin_index,tau_ps,count".
void write_histogram_csv(const BeatHistogram& h,
                         const std::filesystem::path& path);

}  // namespace freqbin
