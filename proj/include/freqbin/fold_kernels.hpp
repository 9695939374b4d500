#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Hot inner loops of the time-tag folding pipeline. The beat period is the
// exact rational T_b = marker_period_ps / n_b, so a marker-referenced delay
// dt (integer picoseconds) folds to
//
//   tau = dt mod T_b = ((dt * n_b) mod marker_period_ps) / n_b   [ps]
//
// and the numerator is all the pipeline ever stores. Histogram bin indices
// come from a second exact division, with bin widths carried as integer
// femtoseconds:
//
//   k = floor(tau / w) = floor(num * 1000 / (n_b * bin_width_fs)).
//
// The scalar kernels use 128-bit intermediates and accept any input. The
// AVX2 kernels run the same arithmetic in double precision, which is exact
// as long as every intermediate stays below 2^52; the dispatcher verifies
// that and falls back to scalar otherwise, so both paths return identical
// results whenever the vector path is selected.

namespace freqbin::kernels {

struct FoldParams {
  std::int64_t marker_period_ps = 0;  // T_M, > 0
  std::int64_t n_b = 0;               // beat cycles per marker period, > 0
  std::int64_t bin_width_fs = 0;      // histogram bin width, > 0
};

// ceil(T_b / bin width): number of histogram bins including a possibly
// partial last one.
std::size_t bin_count(const FoldParams& p);

// Width of the last bin as a fraction of bin_width_fs, in (0,1].
double final_bin_fraction(const FoldParams& p);

void fold_numerators_scalar(std::span<const std::int64_t> delta_ts,
                            const FoldParams& p,
                            std::span<std::int64_t> out);
void bin_indices_scalar(std::span<const std::int64_t> numerators,
                        const FoldParams& p, std::span<std::uint32_t> out);

#if defined(FREQBIN_X86_AVX2_BUILD)
void fold_numerators_avx2(std::span<const std::int64_t> delta_ts,
                          const FoldParams& p, std::span<std::int64_t> out);
void bin_indices_avx2(std::span<const std::int64_t> numerators,
                      const FoldParams& p, std::span<std::uint32_t> out);
#endif

enum class Impl { scalar, avx2 };

// True when this CPU can run the AVX2 kernels.
bool avx2_available();

// Implementation the dispatcher would pick for inputs bounded by
// max_input (largest delta_t for folding; marker_period_ps bounds the
// numerators for binning).
Impl select_fold_impl(const FoldParams& p, std::int64_t max_input);
Impl select_bin_impl(const FoldParams& p);

// Runtime-dispatched entry points. Inputs must be non-negative.
void fold_numerators(std::span<const std::int64_t> delta_ts,
                     const FoldParams& p, std::span<std::int64_t> out);
void bin_indices(std::span<const std::int64_t> numerators, const FoldParams& p,
                 std::span<std::uint32_t> out);

}  // namespace freqbin::kernels
