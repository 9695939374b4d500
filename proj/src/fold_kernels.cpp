#include "freqbin/fold_kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace freqbin::kernels {

namespace {

using int128 = __int128;

// Largest magnitude the AVX2 double-precision path may see in any
// intermediate product while staying exact.
constexpr double kExactLimit = 4503599627370496.0;  // 2^52

void check_params(const FoldParams& p) {
  if (p.marker_period_ps <= 0 || p.n_b <= 0 || p.bin_width_fs <= 0) {
    throw std::invalid_argument("FoldParams: all fields must be > 0");
  }
}

}  // namespace

std::size_t bin_count(const FoldParams& p) {
  check_params(p);
  const int128 beat_fs = int128(p.marker_period_ps) * 1000;
  const int128 denom = int128(p.n_b) * p.bin_width_fs;
  return static_cast<std::size_t>((beat_fs + denom - 1) / denom);
}

double final_bin_fraction(const FoldParams& p) {
  const std::size_t k = bin_count(p);
  const int128 beat_fs = int128(p.marker_period_ps) * 1000;
  const int128 denom = int128(p.n_b) * p.bin_width_fs;
  const int128 partial = beat_fs - int128(k - 1) * denom;
  return static_cast<double>(partial) / static_cast<double>(denom);
}

void fold_numerators_scalar(std::span<const std::int64_t> delta_ts,
                            const FoldParams& p,
                            std::span<std::int64_t> out) {
  check_params(p);
  const int128 tm = p.marker_period_ps;
  const int128 nb = p.n_b;
  for (std::size_t i = 0; i < delta_ts.size(); ++i) {
    out[i] = static_cast<std::int64_t>((int128(delta_ts[i]) * nb) % tm);
  }
}

void bin_indices_scalar(std::span<const std::int64_t> numerators,
                        const FoldParams& p, std::span<std::uint32_t> out) {
  check_params(p);
  const int128 denom = int128(p.n_b) * p.bin_width_fs;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    out[i] = static_cast<std::uint32_t>((int128(numerators[i]) * 1000) / denom);
  }
}

bool avx2_available() {
#if defined(FREQBIN_X86_AVX2_BUILD)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported;
#else
  return false;
#endif
}

Impl select_fold_impl(const FoldParams& p, std::int64_t max_input) {
  check_params(p);
#if defined(FREQBIN_X86_AVX2_BUILD)
  const double product =
      static_cast<double>(max_input) * static_cast<double>(p.n_b);
  if (avx2_available() && max_input >= 0 && product < kExactLimit &&
      static_cast<double>(p.marker_period_ps) < kExactLimit) {
    return Impl::avx2;
  }
#else
  (void)max_input;
#endif
  return Impl::scalar;
}

Impl select_bin_impl(const FoldParams& p) {
  check_params(p);
#if defined(FREQBIN_X86_AVX2_BUILD)
  const double num_limit = static_cast<double>(p.marker_period_ps) * 1000.0;
  const double denom =
      static_cast<double>(p.n_b) * static_cast<double>(p.bin_width_fs);
  // The vector path converts indices through signed 32-bit lanes.
  const bool index_fits = num_limit / denom < 2147483647.0;
  if (avx2_available() && num_limit < kExactLimit && denom < kExactLimit &&
      index_fits) {
    return Impl::avx2;
  }
#endif
  return Impl::scalar;
}

void fold_numerators(std::span<const std::int64_t> delta_ts,
                     const FoldParams& p, std::span<std::int64_t> out) {
  if (out.size() < delta_ts.size()) {
    throw std::invalid_argument("fold_numerators: output span too small");
  }
  std::int64_t max_input = 0;
  for (std::int64_t dt : delta_ts) {
    if (dt < 0) {
      throw std::invalid_argument("fold_numerators: delays must be >= 0");
    }
    max_input = std::max(max_input, dt);
  }
#if defined(FREQBIN_X86_AVX2_BUILD)
  if (select_fold_impl(p, max_input) == Impl::avx2) {
    fold_numerators_avx2(delta_ts, p, out);
    return;
  }
#endif
  fold_numerators_scalar(delta_ts, p, out);
}

void bin_indices(std::span<const std::int64_t> numerators, const FoldParams& p,
                 std::span<std::uint32_t> out) {
  if (out.size() < numerators.size()) {
    throw std::invalid_argument("bin_indices: output span too small");
  }
#if defined(FREQBIN_X86_AVX2_BUILD)
  if (select_bin_impl(p) == Impl::avx2) {
    bin_indices_avx2(numerators, p, out);
    return;
  }
#endif
  bin_indices_scalar(numerators, p, out);
}

}  // namespace freqbin::kernels
