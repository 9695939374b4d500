// AVX2 variants of the folding kernels. All arithmetic runs in double
// precision; the dispatcher only routes here when every intermediate is an
// integer below 2^52, where IEEE doubles are exact, so results match the
// scalar kernels bit for bit.

#include <immintrin.h>

#include <cstdint>

#include "freqbin/fold_kernels.hpp"

namespace freqbin::kernels {

namespace {

constexpr double kTwo52 = 4503599627370496.0;
constexpr long long kTwo52Bits = 0x4330000000000000LL;

// Unsigned 64-bit integers < 2^52 to doubles and back, via the exponent
// trick (no AVX512 int64 conversions needed).
inline __m256d u52_to_pd(__m256i v) {
  const __m256i magic = _mm256_set1_epi64x(kTwo52Bits);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic)),
                       _mm256_set1_pd(kTwo52));
}

inline __m256i pd_to_u52(__m256d v) {
  const __m256i magic = _mm256_set1_epi64x(kTwo52Bits);
  return _mm256_sub_epi64(
      _mm256_castpd_si256(_mm256_add_pd(v, _mm256_set1_pd(kTwo52))), magic);
}

// floor(x / d) for integer-valued doubles, with the remainder. The raw
// quotient can be off by one ulp around integers; a single step in each
// direction repairs it because the compared products are exact.
inline __m256d exact_floor_div(__m256d x, __m256d d, __m256d& remainder) {
  const __m256d ones = _mm256_set1_pd(1.0);
  __m256d q = _mm256_floor_pd(_mm256_div_pd(x, d));
  __m256d over = _mm256_cmp_pd(_mm256_mul_pd(q, d), x, _CMP_GT_OQ);
  q = _mm256_sub_pd(q, _mm256_and_pd(over, ones));
  __m256d rem = _mm256_sub_pd(x, _mm256_mul_pd(q, d));
  __m256d under = _mm256_cmp_pd(rem, d, _CMP_GE_OQ);
  q = _mm256_add_pd(q, _mm256_and_pd(under, ones));
  remainder = _mm256_sub_pd(x, _mm256_mul_pd(q, d));
  return q;
}

using int128 = __int128;

}  // namespace

void fold_numerators_avx2(std::span<const std::int64_t> delta_ts,
                          const FoldParams& p, std::span<std::int64_t> out) {
  const __m256d nb = _mm256_set1_pd(static_cast<double>(p.n_b));
  const __m256d tm = _mm256_set1_pd(static_cast<double>(p.marker_period_ps));
  std::size_t i = 0;
  for (; i + 4 <= delta_ts.size(); i += 4) {
    const __m256i dti = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(delta_ts.data() + i));
    const __m256d x = _mm256_mul_pd(u52_to_pd(dti), nb);
    __m256d rem;
    exact_floor_div(x, tm, rem);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i),
                        pd_to_u52(rem));
  }
  for (; i < delta_ts.size(); ++i) {
    out[i] = static_cast<std::int64_t>(
        (int128(delta_ts[i]) * p.n_b) % p.marker_period_ps);
  }
}

void bin_indices_avx2(std::span<const std::int64_t> numerators,
                      const FoldParams& p, std::span<std::uint32_t> out) {
  const __m256d scale = _mm256_set1_pd(1000.0);
  const __m256d denom = _mm256_set1_pd(static_cast<double>(p.n_b) *
                                       static_cast<double>(p.bin_width_fs));
  std::size_t i = 0;
  for (; i + 4 <= numerators.size(); i += 4) {
    const __m256i ni = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(numerators.data() + i));
    const __m256d y = _mm256_mul_pd(u52_to_pd(ni), scale);
    __m256d rem;
    const __m256d q = exact_floor_div(y, denom, rem);
    const __m128i k = _mm256_cvttpd_epi32(q);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out.data() + i), k);
  }
  const int128 d = int128(p.n_b) * p.bin_width_fs;
  for (; i < numerators.size(); ++i) {
    out[i] = static_cast<std::uint32_t>((int128(numerators[i]) * 1000) / d);
  }
}

}  // namespace freqbin::kernels
