// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "wristhap/kernels.hpp"

namespace wristhap::kernels::avx2 {

namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

}  // namespace

DeviationStats deviation_stats(std::span<const double> x, double target) {
  const std::size_t n = x.size();
  const std::size_t body = n - n % 4;
  const __m256d t = _mm256_set1_pd(target);
  __m256d acc = _mm256_setzero_pd();
  __m256d mx = _mm256_setzero_pd();
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), t);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    mx = _mm256_max_pd(mx, abs_pd(d));
  }
  alignas(32) double a[4];
  alignas(32) double m[4];
  _mm256_store_pd(a, acc);
  _mm256_store_pd(m, mx);

  DeviationStats s;
  s.sum_sq = (a[0] + a[1]) + (a[2] + a[3]);
  s.max_abs = std::max(std::max(m[0], m[1]), std::max(m[2], m[3]));
  for (std::size_t i = body; i < n; ++i) {
    const double d = x[i] - target;
    const double sq = d * d;
    s.sum_sq = s.sum_sq + sq;
    s.max_abs = std::max(s.max_abs, std::abs(d));
  }
  return s;
}

void norms3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
            std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x.data() + i);
    const __m256d vy = _mm256_loadu_pd(y.data() + i);
    const __m256d vz = _mm256_loadu_pd(z.data() + i);
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(vx, vx), _mm256_mul_pd(vy, vy)),
                                    _mm256_mul_pd(vz, vz));
    _mm256_storeu_pd(out.data() + i, _mm256_sqrt_pd(s));
  }
  for (std::size_t i = body; i < n; ++i) {
    const double xx = x[i] * x[i];
    const double yy = y[i] * y[i];
    const double zz = z[i] * z[i];
    out[i] = std::sqrt((xx + yy) + zz);
  }
}

void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask) {
  const std::size_t n = x.size();
  const std::size_t body = n - n % 4;
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    const __m256d in = _mm256_and_pd(_mm256_cmp_pd(v, vlo, _CMP_GE_OQ), _mm256_cmp_pd(v, vhi, _CMP_LE_OQ));
    const int bits = _mm256_movemask_pd(in);
    mask[i + 0] = static_cast<std::uint8_t>(bits & 1);
    mask[i + 1] = static_cast<std::uint8_t>((bits >> 1) & 1);
    mask[i + 2] = static_cast<std::uint8_t>((bits >> 2) & 1);
    mask[i + 3] = static_cast<std::uint8_t>((bits >> 3) & 1);
  }
  for (std::size_t i = body; i < n; ++i) mask[i] = (x[i] >= lo && x[i] <= hi) ? 1 : 0;
}

}  // namespace wristhap::kernels::avx2
