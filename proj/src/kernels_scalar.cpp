#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "wristhap/kernels.hpp"

namespace wristhap::kernels {

namespace scalar {

DeviationStats deviation_stats(std::span<const double> x, double target) {
  const std::size_t n = x.size();
  const std::size_t body = n - n % 4;
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  double mx[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < body; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = x[i + l] - target;
      const double sq = d * d;
      acc[l] = acc[l] + sq;
      mx[l] = std::max(mx[l], std::abs(d));
    }
  }
  DeviationStats s;
  s.sum_sq = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  s.max_abs = std::max(std::max(mx[0], mx[1]), std::max(mx[2], mx[3]));
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
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double xx = x[i] * x[i];
    const double yy = y[i] * y[i];
    const double zz = z[i] * z[i];
    out[i] = std::sqrt((xx + yy) + zz);
  }
}

void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask) {
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] = (x[i] >= lo && x[i] <= hi) ? 1 : 0;
}

}  // namespace scalar

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernels: span length mismatch");
}

Isa detect_isa() {
  if (const char* env = std::getenv("WRISTHAP_ISA"); env && std::string_view(env) == "scalar") {
    return Isa::kScalar;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

Isa& current_isa() {
  static Isa isa = detect_isa();
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(WRISTHAP_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return current_isa(); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("kernels: ISA not supported on this host");
  current_isa() = isa;
}

DeviationStats deviation_stats(std::span<const double> x, double target) {
#if defined(WRISTHAP_HAVE_AVX2)
  if (current_isa() == Isa::kAvx2) return avx2::deviation_stats(x, target);
#endif
  return scalar::deviation_stats(x, target);
}

void norms3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
            std::span<double> out) {
  check_sizes(x.size(), out.size());
  check_sizes(y.size(), out.size());
  check_sizes(z.size(), out.size());
#if defined(WRISTHAP_HAVE_AVX2)
  if (current_isa() == Isa::kAvx2) return avx2::norms3(x, y, z, out);
#endif
  scalar::norms3(x, y, z, out);
}

void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask) {
  check_sizes(x.size(), mask.size());
#if defined(WRISTHAP_HAVE_AVX2)
  if (current_isa() == Isa::kAvx2) return avx2::band_mask(x, lo, hi, mask);
#endif
  scalar::band_mask(x, lo, hi, mask);
}

}  // namespace wristhap::kernels
