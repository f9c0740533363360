#pragma once
// Batch arithmetic over sample streams: trial error metrics, per-row force
// magnitudes for trace export, tolerance-band masks.
//
// Every kernel has a scalar reference and, on x86-64, an AVX2 variant chosen
// at runtime. Reductions use four interleaved lanes combined as
// (l0 + l1) + (l2 + l3), followed by the tail in index order, in both paths,
// so the variants return bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>

namespace wristhap::kernels {

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

/// ISA used by the dispatching entry points. Defaults to the best supported
/// one; WRISTHAP_ISA=scalar in the environment pins the reference path.
Isa active_isa();
void set_active_isa(Isa isa);

struct DeviationStats {
  double sum_sq = 0.0;   // sum of (x_i - target)^2
  double max_abs = 0.0;  // max |x_i - target|
};

DeviationStats deviation_stats(std::span<const double> x, double target);

/// out[i] = sqrt(x[i]^2 + y[i]^2 + z[i]^2)
void norms3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
            std::span<double> out);

/// mask[i] = lo <= x[i] <= hi
void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask);

namespace scalar {
DeviationStats deviation_stats(std::span<const double> x, double target);
void norms3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
            std::span<double> out);
void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask);
}  // namespace scalar

#if defined(WRISTHAP_HAVE_AVX2)
namespace avx2 {
DeviationStats deviation_stats(std::span<const double> x, double target);
void norms3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
            std::span<double> out);
void band_mask(std::span<const double> x, double lo, double hi, std::span<std::uint8_t> mask);
}  // namespace avx2
#endif

}  // namespace wristhap::kernels
