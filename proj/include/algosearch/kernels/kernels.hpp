#pragma once

// Data-parallel inner loops used by the renderer and the toy landscape.
//
// Every kernel has a scalar reference implementation and, where the build
// enables it, an AVX2 variant. The dispatched entry points pick a variant
// once per process from the CPU feature flags; ALGOSEARCH_FORCE_SCALAR=1 in
// the environment pins the scalar path.
//
// clip_scale_u8 variants are bit-identical. kde_sum variants differ only in
// the exponential (libm vs. a polynomial), within a few ulp.

#include <cstdint>
#include <span>
#include <string_view>

namespace algosearch::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True when the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa);

// Variant used by the dispatched entry points below.
Isa active_isa();

// out[i] = round((clamp(in[i], lo, hi) - lo) * scale) clamped to [0, 255];
// non-finite inputs map to 0. Requires out.size() >= in.size().
void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale);

// Unnormalized Gaussian kernel density at each query point:
// out[q] = sum_i exp(-((qx[q]-cx[i])^2 + (qy[q]-cy[i])^2) * inv_two_h2).
void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out);

namespace scalar {
void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale);
void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out);
} // namespace scalar

#if defined(ALGOSEARCH_HAVE_AVX2)
namespace avx2 {
void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale);
void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out);
} // namespace avx2
#endif

} // namespace algosearch::kernels
