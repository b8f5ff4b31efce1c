#include "algosearch/kernels/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstring>

namespace algosearch::kernels::avx2 {
namespace {

// Cephes-style exp: range reduction by ln2 (split constant), rational
// approximation on [-ln2/2, ln2/2], then scaling by 2^n through the
// exponent bits. Inputs below -708 flush to zero (no subnormal results).
inline __m256d exp_pd(__m256d x)
{
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);

    __m256d n = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(x, log2e), _mm256_set1_pd(0.5)));
    x = _mm256_sub_pd(x, _mm256_mul_pd(n, c1));
    x = _mm256_sub_pd(x, _mm256_mul_pd(n, c2));

    const __m256d xx = _mm256_mul_pd(x, x);

    __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
    p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(3.02994407707441961300E-2));
    p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, x);

    __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
    q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.52448340349684104192E-3));
    q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.27265548208155028766E-1));
    q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.00000000000000000009E0));

    __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    r = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_add_pd(r, r));

    __m256i ni = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
    ni = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    r = _mm256_mul_pd(r, _mm256_castsi256_pd(ni));

    return _mm256_andnot_pd(underflow, r);
}

inline void kde_block(std::span<const double> cx, std::span<const double> cy,
                      double inv_two_h2, const double* qx, const double* qy, double* out)
{
    const __m256d vqx = _mm256_loadu_pd(qx);
    const __m256d vqy = _mm256_loadu_pd(qy);
    const __m256d neg_scale = _mm256_set1_pd(-inv_two_h2);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < cx.size(); ++i) {
        const __m256d dx = _mm256_sub_pd(vqx, _mm256_set1_pd(cx[i]));
        const __m256d dy = _mm256_sub_pd(vqy, _mm256_set1_pd(cy[i]));
        const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
        acc = _mm256_add_pd(acc, exp_pd(_mm256_mul_pd(d2, neg_scale)));
    }
    _mm256_storeu_pd(out, acc);
}

} // namespace

void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale)
{
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d top = _mm256_set1_pd(255.0);

    const std::size_t n = in.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(in.data() + i);
        const __m256d finite = _mm256_cmp_pd(_mm256_sub_pd(x, x), zero, _CMP_EQ_OQ);
        const __m256d c = _mm256_min_pd(_mm256_max_pd(x, vlo), vhi);
        __m256d r = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(_mm256_sub_pd(c, vlo), vscale), half));
        r = _mm256_min_pd(_mm256_max_pd(r, zero), top);
        r = _mm256_and_pd(r, finite);

        const __m128i i32 = _mm256_cvtpd_epi32(r);
        const __m128i i16 = _mm_packus_epi32(i32, i32);
        const __m128i u8 = _mm_packus_epi16(i16, i16);
        const std::int32_t packed = _mm_cvtsi128_si32(u8);
        std::memcpy(out.data() + i, &packed, 4);
    }
    if (i < n) {
        scalar::clip_scale_u8(in.subspan(i), out.subspan(i), lo, hi, scale);
    }
}

void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out)
{
    const std::size_t n = qx.size();
    std::size_t q = 0;
    for (; q + 4 <= n; q += 4) {
        kde_block(cx, cy, inv_two_h2, qx.data() + q, qy.data() + q, out.data() + q);
    }
    if (q < n) {
        // pad the tail into one full block so every query goes through the same exp
        std::array<double, 4> tx{}, ty{}, to{};
        const std::size_t rest = n - q;
        std::copy_n(qx.data() + q, rest, tx.begin());
        std::copy_n(qy.data() + q, rest, ty.begin());
        kde_block(cx, cy, inv_two_h2, tx.data(), ty.data(), to.data());
        std::copy_n(to.begin(), rest, out.data() + q);
    }
}

} // namespace algosearch::kernels::avx2
