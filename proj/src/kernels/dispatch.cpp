#include "algosearch/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace algosearch::kernels {

std::string_view isa_name(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa)
{
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(ALGOSEARCH_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

namespace {

Isa select_isa()
{
    const char* force = std::getenv("ALGOSEARCH_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0') {
        return Isa::scalar;
    }
    return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

} // namespace

Isa active_isa()
{
    static const Isa selected = select_isa();
    return selected;
}

void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale)
{
#if defined(ALGOSEARCH_HAVE_AVX2)
    if (active_isa() == Isa::avx2) {
        avx2::clip_scale_u8(in, out, lo, hi, scale);
        return;
    }
#endif
    scalar::clip_scale_u8(in, out, lo, hi, scale);
}

void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out)
{
#if defined(ALGOSEARCH_HAVE_AVX2)
    if (active_isa() == Isa::avx2) {
        avx2::kde_sum(cx, cy, inv_two_h2, qx, qy, out);
        return;
    }
#endif
    scalar::kde_sum(cx, cy, inv_two_h2, qx, qy, out);
}

} // namespace algosearch::kernels
