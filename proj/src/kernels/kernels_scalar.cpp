#include "algosearch/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace algosearch::kernels::scalar {

void clip_scale_u8(std::span<const double> in, std::span<std::uint8_t> out,
                   double lo, double hi, double scale)
{
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double x = in[i];
        if (!std::isfinite(x)) {
            out[i] = 0;
            continue;
        }
        // max/min argument order mirrors the vector variant
        const double c = std::min(std::max(x, lo), hi);
        double r = std::floor((c - lo) * scale + 0.5);
        r = std::min(std::max(r, 0.0), 255.0);
        out[i] = static_cast<std::uint8_t>(r);
    }
}

void kde_sum(std::span<const double> cx, std::span<const double> cy,
             double inv_two_h2,
             std::span<const double> qx, std::span<const double> qy,
             std::span<double> out)
{
    for (std::size_t q = 0; q < qx.size(); ++q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cx.size(); ++i) {
            const double dx = qx[q] - cx[i];
            const double dy = qy[q] - cy[i];
            acc += std::exp(-(dx * dx + dy * dy) * inv_two_h2);
        }
        out[q] = acc;
    }
}

} // namespace algosearch::kernels::scalar
