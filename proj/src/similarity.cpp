#include "topnav/similarity.hpp"

#include <algorithm>
#include <stdexcept>

namespace topnav {

namespace {
constexpr std::size_t kWindow = 5;
constexpr double kC1 = 1e-4;
constexpr double kC2 = 9e-4;
}  // namespace

double similarity(const ObservationSignature& a, const ObservationSignature& b) {
    const std::size_t n = a.depth.size();
    if (b.depth.size() != n || a.appearance.size() != n || b.appearance.size() != n)
        throw std::invalid_argument("signature length mismatch");
    if (n == 0) throw std::invalid_argument("empty signature");

    // Mean SSIM over all circular windows of the depth channel.
    double ssim_sum = 0.0;
    for (std::size_t start = 0; start < n; ++start) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t k = 0; k < kWindow; ++k) {
            ma += a.depth[(start + k) % n];
            mb += b.depth[(start + k) % n];
        }
        ma /= kWindow;
        mb /= kWindow;
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (std::size_t k = 0; k < kWindow; ++k) {
            double da = a.depth[(start + k) % n] - ma;
            double db = b.depth[(start + k) % n] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
        }
        va /= kWindow;
        vb /= kWindow;
        cov /= kWindow;
        ssim_sum += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                    ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    double ssim = std::clamp(ssim_sum / static_cast<double>(n), 0.0, 1.0);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (a.appearance[i] == b.appearance[i]) ++agree;

    return ssim * (static_cast<double>(agree) / static_cast<double>(n));
}

}  // namespace topnav
