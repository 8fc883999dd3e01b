#pragma once

#include "topnav/world.hpp"

namespace topnav {

/// Structural similarity between two panoramic signatures, in [0, 1].
///
/// A windowed 1D SSIM over the depth channels (circular windows of length 5,
/// stabilizers C1 = 1e-4, C2 = 9e-4) scaled by the fraction of rays whose
/// appearance labels agree. Symmetric, and exactly 1 for identical inputs.
double similarity(const ObservationSignature& a, const ObservationSignature& b);

}  // namespace topnav
