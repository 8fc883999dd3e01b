#pragma once

#include <cstddef>
#include <stdexcept>

#include "topnav/geometry.hpp"

namespace topnav {

/// Discrete action space: evenly spaced heading sectors over the full circle
/// plus an optional STAY action. Sector k is centered on world angle
/// 2*pi*k/N, so with 8 sectors the cardinal and diagonal headings are the
/// motion directions.
struct ActionSpace {
    std::size_t sector_count = 8;
    bool include_stay = true;

    std::size_t action_count() const { return sector_count + (include_stay ? 1 : 0); }
    std::size_t stay_action() const {
        if (!include_stay) throw std::logic_error("action space has no STAY action");
        return sector_count;
    }
    bool is_stay(std::size_t action) const { return include_stay && action == sector_count; }

    /// Center heading of sector k, in [0, 2*pi).
    double bisector(std::size_t sector) const {
        return normalize_angle(kTwoPi * static_cast<double>(sector) /
                               static_cast<double>(sector_count));
    }

    /// Sector whose angular range contains `angle`.
    std::size_t sector_of(double angle) const {
        double width = kTwoPi / static_cast<double>(sector_count);
        double shifted = normalize_angle(angle + width / 2.0);
        auto k = static_cast<std::size_t>(shifted / width);
        return k >= sector_count ? 0 : k;
    }

    /// Heading sector pointing the opposite way; STAY maps to itself.
    std::size_t opposite(std::size_t action) const {
        if (is_stay(action)) return action;
        return (action + sector_count / 2) % sector_count;
    }
};

}  // namespace topnav
