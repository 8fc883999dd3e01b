#pragma once

#include <string>
#include <utility>

#include "topnav/map.hpp"
#include "topnav/model.hpp"

namespace topnav {

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Versioned, checksummed model+map document. Round-trips are lossless to
/// full float precision.
std::string snapshot_to_text(const GenerativeModel& model, const TopoMap& map);
std::pair<GenerativeModel, TopoMap> snapshot_from_text(const std::string& text);

void save_snapshot(const std::string& path, const GenerativeModel& model, const TopoMap& map);
std::pair<GenerativeModel, TopoMap> load_snapshot(const std::string& path);

/// FNV-1a 64-bit digest, hex-encoded.
std::string fnv1a_hex(const std::string& payload);

}  // namespace topnav
