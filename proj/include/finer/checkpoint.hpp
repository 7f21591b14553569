#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "finer/network.hpp"

namespace finer {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON text:
///   {"format_version":1,"layer_dims":[...],
///    "activation":{"backbone":..,"finer":..,"omega0":..,"s0":..,"omega_f":..},
///    "k_bias":..,"stage_widths":[...],"weights":[[...],...],"biases":[[...],...]}
/// Each weights entry is the layer matrix flattened row-major. Numbers carry
/// 17 significant digits so the round trip is exact.
std::string checkpoint_json(const NetworkState& net);

/// Throws std::invalid_argument on malformed input or an unknown
/// format_version.
NetworkState parse_checkpoint(std::string_view json);

void save_checkpoint(const NetworkState& net, const std::filesystem::path& path);
NetworkState load_checkpoint(const std::filesystem::path& path);

}  // namespace finer
