#pragma once

#include <filesystem>

#include "toothlift/neural/dgap.hpp"

namespace toothlift::neural {

/// Writes `<stem>.bin` (every tensor as little-endian float64, column-major,
/// in DgapParams::kTensorNames order) and `<stem>.json` (shapes, offsets and
/// the two hyperparameters).
void save_dgap_params(const std::filesystem::path& stem, const DgapParams<double>& params);
DgapParams<double> load_dgap_params(const std::filesystem::path& stem);

}  // namespace toothlift::neural
