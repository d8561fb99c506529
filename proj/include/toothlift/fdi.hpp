#pragma once

#include <nlohmann/json_fwd.hpp>

#include <array>

#include "toothlift/mesh.hpp"

namespace toothlift {

/// Mapping between FDI tooth codes and class indices 0..16.
///
/// The default table is quadrant-major, walking each arch from the patient's
/// right third molar to the left third molar:
///   upper: 18..11 -> 1..8, 21..28 -> 9..16
///   lower: 48..41 -> 1..8, 31..38 -> 9..16
/// Code 0 (gingiva) always maps to class 0.
class FdiTable {
 public:
  /// The quadrant-major default table.
  FdiTable();

  /// Custom table from a JSON object {"<fdi code>": class, ...}. All 32
  /// permanent-tooth codes must be present and each arch must map
  /// bijectively onto 1..16.
  static FdiTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Class index of an FDI code; LabelError for unknown codes.
  int to_class(int fdi_code) const;
  /// FDI code of a class index within one arch; 0 -> 0.
  int to_fdi(int class_index, Jaw jaw) const;

 private:
  // Indexed by FDI code 0..48; -1 marks codes that are not teeth.
  std::array<int, 49> to_class_{};
  std::array<int, kNumClasses> upper_{};
  std::array<int, kNumClasses> lower_{};

  void rebuild_inverse();
};

/// Class index under the default table.
int map_fdi(int fdi_code);

}  // namespace toothlift
