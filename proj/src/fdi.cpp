#include "toothlift/fdi.hpp"

#include <nlohmann/json.hpp>

#include <string>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

bool is_tooth_code(int code) {
  const int quadrant = code / 10, tooth = code % 10;
  return quadrant >= 1 && quadrant <= 4 && tooth >= 1 && tooth <= 8;
}

bool is_upper(int code) { return code / 10 == 1 || code / 10 == 2; }

}  // namespace

FdiTable::FdiTable() {
  to_class_.fill(-1);
  to_class_[0] = 0;
  for (int tooth = 1; tooth <= 8; ++tooth) {
    // right quadrants run 8..1, left quadrants 1..8
    to_class_[10 + tooth] = 9 - tooth;
    to_class_[40 + tooth] = 9 - tooth;
    to_class_[20 + tooth] = 8 + tooth;
    to_class_[30 + tooth] = 8 + tooth;
  }
  rebuild_inverse();
}

void FdiTable::rebuild_inverse() {
  upper_.fill(-1);
  lower_.fill(-1);
  upper_[0] = lower_[0] = 0;
  for (int code = 11; code <= 48; ++code) {
    if (!is_tooth_code(code)) continue;
    const int c = to_class_[code];
    if (c < 1 || c > kNumTeeth) {
      throw LabelError("FDI code " + std::to_string(code) +
                       " must map into 1..16");
    }
    auto& inverse = is_upper(code) ? upper_ : lower_;
    if (inverse[c] != -1) {
      throw LabelError("class " + std::to_string(c) +
                       " assigned twice within one arch");
    }
    inverse[c] = code;
  }
}

FdiTable FdiTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("FDI table must be a JSON object");
  FdiTable table;
  table.to_class_.fill(-1);
  table.to_class_[0] = 0;
  for (const auto& [key, value] : j.items()) {
    int code = 0;
    try {
      code = std::stoi(key);
    } catch (const std::exception&) {
      throw FormatError("FDI table key '" + key + "' is not an integer");
    }
    if (!is_tooth_code(code)) {
      throw LabelError("FDI table key " + key + " is not a tooth code");
    }
    if (!value.is_number_integer()) {
      throw FormatError("FDI table value for " + key + " is not an integer");
    }
    table.to_class_[code] = value.get<int>();
  }
  for (int code = 11; code <= 48; ++code) {
    if (is_tooth_code(code) && table.to_class_[code] == -1) {
      throw LabelError("FDI table is missing code " + std::to_string(code));
    }
  }
  table.rebuild_inverse();
  return table;
}

nlohmann::json FdiTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (int code = 11; code <= 48; ++code) {
    if (is_tooth_code(code)) j[std::to_string(code)] = to_class_[code];
  }
  return j;
}

int FdiTable::to_class(int fdi_code) const {
  if (fdi_code < 0 || fdi_code > 48 || to_class_[fdi_code] < 0) {
    throw LabelError("unknown FDI code " + std::to_string(fdi_code));
  }
  return to_class_[fdi_code];
}

int FdiTable::to_fdi(int class_index, Jaw jaw) const {
  if (class_index < 0 || class_index >= kNumClasses) {
    throw LabelError("class index " + std::to_string(class_index) +
                     " outside 0..16");
  }
  return jaw == Jaw::upper ? upper_[class_index] : lower_[class_index];
}

int map_fdi(int fdi_code) {
  static const FdiTable table;
  return table.to_class(fdi_code);
}

}  // namespace toothlift
