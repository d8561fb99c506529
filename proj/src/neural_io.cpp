#include "toothlift/neural/params_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace toothlift::neural {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "parameter buffers are written in host order");

void save_dgap_params(const fs::path& stem, const DgapParams<double>& params) {
  params.validate();
  nlohmann::json manifest;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  manifest["grid_stride"] = params.grid_stride;
  manifest["max_offset"] = params.max_offset;
  auto& tensors = manifest["tensors"] = nlohmann::json::array();
  Eigen::Index offset = 0;
  params.for_each_tensor([&](const auto& t, std::string_view name) {
    tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", offset}});
    offset += t.size();
  });
  manifest["count"] = offset;

  const Vector<double> flat = params.flatten();
  fs::path bin = stem, json = stem;
  bin += ".bin";
  json += ".json";
  std::ofstream b(bin, std::ios::binary);
  if (!b) throw IoError("cannot write " + bin.string());
  b.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
  std::ofstream j(json);
  if (!j) throw IoError("cannot write " + json.string());
  j << manifest.dump(2) << '\n';
}

DgapParams<double> load_dgap_params(const fs::path& stem) {
  fs::path bin = stem, json = stem;
  bin += ".bin";
  json += ".json";
  std::ifstream j(json);
  if (!j) throw IoError("cannot read " + json.string());
  nlohmann::json manifest;
  try {
    j >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json.string() + ": " + e.what());
  }

  DgapParams<double> params;
  try {
    if (manifest.at("dtype") != "float64") throw FormatError(json.string() + ": dtype must be float64");
    const auto& tensors = manifest.at("tensors");
    if (!tensors.is_array() || tensors.size() != DgapParams<double>::kTensorNames.size()) {
      throw FormatError(json.string() + ": expected 8 tensors");
    }
    std::size_t i = 0;
    params.for_each_tensor([&](auto& t, std::string_view name) {
      const auto& entry = tensors[i++];
      if (entry.at("name").get<std::string>() != name) throw FormatError(json.string() + ": tensor order mismatch");
      const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
      const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
      if (rows < 1 || cols < 1 || (t.ColsAtCompileTime == 1 && cols != 1)) {
        throw FormatError(json.string() + ": bad shape for " + std::string(name));
      }
      t.resize(rows, cols);
    });
    params.grid_stride = manifest.at("grid_stride").get<int>();
    params.max_offset = manifest.at("max_offset").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json.string() + ": " + e.what());
  }

  std::ifstream b(bin, std::ios::binary);
  if (!b) throw IoError("cannot read " + bin.string());
  const std::string bytes((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  const auto count = params.size();
  if (bytes.size() != static_cast<std::size_t>(count) * sizeof(double)) {
    throw FormatError(bin.string() + ": expected " + std::to_string(count) + " float64 values");
  }
  Vector<double> flat(count);
  std::memcpy(flat.data(), bytes.data(), bytes.size());
  params = params.unflatten(flat);
  try {
    params.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(stem.string() + ": " + e.what());
  }
  return params;
}

}  // namespace toothlift::neural
