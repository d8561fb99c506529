#include "toothlift/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "toothlift/error.hpp"

namespace toothlift {

namespace fs = std::filesystem;

std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::label_aware ? "label-aware" : "region-only";
}

BoundaryMode parse_boundary_mode(const std::string& text) {
  if (text == "label-aware") return BoundaryMode::label_aware;
  if (text == "region-only") return BoundaryMode::region_only;
  throw ArgumentError("unknown B-IoU mode '" + text + "' (label-aware | region-only)");
}

namespace {

NeighborhoodKind parse_neighborhood(const std::string& text) {
  if (text == "nearest") return NeighborhoodKind::nearest;
  if (text == "hops") return NeighborhoodKind::hops;
  throw ArgumentError("unknown neighborhood '" + text + "' (nearest | hops)");
}

}  // namespace

void PipelineConfig::apply_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  static const std::set<std::string> known = {"views",        "size", "segmenter", "potts_scale", "max_sweeps",
                                              "biou_mode",    "neighborhood", "k", "fdi_table",  "out",
                                              "seed",         "jobs", "up_axis"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw FormatError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("views")) views = j["views"].get<int>();
    if (j.contains("size")) size = j["size"].get<int>();
    if (j.contains("segmenter")) segmenter = j["segmenter"].get<std::string>();
    if (j.contains("potts_scale")) potts_scale = j["potts_scale"].get<double>();
    if (j.contains("max_sweeps")) max_sweeps = j["max_sweeps"].get<int>();
    if (j.contains("biou_mode")) biou_mode = parse_boundary_mode(j["biou_mode"].get<std::string>());
    if (j.contains("neighborhood")) neighborhood = parse_neighborhood(j["neighborhood"].get<std::string>());
    if (j.contains("k")) k = j["k"].get<int>();
    if (j.contains("fdi_table")) {
      if (j["fdi_table"].is_null()) fdi_table.reset();
      else fdi_table = j["fdi_table"].get<std::string>();
    }
    if (j.contains("out")) out = j["out"].get<std::string>();
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) jobs = j["jobs"].get<int>();
    if (j.contains("up_axis")) {
      const auto v = j["up_axis"].get<std::vector<double>>();
      if (v.size() != 3) throw FormatError("up_axis needs 3 components");
      up_axis = Eigen::Vector3d(v[0], v[1], v[2]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  validate();
}

void PipelineConfig::apply_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  apply_json(j);
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
  j["views"] = views;
  j["size"] = size;
  j["segmenter"] = segmenter;
  j["potts_scale"] = potts_scale;
  j["max_sweeps"] = max_sweeps;
  j["biou_mode"] = to_string(biou_mode);
  j["neighborhood"] = neighborhood == NeighborhoodKind::nearest ? "nearest" : "hops";
  j["k"] = k;
  j["fdi_table"] = fdi_table ? nlohmann::json(fdi_table->string()) : nlohmann::json(nullptr);
  j["out"] = out.string();
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["up_axis"] = {up_axis.x(), up_axis.y(), up_axis.z()};
  return j;
}

void PipelineConfig::validate() const {
  if (views < 1 || views > 360) throw ArgumentError("views must be in 1..360");
  if (size < 1 || size > 8192) throw ArgumentError("size must be in 1..8192");
  if (!std::isfinite(potts_scale) || potts_scale < 0.0) throw ArgumentError("potts_scale must be >= 0");
  if (max_sweeps < 0) throw ArgumentError("max_sweeps must be >= 0");
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (!up_axis.allFinite() || up_axis.norm() == 0.0) throw ArgumentError("up_axis must be a nonzero vector");
  segmenter_spec();
}

SegmenterSpec PipelineConfig::segmenter_spec() const {
  if (segmenter.rfind("noisy:", 0) == 0 && std::count(segmenter.begin(), segmenter.end(), ',') == 1) {
    return SegmenterSpec::parse(segmenter + "," + std::to_string(seed));
  }
  return SegmenterSpec::parse(segmenter);
}

FdiTable PipelineConfig::fdi() const {
  if (!fdi_table) return FdiTable();
  std::ifstream in(*fdi_table);
  if (!in) throw IoError("cannot read FDI table " + fdi_table->string());
  try {
    return FdiTable::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fdi_table->string() + ": " + e.what());
  }
}

EvaluationOptions PipelineConfig::evaluation() const { return {k, biou_mode, neighborhood}; }

}  // namespace toothlift
