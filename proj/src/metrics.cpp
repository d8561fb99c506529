#include "toothlift/metrics.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

void check_lengths(const Labels& pred, const Labels& gt) {
  if (pred.size() != gt.size()) {
    throw ArgumentError("prediction has " + std::to_string(pred.size()) + " labels, ground truth " +
                        std::to_string(gt.size()));
  }
}

struct ClassCounts {
  std::array<long, kNumClasses> pred{}, gt{}, both{};
};

ClassCounts count_classes(const Labels& pred, const Labels& gt) {
  check_lengths(pred, gt);
  validate_labels(pred);
  validate_labels(gt);
  ClassCounts c;
  for (Eigen::Index i = 0; i < gt.size(); ++i) {
    ++c.pred[static_cast<std::size_t>(pred[i])];
    ++c.gt[static_cast<std::size_t>(gt[i])];
    if (pred[i] == gt[i]) ++c.both[static_cast<std::size_t>(gt[i])];
  }
  return c;
}

double mean_of(const PerClass& values, const char* metric) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetricError(std::string(metric) + ": ground truth has no tooth class");
  return sum / n;
}

nlohmann::json optional_array(const auto& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : values) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return arr;
}

template <std::size_t N>
std::array<std::optional<double>, N> optional_array_from(const nlohmann::json& j) {
  std::array<std::optional<double>, N> out{};
  if (!j.is_array() || j.size() != N) throw FormatError("metrics array of wrong length");
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_null()) out[i] = j[i].get<double>();
  }
  return out;
}

}  // namespace

double overall_accuracy(const Labels& pred, const Labels& gt) {
  check_lengths(pred, gt);
  if (gt.size() == 0) throw UndefinedMetricError("overall accuracy of an empty labeling");
  return static_cast<double>((pred.array() == gt.array()).count()) / static_cast<double>(gt.size());
}

ToothIou tooth_miou(const Labels& pred, const Labels& gt) {
  const auto c = count_classes(pred, gt);
  ToothIou out;
  for (int k = 1; k <= kNumTeeth; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (c.gt[i] == 0) continue;
    out.per_class[i - 1] =
        static_cast<double>(c.both[i]) / static_cast<double>(c.pred[i] + c.gt[i] - c.both[i]);
  }
  out.t_miou = mean_of(out.per_class, "T-mIoU");
  return out;
}

PerClass per_class_dice(const Labels& pred, const Labels& gt) {
  const auto c = count_classes(pred, gt);
  PerClass out{};
  for (int k = 1; k <= kNumTeeth; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (c.gt[i] == 0) continue;
    out[i - 1] = 2.0 * static_cast<double>(c.both[i]) / static_cast<double>(c.pred[i] + c.gt[i]);
  }
  return out;
}

double dice(const Labels& pred, const Labels& gt) { return mean_of(per_class_dice(pred, gt), "Dice"); }

std::vector<bool> boundary_vertices(const Labels& labels,
                                    const std::vector<std::vector<int>>& neighborhoods) {
  if (static_cast<Eigen::Index>(neighborhoods.size()) != labels.size()) {
    throw ArgumentError("neighbourhoods do not match the labeling");
  }
  std::vector<bool> out(neighborhoods.size(), false);
  for (std::size_t v = 0; v < neighborhoods.size(); ++v) {
    for (int u : neighborhoods[v]) {
      if (labels[u] != labels[static_cast<Eigen::Index>(v)]) {
        out[v] = true;
        break;
      }
    }
  }
  return out;
}

double boundary_iou(const Labels& pred, const Labels& gt,
                    const std::vector<std::vector<int>>& neighborhoods, BoundaryMode mode) {
  check_lengths(pred, gt);
  const auto bp = boundary_vertices(pred, neighborhoods);
  const auto bg = boundary_vertices(gt, neighborhoods);
  long inter = 0, uni = 0;
  for (std::size_t v = 0; v < bp.size(); ++v) {
    if (bp[v] || bg[v]) ++uni;
    if (bp[v] && bg[v] &&
        (mode == BoundaryMode::region_only || pred[static_cast<Eigen::Index>(v)] == gt[static_cast<Eigen::Index>(v)])) {
      ++inter;
    }
  }
  if (uni == 0) throw UndefinedMetricError("B-IoU: neither labeling has boundary vertices");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double boundary_iou(const Labels& pred, const Labels& gt, const AdjacencyIndex& index, int k,
                    BoundaryMode mode, NeighborhoodKind kind) {
  check_lengths(pred, gt);
  if (gt.size() != index.vertex_count()) throw AlignmentError("labels do not match the mesh");
  return boundary_iou(pred, gt, all_neighborhoods(index, k, kind), mode);
}

PerGroup group_ious(const PerClass& per_class) {
  PerGroup out{};
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& a = per_class[g];
    const auto& b = per_class[g + out.size()];
    if (a && b) out[g] = 0.5 * (*a + *b);
    else if (a) out[g] = *a;
    else if (b) out[g] = *b;
  }
  return out;
}

MetricsReport evaluate(const Labels& pred, const Labels& gt, const AdjacencyIndex& index,
                       const EvaluationOptions& options) {
  MetricsReport r;
  r.oa = overall_accuracy(pred, gt);
  const auto miou = tooth_miou(pred, gt);
  r.t_miou = miou.t_miou;
  r.per_class_iou = miou.per_class;
  r.per_group_iou = group_ious(miou.per_class);
  r.dice = dice(pred, gt);
  r.b_iou = boundary_iou(pred, gt, index, options.k, options.boundary_mode, options.neighborhood);
  return r;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["oa"] = report.oa;
  j["t_miou"] = report.t_miou;
  j["b_iou"] = report.b_iou;
  j["dice"] = report.dice;
  j["per_class_iou"] = optional_array(report.per_class_iou);
  j["per_group_iou"] = optional_array(report.per_group_iou);
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.oa = j.at("oa").get<double>();
    r.t_miou = j.at("t_miou").get<double>();
    r.b_iou = j.at("b_iou").get<double>();
    r.dice = j.at("dice").get<double>();
    r.per_class_iou = optional_array_from<kNumTeeth>(j.at("per_class_iou"));
    r.per_group_iou = optional_array_from<kNumTeeth / 2>(j.at("per_group_iou"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
  return r;
}

void save_report(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

void save_report_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "mesh,oa,t_miou,b_iou,dice";
  for (int g = 1; g <= kNumTeeth / 2; ++g) out << ",t" << g << '_' << g + kNumTeeth / 2;
  out << '\n';
  for (const auto& [name, r] : rows) {
    out << name << ',' << r.oa << ',' << r.t_miou << ',' << r.b_iou << ',' << r.dice;
    for (const auto& g : r.per_group_iou) {
      out << ',';
      if (g) out << *g;
    }
    out << '\n';
  }
}

}  // namespace toothlift
