#pragma once

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "toothlift/camera.hpp"
#include "toothlift/config.hpp"
#include "toothlift/error.hpp"
#include "toothlift/lifting.hpp"
#include "toothlift/metrics.hpp"
#include "toothlift/normalize.hpp"
#include "toothlift/refine.hpp"
#include "toothlift/render.hpp"
#include "toothlift/segmenter.hpp"

namespace toothlift {

/// Failure inside one pipeline stage; what() is "[<stage>] <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("[" + stage + "] " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs `f`, rethrowing any library error as a StageError tagged `stage`.
template <typename F>
decltype(auto) in_stage(const std::string& stage, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

/// Mesh loaded from disk, labels mapped through the configured FDI table,
/// normalized with the configured up axis.
NormalizedMesh load_input(const std::filesystem::path& mesh_path,
                          const std::optional<std::filesystem::path>& labels_path,
                          const PipelineConfig& config);

struct RenderSet {
  std::vector<Camera> cameras;
  std::vector<RenderOutput> outputs;
};

/// Renders every view, up to config.jobs views at a time.
RenderSet render_views(const LabeledMesh& mesh, const PipelineConfig& config);

/// Render directory layout:
///   cameras.json
///   view_<id>.png                    shaded RGB
///   view_<id>_face_id.{raw,json}     int32, -1 where empty
///   view_<id>_bary.{raw,json}        float64, 3 channels, -1 where empty
///   view_<id>_depth.{raw,json}       float64, +inf where empty
///   view_<id>_masks.{raw,json}       float32, 16 channels (labelled meshes)
void save_render_set(const std::filesystem::path& dir, const RenderSet& set,
                     const LabeledMesh* labelled = nullptr);
/// Cameras and geometry buffers; the shaded RGB is not read back.
RenderSet load_render_set(const std::filesystem::path& dir);

nlohmann::json cameras_to_json(const std::vector<Camera>& cameras);
std::vector<Camera> cameras_from_json(const nlohmann::json& j);

std::vector<ViewSegmentation> segment_views(const LabeledMesh& mesh, const RenderSet& set,
                                            const PipelineConfig& config);

VoteTable lift_views(const LabeledMesh& mesh, const RenderSet& set,
                     const std::vector<ViewSegmentation>& segs, const PipelineConfig& config);

ExpansionResult refine_votes(const LabeledMesh& mesh, const VoteTable& table, const Labels& init,
                             const PipelineConfig& config);

MetricsReport evaluate_labels(const LabeledMesh& mesh, const Labels& pred, const PipelineConfig& config);

/// Output file names inside the pipeline directory.
namespace files {
inline constexpr const char* render_dir = "render";
inline constexpr const char* segment_dir = "segment";
inline constexpr const char* votes = "votes";  // stem of votes.{raw,json}
inline constexpr const char* lifted = "labels_lifted.json";
inline constexpr const char* refined = "labels_refined.json";
inline constexpr const char* trace = "energy_trace.csv";
inline constexpr const char* metrics = "metrics.json";
inline constexpr const char* metrics_lifted = "metrics_lifted.json";
inline constexpr const char* summary = "summary.csv";
}  // namespace files

struct PipelineResult {
  Labels lifted;
  Labels refined;
  std::optional<MetricsReport> lifted_metrics;
  std::optional<MetricsReport> metrics;  // present when ground truth is available
  int sweeps = 0;
};

/// normalize -> render -> segment -> lift -> refine -> evaluate, writing every
/// intermediate into config.out. Failures surface as StageError.
PipelineResult run_pipeline(const std::filesystem::path& mesh_path,
                            const std::optional<std::filesystem::path>& labels_path,
                            const PipelineConfig& config);

/// Every mesh (.obj/.ply/.stl) in `dir` with an optional `<stem>.json` label
/// file beside it; each result goes to config.out/<stem>/ and the metrics of
/// labelled meshes are rolled up into config.out/summary.csv. Meshes run in
/// parallel up to config.jobs. Returns the number of failed meshes.
int run_batch(const std::filesystem::path& dir, const PipelineConfig& config);

}  // namespace toothlift
