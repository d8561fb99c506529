#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "toothlift/camera.hpp"
#include "toothlift/image.hpp"
#include "toothlift/mesh.hpp"
#include "toothlift/render.hpp"

namespace toothlift {

using ClassProbabilities = Eigen::Matrix<double, kNumClasses, 1>;

/// One predicted tooth instance of a view.
struct InstanceMask {
  Image<float> mask;  // [0, 1], view-sized
  ClassProbabilities class_probs;
  double confidence = 0.0;
};

/// Per-view 2D segmentation: a class index (0..16) per pixel plus optional
/// instance data (at most 16 entries).
struct ViewSegmentation {
  int view_id = 0;
  LabelImage label_map;
  std::vector<InstanceMask> instances;
};

/// Throws unless the label map is `width` x `height` with values in 0..16,
/// there are at most 16 instances, probabilities sum to 1 within 1e-5 and
/// confidences lie in [0, 1].
void validate(const ViewSegmentation& seg, int width, int height);

/// Produces one ViewSegmentation per rendered view, in input order.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<ViewSegmentation> segment(const std::vector<RenderOutput>& outputs,
                                                const std::vector<Camera>& cameras) const = 0;
};

/// Ground-truth segmentation read off the mesh labels through pixel_vertex.
/// With `with_instances`, every view also carries 16 instances (one per tooth
/// class, one-hot probabilities, confidence 1 when the class is visible).
std::vector<ViewSegmentation> oracle_segment(const LabeledMesh& mesh,
                                             const std::vector<RenderOutput>& outputs,
                                             bool with_instances = true);

/// Reads `view_<id>_labels.png` for each camera from `dir`.
std::vector<ViewSegmentation> file_segment(const std::filesystem::path& dir,
                                           const std::vector<Camera>& cameras);

/// Writes `view_<id>_labels.png` for each segmentation.
void export_segmentations(const std::filesystem::path& dir,
                          const std::vector<ViewSegmentation>& segs);

std::filesystem::path label_png_path(const std::filesystem::path& dir, int view_id);

/// Boundary-localized label noise. A pixel whose (2r+1)^2 window holds more
/// than one label is redrawn uniformly from the distinct labels of that
/// window; independently, each pixel is replaced with probability
/// `flip_rate` by a uniform draw from the labels of its (2r+3)^2 window
/// other than its input label (left alone when there are none). Windows are
/// read from the input map. Every pixel consumes the same random draws
/// regardless of the parameters, so under a fixed seed the set of changed
/// pixels grows monotonically with `flip_rate`. Instance data is dropped.
std::vector<ViewSegmentation> noisy_segment(const std::vector<ViewSegmentation>& base,
                                            int boundary_radius, double flip_rate,
                                            std::uint64_t seed);

class OracleSegmenter final : public Segmenter {
 public:
  explicit OracleSegmenter(LabeledMesh mesh, bool with_instances = false);
  std::vector<ViewSegmentation> segment(const std::vector<RenderOutput>& outputs,
                                        const std::vector<Camera>& cameras) const override;

 private:
  LabeledMesh mesh_;
  bool with_instances_;
};

class FileSegmenter final : public Segmenter {
 public:
  explicit FileSegmenter(std::filesystem::path dir);
  std::vector<ViewSegmentation> segment(const std::vector<RenderOutput>& outputs,
                                        const std::vector<Camera>& cameras) const override;

 private:
  std::filesystem::path dir_;
};

class NoisySegmenter final : public Segmenter {
 public:
  NoisySegmenter(std::unique_ptr<Segmenter> base, int boundary_radius, double flip_rate,
                 std::uint64_t seed);
  std::vector<ViewSegmentation> segment(const std::vector<RenderOutput>& outputs,
                                        const std::vector<Camera>& cameras) const override;

 private:
  std::unique_ptr<Segmenter> base_;
  int radius_;
  double flip_rate_;
  std::uint64_t seed_;
};

/// Parsed form of "oracle", "file:<dir>" or "noisy:<radius>,<rate>,<seed>".
struct SegmenterSpec {
  enum class Kind { oracle, file, noisy } kind = Kind::oracle;
  std::filesystem::path dir;
  int radius = 0;
  double flip_rate = 0.0;
  std::uint64_t seed = 0;

  static SegmenterSpec parse(const std::string& text);
  std::string to_string() const;
  bool needs_labels() const { return kind != Kind::file; }
};

/// Noisy segmenters wrap the oracle. `mesh` must carry labels unless the
/// spec is file-based.
std::unique_ptr<Segmenter> make_segmenter(const SegmenterSpec& spec, const LabeledMesh& mesh);

}  // namespace toothlift
