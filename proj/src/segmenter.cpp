#include "toothlift/segmenter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "toothlift/error.hpp"
#include "toothlift/image_io.hpp"

namespace toothlift {
namespace fs = std::filesystem;
namespace {

using LabelSet = Image<std::uint32_t>;  // bit c set <=> class c present

LabelSet window_sets(const LabelImage& labels, int radius) {
  const auto H = labels.rows(), W = labels.cols();
  LabelSet single(H, W);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    single.data()[i] = 1u << labels.data()[i];
  }
  if (radius == 0) return single;
  LabelSet rows(H, W), out(H, W);
  for (Eigen::Index v = 0; v < H; ++v) {
    for (Eigen::Index u = 0; u < W; ++u) {
      std::uint32_t acc = 0;
      for (Eigen::Index x = std::max<Eigen::Index>(0, u - radius);
           x <= std::min<Eigen::Index>(W - 1, u + radius); ++x) {
        acc |= single(v, x);
      }
      rows(v, u) = acc;
    }
  }
  for (Eigen::Index v = 0; v < H; ++v) {
    for (Eigen::Index u = 0; u < W; ++u) {
      std::uint32_t acc = 0;
      for (Eigen::Index y = std::max<Eigen::Index>(0, v - radius);
           y <= std::min<Eigen::Index>(H - 1, v + radius); ++y) {
        acc |= rows(y, u);
      }
      out(v, u) = acc;
    }
  }
  return out;
}

// Uniform in [0, 1) from the top 53 bits; independent of the library's
// distribution implementations.
double unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::uint8_t pick(std::uint32_t set, double u) {
  const int count = std::popcount(set);
  int index = std::min(count - 1, static_cast<int>(u * count));
  for (int c = 0; c < kNumClasses; ++c) {
    if (set & (1u << c)) {
      if (index-- == 0) return static_cast<std::uint8_t>(c);
    }
  }
  return 0;
}

void check_alignment(const std::vector<RenderOutput>& outputs,
                     const std::vector<Camera>& cameras) {
  if (outputs.size() != cameras.size()) {
    throw ArgumentError("render outputs and cameras differ in count");
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].view_id != cameras[i].view_id) {
      throw ArgumentError("render output " + std::to_string(i) + " is view " +
                          std::to_string(outputs[i].view_id) + ", camera is view " +
                          std::to_string(cameras[i].view_id));
    }
  }
}

}  // namespace

void validate(const ViewSegmentation& seg, int width, int height) {
  const std::string where = "segmentation of view " + std::to_string(seg.view_id);
  if (seg.label_map.cols() != width || seg.label_map.rows() != height) {
    throw FormatError(where + ": label map is " + std::to_string(seg.label_map.cols()) + "x" +
                      std::to_string(seg.label_map.rows()) + ", expected " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (seg.label_map.size() > 0 && seg.label_map.maxCoeff() >= kNumClasses) {
    throw FormatError(where + ": class value above 16");
  }
  if (seg.instances.size() > kNumTeeth) throw FormatError(where + ": more than 16 instances");
  for (const auto& inst : seg.instances) {
    if (inst.mask.cols() != width || inst.mask.rows() != height) {
      throw FormatError(where + ": instance mask size mismatch");
    }
    if ((inst.class_probs.array() < 0.0).any() ||
        std::abs(inst.class_probs.sum() - 1.0) > 1e-5) {
      throw FormatError(where + ": class probabilities do not form a distribution");
    }
    if (!(inst.confidence >= 0.0 && inst.confidence <= 1.0)) {
      throw FormatError(where + ": confidence outside [0, 1]");
    }
  }
}

std::vector<ViewSegmentation> oracle_segment(const LabeledMesh& mesh,
                                             const std::vector<RenderOutput>& outputs,
                                             bool with_instances) {
  const Labels& labels = mesh.require_labels();
  std::vector<ViewSegmentation> out;
  out.reserve(outputs.size());
  for (const auto& ro : outputs) {
    ViewSegmentation seg;
    seg.view_id = ro.view_id;
    seg.label_map = LabelImage::Zero(ro.height(), ro.width());
    for (int v = 0; v < ro.height(); ++v) {
      for (int u = 0; u < ro.width(); ++u) {
        if (const auto vid = pixel_vertex(ro, mesh, {u, v})) {
          seg.label_map(v, u) = static_cast<std::uint8_t>(labels[*vid]);
        }
      }
    }
    if (with_instances) {
      for (int c = 1; c <= kNumTeeth; ++c) {
        InstanceMask inst;
        inst.mask = (seg.label_map.array() == c).cast<float>().matrix();
        inst.class_probs = ClassProbabilities::Unit(c);
        inst.confidence = (inst.mask.array() > 0.0f).any() ? 1.0 : 0.0;
        seg.instances.push_back(std::move(inst));
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

fs::path label_png_path(const fs::path& dir, int view_id) {
  return dir / ("view_" + std::to_string(view_id) + "_labels.png");
}

std::vector<ViewSegmentation> file_segment(const fs::path& dir,
                                           const std::vector<Camera>& cameras) {
  std::vector<ViewSegmentation> out;
  out.reserve(cameras.size());
  for (const auto& cam : cameras) {
    const auto path = label_png_path(dir, cam.view_id);
    if (!fs::exists(path)) throw IoError("missing segmentation " + path.string());
    ViewSegmentation seg;
    seg.view_id = cam.view_id;
    seg.label_map = read_png_gray(path);
    if (seg.label_map.size() > 0 && seg.label_map.maxCoeff() > kNumTeeth) {
      throw FormatError(path.string() + ": pixel value " +
                        std::to_string(seg.label_map.maxCoeff()) + " is not a class index");
    }
    validate(seg, cam.width, cam.height);
    out.push_back(std::move(seg));
  }
  return out;
}

void export_segmentations(const fs::path& dir, const std::vector<ViewSegmentation>& segs) {
  fs::create_directories(dir);
  for (const auto& seg : segs) write_png(label_png_path(dir, seg.view_id), seg.label_map);
}

std::vector<ViewSegmentation> noisy_segment(const std::vector<ViewSegmentation>& base,
                                            int boundary_radius, double flip_rate,
                                            std::uint64_t seed) {
  if (boundary_radius < 0) throw ArgumentError("boundary radius must be >= 0");
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw ArgumentError("flip rate outside [0, 1]");
  std::vector<ViewSegmentation> out;
  out.reserve(base.size());
  for (const auto& in : base) {
    const LabelSet near = window_sets(in.label_map, boundary_radius);
    const LabelSet flip = window_sets(in.label_map, boundary_radius + 1);
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(in.view_id)};
    std::mt19937_64 gen(sseq);

    ViewSegmentation seg;
    seg.view_id = in.view_id;
    seg.label_map = in.label_map;
    for (Eigen::Index i = 0; i < seg.label_map.size(); ++i) {
      const double redraw = unit(gen), coin = unit(gen), choice = unit(gen);
      std::uint8_t& label = seg.label_map.data()[i];
      const std::uint8_t original = label;
      if (std::popcount(near.data()[i]) > 1) label = pick(near.data()[i], redraw);
      // a flip always moves away from the input label when the window allows it
      const std::uint32_t others = flip.data()[i] & ~(1u << original);
      if (coin < flip_rate && others != 0) label = pick(others, choice);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

OracleSegmenter::OracleSegmenter(LabeledMesh mesh, bool with_instances)
    : mesh_(std::move(mesh)), with_instances_(with_instances) {
  mesh_.require_labels();
}

std::vector<ViewSegmentation> OracleSegmenter::segment(const std::vector<RenderOutput>& outputs,
                                                       const std::vector<Camera>& cameras) const {
  check_alignment(outputs, cameras);
  return oracle_segment(mesh_, outputs, with_instances_);
}

FileSegmenter::FileSegmenter(fs::path dir) : dir_(std::move(dir)) {}

std::vector<ViewSegmentation> FileSegmenter::segment(const std::vector<RenderOutput>& outputs,
                                                     const std::vector<Camera>& cameras) const {
  check_alignment(outputs, cameras);
  return file_segment(dir_, cameras);
}

NoisySegmenter::NoisySegmenter(std::unique_ptr<Segmenter> base, int boundary_radius,
                               double flip_rate, std::uint64_t seed)
    : base_(std::move(base)), radius_(boundary_radius), flip_rate_(flip_rate), seed_(seed) {
  if (!base_) throw ArgumentError("noisy segmenter needs a base segmenter");
  if (radius_ < 0) throw ArgumentError("boundary radius must be >= 0");
  if (!(flip_rate_ >= 0.0 && flip_rate_ <= 1.0)) throw ArgumentError("flip rate outside [0, 1]");
}

std::vector<ViewSegmentation> NoisySegmenter::segment(const std::vector<RenderOutput>& outputs,
                                                      const std::vector<Camera>& cameras) const {
  return noisy_segment(base_->segment(outputs, cameras), radius_, flip_rate_, seed_);
}

SegmenterSpec SegmenterSpec::parse(const std::string& text) {
  SegmenterSpec spec;
  if (text == "oracle") return spec;
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    spec.kind = Kind::file;
    spec.dir = text.substr(5);
    return spec;
  }
  if (text.rfind("noisy:", 0) == 0) {
    spec.kind = Kind::noisy;
    std::istringstream ss(text.substr(6));
    char c1 = 0, c2 = 0;
    long long seed = -1;
    if (!(ss >> spec.radius >> c1 >> spec.flip_rate >> c2 >> seed) || c1 != ',' || c2 != ',' ||
        !ss.eof() || seed < 0 || spec.radius < 0 || !(spec.flip_rate >= 0.0 && spec.flip_rate <= 1.0)) {
      throw ArgumentError("segmenter '" + text +
                          "': expected noisy:<radius>,<rate>,<seed> with radius >= 0, "
                          "rate in [0,1], seed >= 0");
    }
    spec.seed = static_cast<std::uint64_t>(seed);
    return spec;
  }
  throw ArgumentError("unknown segmenter '" + text + "' (oracle | file:<dir> | noisy:<r>,<rate>,<seed>)");
}

std::string SegmenterSpec::to_string() const {
  switch (kind) {
    case Kind::oracle: return "oracle";
    case Kind::file: return "file:" + dir.string();
    case Kind::noisy: {
      std::ostringstream ss;
      ss << "noisy:" << radius << ',' << flip_rate << ',' << seed;
      return ss.str();
    }
  }
  return "oracle";
}

std::unique_ptr<Segmenter> make_segmenter(const SegmenterSpec& spec, const LabeledMesh& mesh) {
  switch (spec.kind) {
    case SegmenterSpec::Kind::file: return std::make_unique<FileSegmenter>(spec.dir);
    case SegmenterSpec::Kind::oracle: return std::make_unique<OracleSegmenter>(mesh);
    case SegmenterSpec::Kind::noisy:
      return std::make_unique<NoisySegmenter>(std::make_unique<OracleSegmenter>(mesh),
                                              spec.radius, spec.flip_rate, spec.seed);
  }
  throw ArgumentError("unknown segmenter kind");
}

}  // namespace toothlift
