#include "toothlift/pipeline.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "toothlift/image_io.hpp"
#include "toothlift/mesh_io.hpp"

namespace toothlift {

namespace fs = std::filesystem;

namespace {

// Calls fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// is rethrown after all workers stop.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

fs::path view_stem(const fs::path& dir, int view_id, const char* suffix) {
  return dir / ("view_" + std::to_string(view_id) + suffix);
}

template <typename T, typename Src>
RawBuffer<T> planar(const std::vector<const Src*>& channels) {
  RawBuffer<T> buf;
  buf.height = static_cast<int>(channels.front()->rows());
  buf.width = static_cast<int>(channels.front()->cols());
  buf.channels = static_cast<int>(channels.size());
  buf.data.reserve(static_cast<std::size_t>(buf.width) * buf.height * channels.size());
  for (const auto* c : channels) {
    for (Eigen::Index i = 0; i < c->size(); ++i) buf.data.push_back(static_cast<T>(c->data()[i]));
  }
  return buf;
}

template <typename T>
Image<T> channel(const RawBuffer<T>& buf, int c) {
  Image<T> img(buf.height, buf.width);
  const auto plane = static_cast<std::size_t>(buf.width) * static_cast<std::size_t>(buf.height);
  std::copy_n(buf.data.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(c)), plane, img.data());
  return img;
}

template <typename T>
RawBuffer<T> read_checked(const fs::path& stem, const Camera& cam, int channels) {
  auto buf = read_raw<T>(stem);
  if (buf.width != cam.width || buf.height != cam.height || buf.channels != channels) {
    throw FormatError(stem.string() + ": buffer shape does not match the camera");
  }
  return buf;
}

nlohmann::json matrix_json(const Eigen::Matrix4d& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
  return rows;
}

Eigen::Matrix4d matrix_from(const nlohmann::json& j) {
  Eigen::Matrix4d m;
  if (!j.is_array() || j.size() != 4) throw FormatError("camera matrix must be 4x4");
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw FormatError("camera matrix must be 4x4");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

template <typename F>
auto timed(const char* stage, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  auto result = in_stage(stage, std::forward<F>(f));
  spdlog::info("{}: {:.3f} s", stage,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return result;
}

void write_metrics(const fs::path& path, const MetricsReport& report) { save_report(path, report); }

}  // namespace

NormalizedMesh load_input(const fs::path& mesh_path, const std::optional<fs::path>& labels_path,
                          const PipelineConfig& config) {
  const LabeledMesh raw = load_mesh(mesh_path, labels_path, config.fdi());
  return normalize(raw, config.up_axis);
}

RenderSet render_views(const LabeledMesh& mesh, const PipelineConfig& config) {
  RenderSet set;
  set.cameras = make_view_set(config.views, config.size, config.size);
  set.outputs.resize(set.cameras.size());
  parallel_for(set.cameras.size(), config.jobs, [&](std::size_t i) { set.outputs[i] = render(mesh, set.cameras[i]); });
  return set;
}

nlohmann::json cameras_to_json(const std::vector<Camera>& cameras) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cameras) {
    arr.push_back({{"view_id", c.view_id},
                   {"width", c.width},
                   {"height", c.height},
                   {"projection", c.kind == ProjectionKind::orthographic ? "orthographic" : "perspective"},
                   {"view", matrix_json(c.view)},
                   {"clip", matrix_json(c.clip)}});
  }
  return arr;
}

std::vector<Camera> cameras_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("cameras must be a JSON array");
  std::vector<Camera> out;
  try {
    for (const auto& e : j) {
      Camera c;
      c.view_id = e.at("view_id").get<int>();
      c.width = e.at("width").get<int>();
      c.height = e.at("height").get<int>();
      const auto kind = e.at("projection").get<std::string>();
      if (kind == "orthographic") c.kind = ProjectionKind::orthographic;
      else if (kind == "perspective") c.kind = ProjectionKind::perspective;
      else throw FormatError("unknown projection '" + kind + "'");
      c.view = matrix_from(e.at("view"));
      c.clip = matrix_from(e.at("clip"));
      if (c.width < 1 || c.height < 1) throw FormatError("camera image size must be positive");
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("cameras: ") + e.what());
  }
  return out;
}

void save_render_set(const fs::path& dir, const RenderSet& set, const LabeledMesh* labelled) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "cameras.json");
    if (!out) throw IoError("cannot write " + (dir / "cameras.json").string());
    out << cameras_to_json(set.cameras).dump(2) << '\n';
  }
  for (const auto& o : set.outputs) {
    write_png(view_stem(dir, o.view_id, ".png"), o.rgb);
    write_raw(view_stem(dir, o.view_id, "_face_id"), planar<std::int32_t>(std::vector{&o.face_id}));
    write_raw(view_stem(dir, o.view_id, "_bary"),
              planar<double>(std::vector{&o.bary[0], &o.bary[1], &o.bary[2]}));
    write_raw(view_stem(dir, o.view_id, "_depth"), planar<double>(std::vector{&o.depth}));
    if (labelled && labelled->has_labels()) {
      const MaskMap masks = render_mask_map(*labelled, o);
      std::vector<const Image<float>*> ch;
      for (const auto& c : masks.channels) ch.push_back(&c);
      write_raw(view_stem(dir, o.view_id, "_masks"), planar<float>(ch));
    }
  }
}

RenderSet load_render_set(const fs::path& dir) {
  std::ifstream in(dir / "cameras.json");
  if (!in) throw IoError("cannot read " + (dir / "cameras.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "cameras.json").string() + ": " + e.what());
  }
  RenderSet set;
  set.cameras = cameras_from_json(j);
  for (const auto& cam : set.cameras) {
    RenderOutput o;
    o.view_id = cam.view_id;
    o.face_id = channel(read_checked<std::int32_t>(view_stem(dir, cam.view_id, "_face_id"), cam, 1), 0);
    const auto bary = read_checked<double>(view_stem(dir, cam.view_id, "_bary"), cam, 3);
    for (int c = 0; c < 3; ++c) o.bary[static_cast<std::size_t>(c)] = channel(bary, c);
    o.depth = channel(read_checked<double>(view_stem(dir, cam.view_id, "_depth"), cam, 1), 0);
    set.outputs.push_back(std::move(o));
  }
  return set;
}

std::vector<ViewSegmentation> segment_views(const LabeledMesh& mesh, const RenderSet& set,
                                            const PipelineConfig& config) {
  const SegmenterSpec spec = config.segmenter_spec();
  if (spec.needs_labels() && !mesh.has_labels()) {
    throw StateError("segmenter '" + spec.to_string() + "' needs ground-truth labels");
  }
  return make_segmenter(spec, mesh)->segment(set.outputs, set.cameras);
}

VoteTable lift_views(const LabeledMesh& mesh, const RenderSet& set, const std::vector<ViewSegmentation>& segs,
                     const PipelineConfig& config) {
  if (set.outputs.size() != segs.size()) {
    throw ArgumentError(std::to_string(set.outputs.size()) + " rendered views but " +
                        std::to_string(segs.size()) + " segmentations");
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].view_id != set.outputs[i].view_id) throw ArgumentError("segmentation views are out of order");
  }
  std::vector<Image<int>> maps(set.outputs.size());
  parallel_for(maps.size(), config.jobs, [&](std::size_t i) { maps[i] = vertex_map(set.outputs[i], mesh); });
  return accumulate_votes(mesh.vertex_count(), maps, segs);
}

ExpansionResult refine_votes(const LabeledMesh& mesh, const VoteTable& table, const Labels& init,
                             const PipelineConfig& config) {
  const EnergyModel model = build_energy(mesh, table, config.potts_scale);
  return alpha_expansion(model, init, config.max_sweeps);
}

MetricsReport evaluate_labels(const LabeledMesh& mesh, const Labels& pred, const PipelineConfig& config) {
  const AdjacencyIndex index(mesh);
  return evaluate(pred, mesh.require_labels(), index, config.evaluation());
}

PipelineResult run_pipeline(const fs::path& mesh_path, const std::optional<fs::path>& labels_path,
                            const PipelineConfig& config) {
  in_stage("config", [&] { config.validate(); });
  const fs::path out = config.out;
  in_stage("output", [&] { fs::create_directories(out); });
  const FdiTable table = in_stage("config", [&] { return config.fdi(); });

  const NormalizedMesh input = timed("load", [&] { return load_input(mesh_path, labels_path, config); });
  const LabeledMesh& mesh = input.mesh;

  const RenderSet set = timed("render", [&] {
    RenderSet s = render_views(mesh, config);
    save_render_set(out / files::render_dir, s);
    return s;
  });
  const auto segs = timed("segment", [&] {
    auto s = segment_views(mesh, set, config);
    export_segmentations(out / files::segment_dir, s);
    return s;
  });

  PipelineResult result;
  const VoteTable votes = timed("lift", [&] {
    VoteTable v = lift_views(mesh, set, segs, config);
    save_votes(out / files::votes, v);
    result.lifted = resolve_votes(v);
    save_labels(out / files::lifted, result.lifted, mesh.jaw(), table);
    return v;
  });
  timed("refine", [&] {
    const ExpansionResult r = refine_votes(mesh, votes, result.lifted, config);
    result.refined = r.labels;
    result.sweeps = r.sweeps;
    save_labels(out / files::refined, result.refined, mesh.jaw(), table);
    save_energy_trace(out / files::trace, r.trace);
    return 0;
  });
  if (mesh.has_labels()) {
    timed("evaluate", [&] {
      result.lifted_metrics = evaluate_labels(mesh, result.lifted, config);
      result.metrics = evaluate_labels(mesh, result.refined, config);
      write_metrics(out / files::metrics_lifted, *result.lifted_metrics);
      write_metrics(out / files::metrics, *result.metrics);
      return 0;
    });
  } else {
    spdlog::info("no ground-truth labels; skipping evaluation");
  }
  return result;
}

int run_batch(const fs::path& dir, const PipelineConfig& config) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> meshes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".obj" || ext == ".ply" || ext == ".stl")) meshes.push_back(entry.path());
  }
  std::sort(meshes.begin(), meshes.end());
  fs::create_directories(config.out);

  std::vector<std::optional<MetricsReport>> reports(meshes.size());
  std::vector<bool> failed(meshes.size(), false);
  parallel_for(meshes.size(), config.jobs, [&](std::size_t i) {
    PipelineConfig c = config;
    c.jobs = 1;
    c.out = config.out / meshes[i].stem();
    fs::path labels = meshes[i];
    labels.replace_extension(".json");
    try {
      const auto r = run_pipeline(meshes[i], fs::exists(labels) ? std::optional(labels) : std::nullopt, c);
      reports[i] = r.metrics;
    } catch (const Error& e) {
      spdlog::error("{}: {}", meshes[i].filename().string(), e.what());
      failed[i] = true;
    }
  });

  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (reports[i]) rows.emplace_back(meshes[i].stem().string(), *reports[i]);
  }
  save_report_csv(config.out / files::summary, rows);
  return static_cast<int>(std::count(failed.begin(), failed.end(), true));
}

}  // namespace toothlift
