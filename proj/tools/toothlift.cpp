// toothlift: command-line front end for the multi-view tooth labelling pipeline.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "toothlift/image_io.hpp"
#include "toothlift/mesh_io.hpp"
#include "toothlift/neural/grad_check.hpp"
#include "toothlift/pipeline.hpp"
#include "toothlift/synth.hpp"

namespace fs = std::filesystem;
using namespace toothlift;

namespace {

// Flags shared by every subcommand; unset optionals leave the config alone.
struct CommonFlags {
  std::optional<fs::path> config_file;
  std::optional<fs::path> out;
  std::optional<int> views, size, jobs, max_sweeps, k;
  std::optional<std::string> segmenter, biou_mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> potts_scale;
  std::optional<fs::path> fdi_table;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "Flat JSON config file");
    app->add_option("--out", out, "Output directory");
    app->add_option("--views", views, "Number of rendered views");
    app->add_option("--size", size, "Rendered image width and height in pixels");
    app->add_option("--segmenter", segmenter, "oracle | file:<dir> | noisy:<radius>,<rate>[,<seed>]");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--jobs", jobs, "Parallel jobs");
    app->add_option("--potts-scale", potts_scale, "Smoothness weight of the refinement");
    app->add_option("--max-sweeps", max_sweeps, "Expansion sweeps over all labels");
    app->add_option("--biou-mode", biou_mode, "label-aware | region-only");
    app->add_option("--k", k, "Neighbourhood size for boundary vertices");
    app->add_option("--fdi-table", fdi_table, "JSON object mapping FDI codes to classes");
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (config_file) c.apply_file(*config_file);
    if (out) c.out = *out;
    if (views) c.views = *views;
    if (size) c.size = *size;
    if (segmenter) c.segmenter = *segmenter;
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (potts_scale) c.potts_scale = *potts_scale;
    if (max_sweeps) c.max_sweeps = *max_sweeps;
    if (biou_mode) c.biou_mode = parse_boundary_mode(*biou_mode);
    if (k) c.k = *k;
    if (fdi_table) c.fdi_table = *fdi_table;
    c.validate();
    return c;
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("toothlift");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("TOOTHLIFT_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Multi-view 2D-to-3D tooth segmentation toolkit"};
  app.require_subcommand(1);

  fs::path mesh_path;
  std::optional<fs::path> labels_path, render_dir, segment_dir, votes_stem, init_labels, pred_path;
  CommonFlags flags;

  auto* render_cmd = app.add_subcommand("render", "Render a mesh into view images and geometry buffers");
  auto* segment_cmd = app.add_subcommand("segment", "Produce per-view label maps for rendered views");
  auto* lift_cmd = app.add_subcommand("lift", "Vote per-view labels onto mesh vertices");
  auto* refine_cmd = app.add_subcommand("refine", "Graph-cut refinement of lifted labels");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predicted labels against ground truth");
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every stage on one mesh or a directory of meshes");
  for (auto* cmd : {render_cmd, segment_cmd, lift_cmd, refine_cmd, evaluate_cmd, pipeline_cmd}) {
    cmd->add_option("mesh", mesh_path, "Mesh file (.obj, .ply, .stl)")->required();
    cmd->add_option("--labels", labels_path, "Per-vertex FDI label JSON");
    flags.attach(cmd);
  }
  for (auto* cmd : {segment_cmd, lift_cmd}) cmd->add_option("--render", render_dir, "Render directory");
  lift_cmd->add_option("--segments", segment_dir, "Directory of view_<id>_labels.png");
  refine_cmd->add_option("--votes", votes_stem, "Vote table stem (<stem>.raw/.json)");
  refine_cmd->add_option("--init", init_labels, "Initial label JSON (default: vote argmax)");
  evaluate_cmd->add_option("--pred", pred_path, "Predicted label JSON")->required();
  evaluate_cmd->get_option("--labels")->required();

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  std::vector<std::string> faults;
  gradcheck_cmd->add_option("--fault", faults, "Double the analytic gradient of these operations")
      ->expected(0, -1)
      ->default_str("dgap_forward/offset_net");
  flags.attach(gradcheck_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Write a procedural labelled mesh");
  std::string synth_kind;
  ArchParams arch;
  GridParams grid;
  synth_cmd->add_option("kind", synth_kind, "arch | grid")->required()->check(CLI::IsMember({"arch", "grid"}));
  synth_cmd->add_option("--teeth", arch.teeth, "Bumps on the arch");
  synth_cmd->add_option("--along", arch.along, "Arch vertices along the strip");
  synth_cmd->add_option("--across", arch.across, "Arch vertices across the strip");
  synth_cmd->add_option("--n", grid.n, "Grid vertices per side");
  synth_cmd->add_option("--tile", grid.tile, "Grid label tile size");
  flags.attach(synth_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig config = flags.resolve();
    const fs::path out = config.out;

    if (render_cmd->parsed()) {
      const auto input = in_stage("load", [&] { return load_input(mesh_path, labels_path, config); });
      in_stage("render", [&] {
        save_render_set(out, render_views(input.mesh, config), &input.mesh);
      });
    } else if (segment_cmd->parsed()) {
      const auto input = in_stage("load", [&] { return load_input(mesh_path, labels_path, config); });
      in_stage("segment", [&] {
        const RenderSet set = load_render_set(render_dir.value_or(out / files::render_dir));
        export_segmentations(out, segment_views(input.mesh, set, config));
      });
    } else if (lift_cmd->parsed()) {
      const auto input = in_stage("load", [&] { return load_input(mesh_path, labels_path, config); });
      in_stage("lift", [&] {
        const RenderSet set = load_render_set(render_dir.value_or(out / files::render_dir));
        const auto segs = file_segment(segment_dir.value_or(out / files::segment_dir), set.cameras);
        const VoteTable votes = lift_views(input.mesh, set, segs, config);
        fs::create_directories(out);
        save_votes(out / files::votes, votes);
        save_labels(out / files::lifted, resolve_votes(votes), input.mesh.jaw(), config.fdi());
      });
    } else if (refine_cmd->parsed()) {
      const auto input = in_stage("load", [&] { return load_input(mesh_path, labels_path, config); });
      in_stage("refine", [&] {
        const VoteTable votes = load_votes(votes_stem.value_or(out / files::votes));
        const Labels init = init_labels ? load_labels(*init_labels, config.fdi()).labels : resolve_votes(votes);
        const ExpansionResult r = refine_votes(input.mesh, votes, init, config);
        fs::create_directories(out);
        save_labels(out / files::refined, r.labels, input.mesh.jaw(), config.fdi());
        save_energy_trace(out / files::trace, r.trace);
      });
    } else if (evaluate_cmd->parsed()) {
      const auto input = in_stage("load", [&] { return load_input(mesh_path, labels_path, config); });
      in_stage("evaluate", [&] {
        const LabelFile pred = load_labels(*pred_path, config.fdi());
        if (pred.labels.size() != input.mesh.vertex_count()) {
          throw AlignmentError("prediction has " + std::to_string(pred.labels.size()) + " labels for " +
                               std::to_string(input.mesh.vertex_count()) + " vertices");
        }
        const MetricsReport report = evaluate_labels(input.mesh, pred.labels, config);
        fs::create_directories(out);
        save_report(out / files::metrics, report);
        std::cout << to_json(report).dump(2) << '\n';
      });
    } else if (pipeline_cmd->parsed()) {
      if (fs::is_directory(mesh_path)) {
        const int failures = run_batch(mesh_path, config);
        if (failures > 0) {
          std::cerr << failures << " mesh(es) failed\n";
          return 1;
        }
      } else {
        const PipelineResult r = run_pipeline(mesh_path, labels_path, config);
        if (r.metrics) std::cout << to_json(*r.metrics).dump(2) << '\n';
      }
    } else if (gradcheck_cmd->parsed()) {
      neural::GradCheckOptions options;
      options.seed = config.seed;
      if (gradcheck_cmd->count("--fault") > 0) {
        options.faults = faults.empty() ? std::vector<std::string>{"dgap_forward/offset_net"} : faults;
      }
      const auto entries = neural::run_gradcheck_suite(options);
      const auto report = neural::gradcheck_report(entries);
      if (flags.out) {
        fs::create_directories(out);
        write_json(out / "gradcheck.json", report);
      }
      std::cout << report.dump(2) << '\n';
      if (!report["passed"].get<bool>()) return 3;
    } else if (synth_cmd->parsed()) {
      arch.seed = grid.seed = config.seed;
      const LabeledMesh mesh = synth_kind == "arch" ? synth_arch(arch) : synth_grid(grid);
      fs::create_directories(out);
      save_ply(out / (synth_kind + ".ply"), mesh);
      save_labels(out / (synth_kind + ".json"), mesh.require_labels(), mesh.jaw(), config.fdi());
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
