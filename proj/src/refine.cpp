#include "toothlift/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "toothlift/error.hpp"
#include "toothlift/maxflow.hpp"

namespace toothlift {
namespace {

constexpr std::int64_t kMaxQuantized = std::int64_t{1} << 40;

std::int64_t quantize(double cost) {
  return std::min<std::int64_t>(kMaxQuantized, std::llround(std::min(cost * kEnergyQuantum,
                                                                     static_cast<double>(kMaxQuantized))));
}

void check_labels(const EnergyModel& model, const Labels& labels) {
  if (labels.size() != model.vertex_count()) {
    throw ArgumentError("label count " + std::to_string(labels.size()) + " != vertex count " +
                        std::to_string(model.vertex_count()));
  }
  validate_labels(labels);
}

struct QuantizedModel {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> unary;
  std::vector<std::int64_t> pairwise;

  explicit QuantizedModel(const EnergyModel& m)
      : unary(m.unary.unaryExpr([](double c) { return quantize(c); })),
        pairwise(m.edges.size()) {
    for (std::size_t e = 0; e < m.edges.size(); ++e) pairwise[e] = quantize(m.pairwise(e));
  }

  std::int64_t energy(const EnergyModel& m, const Labels& labels) const {
    std::int64_t total = 0;
    for (Eigen::Index v = 0; v < labels.size(); ++v) total += unary(v, labels[v]);
    for (std::size_t e = 0; e < m.edges.size(); ++e) {
      if (labels[m.edges[e].u] != labels[m.edges[e].v]) total += pairwise[e];
    }
    return total;
  }
};

// One expansion move: every vertex either keeps its label (source side) or
// switches to alpha (sink side).
Labels expansion_move(const EnergyModel& m, const QuantizedModel& q, const Labels& labels,
                      int alpha) {
  const auto n = static_cast<int>(labels.size());
  std::vector<std::int64_t> keep(static_cast<std::size_t>(n)), take(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    keep[static_cast<std::size_t>(v)] = q.unary(v, labels[v]);
    take[static_cast<std::size_t>(v)] = q.unary(v, alpha);
  }
  GraphCut graph(n);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const int p = m.edges[e].u, r = m.edges[e].v;
    const std::int64_t w = q.pairwise[e];
    const std::int64_t a = labels[p] != labels[r] ? w : 0;  // keep, keep
    const std::int64_t b = labels[p] != alpha ? w : 0;      // keep, switch
    const std::int64_t c = alpha != labels[r] ? w : 0;      // switch, keep
    // switch, switch costs 0
    take[static_cast<std::size_t>(p)] += c - a;
    take[static_cast<std::size_t>(r)] -= c;
    const std::int64_t coupling = b + c - a;  // >= 0 for Potts
    if (coupling > 0) graph.add_edge(p, r, coupling, 0);
  }
  for (int v = 0; v < n; ++v) {
    const std::int64_t k = keep[static_cast<std::size_t>(v)], t = take[static_cast<std::size_t>(v)];
    const std::int64_t base = std::min(k, t);
    graph.add_terminal_weights(v, t - base, k - base);
  }
  graph.solve();
  Labels out = labels;
  for (int v = 0; v < n; ++v) {
    if (graph.in_sink_segment(v)) out[v] = alpha;
  }
  return out;
}

}  // namespace

void EnergyModel::validate() const {
  if (!unary.allFinite() || (unary.array() < 0.0).any()) {
    throw ArgumentError("unary costs must be finite and non-negative");
  }
  if (edge_weights.size() != static_cast<Eigen::Index>(edges.size())) {
    throw ArgumentError("one weight per edge required");
  }
  if (!edge_weights.allFinite() || (edge_weights.array() < 0.0).any()) {
    throw ArgumentError("edge weights must be finite and non-negative");
  }
  if (!std::isfinite(potts_scale) || potts_scale < 0.0) {
    throw ArgumentError("potts scale must be finite and non-negative");
  }
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= unary.rows() || e.v >= unary.rows() || e.u == e.v) {
      throw ArgumentError("edge references an invalid vertex");
    }
  }
}

EnergyModel build_energy(const LabeledMesh& mesh, const VoteTable& table, double potts_scale,
                         const EnergyOptions& options) {
  if (table.rows() != mesh.vertex_count()) {
    throw ArgumentError("vote table has " + std::to_string(table.rows()) + " rows for " +
                        std::to_string(mesh.vertex_count()) + " vertices");
  }
  if (!(options.vote_prior > 0.0)) throw ArgumentError("vote prior must be positive");
  if (!std::isfinite(potts_scale) || potts_scale < 0.0) {
    throw ArgumentError("potts scale must be finite and non-negative");
  }

  EnergyModel model;
  model.potts_scale = potts_scale;
  const Eigen::ArrayXXd counts = table.cast<double>().array();
  const Eigen::ArrayXd denom = counts.rowwise().sum() + kNumClasses * options.vote_prior;
  model.unary = -((counts + options.vote_prior).colwise() / denom).log().matrix();

  const AdjacencyIndex index(mesh);
  model.edges = index.edges();
  const auto edge_id = [&](int a, int b) {
    const Edge key{std::min(a, b), std::max(a, b)};
    const auto it = std::lower_bound(model.edges.begin(), model.edges.end(), key,
                                     [](const Edge& x, const Edge& y) {
                                       return std::pair(x.u, x.v) < std::pair(y.u, y.v);
                                     });
    return static_cast<std::size_t>(it - model.edges.begin());
  };
  std::vector<std::vector<int>> faces_of(model.edges.size());
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    for (int k = 0; k < 3; ++k) {
      faces_of[edge_id(mesh.faces()(f, k), mesh.faces()(f, (k + 1) % 3))].push_back(static_cast<int>(f));
    }
  }
  std::vector<Eigen::Vector3d> normals(static_cast<std::size_t>(mesh.face_count()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) normals[static_cast<std::size_t>(f)] = mesh.face_normal(f);

  model.edge_weights.resize(static_cast<Eigen::Index>(model.edges.size()));
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    const auto& fs = faces_of[e];
    double cos_theta = 1.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      for (std::size_t j = i + 1; j < fs.size(); ++j) {
        cos_theta = std::min(cos_theta, normals[static_cast<std::size_t>(fs[i])].dot(
                                            normals[static_cast<std::size_t>(fs[j])]));
      }
    }
    const double length =
        (mesh.vertices().row(model.edges[e].u) - mesh.vertices().row(model.edges[e].v)).norm();
    model.edge_weights[static_cast<Eigen::Index>(e)] =
        length * std::exp(-options.crease_sharpness * (1.0 - cos_theta));
  }
  if (options.relative_length && !model.edges.empty()) {
    double total = 0.0;
    for (const auto& e : model.edges) total += (mesh.vertices().row(e.u) - mesh.vertices().row(e.v)).norm();
    const double mean = total / static_cast<double>(model.edges.size());
    if (mean > 0.0) model.edge_weights /= mean;
  }
  return model;
}

double energy(const EnergyModel& model, const Labels& labels) {
  check_labels(model, labels);
  double total = 0.0;
  for (Eigen::Index v = 0; v < labels.size(); ++v) total += model.unary(v, labels[v]);
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    if (labels[model.edges[e].u] != labels[model.edges[e].v]) total += model.pairwise(e);
  }
  return total;
}

std::int64_t quantized_energy(const EnergyModel& model, const Labels& labels) {
  check_labels(model, labels);
  return QuantizedModel(model).energy(model, labels);
}

ExpansionResult alpha_expansion(const EnergyModel& model, const Labels& init, int max_sweeps) {
  model.validate();
  check_labels(model, init);
  if (max_sweeps < 0) throw ArgumentError("max_sweeps must be >= 0");

  const QuantizedModel q(model);
  ExpansionResult result;
  result.labels = init;
  std::int64_t current = q.energy(model, result.labels);
  double current_real = energy(model, result.labels);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (int alpha = 0; alpha < kNumClasses; ++alpha) {
      Labels proposal = expansion_move(model, q, result.labels, alpha);
      const std::int64_t e = q.energy(model, proposal);
      const bool accept = e < current;
      if (accept) {
        result.labels = std::move(proposal);
        current = e;
        current_real = energy(model, result.labels);
        improved = true;
      }
      result.trace.push_back({sweep, alpha, current_real, accept});
    }
    result.sweeps = sweep + 1;
    if (!improved) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Labels alpha_expansion(const LabeledMesh& mesh, const EnergyModel& model, const Labels& init,
                       int max_sweeps) {
  if (mesh.vertex_count() != model.vertex_count()) {
    throw ArgumentError("energy model does not match the mesh");
  }
  return alpha_expansion(model, init, max_sweeps).labels;
}

void save_energy_trace(const std::filesystem::path& path, const std::vector<ExpansionStep>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sweep,label,energy,accepted\n";
  out.precision(17);
  for (const auto& s : trace) {
    out << s.sweep << ',' << s.label << ',' << s.energy << ',' << (s.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace toothlift
