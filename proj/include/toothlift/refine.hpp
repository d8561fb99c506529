#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "toothlift/adjacency.hpp"
#include "toothlift/lifting.hpp"
#include "toothlift/mesh.hpp"

namespace toothlift {

using UnaryCosts = Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor>;

/// Multi-label energy on a mesh:
///   E(L) = sum_v unary(v, L_v) + sum_e potts_scale * edge_weight(e) * [L_u != L_w]
struct EnergyModel {
  UnaryCosts unary;
  std::vector<Edge> edges;
  Eigen::VectorXd edge_weights;
  double potts_scale = 1.0;

  double pairwise(std::size_t e) const { return potts_scale * edge_weights[static_cast<Eigen::Index>(e)]; }
  Eigen::Index vertex_count() const { return unary.rows(); }
  /// ArgumentError unless all costs are finite and non-negative and edges
  /// reference valid vertices.
  void validate() const;
};

struct EnergyOptions {
  /// Additive vote smoothing.
  double vote_prior = 1.0;
  /// Crease sensitivity of the edge weights.
  double crease_sharpness = 5.0;
  /// Measure edge length in units of the mesh's mean edge length, so the
  /// potts scale does not depend on mesh resolution or normalisation.
  bool relative_length = true;
};

/// unary(v, c) = -log((votes(v, c) + prior) / (row_sum(v) + 17 * prior));
/// edge weight = length * exp(-sharpness * (1 - cos(dihedral))), where the
/// dihedral is measured between the normals of the faces sharing the edge
/// (0 on boundary edges, the sharpest pair on non-manifold edges).
EnergyModel build_energy(const LabeledMesh& mesh, const VoteTable& table, double potts_scale,
                         const EnergyOptions& options = {});

/// Fixed-point scale applied to every cost before the graph cuts.
inline constexpr double kEnergyQuantum = 1e6;

double energy(const EnergyModel& model, const Labels& labels);
/// Energy in quantized units, the quantity the expansion moves minimise
/// exactly. Each cost is rounded to the nearest multiple of 1/kEnergyQuantum
/// and saturated at 2^40 units.
std::int64_t quantized_energy(const EnergyModel& model, const Labels& labels);

struct ExpansionStep {
  int sweep;
  int label;
  double energy;  // after the move (unchanged when rejected)
  bool accepted;
};

struct ExpansionResult {
  Labels labels;
  std::vector<ExpansionStep> trace;
  int sweeps = 0;
  bool converged = false;  // last sweep accepted no move
};

/// Alpha-expansion over labels 0..16 in ascending order per sweep, one
/// binary graph cut per label. A move is accepted only if it strictly lowers
/// the quantized energy; on cost ties a vertex keeps its current label.
/// Stops after a sweep without accepted moves or after `max_sweeps`.
ExpansionResult alpha_expansion(const EnergyModel& model, const Labels& init, int max_sweeps);
Labels alpha_expansion(const LabeledMesh& mesh, const EnergyModel& model, const Labels& init,
                       int max_sweeps);

/// CSV with header "sweep,label,energy,accepted".
void save_energy_trace(const std::filesystem::path& path, const std::vector<ExpansionStep>& trace);

}  // namespace toothlift
