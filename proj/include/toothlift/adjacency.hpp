#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "toothlift/mesh.hpp"

namespace toothlift {

/// Undirected mesh edge with u < v.
struct Edge {
  int u;
  int v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Static 3-d tree over a point set; exact k-nearest-neighbour queries with
/// ties broken by lower point index.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const Vertices& points);

  /// The k points closest to `query` ordered by (distance, index), skipping
  /// the point with index `exclude` (pass -1 to keep all).
  std::vector<int> nearest(const Eigen::Vector3d& query, int k, int exclude = -1) const;
  const Vertices& points() const { return points_; }

 private:
  struct Node {
    int begin, end;       // range in order_
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(int begin, int end);

  Vertices points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Edge-connectivity and spatial lookups for one mesh.
class AdjacencyIndex {
 public:
  explicit AdjacencyIndex(const LabeledMesh& mesh);

  Eigen::Index vertex_count() const { return static_cast<Eigen::Index>(offsets_.size()) - 1; }
  /// Edge-connected neighbours of v, ascending.
  std::span<const int> neighbors(int v) const;
  /// Unique undirected edges, sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertices& points() const { return tree_.points(); }
  const KdTree& tree() const { return tree_; }

 private:
  std::vector<int> offsets_;
  std::vector<int> adjacent_;
  std::vector<Edge> edges_;
  KdTree tree_;
};

/// How "neighbourhood of size k" is read for boundary detection.
enum class NeighborhoodKind { nearest, hops };

/// The k Euclidean nearest vertices of v (excluding v), ordered by
/// (distance, index). ArgumentError unless 1 <= k < vertex count.
std::vector<int> k_neighborhood(const AdjacencyIndex& index, int v, int k);

/// Vertices reachable from v within `hops` edges, excluding v, ascending.
std::vector<int> k_ring(const AdjacencyIndex& index, int v, int hops);

/// Neighbourhood of every vertex under the chosen reading.
std::vector<std::vector<int>> all_neighborhoods(const AdjacencyIndex& index, int k,
                                                NeighborhoodKind kind);

}  // namespace toothlift
