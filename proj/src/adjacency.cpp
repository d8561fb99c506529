#include "toothlift/adjacency.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

constexpr int kLeafSize = 8;

// (squared distance, index); lexicographic order gives the tie-break.
using Candidate = std::pair<double, int>;

}  // namespace

KdTree::KdTree(const Vertices& points) : points_(points) {
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::RowVector3d lo = points_.row(order_[begin]);
  Eigen::RowVector3d hi = lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[i]));
    hi = hi.cwiseMax(points_.row(order_[i]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_(a, axis), pb = points_(b, axis);
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<int> KdTree::nearest(const Eigen::Vector3d& query, int k, int exclude) const {
  std::priority_queue<Candidate> best;  // max-heap: worst candidate on top
  if (k <= 0 || nodes_.empty()) return {};
  const auto consider = [&](int i) {
    if (i == exclude) return;
    const double d = (points_.row(i).transpose() - query).squaredNorm();
    const Candidate c{d, i};
    if (static_cast<int>(best.size()) < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };
  const auto search = [&](auto&& self, int id) -> void {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) consider(order_[i]);
      return;
    }
    // points with coordinate == split may sit on either side, so both
    // subtrees stay eligible when the plane distance ties the worst candidate
    const double diff = query[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    if (static_cast<int>(best.size()) < k || diff * diff <= best.top().first) {
      self(self, far);
    }
  };
  search(search, 0);

  std::vector<int> out(best.size());
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    *it = best.top().second;
    best.pop();
  }
  return out;
}

AdjacencyIndex::AdjacencyIndex(const LabeledMesh& mesh) : tree_(mesh.vertices()) {
  const auto n = static_cast<std::size_t>(mesh.vertex_count());
  edges_.reserve(static_cast<std::size_t>(mesh.face_count()) * 3);
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.faces()(f, k), b = mesh.faces()(f, (k + 1) % 3);
      edges_.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& x, const Edge& y) { return std::pair(x.u, x.v) < std::pair(y.u, y.v); });
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  offsets_.assign(n + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[static_cast<std::size_t>(e.u) + 1];
    ++offsets_[static_cast<std::size_t>(e.v) + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacent_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacent_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.u)]++)] = e.v;
    adjacent_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.v)]++)] = e.u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(adjacent_.begin() + offsets_[v], adjacent_.begin() + offsets_[v + 1]);
  }
}

std::span<const int> AdjacencyIndex::neighbors(int v) const {
  const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
  const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
  return {adjacent_.data() + b, e - b};
}

std::vector<int> k_neighborhood(const AdjacencyIndex& index, int v, int k) {
  const auto n = index.vertex_count();
  if (v < 0 || v >= n) throw ArgumentError("vertex " + std::to_string(v) + " out of range");
  if (k < 1 || k >= n) {
    throw ArgumentError("k = " + std::to_string(k) + " must lie in 1.." +
                        std::to_string(n - 1));
  }
  return index.tree().nearest(index.points().row(v).transpose(), k, v);
}

std::vector<int> k_ring(const AdjacencyIndex& index, int v, int hops) {
  const auto n = index.vertex_count();
  if (v < 0 || v >= n) throw ArgumentError("vertex " + std::to_string(v) + " out of range");
  if (hops < 1) throw ArgumentError("hop count must be >= 1");
  std::vector<int> depth(static_cast<std::size_t>(n), -1);
  std::vector<int> frontier{v}, out;
  depth[static_cast<std::size_t>(v)] = 0;
  for (int h = 1; h <= hops && !frontier.empty(); ++h) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int w : index.neighbors(u)) {
        if (depth[static_cast<std::size_t>(w)] < 0) {
          depth[static_cast<std::size_t>(w)] = h;
          next.push_back(w);
          out.push_back(w);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> all_neighborhoods(const AdjacencyIndex& index, int k,
                                                NeighborhoodKind kind) {
  const auto n = static_cast<int>(index.vertex_count());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    out[static_cast<std::size_t>(v)] =
        kind == NeighborhoodKind::nearest ? k_neighborhood(index, v, k) : k_ring(index, v, k);
  }
  return out;
}

}  // namespace toothlift
