#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace toothlift {

using Capacity = std::int64_t;

/// Directed s-t network with integer capacities.
struct FlowNetwork {
  /// Marks an uncuttable arc. Sums of finite capacities must stay below it.
  static constexpr Capacity kInfinite = std::numeric_limits<Capacity>::max() / 4;

  struct Arc {
    int from;
    int to;
    Capacity capacity;
  };

  int node_count = 0;
  int source = 0;
  int sink = 1;
  std::vector<Arc> arcs;

  /// ArgumentError unless source != sink, endpoints are in range and
  /// capacities lie in [0, kInfinite].
  void validate() const;
};

enum class Side : std::uint8_t { source, sink };

struct FlowResult {
  Capacity flow = 0;
  /// Minimum cut: nodes reachable from the source in the residual network
  /// are on the source side.
  std::vector<Side> partition;
};

/// Total capacity of arcs leaving the source side of `partition`.
Capacity cut_capacity(const FlowNetwork& net, const std::vector<Side>& partition);

FlowResult max_flow(const FlowNetwork& net);

/// Boykov-Kolmogorov augmenting-path max-flow on a graph whose terminals are
/// implicit: each node carries a source and a sink capacity.
class GraphCut {
 public:
  explicit GraphCut(int node_count = 0);

  int add_node();
  int node_count() const { return static_cast<int>(nodes_.size()); }
  /// Adds capacity source->i and i->sink.
  void add_terminal_weights(int i, Capacity to_source, Capacity to_sink);
  /// Adds arcs i->j (capacity `forward`) and j->i (capacity `backward`).
  void add_edge(int i, int j, Capacity forward, Capacity backward);

  Capacity solve();
  /// Valid after solve(): true when i is reachable from the source in the
  /// residual graph.
  bool in_source_segment(int i) const;
  /// Valid after solve(): true when i reaches the sink in the residual
  /// graph. Nodes in neither set may go to either side of a minimum cut.
  bool in_sink_segment(int i) const;

 private:
  static constexpr int kNone = -1;      // free node
  static constexpr int kTerminal = -2;  // parent is a terminal
  static constexpr int kOrphan = -3;

  struct Arc {
    int head;
    int next;  // next arc out of the same tail
    Capacity residual;
  };
  struct Node {
    int first = -1;
    int parent = kNone;
    Capacity terminal = 0;  // > 0: residual from source; < 0: residual to sink
    bool sink_tree = false;
    bool active = false;
    long stamp = 0;
    int dist = 0;
  };

  static int sister(int a) { return a ^ 1; }
  void activate(int i);
  int next_active();
  Capacity augment(int middle);
  void adopt(int i);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<int> active_;
  std::size_t active_head_ = 0;
  std::vector<int> orphans_;
  Capacity flow_ = 0;
  long time_ = 0;
  std::vector<bool> source_side_;
  std::vector<bool> sink_side_;
};

}  // namespace toothlift
