#include "toothlift/maxflow.hpp"

#include <algorithm>
#include <string>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

constexpr int kInfiniteDist = std::numeric_limits<int>::max();

Capacity saturating_add(Capacity a, Capacity b) {
  return std::min(FlowNetwork::kInfinite, a + b);
}

}  // namespace

void FlowNetwork::validate() const {
  if (node_count < 2) throw ArgumentError("flow network needs at least two nodes");
  if (source == sink) throw ArgumentError("source and sink must differ");
  const auto in_range = [&](int i) { return i >= 0 && i < node_count; };
  if (!in_range(source) || !in_range(sink)) throw ArgumentError("terminal out of range");
  for (const auto& a : arcs) {
    if (!in_range(a.from) || !in_range(a.to)) {
      throw ArgumentError("arc endpoint out of range");
    }
    if (a.capacity < 0 || a.capacity > kInfinite) {
      throw ArgumentError("arc capacity " + std::to_string(a.capacity) + " outside [0, inf]");
    }
  }
}

Capacity cut_capacity(const FlowNetwork& net, const std::vector<Side>& partition) {
  if (partition.size() != static_cast<std::size_t>(net.node_count)) {
    throw ArgumentError("partition size differs from node count");
  }
  Capacity total = 0;
  for (const auto& a : net.arcs) {
    if (partition[static_cast<std::size_t>(a.from)] == Side::source &&
        partition[static_cast<std::size_t>(a.to)] == Side::sink) {
      total = saturating_add(total, a.capacity);
    }
  }
  return total;
}

FlowResult max_flow(const FlowNetwork& net) {
  net.validate();
  GraphCut graph(net.node_count);
  Capacity direct = 0;
  for (const auto& a : net.arcs) {
    if (a.from == a.to || a.to == net.source || a.from == net.sink) continue;
    if (a.from == net.source && a.to == net.sink) {
      direct = saturating_add(direct, a.capacity);
    } else if (a.from == net.source) {
      graph.add_terminal_weights(a.to, a.capacity, 0);
    } else if (a.to == net.sink) {
      graph.add_terminal_weights(a.from, 0, a.capacity);
    } else {
      graph.add_edge(a.from, a.to, a.capacity, 0);
    }
  }
  FlowResult out;
  out.flow = saturating_add(graph.solve(), direct);
  if (out.flow >= FlowNetwork::kInfinite) {
    throw ArgumentError("unbounded flow: an infinite-capacity path joins source and sink");
  }
  out.partition.resize(static_cast<std::size_t>(net.node_count));
  for (int i = 0; i < net.node_count; ++i) {
    out.partition[static_cast<std::size_t>(i)] =
        (i == net.source || (i != net.sink && graph.in_source_segment(i))) ? Side::source
                                                                           : Side::sink;
  }
  return out;
}

// ------------------------------------------------------------------ GraphCut

GraphCut::GraphCut(int node_count) : nodes_(static_cast<std::size_t>(node_count)) {}

int GraphCut::add_node() {
  nodes_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

void GraphCut::add_terminal_weights(int i, Capacity to_source, Capacity to_sink) {
  auto& n = nodes_.at(static_cast<std::size_t>(i));
  if (n.terminal > 0) to_source = saturating_add(to_source, n.terminal);
  else to_sink = saturating_add(to_sink, -n.terminal);
  flow_ = saturating_add(flow_, std::min(to_source, to_sink));
  n.terminal = to_source - to_sink;
}

void GraphCut::add_edge(int i, int j, Capacity forward, Capacity backward) {
  if (i == j) return;
  auto& ni = nodes_.at(static_cast<std::size_t>(i));
  auto& nj = nodes_.at(static_cast<std::size_t>(j));
  const int a = static_cast<int>(arcs_.size());
  arcs_.push_back({j, ni.first, forward});
  arcs_.push_back({i, nj.first, backward});
  ni.first = a;
  nj.first = a + 1;
}

void GraphCut::activate(int i) {
  auto& n = nodes_[static_cast<std::size_t>(i)];
  if (!n.active) {
    n.active = true;
    active_.push_back(i);
  }
}

int GraphCut::next_active() {
  while (active_head_ < active_.size()) {
    const int i = active_[active_head_++];
    auto& n = nodes_[static_cast<std::size_t>(i)];
    n.active = false;
    if (n.parent != kNone) return i;
  }
  active_.clear();
  active_head_ = 0;
  return -1;
}

Capacity GraphCut::augment(int middle) {
  // middle runs from a source-tree node to a sink-tree node
  Capacity bottleneck = arcs_[static_cast<std::size_t>(middle)].residual;
  int i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (int a; (a = nodes_[static_cast<std::size_t>(i)].parent) != kTerminal;) {
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(a))].residual);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, nodes_[static_cast<std::size_t>(i)].terminal);
  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (int a; (a = nodes_[static_cast<std::size_t>(i)].parent) != kTerminal;) {
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].residual);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, -nodes_[static_cast<std::size_t>(i)].terminal);

  const auto orphan = [&](int k) {
    nodes_[static_cast<std::size_t>(k)].parent = kOrphan;
    orphans_.push_back(k);
  };

  arcs_[static_cast<std::size_t>(sister(middle))].residual += bottleneck;
  arcs_[static_cast<std::size_t>(middle)].residual -= bottleneck;
  i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (int a; (a = nodes_[static_cast<std::size_t>(i)].parent) != kTerminal;) {
    arcs_[static_cast<std::size_t>(a)].residual += bottleneck;
    auto& down = arcs_[static_cast<std::size_t>(sister(a))];
    down.residual -= bottleneck;
    if (down.residual == 0) orphan(i);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  nodes_[static_cast<std::size_t>(i)].terminal -= bottleneck;
  if (nodes_[static_cast<std::size_t>(i)].terminal == 0) orphan(i);

  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (int a; (a = nodes_[static_cast<std::size_t>(i)].parent) != kTerminal;) {
    arcs_[static_cast<std::size_t>(sister(a))].residual += bottleneck;
    auto& up = arcs_[static_cast<std::size_t>(a)];
    up.residual -= bottleneck;
    if (up.residual == 0) orphan(i);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  nodes_[static_cast<std::size_t>(i)].terminal += bottleneck;
  if (nodes_[static_cast<std::size_t>(i)].terminal == 0) orphan(i);

  flow_ = saturating_add(flow_, bottleneck);
  return bottleneck;
}

void GraphCut::adopt(int i) {
  auto& ni = nodes_[static_cast<std::size_t>(i)];
  const bool sink_tree = ni.sink_tree;
  const auto usable = [&](int a0) {
    // residual capacity from the candidate parent towards i (source tree) or
    // from i towards the candidate parent (sink tree)
    return sink_tree ? arcs_[static_cast<std::size_t>(a0)].residual > 0
                     : arcs_[static_cast<std::size_t>(sister(a0))].residual > 0;
  };

  int best_arc = kNone;
  int best_dist = kInfiniteDist;
  for (int a0 = ni.first; a0 != -1; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    if (!usable(a0)) continue;
    int j = arcs_[static_cast<std::size_t>(a0)].head;
    const auto& nj = nodes_[static_cast<std::size_t>(j)];
    if (nj.sink_tree != sink_tree || nj.parent == kNone) continue;

    int d = 0;
    for (;;) {
      auto& nk = nodes_[static_cast<std::size_t>(j)];
      if (nk.stamp == time_) {
        d += nk.dist;
        break;
      }
      const int a = nk.parent;
      ++d;
      if (a == kTerminal) {
        nk.stamp = time_;
        nk.dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInfiniteDist;
        break;
      }
      j = arcs_[static_cast<std::size_t>(a)].head;
    }
    if (d == kInfiniteDist) continue;
    if (d < best_dist) {
      best_arc = a0;
      best_dist = d;
    }
    for (j = arcs_[static_cast<std::size_t>(a0)].head;
         nodes_[static_cast<std::size_t>(j)].stamp != time_;
         j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
      nodes_[static_cast<std::size_t>(j)].stamp = time_;
      nodes_[static_cast<std::size_t>(j)].dist = d--;
    }
  }

  if (best_arc != kNone) {
    ni.parent = best_arc;
    ni.stamp = time_;
    ni.dist = best_dist + 1;
    return;
  }

  for (int a0 = ni.first; a0 != -1; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    const int j = arcs_[static_cast<std::size_t>(a0)].head;
    auto& nj = nodes_[static_cast<std::size_t>(j)];
    const int a = nj.parent;
    if (nj.sink_tree != sink_tree || a == kNone) continue;
    if (usable(a0)) activate(j);
    if (a != kTerminal && a != kOrphan && arcs_[static_cast<std::size_t>(a)].head == i) {
      nj.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  ni.parent = kNone;
}

Capacity GraphCut::solve() {
  active_.clear();
  active_head_ = 0;
  orphans_.clear();
  time_ = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    auto& n = nodes_[k];
    n.parent = kNone;
    n.active = false;
    n.stamp = 0;
    n.dist = 0;
    if (n.terminal != 0) {
      n.sink_tree = n.terminal < 0;
      n.parent = kTerminal;
      n.dist = 1;
      activate(static_cast<int>(k));
    }
  }

  int current = -1;
  for (;;) {
    int i = current;
    if (i < 0 || nodes_[static_cast<std::size_t>(i)].parent == kNone) {
      i = next_active();
      if (i < 0) break;
    }
    current = -1;

    int middle = -1;
    const auto& ni = nodes_[static_cast<std::size_t>(i)];
    for (int a = ni.first; a != -1; a = arcs_[static_cast<std::size_t>(a)].next) {
      // residual along the direction flow would travel through this arc
      const int along = ni.sink_tree ? sister(a) : a;
      if (arcs_[static_cast<std::size_t>(along)].residual == 0) continue;
      const int j = arcs_[static_cast<std::size_t>(a)].head;
      auto& nj = nodes_[static_cast<std::size_t>(j)];
      if (nj.parent == kNone) {
        nj.sink_tree = ni.sink_tree;
        nj.parent = sister(a);
        nj.stamp = ni.stamp;
        nj.dist = ni.dist + 1;
        activate(j);
      } else if (nj.sink_tree != ni.sink_tree) {
        middle = ni.sink_tree ? sister(a) : a;
        break;
      } else if (nj.stamp <= ni.stamp && nj.dist > ni.dist) {
        nj.parent = sister(a);
        nj.stamp = ni.stamp;
        nj.dist = ni.dist + 1;
      }
    }

    ++time_;
    if (middle == -1) continue;
    current = i;
    augment(middle);
    while (!orphans_.empty()) {
      const int o = orphans_.back();
      orphans_.pop_back();
      adopt(o);
    }
  }

  // residual reachability from the source
  source_side_.assign(nodes_.size(), false);
  std::vector<int> stack;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].terminal > 0) {
      source_side_[k] = true;
      stack.push_back(static_cast<int>(k));
    }
  }
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int a = nodes_[static_cast<std::size_t>(u)].first; a != -1;
         a = arcs_[static_cast<std::size_t>(a)].next) {
      const int w = arcs_[static_cast<std::size_t>(a)].head;
      if (arcs_[static_cast<std::size_t>(a)].residual > 0 && !source_side_[static_cast<std::size_t>(w)]) {
        source_side_[static_cast<std::size_t>(w)] = true;
        stack.push_back(w);
      }
    }
  }

  sink_side_.assign(nodes_.size(), false);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].terminal < 0) {
      sink_side_[k] = true;
      stack.push_back(static_cast<int>(k));
    }
  }
  while (!stack.empty()) {
    const int w = stack.back();
    stack.pop_back();
    for (int a = nodes_[static_cast<std::size_t>(w)].first; a != -1;
         a = arcs_[static_cast<std::size_t>(a)].next) {
      const int u = arcs_[static_cast<std::size_t>(a)].head;
      if (arcs_[static_cast<std::size_t>(sister(a))].residual > 0 && !sink_side_[static_cast<std::size_t>(u)]) {
        sink_side_[static_cast<std::size_t>(u)] = true;
        stack.push_back(u);
      }
    }
  }
  return flow_;
}

bool GraphCut::in_sink_segment(int i) const {
  return sink_side_.at(static_cast<std::size_t>(i));
}

bool GraphCut::in_source_segment(int i) const {
  return source_side_.at(static_cast<std::size_t>(i));
}

}  // namespace toothlift
