#include "boxseg/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <stdexcept>

namespace boxseg {

void FlowNetwork::validate() const {
  if (n < 0 || t_links.size() != std::size_t(n))
    throw std::invalid_argument("FlowNetwork: t_links size does not match node count");
  for (const TerminalCaps& t : t_links)
    if (!(t.source >= 0 && t.sink >= 0 && std::isfinite(t.source) && std::isfinite(t.sink)))
      throw std::invalid_argument("FlowNetwork: terminal capacities must be finite and >= 0");
  for (const NeighbourLink& l : n_links) {
    if (l.i < 0 || l.j < 0 || l.i >= n || l.j >= n || l.i == l.j)
      throw std::invalid_argument("FlowNetwork: bad n-link endpoints");
    if (!(l.cap >= 0 && std::isfinite(l.cap)))
      throw std::invalid_argument("FlowNetwork: n-link capacity must be finite and >= 0");
  }
}

double cut_capacity(const FlowNetwork& g, const std::vector<CutSide>& side) {
  double total = 0.0;
  for (int i = 0; i < g.n; ++i)
    total += side[i] == CutSide::kSource ? g.t_links[i].sink : g.t_links[i].source;
  for (const NeighbourLink& l : g.n_links)
    if (side[l.i] != side[l.j]) total += l.cap;
  return total;
}

namespace {

// Residuals at or below this are treated as saturated.
constexpr double kResidualTol = 1e-12;

class TwoTreeMaxFlow {
 public:
  explicit TwoTreeMaxFlow(const FlowNetwork& g)
      : n_(g.n),
        out_(g.n),
        head_(2 * g.n_links.size()),
        residual_(2 * g.n_links.size()),
        terminal_(g.n),
        parent_(g.n, kFree),
        in_sink_tree_(g.n, false),
        queued_(g.n, false) {
    for (std::size_t k = 0; k < g.n_links.size(); ++k) {
      const NeighbourLink& l = g.n_links[k];
      head_[2 * k] = l.j;
      head_[2 * k + 1] = l.i;
      residual_[2 * k] = residual_[2 * k + 1] = l.cap;
      out_[l.i].push_back(int(2 * k));
      out_[l.j].push_back(int(2 * k + 1));
    }
    for (int i = 0; i < n_; ++i) {
      const TerminalCaps& t = g.t_links[i];
      flow_ += std::min(t.source, t.sink);
      terminal_[i] = t.source - t.sink;
      if (terminal_[i] > kResidualTol) {
        parent_[i] = kTerminal;
        activate(i);
      } else if (terminal_[i] < -kResidualTol) {
        parent_[i] = kTerminal;
        in_sink_tree_[i] = true;
        activate(i);
      } else {
        terminal_[i] = 0.0;
      }
    }
  }

  CutResult run() {
    while (!active_.empty()) {
      const int i = active_.front();
      active_.pop_front();
      queued_[i] = false;
      if (parent_[i] == kFree) continue;
      const int bridge = grow(i);
      if (bridge < 0) continue;
      augment(bridge);
      adopt();
      if (parent_[i] != kFree) activate(i, /*front=*/true);
    }
    return extract_cut();
  }

 private:
  static constexpr int kFree = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;

  static int sister(int a) { return a ^ 1; }
  int tail(int a) const { return head_[sister(a)]; }

  void activate(int i, bool front = false) {
    if (queued_[i]) return;
    queued_[i] = true;
    if (front)
      active_.push_front(i);
    else
      active_.push_back(i);
  }

  // Expands the tree of `i` by one layer. Returns an arc from a source-tree
  // node to a sink-tree node if the trees touch, else -1.
  int grow(int i) {
    for (int a : out_[i]) {
      const int j = head_[a];
      if (!in_sink_tree_[i]) {
        if (residual_[a] <= kResidualTol) continue;
        if (parent_[j] == kFree) {
          in_sink_tree_[j] = false;
          parent_[j] = sister(a);
          activate(j);
        } else if (in_sink_tree_[j]) {
          return a;
        }
      } else {
        if (residual_[sister(a)] <= kResidualTol) continue;
        if (parent_[j] == kFree) {
          in_sink_tree_[j] = true;
          parent_[j] = sister(a);
          activate(j);
        } else if (!in_sink_tree_[j]) {
          return sister(a);
        }
      }
    }
    return -1;
  }

  void make_orphan(int i) {
    parent_[i] = kOrphan;
    orphans_.push_back(i);
  }

  void augment(int bridge) {
    double bottleneck = residual_[bridge];
    for (int i = tail(bridge);; ) {
      const int a = parent_[i];
      if (a == kTerminal) {
        bottleneck = std::min(bottleneck, terminal_[i]);
        break;
      }
      bottleneck = std::min(bottleneck, residual_[sister(a)]);
      i = head_[a];
    }
    for (int i = head_[bridge];; ) {
      const int a = parent_[i];
      if (a == kTerminal) {
        bottleneck = std::min(bottleneck, -terminal_[i]);
        break;
      }
      bottleneck = std::min(bottleneck, residual_[a]);
      i = head_[a];
    }

    residual_[sister(bridge)] += bottleneck;
    residual_[bridge] -= bottleneck;
    if (residual_[bridge] <= kResidualTol) residual_[bridge] = 0.0;

    for (int i = tail(bridge);; ) {
      const int a = parent_[i];
      if (a == kTerminal) {
        terminal_[i] -= bottleneck;
        if (terminal_[i] <= kResidualTol) {
          terminal_[i] = 0.0;
          make_orphan(i);
        }
        break;
      }
      residual_[a] += bottleneck;
      residual_[sister(a)] -= bottleneck;
      const int next = head_[a];
      if (residual_[sister(a)] <= kResidualTol) {
        residual_[sister(a)] = 0.0;
        make_orphan(i);
      }
      i = next;
    }
    for (int i = head_[bridge];; ) {
      const int a = parent_[i];
      if (a == kTerminal) {
        terminal_[i] += bottleneck;
        if (terminal_[i] >= -kResidualTol) {
          terminal_[i] = 0.0;
          make_orphan(i);
        }
        break;
      }
      residual_[sister(a)] += bottleneck;
      residual_[a] -= bottleneck;
      const int next = head_[a];
      if (residual_[a] <= kResidualTol) {
        residual_[a] = 0.0;
        make_orphan(i);
      }
      i = next;
    }
    flow_ += bottleneck;
  }

  // True if following parents from `j` reaches a terminal.
  bool rooted(int j) const {
    for (;;) {
      const int a = parent_[j];
      if (a == kTerminal) return true;
      if (a == kFree || a == kOrphan) return false;
      j = head_[a];
    }
  }

  void adopt() {
    while (!orphans_.empty()) {
      const int i = orphans_.front();
      orphans_.pop_front();
      const bool sink_side = in_sink_tree_[i];
      int new_parent = kFree;
      for (int a : out_[i]) {
        const int j = head_[a];
        const double r = sink_side ? residual_[a] : residual_[sister(a)];
        if (r <= kResidualTol || parent_[j] == kFree || in_sink_tree_[j] != sink_side) continue;
        if (rooted(j)) {
          new_parent = a;
          break;
        }
      }
      if (new_parent != kFree) {
        parent_[i] = new_parent;
        continue;
      }
      for (int a : out_[i]) {
        const int j = head_[a];
        if (parent_[j] == kFree || in_sink_tree_[j] != sink_side) continue;
        const double r = sink_side ? residual_[a] : residual_[sister(a)];
        if (r > kResidualTol) activate(j);
        const int pj = parent_[j];
        if (pj >= 0 && head_[pj] == i) make_orphan(j);
      }
      parent_[i] = kFree;
    }
  }

  CutResult extract_cut() const {
    CutResult cut;
    cut.flow = flow_;
    cut.side.assign(n_, CutSide::kSink);
    std::deque<int> frontier;
    for (int i = 0; i < n_; ++i) {
      if (terminal_[i] > kResidualTol) {
        cut.side[i] = CutSide::kSource;
        frontier.push_back(i);
      }
    }
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop_front();
      for (int a : out_[i]) {
        const int j = head_[a];
        if (cut.side[j] == CutSide::kSink && residual_[a] > kResidualTol) {
          cut.side[j] = CutSide::kSource;
          frontier.push_back(j);
        }
      }
    }
    return cut;
  }

  int n_;
  std::vector<std::vector<int>> out_;
  std::vector<int> head_;
  std::vector<double> residual_;
  // Positive: residual source->i. Negative: residual i->sink.
  std::vector<double> terminal_;
  std::vector<int> parent_;
  std::vector<bool> in_sink_tree_;
  std::vector<bool> queued_;
  std::deque<int> active_;
  std::deque<int> orphans_;
  double flow_ = 0.0;
};

}  // namespace

CutResult solve_max_flow(const FlowNetwork& g) {
  g.validate();
  return TwoTreeMaxFlow(g).run();
}

CutResult brute_force_min_cut(const FlowNetwork& g) {
  g.validate();
  if (g.n > kBruteForceMaxNodes)
    throw std::invalid_argument("brute_force_min_cut: refusing more than 20 nodes");
  CutResult best;
  best.flow = kInfiniteEnergy;
  std::vector<CutSide> side(g.n);
  // Node 0 is the most significant bit, so numeric order is lexicographic order.
  const std::uint32_t count = std::uint32_t(1) << g.n;
  for (std::uint32_t m = 0; m < count; ++m) {
    for (int i = 0; i < g.n; ++i)
      side[i] = (m >> (g.n - 1 - i)) & 1U ? CutSide::kSource : CutSide::kSink;
    const double c = cut_capacity(g, side);
    if (c < best.flow - 1e-12 * std::max(1.0, std::abs(c))) {
      best.flow = c;
      best.side = side;
    }
  }
  return best;
}

EnergyNetwork energy_to_network(const InstanceEnergy& e) {
  EnergyNetwork net;
  net.node_of.assign(e.n, -1);
  int free_count = 0;
  for (int id = 0; id < e.n; ++id)
    if (!e.unary[id].hard_bg) net.node_of[id] = free_count++;
  net.graph = FlowNetwork(free_count);
  for (int id = 0; id < e.n; ++id) {
    const int v = net.node_of[id];
    if (v < 0) continue;
    net.graph.t_links[v].source = e.unary[id].cost_bg;
    net.graph.t_links[v].sink = e.unary[id].cost_fg;
  }
  for (const PairwiseWeight& p : e.pairwise) {
    const int a = net.node_of[p.i], b = net.node_of[p.j];
    if (a >= 0 && b >= 0)
      net.graph.n_links.push_back({a, b, p.w});
    else if (a >= 0)
      net.graph.t_links[a].sink += p.w;
    else if (b >= 0)
      net.graph.t_links[b].sink += p.w;
  }
  return net;
}

Labeling labeling_from_cut(const EnergyNetwork& net, const CutResult& cut) {
  Labeling labels(net.node_of.size(), 0);
  for (std::size_t id = 0; id < net.node_of.size(); ++id) {
    const int v = net.node_of[id];
    labels[id] = v >= 0 && cut.side[v] == CutSide::kSource ? 1 : 0;
  }
  return labels;
}

Labeling minimize_energy(const InstanceEnergy& e) {
  const EnergyNetwork net = energy_to_network(e);
  return labeling_from_cut(net, solve_max_flow(net.graph));
}

void write_dimacs(std::ostream& os, const FlowNetwork& g) {
  const int source = g.n + 1, sink = g.n + 2;
  std::size_t arcs = 2 * g.n_links.size();
  for (const TerminalCaps& t : g.t_links) arcs += (t.source > 0) + (t.sink > 0);
  os << "c boxseg flow network\n";
  os << "p max " << g.n + 2 << ' ' << arcs << '\n';
  os << "n " << source << " s\n";
  os << "n " << sink << " t\n";
  os.precision(17);
  for (int i = 0; i < g.n; ++i) {
    if (g.t_links[i].source > 0) os << "a " << source << ' ' << i + 1 << ' ' << g.t_links[i].source << '\n';
    if (g.t_links[i].sink > 0) os << "a " << i + 1 << ' ' << sink << ' ' << g.t_links[i].sink << '\n';
  }
  for (const NeighbourLink& l : g.n_links) {
    os << "a " << l.i + 1 << ' ' << l.j + 1 << ' ' << l.cap << '\n';
    os << "a " << l.j + 1 << ' ' << l.i + 1 << ' ' << l.cap << '\n';
  }
}

}  // namespace boxseg
