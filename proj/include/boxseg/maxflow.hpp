#pragma once

#include "boxseg/energy.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace boxseg {

struct TerminalCaps {
  double source = 0.0;  ///< source -> node
  double sink = 0.0;    ///< node -> sink
};

/// Undirected neighbour link: capacity `cap` in both directions.
struct NeighbourLink {
  int i = 0;
  int j = 0;
  double cap = 0.0;
};

/// s-t network over n non-terminal nodes.
struct FlowNetwork {
  int n = 0;
  std::vector<TerminalCaps> t_links;
  std::vector<NeighbourLink> n_links;

  explicit FlowNetwork(int nodes = 0) : n(nodes), t_links(std::size_t(nodes)) {}
  void validate() const;
};

enum class CutSide : std::uint8_t { kSink = 0, kSource = 1 };

struct CutResult {
  double flow = 0.0;
  std::vector<CutSide> side;
};

/// Capacity of the s-t cut induced by `side`.
double cut_capacity(const FlowNetwork& g, const std::vector<CutSide>& side);

/// Exact max-flow by augmenting paths over two search trees (source and
/// sink) that are grown, augmented and repaired by adoption. The returned
/// source side is the set of nodes reachable from the source in the final
/// residual graph, so zero-cost ties land on the sink side.
CutResult solve_max_flow(const FlowNetwork& g);

inline constexpr int kBruteForceMaxNodes = 20;

/// Enumerates all 2^n partitions. Ties go to the lexicographically smallest
/// side vector (sink < source). Throws for n > kBruteForceMaxNodes.
CutResult brute_force_min_cut(const FlowNetwork& g);

/// Graph for an InstanceEnergy. `node_of[id]` is the flow node of superpixel
/// `id`, or -1 for hard-background ids, which are fixed to label 0.
struct EnergyNetwork {
  FlowNetwork graph;
  std::vector<int> node_of;
};

/// Source side = foreground: source->i carries cost_bg(i), i->sink carries
/// cost_fg(i), n-links carry the pairwise weights. Pairwise weights to fixed
/// background neighbours fold into i->sink. For every feasible labelling the
/// cut capacity equals evaluate_energy.
EnergyNetwork energy_to_network(const InstanceEnergy& e);

Labeling labeling_from_cut(const EnergyNetwork& net, const CutResult& cut);

/// Minimum-energy labelling via max-flow.
Labeling minimize_energy(const InstanceEnergy& e);

/// DIMACS max-flow text: nodes 1..n are the free nodes, n+1 the source, n+2 the sink.
void write_dimacs(std::ostream& os, const FlowNetwork& g);

}  // namespace boxseg
