#include "doctest.h"

#include "boxseg/maxflow.hpp"
#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace boxseg;

TEST_CASE("single node takes the cheaper terminal") {
  FlowNetwork g(1);
  g.t_links[0] = {5.0, 3.0};
  const CutResult r = solve_max_flow(g);
  CHECK(r.flow == 3.0);
  CHECK(r.side[0] == CutSide::kSource);

  g.t_links[0] = {2.0, 3.0};
  const CutResult s = solve_max_flow(g);
  CHECK(s.flow == 2.0);
  CHECK(s.side[0] == CutSide::kSink);
}

TEST_CASE("two nodes through a bottleneck") {
  // s -> 0 (10), 0 - 1 (1), 1 -> t (10).
  FlowNetwork g(2);
  g.t_links[0].source = 10;
  g.t_links[1].sink = 10;
  g.n_links.push_back({0, 1, 1.0});
  const CutResult r = solve_max_flow(g);
  CHECK(r.flow == 1.0);
  CHECK(r.side == std::vector{CutSide::kSource, CutSide::kSink});
  CHECK(cut_capacity(g, r.side) == 1.0);
}

TEST_CASE("empty and trivial networks") {
  const CutResult r = solve_max_flow(FlowNetwork(0));
  CHECK(r.flow == 0.0);
  CHECK(r.side.empty());
  // No capacities anywhere: nothing is reachable from the source.
  const CutResult z = solve_max_flow(FlowNetwork(3));
  CHECK(z.flow == 0.0);
  for (CutSide s : z.side) CHECK(s == CutSide::kSink);
}

TEST_CASE("max-flow equals brute-force min cut on random networks") {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> nodes(1, 12);
  for (int t = 0; t < 200; ++t) {
    const FlowNetwork g = oracle::random_network(rng, nodes(rng), 20, 0.4);
    const CutResult fast = solve_max_flow(g);
    const CutResult slow = brute_force_min_cut(g);
    REQUIRE(fast.flow == slow.flow);
    CHECK(cut_capacity(g, fast.side) == fast.flow);
  }
}

TEST_CASE("real-valued capacities") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> cap(0.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    FlowNetwork g(9);
    for (auto& tl : g.t_links) tl = {cap(rng), cap(rng)};
    for (int i = 0; i < 9; ++i)
      for (int j = i + 1; j < 9; ++j)
        if ((i + j + t) % 3 == 0) g.n_links.push_back({i, j, cap(rng)});
    const CutResult fast = solve_max_flow(g);
    CHECK(fast.flow == doctest::Approx(brute_force_min_cut(g).flow).epsilon(1e-12));
    CHECK(cut_capacity(g, fast.side) == doctest::Approx(fast.flow).epsilon(1e-12));
  }
}

TEST_CASE("capacity scaling scales the flow") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 20; ++t) {
    FlowNetwork g = oracle::random_network(rng, 10, 15, 0.4);
    const double f = solve_max_flow(g).flow;
    for (auto& tl : g.t_links) {
      tl.source *= 4;
      tl.sink *= 4;
    }
    for (auto& l : g.n_links) l.cap *= 4;
    CHECK(solve_max_flow(g).flow == 4 * f);
  }
}

TEST_CASE("brute force breaks ties lexicographically") {
  // Both sides cost 1 for the single node; sink < source.
  FlowNetwork g(1);
  g.t_links[0] = {1.0, 1.0};
  CHECK(brute_force_min_cut(g).side[0] == CutSide::kSink);
  CHECK_THROWS(brute_force_min_cut(FlowNetwork(kBruteForceMaxNodes + 1)));
}

TEST_CASE("network validation") {
  FlowNetwork g(2);
  g.n_links.push_back({0, 2, 1.0});
  CHECK_THROWS(g.validate());
  FlowNetwork h(1);
  h.t_links[0].sink = -1;
  CHECK_THROWS(h.validate());
}

TEST_CASE("energy network cut equals energy for every labelling") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const InstanceEnergy e = oracle::random_energy(rng, 8, 1.5);
    const EnergyNetwork net = energy_to_network(e);
    for (std::uint32_t m = 0; m < (1u << e.n); ++m) {
      Labeling lab(e.n);
      bool feasible = true;
      for (int i = 0; i < e.n; ++i) {
        lab[i] = (m >> i) & 1u;
        if (lab[i] && e.unary[i].hard_bg) feasible = false;
      }
      if (!feasible) continue;
      std::vector<CutSide> side(net.graph.n);
      for (int i = 0; i < e.n; ++i)
        if (net.node_of[i] >= 0) side[net.node_of[i]] = lab[i] ? CutSide::kSource : CutSide::kSink;
      CHECK(cut_capacity(net.graph, side) == doctest::Approx(evaluate_energy(e, lab)).epsilon(1e-12));
    }
  }
}

TEST_CASE("minimize_energy reaches the exhaustive optimum") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<int> size(1, 14);
  for (int t = 0; t < 100; ++t) {
    const InstanceEnergy e = oracle::random_energy(rng, size(rng), 4.0);
    const Labeling lab = minimize_energy(e);
    for (int i = 0; i < e.n; ++i)
      if (e.unary[i].hard_bg) CHECK(lab[i] == 0);
    CHECK(evaluate_energy(e, lab) == doctest::Approx(oracle::exhaustive_min_energy(e)).epsilon(1e-9));
  }
}

TEST_CASE("decoupled energy picks the unary argmin, ties to background") {
  InstanceEnergy e;
  e.n = 4;
  e.unary = {{1.0, 2.0, false}, {3.0, 1.0, false}, {2.0, 2.0, false}, {0.0, 0.0, true}};
  CHECK(minimize_energy(e) == Labeling{0, 1, 0, 0});
}

TEST_CASE("DIMACS dump") {
  FlowNetwork g(2);
  g.t_links[0] = {4.0, 0.0};
  g.t_links[1] = {0.0, 2.5};
  g.n_links.push_back({0, 1, 1.0});
  std::ostringstream os;
  write_dimacs(os, g);
  const std::string text = os.str();
  CHECK(text.find("p max 4 ") != std::string::npos);
  CHECK(text.find("n 3 s") != std::string::npos);
  CHECK(text.find("n 4 t") != std::string::npos);
  CHECK(text.find("a 3 1 4") != std::string::npos);
  CHECK(text.find("a 2 4 2.5") != std::string::npos);
  CHECK(text.find("a 1 2 1") != std::string::npos);
  CHECK(text.find("a 2 1 1") != std::string::npos);
}
