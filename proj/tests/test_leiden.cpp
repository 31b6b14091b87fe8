#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "taskroute/leiden.hpp"

using namespace taskroute;
using namespace taskroute::testing;

namespace {

std::vector<GraphEdge> clique(const std::vector<int>& nodes, double w) {
  std::vector<GraphEdge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      edges.push_back({nodes[i], nodes[j], w});
  return edges;
}

std::set<std::set<int>> groups_of(const std::vector<int>& part) {
  std::map<int, std::set<int>> by_id;
  for (std::size_t i = 0; i < part.size(); ++i)
    by_id[part[i]].insert(static_cast<int>(i));
  std::set<std::set<int>> out;
  for (auto& [id, members] : by_id) out.insert(members);
  return out;
}

bool communities_connected(const PromptGraph& g, const std::vector<int>& part) {
  const auto adj = g.adjacency();
  std::map<int, std::vector<int>> members;
  for (int i = 0; i < g.node_count; ++i) members[part[i]].push_back(i);
  for (const auto& [id, nodes] : members) {
    std::set<int> seen = {nodes.front()};
    std::vector<int> stack = {nodes.front()};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : adj[u])
        if (part[v] == id && seen.insert(v).second) stack.push_back(v);
    }
    if (seen.size() != nodes.size()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("disconnected cliques are recovered exactly") {
  auto edges = clique({0, 1, 2, 3}, 1.0);
  const auto more = clique({4, 5, 6, 7}, 1.0);
  edges.insert(edges.end(), more.begin(), more.end());
  const PromptGraph g = make_graph(8, edges);
  const auto part = leiden_partition(g, 1.0, 5);
  CHECK(groups_of(part) ==
        std::set<std::set<int>>{{0, 1, 2, 3}, {4, 5, 6, 7}});
}

TEST_CASE("an edgeless graph yields singletons") {
  const PromptGraph g = make_graph(5, {});
  const auto part = leiden_partition(g, 1.0, 1);
  CHECK(groups_of(part).size() == 5);
}

TEST_CASE("two triangles over a light bridge match exhaustive search") {
  auto edges = clique({0, 1, 2}, 1.0);
  const auto t2 = clique({3, 4, 5}, 1.0);
  edges.insert(edges.end(), t2.begin(), t2.end());
  edges.push_back({2, 3, 0.01});
  const PromptGraph g = make_graph(6, edges);

  const auto part = leiden_partition(g, 1.0, 7);
  CHECK(groups_of(part) == std::set<std::set<int>>{{0, 1, 2}, {3, 4, 5}});
  CHECK(modularity(g, part, 1.0) ==
        doctest::Approx(best_partition_modularity(g, 1.0)).epsilon(1e-12));
}

TEST_CASE("micro graphs reach the enumerated modularity optimum") {
  std::vector<PromptGraph> graphs;
  {
    auto edges = clique({0, 1, 2, 3}, 1.0);
    const auto more = clique({4, 5, 6, 7}, 1.0);
    edges.insert(edges.end(), more.begin(), more.end());
    edges.push_back({0, 4, 0.05});
    graphs.push_back(make_graph(8, edges));
  }
  {
    // star
    graphs.push_back(make_graph(
        6, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}, {0, 5, 1.0}}));
  }
  {
    // path with decaying weights
    graphs.push_back(make_graph(
        7, {{0, 1, 1.0}, {1, 2, 0.9}, {2, 3, 0.2}, {3, 4, 1.0}, {4, 5, 0.8}, {5, 6, 0.7}}));
  }
  {
    // seeded random weighted graphs
    Rng rng(101);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<GraphEdge> edges;
      const int n = 7;
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (rng.uniform() < 0.45) edges.push_back({u, v, rng.uniform(0.2, 1.0)});
      graphs.push_back(make_graph(n, edges));
    }
  }

  for (std::size_t i = 0; i < graphs.size(); ++i) {
    CAPTURE(i);
    const auto part = leiden_partition(graphs[i], 1.0, 13);
    const double achieved = modularity(graphs[i], part, 1.0);
    const double optimum = best_partition_modularity(graphs[i], 1.0);
    CHECK(achieved == doctest::Approx(optimum).epsilon(1e-9));
    CHECK(communities_connected(graphs[i], part));
  }
}

TEST_CASE("modularity trace is non-decreasing across accepted moves") {
  auto edges = clique({0, 1, 2, 3}, 1.0);
  const auto more = clique({4, 5, 6}, 0.8);
  edges.insert(edges.end(), more.begin(), more.end());
  edges.push_back({3, 4, 0.1});
  const PromptGraph g = make_graph(7, edges);

  std::vector<double> trace;
  leiden_partition(g, 1.0, 3, &trace);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
}

TEST_CASE("partitions are deterministic for a fixed seed") {
  Rng rng(107);
  std::vector<GraphEdge> edges;
  for (int u = 0; u < 20; ++u)
    for (int v = u + 1; v < 20; ++v)
      if (rng.uniform() < 0.3) edges.push_back({u, v, rng.uniform(0.1, 1.0)});
  const PromptGraph g = make_graph(20, edges);
  const auto a = leiden_partition(g, 1.0, 999);
  const auto b = leiden_partition(g, 1.0, 999);
  CHECK(a == b);
}

TEST_CASE("resolution controls community granularity") {
  auto edges = clique({0, 1, 2}, 1.0);
  const auto t2 = clique({3, 4, 5}, 1.0);
  edges.insert(edges.end(), t2.begin(), t2.end());
  edges.push_back({2, 3, 0.6});
  const PromptGraph g = make_graph(6, edges);
  // a tiny resolution rewards one big community
  const auto coarse = leiden_partition(g, 0.05, 3);
  CHECK(groups_of(coarse).size() == 1);
  const auto fine = leiden_partition(g, 1.0, 3);
  CHECK(groups_of(fine).size() == 2);
}

TEST_CASE("leiden validates its input") {
  CHECK_THROWS_AS(leiden_partition(make_graph(0, {}), 1.0, 1), Error);
  CHECK_THROWS_AS(leiden_partition(make_graph(3, {}), 0.0, 1), Error);
  CHECK_THROWS_AS(modularity(make_graph(3, {}), {0, 1}, 1.0), Error);
}
