#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "taskroute/graph.hpp"

using namespace taskroute;
using taskroute::testing::make_list;

namespace {

GraphNode node(std::initializer_list<double> embedding, std::vector<int> order) {
  GraphNode n;
  n.embedding.resize(static_cast<Eigen::Index>(embedding.size()));
  Eigen::Index i = 0;
  for (double x : embedding) n.embedding[i++] = x;
  n.ranking = make_list(std::move(order));
  return n;
}

}  // namespace

TEST_CASE("identical nodes give a complete unit-weight graph") {
  const std::vector<GraphNode> nodes = {node({1.0, 0.0}, {0, 1}),
                                        node({1.0, 0.0}, {0, 1}),
                                        node({1.0, 0.0}, {0, 1})};
  const PromptGraph g = build_graph(nodes, 2, 0.4, 0.9);
  CHECK(g.node_count == 3);
  REQUIRE(g.edges.size() == 3);
  for (const auto& e : g.edges) CHECK(e.weight == 1.0);
}

TEST_CASE("edges below the rbo threshold are dropped") {
  // reversed 2-model preferences: rbo = 0.1*0.9 + 0.81 = 0.90 at p=0.9, but
  // 0.5*0.5 + 0.25 = 0.5 at p=0.5; a threshold above that kills the edge
  const std::vector<GraphNode> nodes = {node({1.0, 0.0}, {0, 1}),
                                        node({0.9, 0.1}, {1, 0})};
  const PromptGraph kept = build_graph(nodes, 1, 0.4, 0.5);
  CHECK(kept.edges.size() == 1);
  const PromptGraph dropped = build_graph(nodes, 1, 0.6, 0.5);
  CHECK(dropped.edges.empty());
}

TEST_CASE("zero-norm embeddings are rejected with a warning count") {
  const std::vector<GraphNode> nodes = {node({0.0, 0.0}, {0, 1}),
                                        node({1.0, 0.0}, {0, 1}),
                                        node({0.9, 0.1}, {0, 1})};
  const PromptGraph g = build_graph(nodes, 2, 0.0, 0.9);
  CHECK(g.zero_norm_nodes == 1);
  for (const auto& e : g.edges) {
    CHECK(e.u != 0);
    CHECK(e.v != 0);
  }
}

TEST_CASE("build_graph matches an exhaustive pairwise computation") {
  // four nodes on a line; rankings drift with position
  const std::vector<GraphNode> nodes = {
      node({1.0, 0.05}, {0, 1, 2}), node({1.0, 0.4}, {0, 2, 1}),
      node({1.0, 0.8}, {2, 0, 1}), node({1.0, 1.3}, {2, 1, 0})};
  const int k = 2;
  const double tau = 0.55, p = 0.5;
  const PromptGraph g = build_graph(nodes, k, tau, p);

  // oracle: brute-force candidate set, filter, normalize
  const int n = static_cast<int>(nodes.size());
  auto cosine = [&](int a, int b) {
    return nodes[a].embedding.dot(nodes[b].embedding) /
           (nodes[a].embedding.norm() * nodes[b].embedding.norm());
  };
  std::set<std::pair<int, int>> candidates;
  for (int u = 0; u < n; ++u) {
    std::vector<std::pair<double, int>> sims;
    for (int v = 0; v < n; ++v)
      if (v != u) sims.emplace_back(cosine(u, v), v);
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int i = 0; i < k; ++i)
      candidates.emplace(std::min(u, sims[i].second), std::max(u, sims[i].second));
  }
  struct Survivor {
    int u, v;
    double cos, overlap;
  };
  std::vector<Survivor> survivors;
  for (const auto& [u, v] : candidates) {
    const double overlap = rbo(nodes[u].ranking, nodes[v].ranking, p);
    if (overlap >= tau) survivors.push_back({u, v, cosine(u, v), overlap});
  }
  REQUIRE(g.edges.size() == survivors.size());
  double clo = 1e100, chi = -1e100, rlo = 1e100, rhi = -1e100;
  for (const auto& s : survivors) {
    clo = std::min(clo, s.cos);
    chi = std::max(chi, s.cos);
    rlo = std::min(rlo, s.overlap);
    rhi = std::max(rhi, s.overlap);
  }
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    const auto& s = survivors[i];
    const auto& e = g.edges[i];
    CHECK(e.u == s.u);
    CHECK(e.v == s.v);
    const double nc = chi == clo ? 1.0 : std::max((s.cos - clo) / (chi - clo), 1e-12);
    const double nr =
        rhi == rlo ? 1.0 : std::max((s.overlap - rlo) / (rhi - rlo), 1e-12);
    CHECK(e.weight == doctest::Approx(std::sqrt(nc * nr)).epsilon(1e-12));
  }
}

TEST_CASE("graph invariants: simple, undirected, thresholded, weights in (0,1]") {
  Rng rng(83);
  std::vector<GraphNode> nodes;
  for (int i = 0; i < 30; ++i) {
    GraphNode n;
    n.embedding = Eigen::VectorXd::NullaryExpr(6, [&](Eigen::Index) {
      return rng.uniform(-1.0, 1.0);
    });
    Eigen::VectorXd q =
        Eigen::VectorXd::NullaryExpr(5, [&](Eigen::Index) { return rng.uniform(); });
    n.ranking = ranked_list_from_quality(q);
    nodes.push_back(std::move(n));
  }
  const double tau = 0.35, p = 0.5;
  const PromptGraph g = build_graph(nodes, 4, tau, p);
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    CHECK(e.u < e.v);
    CHECK(seen.insert({e.u, e.v}).second);
    CHECK(e.weight > 0.0);
    CHECK(e.weight <= 1.0);
    CHECK(rbo(nodes[e.u].ranking, nodes[e.v].ranking, p) >= tau);
  }
}

TEST_CASE("build_graph validates its input") {
  const std::vector<GraphNode> one = {node({1.0}, {0})};
  CHECK_THROWS_AS(build_graph(one, 1, 0.4, 0.9), Error);
  const std::vector<GraphNode> two = {node({1.0}, {0}), node({1.0}, {0})};
  CHECK_THROWS_AS(build_graph(two, 0, 0.4, 0.9), Error);
  const std::vector<GraphNode> mixed = {node({1.0}, {0}), node({1.0, 2.0}, {0})};
  CHECK_THROWS_AS(build_graph(mixed, 1, 0.4, 0.9), Error);
}
