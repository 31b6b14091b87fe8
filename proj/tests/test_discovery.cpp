#include <doctest.h>

#include <numeric>
#include <set>

#include "helpers.hpp"
#include "taskroute/discovery.hpp"
#include "taskroute/synth.hpp"

using namespace taskroute;
using namespace taskroute::testing;

namespace {

Dataset tiny_dataset(const std::vector<Eigen::VectorXd>& desc,
                     const std::vector<Eigen::VectorXd>& quality) {
  Dataset ds;
  const int n = static_cast<int>(quality.front().size());
  for (int m = 0; m < n; ++m)
    ds.pool.push_back({"m" + std::to_string(m), m, 1.0});
  for (std::size_t i = 0; i < desc.size(); ++i) {
    PromptRecord rec;
    rec.prompt_id = "p" + std::to_string(i);
    rec.source = "t";
    rec.prompt_embedding = desc[i];
    rec.desc_embedding = desc[i];
    rec.quality = quality[i];
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

Eigen::VectorXd ev(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("summarize of a singleton returns the member itself") {
  const Dataset ds = tiny_dataset({ev({1.0, 2.0})}, {ev({0.2, 0.8, 0.5})});
  const ClusterSummary s = summarize(ds, {0}, 60.0);
  CHECK(exact_eq(s.center, ev({1.0, 2.0})));
  CHECK(s.fused_list.order == std::vector<int>{1, 2, 0});
  CHECK(exact_eq(s.median_quality, ev({0.2, 0.8, 0.5})));
}

TEST_CASE("summarize medians: lower for embeddings, midpoint for quality") {
  const Dataset ds = tiny_dataset({ev({1.0, 0.0}), ev({0.0, 1.0})},
                                  {ev({0.4, 0.1}), ev({0.8, 0.2})});
  const ClusterSummary s = summarize(ds, {0, 1}, 60.0);
  CHECK(exact_eq(s.center, ev({0.0, 0.0})));          // lower middle value
  CHECK(s.median_quality[0] == doctest::Approx(0.6));  // midpoint of the pair
  CHECK(s.median_quality[1] == doctest::Approx(0.15));
}

TEST_CASE("summarize center and fusion match direct evaluation on three members") {
  const Dataset ds =
      tiny_dataset({ev({1.0, 0.0}), ev({0.0, 1.0}), ev({1.0, 1.0})},
                   {ev({0.9, 0.5, 0.1}), ev({0.8, 0.6, 0.2}), ev({0.1, 0.9, 0.3})});
  const ClusterSummary s = summarize(ds, {0, 1, 2}, 60.0);
  CHECK(exact_eq(s.center, ev({1.0, 1.0})));

  std::vector<RankedList> lists;
  for (const auto& rec : ds.records)
    lists.push_back(ranked_list_from_quality(rec.quality));
  const RankedList expected = rrf_fuse(lists, 60.0);
  CHECK(s.fused_list.order == expected.order);
}

TEST_CASE("coverage counts members whose top model is in the candidate set") {
  // top-1 models: 0, 0, 1, 2, 0
  const Dataset ds = tiny_dataset(
      {ev({1.0}), ev({1.0}), ev({1.0}), ev({1.0}), ev({1.0})},
      {ev({0.9, 0.1, 0.2}), ev({0.8, 0.3, 0.1}), ev({0.2, 0.9, 0.3}),
       ev({0.1, 0.2, 0.9}), ev({0.7, 0.6, 0.5})});
  const std::vector<int> all = {0, 1, 2, 3, 4};
  CHECK(coverage(ds, all, {0, 1, 2}) == 1.0);
  CHECK(coverage(ds, all, {0}) == doctest::Approx(0.6));
  CHECK_THROWS_AS(coverage(ds, all, {}), Error);
}

TEST_CASE("coverage equals a brute-force count on random clusters") {
  Rng rng(211);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_models = 4 + static_cast<int>(rng.uniform_int(0, 4));
    std::vector<Eigen::VectorXd> desc, quality;
    for (int i = 0; i < 50; ++i) {
      desc.push_back(ev({1.0}));
      Eigen::VectorXd q(n_models);
      for (int m = 0; m < n_models; ++m) q[m] = rng.uniform();
      quality.push_back(q);
    }
    const Dataset ds = tiny_dataset(desc, quality);
    std::vector<int> members(50);
    std::iota(members.begin(), members.end(), 0);
    std::vector<int> candidate_set;
    for (int m = 0; m < n_models; ++m)
      if (rng.uniform() < 0.5) candidate_set.push_back(m);
    if (candidate_set.empty()) candidate_set.push_back(0);

    int covered = 0;
    for (int i = 0; i < 50; ++i) {
      int best = 0;
      for (int m = 1; m < n_models; ++m)
        if (quality[static_cast<std::size_t>(i)][m] >
            quality[static_cast<std::size_t>(i)][best])
          best = m;
      if (std::count(candidate_set.begin(), candidate_set.end(), best)) ++covered;
    }
    CHECK(coverage(ds, members, candidate_set) ==
          doctest::Approx(covered / 50.0).epsilon(1e-12));
  }
}

TEST_CASE("select_candidates returns the smallest covering prefix") {
  // members' top-1: 0,0,1,2,0 and fused order 0,1,2 -> prefix {0,1} at 0.8
  const Dataset ds = tiny_dataset(
      {ev({1.0}), ev({1.0}), ev({1.0}), ev({1.0}), ev({1.0})},
      {ev({0.9, 0.1, 0.2}), ev({0.8, 0.3, 0.1}), ev({0.2, 0.9, 0.3}),
       ev({0.1, 0.2, 0.9}), ev({0.7, 0.6, 0.5})});
  const std::vector<int> all = {0, 1, 2, 3, 4};
  const ClusterSummary s = summarize(ds, all, 60.0);
  CHECK(select_candidates(ds, all, s.fused_list, 0.8) == std::vector<int>{0, 1});
  CHECK(select_candidates(ds, all, s.fused_list, 0.5) == std::vector<int>{0});
  // delta = 1 extends through the last of the top-1 set {0,1,2}
  CHECK(select_candidates(ds, all, s.fused_list, 1.0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("select_candidates equals brute force over random clusters") {
  Rng rng(223);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_models = 3 + static_cast<int>(rng.uniform_int(0, 5));
    const int size = 5 + static_cast<int>(rng.uniform_int(0, 30));
    std::vector<Eigen::VectorXd> desc, quality;
    for (int i = 0; i < size; ++i) {
      desc.push_back(ev({1.0}));
      Eigen::VectorXd q(n_models);
      for (int m = 0; m < n_models; ++m) q[m] = rng.uniform();
      quality.push_back(q);
    }
    const Dataset ds = tiny_dataset(desc, quality);
    std::vector<int> members(static_cast<std::size_t>(size));
    std::iota(members.begin(), members.end(), 0);
    const ClusterSummary s = summarize(ds, members, 60.0);
    const double delta = 0.8;
    const std::vector<int> chosen = select_candidates(ds, members, s.fused_list, delta);

    // brute force: scan prefix lengths
    std::vector<int> expected;
    for (int len = 1; len <= n_models; ++len) {
      expected.assign(s.fused_list.order.begin(), s.fused_list.order.begin() + len);
      if (coverage(ds, members, expected) >= delta) break;
    }
    CHECK(chosen == expected);
    CHECK(coverage(ds, members, chosen) >= delta);
  }
}

TEST_CASE("single planted task collapses to one cluster") {
  SynthSpec spec = fixture_spec();
  spec.n_tasks = 1;
  spec.prompts_per_task = 12;
  spec.affinity = spec.affinity.topRows(1);
  const auto [ds, truth] = generate(spec);
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  REQUIRE(result.cluster_count() == 1);
  CHECK(result.clusters[0].size() == 12);
  for (const auto& [id, task] : result.assignment) CHECK(task == 0);
}

TEST_CASE("three planted tasks are recovered exactly") {
  const auto [ds, truth] = generate(fixture_spec());
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  REQUIRE(result.cluster_count() == 3);

  std::map<std::string, int> planted;
  for (const auto& [id, entry] : truth.entries) planted[id] = entry.planted_task;
  CHECK(ari(result.assignment, planted) == 1.0);

  // candidates form a prefix with sufficient coverage
  for (const auto& cluster : result.clusters) {
    REQUIRE(!cluster.candidates.empty());
    CHECK(std::equal(cluster.candidates.begin(), cluster.candidates.end(),
                     cluster.fused_list.order.begin()));
    CHECK(static_cast<int>(cluster.member_prompt_ids.size()) >= 5);
  }
}

TEST_CASE("outliers land in the Others pool") {
  const auto [ds, truth] = generate(fixture_spec(4));
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  CHECK(result.cluster_count() == 3);
  int in_others = 0;
  for (const auto& [id, entry] : truth.entries)
    if (entry.planted_task < 0) {
      REQUIRE(result.assignment.count(id) == 1);
      if (result.assignment.at(id) < 0) ++in_others;
    }
  CHECK(in_others == 4);
  CHECK(result.others_median_quality.size() == ds.pool_size());
}

TEST_CASE("assignment partitions the prompt set exactly") {
  const auto [ds, truth] = generate(fixture_spec(4));
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  CHECK(result.assignment.size() == ds.records.size());
  std::set<std::string> in_clusters;
  for (const auto& cluster : result.clusters)
    for (const auto& id : cluster.member_prompt_ids)
      CHECK(in_clusters.insert(id).second);
  for (const auto& [id, task] : result.assignment) {
    if (task >= 0)
      CHECK(in_clusters.count(id) == 1);
    else
      CHECK(in_clusters.count(id) == 0);
  }
}

TEST_CASE("empty Others pool falls back to global medians") {
  const auto [ds, truth] = generate(fixture_spec());
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  bool any_others = false;
  for (const auto& [id, task] : result.assignment)
    if (task < 0) any_others = true;
  REQUIRE(!any_others);

  std::vector<int> all(ds.records.size());
  std::iota(all.begin(), all.end(), 0);
  const ClusterSummary global = summarize(ds, all, 60.0);
  CHECK(exact_eq(result.others_median_quality, global.median_quality));
}

TEST_CASE("discovery is deterministic and round-trips through artifacts") {
  const auto [ds, truth] = generate(fixture_spec(4));
  const DiscoveryResult a = iterative_cluster(ds, fixture_config());
  const DiscoveryResult b = iterative_cluster(ds, fixture_config());
  REQUIRE(a.cluster_count() == b.cluster_count());
  CHECK(a.assignment == b.assignment);
  for (int c = 0; c < a.cluster_count(); ++c) {
    CHECK(a.clusters[c].member_prompt_ids == b.clusters[c].member_prompt_ids);
    CHECK(exact_eq(a.clusters[c].median_quality, b.clusters[c].median_quality));
    CHECK(a.clusters[c].candidates == b.clusters[c].candidates);
  }

  const auto dir = std::filesystem::temp_directory_path() / "tr_disc_rt.bin";
  save_artifact(a, dir);
  const DiscoveryResult back = load_artifact<DiscoveryResult>(dir);
  CHECK(back.assignment == a.assignment);
  CHECK(back.pool_size == a.pool_size);
  REQUIRE(back.cluster_count() == a.cluster_count());
  for (int c = 0; c < a.cluster_count(); ++c) {
    CHECK(back.clusters[c].fused_list.order == a.clusters[c].fused_list.order);
    CHECK(exact_eq(back.clusters[c].center, a.clusters[c].center));
  }
  std::filesystem::remove(dir);
}

TEST_CASE("cluster report lists one line per cluster") {
  const auto [ds, truth] = generate(fixture_spec());
  const DiscoveryResult result = iterative_cluster(ds, fixture_config());
  const std::string report = cluster_report(result, ds);
  CHECK(report.find("clusters=3") != std::string::npos);
  CHECK(report.find("cluster 0:") != std::string::npos);
  CHECK(report.find("cluster 2:") != std::string::npos);
  CHECK(report.find("candidates=[") != std::string::npos);
}
