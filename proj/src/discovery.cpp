#include "taskroute/discovery.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "taskroute/leiden.hpp"
#include "taskroute/rng.hpp"

namespace taskroute {

namespace {

double lower_median(std::vector<double>& values) {
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  return values[mid];
}

double midpoint_median(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Eigen::VectorXd per_model_median(const Dataset& ds,
                                 const std::vector<int>& member_indices) {
  const int n = ds.pool_size();
  Eigen::VectorXd medians(n);
  std::vector<double> column;
  column.reserve(member_indices.size());
  for (int m = 0; m < n; ++m) {
    column.clear();
    for (const int idx : member_indices)
      column.push_back(ds.records[static_cast<std::size_t>(idx)].quality[m]);
    medians[m] = midpoint_median(column);
  }
  return medians;
}

}  // namespace

ClusterSummary summarize(const Dataset& ds, const std::vector<int>& member_indices,
                         double rrf_epsilon) {
  if (member_indices.empty()) throw Error("summarize: empty member set");
  const auto& first = ds.records[static_cast<std::size_t>(member_indices.front())];
  const Eigen::Index dim = first.desc_embedding.size();

  ClusterSummary summary;
  summary.center.resize(dim);
  std::vector<double> column;
  column.reserve(member_indices.size());
  for (Eigen::Index d = 0; d < dim; ++d) {
    column.clear();
    for (const int idx : member_indices)
      column.push_back(ds.records[static_cast<std::size_t>(idx)].desc_embedding[d]);
    summary.center[d] = lower_median(column);
  }

  std::vector<RankedList> lists;
  lists.reserve(member_indices.size());
  for (const int idx : member_indices)
    lists.push_back(
        ranked_list_from_quality(ds.records[static_cast<std::size_t>(idx)].quality));
  summary.fused_list = rrf_fuse(lists, rrf_epsilon);
  summary.median_quality = per_model_median(ds, member_indices);
  return summary;
}

double coverage(const Dataset& ds, const std::vector<int>& member_indices,
                const std::vector<int>& candidate_set) {
  if (candidate_set.empty()) throw Error("coverage: empty candidate set");
  if (member_indices.empty()) return 0.0;
  std::vector<char> in_set(static_cast<std::size_t>(ds.pool_size()), 0);
  for (const int m : candidate_set) in_set[static_cast<std::size_t>(m)] = 1;
  int covered = 0;
  for (const int idx : member_indices) {
    const RankedList list =
        ranked_list_from_quality(ds.records[static_cast<std::size_t>(idx)].quality);
    if (in_set[static_cast<std::size_t>(list.order.front())]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(member_indices.size());
}

std::vector<int> select_candidates(const Dataset& ds,
                                   const std::vector<int>& member_indices,
                                   const RankedList& fused_list,
                                   double coverage_threshold) {
  // Count how often each model is a member's top choice, then scan prefixes.
  std::vector<int> top1_counts(static_cast<std::size_t>(ds.pool_size()), 0);
  for (const int idx : member_indices) {
    const RankedList list =
        ranked_list_from_quality(ds.records[static_cast<std::size_t>(idx)].quality);
    ++top1_counts[static_cast<std::size_t>(list.order.front())];
  }
  const double total = static_cast<double>(member_indices.size());
  int covered = 0;
  std::vector<int> prefix;
  for (const int m : fused_list.order) {
    prefix.push_back(m);
    covered += top1_counts[static_cast<std::size_t>(m)];
    if (static_cast<double>(covered) / total >= coverage_threshold) return prefix;
  }
  return prefix;  // no prefix reached the threshold: the whole pool
}

DiscoveryResult iterative_cluster(const Dataset& ds, const PipelineConfig& cfg) {
  cfg.validate();
  if (ds.records.size() < 2)
    throw Error("iterative_cluster: need at least 2 records");

  const auto seed = static_cast<std::uint64_t>(cfg.seed);

  // Supernode state: record-index membership plus a (center, fused list)
  // payload. Iteration 1 works on raw prompts.
  std::vector<std::vector<int>> members(ds.records.size());
  std::vector<GraphNode> payload(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    members[i] = {static_cast<int>(i)};
    payload[i].embedding = ds.records[i].desc_embedding;
    payload[i].ranking = ranked_list_from_quality(ds.records[i].quality);
  }

  for (int iter = 0; iter < cfg.leiden_iterations; ++iter) {
    if (payload.size() < 2) break;
    const PromptGraph graph =
        build_graph(payload, cfg.knn_k, cfg.rbo_threshold, cfg.rbo_persistence);
    const std::vector<int> part = leiden_partition(
        graph, cfg.leiden_resolution, mix_seed(seed, 0x1e1de0 + static_cast<std::uint64_t>(iter)));
    const int count = 1 + *std::max_element(part.begin(), part.end());
    if (count == static_cast<int>(payload.size())) continue;  // nothing merged

    std::vector<std::vector<int>> merged(count);
    for (std::size_t node = 0; node < part.size(); ++node) {
      auto& dst = merged[static_cast<std::size_t>(part[node])];
      dst.insert(dst.end(), members[node].begin(), members[node].end());
    }
    members.clear();
    payload.clear();
    for (auto& group : merged) {
      std::sort(group.begin(), group.end());
      const ClusterSummary summary = summarize(ds, group, cfg.rrf_epsilon);
      GraphNode node;
      node.embedding = summary.center;
      node.ranking = summary.fused_list;
      members.push_back(std::move(group));
      payload.push_back(std::move(node));
    }
  }

  // Size floor: clusters below min_cluster_size dissolve into Others.
  std::vector<std::vector<int>> kept;
  std::vector<int> others;
  for (auto& group : members) {
    if (static_cast<int>(group.size()) >= cfg.min_cluster_size)
      kept.push_back(std::move(group));
    else
      others.insert(others.end(), group.begin(), group.end());
  }
  std::sort(others.begin(), others.end());

  // Deterministic task ids: by descending size, then by earliest member.
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });

  DiscoveryResult result;
  result.pool_size = ds.pool_size();
  for (std::size_t c = 0; c < kept.size(); ++c) {
    TaskCluster cluster;
    cluster.task_id = static_cast<int>(c);
    const ClusterSummary summary = summarize(ds, kept[c], cfg.rrf_epsilon);
    cluster.center = summary.center;
    cluster.fused_list = summary.fused_list;
    cluster.median_quality = summary.median_quality;
    cluster.candidates =
        select_candidates(ds, kept[c], summary.fused_list, cfg.coverage_threshold);
    cluster.description_embedding = summary.center;
    for (const int idx : kept[c]) {
      const auto& id = ds.records[static_cast<std::size_t>(idx)].prompt_id;
      cluster.member_prompt_ids.push_back(id);
      result.assignment[id] = cluster.task_id;
    }
    result.clusters.push_back(std::move(cluster));
  }
  for (const int idx : others)
    result.assignment[ds.records[static_cast<std::size_t>(idx)].prompt_id] = -1;

  if (!others.empty()) {
    result.others_median_quality = per_model_median(ds, others);
  } else {
    std::vector<int> all(ds.records.size());
    std::iota(all.begin(), all.end(), 0);
    result.others_median_quality = per_model_median(ds, all);
  }
  return result;
}

std::string cluster_report(const DiscoveryResult& result, const Dataset& ds) {
  std::map<std::string, const PromptRecord*> by_id;
  for (const auto& rec : ds.records) by_id[rec.prompt_id] = &rec;

  std::ostringstream out;
  out << "clusters=" << result.cluster_count() << " others="
      << std::count_if(result.assignment.begin(), result.assignment.end(),
                       [](const auto& kv) { return kv.second < 0; })
      << "\n";
  for (const auto& cluster : result.clusters) {
    std::map<std::string, int> sources;
    for (const auto& id : cluster.member_prompt_ids) {
      const auto it = by_id.find(id);
      if (it != by_id.end()) ++sources[it->second->source];
    }
    std::vector<std::pair<int, std::string>> ranked;
    for (const auto& [src, count] : sources) ranked.emplace_back(-count, src);
    std::sort(ranked.begin(), ranked.end());

    out << "cluster " << cluster.task_id << ": size=" << cluster.size()
        << " candidates=[";
    for (std::size_t i = 0; i < cluster.candidates.size(); ++i) {
      if (i) out << ",";
      const int m = cluster.candidates[i];
      out << (m >= 0 && m < ds.pool_size() ? ds.pool[static_cast<std::size_t>(m)].model_id
                                           : std::to_string(m));
    }
    out << "] sources=";
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
      if (i) out << ",";
      out << ranked[i].second << ":" << -ranked[i].first;
    }
    out << "\n";
  }
  return out.str();
}

void ArtifactCodec<DiscoveryResult>::encode(BinaryWriter& w, const DiscoveryResult& r) {
  w.u64(static_cast<std::uint64_t>(r.pool_size));
  w.u64(r.clusters.size());
  for (const auto& c : r.clusters) {
    w.i64(c.task_id);
    w.u64(c.member_prompt_ids.size());
    for (const auto& id : c.member_prompt_ids) w.str(id);
    w.vec(c.center);
    w.int_vec(c.fused_list.order);
    const bool has_scores = c.fused_list.scores.has_value();
    w.u8(has_scores ? 1 : 0);
    if (has_scores) {
      w.u64(c.fused_list.scores->size());
      for (const double s : *c.fused_list.scores) w.f64(s);
    }
    w.vec(c.median_quality);
    w.int_vec(c.candidates);
    w.vec(c.description_embedding);
  }
  w.vec(r.others_median_quality);
  w.u64(r.assignment.size());
  for (const auto& [id, task] : r.assignment) {
    w.str(id);
    w.i64(task);
  }
}

DiscoveryResult ArtifactCodec<DiscoveryResult>::decode(BinaryReader& r) {
  DiscoveryResult result;
  result.pool_size = static_cast<int>(r.u64());
  const std::uint64_t n_clusters = r.u64();
  for (std::uint64_t i = 0; i < n_clusters; ++i) {
    TaskCluster c;
    c.task_id = static_cast<int>(r.i64());
    const std::uint64_t n_members = r.u64();
    for (std::uint64_t j = 0; j < n_members; ++j)
      c.member_prompt_ids.push_back(r.str());
    c.center = r.vec();
    c.fused_list.order = r.int_vec();
    if (r.u8()) {
      const std::uint64_t n_scores = r.u64();
      std::vector<double> scores(n_scores);
      for (auto& s : scores) s = r.f64();
      c.fused_list.scores = std::move(scores);
    }
    c.median_quality = r.vec();
    c.candidates = r.int_vec();
    c.description_embedding = r.vec();
    result.clusters.push_back(std::move(c));
  }
  result.others_median_quality = r.vec();
  const std::uint64_t n_assign = r.u64();
  for (std::uint64_t i = 0; i < n_assign; ++i) {
    std::string id = r.str();
    result.assignment[std::move(id)] = static_cast<int>(r.i64());
  }
  return result;
}

}  // namespace taskroute
