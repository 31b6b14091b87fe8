#include "taskroute/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "taskroute/rng.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

namespace {

// Gains below this are treated as zero so floating-point noise cannot
// cycle the local-moving pass.
constexpr double kGainTolerance = 1e-12;

// Aggregated working graph. Self-loops carry the edge mass collapsed inside
// a supernode; they count once in total_mass and twice in the degree.
struct WorkGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double total_mass = 0.0;
};

WorkGraph from_prompt_graph(const PromptGraph& g) {
  WorkGraph wg;
  wg.n = g.node_count;
  wg.adj.assign(wg.n, {});
  wg.self_loop.assign(wg.n, 0.0);
  wg.degree.assign(wg.n, 0.0);
  for (const auto& e : g.edges) {
    wg.adj[e.u].emplace_back(e.v, e.weight);
    wg.adj[e.v].emplace_back(e.u, e.weight);
    wg.degree[e.u] += e.weight;
    wg.degree[e.v] += e.weight;
    wg.total_mass += e.weight;
  }
  return wg;
}

double partition_modularity(const WorkGraph& wg, const std::vector<int>& comm,
                            double resolution) {
  if (wg.total_mass <= 0.0) return 0.0;
  const int k = 1 + *std::max_element(comm.begin(), comm.end());
  std::vector<double> internal(k, 0.0), total(k, 0.0);
  for (int u = 0; u < wg.n; ++u) {
    internal[comm[u]] += wg.self_loop[u];
    total[comm[u]] += wg.degree[u];
    for (const auto& [v, w] : wg.adj[u])
      if (u < v && comm[u] == comm[v]) internal[comm[u]] += w;
  }
  const double m = wg.total_mass;
  double q = 0.0;
  for (int c = 0; c < k; ++c) {
    const double frac = total[c] / (2.0 * m);
    q += internal[c] / m - resolution * frac * frac;
  }
  return q;
}

int compact_ids(std::vector<int>& ids) {
  std::vector<int> remap(ids.size(), -1);
  int next = 0;
  for (int& id : ids) {
    if (remap[id] < 0) remap[id] = next++;
    id = remap[id];
  }
  return next;
}

// Queue-based local moving, run in full sweeps until a sweep accepts no
// move. Gains are measured against leaving the node in its own community.
bool move_nodes(const WorkGraph& wg, std::vector<int>& comm, double resolution,
                Rng& rng, std::vector<double>* trace, double* q_running) {
  const double m = wg.total_mass;
  if (m <= 0.0) return false;

  std::vector<double> comm_total(wg.n, 0.0);
  for (int u = 0; u < wg.n; ++u) comm_total[comm[u]] += wg.degree[u];

  std::vector<int> order(wg.n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> weight_to(wg.n, 0.0);
  bool any_move = false;

  bool sweep_moved = true;
  while (sweep_moved) {
    sweep_moved = false;
    rng.shuffle(order);
    for (const int u : order) {
      const int c_old = comm[u];
      comm_total[c_old] -= wg.degree[u];

      std::vector<int> touched;
      for (const auto& [v, w] : wg.adj[u]) {
        if (v == u) continue;
        const int c = comm[v];
        if (weight_to[c] == 0.0) touched.push_back(c);
        weight_to[c] += w;
      }
      if (weight_to[c_old] == 0.0) touched.push_back(c_old);

      // Gain of joining community c relative to staying alone.
      auto gain_of = [&](int c) {
        return weight_to[c] / m -
               resolution * wg.degree[u] * comm_total[c] / (2.0 * m * m);
      };
      const double old_gain = gain_of(c_old);
      int best = c_old;
      double best_gain = old_gain;
      for (const int c : touched) {
        if (c == c_old) continue;
        const double gain = gain_of(c);
        if (gain > best_gain + kGainTolerance) {
          best = c;
          best_gain = gain;
        } else if (best != c_old &&
                   std::abs(gain - best_gain) <= kGainTolerance && c < best) {
          best = c;
        }
      }

      comm[u] = best;
      comm_total[best] += wg.degree[u];
      if (best != c_old) {
        sweep_moved = true;
        any_move = true;
        if (trace && q_running) {
          *q_running += best_gain - old_gain;
          trace->push_back(*q_running);
        }
      }
      for (const int c : touched) weight_to[c] = 0.0;
    }
  }
  return any_move;
}

// Refinement: inside each community, merge nodes greedily starting from
// singletons. Only still-singleton nodes move, and only along positive-gain
// edges, which keeps refined parts internally connected.
std::vector<int> refine(const WorkGraph& wg, const std::vector<int>& comm,
                        double resolution, Rng& rng) {
  std::vector<int> refined(wg.n);
  std::iota(refined.begin(), refined.end(), 0);
  const double m = wg.total_mass;
  if (m <= 0.0) return refined;

  std::vector<double> part_total(wg.n);
  std::vector<int> part_size(wg.n, 1);
  for (int u = 0; u < wg.n; ++u) part_total[u] = wg.degree[u];

  std::vector<int> order(wg.n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<double> weight_to(wg.n, 0.0);
  for (const int u : order) {
    if (part_size[refined[u]] > 1) continue;
    std::vector<int> touched;
    for (const auto& [v, w] : wg.adj[u]) {
      if (v == u || comm[v] != comm[u]) continue;
      const int r = refined[v];
      if (r == refined[u]) continue;
      if (weight_to[r] == 0.0) touched.push_back(r);
      weight_to[r] += w;
    }
    int best = -1;
    double best_gain = kGainTolerance;
    for (const int r : touched) {
      const double gain = weight_to[r] / m -
                          resolution * wg.degree[u] * part_total[r] / (2.0 * m * m);
      if (gain > best_gain || (gain == best_gain && best >= 0 && r < best)) {
        best = r;
        best_gain = gain;
      }
    }
    if (best >= 0) {
      part_total[best] += wg.degree[u];
      part_size[best] += part_size[refined[u]];
      refined[u] = best;
    }
    for (const int r : touched) weight_to[r] = 0.0;
  }
  return refined;
}

WorkGraph aggregate(const WorkGraph& wg, const std::vector<int>& refined,
                    int part_count) {
  WorkGraph agg;
  agg.n = part_count;
  agg.adj.assign(part_count, {});
  agg.self_loop.assign(part_count, 0.0);
  agg.degree.assign(part_count, 0.0);
  agg.total_mass = wg.total_mass;

  std::vector<std::vector<double>> cross(part_count);
  for (auto& row : cross) row.assign(part_count, 0.0);
  for (int u = 0; u < wg.n; ++u) {
    agg.self_loop[refined[u]] += wg.self_loop[u];
    for (const auto& [v, w] : wg.adj[u]) {
      if (u > v) continue;
      const int ru = refined[u], rv = refined[v];
      if (ru == rv)
        agg.self_loop[ru] += w;
      else
        cross[std::min(ru, rv)][std::max(ru, rv)] += w;
    }
  }
  for (int a = 0; a < part_count; ++a) {
    agg.degree[a] += 2.0 * agg.self_loop[a];
    for (int b = a + 1; b < part_count; ++b) {
      if (cross[a][b] == 0.0) continue;
      agg.adj[a].emplace_back(b, cross[a][b]);
      agg.adj[b].emplace_back(a, cross[a][b]);
      agg.degree[a] += cross[a][b];
      agg.degree[b] += cross[a][b];
    }
  }
  return agg;
}

}  // namespace

namespace {

std::vector<int> leiden_once(const PromptGraph& g, double resolution,
                             std::uint64_t seed,
                             std::vector<double>* modularity_trace) {
  WorkGraph wg = from_prompt_graph(g);
  Rng rng(seed);

  // node_of[i]: supernode currently containing original node i
  std::vector<int> node_of(g.node_count);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<int> comm(wg.n);
  std::iota(comm.begin(), comm.end(), 0);

  double q_running = partition_modularity(wg, comm, resolution);
  if (modularity_trace) modularity_trace->push_back(q_running);

  while (true) {
    const bool moved =
        move_nodes(wg, comm, resolution, rng, modularity_trace, &q_running);
    const int comm_count = compact_ids(comm);
    if (!moved || comm_count == wg.n) break;

    std::vector<int> refined = refine(wg, comm, resolution, rng);
    const int part_count = compact_ids(refined);
    if (part_count == wg.n) break;  // no compression possible

    // Initial communities for the next level come from the current
    // partition; every refined part lies inside one community.
    std::vector<int> next_comm(part_count, -1);
    for (int u = 0; u < wg.n; ++u) next_comm[refined[u]] = comm[u];
    wg = aggregate(wg, refined, part_count);
    for (int& s : node_of) s = refined[s];
    comm = std::move(next_comm);
    compact_ids(comm);
  }

  std::vector<int> result(g.node_count);
  for (int i = 0; i < g.node_count; ++i) result[i] = comm[node_of[i]];
  compact_ids(result);
  return result;
}

}  // namespace

double modularity(const PromptGraph& g, const std::vector<int>& community,
                  double resolution) {
  if (static_cast<int>(community.size()) != g.node_count)
    throw Error("modularity: community vector size mismatch");
  return partition_modularity(from_prompt_graph(g), community, resolution);
}

std::vector<int> leiden_partition(const PromptGraph& g, double resolution,
                                  std::uint64_t seed,
                                  std::vector<double>* modularity_trace) {
  if (g.node_count < 1) throw Error("leiden_partition: empty graph");
  if (!(resolution > 0.0)) throw Error("leiden_partition: resolution must be positive");

  // A few seeded restarts; greedy local moving alone can lodge in a local
  // optimum whose visit order a different shuffle avoids.
  constexpr int kRestarts = 3;
  std::vector<int> best;
  std::vector<double> best_trace;
  double best_q = 0.0;
  for (int r = 0; r < kRestarts; ++r) {
    std::vector<double> trace;
    std::vector<int> part = leiden_once(
        g, resolution, mix_seed(seed, 0x2e57a27 + static_cast<std::uint64_t>(r)),
        modularity_trace ? &trace : nullptr);
    const double q = modularity(g, part, resolution);
    if (best.empty() || q > best_q) {
      best_q = q;
      best = std::move(part);
      best_trace = std::move(trace);
    }
  }
  if (modularity_trace)
    modularity_trace->insert(modularity_trace->end(), best_trace.begin(),
                             best_trace.end());
  return best;
}

}  // namespace taskroute
