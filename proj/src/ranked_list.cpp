#include "taskroute/ranked_list.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskroute/types.hpp"

namespace taskroute {

RankedList ranked_list_from_quality(const Eigen::VectorXd& quality) {
  if (quality.size() == 0) throw Error("ranked list from empty quality vector");
  for (Eigen::Index i = 0; i < quality.size(); ++i)
    if (!std::isfinite(quality[i]))
      throw Error("ranked list from non-finite quality value");
  RankedList list;
  list.order.resize(static_cast<std::size_t>(quality.size()));
  std::iota(list.order.begin(), list.order.end(), 0);
  std::sort(list.order.begin(), list.order.end(), [&](int a, int b) {
    if (quality[a] != quality[b]) return quality[a] > quality[b];
    return a < b;
  });
  return list;
}

int rank_of(const RankedList& list, int model_index) {
  if (model_index < 0 || model_index >= list.size())
    throw Error("rank_of: model index " + std::to_string(model_index) +
                " out of range for pool of " + std::to_string(list.size()));
  for (int pos = 0; pos < list.size(); ++pos)
    if (list.order[pos] == model_index) return pos + 1;
  throw Error("rank_of: ranked list is not a permutation");
}

double rbo(const RankedList& a, const RankedList& b, double persistence) {
  if (a.size() != b.size())
    throw Error("rbo: rankings have different sizes");
  if (!(persistence > 0.0 && persistence < 1.0))
    throw Error("rbo: persistence must be in (0,1)");
  const int n = a.size();

  // Accumulate the shortfall from perfect agreement; for identical lists the
  // shortfall is exactly zero and the result is exactly 1.
  std::vector<char> in_a(n, 0), in_b(n, 0);
  int inter = 0;
  double deficit = 0.0;
  double weight = 1.0;  // persistence^(d-1)
  for (int d = 1; d <= n; ++d) {
    const int x = a.order[d - 1];
    const int y = b.order[d - 1];
    if (x < 0 || x >= n || y < 0 || y >= n || in_a[x] || in_b[y])
      throw Error("rbo: rankings must be permutations of the same index set");
    if (x == y) {
      ++inter;
    } else {
      if (in_b[x]) ++inter;
      if (in_a[y]) ++inter;
    }
    in_a[x] = 1;
    in_b[y] = 1;
    const int uni = 2 * d - inter;
    deficit += weight * (1.0 - static_cast<double>(inter) / uni);
    weight *= persistence;
  }
  return 1.0 - (1.0 - persistence) * deficit;
}

RankedList rrf_fuse(const std::vector<RankedList>& lists, double epsilon) {
  if (lists.empty()) throw Error("rrf_fuse: no input lists");
  if (!(epsilon > 0.0)) throw Error("rrf_fuse: epsilon must be positive");
  const int n = lists.front().size();
  for (const auto& l : lists)
    if (l.size() != n) throw Error("rrf_fuse: lists over different index sets");

  // Addends are summed in sorted order so the fused scores do not depend
  // on the order the input lists arrive in.
  std::vector<std::vector<double>> addends(n);
  std::vector<char> seen(n);
  for (const auto& l : lists) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int pos = 0; pos < n; ++pos) {
      const int m = l.order[pos];
      if (m < 0 || m >= n || seen[m])
        throw Error("rrf_fuse: list is not a permutation of the shared index set");
      seen[m] = 1;
      addends[m].push_back(1.0 / (static_cast<double>(pos + 1) + epsilon));
    }
  }
  const double inv_count = 1.0 / static_cast<double>(lists.size());
  std::vector<double> fused(n, 0.0);
  for (int m = 0; m < n; ++m) {
    std::sort(addends[m].begin(), addends[m].end());
    for (const double a : addends[m]) fused[m] += a;
    fused[m] *= inv_count;
  }

  RankedList out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::sort(out.order.begin(), out.order.end(), [&](int a, int b) {
    if (fused[a] != fused[b]) return fused[a] > fused[b];
    return a < b;
  });
  std::vector<double> aligned(n);
  for (int pos = 0; pos < n; ++pos) aligned[pos] = fused[out.order[pos]];
  out.scores = std::move(aligned);
  return out;
}

}  // namespace taskroute
