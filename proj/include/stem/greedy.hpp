#pragma once

#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "stem/corpus.hpp"
#include "stem/graph.hpp"

namespace stem {

struct GreedyVisit {
  SpeakerId speaker;
  std::optional<SpeakerId> via;  // empty for component seeds
  double weight = 0.0;           // weight of the attaching edge, 0 for seeds

  bool operator==(const GreedyVisit&) const = default;
};

struct GreedyResult {
  std::map<SpeakerId, StanceLabel> labels;
  std::vector<GreedyVisit> visit_order;
};

/// Heaviest-edge expansion from the OP, alternating labels along attaching
/// edges (Prim's algorithm with max instead of min). Components without the
/// OP are seeded from their smallest speaker id, labeled SideA.
///
/// Ties on weight go to the edge with the lexicographically smallest
/// (min endpoint, max endpoint) pair.
inline GreedyResult greedy_label(const InteractionNetwork& g) {
  const std::size_t n = g.size();
  GreedyResult result;
  std::vector<std::optional<StanceLabel>> label(n);

  // Max-heap on weight, then min on (lo, hi) endpoint index.
  struct Candidate {
    double weight;
    std::size_t lo, hi, from, to;
  };
  const auto worse = [](const Candidate& a, const Candidate& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    return std::tie(a.lo, a.hi) > std::tie(b.lo, b.hi);
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> frontier(worse);

  const auto push_edges = [&](std::size_t u) {
    for (const auto& nb : g.neighbors(u)) {
      if (label[nb.node]) continue;
      frontier.push({nb.weight, std::min(u, nb.node), std::max(u, nb.node), u, nb.node});
    }
  };

  const auto grow = [&](std::size_t seed) {
    label[seed] = StanceLabel::SideA;
    result.visit_order.push_back({g.node(seed), std::nullopt, 0.0});
    push_edges(seed);
    while (!frontier.empty()) {
      const Candidate c = frontier.top();
      frontier.pop();
      if (label[c.to]) continue;
      label[c.to] = opposite(*label[c.from]);
      result.visit_order.push_back({g.node(c.to), g.node(c.from), c.weight});
      push_edges(c.to);
    }
  };

  if (auto op = g.index_of(g.op())) grow(*op);
  for (std::size_t i = 0; i < n; ++i)
    if (!label[i]) grow(i);

  for (std::size_t i = 0; i < n; ++i) result.labels.emplace(g.node(i), *label[i]);
  return result;
}

}  // namespace stem
