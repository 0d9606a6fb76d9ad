#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "stem/corpus.hpp"
#include "stem/detail/format.hpp"
#include "stem/error.hpp"

namespace stem {

/// Reply and quote weights of the interaction network.
struct WeightConfig {
  double alpha = 1.0;
  double beta = 0.0;

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0) || !std::isfinite(alpha + beta))
      throw Error(ErrorCode::InvalidConfig, "weights require alpha >= 0, beta >= 0, alpha + beta > 0");
  }
};

struct Neighbor {
  std::size_t node;
  double weight;
};

/// Undirected edge between node indices, u < v.
struct Edge {
  std::size_t u;
  std::size_t v;
  double weight;

  bool operator==(const Edge&) const = default;
};

/// Undirected weighted speaker graph. Nodes are kept sorted by id so that node
/// index order equals id order.
class InteractionNetwork {
 public:
  using IdEdge = std::tuple<SpeakerId, SpeakerId, double>;

  InteractionNetwork() = default;

  /// Parallel edges are summed; non-positive totals are dropped. Endpoints
  /// missing from `nodes` are added.
  InteractionNetwork(std::vector<SpeakerId> nodes, const std::vector<IdEdge>& edges, SpeakerId op = {})
      : op_(std::move(op)) {
    for (const auto& [u, v, w] : edges) {
      nodes.push_back(u);
      nodes.push_back(v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    nodes_ = std::move(nodes);

    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const auto& [a, b, w] : edges) {
      if (a == b) throw Error(ErrorCode::MalformedInput, "self-loop on '" + a + "'");
      std::size_t u = *index_of(a);
      std::size_t v = *index_of(b);
      if (u > v) std::swap(u, v);
      merged[{u, v}] += w;
    }
    for (const auto& [key, w] : merged)
      if (w > 0.0) edges_.push_back({key.first, key.second, w});
    build_adjacency();
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<SpeakerId>& nodes() const { return nodes_; }
  const SpeakerId& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_[i]; }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  const SpeakerId& op() const { return op_; }

  std::optional<std::size_t> index_of(const SpeakerId& id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  bool contains(const SpeakerId& id) const { return index_of(id).has_value(); }

  double weight(std::size_t u, std::size_t v) const {
    const auto& adj = adjacency_[u];
    auto it = std::lower_bound(adj.begin(), adj.end(), v,
                               [](const Neighbor& n, std::size_t x) { return n.node < x; });
    return (it != adj.end() && it->node == v) ? it->weight : 0.0;
  }

  double weight(const SpeakerId& a, const SpeakerId& b) const {
    auto u = index_of(a);
    auto v = index_of(b);
    return (u && v) ? weight(*u, *v) : 0.0;
  }

  double total_weight() const {
    double total = 0.0;
    for (const auto& e : edges_) total += e.weight;
    return total;
  }

  /// Subgraph induced by the given node indices (any order, duplicates ignored).
  InteractionNetwork induced(std::span<const std::size_t> keep) const {
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::size_t> remap(nodes_.size(), npos);
    InteractionNetwork out;
    out.op_ = op_;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      remap[sorted[i]] = i;
      out.nodes_.push_back(nodes_[sorted[i]]);
    }
    for (const auto& e : edges_)
      if (remap[e.u] != npos && remap[e.v] != npos)
        out.edges_.push_back({remap[e.u], remap[e.v], e.weight});
    out.build_adjacency();
    return out;
  }

  InteractionNetwork induced(std::span<const SpeakerId> keep) const {
    std::vector<std::size_t> idx;
    for (const auto& id : keep)
      if (auto i = index_of(id)) idx.push_back(*i);
    return induced(std::span<const std::size_t>(idx));
  }

  bool operator==(const InteractionNetwork& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ && op_ == other.op_;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void build_adjacency() {
    adjacency_.assign(nodes_.size(), {});
    for (const auto& e : edges_) {
      adjacency_[e.u].push_back({e.v, e.weight});
      adjacency_[e.v].push_back({e.u, e.weight});
    }
    for (auto& adj : adjacency_)
      std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }

  std::vector<SpeakerId> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  SpeakerId op_;
};

/// 2-core of a network plus the peeling record needed for label propagation.
struct CoreSubgraph {
  InteractionNetwork subgraph;
  std::vector<SpeakerId> removed;  // in removal order

  bool empty() const { return subgraph.empty(); }
};

/// w_uv = alpha * (replies(u,v) + replies(v,u)) + beta * (quotes(u,v) + quotes(v,u)).
/// Every author becomes a node, interacting or not. Self-interactions and
/// quotes of unknown authors are skipped.
inline InteractionNetwork build_network(const ConversationTree& tree, const WeightConfig& cfg) {
  cfg.validate();
  const auto authors = tree.authors();
  const std::set<SpeakerId> known(authors.begin(), authors.end());

  struct Counts {
    long replies = 0;
    long quotes = 0;
  };
  std::map<std::pair<SpeakerId, SpeakerId>, Counts> counts;
  const auto key = [](const SpeakerId& a, const SpeakerId& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  for (const auto& p : tree.posts()) {
    if (p.parent_id) {
      const auto& target = tree.find_post(*p.parent_id)->author;
      if (target != p.author) ++counts[key(p.author, target)].replies;
    }
    for (const auto& q : p.quoted_authors)
      if (q != p.author && known.contains(q)) ++counts[key(p.author, q)].quotes;
  }

  std::vector<InteractionNetwork::IdEdge> edges;
  for (const auto& [pair, c] : counts) {
    const double w = cfg.alpha * static_cast<double>(c.replies) + cfg.beta * static_cast<double>(c.quotes);
    if (w > 0.0) edges.emplace_back(pair.first, pair.second, w);
  }
  return InteractionNetwork(authors, edges, tree.op());
}

/// Peels nodes of degree < 2 until none remain. Among eligible nodes the
/// smallest id is removed first.
inline CoreSubgraph two_core(const InteractionNetwork& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> degree(n);
  std::vector<bool> removed(n, false);
  std::set<std::size_t> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    degree[i] = g.degree(i);
    if (degree[i] < 2) eligible.insert(i);
  }

  CoreSubgraph out;
  while (!eligible.empty()) {
    const std::size_t cur = *eligible.begin();
    eligible.erase(eligible.begin());
    removed[cur] = true;
    out.removed.push_back(g.node(cur));
    for (const auto& nb : g.neighbors(cur)) {
      if (removed[nb.node]) continue;
      if (--degree[nb.node] < 2) eligible.insert(nb.node);
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (!removed[i]) keep.push_back(i);
  out.subgraph = g.induced(std::span<const std::size_t>(keep));
  return out;
}

/// Components ordered by their smallest node id.
inline std::vector<std::vector<std::size_t>> component_indices(const InteractionNetwork& g) {
  std::vector<std::vector<std::size_t>> comps;
  std::vector<bool> seen(g.size(), false);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      comp.push_back(cur);
      for (const auto& nb : g.neighbors(cur)) {
        if (seen[nb.node]) continue;
        seen[nb.node] = true;
        stack.push_back(nb.node);
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline std::vector<InteractionNetwork> connected_components(const InteractionNetwork& g) {
  std::vector<InteractionNetwork> out;
  for (const auto& comp : component_indices(g)) out.push_back(g.induced(std::span<const std::size_t>(comp)));
  return out;
}

/// Edge list as `u,v,weight` CSV with a header row.
inline void write_edge_csv(std::ostream& os, const InteractionNetwork& g) {
  os << "u,v,weight\n";
  for (const auto& e : g.edges())
    os << detail::csv_field(g.node(e.u)) << ',' << detail::csv_field(g.node(e.v)) << ','
       << detail::format_double(e.weight) << '\n';
}

}  // namespace stem
