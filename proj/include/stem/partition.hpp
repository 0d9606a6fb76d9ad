#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "stem/corpus.hpp"
#include "stem/embed.hpp"
#include "stem/error.hpp"
#include "stem/graph.hpp"
#include "stem/greedy.hpp"

namespace stem {

using LabelMap = std::map<SpeakerId, StanceLabel>;

struct RoundingConfig {
  int num_hyperplanes = 100;
  std::uint64_t seed = 0;
  std::optional<double> cone_diameter_threshold;

  void validate() const {
    if (num_hyperplanes < 1) throw Error(ErrorCode::InvalidConfig, "num_hyperplanes must be >= 1");
    if (cone_diameter_threshold && !(*cone_diameter_threshold >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "cone diameter threshold must be >= 0");
  }
};

/// Same-label cluster of unit vectors.
struct Cone {
  Eigen::VectorXd center;  // normalized mean; empty when the class is empty
  double diameter = 0.0;   // max pairwise Euclidean distance, in [0, 2]
  std::size_t count = 0;
};

struct ConeStats {
  std::array<Cone, 2> cones;  // indexed by SideA, SideB
  double confidence = 0.0;    // 1 - max diameter / 2

  const Cone& cone(StanceLabel label) const { return cones[static_cast<std::size_t>(label)]; }
  std::array<double, 2> diameters() const { return {cones[0].diameter, cones[1].diameter}; }
};

struct RoundingResult {
  LabelMap core_labels;
  double cut_value = 0.0;
  ConeStats cone_stats;
};

namespace detail {

inline std::vector<Eigen::Index> embedding_columns(const InteractionNetwork& g, const SpeakerEmbedding& emb) {
  std::vector<Eigen::Index> cols(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = emb.index_of(g.node(i));
    if (!idx) throw Error(ErrorCode::DimensionMismatch, "speaker '" + g.node(i) + "' has no vector");
    cols[i] = static_cast<Eigen::Index>(*idx);
  }
  return cols;
}

}  // namespace detail

inline ConeStats compute_cone_stats(const SpeakerEmbedding& emb, const LabelMap& labels) {
  ConeStats stats;
  std::array<std::vector<Eigen::Index>, 2> members;
  for (std::size_t i = 0; i < emb.size(); ++i)
    if (auto it = labels.find(emb.order[i]); it != labels.end())
      members[static_cast<std::size_t>(it->second)].push_back(static_cast<Eigen::Index>(i));

  for (std::size_t c = 0; c < 2; ++c) {
    Cone& cone = stats.cones[c];
    const auto& idx = members[c];
    cone.count = idx.size();
    if (idx.empty()) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(emb.vectors.rows());
    for (auto i : idx) mean += emb.vectors.col(i);
    const double norm = mean.norm();
    // A mean of exactly zero has no direction; fall back to the first member.
    cone.center = norm > 1e-12 ? Eigen::VectorXd(mean / norm) : Eigen::VectorXd(emb.vectors.col(idx.front()));
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        cone.diameter = std::max(cone.diameter, (emb.vectors.col(idx[a]) - emb.vectors.col(idx[b])).norm());
    cone.diameter = std::min(cone.diameter, 2.0);
  }
  stats.confidence = 1.0 - std::max(stats.cones[0].diameter, stats.cones[1].diameter) / 2.0;
  return stats;
}

/// Random-hyperplane rounding, best of `num_hyperplanes` by cut weight (first
/// wins on ties). If the OP is in the core the result is oriented so that the
/// OP is on SideA.
inline RoundingResult round_embedding(const SpeakerEmbedding& emb, const CoreSubgraph& core,
                                      const RoundingConfig& cfg) {
  cfg.validate();
  if (emb.size() == 0) throw Error(ErrorCode::EmptyCore, "cannot round an empty embedding");
  const InteractionNetwork& g = core.subgraph;
  const auto cols = detail::embedding_columns(g, emb);
  const auto dim = emb.vectors.rows();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd direction(dim);
  std::vector<bool> side(g.size());
  std::vector<bool> best_side;
  double best_cut = -1.0;
  for (int h = 0; h < cfg.num_hyperplanes; ++h) {
    for (Eigen::Index k = 0; k < dim; ++k) direction(k) = normal(rng);
    for (std::size_t i = 0; i < g.size(); ++i) side[i] = direction.dot(emb.vectors.col(cols[i])) < 0.0;
    double cut = 0.0;
    for (const auto& e : g.edges())
      if (side[e.u] != side[e.v]) cut += e.weight;
    if (cut > best_cut) {
      best_cut = cut;
      best_side = side;
    }
  }

  if (auto op = g.index_of(g.op()); op && best_side[*op]) best_side.flip();

  RoundingResult out;
  for (std::size_t i = 0; i < g.size(); ++i)
    out.core_labels.emplace(g.node(i), best_side[i] ? StanceLabel::SideB : StanceLabel::SideA);
  out.cut_value = cut_weight(g, out.core_labels);
  out.cone_stats = compute_cone_stats(emb, out.core_labels);
  return out;
}

/// In-cone iff the distance from the speaker's vector to its class center is
/// at most d / 2 (with 1e-9 slack for round-off). Unlabeled speakers are
/// omitted.
inline std::map<SpeakerId, bool> cone_membership(const SpeakerEmbedding& emb, const LabelMap& labels,
                                                 const ConeStats& stats, double d) {
  if (!(d >= 0.0)) throw Error(ErrorCode::InvalidConfig, "cone diameter must be >= 0");
  std::map<SpeakerId, bool> out;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    auto it = labels.find(emb.order[i]);
    if (it == labels.end()) continue;
    const Cone& cone = stats.cone(it->second);
    const bool inside =
        cone.center.size() == emb.vectors.rows() &&
        (emb.vectors.col(static_cast<Eigen::Index>(i)) - cone.center).norm() <= d / 2.0 + 1e-9;
    out.emplace(emb.order[i], inside);
  }
  return out;
}

struct Propagation {
  LabelMap labels;
  std::map<SpeakerId, SpeakerId> attached_to;  // non-core speaker -> labeled neighbour
  std::vector<SpeakerId> fallback;             // labeled by greedy, no path to the core
};

/// Labels non-core speakers opposite to their heaviest already-labeled
/// neighbour, walking the peeling order backwards. Components that never
/// touch the core are labeled by greedy_label on that component.
inline Propagation propagate_labels(const InteractionNetwork& full, const CoreSubgraph& core,
                                    const LabelMap& core_labels) {
  Propagation out;
  out.labels = core_labels;
  for (const auto& id : core.subgraph.nodes())
    if (!core_labels.contains(id))
      throw Error(ErrorCode::DimensionMismatch, "core speaker '" + id + "' has no label");

  const auto try_attach = [&](const SpeakerId& id) {
    const auto idx = full.index_of(id);
    if (!idx) return true;
    const SpeakerId* best = nullptr;
    double best_weight = 0.0;
    for (const auto& nb : full.neighbors(*idx)) {
      const SpeakerId& other = full.node(nb.node);
      if (!out.labels.contains(other)) continue;
      if (best == nullptr || nb.weight > best_weight) {
        best = &other;
        best_weight = nb.weight;
      }
    }
    if (best == nullptr) return false;
    out.labels[id] = opposite(out.labels.at(*best));
    out.attached_to[id] = *best;
    return true;
  };

  std::vector<SpeakerId> pending;
  for (auto it = core.removed.rbegin(); it != core.removed.rend(); ++it)
    if (!try_attach(*it)) pending.push_back(*it);

  // Pending speakers normally sit in core-free components; anything adjacent
  // to a labeled speaker still attaches first.
  for (bool progress = true; progress && !pending.empty();) {
    progress = false;
    std::vector<SpeakerId> still;
    for (const auto& id : pending) {
      if (try_attach(id))
        progress = true;
      else
        still.push_back(id);
    }
    pending.swap(still);
  }
  if (pending.empty()) return out;

  const std::set<SpeakerId> unlabeled(pending.begin(), pending.end());
  for (const auto& comp : component_indices(full)) {
    if (!unlabeled.contains(full.node(comp.front()))) continue;
    const auto sub = full.induced(std::span<const std::size_t>(comp));
    for (const auto& [id, label] : greedy_label(sub).labels) {
      out.labels[id] = label;
      out.fallback.push_back(id);
    }
  }
  return out;
}

/// Hard two-way labeling of every speaker of a conversation.
struct StancePartition {
  std::string conversation_id;
  std::string algorithm = "stem";
  LabelMap labels;
  std::vector<SpeakerId> core_speakers;
  LabelMap core_labels;
  double cut_value = 0.0;
  std::optional<double> confidence;
  std::optional<std::array<double, 2>> cone_diameters;
  std::map<SpeakerId, bool> in_cone;
  std::vector<std::string> warnings;

  bool operator==(const StancePartition&) const = default;
};

inline nlohmann::json to_json(const StancePartition& p) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [id, label] : p.labels) labels[id] = std::string(to_string(label));
  nlohmann::json in_cone = nlohmann::json::object();
  for (const auto& [id, inside] : p.in_cone) in_cone[id] = inside;
  nlohmann::json out;
  out["conversation_id"] = p.conversation_id;
  out["algorithm"] = p.algorithm;
  out["labels"] = std::move(labels);
  out["core_speakers"] = p.core_speakers;
  out["cut_value"] = p.cut_value;
  out["confidence"] = p.confidence ? nlohmann::json(*p.confidence) : nlohmann::json(nullptr);
  out["cone_diameters"] = p.cone_diameters ? nlohmann::json(*p.cone_diameters) : nlohmann::json(nullptr);
  out["in_cone"] = std::move(in_cone);
  out["warnings"] = p.warnings;
  return out;
}

inline StancePartition partition_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "partition must be a JSON object");
  try {
    StancePartition p;
    p.conversation_id = doc.at("conversation_id").get<std::string>();
    p.algorithm = doc.value("algorithm", std::string("stem"));
    for (const auto& [id, v] : doc.at("labels").items())
      p.labels.emplace(id, detail::require_label(v, "speaker '" + id + "'"));
    p.core_speakers = doc.at("core_speakers").get<std::vector<SpeakerId>>();
    for (const auto& id : p.core_speakers)
      if (auto it = p.labels.find(id); it != p.labels.end()) p.core_labels.emplace(id, it->second);
    p.cut_value = doc.at("cut_value").get<double>();
    if (const auto& c = doc.at("confidence"); !c.is_null()) p.confidence = c.get<double>();
    if (auto it = doc.find("cone_diameters"); it != doc.end() && !it->is_null())
      p.cone_diameters = it->get<std::array<double, 2>>();
    if (auto it = doc.find("in_cone"); it != doc.end())
      for (const auto& [id, v] : it->items()) p.in_cone.emplace(id, v.get<bool>());
    if (auto it = doc.find("warnings"); it != doc.end()) p.warnings = it->get<std::vector<std::string>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("partition: ") + e.what());
  }
}

/// Every intermediate product of one pipeline run; the CLI dumps these.
struct StemRun {
  InteractionNetwork network;
  CoreSubgraph core;
  std::optional<SpeakerEmbedding> embedding;
  StancePartition partition;
};

namespace detail {

inline void add_structure_warnings(const ConversationTree& tree, StancePartition& p) {
  for (auto& w : validate_conversation(tree)) p.warnings.push_back(std::move(w.message));
}

inline void greedy_into(const InteractionNetwork& network, const CoreSubgraph& core, StancePartition& p) {
  p.labels = greedy_label(network).labels;
  p.core_speakers = core.subgraph.nodes();
  for (const auto& id : p.core_speakers) p.core_labels.emplace(id, p.labels.at(id));
  p.cut_value = cut_weight(core.subgraph, p.core_labels);
  for (const auto& id : network.nodes()) p.in_cone.emplace(id, false);
}

}  // namespace detail

/// Build network, take the 2-core, embed, round, propagate. Degenerate
/// conversations (no 2-core) fall back to greedy labels with confidence 0.
inline StemRun run_stem(const ConversationTree& tree, const WeightConfig& wcfg, const SolverConfig& scfg,
                        const RoundingConfig& rcfg) {
  wcfg.validate();
  scfg.validate();
  rcfg.validate();
  StemRun run;
  run.network = build_network(tree, wcfg);
  run.core = two_core(run.network);
  StancePartition& p = run.partition;
  p.conversation_id = tree.conversation_id();
  p.algorithm = "stem";
  detail::add_structure_warnings(tree, p);

  if (run.core.subgraph.size() < 2 || run.core.subgraph.edges().empty()) {
    detail::greedy_into(run.network, run.core, p);
    p.core_speakers.clear();
    p.core_labels.clear();
    p.cut_value = 0.0;
    p.confidence = 0.0;
    p.warnings.push_back("CoreEmpty: interaction network has no 2-core; labels from greedy fallback");
    return run;
  }

  run.embedding = solve_embedding(run.core, scfg);
  const SpeakerEmbedding& emb = *run.embedding;
  if (!emb.converged)
    p.warnings.push_back("NonConvergence: solver stopped after " + std::to_string(emb.iterations) +
                         " sweeps; using best embedding so far");

  auto rounded = round_embedding(emb, run.core, rcfg);
  auto propagated = propagate_labels(run.network, run.core, rounded.core_labels);

  p.labels = std::move(propagated.labels);
  p.core_speakers = run.core.subgraph.nodes();
  p.core_labels = std::move(rounded.core_labels);
  p.cut_value = rounded.cut_value;
  p.confidence = rounded.cone_stats.confidence;
  p.cone_diameters = rounded.cone_stats.diameters();
  const auto inside = cone_membership(emb, p.core_labels, rounded.cone_stats,
                                      rcfg.cone_diameter_threshold.value_or(4.0));
  for (const auto& id : run.network.nodes()) {
    auto it = inside.find(id);
    p.in_cone.emplace(id, it != inside.end() && it->second);
  }
  for (const auto& id : propagated.fallback)
    p.warnings.push_back("speaker '" + id + "' has no path to the core; labeled by greedy fallback");
  return run;
}

inline StancePartition stem_pipeline(const ConversationTree& tree, const WeightConfig& wcfg,
                                     const SolverConfig& scfg, const RoundingConfig& rcfg) {
  return run_stem(tree, wcfg, scfg, rcfg).partition;
}

/// GreedySpeaker on the full network, packaged like a STEM result (no confidence).
inline StemRun run_greedy(const ConversationTree& tree, const WeightConfig& wcfg) {
  StemRun run;
  run.network = build_network(tree, wcfg);
  run.core = two_core(run.network);
  StancePartition& p = run.partition;
  p.conversation_id = tree.conversation_id();
  p.algorithm = "greedy";
  detail::add_structure_warnings(tree, p);
  detail::greedy_into(run.network, run.core, p);
  return run;
}

}  // namespace stem
