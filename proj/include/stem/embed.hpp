#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stem/corpus.hpp"
#include "stem/detail/format.hpp"
#include "stem/error.hpp"
#include "stem/graph.hpp"

namespace stem {

struct SolverConfig {
  int max_sweeps = 2000;
  double rel_tol = 1e-10;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_sweeps < 1) throw Error(ErrorCode::InvalidConfig, "max_sweeps must be positive");
    if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "rel_tol must be positive");
  }
};

/// One unit vector per speaker; column i of `vectors` belongs to `order[i]`.
/// The ambient dimension equals the number of speakers.
struct SpeakerEmbedding {
  std::vector<SpeakerId> order;
  Eigen::MatrixXd vectors;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;

  std::size_t size() const { return order.size(); }

  std::optional<std::size_t> index_of(const SpeakerId& id) const {
    auto it = std::lower_bound(order.begin(), order.end(), id);
    if (it == order.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - order.begin());
  }

  Eigen::VectorXd vector(std::size_t i) const { return vectors.col(static_cast<Eigen::Index>(i)); }
};

/// Sum over edges of w_uv * (1 - <u, v>) / 2, with column i of `vectors`
/// aligned to node i of `g`.
inline double objective_from_vectors(const InteractionNetwork& g, const Eigen::MatrixXd& vectors) {
  double total = 0.0;
  for (const auto& e : g.edges()) {
    const double cosine = vectors.col(static_cast<Eigen::Index>(e.u)).dot(vectors.col(static_cast<Eigen::Index>(e.v)));
    total += e.weight * (1.0 - cosine) / 2.0;
  }
  return total;
}

inline double objective_value(const InteractionNetwork& g, const SpeakerEmbedding& emb) {
  if (emb.vectors.cols() != static_cast<Eigen::Index>(emb.order.size()))
    throw Error(ErrorCode::DimensionMismatch, "embedding has " + std::to_string(emb.vectors.cols()) +
                                                  " vectors for " + std::to_string(emb.order.size()) + " speakers");
  std::vector<Eigen::Index> col(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = emb.index_of(g.node(i));
    if (!idx) throw Error(ErrorCode::DimensionMismatch, "speaker '" + g.node(i) + "' has no vector");
    col[i] = static_cast<Eigen::Index>(*idx);
  }
  double total = 0.0;
  for (const auto& e : g.edges())
    total += e.weight * (1.0 - emb.vectors.col(col[e.u]).dot(emb.vectors.col(col[e.v]))) / 2.0;
  return total;
}

inline double objective_value(const CoreSubgraph& core, const SpeakerEmbedding& emb) {
  return objective_value(core.subgraph, emb);
}

/// Maximizes the max-cut SDP relaxation over unit vectors in R^n by
/// block-coordinate ascent on the full-rank factorization: each sweep replaces
/// every vector by -g/|g|, g being the weighted sum of its neighbours. A sweep
/// never lowers the objective. Stops once a sweep gains less than
/// rel_tol * |objective| and moves no vector by more than 1e-7; otherwise
/// returns the last iterate with converged == false.
inline SpeakerEmbedding solve_embedding(const InteractionNetwork& g, const SolverConfig& cfg) {
  constexpr double kStepTolerance = 1e-7;
  cfg.validate();
  if (g.size() < 2 || g.edges().empty())
    throw Error(ErrorCode::EmptyCore, "embedding needs at least 2 speakers and 1 edge");

  const auto n = static_cast<Eigen::Index>(g.size());
  SpeakerEmbedding emb;
  emb.order = g.nodes();
  emb.vectors.resize(n, n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    double norm = 0.0;
    do {
      for (Eigen::Index k = 0; k < n; ++k) emb.vectors(k, j) = normal(rng);
      norm = emb.vectors.col(j).norm();
    } while (norm == 0.0);
    emb.vectors.col(j) /= norm;
  }

  std::vector<double> strength(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const auto& nb : g.neighbors(i)) strength[i] += nb.weight;

  Eigen::VectorXd grad(n);
  Eigen::VectorXd updated(n);
  double objective = objective_from_vectors(g, emb.vectors);
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double max_step = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      grad.setZero();
      for (const auto& nb : g.neighbors(i)) grad.noalias() += nb.weight * emb.vectors.col(static_cast<Eigen::Index>(nb.node));
      const double norm = grad.norm();
      // Vanishing gradient: every direction is stationary, keep the vector.
      if (norm <= 1e-12 * strength[i]) continue;
      updated = -grad / norm;
      max_step = std::max(max_step, (updated - emb.vectors.col(col)).norm());
      emb.vectors.col(col) = updated;
    }
    const double next = objective_from_vectors(g, emb.vectors);
    const double gain = next - objective;
    objective = next;
    emb.iterations = sweep;
    // The objective gain is quadratic in the step, so it flattens long before
    // the vectors settle; require both.
    if (gain <= cfg.rel_tol * std::abs(objective) && max_step <= kStepTolerance) {
      emb.converged = true;
      break;
    }
  }
  emb.objective = objective;
  return emb;
}

inline SpeakerEmbedding solve_embedding(const CoreSubgraph& core, const SolverConfig& cfg) {
  return solve_embedding(core.subgraph, cfg);
}

struct MaxCut {
  double cut_value = 0.0;
  std::map<SpeakerId, StanceLabel> partition;
};

/// Weight of edges whose endpoints carry different labels. Unlabeled
/// endpoints do not count.
inline double cut_weight(const InteractionNetwork& g, const std::map<SpeakerId, StanceLabel>& labels) {
  double total = 0.0;
  for (const auto& e : g.edges()) {
    auto a = labels.find(g.node(e.u));
    auto b = labels.find(g.node(e.v));
    if (a != labels.end() && b != labels.end() && a->second != b->second) total += e.weight;
  }
  return total;
}

/// Exact max-cut by Gray-code enumeration of the 2^(n-1) bipartitions with the
/// first node fixed on SideA.
inline MaxCut brute_force_maxcut(const InteractionNetwork& g) {
  constexpr std::size_t kMaxNodes = 22;
  const std::size_t n = g.size();
  if (n > kMaxNodes)
    throw Error(ErrorCode::TooLarge, std::to_string(n) + " nodes exceeds enumeration limit of 22");
  MaxCut out;
  if (n == 0) return out;

  std::vector<bool> side(n, false);
  std::vector<bool> best_side = side;
  double cut = 0.0;
  double best = 0.0;
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::size_t x = static_cast<std::size_t>(std::countr_zero(k)) + 1;
    for (const auto& nb : g.neighbors(x)) cut += (side[nb.node] == side[x]) ? nb.weight : -nb.weight;
    side[x] = !side[x];
    if (cut > best) {
      best = cut;
      best_side = side;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    out.partition.emplace(g.node(i), best_side[i] ? StanceLabel::SideB : StanceLabel::SideA);
  out.cut_value = cut_weight(g, out.partition);
  return out;
}

/// CSV with header `speaker,dim_0,...,dim_{n-1}`, one row per speaker.
inline void write_embedding_csv(std::ostream& os, const SpeakerEmbedding& emb) {
  os << "speaker";
  for (Eigen::Index d = 0; d < emb.vectors.rows(); ++d) os << ",dim_" << d;
  os << '\n';
  for (std::size_t i = 0; i < emb.order.size(); ++i) {
    os << detail::csv_field(emb.order[i]);
    for (Eigen::Index d = 0; d < emb.vectors.rows(); ++d)
      os << ',' << detail::format_double(emb.vectors(d, static_cast<Eigen::Index>(i)));
    os << '\n';
  }
}

}  // namespace stem
