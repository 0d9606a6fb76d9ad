#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stem/partition.hpp"
#include "stem/pca.hpp"
#include "stem/synth.hpp"

namespace stem {
namespace {

using testing::make_graph;
constexpr auto A = StanceLabel::SideA;
constexpr auto B = StanceLabel::SideB;

SpeakerEmbedding fixed_embedding(std::vector<SpeakerId> order, Eigen::MatrixXd vectors) {
  SpeakerEmbedding emb;
  emb.order = std::move(order);
  emb.vectors = std::move(vectors);
  return emb;
}

CoreSubgraph core_of(const InteractionNetwork& g) { return CoreSubgraph{g, {}}; }

Post post(std::string id, std::string author, std::optional<std::string> parent = std::nullopt) {
  return Post{std::move(id), std::move(author), std::move(parent), {}, std::nullopt};
}

LabelMap flipped(const LabelMap& labels) {
  LabelMap out;
  for (const auto& [id, l] : labels) out.emplace(id, opposite(l));
  return out;
}

TEST(RoundEmbedding, AntipodalPair) {
  const auto g = make_graph(2, {{0, 1, 3.0}});
  Eigen::MatrixXd v(2, 2);
  v << 1, -1, 0, 0;
  const auto r = round_embedding(fixed_embedding({"n00", "n01"}, v), core_of(g), {});
  EXPECT_DOUBLE_EQ(r.cut_value, 3.0);
  EXPECT_NE(r.core_labels.at("n00"), r.core_labels.at("n01"));
  EXPECT_DOUBLE_EQ(r.cone_stats.cones[0].diameter, 0.0);
  EXPECT_DOUBLE_EQ(r.cone_stats.cones[1].diameter, 0.0);
  EXPECT_DOUBLE_EQ(r.cone_stats.confidence, 1.0);
}

TEST(RoundEmbedding, FourCycleGetsTwoColoring) {
  const auto g = make_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {0, 3, 1.0}}, "n00");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v.row(1) << 1, -1, 1, -1;
  const auto r = round_embedding(fixed_embedding(g.nodes(), v), core_of(g), {});
  EXPECT_DOUBLE_EQ(r.cut_value, 4.0);
  EXPECT_EQ(r.core_labels, (LabelMap{{"n00", A}, {"n01", B}, {"n02", A}, {"n03", B}}));
}

TEST(RoundEmbedding, TriangleBestOfHundredFindsMaxCut) {
  const auto g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < 3; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 3.0;
    v(0, i) = std::cos(t);
    v(1, i) = std::sin(t);
  }
  const auto emb = fixed_embedding(g.nodes(), v);
  // 1000 trials x 100 hyperplanes.
  int hits = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    RoundingConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    hits += round_embedding(emb, core_of(g), cfg).cut_value == 2.0;
  }
  EXPECT_GE(hits, 999);
}

TEST(RoundEmbedding, FirstHyperplaneWinsTies) {
  // H = 1 must reproduce the first hyperplane of any larger run when every
  // hyperplane cuts the same weight.
  const auto g = make_graph(2, {{0, 1, 1.0}});
  Eigen::MatrixXd v(2, 2);
  v << 1, -1, 0, 0;
  const auto emb = fixed_embedding(g.nodes(), v);
  RoundingConfig one{1, 5, std::nullopt}, many{50, 5, std::nullopt};
  EXPECT_EQ(round_embedding(emb, core_of(g), one).core_labels, round_embedding(emb, core_of(g), many).core_labels);
}

TEST(RoundEmbedding, OpOrientedToSideA) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g0 = testing::random_connected_graph(rng, 8, 0.5);
    std::vector<InteractionNetwork::IdEdge> edges;
    for (const auto& e : g0.edges()) edges.emplace_back(g0.node(e.u), g0.node(e.v), e.weight);
    const InteractionNetwork g(g0.nodes(), edges, testing::node_name(rng() % 8));
    const auto emb = solve_embedding(g, {});
    EXPECT_EQ(round_embedding(emb, core_of(g), {}).core_labels.at(g.op()), A);
  }
}

TEST(RoundEmbedding, GoemansWilliamsonRatio) {
  std::mt19937_64 rng(2024);
  int good = 0;
  const int instances = 200;
  for (int trial = 0; trial < instances; ++trial) {
    const auto g = testing::random_connected_graph(rng, 3 + rng() % 10, 0.4);
    SolverConfig scfg;
    scfg.seed = rng();
    const auto emb = solve_embedding(g, scfg);
    RoundingConfig rcfg;
    rcfg.seed = rng();
    good += round_embedding(emb, core_of(g), rcfg).cut_value >= 0.87 * emb.objective;
  }
  EXPECT_GE(good, 190);
}

TEST(ConeStats, OrientationSymmetry) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::random_connected_graph(rng, 10, 0.4);
    const auto emb = solve_embedding(g, {});
    const auto r = round_embedding(emb, core_of(g), {});
    const auto flip = flipped(r.core_labels);
    const auto stats = compute_cone_stats(emb, flip);
    EXPECT_DOUBLE_EQ(cut_weight(g, flip), r.cut_value);
    EXPECT_DOUBLE_EQ(stats.cones[0].diameter, r.cone_stats.cones[1].diameter);
    EXPECT_DOUBLE_EQ(stats.cones[1].diameter, r.cone_stats.cones[0].diameter);
    EXPECT_DOUBLE_EQ(stats.confidence, r.cone_stats.confidence);
    for (double d : {2.0, 1.0, 0.5, 0.25, 0.1})
      EXPECT_EQ(cone_membership(emb, flip, stats, d), cone_membership(emb, r.core_labels, r.cone_stats, d));
  }
}

TEST(ConeStats, RangesAndUnitCenters) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = testing::random_connected_graph(rng, 3 + rng() % 9, 0.5);
    const auto emb = solve_embedding(g, {});
    const auto stats = round_embedding(emb, core_of(g), {}).cone_stats;
    for (const auto& cone : stats.cones) {
      EXPECT_GE(cone.diameter, 0.0);
      EXPECT_LE(cone.diameter, 2.0);
      if (cone.count > 0) {
        EXPECT_NEAR(cone.center.norm(), 1.0, 1e-9);
      }
    }
    EXPECT_GE(stats.confidence, 0.0);
    EXPECT_LE(stats.confidence, 1.0);
  }
}

TEST(ConeMembership, RankOneIsAlwaysInside) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v.row(0) << 1, -1, 1, -1;
  const auto emb = fixed_embedding({"a", "b", "c", "d"}, v);
  const LabelMap labels{{"a", A}, {"b", B}, {"c", A}, {"d", B}};
  const auto stats = compute_cone_stats(emb, labels);
  for (double d : {0.0, 2.0})
    for (const auto& [id, inside] : cone_membership(emb, labels, stats, d)) EXPECT_TRUE(inside) << id << " d=" << d;
}

TEST(ConeMembership, TightConesAtDiameterTwo) {
  // Every member lies within distance 1 of its center, so d = 2 admits all.
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 4);
  const double t = 0.3;
  v.col(0) << std::cos(t), std::sin(t), 0;
  v.col(1) << std::cos(t), -std::sin(t), 0;
  v.col(2) << -std::cos(t), 0, std::sin(t);
  v.col(3) << -std::cos(t), 0, -std::sin(t);
  const auto emb = fixed_embedding({"a", "b", "c", "d"}, v);
  const LabelMap labels{{"a", A}, {"b", A}, {"c", B}, {"d", B}};
  const auto stats = compute_cone_stats(emb, labels);
  for (const auto& [id, inside] : cone_membership(emb, labels, stats, 2.0)) EXPECT_TRUE(inside) << id;
  for (const auto& [id, inside] : cone_membership(emb, labels, stats, 0.1)) EXPECT_FALSE(inside) << id;
}

TEST(ConeMembership, OrthogonalToCenter) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
  const auto emb = fixed_embedding({"a", "b"}, v);
  ConeStats stats;
  stats.cones[0].center = Eigen::Vector2d(1.0, 0.0);
  stats.cones[0].count = 2;
  const LabelMap labels{{"a", A}, {"b", A}};
  EXPECT_FALSE(cone_membership(emb, labels, stats, 1.0).at("b"));
  EXPECT_FALSE(cone_membership(emb, labels, stats, 2.0).at("b"));
  EXPECT_TRUE(cone_membership(emb, labels, stats, 2.0 * std::numbers::sqrt2).at("b"));
  EXPECT_TRUE(cone_membership(emb, labels, stats, 1.0).at("a"));
  EXPECT_THROW(cone_membership(emb, labels, stats, -1.0), Error);
}

TEST(PropagateLabels, PendantOppositeToCore) {
  const auto g = make_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  const auto core = two_core(g);
  const auto p = propagate_labels(g, core, {{"n00", A}, {"n01", B}, {"n02", A}});
  EXPECT_EQ(p.labels.at("n03"), B);
  EXPECT_EQ(p.attached_to.at("n03"), "n00");
  EXPECT_TRUE(p.fallback.empty());
}

TEST(PropagateLabels, ChainAlternates) {
  const auto g = make_graph(5, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
  const auto core = two_core(g);
  const auto p = propagate_labels(g, core, {{"n00", A}, {"n01", B}, {"n02", A}});
  EXPECT_EQ(p.labels.at("n03"), B);
  EXPECT_EQ(p.labels.at("n04"), A);
}

TEST(PropagateLabels, HeaviestNeighbourThenSmallestId) {
  // n04 touches n00 (A, weight 1) and n01 (B, weight 2): attaches to n01.
  // n05 touches n00 and n01 with equal weight: attaches to n00.
  const auto g = make_graph(
      6, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {0, 4, 1.0}, {1, 4, 2.0}, {3, 2, 1.0}, {0, 5, 1.0}, {1, 5, 1.0}});
  // Treat only the triangle as core so both extra nodes are propagated.
  CoreSubgraph core{g.induced(std::vector<SpeakerId>{"n00", "n01", "n02"}), {"n03", "n04", "n05"}};
  const auto p = propagate_labels(g, core, {{"n00", A}, {"n01", B}, {"n02", A}});
  EXPECT_EQ(p.attached_to.at("n04"), "n01");
  EXPECT_EQ(p.labels.at("n04"), A);
  EXPECT_EQ(p.attached_to.at("n05"), "n00");
  EXPECT_EQ(p.labels.at("n05"), B);
}

TEST(PropagateLabels, IsolatedAndCoreFreeComponentsFallBack) {
  const auto g = make_graph(6, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {3, 4, 1.0}});
  const auto core = two_core(g);
  const auto p = propagate_labels(g, core, {{"n00", A}, {"n01", B}, {"n02", B}});
  EXPECT_EQ(p.labels.size(), 6u);
  EXPECT_EQ(std::set<SpeakerId>(p.fallback.begin(), p.fallback.end()), (std::set<SpeakerId>{"n03", "n04", "n05"}));
  EXPECT_NE(p.labels.at("n03"), p.labels.at("n04"));
}

TEST(PropagateLabels, ReplayConsistency) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = testing::random_graph(rng, 3 + rng() % 12, 0.25);
    const auto core = two_core(g);
    LabelMap core_labels;
    for (const auto& id : core.subgraph.nodes()) core_labels.emplace(id, rng() % 2 ? A : B);
    const auto p = propagate_labels(g, core, core_labels);
    ASSERT_EQ(p.labels.size(), g.size());
    for (const auto& [id, label] : core_labels) EXPECT_EQ(p.labels.at(id), label);
    for (const auto& [id, parent] : p.attached_to) {
      EXPECT_NE(p.labels.at(id), p.labels.at(parent));
      EXPECT_GT(g.weight(id, parent), 0.0);
    }
    EXPECT_EQ(p.attached_to.size() + p.fallback.size() + core_labels.size(), g.size());
  }
}

TEST(StemPipeline, DialogueFallsBackToGreedy) {
  const auto tree =
      ConversationTree::build("d", "t", {post("1", "op"), post("2", "x", "1"), post("3", "op", "2"), post("4", "x", "3")});
  const auto p = stem_pipeline(tree, {}, {}, {});
  EXPECT_EQ(p.labels, (LabelMap{{"op", A}, {"x", B}}));
  EXPECT_EQ(p.confidence, 0.0);
  EXPECT_TRUE(p.core_speakers.empty());
  ASSERT_FALSE(p.warnings.empty());
  EXPECT_EQ(p.warnings.back().rfind("CoreEmpty", 0), 0u);
}

TEST(StemPipeline, SingleSpeakerDoesNotThrow) {
  const auto tree = ConversationTree::build("s", "t", {post("1", "op"), post("2", "op", "1")});
  const auto p = stem_pipeline(tree, {}, {}, {});
  EXPECT_EQ(p.labels, (LabelMap{{"op", A}}));
}

TEST(StemPipeline, TriangleSplitsTwoVersusOne) {
  const auto tree = ConversationTree::build(
      "tri", "t", {post("1", "a"), post("2", "b", "1"), post("3", "c", "2"), post("4", "a", "3")});
  const auto run = run_stem(tree, {}, {}, {});
  const auto& p = run.partition;
  EXPECT_DOUBLE_EQ(p.cut_value, brute_force_maxcut(run.network).cut_value);
  EXPECT_DOUBLE_EQ(p.cut_value, 2.0);
  int a = 0;
  for (const auto& [id, l] : p.labels) a += l == A;
  EXPECT_EQ(a, 2);
  EXPECT_EQ(p.labels.at("a"), A);
  ASSERT_TRUE(p.confidence);
  EXPECT_EQ(p.core_speakers.size(), 3u);
}

TEST(StemPipeline, RecoversPlantedFactions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig cfg;
    cfg.p_cross = 1.0;
    cfg.seed = seed;
    const auto synth = generate(cfg);
    RoundingConfig rcfg;
    rcfg.seed = seed;
    const auto p = stem_pipeline(synth.tree, {}, {}, rcfg);
    // The OP is SideA in both, so orientation already agrees.
    EXPECT_EQ(p.labels, synth.gold.author_labels) << "seed " << seed;
    EXPECT_NEAR(*p.confidence, 1.0, 1e-4);
  }
}

TEST(StemPipeline, InConeFlagsFollowThreshold) {
  SynthConfig cfg;
  cfg.p_cross = 0.7;
  cfg.seed = 3;
  const auto tree = generate(cfg).tree;
  RoundingConfig loose, tight;
  tight.cone_diameter_threshold = 0.0;
  const auto all = stem_pipeline(tree, {}, {}, loose);
  const auto none = stem_pipeline(tree, {}, {}, tight);
  const std::set<SpeakerId> core(all.core_speakers.begin(), all.core_speakers.end());
  for (const auto& [id, inside] : all.in_cone) EXPECT_EQ(inside, core.contains(id)) << id;
  for (const auto& [id, inside] : none.in_cone) EXPECT_FALSE(inside) << id;
}

TEST(StemPipeline, Deterministic) {
  SynthConfig cfg;
  cfg.p_cross = 0.8;
  cfg.seed = 11;
  const auto tree = generate(cfg).tree;
  RoundingConfig rcfg;
  rcfg.seed = 5;
  EXPECT_EQ(stem_pipeline(tree, {}, {}, rcfg), stem_pipeline(tree, {}, {}, rcfg));
}

TEST(RunGreedy, NoConfidence) {
  SynthConfig cfg;
  cfg.seed = 2;
  const auto run = run_greedy(generate(cfg).tree, {});
  EXPECT_EQ(run.partition.algorithm, "greedy");
  EXPECT_FALSE(run.partition.confidence);
  EXPECT_EQ(run.partition.labels, greedy_label(run.network).labels);
  const auto json = to_json(run.partition);
  EXPECT_TRUE(json.at("confidence").is_null());
}

TEST(PartitionJson, RoundTrip) {
  SynthConfig cfg;
  cfg.seed = 4;
  cfg.p_cross = 0.8;
  RoundingConfig rcfg;
  rcfg.cone_diameter_threshold = 1.0;
  const auto p = stem_pipeline(generate(cfg).tree, {}, {}, rcfg);
  const auto doc = to_json(p);
  for (const char* key : {"conversation_id", "labels", "core_speakers", "cut_value", "confidence", "cone_diameters",
                          "in_cone", "warnings"})
    EXPECT_TRUE(doc.contains(key)) << key;
  EXPECT_EQ(partition_from_json(nlohmann::json::parse(doc.dump())), p);
  EXPECT_THROW(partition_from_json(nlohmann::json::array()), Error);
  auto bad = doc;
  bad["labels"]["s00"] = "neutral";
  EXPECT_THROW(partition_from_json(bad), Error);
}

TEST(PowerIteration, MatchesEigenSolver) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(5, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    const Eigen::MatrixXd cov = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto axis = power_iteration(cov);
    EXPECT_NEAR(axis.variance, solver.eigenvalues()(4), 1e-8 * solver.eigenvalues()(4));
    EXPECT_NEAR(std::abs(axis.direction.dot(solver.eigenvectors().col(4))), 1.0, 1e-6);
  }
}

TEST(PrincipalProjection, SeparatesAntipodalClasses) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v.row(2) << 1, -1, 1, -1;
  const auto points = principal_projection(fixed_embedding({"a", "b", "c", "d"}, v));
  ASSERT_EQ(points.size(), 4u);
  EXPECT_NEAR(std::abs(points[0].pc1), 1.0, 1e-9);
  EXPECT_NEAR(points[0].pc1, -points[1].pc1, 1e-9);
  EXPECT_NEAR(points[0].pc1, points[2].pc1, 1e-9);
  std::ostringstream os;
  write_pca_csv(os, points, {{"a", A}});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "speaker,pc1,pc2,label");
}

}  // namespace
}  // namespace stem
