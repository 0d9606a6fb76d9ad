#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stem/graph.hpp"
#include "stem/partition.hpp"
#include "stem/synth.hpp"

namespace stem {
namespace {

double cross_reply_fraction(const SynthConversation& s) {
  std::size_t cross = 0, replies = 0;
  for (const auto& p : s.tree.posts()) {
    if (!p.parent_id) continue;
    const auto& parent = s.tree.find_post(*p.parent_id)->author;
    cross += s.gold.author_labels.at(p.author) != s.gold.author_labels.at(parent);
    ++replies;
  }
  return static_cast<double>(cross) / static_cast<double>(replies);
}

TEST(Generate, ShapeAndGold) {
  SynthConfig cfg;
  cfg.seed = 1;
  const auto s = generate(cfg);
  EXPECT_EQ(s.tree.posts().size(), 200u);
  EXPECT_EQ(s.tree.authors().size(), 20u);
  EXPECT_EQ(s.gold.author_labels.at(s.tree.op()), StanceLabel::SideA);
  EXPECT_EQ(s.gold.post_labels.size(), 200u);
  std::size_t side_a = 0;
  for (const auto& [id, l] : s.gold.author_labels) side_a += l == StanceLabel::SideA;
  EXPECT_EQ(side_a, 10u);
  for (const auto& p : s.tree.posts()) EXPECT_EQ(s.gold.post_labels.at(p.post_id), s.gold.author_labels.at(p.author));
}

TEST(Generate, PureCrossIsBipartiteByFaction) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthConfig cfg;
    cfg.p_cross = 1.0;
    cfg.p_quote = 0.3;
    cfg.seed = seed;
    const auto s = generate(cfg);
    const auto g = build_network(s.tree, {1.0, 1.0});
    EXPECT_TRUE(testing::is_bipartite(g));
    for (const auto& e : g.edges())
      EXPECT_NE(s.gold.author_labels.at(g.node(e.u)), s.gold.author_labels.at(g.node(e.v)));
  }
}

TEST(Generate, TwoSpeakersMakeADialogue) {
  SynthConfig cfg;
  cfg.num_speakers = 2;
  cfg.num_posts = 10;
  cfg.p_cross = 0.5;
  const auto g = build_network(generate(cfg).tree, {});
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.edges().size(), 1u);
}

TEST(Generate, MixedRepliesHaveBothEdgeKinds) {
  SynthConfig cfg;
  cfg.p_cross = 0.5;
  cfg.seed = 3;
  const auto s = generate(cfg);
  const auto g = build_network(s.tree, {});
  std::size_t cross = 0, within = 0;
  for (const auto& e : g.edges())
    (s.gold.author_labels.at(g.node(e.u)) != s.gold.author_labels.at(g.node(e.v)) ? cross : within)++;
  EXPECT_GT(cross, 0u);
  EXPECT_GT(within, 0u);
}

TEST(Generate, CrossFractionTracksParameter) {
  for (double p_cross : {0.5, 0.8, 0.9}) {
    double sum = 0.0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
      SynthConfig cfg;
      cfg.p_cross = p_cross;
      cfg.seed = static_cast<std::uint64_t>(seed);
      sum += cross_reply_fraction(generate(cfg));
    }
    EXPECT_NEAR(sum / seeds, p_cross, 0.03) << "p_cross " << p_cross;
  }
}

TEST(Generate, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.p_quote = 0.4;
  EXPECT_EQ(generate(cfg).tree, generate(cfg).tree);
  EXPECT_EQ(serialize_conversation(generate(cfg).tree), serialize_conversation(generate(cfg).tree));
  auto other = cfg;
  other.seed = 100;
  EXPECT_FALSE(generate(cfg).tree == generate(other).tree);
}

TEST(Generate, RootOnlyStarHasNoCore) {
  SynthConfig cfg;
  cfg.root_only = true;
  cfg.reply_target_bias = 0.0;
  cfg.num_posts = 60;
  const auto s = generate(cfg);
  for (const auto& p : s.tree.posts())
    if (p.parent_id) {
      EXPECT_EQ(*p.parent_id, s.tree.root().post_id);
    }
  const auto g = build_network(s.tree, {});
  EXPECT_TRUE(two_core(g).empty());
  const auto part = stem_pipeline(s.tree, {}, {}, {});
  ASSERT_FALSE(part.warnings.empty());
  EXPECT_EQ(part.warnings.back().rfind("CoreEmpty", 0), 0u);
}

TEST(Generate, QuotesPointAtEarlierSpeakers) {
  SynthConfig cfg;
  cfg.p_quote = 1.0;
  cfg.seed = 5;
  const auto s = generate(cfg);
  std::set<SpeakerId> seen;
  std::size_t quotes = 0;
  for (const auto& p : s.tree.posts()) {
    for (const auto& q : p.quoted_authors) {
      EXPECT_TRUE(seen.contains(q));
      EXPECT_NE(q, p.author);
      ++quotes;
    }
    seen.insert(p.author);
  }
  EXPECT_GT(quotes, 150u);
}

TEST(Generate, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.num_speakers = 1;
  EXPECT_THROW(generate(cfg), Error);
  cfg = {};
  cfg.num_posts = 5;
  EXPECT_THROW(generate(cfg), Error);
  cfg = {};
  cfg.p_cross = 1.5;
  EXPECT_THROW(generate(cfg), Error);
  cfg = {};
  cfg.reply_target_bias = -1.0;
  EXPECT_THROW(generate(cfg), Error);
}

}  // namespace
}  // namespace stem
