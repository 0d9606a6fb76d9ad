#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stem/corpus.hpp"
#include "stem/error.hpp"

namespace stem {

/// Planted two-faction conversation model.
struct SynthConfig {
  int num_speakers = 20;
  double faction_split = 0.5;  // fraction of speakers in faction A
  int num_posts = 200;
  double p_cross = 0.9;            // reply (and quote) goes to the other faction
  double p_quote = 0.0;            // chance a post also quotes someone
  double reply_target_bias = 1.0;  // exponent on a speaker's post count when picking reply targets
  bool root_only = false;          // every reply targets the root post (star conversations)
  std::uint64_t seed = 0;
  std::string conversation_id = "synth-0";
  std::string topic = "synthetic";

  void validate() const {
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (num_speakers < 2) throw Error(ErrorCode::InvalidConfig, "num_speakers must be >= 2");
    if (num_posts < num_speakers) throw Error(ErrorCode::InvalidConfig, "num_posts must be >= num_speakers");
    if (!prob(faction_split) || !prob(p_cross) || !prob(p_quote))
      throw Error(ErrorCode::InvalidConfig, "probabilities must lie in [0, 1]");
    if (!(reply_target_bias >= 0.0)) throw Error(ErrorCode::InvalidConfig, "reply_target_bias must be >= 0");
  }
};

struct SynthConversation {
  ConversationTree tree;
  GoldLabels gold;  // per-post and per-author planted factions
};

/// Grows a reply tree post by post. Each reply picks a target speaker with
/// probability proportional to (their post count)^bias, then one of that
/// speaker's posts; the replying author comes from the opposite faction with
/// probability p_cross. Speakers who have not posted yet are preferred as
/// authors, so with enough posts every speaker appears. The OP is in faction A.
inline SynthConversation generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.num_speakers);

  const int digits = static_cast<int>(std::to_string(n - 1).size());
  std::vector<SpeakerId> names(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    names[i] = "s" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') + num;
  }
  const auto num_a = static_cast<std::size_t>(
      std::clamp<long>(std::lround(cfg.faction_split * static_cast<double>(n)), 1, static_cast<long>(n)));
  std::vector<StanceLabel> faction(n, StanceLabel::SideB);
  std::fill_n(faction.begin(), num_a, StanceLabel::SideA);
  std::shuffle(faction.begin(), faction.end(), rng);

  std::vector<std::size_t> faction_a;
  for (std::size_t i = 0; i < n; ++i)
    if (faction[i] == StanceLabel::SideA) faction_a.push_back(i);
  const std::size_t op = faction_a[std::uniform_int_distribution<std::size_t>(0, faction_a.size() - 1)(rng)];

  std::vector<Post> posts;
  std::vector<std::size_t> post_author;
  std::vector<std::vector<std::size_t>> posts_by(n);
  std::vector<int> activity(n, 0);
  std::bernoulli_distribution cross(cfg.p_cross);
  std::bernoulli_distribution quote(cfg.p_quote);

  const auto add_post = [&](std::size_t author, std::optional<std::size_t> parent) {
    Post p;
    p.post_id = "p" + std::to_string(posts.size());
    p.author = names[author];
    if (parent) p.parent_id = posts[*parent].post_id;
    p.gold_label = faction[author];
    posts_by[author].push_back(posts.size());
    post_author.push_back(author);
    ++activity[author];
    posts.push_back(std::move(p));
  };

  // Speakers of the faction opposite to (cross) or equal to `other`'s, minus
  // `other`; falls back to the remaining faction when that set is empty.
  const auto faction_candidates = [&](std::size_t other, bool want_cross, bool active_only) {
    std::vector<std::size_t> picked;
    for (int attempt = 0; attempt < 2 && picked.empty(); ++attempt) {
      const bool cross_now = attempt == 0 ? want_cross : !want_cross;
      for (std::size_t s = 0; s < n; ++s) {
        if (s == other || (active_only && activity[s] == 0)) continue;
        if ((faction[s] != faction[other]) == cross_now) picked.push_back(s);
      }
    }
    return picked;
  };

  const auto weighted_pick = [&](const std::vector<std::size_t>& candidates) {
    std::vector<double> weights;
    for (auto s : candidates) weights.push_back(std::pow(static_cast<double>(activity[s]), cfg.reply_target_bias));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    return candidates[pick(rng)];
  };

  add_post(op, std::nullopt);
  for (int k = 1; k < cfg.num_posts; ++k) {
    std::size_t parent = 0;
    if (!cfg.root_only) {
      std::vector<std::size_t> active;
      for (std::size_t s = 0; s < n; ++s)
        if (activity[s] > 0) active.push_back(s);
      const std::size_t target = weighted_pick(active);
      const auto& own = posts_by[target];
      parent = own[std::uniform_int_distribution<std::size_t>(0, own.size() - 1)(rng)];
    }
    const std::size_t target = post_author[parent];

    auto candidates = faction_candidates(target, cross(rng), false);
    std::vector<std::size_t> fresh;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(fresh),
                 [&](std::size_t s) { return activity[s] == 0; });
    const auto& pool = fresh.empty() ? candidates : fresh;
    const std::size_t author = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];

    add_post(author, parent);
    if (quote(rng)) {
      const auto quotable = faction_candidates(author, cross(rng), true);
      if (!quotable.empty()) posts.back().quoted_authors.push_back(names[weighted_pick(quotable)]);
    }
  }

  SynthConversation out{ConversationTree::build(cfg.conversation_id, cfg.topic, std::move(posts)), {}};
  out.gold = gold_from_tree(out.tree);
  for (const auto& p : out.tree.posts()) out.gold.author_labels.emplace(p.author, *p.gold_label);
  return out;
}

}  // namespace stem
