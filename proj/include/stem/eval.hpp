#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stem/corpus.hpp"
#include "stem/error.hpp"
#include "stem/graph.hpp"
#include "stem/partition.hpp"

namespace stem {

enum class Scope { Core, Full };
enum class Level { Post, Author };

struct AuthorLift {
  LabelMap labels;
  std::vector<SpeakerId> ties;  // excluded: equal counts of A and B posts
};

/// Majority vote over each author's labeled posts.
inline AuthorLift lift_post_labels_to_authors(const GoldLabels& gold, const ConversationTree& tree) {
  if (gold.post_labels.empty()) throw Error(ErrorCode::NoLabels, "no per-post gold labels");
  std::map<SpeakerId, std::array<int, 2>> votes;
  for (const auto& p : tree.posts())
    if (auto it = gold.post_labels.find(p.post_id); it != gold.post_labels.end())
      ++votes[p.author][static_cast<std::size_t>(it->second)];
  AuthorLift out;
  for (const auto& [author, v] : votes) {
    if (v[0] == v[1])
      out.ties.push_back(author);
    else
      out.labels.emplace(author, v[0] > v[1] ? StanceLabel::SideA : StanceLabel::SideB);
  }
  return out;
}

/// Each post inherits its author's label; posts of unlabeled authors are left out.
inline std::map<std::string, StanceLabel> lift_author_labels_to_posts(const LabelMap& author_labels,
                                                                      const ConversationTree& tree) {
  std::map<std::string, StanceLabel> out;
  for (const auto& p : tree.posts())
    if (auto it = author_labels.find(p.author); it != author_labels.end()) out.emplace(p.post_id, it->second);
  return out;
}

struct Score {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<bool> flipped;  // chosen orientation per evaluated component

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

/// Accuracy with the better of the two label orientations chosen separately
/// for every connected component of the evaluated graph (the 2-core for
/// Scope::Core, the full network otherwise). `restrict_to`, when given,
/// further limits the speakers whose units are counted.
inline Score score(const StancePartition& partition, const GoldLabels& gold, const ConversationTree& tree,
                   const InteractionNetwork& full, Scope scope, Level level,
                   const std::set<SpeakerId>* restrict_to = nullptr) {
  const InteractionNetwork graph =
      scope == Scope::Core ? full.induced(std::span<const SpeakerId>(partition.core_speakers)) : full;

  const auto in_scope = [&](const SpeakerId& s) {
    return graph.contains(s) && partition.labels.contains(s) && (!restrict_to || restrict_to->contains(s));
  };

  LabelMap author_gold;
  std::map<std::string, StanceLabel> post_gold;
  if (level == Level::Author) {
    author_gold = gold.author_labels.empty() && !gold.post_labels.empty()
                      ? lift_post_labels_to_authors(gold, tree).labels
                      : gold.author_labels;
  } else {
    post_gold = gold.post_labels.empty() ? lift_author_labels_to_posts(gold.author_labels, tree) : gold.post_labels;
  }

  // agree/disagree counts per speaker, then per component.
  std::map<SpeakerId, std::array<std::size_t, 2>> tally;
  if (level == Level::Author) {
    for (const auto& [speaker, truth] : author_gold)
      if (in_scope(speaker)) ++tally[speaker][partition.labels.at(speaker) == truth ? 0 : 1];
  } else {
    for (const auto& p : tree.posts()) {
      auto it = post_gold.find(p.post_id);
      if (it == post_gold.end() || !in_scope(p.author)) continue;
      ++tally[p.author][partition.labels.at(p.author) == it->second ? 0 : 1];
    }
  }

  Score out;
  for (const auto& comp : component_indices(graph)) {
    std::size_t agree = 0;
    std::size_t disagree = 0;
    for (auto i : comp)
      if (auto it = tally.find(graph.node(i)); it != tally.end()) {
        agree += it->second[0];
        disagree += it->second[1];
      }
    if (agree + disagree == 0) continue;
    out.flipped.push_back(disagree > agree);
    out.correct += std::max(agree, disagree);
    out.total += agree + disagree;
  }
  if (out.total == 0)
    throw Error(ErrorCode::NothingToScore, "conversation '" + tree.conversation_id() + "': no gold-labeled units in scope");
  return out;
}

/// Metric slots, in table order.
enum class Metric : std::size_t { PostsFull, PostsCore, AuthorsFull, AuthorsCore };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::PostsFull, Metric::PostsCore, Metric::AuthorsFull,
                                                   Metric::AuthorsCore};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::PostsFull: return "accuracy_posts_full";
    case Metric::PostsCore: return "accuracy_posts_core";
    case Metric::AuthorsFull: return "accuracy_authors_full";
    case Metric::AuthorsCore: return "accuracy_authors_core";
  }
  return "";
}

inline constexpr Scope scope_of(Metric m) {
  return (m == Metric::PostsCore || m == Metric::AuthorsCore) ? Scope::Core : Scope::Full;
}
inline constexpr Level level_of(Metric m) {
  return (m == Metric::PostsFull || m == Metric::PostsCore) ? Level::Post : Level::Author;
}

struct ConversationEval {
  std::string conversation_id;
  std::string topic;
  std::string algorithm;
  std::optional<double> confidence;
  std::array<std::optional<Score>, 4> scores;
  std::vector<std::string> warnings;

  const std::optional<Score>& operator[](Metric m) const { return scores[static_cast<std::size_t>(m)]; }
  std::optional<Score>& operator[](Metric m) { return scores[static_cast<std::size_t>(m)]; }
};

inline ConversationEval evaluate_conversation(const StancePartition& partition, const GoldLabels& gold,
                                              const ConversationTree& tree, const InteractionNetwork& full) {
  ConversationEval out;
  out.conversation_id = tree.conversation_id();
  out.topic = tree.topic();
  out.algorithm = partition.algorithm;
  out.confidence = partition.confidence;
  if (gold.author_labels.empty() && !gold.post_labels.empty())
    for (const auto& s : lift_post_labels_to_authors(gold, tree).ties)
      out.warnings.push_back("author '" + s + "' has tied gold post labels; excluded at author level");
  for (Metric m : kAllMetrics) {
    try {
      out[m] = score(partition, gold, tree, full, scope_of(m), level_of(m));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NothingToScore && e.code() != ErrorCode::NoLabels) throw;
      out.warnings.push_back(std::string(to_string(m)) + ": " + e.what());
    }
  }
  return out;
}

struct MetricSummary {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t conversations = 0;
  double accuracy_sum = 0.0;

  void add(const Score& s) {
    correct += s.correct;
    total += s.total;
    ++conversations;
    accuracy_sum += s.accuracy();
  }
  std::optional<double> micro() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
  }
  std::optional<double> macro() const {
    if (conversations == 0) return std::nullopt;
    return accuracy_sum / static_cast<double>(conversations);
  }
};

using GroupSummary = std::array<MetricSummary, 4>;

struct EvalReport {
  std::vector<ConversationEval> conversations;
  std::map<std::string, std::map<std::string, GroupSummary>> by_topic;  // algorithm -> topic -> summary
  std::map<std::string, GroupSummary> overall;                           // algorithm -> summary

  bool empty() const { return conversations.empty(); }
};

/// Pools units per (algorithm, topic) and per algorithm: micro = pooled
/// accuracy, macro = mean of per-conversation accuracies.
inline EvalReport aggregate(std::span<const ConversationEval> convs) {
  EvalReport report;
  report.conversations.assign(convs.begin(), convs.end());
  for (const auto& c : convs) {
    auto& topic = report.by_topic[c.algorithm][c.topic];
    auto& overall = report.overall[c.algorithm];
    for (Metric m : kAllMetrics)
      if (const auto& s = c[m]) {
        topic[static_cast<std::size_t>(m)].add(*s);
        overall[static_cast<std::size_t>(m)].add(*s);
      }
  }
  return report;
}

inline EvalReport aggregate(std::span<const EvalReport> reports) {
  std::vector<ConversationEval> all;
  for (const auto& r : reports) all.insert(all.end(), r.conversations.begin(), r.conversations.end());
  return aggregate(std::span<const ConversationEval>(all));
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json summary_json(const GroupSummary& g) {
  nlohmann::json out = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    const auto& s = g[static_cast<std::size_t>(m)];
    out[std::string(to_string(m))] = {{"micro", optional_json(s.micro())},
                                      {"macro", optional_json(s.macro())},
                                      {"units", s.total},
                                      {"conversations", s.conversations}};
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : report.conversations) {
    nlohmann::json jc;
    jc["conversation_id"] = c.conversation_id;
    jc["topic"] = c.topic;
    jc["algorithm"] = c.algorithm;
    jc["confidence"] = detail::optional_json(c.confidence);
    for (Metric m : kAllMetrics) {
      const auto& s = c[m];
      const std::string key(to_string(m));
      jc[key] = s ? nlohmann::json(s->accuracy()) : nlohmann::json(nullptr);
      jc[key + "_units"] = s ? s->total : 0;
      if (s) jc[key + "_flipped"] = s->flipped;
    }
    jc["warnings"] = c.warnings;
    convs.push_back(std::move(jc));
  }
  nlohmann::json topics = nlohmann::json::object();
  for (const auto& [algo, per_topic] : report.by_topic)
    for (const auto& [topic, summary] : per_topic) topics[algo][topic] = detail::summary_json(summary);
  nlohmann::json overall = nlohmann::json::object();
  for (const auto& [algo, summary] : report.overall) overall[algo] = detail::summary_json(summary);
  return {{"conversations", std::move(convs)}, {"topics", std::move(topics)}, {"overall", std::move(overall)}};
}

/// Fixed-width tables: one per level, rows algorithm x scope, columns topics
/// then the micro and macro averages.
inline std::string format_report_table(const EvalReport& report) {
  std::set<std::string> topic_set;
  for (const auto& [algo, per_topic] : report.by_topic)
    for (const auto& [topic, s] : per_topic) topic_set.insert(topic.empty() ? "(none)" : topic);
  const std::vector<std::string> topics(topic_set.begin(), topic_set.end());

  const auto cell = [](std::optional<double> v) {
    if (!v) return std::string("-");
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return std::string(buf);
  };
  const auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  std::ostringstream os;
  for (Level level : {Level::Post, Level::Author}) {
    os << (level == Level::Post ? "Post-level accuracy\n" : "Author-level accuracy\n");
    std::size_t width = 10;
    for (const auto& t : topics) width = std::max(width, t.size() + 2);
    os << pad("algorithm", 20);
    for (const auto& t : topics) os << pad(t, width);
    os << pad("avg(micro)", 12) << "avg(macro)\n";
    for (const auto& [algo, overall] : report.overall) {
      for (Scope scope : {Scope::Core, Scope::Full}) {
        const Metric m = level == Level::Post ? (scope == Scope::Core ? Metric::PostsCore : Metric::PostsFull)
                                              : (scope == Scope::Core ? Metric::AuthorsCore : Metric::AuthorsFull);
        const auto idx = static_cast<std::size_t>(m);
        os << pad(algo + (scope == Scope::Core ? " (core)" : " (full)"), 20);
        const auto& per_topic = report.by_topic.at(algo);
        for (const auto& t : topics) {
          auto it = per_topic.find(t == "(none)" ? std::string() : t);
          os << pad(it == per_topic.end() ? "-" : cell(it->second[idx].micro()), width);
        }
        os << pad(cell(overall[idx].micro()), 12) << cell(overall[idx].macro()) << '\n';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace stem
