#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stem/error.hpp"

namespace stem {

using SpeakerId = std::string;

/// Abstract two-sided stance. Which side is "pro" is only fixed at evaluation.
enum class StanceLabel : std::uint8_t { SideA, SideB };

constexpr StanceLabel opposite(StanceLabel label) {
  return label == StanceLabel::SideA ? StanceLabel::SideB : StanceLabel::SideA;
}

inline std::string_view to_string(StanceLabel label) {
  return label == StanceLabel::SideA ? "A" : "B";
}

inline std::string_view display_name(StanceLabel label) {
  return label == StanceLabel::SideA ? "pro" : "con";
}

inline std::optional<StanceLabel> parse_label(std::string_view text) {
  if (text == "A" || text == "pro") return StanceLabel::SideA;
  if (text == "B" || text == "con") return StanceLabel::SideB;
  return std::nullopt;
}

struct Post {
  std::string post_id;
  SpeakerId author;
  std::optional<std::string> parent_id;
  std::vector<SpeakerId> quoted_authors;
  std::optional<StanceLabel> gold_label;

  bool operator==(const Post&) const = default;
};

/// A validated reply tree. Immutable once built.
class ConversationTree {
 public:
  /// Validates the reply structure and throws stem::Error on violation.
  static ConversationTree build(std::string conversation_id, std::string topic,
                                std::vector<Post> posts) {
    ConversationTree tree;
    tree.conversation_id_ = std::move(conversation_id);
    tree.topic_ = std::move(topic);
    tree.posts_ = std::move(posts);
    tree.validate_and_index();
    return tree;
  }

  const std::string& conversation_id() const { return conversation_id_; }
  const std::string& topic() const { return topic_; }
  const std::vector<Post>& posts() const { return posts_; }
  const Post& root() const { return posts_[root_]; }
  const SpeakerId& op() const { return posts_[root_].author; }

  const Post* find_post(std::string_view post_id) const {
    auto it = index_.find(std::string(post_id));
    return it == index_.end() ? nullptr : &posts_[it->second];
  }

  /// Distinct authors, ascending.
  std::vector<SpeakerId> authors() const {
    std::set<SpeakerId> unique;
    for (const auto& p : posts_) unique.insert(p.author);
    return {unique.begin(), unique.end()};
  }

  bool operator==(const ConversationTree& other) const {
    return conversation_id_ == other.conversation_id_ && topic_ == other.topic_ &&
           posts_ == other.posts_;
  }

 private:
  ConversationTree() = default;

  void validate_and_index() {
    const auto where = [this](const std::string& msg) {
      return "conversation '" + conversation_id_ + "': " + msg;
    };
    if (posts_.empty()) throw Error(ErrorCode::MalformedInput, where("no posts"));

    for (std::size_t i = 0; i < posts_.size(); ++i) {
      const Post& p = posts_[i];
      if (p.post_id.empty()) throw Error(ErrorCode::MalformedInput, where("empty post_id"));
      if (p.author.empty())
        throw Error(ErrorCode::MalformedInput, where("post '" + p.post_id + "' has empty author"));
      for (const auto& q : p.quoted_authors)
        if (q.empty())
          throw Error(ErrorCode::MalformedInput,
                      where("post '" + p.post_id + "' quotes an empty author"));
      if (!index_.emplace(p.post_id, i).second)
        throw Error(ErrorCode::MalformedInput, where("duplicate post_id '" + p.post_id + "'"));
    }

    std::vector<std::vector<std::size_t>> children(posts_.size());
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < posts_.size(); ++i) {
      const Post& p = posts_[i];
      if (!p.parent_id) {
        roots.push_back(i);
        continue;
      }
      auto it = index_.find(*p.parent_id);
      if (it == index_.end())
        throw Error(ErrorCode::DanglingParent,
                    where("post '" + p.post_id + "' replies to unknown post '" + *p.parent_id + "'"));
      children[it->second].push_back(i);
    }
    if (roots.empty())
      throw Error(ErrorCode::CycleDetected, where("no root post; reply links form a cycle"));
    if (roots.size() > 1)
      throw Error(ErrorCode::MultipleRoots,
                  where(std::to_string(roots.size()) + " posts have no parent"));
    root_ = roots.front();

    std::vector<bool> seen(posts_.size(), false);
    std::vector<std::size_t> stack{root_};
    seen[root_] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t child : children[cur]) {
        if (seen[child]) continue;
        seen[child] = true;
        ++reached;
        stack.push_back(child);
      }
    }
    if (reached != posts_.size()) {
      const auto it = std::find(seen.begin(), seen.end(), false);
      throw Error(ErrorCode::CycleDetected,
                  where("post '" + posts_[static_cast<std::size_t>(it - seen.begin())].post_id +
                        "' is on a reply cycle"));
    }
  }

  std::string conversation_id_;
  std::string topic_;
  std::vector<Post> posts_;
  std::size_t root_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ground truth at post and/or author granularity.
struct GoldLabels {
  std::map<std::string, StanceLabel> post_labels;
  std::map<SpeakerId, StanceLabel> author_labels;

  bool empty() const { return post_labels.empty() && author_labels.empty(); }
};

/// Collects the per-post labels embedded in a tree.
inline GoldLabels gold_from_tree(const ConversationTree& tree) {
  GoldLabels gold;
  for (const auto& p : tree.posts())
    if (p.gold_label) gold.post_labels.emplace(p.post_id, *p.gold_label);
  return gold;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const char* context) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw Error(ErrorCode::MalformedInput, std::string(context) + ": missing key '" + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const char* context) {
  const auto& v = require(obj, key, context);
  if (!v.is_string())
    throw Error(ErrorCode::MalformedInput,
                std::string(context) + ": key '" + key + "' must be a string");
  return v.get<std::string>();
}

inline StanceLabel require_label(const nlohmann::json& v, const std::string& context) {
  if (!v.is_string())
    throw Error(ErrorCode::InvalidLabel, context + ": label must be \"A\" or \"B\"");
  const auto s = v.get<std::string>();
  auto label = parse_label(s);
  if (!label)
    throw Error(ErrorCode::InvalidLabel,
                context + ": unsupported stance label '" + s +
                    "' (only two-sided labels A/B are accepted; filter other values upstream)");
  return *label;
}

}  // namespace detail

inline nlohmann::json to_json(const ConversationTree& tree) {
  nlohmann::json posts = nlohmann::json::array();
  for (const auto& p : tree.posts()) {
    nlohmann::json jp;
    jp["post_id"] = p.post_id;
    jp["author"] = p.author;
    jp["parent_id"] = p.parent_id ? nlohmann::json(*p.parent_id) : nlohmann::json(nullptr);
    jp["quoted_authors"] = p.quoted_authors;
    jp["gold_label"] =
        p.gold_label ? nlohmann::json(std::string(to_string(*p.gold_label))) : nlohmann::json(nullptr);
    posts.push_back(std::move(jp));
  }
  nlohmann::json out;
  out["conversation_id"] = tree.conversation_id();
  out["topic"] = tree.topic();
  out["posts"] = std::move(posts);
  return out;
}

inline ConversationTree conversation_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "conversation must be a JSON object");
  auto id = detail::require_string(doc, "conversation_id", "conversation");
  std::string topic;
  if (auto it = doc.find("topic"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::MalformedInput, "topic must be a string");
    topic = it->get<std::string>();
  }
  const auto& jposts = detail::require(doc, "posts", "conversation");
  if (!jposts.is_array()) throw Error(ErrorCode::MalformedInput, "'posts' must be an array");

  std::vector<Post> posts;
  posts.reserve(jposts.size());
  for (const auto& jp : jposts) {
    if (!jp.is_object()) throw Error(ErrorCode::MalformedInput, "post must be a JSON object");
    Post p;
    p.post_id = detail::require_string(jp, "post_id", "post");
    p.author = detail::require_string(jp, "author", "post");
    if (auto it = jp.find("parent_id"); it != jp.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorCode::MalformedInput, "parent_id must be a string or null");
      p.parent_id = it->get<std::string>();
    }
    if (auto it = jp.find("quoted_authors"); it != jp.end() && !it->is_null()) {
      if (!it->is_array()) throw Error(ErrorCode::MalformedInput, "quoted_authors must be an array");
      for (const auto& q : *it) {
        if (!q.is_string()) throw Error(ErrorCode::MalformedInput, "quoted author must be a string");
        p.quoted_authors.push_back(q.get<std::string>());
      }
    }
    if (auto it = jp.find("gold_label"); it != jp.end() && !it->is_null())
      p.gold_label = detail::require_label(*it, "post '" + p.post_id + "'");
    posts.push_back(std::move(p));
  }
  return ConversationTree::build(std::move(id), std::move(topic), std::move(posts));
}

inline ConversationTree parse_conversation(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
  return conversation_from_json(doc);
}

inline std::string serialize_conversation(const ConversationTree& tree) {
  return to_json(tree).dump();
}

/// Accepts either a single JSON document or newline-delimited conversations.
inline std::vector<ConversationTree> parse_corpus(std::string_view text) {
  std::vector<ConversationTree> out;
  if (auto doc = nlohmann::json::parse(text, nullptr, false); !doc.is_discarded()) {
    if (doc.is_array()) {
      for (const auto& c : doc) out.push_back(conversation_from_json(c));
    } else {
      out.push_back(conversation_from_json(doc));
    }
    return out;
  }
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(parse_conversation(line));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedInput) throw;
        throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Files under a directory are read in lexicographic order; only *.json and *.jsonl.
inline std::vector<std::filesystem::path> list_json_files(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "no such path '" + path.string() + "'");
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".json" || ext == ".jsonl" || ext == ".ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<ConversationTree> read_corpus(const std::filesystem::path& path) {
  std::vector<ConversationTree> out;
  for (const auto& file : list_json_files(path)) {
    try {
      auto convs = parse_corpus(read_file(file));
      std::move(convs.begin(), convs.end(), std::back_inserter(out));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
  }
  return out;
}

// Sidecar author labels: {"conversation_id": str, "author_labels": {speaker: "A"|"B"}}
struct AuthorLabelFile {
  std::string conversation_id;
  std::map<SpeakerId, StanceLabel> author_labels;
};

inline AuthorLabelFile author_labels_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "author labels must be a JSON object");
  AuthorLabelFile out;
  out.conversation_id = detail::require_string(doc, "conversation_id", "author labels");
  const auto& labels = detail::require(doc, "author_labels", "author labels");
  if (!labels.is_object()) throw Error(ErrorCode::MalformedInput, "'author_labels' must be an object");
  for (const auto& [speaker, v] : labels.items())
    out.author_labels.emplace(speaker, detail::require_label(v, "author '" + speaker + "'"));
  return out;
}

inline nlohmann::json to_json(const AuthorLabelFile& labels) {
  nlohmann::json jl = nlohmann::json::object();
  for (const auto& [speaker, label] : labels.author_labels) jl[speaker] = std::string(to_string(label));
  return {{"conversation_id", labels.conversation_id}, {"author_labels", std::move(jl)}};
}

inline std::vector<AuthorLabelFile> read_author_labels(const std::filesystem::path& path) {
  std::vector<AuthorLabelFile> out;
  for (const auto& file : list_json_files(path)) {
    const std::string text = read_file(file);
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (!doc.is_discarded()) {
      if (doc.is_array())
        for (const auto& d : doc) out.push_back(author_labels_from_json(d));
      else
        out.push_back(author_labels_from_json(doc));
      continue;
    }
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto jd = nlohmann::json::parse(line, nullptr, false);
      if (jd.is_discarded())
        throw Error(ErrorCode::MalformedInput, file.string() + ": invalid JSON in author labels");
      out.push_back(author_labels_from_json(jd));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus validation
// ---------------------------------------------------------------------------

inline std::vector<Warning> validate_conversation(const ConversationTree& tree) {
  std::vector<Warning> warnings;
  const auto& id = tree.conversation_id();
  const auto authors = tree.authors();
  const std::set<SpeakerId> known(authors.begin(), authors.end());

  std::size_t self_replies = 0;
  std::size_t self_quotes = 0;
  std::set<SpeakerId> unknown_quoted;
  for (const auto& p : tree.posts()) {
    if (p.parent_id && tree.find_post(*p.parent_id)->author == p.author) ++self_replies;
    for (const auto& q : p.quoted_authors) {
      if (q == p.author)
        ++self_quotes;
      else if (!known.contains(q))
        unknown_quoted.insert(q);
    }
  }
  if (self_replies > 0)
    warnings.push_back({id, std::to_string(self_replies) + " self-reply(ies): self-interaction ignored"});
  if (self_quotes > 0)
    warnings.push_back({id, std::to_string(self_quotes) + " self-quote(s): self-interaction ignored"});
  for (const auto& q : unknown_quoted)
    warnings.push_back({id, "quote of unknown author '" + q + "' ignored"});
  if (authors.size() < 2)
    warnings.push_back({id, "single speaker: no interaction edges"});
  return warnings;
}

/// Reports structural oddities without touching the input.
inline std::vector<Warning> validate_corpus(std::span<const ConversationTree> convs) {
  std::vector<Warning> out;
  for (const auto& c : convs) {
    auto w = validate_conversation(c);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace stem
