#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "stem/corpus.hpp"
#include "stem/detail/format.hpp"
#include "stem/error.hpp"
#include "stem/eval.hpp"
#include "stem/graph.hpp"
#include "stem/partition.hpp"
#include "stem/pca.hpp"
#include "stem/synth.hpp"

namespace stem {

namespace fs = std::filesystem;

struct RunConfig {
  std::vector<fs::path> inputs;
  std::string algorithm = "stem";
  double alpha = 1.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int hyperplanes = 100;
  int max_sweeps = 2000;
  double rel_tol = 1e-10;
  std::optional<double> cone_diameter;
  fs::path out_dir = "stem-out";
  bool dump_graph = false;
  bool dump_embedding = false;
  bool dump_pca = false;
  unsigned jobs = 0;  // 0: one per hardware thread

  WeightConfig weights() const { return {alpha, beta}; }

  void validate() const {
    if (algorithm != "stem" && algorithm != "greedy")
      throw Error(ErrorCode::InvalidConfig, "algorithm must be 'stem' or 'greedy', got '" + algorithm + "'");
    weights().validate();
    SolverConfig{max_sweeps, rel_tol, seed}.validate();
    RoundingConfig{hyperplanes, seed, cone_diameter}.validate();
    if (inputs.empty()) throw Error(ErrorCode::InvalidConfig, "no input paths");
  }
};

namespace detail {

/// Filesystem-safe name; ids that needed rewriting get a hash suffix so they cannot collide.
inline std::string file_stem_for(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out != id || out.empty() || out.front() == '.') {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "-%016llx", static_cast<unsigned long long>(fnv1a(id)));
    out += buf;
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

inline unsigned resolve_jobs(unsigned jobs, std::size_t work) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(jobs, work)));
}

/// Runs fn(i) for i in [0, count) on a small pool; rethrows the first failure by index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = resolve_jobs(jobs, count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<ConversationTree> read_inputs(const std::vector<fs::path>& inputs) {
  std::vector<ConversationTree> convs;
  std::set<std::string> seen;
  for (const auto& path : inputs) {
    for (auto& c : read_corpus(path)) {
      if (!seen.insert(c.conversation_id()).second)
        throw Error(ErrorCode::MalformedInput, "duplicate conversation_id '" + c.conversation_id() + "'");
      convs.push_back(std::move(c));
    }
  }
  return convs;
}

}  // namespace detail

/// Per-conversation seed: independent of scheduling and of corpus order.
inline std::uint64_t conversation_seed(std::uint64_t global_seed, const std::string& conversation_id) {
  return detail::derive_seed(global_seed, conversation_id);
}

struct RunResult {
  std::vector<StancePartition> partitions;  // in input order
  std::vector<double> seconds;              // wall time per conversation
};

/// Runs one conversation exactly as cmd_run would.
inline StemRun run_conversation(const ConversationTree& tree, const RunConfig& cfg) {
  if (cfg.algorithm == "greedy") return run_greedy(tree, cfg.weights());
  const std::uint64_t seed = conversation_seed(cfg.seed, tree.conversation_id());
  SolverConfig solver{cfg.max_sweeps, cfg.rel_tol, detail::derive_seed(seed, std::uint64_t{1})};
  RoundingConfig rounding{cfg.hyperplanes, detail::derive_seed(seed, std::uint64_t{2}), cfg.cone_diameter};
  return run_stem(tree, cfg.weights(), solver, rounding);
}

/// Summary fields that do not depend on timing.
inline nlohmann::json run_summary(const RunConfig& cfg, const std::vector<ConversationTree>& convs,
                                  const std::vector<StancePartition>& parts) {
  nlohmann::json per = nlohmann::json::array();
  std::size_t core_min = 0, core_max = 0, core_total = 0, warnings = 0, empty_cores = 0;
  std::vector<double> confidences;
  std::array<std::size_t, 10> histogram{};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    const std::size_t core = p.core_speakers.size();
    core_min = i == 0 ? core : std::min(core_min, core);
    core_max = std::max(core_max, core);
    core_total += core;
    warnings += p.warnings.size();
    if (core == 0) ++empty_cores;
    if (p.confidence) {
      confidences.push_back(*p.confidence);
      ++histogram[std::min<std::size_t>(9, static_cast<std::size_t>(*p.confidence * 10.0))];
    }
    per.push_back({{"conversation_id", p.conversation_id},
                   {"topic", convs[i].topic()},
                   {"speakers", p.labels.size()},
                   {"core_size", core},
                   {"confidence", p.confidence ? nlohmann::json(*p.confidence) : nlohmann::json(nullptr)},
                   {"warnings", p.warnings.size()}});
  }
  nlohmann::json conf = {{"count", confidences.size()}};
  if (!confidences.empty()) {
    double sum = 0.0;
    for (double c : confidences) sum += c;
    conf["min"] = *std::min_element(confidences.begin(), confidences.end());
    conf["max"] = *std::max_element(confidences.begin(), confidences.end());
    conf["mean"] = sum / static_cast<double>(confidences.size());
    conf["histogram_deciles"] = histogram;
  }
  return {{"algorithm", cfg.algorithm},
          {"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"seed", cfg.seed},
          {"conversations", parts.size()},
          {"core_size",
           {{"min", core_min},
            {"max", core_max},
            {"mean", parts.empty() ? 0.0 : static_cast<double>(core_total) / static_cast<double>(parts.size())}}},
          {"empty_cores", empty_cores},
          {"confidence", conf},
          {"warnings", warnings},
          {"per_conversation", per}};
}

/// Writes <out>/partitions/<id>.json per conversation, <out>/summary.json
/// (deterministic) and <out>/timing.json (wall times), plus optional dumps
/// under graphs/, embeddings/ and pca/.
inline RunResult cmd_run(const RunConfig& cfg) {
  cfg.validate();
  const auto convs = detail::read_inputs(cfg.inputs);
  RunResult result;
  result.partitions.resize(convs.size());
  result.seconds.resize(convs.size());
  fs::create_directories(cfg.out_dir / "partitions");

  const auto started = std::chrono::steady_clock::now();
  detail::parallel_for(convs.size(), cfg.jobs, [&](std::size_t i) {
    const auto& tree = convs[i];
    const auto t0 = std::chrono::steady_clock::now();
    StemRun run = run_conversation(tree, cfg);
    result.seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string stem_name = detail::file_stem_for(tree.conversation_id());
    detail::write_text(cfg.out_dir / "partitions" / (stem_name + ".json"), to_json(run.partition).dump(2) + "\n");
    if (cfg.dump_graph) {
      std::ostringstream os;
      write_edge_csv(os, run.network);
      detail::write_text(cfg.out_dir / "graphs" / (stem_name + ".csv"), os.str());
    }
    if (cfg.dump_embedding && run.embedding) {
      std::ostringstream os;
      write_embedding_csv(os, *run.embedding);
      detail::write_text(cfg.out_dir / "embeddings" / (stem_name + ".csv"), os.str());
    }
    if (cfg.dump_pca && run.embedding) {
      std::ostringstream os;
      write_pca_csv(os, principal_projection(*run.embedding), run.partition.core_labels);
      detail::write_text(cfg.out_dir / "pca" / (stem_name + ".csv"), os.str());
    }
    result.partitions[i] = std::move(run.partition);
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  detail::write_text(cfg.out_dir / "summary.json", run_summary(cfg, convs, result.partitions).dump(2) + "\n");
  double busy = 0.0;
  for (double s : result.seconds) busy += s;
  nlohmann::json timing = {{"conversations", convs.size()},
                           {"jobs", detail::resolve_jobs(cfg.jobs, convs.size())},
                           {"wall_seconds", total},
                           {"mean_seconds_per_conversation",
                            convs.empty() ? 0.0 : busy / static_cast<double>(convs.size())}};
  detail::write_text(cfg.out_dir / "timing.json", timing.dump(2) + "\n");
  return result;
}

struct EvalConfig {
  std::vector<fs::path> inputs;          // corpus (conversation trees, may carry post labels)
  std::vector<fs::path> partition_dirs;  // outputs of cmd_run, any algorithm
  std::vector<fs::path> gold;            // optional author-label sidecars
  double alpha = 1.0;
  double beta = 0.0;
  fs::path out_dir = "stem-out";
};

struct EvalResult {
  EvalReport report;
  std::vector<Warning> warnings;
};

/// Scores every partition found against the corpus gold labels and writes
/// eval_report.json and eval_report.txt.
inline EvalResult cmd_eval(const EvalConfig& cfg) {
  const WeightConfig weights{cfg.alpha, cfg.beta};
  weights.validate();
  if (cfg.partition_dirs.empty()) throw Error(ErrorCode::InvalidConfig, "no partition directories given");
  const auto convs = detail::read_inputs(cfg.inputs);

  std::map<std::string, LabelMap> sidecar;
  for (const auto& path : cfg.gold)
    for (auto& f : read_author_labels(path)) {
      auto& dest = sidecar[f.conversation_id];
      dest.insert(f.author_labels.begin(), f.author_labels.end());
    }

  std::map<std::string, std::vector<StancePartition>> parts;
  for (const auto& dir : cfg.partition_dirs) {
    const fs::path sub = fs::is_directory(dir / "partitions") ? dir / "partitions" : dir;
    for (const auto& file : list_json_files(sub)) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_file(file));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, file.string() + ": " + e.what());
      }
      auto p = partition_from_json(doc);
      parts[p.conversation_id].push_back(std::move(p));
    }
  }

  EvalResult result;
  std::vector<ConversationEval> evals;
  bool any_gold = false;
  for (const auto& tree : convs) {
    GoldLabels gold = gold_from_tree(tree);
    if (auto it = sidecar.find(tree.conversation_id()); it != sidecar.end()) gold.author_labels = it->second;
    if (gold.empty()) {
      result.warnings.push_back({tree.conversation_id(), "no gold labels; skipped"});
      continue;
    }
    any_gold = true;
    auto it = parts.find(tree.conversation_id());
    if (it == parts.end()) {
      result.warnings.push_back({tree.conversation_id(), "no partition found; skipped"});
      continue;
    }
    const auto network = build_network(tree, weights);
    for (const auto& p : it->second) {
      auto ev = evaluate_conversation(p, gold, tree, network);
      for (const auto& w : ev.warnings) result.warnings.push_back({tree.conversation_id(), w});
      evals.push_back(std::move(ev));
    }
  }
  if (!any_gold) throw Error(ErrorCode::NoLabels, "no gold labels found in corpus or sidecars");

  result.report = aggregate(std::span<const ConversationEval>(evals));
  detail::write_text(cfg.out_dir / "eval_report.json", to_json(result.report).dump(2) + "\n");
  detail::write_text(cfg.out_dir / "eval_report.txt", format_report_table(result.report));
  return result;
}

struct GenConfig {
  SynthConfig synth;
  int count = 1;
  std::string id_prefix = "synth";
  fs::path out_dir = "stem-corpus";
};

/// Writes <out>/<id>.json conversations and <out>/gold/<id>.json author-label
/// sidecars. Conversation i is seeded from (seed, i).
inline std::vector<std::string> cmd_gen(const GenConfig& cfg) {
  if (cfg.count < 1) throw Error(ErrorCode::InvalidConfig, "count must be >= 1");
  cfg.synth.validate();
  std::vector<std::string> ids;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(cfg.count - 1).size()));
  for (int i = 0; i < cfg.count; ++i) {
    SynthConfig sc = cfg.synth;
    std::string num = std::to_string(i);
    sc.conversation_id = cfg.id_prefix + "-" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    sc.seed = detail::derive_seed(cfg.synth.seed, static_cast<std::uint64_t>(i));
    const auto conv = generate(sc);
    const std::string name = detail::file_stem_for(sc.conversation_id);
    detail::write_text(cfg.out_dir / (name + ".json"), serialize_conversation(conv.tree) + "\n");
    detail::write_text(cfg.out_dir / "gold" / (name + ".json"),
                       to_json(AuthorLabelFile{sc.conversation_id, conv.gold.author_labels}).dump() + "\n");
    ids.push_back(sc.conversation_id);
  }
  return ids;
}

}  // namespace stem
