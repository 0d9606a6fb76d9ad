// stem: unsupervised stance detection over threaded conversations.
//
//   stem run  <corpus...> [--algo stem|greedy] [--alpha A --beta B] [--out DIR] ...
//   stem eval <corpus...> --partitions DIR [--gold SIDECAR...] [--out DIR]
//   stem gen  --count N [--speakers S --posts P --p-cross X ...] --out DIR
//
// Every flag may also come from an INI/TOML style file passed with --config,
// using one section per subcommand ([run], [eval], [gen]). Flags win.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stem/stem.hpp"

namespace {

int report_error(const std::exception& e) {
  std::cerr << "stem: " << e.what() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised stance detection from conversation structure"};
  app.set_config("--config", "", "Read options from a config file (sections [run], [eval], [gen])");
  app.require_subcommand(1);

  // run
  stem::RunConfig run;
  std::vector<std::string> run_inputs;
  std::string run_out = "stem-out";
  double cone_diameter = -1.0;
  auto* run_cmd = app.add_subcommand("run", "Label speakers of every conversation in the corpus");
  run_cmd->add_option("inputs", run_inputs, "Corpus files or directories")->required();
  run_cmd->add_option("--algo", run.algorithm, "Labeling algorithm")->check(CLI::IsMember({"stem", "greedy"}));
  run_cmd->add_option("--alpha", run.alpha, "Reply weight")->capture_default_str();
  run_cmd->add_option("--beta", run.beta, "Quote weight")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Global random seed")->capture_default_str();
  run_cmd->add_option("--hyperplanes", run.hyperplanes, "Random hyperplanes tried when rounding")
      ->capture_default_str();
  run_cmd->add_option("--max-sweeps", run.max_sweeps, "Solver sweep budget")->capture_default_str();
  run_cmd->add_option("--rel-tol", run.rel_tol, "Solver relative objective tolerance")->capture_default_str();
  run_cmd->add_option("--cone-diameter", cone_diameter, "Diameter threshold for in-cone flags");
  run_cmd->add_flag("--dump-graph", run.dump_graph, "Write edge-list CSVs");
  run_cmd->add_flag("--dump-embedding", run.dump_embedding, "Write embedding CSVs");
  run_cmd->add_flag("--dump-pca", run.dump_pca, "Write 2D PCA projections of the embedding");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  run_cmd->add_option("--out", run_out, "Output directory")->capture_default_str();

  // eval
  stem::EvalConfig eval;
  std::vector<std::string> eval_inputs, eval_parts, eval_gold;
  std::string eval_out = "stem-out";
  auto* eval_cmd = app.add_subcommand("eval", "Score partitions against gold stance labels");
  eval_cmd->add_option("inputs", eval_inputs, "Corpus files or directories")->required();
  eval_cmd->add_option("--partitions", eval_parts, "Output directories of `stem run`")->required();
  eval_cmd->add_option("--gold", eval_gold, "Author-label sidecar files or directories");
  eval_cmd->add_option("--alpha", eval.alpha, "Reply weight used for the run")->capture_default_str();
  eval_cmd->add_option("--beta", eval.beta, "Quote weight used for the run")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Output directory")->capture_default_str();

  // gen
  stem::GenConfig gen;
  std::string gen_out = "stem-corpus";
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic two-faction conversations");
  gen_cmd->add_option("--count", gen.count, "Number of conversations")->capture_default_str();
  gen_cmd->add_option("--speakers", gen.synth.num_speakers, "Speakers per conversation")->capture_default_str();
  gen_cmd->add_option("--posts", gen.synth.num_posts, "Posts per conversation")->capture_default_str();
  gen_cmd->add_option("--split", gen.synth.faction_split, "Fraction of speakers in faction A")
      ->capture_default_str();
  gen_cmd->add_option("--p-cross", gen.synth.p_cross, "Probability a reply crosses factions")
      ->capture_default_str();
  gen_cmd->add_option("--p-quote", gen.synth.p_quote, "Probability a post quotes someone")->capture_default_str();
  gen_cmd->add_option("--bias", gen.synth.reply_target_bias, "Preferential attachment exponent")
      ->capture_default_str();
  gen_cmd->add_flag("--root-only", gen.synth.root_only, "All replies target the root post");
  gen_cmd->add_option("--seed", gen.synth.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--topic", gen.synth.topic, "Topic tag")->capture_default_str();
  gen_cmd->add_option("--prefix", gen.id_prefix, "Conversation id prefix")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      run.inputs.assign(run_inputs.begin(), run_inputs.end());
      run.out_dir = run_out;
      if (cone_diameter >= 0.0) run.cone_diameter = cone_diameter;
      const auto result = stem::cmd_run(run);
      std::size_t warnings = 0;
      for (const auto& p : result.partitions) {
        for (const auto& w : p.warnings) std::cerr << "warning: " << p.conversation_id << ": " << w << '\n';
        warnings += p.warnings.size();
      }
      std::cout << "labeled " << result.partitions.size() << " conversation(s) into " << run.out_dir.string()
                << " (" << warnings << " warning(s))\n";
    } else if (eval_cmd->parsed()) {
      eval.inputs.assign(eval_inputs.begin(), eval_inputs.end());
      eval.partition_dirs.assign(eval_parts.begin(), eval_parts.end());
      eval.gold.assign(eval_gold.begin(), eval_gold.end());
      eval.out_dir = eval_out;
      const auto result = stem::cmd_eval(eval);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w.conversation_id << ": " << w.message << '\n';
      std::cout << stem::format_report_table(result.report);
    } else if (gen_cmd->parsed()) {
      gen.out_dir = gen_out;
      const auto ids = stem::cmd_gen(gen);
      std::cout << "wrote " << ids.size() << " conversation(s) to " << gen.out_dir.string() << '\n';
    }
  } catch (const stem::Error& e) {
    return report_error(e);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(e);
  }
  return 0;
}
