// serifu: per-speaker subword training, speech-pattern extraction and
// speaker-group classification over dialog corpora.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "serifu/serifu.hpp"

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::size_t> basic_vs, em_subiters, max_piece_len, seed_size, k, epochs, folds, threads;
  std::optional<double> eta_keep, lambda;
  std::optional<std::uint64_t> seed;
  bool no_logprob_filter = false;

  void add_to(CLI::App* cmd, bool training, bool extraction, bool classification) {
    cmd->add_option("--config", config_path, "key = value config file (version = 1)");
    cmd->add_option("--seed", seed, "root seed");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    if (training) {
      cmd->add_option("--basic-vs", basic_vs, "basic vocabulary size");
      cmd->add_option("--eta-keep", eta_keep, "fraction of multi-character pieces kept per pruning round");
      cmd->add_option("--em-subiters", em_subiters, "EM iterations per pruning round");
      cmd->add_option("--max-piece-len", max_piece_len, "longest seed piece, in characters");
      cmd->add_option("--seed-size", seed_size, "seed vocabulary size");
    }
    if (extraction) cmd->add_option("--k", k, "patterns reported per document");
    if (extraction || classification) {
      cmd->add_flag("--no-logprob-filter", no_logprob_filter, "keep the lowest-probability fifth of each vocabulary");
    }
    if (classification) {
      cmd->add_option("--lambda", lambda, "SVM regularization");
      cmd->add_option("--epochs", epochs, "SVM training epochs");
      cmd->add_option("--folds", folds, "cross-validation folds");
    }
  }

  serifu::PipelineConfig resolve() const {
    serifu::PipelineConfig cfg;
    if (!config_path.empty()) cfg.apply(serifu::KeyValueConfig::load(config_path));
    if (basic_vs) cfg.basic_vs = *basic_vs;
    if (eta_keep) cfg.trainer.eta_keep = *eta_keep;
    if (em_subiters) cfg.trainer.em_subiters = *em_subiters;
    if (max_piece_len) cfg.trainer.max_piece_len = *max_piece_len;
    if (seed_size) cfg.trainer.seed_size = *seed_size;
    if (k) cfg.k = *k;
    if (lambda) cfg.svm.lambda = *lambda;
    if (epochs) cfg.svm.epochs = *epochs;
    if (folds) cfg.folds = *folds;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (no_logprob_filter) cfg.logprob_filter = false;
    cfg.validate();
    return cfg;
  }
};

serifu::Scheme scheme_or_throw(const std::string& name) {
  auto s = serifu::parse_scheme(name);
  if (!s) throw serifu::ValidationError("invalid scheme '" + name + "'");
  return *s;
}

void print_report(const serifu::ExtractResult& r) {
  for (const auto& w : r.docs.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "word list: " << r.word_list.universe().size() << " surfaces, " << r.report.docs.size()
            << " documents\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serifu: subword speech-pattern extraction for dialog corpora"};
  app.require_subcommand(1);

  Flags flags;
  std::string corpus_path, models_dir, out_path, json_path, table_path, scheme_name = "gender", spec_path,
                                                                        segmented_path;

  auto* train = app.add_subcommand("train", "train one subword model per speaker");
  train->add_option("--corpus", corpus_path, "corpus file")->required();
  train->add_option("--out", out_path, "output directory for models and manifest")->required();
  flags.add_to(train, true, false, false);

  auto* extract = app.add_subcommand("extract", "top-k TF/IDF patterns per document");
  extract->add_option("--corpus", corpus_path, "corpus file")->required();
  extract->add_option("--models", models_dir, "directory written by train")->required();
  extract->add_option("--scheme", scheme_name, "gender | age | character | group");
  extract->add_option("--out", out_path, "report TSV")->required();
  extract->add_option("--json", json_path, "report JSON");
  extract->add_option("--table", table_path, "full TF/IDF table as doc/surface/value triplets");
  flags.add_to(extract, false, true, false);

  auto* classify = app.add_subcommand("classify", "five-group speaker classification with cross-validation");
  classify->add_option("--corpus", corpus_path, "corpus file")->required();
  classify->add_option("--models", models_dir, "directory written by train")->required();
  classify->add_option("--out", out_path, "cross-validation TSV")->required();
  flags.add_to(classify, false, false, true);

  auto* segment = app.add_subcommand("segment", "write the corpus segmented by each speaker's model");
  segment->add_option("--corpus", corpus_path, "corpus file")->required();
  segment->add_option("--models", models_dir, "directory written by train")->required();
  segment->add_option("--out", out_path, "pre-tokenized corpus file")->required();

  auto* external = app.add_subcommand("extract-external", "top-k patterns from an externally segmented corpus");
  external->add_option("--segmented", segmented_path, "pre-tokenized corpus file")->required();
  external->add_option("--scheme", scheme_name, "gender | age | character | group");
  external->add_option("--out", out_path, "report TSV")->required();
  external->add_option("--json", json_path, "report JSON");
  external->add_option("--table", table_path, "full TF/IDF table as doc/surface/value triplets");
  flags.add_to(external, false, true, false);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted patterns");
  synth->add_option("--spec", spec_path, "synth spec config")->required();
  synth->add_option("--out", out_path, "corpus file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      const auto rows = serifu::cmd_train(corpus_path, out_path, flags.resolve());
      std::cerr << "trained " << rows.size() << " models into " << out_path << '\n';
    } else if (extract->parsed()) {
      const auto scheme = scheme_or_throw(scheme_name);
      print_report(serifu::cmd_extract(corpus_path, models_dir, scheme, flags.resolve(),
                                       {out_path, json_path, table_path}));
    } else if (classify->parsed()) {
      const auto cv = serifu::cmd_classify(corpus_path, models_dir, flags.resolve(), out_path);
      std::cerr << "mean accuracy " << cv.mean_accuracy << " over " << cv.fold_accuracies.size() << " folds\n";
    } else if (segment->parsed()) {
      serifu::cmd_segment(corpus_path, models_dir, out_path);
    } else if (external->parsed()) {
      const auto scheme = scheme_or_throw(scheme_name);
      print_report(serifu::cmd_extract_external(segmented_path, scheme, flags.resolve(),
                                                {out_path, json_path, table_path}));
    } else if (synth->parsed()) {
      const auto corpus = serifu::cmd_synth(spec_path, out_path);
      std::cerr << "wrote " << corpus.speakers().size() << " speakers, " << corpus.lines().size() << " lines\n";
    }
  } catch (const serifu::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
