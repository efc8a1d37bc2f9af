#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "serifu/classify.hpp"
#include "serifu/config.hpp"
#include "serifu/corpus.hpp"
#include "serifu/error.hpp"
#include "serifu/patterns.hpp"
#include "serifu/subword.hpp"
#include "serifu/synth.hpp"

namespace serifu {

// Every tunable of the pipeline. Defaults: Basic_VS 3000, top-10 patterns and
// five folds.
struct PipelineConfig {
  std::size_t basic_vs = 3000;
  TrainerConfig trainer;
  std::size_t k = 10;
  SvmConfig svm;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  bool logprob_filter = true;
  std::size_t threads = 0;  // 0: hardware concurrency

  void apply(const KeyValueConfig& cfg) {
    cfg.check_keys({"version", "basic_vs", "eta_keep", "em_subiters", "max_piece_len", "seed_size", "k", "lambda",
                    "epochs", "folds", "seed", "logprob_filter", "threads", "kernel"});
    cfg.read("basic_vs", basic_vs);
    cfg.read("eta_keep", trainer.eta_keep);
    cfg.read("em_subiters", trainer.em_subiters);
    cfg.read("max_piece_len", trainer.max_piece_len);
    cfg.read("seed_size", trainer.seed_size);
    cfg.read("k", k);
    cfg.read("lambda", svm.lambda);
    cfg.read("epochs", svm.epochs);
    cfg.read("folds", folds);
    cfg.read("seed", seed);
    cfg.read("logprob_filter", logprob_filter);
    cfg.read("threads", threads);
    if (cfg.has("kernel") && cfg.get("kernel") != "linear") {
      throw ValidationError("only the linear kernel is supported");
    }
  }

  void validate() const {
    if (basic_vs == 0) throw ValidationError("basic_vs must be positive");
    if (!(trainer.eta_keep > 0.0 && trainer.eta_keep < 1.0)) throw ValidationError("eta_keep must lie in (0, 1)");
    if (trainer.em_subiters == 0) throw ValidationError("em_subiters must be positive");
    if (trainer.max_piece_len == 0) throw ValidationError("max_piece_len must be positive");
    if (k == 0) throw ValidationError("k must be positive");
    if (!(svm.lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (folds < 2) throw ValidationError("folds must be at least 2");
  }

  SvmConfig svm_config() const {
    SvmConfig c = svm;
    c.seed = seed;
    return c;
  }

  // One-line record of every setting, written into output headers.
  std::string describe() const {
    std::ostringstream out;
    out << "seed=" << seed << " basic_vs=" << basic_vs << " eta_keep=" << detail::format_double(trainer.eta_keep)
        << " em_subiters=" << trainer.em_subiters << " max_piece_len=" << trainer.max_piece_len
        << " seed_size=" << trainer.seed_size << " k=" << k << " kernel=" << svm.kernel
        << " lambda=" << detail::format_double(svm.lambda) << " epochs=" << svm.epochs << " folds=" << folds
        << " logprob_filter=" << (logprob_filter ? "true" : "false");
    return out.str();
  }
};

// ---------------------------------------------------------------------------
// File helpers

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Speaker id -> file name; bytes outside [A-Za-z0-9._-] are %XX-escaped.
inline std::string model_file_name(std::string_view speaker_id) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : speaker_id) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '.' || c == '_' || c == '-') {
      out += c;
    } else {
      out += '%';
      out += hex[u >> 4];
      out += hex[u & 0xF];
    }
  }
  return out + ".model";
}

// ---------------------------------------------------------------------------
// train

struct TrainRow {
  std::string speaker_id;
  std::size_t speaker_chars = 0;
  std::size_t total_chars = 0;
  std::size_t target_size = 0;
  std::size_t piece_count = 0;
};

inline std::string format_manifest(const std::vector<TrainRow>& rows, const PipelineConfig& cfg) {
  std::string out = "# serifu-manifest v1 " + cfg.describe() + "\n";
  out += "speaker_id\tfile\tl\tL\ttarget_size\tpiece_count\n";
  for (const auto& r : rows) {
    out += r.speaker_id + '\t' + model_file_name(r.speaker_id) + '\t' + std::to_string(r.speaker_chars) + '\t' +
           std::to_string(r.total_chars) + '\t' + std::to_string(r.target_size) + '\t' +
           std::to_string(r.piece_count) + '\n';
  }
  return out;
}

// Trains one model per speaker, sized against the whole corpus's character
// count. Speakers are trained on parallel workers; results do not depend on
// the thread count.
inline std::vector<SubwordModel> train_speaker_models(const Corpus& corpus, const PipelineConfig& cfg,
                                                      std::vector<TrainRow>* rows = nullptr) {
  cfg.validate();
  const std::size_t total = corpus.char_count();
  const auto& speakers = corpus.speakers();
  std::vector<std::vector<std::string>> lines(speakers.size());
  std::vector<TrainRow> plan(speakers.size());
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    lines[i] = corpus.lines_of(speakers[i].id);
    std::size_t chars = 0;
    std::set<std::string_view> distinct;
    for (const auto& l : lines[i]) {
      chars += unicode::char_count(l);
      for (auto ch : unicode::split_chars(l)) distinct.insert(ch);
    }
    plan[i] = TrainRow{speakers[i].id, chars, total, target_vocab_size(chars, total, cfg.basic_vs, distinct.size()), 0};
  }

  std::vector<SubwordModel> models(speakers.size());
  std::vector<std::exception_ptr> errors(speakers.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < speakers.size(); i = next++) {
      try {
        models[i] = train_model(lines[i], plan[i].target_size, cfg.trainer, speakers[i].id);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, speakers.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ValidationError& e) {
      throw ValidationError("speaker " + speakers[i].id + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("speaker " + speakers[i].id + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < speakers.size(); ++i) plan[i].piece_count = models[i].size();
  if (rows) *rows = std::move(plan);
  return models;
}

inline std::vector<TrainRow> cmd_train(const std::filesystem::path& corpus_path, const std::filesystem::path& out_dir,
                                       const PipelineConfig& cfg) {
  const Corpus corpus = load_corpus(corpus_path);
  std::vector<TrainRow> rows;
  const auto models = train_speaker_models(corpus, cfg, &rows);
  std::filesystem::create_directories(out_dir);
  for (const auto& m : models) write_model_file(m, out_dir / model_file_name(m.speaker_id()));
  write_text_file(out_dir / "manifest.tsv", format_manifest(rows, cfg));
  return rows;
}

// Loads the models of every corpus speaker from a `train` output directory.
inline ModelMap load_models(const Corpus& corpus, const std::filesystem::path& models_dir) {
  ModelMap models;
  for (const auto& s : corpus.speakers()) {
    const auto path = models_dir / model_file_name(s.id);
    if (!std::filesystem::exists(path)) throw ValidationError("missing model for speaker " + s.id);
    SubwordModel m = read_model_file(path);
    if (m.speaker_id() != s.id) throw ValidationError("model file " + path.string() + " belongs to " + m.speaker_id());
    models.emplace(s.id, std::move(m));
  }
  return models;
}

inline std::vector<SubwordModel> ordered_models(const Corpus& corpus, const ModelMap& models) {
  std::vector<SubwordModel> out;
  for (const auto& s : corpus.speakers()) out.push_back(models.at(s.id));
  return out;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOutputs {
  std::filesystem::path report_tsv;
  std::filesystem::path report_json;  // optional
  std::filesystem::path table_tsv;    // optional sparse triplets
};

struct ExtractResult {
  WordList word_list;
  DocumentSet docs;
  TfIdfTable table;
  PatternReport report;
};

// Steps shared by the internal and external segmentation paths.
inline ExtractResult extract_patterns(const Corpus& corpus, const Segmentation& segmented, WordList word_list,
                                      Scheme scheme, std::size_t k) {
  ExtractResult r;
  r.word_list = std::move(word_list);
  r.docs = group_documents(corpus, scheme, segmented);
  r.table = tfidf_table(r.docs, r.word_list);
  r.report = top_k_patterns(r.table, k);
  return r;
}

inline void write_extract_outputs(const ExtractResult& r, const ExtractOutputs& out, const PipelineConfig& cfg) {
  write_text_file(out.report_tsv, format_report_tsv(r.report));
  if (!out.report_json.empty()) {
    auto j = report_to_json(r.report);
    j["config"] = cfg.describe();
    j["word_list_size"] = r.word_list.universe().size();
    j["warnings"] = r.docs.warnings;
    write_text_file(out.report_json, j.dump(2) + "\n");
  }
  if (!out.table_tsv.empty()) write_text_file(out.table_tsv, format_table_triplets(r.table));
}

inline ExtractResult cmd_extract(const std::filesystem::path& corpus_path, const std::filesystem::path& models_dir,
                                 Scheme scheme, const PipelineConfig& cfg, const ExtractOutputs& out) {
  cfg.validate();
  const Corpus corpus = load_corpus(corpus_path);
  const ModelMap models = load_models(corpus, models_dir);
  WordList wl = build_word_list(ordered_models(corpus, models), WordListOptions{true, cfg.logprob_filter});
  auto r = extract_patterns(corpus, segment_corpus(corpus, models), std::move(wl), scheme, cfg.k);
  write_extract_outputs(r, out, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Pre-tokenized corpora: corpus-format S records, and token lines
//   L <tab> speaker_id <tab> tok1 <tab> tok2 ...

struct TokenizedCorpus {
  Corpus corpus;
  Segmentation segmented;
};

inline TokenizedCorpus parse_tokenized_corpus(std::istream& in) {
  std::vector<Speaker> speakers;
  std::vector<Line> lines;
  Segmentation segmented;
  std::set<std::string> declared;
  std::string raw;
  for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
    std::string_view row = detail::chomp(raw);
    if (detail::skippable(row)) continue;
    auto fields = detail::split_tabs(row);
    if (fields[0] == "S") {
      Speaker s = detail::parse_speaker_record(fields, lineno);
      if (!declared.insert(s.id).second) throw ParseError("duplicate speaker: " + s.id, lineno);
      segmented[s.id];
      speakers.push_back(std::move(s));
    } else if (fields[0] == "L") {
      if (fields.size() < 3) throw ParseError("malformed token line: no tokens", lineno);
      std::string id(fields[1]);
      if (!declared.contains(id)) throw ParseError("unknown speaker: " + id, lineno);
      TokenSeq tokens;
      std::string text;
      for (std::size_t f = 2; f < fields.size(); ++f) {
        if (fields[f].empty() || unicode::contains_whitespace(fields[f])) {
          throw ParseError("malformed token line: empty or whitespace token at field " + std::to_string(f + 1), lineno);
        }
        tokens.emplace_back(fields[f]);
        text += fields[f];
      }
      std::string work;
      for (const auto& s : speakers) {
        if (s.id == id) work = s.work_id;
      }
      lines.push_back(Line{id, work, std::move(text)});
      segmented[id].push_back(std::move(tokens));
    } else {
      throw ParseError("unknown record kind '" + std::string(fields[0]) + "'", lineno);
    }
  }
  return TokenizedCorpus{Corpus(std::move(speakers), std::move(lines)), std::move(segmented)};
}

inline TokenizedCorpus load_tokenized_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open segmented corpus: " + path.string());
  return parse_tokenized_corpus(in);
}

inline std::string format_tokenized_corpus(const Corpus& corpus, const Segmentation& segmented) {
  std::ostringstream out;
  for (const auto& s : corpus.speakers()) write_speaker_record(out, s);
  std::map<std::string, std::size_t> cursor;
  for (const auto& line : corpus.lines()) {
    const auto& seq = segmented.at(line.speaker_id).at(cursor[line.speaker_id]++);
    out << "L\t" << line.speaker_id;
    for (const auto& tok : seq) out << '\t' << tok;
    out << '\n';
  }
  return out.str();
}

// Writes the internal segmentation in the pre-tokenized format.
inline void cmd_segment(const std::filesystem::path& corpus_path, const std::filesystem::path& models_dir,
                        const std::filesystem::path& out_path) {
  const Corpus corpus = load_corpus(corpus_path);
  const ModelMap models = load_models(corpus, models_dir);
  write_text_file(out_path, format_tokenized_corpus(corpus, segment_corpus(corpus, models)));
}

// Same downstream path for externally segmented text. No emission
// probabilities exist, so the bottom-fifth filter is skipped; the Han filter
// still applies.
inline ExtractResult cmd_extract_external(const std::filesystem::path& segmented_path, Scheme scheme,
                                          const PipelineConfig& cfg, const ExtractOutputs& out) {
  cfg.validate();
  const TokenizedCorpus tc = load_tokenized_corpus(segmented_path);
  auto r = extract_patterns(tc.corpus, tc.segmented, word_list_from_tokens(tc.corpus, tc.segmented), scheme, cfg.k);
  write_extract_outputs(r, out, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// classify

inline std::vector<Group5> speaker_labels(const Corpus& corpus, const std::vector<std::string>& row_ids) {
  std::vector<Group5> y;
  for (const auto& id : row_ids) y.push_back(corpus.speaker(id).group5());
  return y;
}

inline CvResult classify_corpus(const Corpus& corpus, const Segmentation& segmented, const WordList& word_list,
                                const PipelineConfig& cfg) {
  const DocumentSet docs = group_documents(corpus, Scheme::character, segmented);
  const FeatureMatrix X = build_features(tfidf_table(docs, word_list), word_list);
  const auto y = speaker_labels(corpus, X.row_ids);
  if (detail::distinct_labels(y).size() < 2) throw ValidationError("single-class input");
  return cross_validate(X, y, cfg.folds, cfg.svm_config());
}

inline std::string format_classify_output(const CvResult& cv, const PipelineConfig& cfg) {
  return "# serifu-cv v1 " + cfg.describe() + "\n" + format_cv_tsv(cv);
}

inline CvResult cmd_classify(const std::filesystem::path& corpus_path, const std::filesystem::path& models_dir,
                             const PipelineConfig& cfg, const std::filesystem::path& out_path) {
  cfg.validate();
  const Corpus corpus = load_corpus(corpus_path);
  const ModelMap models = load_models(corpus, models_dir);
  const WordList wl = build_word_list(ordered_models(corpus, models), WordListOptions{true, cfg.logprob_filter});
  CvResult cv = classify_corpus(corpus, segment_corpus(corpus, models), wl, cfg);
  write_text_file(out_path, format_classify_output(cv, cfg));
  return cv;
}

// ---------------------------------------------------------------------------
// synth

inline Corpus cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_path) {
  const Corpus corpus = generate_corpus(synth_spec_from_config(KeyValueConfig::load(spec_path)));
  write_text_file(out_path, format_corpus(corpus));
  return corpus;
}

}  // namespace serifu
