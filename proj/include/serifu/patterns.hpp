#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "serifu/corpus.hpp"
#include "serifu/error.hpp"
#include "serifu/subword.hpp"
#include "serifu/unicode.hpp"

namespace serifu {

// ---------------------------------------------------------------------------
// Word list

// First-person singular pronouns; the only single kanji kept in a word list.
inline bool is_first_person_singular(std::string_view s) { return s == "僕" || s == "私" || s == "俺"; }

inline bool passes_han_filter(std::string_view surface) {
  return !unicode::is_single_han(surface) || is_first_person_singular(surface);
}

struct WordListEntry {
  std::string surface;
  std::string speaker_id;
  double log_prob = 0.0;

  friend bool operator==(const WordListEntry&, const WordListEntry&) = default;
};

struct WordList {
  std::vector<WordListEntry> entries;

  // Deduplicated surfaces, lexicographic.
  std::vector<std::string> universe() const {
    std::set<std::string> seen;
    for (const auto& e : entries) seen.insert(e.surface);
    return {seen.begin(), seen.end()};
  }
};

struct WordListOptions {
  bool han_filter = true;
  // Drop the bottom fifth of each model's pieces by log_prob.
  bool logprob_filter = true;
};

inline WordList build_word_list(const std::vector<SubwordModel>& models, const WordListOptions& options = {}) {
  if (models.empty()) throw ValidationError("no models for word list");
  WordList list;
  for (const auto& model : models) {
    std::vector<const SubwordPiece*> kept;
    for (const auto& p : model.pieces()) {
      if (!options.han_filter || passes_han_filter(p.surface)) kept.push_back(&p);
    }
    std::vector<bool> removed(kept.size(), false);
    if (options.logprob_filter) {
      std::vector<std::size_t> order(kept.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (kept[a]->log_prob != kept[b]->log_prob) return kept[a]->log_prob < kept[b]->log_prob;
        return kept[a]->surface > kept[b]->surface;
      });
      for (std::size_t r = 0; r < kept.size() / 5; ++r) removed[order[r]] = true;
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!removed[i]) list.entries.push_back({kept[i]->surface, model.speaker_id(), kept[i]->log_prob});
    }
  }
  return list;
}

// Word list for externally segmented corpora: each speaker's distinct tokens.
// There are no emission probabilities, so only the Han filter applies.
inline WordList word_list_from_tokens(const Corpus& corpus, const Segmentation& segmented, bool han_filter = true) {
  WordList list;
  for (const auto& speaker : corpus.speakers()) {
    auto it = segmented.find(speaker.id);
    if (it == segmented.end()) throw ValidationError("missing segmentation for speaker " + speaker.id);
    std::set<std::string> tokens;
    for (const auto& seq : it->second) tokens.insert(seq.begin(), seq.end());
    for (const auto& t : tokens) {
      if (!han_filter || passes_han_filter(t)) list.entries.push_back({t, speaker.id, 0.0});
    }
  }
  return list;
}

// ---------------------------------------------------------------------------
// Segmentation

using ModelMap = std::map<std::string, SubwordModel>;

// Each speaker's lines are segmented by that speaker's own model.
inline Segmentation segment_corpus(const Corpus& corpus, const ModelMap& models) {
  Segmentation out;
  std::map<std::string, Segmenter> segmenters;
  for (const auto& speaker : corpus.speakers()) {
    auto it = models.find(speaker.id);
    if (it == models.end()) throw ValidationError("missing model for speaker " + speaker.id);
    segmenters.emplace(speaker.id, Segmenter(it->second));
    out[speaker.id];
  }
  for (const auto& line : corpus.lines()) {
    out[line.speaker_id].push_back(segmenters.at(line.speaker_id).segment(line.text));
  }
  return out;
}

// ---------------------------------------------------------------------------
// TF/IDF

// Occurrences of t over all tokens of d; 0 for an empty document.
inline double tf(std::string_view t, const Document& d) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& seq : d.lines) {
    total += seq.size();
    for (const auto& tok : seq) hits += tok == t;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

inline std::size_t document_frequency(std::string_view t, const DocumentSet& docs) {
  std::size_t df = 0;
  for (const auto& d : docs.docs) {
    bool found = false;
    for (const auto& seq : d.lines) {
      if (std::find(seq.begin(), seq.end(), t) != seq.end()) {
        found = true;
        break;
      }
    }
    df += found;
  }
  return df;
}

// ln(N / df); nullopt when no document contains t.
inline std::optional<double> idf(std::string_view t, const DocumentSet& docs) {
  if (docs.docs.empty()) throw ValidationError("idf over an empty document set");
  const std::size_t df = document_frequency(t, docs);
  if (df == 0) return std::nullopt;
  return std::log(static_cast<double>(docs.docs.size()) / static_cast<double>(df));
}

struct TfIdfCell {
  double value = 0.0;
  double tf = 0.0;
  std::size_t count = 0;
};

struct TfIdfTable {
  Scheme scheme = Scheme::character;
  std::vector<std::string> doc_ids;
  std::vector<std::map<std::string, TfIdfCell>> cells;  // per document, only surfaces with count > 0
  std::map<std::string, std::size_t> doc_freq;
  std::vector<std::size_t> doc_tokens;

  double value(std::size_t doc, const std::string& surface) const {
    auto it = cells[doc].find(surface);
    return it == cells[doc].end() ? 0.0 : it->second.value;
  }

  std::optional<std::size_t> doc_index(std::string_view id) const {
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
      if (doc_ids[i] == id) return i;
    }
    return std::nullopt;
  }
};

inline void check_scheme_cardinality(const DocumentSet& docs) {
  std::size_t expected = 0;
  switch (docs.scheme) {
    case Scheme::gender: expected = 2; break;
    case Scheme::age: expected = 3; break;
    case Scheme::group: expected = 5; break;
    case Scheme::character: return;
  }
  if (docs.docs.size() != expected) {
    throw ValidationError("scheme " + std::string(to_string(docs.scheme)) + " needs " + std::to_string(expected) +
                          " documents, got " + std::to_string(docs.docs.size()));
  }
}

// tf x idf for every word-list surface that occurs in at least one document.
// The tf denominator counts every token, including those outside the list.
inline TfIdfTable tfidf_table(const DocumentSet& docs, const WordList& word_list) {
  if (docs.docs.empty()) throw ValidationError("empty document set");
  check_scheme_cardinality(docs);

  TfIdfTable table;
  table.scheme = docs.scheme;
  std::vector<std::unordered_map<std::string_view, std::size_t>> counts(docs.docs.size());
  for (std::size_t d = 0; d < docs.docs.size(); ++d) {
    table.doc_ids.push_back(docs.docs[d].id);
    std::size_t total = 0;
    for (const auto& seq : docs.docs[d].lines) {
      for (const auto& tok : seq) ++counts[d][tok];
      total += seq.size();
    }
    table.doc_tokens.push_back(total);
  }
  table.cells.resize(docs.docs.size());

  const double n_docs = static_cast<double>(docs.docs.size());
  for (const auto& surface : word_list.universe()) {
    std::size_t df = 0;
    for (const auto& c : counts) df += c.contains(surface);
    if (df == 0) continue;
    table.doc_freq[surface] = df;
    const double idf_value = std::log(n_docs / static_cast<double>(df));
    for (std::size_t d = 0; d < counts.size(); ++d) {
      auto it = counts[d].find(surface);
      if (it == counts[d].end()) continue;
      const double tf_value = static_cast<double>(it->second) / static_cast<double>(table.doc_tokens[d]);
      table.cells[d][surface] = TfIdfCell{tf_value * idf_value, tf_value, it->second};
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Pattern reports

struct Pattern {
  std::string surface;
  double tfidf = 0.0;
  std::size_t count = 0;
};

struct DocPatterns {
  std::string doc_id;
  std::vector<Pattern> patterns;
};

struct PatternReport {
  Scheme scheme = Scheme::character;
  std::vector<DocPatterns> docs;
};

// Highest k cells per document. Ties: higher in-document count, then surface.
inline PatternReport top_k_patterns(const TfIdfTable& table, std::size_t k = 10) {
  if (k == 0) throw ValidationError("k must be at least 1");
  PatternReport report;
  report.scheme = table.scheme;
  for (std::size_t d = 0; d < table.doc_ids.size(); ++d) {
    std::vector<Pattern> all;
    all.reserve(table.cells[d].size());
    for (const auto& [surface, cell] : table.cells[d]) all.push_back({surface, cell.value, cell.count});
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      [](const Pattern& a, const Pattern& b) {
                        if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
                        if (a.count != b.count) return a.count > b.count;
                        return a.surface < b.surface;
                      });
    all.resize(keep);
    report.docs.push_back({table.doc_ids[d], std::move(all)});
  }
  return report;
}

// scheme <tab> doc_id <tab> rank <tab> surface <tab> tfidf
inline std::string format_report_tsv(const PatternReport& report) {
  std::string out;
  const std::string scheme(to_string(report.scheme));
  for (const auto& doc : report.docs) {
    for (std::size_t r = 0; r < doc.patterns.size(); ++r) {
      out += scheme + '\t' + doc.doc_id + '\t' + std::to_string(r + 1) + '\t' + doc.patterns[r].surface + '\t' +
             detail::format_double(doc.patterns[r].tfidf) + '\n';
    }
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const PatternReport& report) {
  nlohmann::ordered_json j;
  j["scheme"] = to_string(report.scheme);
  j["documents"] = nlohmann::ordered_json::array();
  for (const auto& doc : report.docs) {
    nlohmann::ordered_json d;
    d["id"] = doc.doc_id;
    d["patterns"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < doc.patterns.size(); ++r) {
      d["patterns"].push_back({{"rank", r + 1},
                               {"surface", doc.patterns[r].surface},
                               {"tfidf", doc.patterns[r].tfidf},
                               {"count", doc.patterns[r].count}});
    }
    j["documents"].push_back(std::move(d));
  }
  return j;
}

// doc <tab> surface <tab> value, documents in table order, surfaces sorted.
inline std::string format_table_triplets(const TfIdfTable& table) {
  std::string out;
  for (std::size_t d = 0; d < table.doc_ids.size(); ++d) {
    for (const auto& [surface, cell] : table.cells[d]) {
      out += table.doc_ids[d] + '\t' + surface + '\t' + detail::format_double(cell.value) + '\n';
    }
  }
  return out;
}

}  // namespace serifu
