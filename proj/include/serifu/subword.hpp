#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "serifu/error.hpp"
#include "serifu/unicode.hpp"

namespace serifu {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log-probability given to pieces whose expected count vanished during EM.
// exp(-700) is ~1e-304, so the floor never disturbs normalization.
inline constexpr double kMinLogProb = -700.0;

// Penalty below the smallest piece log-prob for characters the model never saw.
inline constexpr double kUnknownPenalty = 10.0;

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

struct SubwordPiece {
  std::string surface;
  double log_prob = 0.0;

  friend bool operator==(const SubwordPiece&, const SubwordPiece&) = default;
};

namespace detail {

// Byte-level trie over piece surfaces; used to enumerate every piece that is a
// prefix of text[pos..] in one walk.
class PieceTrie {
 public:
  // With `reversed`, keys are the surfaces' bytes read back to front.
  void build(const std::vector<SubwordPiece>& pieces, bool reversed = false) {
    std::vector<std::map<unsigned char, std::uint32_t>> tmp(1);
    std::vector<std::int32_t> piece_at(1, -1);
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      std::uint32_t node = 0;
      std::string key = pieces[p].surface;
      if (reversed) std::reverse(key.begin(), key.end());
      for (char c : key) {
        auto byte = static_cast<unsigned char>(c);
        auto it = tmp[node].find(byte);
        if (it == tmp[node].end()) {
          auto child = static_cast<std::uint32_t>(tmp.size());
          tmp[node].emplace(byte, child);
          tmp.emplace_back();
          piece_at.push_back(-1);
          node = child;
        } else {
          node = it->second;
        }
      }
      piece_at[node] = static_cast<std::int32_t>(p);
    }
    nodes_.assign(tmp.size(), Node{});
    edges_.clear();
    for (std::size_t n = 0; n < tmp.size(); ++n) {
      nodes_[n].first_edge = static_cast<std::uint32_t>(edges_.size());
      nodes_[n].edge_count = static_cast<std::uint32_t>(tmp[n].size());
      nodes_[n].piece = piece_at[n];
      for (auto [byte, child] : tmp[n]) edges_.push_back(Edge{byte, child});
    }
  }

  // Calls fn(piece_index, end_byte) for every piece that starts at text[pos].
  template <typename Fn>
  void match_prefixes(std::string_view text, std::size_t pos, Fn&& fn) const {
    if (nodes_.empty()) return;
    std::uint32_t node = 0;
    for (std::size_t b = pos; b < text.size(); ++b) {
      const Node& cur = nodes_[node];
      const auto byte = static_cast<unsigned char>(text[b]);
      const Edge* first = edges_.data() + cur.first_edge;
      const Edge* last = first + cur.edge_count;
      const Edge* hit = find_edge(first, last, byte);
      if (!hit) return;
      node = hit->child;
      if (nodes_[node].piece >= 0) fn(static_cast<std::size_t>(nodes_[node].piece), b + 1);
    }
  }

  // Reversed tries only: calls fn(piece_index, begin_byte) for every piece
  // that ends at text[end - 1].
  template <typename Fn>
  void match_suffixes(std::string_view text, std::size_t end, Fn&& fn) const {
    if (nodes_.empty()) return;
    std::uint32_t node = 0;
    for (std::size_t b = end; b-- > 0;) {
      const Node& cur = nodes_[node];
      const auto byte = static_cast<unsigned char>(text[b]);
      const Edge* first = edges_.data() + cur.first_edge;
      const Edge* last = first + cur.edge_count;
      const Edge* hit = find_edge(first, last, byte);
      if (!hit) return;
      node = hit->child;
      if (nodes_[node].piece >= 0) fn(static_cast<std::size_t>(nodes_[node].piece), b);
    }
  }

 private:
  struct Edge;

  // Edges are sorted by byte; short runs are scanned, long ones bisected.
  static const Edge* find_edge(const Edge* first, const Edge* last, unsigned char byte) {
    if (last - first > 8) {
      first = std::lower_bound(first, last, byte, [](const Edge& e, unsigned char v) { return e.byte < v; });
      return first != last && first->byte == byte ? first : nullptr;
    }
    for (; first != last; ++first) {
      if (first->byte == byte) return first;
    }
    return nullptr;
  }

  struct Node {
    std::uint32_t first_edge = 0;
    std::uint32_t edge_count = 0;
    std::int32_t piece = -1;
  };
  struct Edge {
    unsigned char byte;
    std::uint32_t child;
  };
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

}  // namespace detail

// Unigram language model over subword pieces. Pieces are kept sorted by
// surface; index i always refers to that order.
class SubwordModel {
 public:
  SubwordModel() {
    trie_.build(pieces_);
    suffix_trie_.build(pieces_, true);
  }

  SubwordModel(std::string speaker_id, std::vector<SubwordPiece> pieces, std::size_t target_size = 0,
               double trained_log_likelihood = 0.0)
      : speaker_id_(std::move(speaker_id)),
        pieces_(std::move(pieces)),
        target_size_(target_size),
        trained_log_likelihood_(trained_log_likelihood) {
    std::sort(pieces_.begin(), pieces_.end(),
              [](const SubwordPiece& a, const SubwordPiece& b) { return a.surface < b.surface; });
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& p = pieces_[i];
      if (p.surface.empty()) throw ValidationError("empty piece surface");
      if (i > 0 && pieces_[i - 1].surface == p.surface) throw ValidationError("duplicate piece: " + p.surface);
      if (unicode::contains_whitespace(p.surface)) throw ValidationError("piece contains whitespace: " + p.surface);
      if (!(p.log_prob <= 0.0) || !std::isfinite(p.log_prob)) {
        throw ValidationError("piece '" + p.surface + "' has invalid log_prob");
      }
    }
    single_.resize(pieces_.size());
    min_log_prob_ = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      single_[i] = unicode::char_length(pieces_[i].surface, 0) == pieces_[i].surface.size();
      if (single_[i]) ++single_count_;
      min_log_prob_ = std::min(min_log_prob_, pieces_[i].log_prob);
    }
    trie_.build(pieces_);
    suffix_trie_.build(pieces_, true);
  }

  const std::string& speaker_id() const { return speaker_id_; }
  const std::vector<SubwordPiece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  std::size_t target_size() const { return target_size_; }
  double trained_log_likelihood() const { return trained_log_likelihood_; }

  const SubwordPiece& piece(std::size_t i) const { return pieces_[i]; }
  double log_prob(std::size_t i) const { return pieces_[i].log_prob; }
  bool is_single_char(std::size_t i) const { return single_[i]; }
  std::size_t single_char_count() const { return single_count_; }
  std::size_t multi_char_count() const { return pieces_.size() - single_count_; }

  std::optional<std::size_t> find(std::string_view surface) const {
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), surface,
                               [](const SubwordPiece& p, std::string_view s) { return p.surface < s; });
    if (it == pieces_.end() || it->surface != surface) return std::nullopt;
    return static_cast<std::size_t>(it - pieces_.begin());
  }

  bool contains(std::string_view surface) const { return find(surface).has_value(); }

  // Score used for characters absent from the vocabulary.
  double unknown_log_prob() const { return min_log_prob_ - kUnknownPenalty; }

  double probability_mass() const {
    double total = 0.0;
    for (const auto& p : pieces_) total += std::exp(p.log_prob);
    return total;
  }

  template <typename Fn>
  void match_prefixes(std::string_view text, std::size_t pos, Fn&& fn) const {
    trie_.match_prefixes(text, pos, std::forward<Fn>(fn));
  }

  // fn(piece_index, begin_byte) for every piece ending at text[end - 1].
  template <typename Fn>
  void match_suffixes(std::string_view text, std::size_t end, Fn&& fn) const {
    suffix_trie_.match_suffixes(text, end, std::forward<Fn>(fn));
  }

  // Same vocabulary, new log-probs (indexed in surface order).
  SubwordModel with_log_probs(const std::vector<double>& log_probs) const {
    std::vector<SubwordPiece> next = pieces_;
    for (std::size_t i = 0; i < next.size(); ++i) next[i].log_prob = log_probs[i];
    return SubwordModel(speaker_id_, std::move(next), target_size_, trained_log_likelihood_);
  }

  SubwordModel with_metadata(std::string speaker_id, std::size_t target_size, double trained_log_likelihood) const {
    return SubwordModel(std::move(speaker_id), pieces_, target_size, trained_log_likelihood);
  }

  friend bool operator==(const SubwordModel& a, const SubwordModel& b) {
    return a.speaker_id_ == b.speaker_id_ && a.pieces_ == b.pieces_ && a.target_size_ == b.target_size_ &&
           a.trained_log_likelihood_ == b.trained_log_likelihood_;
  }

 private:
  std::string speaker_id_;
  std::vector<SubwordPiece> pieces_;
  std::size_t target_size_ = 0;
  double trained_log_likelihood_ = 0.0;
  std::vector<bool> single_;
  std::size_t single_count_ = 0;
  double min_log_prob_ = 0.0;
  detail::PieceTrie trie_;
  detail::PieceTrie suffix_trie_;
};

// ---------------------------------------------------------------------------
// Vocabulary sizing

// Basic_VS scaled by the fifth root of the speaker's share of all characters,
// never below `min_size` (the speaker's distinct character count).
inline std::size_t target_vocab_size(std::size_t speaker_chars, std::size_t total_chars, std::size_t basic_vs,
                                     std::size_t min_size = 0) {
  if (speaker_chars == 0) throw ValidationError("speaker has no characters");
  if (speaker_chars > total_chars) throw ValidationError("speaker character count exceeds corpus total");
  if (basic_vs == 0) throw ValidationError("basic vocabulary size must be positive");
  const double ratio = static_cast<double>(speaker_chars) / static_cast<double>(total_chars);
  const auto scaled = static_cast<std::size_t>(std::llround(static_cast<double>(basic_vs) * std::pow(ratio, 0.2)));
  return std::max(scaled, min_size);
}

// ---------------------------------------------------------------------------
// Lattice

struct LatticeEdge {
  std::uint32_t begin;  // character index
  std::uint32_t end;
  std::uint32_t piece;
};

// All vocabulary matches over one line, ordered by begin position.
struct Lattice {
  std::size_t length = 0;  // characters
  std::vector<LatticeEdge> edges;
  std::vector<std::uint32_t> first_edge;  // edges beginning at i: [first_edge[i], first_edge[i+1])
};

inline Lattice build_lattice(const SubwordModel& model, std::string_view text) {
  Lattice lat;
  const auto offsets = unicode::char_offsets(text);
  lat.length = offsets.size() - 1;
  std::vector<std::int32_t> char_at(text.size() + 1, -1);
  for (std::size_t k = 0; k < offsets.size(); ++k) char_at[offsets[k]] = static_cast<std::int32_t>(k);
  lat.first_edge.assign(lat.length + 1, 0);
  for (std::size_t i = 0; i < lat.length; ++i) {
    lat.first_edge[i] = static_cast<std::uint32_t>(lat.edges.size());
    model.match_prefixes(text, offsets[i], [&](std::size_t piece, std::size_t end_byte) {
      if (char_at[end_byte] < 0) return;
      lat.edges.push_back(LatticeEdge{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(char_at[end_byte]),
                                      static_cast<std::uint32_t>(piece)});
    });
  }
  lat.first_edge[lat.length] = static_cast<std::uint32_t>(lat.edges.size());
  return lat;
}

namespace detail {

// Forward log-marginals alpha[0..n]; edges whose piece == skip are ignored.
inline std::vector<double> forward(const SubwordModel& model, const Lattice& lat,
                                   std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  std::vector<double> alpha(lat.length + 1, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t i = 0; i < lat.length; ++i) {
    if (alpha[i] == kNegInf) continue;
    for (auto e = lat.first_edge[i]; e < lat.first_edge[i + 1]; ++e) {
      const auto& edge = lat.edges[e];
      if (edge.piece == skip) continue;
      alpha[edge.end] = log_add(alpha[edge.end], alpha[i] + model.log_prob(edge.piece));
    }
  }
  return alpha;
}

inline std::vector<double> backward(const SubwordModel& model, const Lattice& lat) {
  std::vector<double> beta(lat.length + 1, kNegInf);
  beta[lat.length] = 0.0;
  for (std::size_t i = lat.length; i-- > 0;) {
    for (auto e = lat.first_edge[i]; e < lat.first_edge[i + 1]; ++e) {
      const auto& edge = lat.edges[e];
      beta[i] = log_add(beta[i], model.log_prob(edge.piece) + beta[edge.end]);
    }
  }
  return beta;
}

inline std::vector<double> normalize_log(const std::vector<double>& log_weights) {
  double total = kNegInf;
  for (double w : log_weights) total = log_add(total, w);
  std::vector<double> out(log_weights.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = log_weights[i] == kNegInf ? kMinLogProb : std::max(kMinLogProb, std::min(0.0, log_weights[i] - total));
  }
  return out;
}

}  // namespace detail

// Marginal log-likelihood of one line over all segmentations.
inline double line_log_likelihood(const SubwordModel& model, std::string_view text) {
  const Lattice lat = build_lattice(model, text);
  return detail::forward(model, lat)[lat.length];
}

inline double corpus_log_likelihood(const SubwordModel& model, const std::vector<std::string>& lines) {
  double total = 0.0;
  for (const auto& line : lines) total += line_log_likelihood(model, line);
  return total;
}

// ---------------------------------------------------------------------------
// Seed vocabulary

// All characters of the corpus plus the best multi-character substrings
// (2..max_piece_len characters, seen at least twice), scored frequency x length
// and truncated to seed_size pieces overall.
inline std::vector<SubwordPiece> seed_vocabulary(const std::vector<std::string>& lines, std::size_t max_piece_len,
                                                 std::size_t seed_size) {
  if (lines.empty()) throw ValidationError("no training lines");
  if (max_piece_len < 1) throw ValidationError("max_piece_len must be at least 1");

  std::map<std::string_view, std::size_t> singles;
  std::unordered_map<std::string_view, std::size_t> substrings;
  for (const auto& line : lines) {
    if (unicode::contains_whitespace(line)) throw ValidationError("training line contains whitespace: " + line);
    const auto offsets = unicode::char_offsets(line);
    const std::size_t n = offsets.size() - 1;
    const std::string_view view(line);
    for (std::size_t i = 0; i < n; ++i) {
      ++singles[view.substr(offsets[i], offsets[i + 1] - offsets[i])];
      for (std::size_t len = 2; len <= max_piece_len && i + len <= n; ++len) {
        ++substrings[view.substr(offsets[i], offsets[i + len] - offsets[i])];
      }
    }
  }
  if (seed_size < singles.size()) {
    throw ValidationError("seed_size " + std::to_string(seed_size) + " is below the distinct character count " +
                          std::to_string(singles.size()));
  }

  struct Candidate {
    std::string_view surface;
    double score;
  };
  std::vector<Candidate> multi;
  for (auto [surface, freq] : substrings) {
    if (freq >= 2) {
      multi.push_back({surface, static_cast<double>(freq) * static_cast<double>(unicode::char_count(surface))});
    }
  }
  std::sort(multi.begin(), multi.end(), [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score > b.score : a.surface < b.surface;
  });
  multi.resize(std::min(multi.size(), seed_size - singles.size()));

  double total = 0.0;
  for (auto [surface, freq] : singles) total += static_cast<double>(freq);
  for (const auto& c : multi) total += c.score;

  std::vector<SubwordPiece> pieces;
  pieces.reserve(singles.size() + multi.size());
  for (auto [surface, freq] : singles) {
    pieces.push_back({std::string(surface), std::min(0.0, std::log(static_cast<double>(freq) / total))});
  }
  for (const auto& c : multi) pieces.push_back({std::string(c.surface), std::min(0.0, std::log(c.score / total))});
  std::sort(pieces.begin(), pieces.end(),
            [](const SubwordPiece& a, const SubwordPiece& b) { return a.surface < b.surface; });
  return pieces;
}

// ---------------------------------------------------------------------------
// EM

struct EmResult {
  SubwordModel model;
  double log_likelihood;  // of the lines under the model passed in
};

// One EM iteration: expected piece counts by forward-backward over each line's
// lattice, then renormalization. Counts are accumulated in log space.
inline EmResult em_step(const SubwordModel& model, const std::vector<std::string>& lines) {
  std::vector<double> log_counts(model.size(), kNegInf);
  double log_likelihood = 0.0;
  for (const auto& line : lines) {
    const Lattice lat = build_lattice(model, line);
    const auto alpha = detail::forward(model, lat);
    const double z = alpha[lat.length];
    if (z == kNegInf) throw ValidationError("uncoverable line: " + line);
    const auto beta = detail::backward(model, lat);
    for (const auto& e : lat.edges) {
      if (alpha[e.begin] == kNegInf || beta[e.end] == kNegInf) continue;
      const double posterior = alpha[e.begin] + model.log_prob(e.piece) + beta[e.end] - z;
      log_counts[e.piece] = log_add(log_counts[e.piece], posterior);
    }
    log_likelihood += z;
  }
  if (lines.empty()) return {model, 0.0};
  return {model.with_log_probs(detail::normalize_log(log_counts)), log_likelihood};
}

// ---------------------------------------------------------------------------
// Pruning

// Likelihood drop per piece: marginal corpus log-likelihood with the full
// vocabulary minus the same with that piece's lattice edges removed (other
// probabilities unchanged). Single-character pieces report 0 and are exempt.
inline std::vector<double> piece_losses(const SubwordModel& model, const std::vector<std::string>& lines) {
  std::vector<double> loss(model.size(), 0.0);
  std::vector<std::uint32_t> present;
  for (const auto& line : lines) {
    const Lattice lat = build_lattice(model, line);
    const double full = detail::forward(model, lat)[lat.length];
    present.clear();
    for (const auto& e : lat.edges) {
      if (!model.is_single_char(e.piece)) present.push_back(e.piece);
    }
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (auto piece : present) {
      const double without = detail::forward(model, lat, piece)[lat.length];
      loss[piece] += full - without;
    }
  }
  return loss;
}

// Keeps the top eta_keep fraction (rounded up, clamped to [min_keep, max_keep])
// of multi-character pieces by loss, plus every single-character piece;
// renormalizes the survivors. Ties: higher log_prob first, then the
// lexicographically smaller surface.
inline SubwordModel prune_vocabulary(const SubwordModel& model, const std::vector<std::string>& lines, double eta_keep,
                                     std::size_t min_keep = 0,
                                     std::size_t max_keep = std::numeric_limits<std::size_t>::max()) {
  if (!(eta_keep > 0.0 && eta_keep < 1.0)) throw ValidationError("eta_keep must lie in (0, 1)");
  const auto loss = piece_losses(model, lines);

  std::vector<std::size_t> multi;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!model.is_single_char(i)) multi.push_back(i);
  }
  std::sort(multi.begin(), multi.end(), [&](std::size_t a, std::size_t b) {
    if (loss[a] != loss[b]) return loss[a] > loss[b];
    if (model.log_prob(a) != model.log_prob(b)) return model.log_prob(a) > model.log_prob(b);
    return model.piece(a).surface < model.piece(b).surface;
  });
  auto keep = static_cast<std::size_t>(std::ceil(eta_keep * static_cast<double>(multi.size()) - 1e-9));
  keep = std::min({multi.size(), max_keep, std::max(keep, min_keep)});

  std::vector<SubwordPiece> kept;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.is_single_char(i)) kept.push_back(model.piece(i));
  }
  for (std::size_t r = 0; r < keep; ++r) kept.push_back(model.piece(multi[r]));

  std::vector<double> raw;
  for (const auto& p : kept) raw.push_back(p.log_prob);
  const auto renorm = detail::normalize_log(raw);
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i].log_prob = renorm[i];
  return SubwordModel(model.speaker_id(), std::move(kept), model.target_size(), model.trained_log_likelihood());
}

// ---------------------------------------------------------------------------
// Training

struct TrainerConfig {
  double eta_keep = 0.75;
  std::size_t em_subiters = 2;
  std::size_t max_piece_len = 8;
  std::size_t seed_size = 1'000'000;
};

inline SubwordModel train_model(const std::vector<std::string>& lines, std::size_t target_size,
                                const TrainerConfig& config = {}, const std::string& speaker_id = {}) {
  if (lines.empty()) throw ValidationError("no training lines for speaker " + speaker_id);
  if (config.em_subiters == 0) throw ValidationError("em_subiters must be positive");

  std::unordered_set<std::string_view> distinct;
  for (const auto& line : lines) {
    for (auto ch : unicode::split_chars(line)) distinct.insert(ch);
  }
  const std::size_t seed_size = std::max(config.seed_size, distinct.size());
  SubwordModel model(speaker_id, seed_vocabulary(lines, config.max_piece_len, seed_size), target_size);
  const std::size_t target_multi = target_size > model.single_char_count() ? target_size - model.single_char_count() : 0;

  while (true) {
    for (std::size_t it = 0; it < config.em_subiters; ++it) model = em_step(model, lines).model;
    if (model.multi_char_count() <= target_multi) break;
    // max_keep forces at least one removal per round.
    model = prune_vocabulary(model, lines, config.eta_keep, target_multi, model.multi_char_count() - 1);
  }
  model = em_step(model, lines).model;
  return model.with_metadata(speaker_id, target_size, corpus_log_likelihood(model, lines));
}

// ---------------------------------------------------------------------------
// Viterbi

struct Span {
  std::uint32_t begin;  // byte offsets into the segmented text
  std::uint32_t end;
};

// Viterbi decoder that grows its lattice one character at a time: push()
// appends a character and settles the best path to the new end, pop() undoes
// the last push. segment() runs a whole string through it. Scratch buffers
// are reused between calls.
// Ties on score go to fewer pieces, then to the lexicographically smaller
// piece sequence.
class Segmenter {
 public:
  explicit Segmenter(const SubwordModel& model) : model_(model) { reset(); }

  void reset() {
    text_.clear();
    cells_.assign(1, Cell{0, 0.0, 0, -1});
  }

  // Appends one character (its UTF-8 bytes).
  void push(std::string_view ch) {
    const std::size_t i = cells_.size() - 1;
    text_.append(ch);
    cells_.push_back(Cell{static_cast<std::uint32_t>(text_.size()), kNegInf, 0, -1});
    const std::size_t n = i + 1;

    // Suffix matches arrive with decreasing begin bytes, so a cursor walking
    // back over the character offsets tells whether each begins on a boundary.
    std::size_t j = i;
    bool has_single = false;
    model_.match_suffixes(text_, text_.size(), [&](std::size_t piece, std::size_t begin_byte) {
      while (j > 0 && cells_[j].offset > begin_byte) --j;
      if (cells_[j].offset != begin_byte) return;
      if (j == i) has_single = true;
      relax(j, n, cells_[j].score + model_.log_prob(piece));
    });
    if (!has_single) relax(i, n, cells_[i].score + model_.unknown_log_prob());
  }

  void pop() {
    cells_.pop_back();
    text_.resize(cells_.back().offset);
  }

  std::size_t length() const { return cells_.size() - 1; }
  const std::string& text() const { return text_; }
  // Summed log-prob of the best segmentation of text().
  double score() const { return cells_.back().score; }

  void spans(std::vector<Span>& out) const {
    out.clear();
    for (std::int32_t k = static_cast<std::int32_t>(length()); k > 0; k = cells_[k].prev) {
      out.push_back(Span{cells_[cells_[k].prev].offset, cells_[k].offset});
    }
    std::reverse(out.begin(), out.end());
  }

  // Fills `out` with the best segmentation; returns its summed log-prob.
  double segment(std::string_view text, std::vector<Span>& out) {
    reset();
    for (std::size_t pos = 0; pos < text.size();) {
      const std::size_t len = unicode::char_length(text, pos);
      push(text.substr(pos, len));
      pos += len;
    }
    spans(out);
    return score();
  }

  std::vector<std::string> segment(std::string_view text) {
    std::vector<Span> spans;
    segment(text, spans);
    std::vector<std::string> pieces;
    pieces.reserve(spans.size());
    for (auto s : spans) pieces.emplace_back(text.substr(s.begin, s.end - s.begin));
    return pieces;
  }

 private:
  // Per character boundary: byte offset and the best path ending there.
  struct Cell {
    std::uint32_t offset;
    double score;
    std::uint32_t count;
    std::int32_t prev;
  };

  void relax(std::size_t from, std::size_t to, double score) {
    Cell& dst = cells_[to];
    const std::uint32_t count = cells_[from].count + 1;
    bool take = false;
    if (score > dst.score) {
      take = true;
    } else if (score == dst.score) {
      take = count != dst.count ? count < dst.count : lexicographically_smaller(from, to);
    }
    if (take) {
      dst.score = score;
      dst.count = count;
      dst.prev = static_cast<std::int32_t>(from);
    }
  }

  void path_to(std::size_t k, std::vector<std::uint32_t>& cuts) const {
    cuts.clear();
    for (std::int32_t c = static_cast<std::int32_t>(k); c > 0; c = cells_[c].prev) {
      cuts.push_back(static_cast<std::uint32_t>(c));
    }
    cuts.push_back(0);
    std::reverse(cuts.begin(), cuts.end());
  }

  // Is (best path to `from`) + [from, to) smaller than the current best to `to`?
  bool lexicographically_smaller(std::size_t from, std::size_t to) {
    path_to(from, cand_);
    cand_.push_back(static_cast<std::uint32_t>(to));
    path_to(to, best_);
    const std::string_view text = text_;
    auto piece = [&](const std::vector<std::uint32_t>& cuts, std::size_t p) {
      const auto b = cells_[cuts[p - 1]].offset;
      return text.substr(b, cells_[cuts[p]].offset - b);
    };
    const std::size_t m = std::min(cand_.size(), best_.size());
    for (std::size_t p = 1; p < m; ++p) {
      auto a = piece(cand_, p);
      auto b = piece(best_, p);
      if (a != b) return a < b;
    }
    return cand_.size() < best_.size();
  }

  const SubwordModel& model_;
  std::string text_;
  std::vector<Cell> cells_;
  std::vector<std::uint32_t> cand_;
  std::vector<std::uint32_t> best_;
};

inline std::vector<std::string> viterbi_segment(const SubwordModel& model, std::string_view text) {
  return Segmenter(model).segment(text);
}

// ---------------------------------------------------------------------------
// Model files
//
//   serifu-model <tab> v1 <tab> speaker_id <tab> piece_count <tab> target_size <tab> log_likelihood
//   surface <tab> log_prob            (piece_count rows, sorted by surface)

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline constexpr std::string_view kModelMagic = "serifu-model";
inline constexpr std::string_view kModelVersion = "v1";

inline std::string save_model(const SubwordModel& model) {
  std::string out;
  out.append(kModelMagic).append("\t").append(kModelVersion).append("\t").append(model.speaker_id());
  out.append("\t").append(std::to_string(model.size()));
  out.append("\t").append(std::to_string(model.target_size()));
  out.append("\t").append(detail::format_double(model.trained_log_likelihood())).append("\n");
  for (const auto& p : model.pieces()) {
    out.append(p.surface).append("\t").append(detail::format_double(p.log_prob)).append("\n");
  }
  return out;
}

inline SubwordModel load_model(std::string_view bytes) {
  std::vector<std::string_view> rows;
  for (std::size_t start = 0; start < bytes.size();) {
    std::size_t nl = bytes.find('\n', start);
    if (nl == std::string_view::npos) throw ValidationError("malformed model: missing final newline");
    rows.push_back(bytes.substr(start, nl - start));
    start = nl + 1;
  }
  if (rows.empty()) throw ValidationError("malformed model: empty file");

  std::vector<std::string_view> header;
  for (std::size_t start = 0;;) {
    std::size_t tab = rows[0].find('\t', start);
    header.push_back(rows[0].substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (header.size() < 2 || header[0] != kModelMagic) throw ValidationError("malformed model: bad header");
  if (header[1] != kModelVersion) throw ValidationError("model version mismatch: " + std::string(header[1]));
  if (header.size() != 4 && header.size() != 6) throw ValidationError("malformed model: bad header");
  auto count = detail::parse_int<std::size_t>(header[3]);
  if (!count) throw ValidationError("malformed model: bad piece count");
  std::size_t target = 0;
  double ll = 0.0;
  if (header.size() == 6) {
    auto t = detail::parse_int<std::size_t>(header[4]);
    auto l = detail::parse_double(header[5]);
    if (!t || !l) throw ValidationError("malformed model: bad header");
    target = *t;
    ll = *l;
  } else {
    target = *count;
  }
  if (rows.size() - 1 != *count) {
    throw ValidationError("malformed model: expected " + std::to_string(*count) + " pieces, found " +
                          std::to_string(rows.size() - 1));
  }

  std::vector<SubwordPiece> pieces;
  pieces.reserve(*count);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto tab = rows[r].find('\t');
    if (tab == std::string_view::npos || rows[r].find('\t', tab + 1) != std::string_view::npos) {
      throw ValidationError("malformed model: bad piece record at row " + std::to_string(r + 1));
    }
    auto lp = detail::parse_double(rows[r].substr(tab + 1));
    if (!lp) throw ValidationError("malformed model: bad log_prob at row " + std::to_string(r + 1));
    pieces.push_back({std::string(rows[r].substr(0, tab)), *lp});
  }
  return SubwordModel(std::string(header[2]), std::move(pieces), target, ll);
}

inline void write_model_file(const SubwordModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out << save_model(model);
}

inline SubwordModel read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace serifu
