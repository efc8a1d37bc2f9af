#pragma once

// Independent brute-force references used only by the tests. Nothing here
// calls the lattice, trie or Viterbi code it is used to check.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "serifu/unicode.hpp"

namespace serifu::oracle {

using PieceTable = std::map<std::string, double>;  // surface -> log_prob

// Every segmentation of `text` into character runs, as lists of strings.
// Enumerates all 2^(n-1) cut masks.
inline std::vector<std::vector<std::string>> all_segmentations(const std::string& text) {
  const auto chars = unicode::split_chars(text);
  std::vector<std::vector<std::string>> out;
  if (chars.empty()) {
    out.emplace_back();
    return out;
  }
  const std::size_t n = chars.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
    std::vector<std::string> seg;
    std::string cur(chars[0]);
    for (std::size_t i = 1; i < n; ++i) {
      if (mask & (std::size_t{1} << (i - 1))) {
        seg.push_back(cur);
        cur.clear();
      }
      cur += chars[i];
    }
    seg.push_back(cur);
    out.push_back(std::move(seg));
  }
  return out;
}

// Score of a segmentation under a piece table; -inf if any piece is missing.
inline double segmentation_score(const PieceTable& pieces, const std::vector<std::string>& seg) {
  double s = 0.0;
  for (const auto& p : seg) {
    auto it = pieces.find(p);
    if (it == pieces.end()) return -std::numeric_limits<double>::infinity();
    s += it->second;
  }
  return s;
}

inline double best_score(const PieceTable& pieces, const std::string& text) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& seg : all_segmentations(text)) best = std::max(best, segmentation_score(pieces, seg));
  return best;
}

// log of the summed probability of all segmentations.
inline double marginal_log_likelihood(const PieceTable& pieces, const std::string& text) {
  double total = 0.0;
  for (const auto& seg : all_segmentations(text)) {
    double s = segmentation_score(pieces, seg);
    if (std::isfinite(s)) total += std::exp(s);
  }
  return std::log(total);
}

// One EM step by explicit posterior enumeration; returns new probabilities.
inline std::map<std::string, double> em_step_probs(const PieceTable& pieces, const std::vector<std::string>& lines) {
  std::map<std::string, double> counts;
  for (const auto& [surface, lp] : pieces) counts[surface] = 0.0;
  for (const auto& line : lines) {
    std::vector<std::pair<std::vector<std::string>, double>> weighted;
    double z = 0.0;
    for (auto& seg : all_segmentations(line)) {
      double s = segmentation_score(pieces, seg);
      if (!std::isfinite(s)) continue;
      z += std::exp(s);
      weighted.emplace_back(std::move(seg), std::exp(s));
    }
    for (const auto& [seg, w] : weighted) {
      for (const auto& p : seg) counts[p] += w / z;
    }
  }
  double total = 0.0;
  for (const auto& [s, c] : counts) total += c;
  std::map<std::string, double> probs;
  for (const auto& [s, c] : counts) probs[s] = c / total;
  return probs;
}

// Occurrence count of `needle` in `hay` at every character offset (overlaps count).
inline std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

// Calls fn(surface, score) for every piece sequence over `pieces` whose total
// length is <= max_len characters, with the score summed left to right. Each
// (string, segmentation) pair is visited exactly once. ASCII pieces only.
inline void enumerate_piece_sequences(const PieceTable& pieces, std::size_t max_len,
                                      const std::function<void(const std::string&, double)>& fn) {
  std::vector<std::pair<std::string, double>> list(pieces.begin(), pieces.end());
  std::string cur;
  std::function<void(double)> rec = [&](double score) {
    fn(cur, score);
    for (const auto& [s, lp] : list) {
      if (cur.size() + s.size() > max_len) continue;
      cur += s;
      rec(score + lp);
      cur.resize(cur.size() - s.size());
    }
  };
  rec(0.0);
}

}  // namespace serifu::oracle
