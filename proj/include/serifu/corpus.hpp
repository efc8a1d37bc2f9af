#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "serifu/error.hpp"
#include "serifu/unicode.hpp"

namespace serifu {

enum class Gender { male, female };
enum class Age { child, adult, senior };
enum class Group5 { boys, girls, men, women, seniors };

// Document grouping. `group` (one document per Group5 label) extends the
// gender/age/character schemes for five-way pattern reports.
enum class Scheme { gender, age, character, group };

inline constexpr std::array<Group5, 5> kAllGroups = {Group5::boys, Group5::girls, Group5::men,
                                                     Group5::women, Group5::seniors};

inline std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

inline std::string_view to_string(Age a) {
  switch (a) {
    case Age::child: return "child";
    case Age::adult: return "adult";
    case Age::senior: return "senior";
  }
  return "";
}

inline std::string_view to_string(Group5 g) {
  switch (g) {
    case Group5::boys: return "boys";
    case Group5::girls: return "girls";
    case Group5::men: return "men";
    case Group5::women: return "women";
    case Group5::seniors: return "seniors";
  }
  return "";
}

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::gender: return "gender";
    case Scheme::age: return "age";
    case Scheme::character: return "character";
    case Scheme::group: return "group";
  }
  return "";
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  return std::nullopt;
}

inline std::optional<Age> parse_age(std::string_view s) {
  if (s == "child") return Age::child;
  if (s == "adult") return Age::adult;
  if (s == "senior") return Age::senior;
  return std::nullopt;
}

inline std::optional<Group5> parse_group5(std::string_view s) {
  for (Group5 g : kAllGroups) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  for (Scheme x : {Scheme::gender, Scheme::age, Scheme::character, Scheme::group}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

// Seniors collapse both genders into one class.
constexpr Group5 group5_of(Gender g, Age a) {
  switch (a) {
    case Age::child: return g == Gender::male ? Group5::boys : Group5::girls;
    case Age::adult: return g == Gender::male ? Group5::men : Group5::women;
    case Age::senior: return Group5::seniors;
  }
  return Group5::seniors;
}

struct Speaker {
  std::string id;
  std::string display_name;
  std::string work_id;
  Gender gender = Gender::male;
  Age age = Age::adult;

  Group5 group5() const { return group5_of(gender, age); }

  friend bool operator==(const Speaker&, const Speaker&) = default;
};

struct Line {
  std::string speaker_id;
  std::string work_id;
  std::string text;

  friend bool operator==(const Line&, const Line&) = default;
};

// Validated, immutable corpus. Construction enforces unique speaker ids,
// known speaker references, non-empty line text and at least one line per
// speaker.
class Corpus {
 public:
  Corpus(std::vector<Speaker> speakers, std::vector<Line> lines, std::size_t dropped_lines = 0)
      : speakers_(std::move(speakers)), lines_(std::move(lines)), dropped_lines_(dropped_lines) {
    if (lines_.empty()) throw ValidationError("empty corpus");
    for (std::size_t i = 0; i < speakers_.size(); ++i) {
      const auto& s = speakers_[i];
      if (s.id.empty()) throw ValidationError("empty speaker id");
      if (!index_.emplace(s.id, i).second) throw ValidationError("duplicate speaker: " + s.id);
    }
    std::vector<std::size_t> counts(speakers_.size(), 0);
    for (const auto& line : lines_) {
      auto it = index_.find(line.speaker_id);
      if (it == index_.end()) throw ValidationError("unknown speaker: " + line.speaker_id);
      if (line.text.empty()) throw ValidationError("empty line for speaker " + line.speaker_id);
      ++counts[it->second];
    }
    for (std::size_t i = 0; i < speakers_.size(); ++i) {
      if (counts[i] == 0) throw ValidationError("speaker has no lines: " + speakers_[i].id);
    }
  }

  const std::vector<Speaker>& speakers() const { return speakers_; }
  const std::vector<Line>& lines() const { return lines_; }

  // Lines that normalized to empty and were skipped at load time.
  std::size_t dropped_lines() const { return dropped_lines_; }

  const Speaker& speaker(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw ValidationError("unknown speaker: " + std::string(id));
    return speakers_[it->second];
  }

  bool has_speaker(std::string_view id) const { return index_.contains(std::string(id)); }

  std::vector<std::string> lines_of(std::string_view speaker_id) const {
    std::vector<std::string> out;
    for (const auto& line : lines_) {
      if (line.speaker_id == speaker_id) out.push_back(line.text);
    }
    return out;
  }

  // Total character count over all lines.
  std::size_t char_count() const {
    std::size_t n = 0;
    for (const auto& line : lines_) n += unicode::char_count(line.text);
    return n;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.speakers_ == b.speakers_ && a.lines_ == b.lines_;
  }

 private:
  std::vector<Speaker> speakers_;
  std::vector<Line> lines_;
  std::size_t dropped_lines_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::string normalize_line(std::string_view text) { return unicode::normalize_line(text); }

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = s.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(s.substr(start));
      return fields;
    }
    fields.push_back(s.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool skippable(std::string_view s) { return s.empty() || s.front() == '#'; }

inline Speaker parse_speaker_record(const std::vector<std::string_view>& f, std::size_t lineno) {
  if (f.size() != 6) throw ParseError("speaker record needs 6 fields, got " + std::to_string(f.size()), lineno);
  auto gender = parse_gender(f[4]);
  if (!gender) throw ParseError("bad gender '" + std::string(f[4]) + "'", lineno);
  auto age = parse_age(f[5]);
  if (!age) throw ParseError("bad age '" + std::string(f[5]) + "'", lineno);
  if (f[1].empty()) throw ParseError("empty speaker id", lineno);
  return Speaker{std::string(f[1]), std::string(f[2]), std::string(f[3]), *gender, *age};
}

}  // namespace detail

// Reads the line-delimited corpus format:
//   S <tab> id <tab> name <tab> work <tab> male|female <tab> child|adult|senior
//   L <tab> id <tab> utterance
// Blank lines and lines starting with '#' are ignored.
inline Corpus parse_corpus(std::istream& in) {
  std::vector<Speaker> speakers;
  std::vector<Line> lines;
  std::unordered_map<std::string, std::size_t> declared;
  std::size_t dropped = 0;
  std::string raw;
  for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
    std::string_view row = detail::chomp(raw);
    if (detail::skippable(row)) continue;
    auto fields = detail::split_tabs(row);
    if (fields[0] == "S") {
      Speaker s = detail::parse_speaker_record(fields, lineno);
      if (declared.contains(s.id)) throw ParseError("duplicate speaker: " + s.id, lineno);
      declared.emplace(s.id, speakers.size());
      speakers.push_back(std::move(s));
    } else if (fields[0] == "L") {
      if (fields.size() < 3) throw ParseError("line record needs 3 fields", lineno);
      auto it = declared.find(std::string(fields[1]));
      if (it == declared.end()) throw ParseError("unknown speaker: " + std::string(fields[1]), lineno);
      // Tabs inside the utterance are whitespace and vanish under normalization.
      std::string_view text = row.substr(fields[0].size() + fields[1].size() + 2);
      std::string norm = normalize_line(text);
      if (norm.empty()) {
        ++dropped;
        continue;
      }
      lines.push_back(Line{std::string(fields[1]), speakers[it->second].work_id, std::move(norm)});
    } else {
      throw ParseError("unknown record kind '" + std::string(fields[0]) + "'", lineno);
    }
  }
  return Corpus(std::move(speakers), std::move(lines), dropped);
}

inline Corpus parse_corpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in);
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus: " + path.string());
  return parse_corpus(in);
}

inline void write_speaker_record(std::ostream& out, const Speaker& s) {
  out << "S\t" << s.id << '\t' << s.display_name << '\t' << s.work_id << '\t' << to_string(s.gender) << '\t'
      << to_string(s.age) << '\n';
}

inline void save_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.speakers()) write_speaker_record(out, s);
  for (const auto& line : corpus.lines()) out << "L\t" << line.speaker_id << '\t' << line.text << '\n';
}

inline std::string format_corpus(const Corpus& corpus) {
  std::ostringstream out;
  save_corpus(corpus, out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Document grouping

using TokenSeq = std::vector<std::string>;

// speaker id -> one token sequence per line, in corpus line order.
using Segmentation = std::map<std::string, std::vector<TokenSeq>>;

struct Document {
  std::string id;
  std::vector<TokenSeq> lines;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& seq : lines) n += seq.size();
    return n;
  }
};

struct DocumentSet {
  Scheme scheme = Scheme::character;
  std::vector<Document> docs;
  std::vector<std::string> warnings;

  std::size_t line_count() const {
    std::size_t n = 0;
    for (const auto& d : docs) n += d.lines.size();
    return n;
  }
};

inline std::vector<std::string> document_ids(const Corpus& corpus, Scheme scheme) {
  std::vector<std::string> ids;
  switch (scheme) {
    case Scheme::gender:
      ids = {"male", "female"};
      break;
    case Scheme::age:
      ids = {"child", "adult", "senior"};
      break;
    case Scheme::group:
      for (Group5 g : kAllGroups) ids.emplace_back(to_string(g));
      break;
    case Scheme::character:
      for (const auto& s : corpus.speakers()) ids.push_back(s.id);
      break;
  }
  return ids;
}

inline std::string document_of(const Speaker& s, Scheme scheme) {
  switch (scheme) {
    case Scheme::gender: return std::string(to_string(s.gender));
    case Scheme::age: return std::string(to_string(s.age));
    case Scheme::group: return std::string(to_string(s.group5()));
    case Scheme::character: return s.id;
  }
  return {};
}

inline DocumentSet group_documents(const Corpus& corpus, Scheme scheme, const Segmentation& segmented) {
  DocumentSet set;
  set.scheme = scheme;
  std::unordered_map<std::string, std::size_t> slot;
  for (auto& id : document_ids(corpus, scheme)) {
    slot.emplace(id, set.docs.size());
    set.docs.push_back(Document{std::move(id), {}});
  }

  std::unordered_map<std::string, std::size_t> expected;
  for (const auto& line : corpus.lines()) ++expected[line.speaker_id];

  for (const auto& speaker : corpus.speakers()) {
    auto it = segmented.find(speaker.id);
    if (it == segmented.end()) throw ValidationError("missing segmentation for speaker " + speaker.id);
    if (it->second.size() != expected[speaker.id]) {
      throw ValidationError("segmentation of speaker " + speaker.id + " has " + std::to_string(it->second.size()) +
                            " lines, corpus has " + std::to_string(expected[speaker.id]));
    }
    auto& doc = set.docs[slot.at(document_of(speaker, scheme))];
    doc.lines.insert(doc.lines.end(), it->second.begin(), it->second.end());
  }
  for (const auto& doc : set.docs) {
    if (doc.lines.empty()) set.warnings.push_back("document '" + doc.id + "' is empty");
  }
  return set;
}

}  // namespace serifu
