#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "serifu/config.hpp"
#include "serifu/corpus.hpp"
#include "serifu/error.hpp"
#include "serifu/rng.hpp"

namespace serifu {

// Filler snippets mixing hiragana, katakana and kanji. None of them contains a
// planted suffix used by the bundled samples.
inline std::vector<std::string> default_fillers() {
  return {"今日は", "学校", "ご飯", "それで", "ねえ",   "天気", "友達と", "行く", "見た",   "ここに",
          "あの",   "本当に", "カレー", "テレビ", "電車", "雨が", "昨日",   "すごい", "先生", "公園で"};
}

struct SynthGroup {
  Group5 label = Group5::men;
  std::size_t speaker_count = 1;
  std::vector<std::string> suffixes;
  double usage_prob = 0.0;
  // Optional per-speaker suffix, by speaker index within the group.
  std::vector<std::string> speaker_suffixes;
};

struct SynthSpec {
  std::vector<SynthGroup> groups;
  std::size_t lines_min = 50;
  std::size_t lines_max = 50;
  std::size_t fillers_min = 2;
  std::size_t fillers_max = 4;
  std::vector<std::string> base_vocabulary = default_fillers();
  std::uint64_t seed = 42;

  void validate() const {
    if (groups.empty()) throw ValidationError("synth spec has no groups");
    if (base_vocabulary.empty()) throw ValidationError("empty base_vocabulary");
    if (lines_min < 1 || lines_min > lines_max) throw ValidationError("bad lines_per_speaker range");
    if (fillers_min < 1 || fillers_min > fillers_max) throw ValidationError("bad fillers range");
    for (const auto& g : groups) {
      if (g.speaker_count < 1) throw ValidationError("group " + std::string(to_string(g.label)) + " has no speakers");
      if (!(g.usage_prob >= 0.0 && g.usage_prob <= 1.0)) throw ValidationError("usage_prob outside [0, 1]");
    }
  }
};

inline std::string synth_speaker_id(Group5 g, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%02zu", index + 1);
  return std::string(to_string(g)) + buf;
}

// A line is a run of fillers; with probability usage_prob it is followed by
// the speaker's own suffix (if any) and one of the group's suffixes.
inline Corpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Speaker> speakers;
  std::vector<Line> lines;
  for (const auto& group : spec.groups) {
    for (std::size_t s = 0; s < group.speaker_count; ++s) {
      Speaker sp;
      sp.id = synth_speaker_id(group.label, s);
      sp.display_name = sp.id;
      sp.work_id = "synth";
      switch (group.label) {
        case Group5::boys: sp.gender = Gender::male; sp.age = Age::child; break;
        case Group5::girls: sp.gender = Gender::female; sp.age = Age::child; break;
        case Group5::men: sp.gender = Gender::male; sp.age = Age::adult; break;
        case Group5::women: sp.gender = Gender::female; sp.age = Age::adult; break;
        case Group5::seniors: sp.gender = s % 2 == 0 ? Gender::male : Gender::female; sp.age = Age::senior; break;
      }
      const std::string own = s < group.speaker_suffixes.size() ? group.speaker_suffixes[s] : std::string();

      const auto n_lines = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(spec.lines_min), static_cast<std::int64_t>(spec.lines_max)));
      for (std::size_t l = 0; l < n_lines; ++l) {
        std::string text;
        const auto n_fill = rng.between(static_cast<std::int64_t>(spec.fillers_min),
                                        static_cast<std::int64_t>(spec.fillers_max));
        for (std::int64_t f = 0; f < n_fill; ++f) text += spec.base_vocabulary[rng.below(spec.base_vocabulary.size())];
        if (rng.bernoulli(group.usage_prob)) {
          text += own;
          if (!group.suffixes.empty()) text += group.suffixes[rng.below(group.suffixes.size())];
        }
        std::string norm = normalize_line(text);
        if (norm.empty()) throw ValidationError("filler produced an empty line");
        lines.push_back(Line{sp.id, sp.work_id, std::move(norm)});
      }
      speakers.push_back(std::move(sp));
    }
  }
  return Corpus(std::move(speakers), std::move(lines));
}

// Reads a synth spec from a key-value config:
//   version = 1
//   seed = 7
//   lines_min = 300, lines_max = 300, fillers_min = 2, fillers_max = 4
//   base_vocabulary = 今日は,学校,...         (optional)
//   groups = boys,girls
//   group.boys.speakers = 4
//   group.boys.suffixes = だってばよ
//   group.boys.usage_prob = 0.8
//   group.boys.speaker_suffixes = a,b        (optional)
inline SynthSpec synth_spec_from_config(const KeyValueConfig& cfg) {
  cfg.check_keys({"version", "seed", "lines_min", "lines_max", "fillers_min", "fillers_max", "base_vocabulary",
                  "groups", "group."});
  SynthSpec spec;
  cfg.read("seed", spec.seed);
  cfg.read("lines_min", spec.lines_min);
  cfg.read("lines_max", spec.lines_max);
  cfg.read("fillers_min", spec.fillers_min);
  cfg.read("fillers_max", spec.fillers_max);
  if (cfg.has("base_vocabulary")) spec.base_vocabulary = cfg.get_list("base_vocabulary");
  for (const auto& name : cfg.get_list("groups")) {
    auto label = parse_group5(name);
    if (!label) throw ValidationError("unknown group '" + name + "'");
    SynthGroup g;
    g.label = *label;
    const std::string prefix = "group." + name + ".";
    g.speaker_count = cfg.get_as<std::size_t>(prefix + "speakers");
    if (cfg.has(prefix + "suffixes")) g.suffixes = cfg.get_list(prefix + "suffixes");
    cfg.read(prefix + "usage_prob", g.usage_prob);
    if (cfg.has(prefix + "speaker_suffixes")) g.speaker_suffixes = cfg.get_list(prefix + "speaker_suffixes");
    spec.groups.push_back(std::move(g));
  }
  for (const auto& [key, value] : cfg.values()) {
    if (key.rfind("group.", 0) != 0) continue;
    bool known = false;
    for (const auto& g : spec.groups) {
      const std::string prefix = "group." + std::string(to_string(g.label)) + ".";
      for (auto field : {"speakers", "suffixes", "usage_prob", "speaker_suffixes"}) {
        if (key == prefix + field) known = true;
      }
    }
    if (!known) throw ValidationError("unknown config key '" + key + "'");
  }
  return spec;
}

}  // namespace serifu
