#include <gtest/gtest.h>

#include <string>

#include "serifu/config.hpp"
#include "serifu/synth.hpp"

using namespace serifu;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

SynthSpec one_group(double usage, std::size_t lines, std::uint64_t seed = 42) {
  SynthSpec spec;
  spec.groups = {SynthGroup{Group5::boys, 2, {"だってばよ"}, usage, {}}};
  spec.lines_min = spec.lines_max = lines;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST(Synth, AlwaysSuffix) {
  const Corpus c = generate_corpus(one_group(1.0, 50));
  EXPECT_EQ(c.lines().size(), 100u);
  for (const auto& line : c.lines()) EXPECT_TRUE(ends_with(line.text, "だってばよ")) << line.text;
}

TEST(Synth, NeverSuffix) {
  const Corpus c = generate_corpus(one_group(0.0, 50));
  for (const auto& line : c.lines()) EXPECT_EQ(line.text.find("だってばよ"), std::string::npos);
}

TEST(Synth, SuffixFrequency) {
  for (double p : {0.2, 0.5, 0.8}) {
    const Corpus c = generate_corpus(one_group(p, 600, 7));
    std::size_t hits = 0;
    for (const auto& line : c.lines()) hits += ends_with(line.text, "だってばよ");
    EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(c.lines().size()), p, 0.05);
  }
}

TEST(Synth, Deterministic) {
  const auto spec = one_group(0.5, 30, 3);
  EXPECT_EQ(format_corpus(generate_corpus(spec)), format_corpus(generate_corpus(spec)));
  EXPECT_NE(format_corpus(generate_corpus(spec)), format_corpus(generate_corpus(one_group(0.5, 30, 4))));
}

TEST(Synth, LabelsAndCounts) {
  SynthSpec spec;
  for (Group5 g : kAllGroups) spec.groups.push_back(SynthGroup{g, 3, {"ぞな"}, 0.5, {}});
  spec.lines_min = 5;
  spec.lines_max = 9;
  const Corpus c = generate_corpus(spec);
  EXPECT_EQ(c.speakers().size(), 15u);
  for (const auto& s : c.speakers()) {
    EXPECT_EQ(s.id.substr(0, s.id.find('_')), to_string(s.group5()));
    const auto n = c.lines_of(s.id).size();
    EXPECT_GE(n, 5u);
    EXPECT_LE(n, 9u);
  }
  EXPECT_EQ(c.speaker("seniors_01").gender, Gender::male);
  EXPECT_EQ(c.speaker("seniors_02").gender, Gender::female);
  EXPECT_EQ(c.speaker("girls_03").age, Age::child);
}

TEST(Synth, SpeakerSuffix) {
  auto spec = one_group(1.0, 20);
  spec.groups[0].speaker_suffixes = {"ッス"};
  const Corpus c = generate_corpus(spec);
  for (const auto& line : c.lines()) {
    EXPECT_EQ(ends_with(line.text, "ッスだってばよ"), line.speaker_id == "boys_01");
  }
}

TEST(Synth, Errors) {
  auto spec = one_group(0.5, 10);
  spec.base_vocabulary.clear();
  EXPECT_THROW(generate_corpus(spec), ValidationError);
  spec = one_group(1.5, 10);
  EXPECT_THROW(generate_corpus(spec), ValidationError);
  spec = one_group(0.5, 10);
  spec.lines_min = 20;
  EXPECT_THROW(generate_corpus(spec), ValidationError);
  EXPECT_THROW(generate_corpus(SynthSpec{}), ValidationError);
}

TEST(SynthConfig, Parse) {
  const auto cfg = KeyValueConfig::parse(
      "version = 1\n"
      "# comment\n"
      "seed = 9\n"
      "lines_min = 4\n"
      "lines_max = 6\n"
      "groups = boys, seniors\n"
      "group.boys.speakers = 2\n"
      "group.boys.suffixes = だってばよ\n"
      "group.boys.usage_prob = 0.8\n"
      "group.seniors.speakers = 1\n"
      "group.seniors.suffixes = じゃ,のう\n");
  const auto spec = synth_spec_from_config(cfg);
  EXPECT_EQ(spec.seed, 9u);
  ASSERT_EQ(spec.groups.size(), 2u);
  EXPECT_EQ(spec.groups[0].label, Group5::boys);
  EXPECT_EQ(spec.groups[0].speaker_count, 2u);
  EXPECT_DOUBLE_EQ(spec.groups[0].usage_prob, 0.8);
  EXPECT_EQ(spec.groups[1].suffixes, (std::vector<std::string>{"じゃ", "のう"}));
  EXPECT_EQ(spec.groups[1].usage_prob, 0.0);
  EXPECT_EQ(generate_corpus(spec).speakers().size(), 3u);
}

TEST(SynthConfig, Errors) {
  EXPECT_THROW(KeyValueConfig::parse("seed = 1\n"), ValidationError);
  EXPECT_THROW(KeyValueConfig::parse("version = 2\n"), ValidationError);
  EXPECT_THROW(KeyValueConfig::parse("version = 1\nseed = 1\nseed = 2\n"), ParseError);
  EXPECT_THROW(KeyValueConfig::parse("version = 1\nnonsense\n"), ParseError);
  EXPECT_THROW(synth_spec_from_config(KeyValueConfig::parse("version = 1\ngroups = kids\n")), ValidationError);
  EXPECT_THROW(synth_spec_from_config(KeyValueConfig::parse("version = 1\ncolour = red\ngroups = boys\n")),
               ValidationError);
  EXPECT_THROW(synth_spec_from_config(
                   KeyValueConfig::parse("version = 1\ngroups = boys\ngroup.boys.speakers = 1\ngroup.men.speakers = 1\n")),
               ValidationError);
  EXPECT_THROW(
      synth_spec_from_config(KeyValueConfig::parse("version = 1\ngroups = boys\ngroup.boys.speakers = two\n")),
      ValidationError);
}
