#include <gtest/gtest.h>

#include <map>
#include <random>
#include <string>

#include "serifu/corpus.hpp"
#include "serifu/rng.hpp"

using namespace serifu;

namespace {

const char* kTwoSpeakers =
    "S\tkai\tKai\tw1\tmale\tchild\n"
    "S\tmio\tMio\tw1\tfemale\tadult\n"
    "L\tkai\t僕は行くよ\n"
    "L\tmio\t私も行くわ\n"
    "L\tkai\tだぜ\n"
    "L\tmio\tそうかしら\n"
    "L\tkai\tまた明日\n"
    "L\tmio\tええ\n";

Segmentation chars_of(const Corpus& c) {
  Segmentation seg;
  for (const auto& s : c.speakers()) seg[s.id];
  for (const auto& line : c.lines()) {
    TokenSeq toks;
    for (auto ch : unicode::split_chars(line.text)) toks.emplace_back(ch);
    seg[line.speaker_id].push_back(toks);
  }
  return seg;
}

}  // namespace

TEST(NormalizeLine, StripsAndComposes) {
  EXPECT_EQ(normalize_line("　こんにちは "), "こんにちは");
  EXPECT_EQ(normalize_line("abc"), "abc");
  EXPECT_EQ(normalize_line("ＡＢ"), "AB");
  EXPECT_EQ(normalize_line("a b\tc"), "abc");
  EXPECT_EQ(normalize_line("ｶﾞｯｺｳ"), "ガッコウ");
  EXPECT_EQ(normalize_line("  \t　"), "");
}

TEST(NormalizeLine, Idempotent) {
  // Random mixtures of ASCII, full-width, half-width kana, combining marks and spaces.
  const std::vector<std::string> atoms = {"a", " ", "　", "Ａ", "ｶ", "ﾞ", "e", "́", "¨", "僕", "\t",
                                          "①", "ﬁ", "㍻", "゙", "は", " "};
  Rng rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const auto len = rng.between(0, 10);
    for (int i = 0; i < len; ++i) s += atoms[rng.below(atoms.size())];
    const auto once = normalize_line(s);
    EXPECT_EQ(normalize_line(once), once) << "input: " << s;
    EXPECT_FALSE(unicode::contains_whitespace(once));
  }
}

TEST(LoadCorpus, CountsAndFields) {
  const Corpus c = parse_corpus(kTwoSpeakers);
  EXPECT_EQ(c.speakers().size(), 2u);
  EXPECT_EQ(c.lines().size(), 6u);
  EXPECT_EQ(c.speaker("kai").group5(), Group5::boys);
  EXPECT_EQ(c.speaker("mio").group5(), Group5::women);
  EXPECT_EQ(c.lines()[0].work_id, "w1");
}

TEST(LoadCorpus, UnknownSpeaker) {
  try {
    parse_corpus("S\ta\tA\tw\tmale\tadult\nL\tb\thello\n");
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown speaker"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, SpeakerMustPrecedeLines) {
  EXPECT_THROW(parse_corpus("L\ta\thello\nS\ta\tA\tw\tmale\tadult\n"), ParseError);
}

TEST(LoadCorpus, EmptyLinesDroppedWithCount) {
  const Corpus c = parse_corpus("S\ta\tA\tw\tmale\tadult\nL\ta\t　 \nL\ta\thi\nL\ta\t\n");
  EXPECT_EQ(c.lines().size(), 1u);
  EXPECT_EQ(c.dropped_lines(), 2u);
}

TEST(LoadCorpus, Errors) {
  EXPECT_THROW(parse_corpus(""), ValidationError);
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tmale\tadult\n"), ValidationError);            // empty corpus
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tmale\n"), ParseError);                         // short record
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tboy\tadult\nL\ta\tx\n"), ParseError);          // bad gender
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tmale\told\nL\ta\tx\n"), ParseError);           // bad age
  EXPECT_THROW(parse_corpus("X\ta\n"), ParseError);                                     // bad kind
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tmale\tadult\nS\ta\tA\tw\tmale\tadult\nL\ta\tx\n"), ParseError);
  EXPECT_THROW(parse_corpus("S\ta\tA\tw\tmale\tadult\nS\tb\tB\tw\tmale\tadult\nL\ta\tx\n"),
               ValidationError);  // b has no lines
}

TEST(LoadCorpus, RoundTrip) {
  const Corpus c = parse_corpus(kTwoSpeakers);
  EXPECT_EQ(parse_corpus(format_corpus(c)), c);

  // Unnormalized input survives a round trip up to normalization.
  const Corpus messy = parse_corpus("S\ta\tA\tw\tfemale\tsenior\nL\ta\t ＡＢ　c \n");
  EXPECT_EQ(messy.lines()[0].text, "ABc");
  EXPECT_EQ(parse_corpus(format_corpus(messy)), messy);
}

TEST(Group5, Derivation) {
  EXPECT_EQ(group5_of(Gender::male, Age::child), Group5::boys);
  EXPECT_EQ(group5_of(Gender::female, Age::child), Group5::girls);
  EXPECT_EQ(group5_of(Gender::male, Age::adult), Group5::men);
  EXPECT_EQ(group5_of(Gender::female, Age::adult), Group5::women);
  EXPECT_EQ(group5_of(Gender::male, Age::senior), Group5::seniors);
  EXPECT_EQ(group5_of(Gender::female, Age::senior), Group5::seniors);
}

TEST(GroupDocuments, GenderTwoDocs) {
  std::string text;
  for (int i = 0; i < 10; ++i) {
    text += "S\ts" + std::to_string(i) + "\tN\tw\t" + (i < 5 ? "male" : "female") + "\tadult\n";
  }
  for (int i = 0; i < 10; ++i) text += "L\ts" + std::to_string(i) + "\tline" + std::to_string(i) + "\n";
  const Corpus c = parse_corpus(text);
  const auto docs = group_documents(c, Scheme::gender, chars_of(c));
  ASSERT_EQ(docs.docs.size(), 2u);
  EXPECT_EQ(docs.docs[0].id, "male");
  EXPECT_EQ(docs.docs[0].lines.size(), 5u);
  EXPECT_EQ(docs.docs[1].lines.size(), 5u);
  EXPECT_TRUE(docs.warnings.empty());
}

TEST(GroupDocuments, CharacterOneDocPerSpeaker) {
  const Corpus c = parse_corpus(kTwoSpeakers);
  const auto docs = group_documents(c, Scheme::character, chars_of(c));
  ASSERT_EQ(docs.docs.size(), 2u);
  EXPECT_EQ(docs.docs[0].id, "kai");
  EXPECT_EQ(docs.docs[1].id, "mio");
}

TEST(GroupDocuments, AgeAllAdultsLeavesTwoEmptyDocs) {
  const Corpus c = parse_corpus(
      "S\ta\tA\tw\tmale\tadult\nS\tb\tB\tw\tfemale\tadult\nL\ta\tx\nL\tb\ty\nL\ta\tz\n");
  const auto docs = group_documents(c, Scheme::age, chars_of(c));
  ASSERT_EQ(docs.docs.size(), 3u);
  EXPECT_EQ(docs.docs[0].id, "child");
  EXPECT_TRUE(docs.docs[0].lines.empty());
  EXPECT_EQ(docs.docs[1].id, "adult");
  EXPECT_EQ(docs.docs[1].lines.size(), 3u);
  EXPECT_TRUE(docs.docs[2].lines.empty());
  EXPECT_EQ(docs.warnings.size(), 2u);
}

TEST(GroupDocuments, MissingSegmentation) {
  const Corpus c = parse_corpus(kTwoSpeakers);
  auto seg = chars_of(c);
  seg.erase("mio");
  EXPECT_THROW(group_documents(c, Scheme::gender, seg), ValidationError);
  seg = chars_of(c);
  seg["mio"].pop_back();
  EXPECT_THROW(group_documents(c, Scheme::gender, seg), ValidationError);
}

TEST(GroupDocuments, PartitionProperty) {
  Rng rng(11);
  const char* genders[] = {"male", "female"};
  const char* ages[] = {"child", "adult", "senior"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const auto n = rng.between(1, 12);
    for (int i = 0; i < n; ++i) {
      text += "S\tp" + std::to_string(i) + "\tN\tw\t" + genders[rng.below(2)] + "\t" + ages[rng.below(3)] + "\n";
    }
    std::size_t lines = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = rng.between(1, 5);
      for (int j = 0; j < k; ++j, ++lines) text += "L\tp" + std::to_string(i) + "\tあい" + std::to_string(j) + "\n";
    }
    const Corpus c = parse_corpus(text);
    for (Scheme s : {Scheme::gender, Scheme::age, Scheme::character, Scheme::group}) {
      const auto docs = group_documents(c, s, chars_of(c));
      EXPECT_EQ(docs.line_count(), lines);
      const std::size_t expected = s == Scheme::gender ? 2 : s == Scheme::age ? 3 : s == Scheme::group ? 5 : n;
      EXPECT_EQ(docs.docs.size(), expected);
    }
  }
}
