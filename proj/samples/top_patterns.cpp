// Generates a small planted corpus, trains per-speaker models and prints the
// top patterns of each five-way group.

#include <cstdio>

#include "serifu/serifu.hpp"

int main(int argc, char** argv) {
  using namespace serifu;
  SynthSpec spec;
  spec.groups = {{Group5::boys, 2, {"だってばよ"}, 0.8, {}},   {Group5::girls, 2, {"なのです"}, 0.8, {}},
                 {Group5::men, 2, {"でござる"}, 0.8, {}},      {Group5::women, 2, {"かしら"}, 0.8, {}},
                 {Group5::seniors, 2, {"なっしー"}, 0.8, {}}};
  spec.lines_min = spec.lines_max = 120;
  if (argc > 1) spec.seed = std::stoull(argv[1]);

  const Corpus corpus = generate_corpus(spec);
  PipelineConfig cfg;
  cfg.basic_vs = 800;
  const auto models = train_speaker_models(corpus, cfg);

  ModelMap by_id;
  for (const auto& m : models) by_id.emplace(m.speaker_id(), m);
  const auto result = extract_patterns(corpus, segment_corpus(corpus, by_id), build_word_list(models), Scheme::group, 5);
  for (const auto& doc : result.report.docs) {
    std::printf("%s:", doc.doc_id.c_str());
    for (const auto& p : doc.patterns) std::printf(" %s(%.4f)", p.surface.c_str(), p.tfidf);
    std::printf("\n");
  }
}
