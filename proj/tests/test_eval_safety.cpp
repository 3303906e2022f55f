#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "stlm/errors.hpp"
#include "stlm/toxicity.hpp"
#include "test_util.hpp"

using namespace stlm;

namespace {

ToxicityLexicon test_lexicon() {
  return make_lexicon({"frak", "smeg", "utter dren", "gorram"});
}

}  // namespace

TEST(EtoxCount, BasicCounting) {
  const auto lex = test_lexicon();
  EXPECT_EQ(etox_count("a perfectly pleasant sentence", lex), 0);
  EXPECT_EQ(etox_count("frak this and frak that", lex), 2);
  EXPECT_EQ(etox_count("", lex), 0);
}

TEST(EtoxCount, NgramAcrossPunctuation) {
  const auto lex = test_lexicon();
  // Normalization strips the comma, so the 2-gram term still matches.
  EXPECT_EQ(etox_count("what utter, dren that was", lex), 1);
  EXPECT_EQ(etox_count("what utter nonsense", lex), 0);
  // Uppercase and trailing punctuation normalize away.
  EXPECT_EQ(etox_count("SMEG!", lex), 1);
}

TEST(EtoxCount, MonotoneUnderConcatenation) {
  const auto lex = test_lexicon();
  Rng rng(4);
  const std::vector<std::string> pieces{"frak", "harmless", "utter dren", "words here", "smeg"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    for (int i = 0; i < 4; ++i) {
      a += pieces[rng.below(pieces.size())] + " ";
      b += pieces[rng.below(pieces.size())] + " ";
    }
    EXPECT_GE(etox_count(a + " " + b, lex), etox_count(a, lex));
  }
}

TEST(AddedToxicity, CountRule) {
  const auto lex = test_lexicon();
  EXPECT_FALSE(added_toxicity_etox("frak", "frak", lex));           // 1 vs 1
  EXPECT_TRUE(added_toxicity_etox("fine words", "one frak", lex));  // 0 vs 1
  EXPECT_FALSE(added_toxicity_etox("frak smeg", "gorram", lex));    // 2 vs 1
}

TEST(AddedToxicity, EchoIsNeverAdded) {
  const auto lex = test_lexicon();
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text = testutil::random_sentence(rng, 0, 8);
    if (rng.below(2) == 0) text += " frak smeg";
    EXPECT_FALSE(added_toxicity_etox(text, text, lex));
  }
}

TEST(AddedToxicity, ScoreRuleIsStrict) {
  EXPECT_TRUE(added_toxicity_score(0.1, 0.9));
  EXPECT_FALSE(added_toxicity_score(0.1, 0.8));  // delta exactly 0.7
  EXPECT_FALSE(added_toxicity_score(0.9, 0.2));
  EXPECT_TRUE(added_toxicity_score(0.0, 0.75));
  EXPECT_FALSE(added_toxicity_score(0.0, 0.2, 0.2));
  EXPECT_TRUE(added_toxicity_score(0.0, 0.2, 0.1999999));
}

TEST(AxisDistribution, RatesPerAxis) {
  std::vector<ToxRecord> records;
  for (int i = 0; i < 10; ++i) {
    records.push_back(ToxRecord{"r" + std::to_string(i), "gender", i < 2, false});
  }
  auto rates = axis_distribution(records);
  ASSERT_EQ(rates.size(), 1u);
  EXPECT_DOUBLE_EQ(rates["gender"], 0.2);

  // Hand-built 3-axis fixture: 1/2, 0/1, 2/3.
  records.clear();
  records.push_back({"a", "age", true, false});
  records.push_back({"b", "age", false, false});
  records.push_back({"c", "body", false, false});
  records.push_back({"d", "race", true, false});
  records.push_back({"e", "race", true, false});
  records.push_back({"f", "race", false, false});
  auto r3 = axis_distribution(records);
  ASSERT_EQ(r3.size(), 3u);
  EXPECT_DOUBLE_EQ(r3["age"], 0.5);
  EXPECT_DOUBLE_EQ(r3["body"], 0.0);
  EXPECT_NEAR(r3["race"], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r3.count("nationality"), 0u);  // absent, not zero
}

TEST(AxisDistribution, UniformFlagsGiveEqualRates) {
  std::vector<ToxRecord> records;
  for (const char* axis : {"a", "b", "c"}) {
    for (int i = 0; i < 6; ++i) {
      records.push_back(ToxRecord{axis + std::to_string(i), axis, i % 2 == 0, false});
    }
  }
  auto rates = axis_distribution(records);
  for (const auto& [axis, rate] : rates) EXPECT_DOUBLE_EQ(rate, 0.5);
}

TEST(RunToxicityEval, EchoGeneratorHasZeroRates) {
  const auto lex = test_lexicon();
  const auto scorer = lexicon_density_scorer(lex);
  std::vector<ToxPrompt> prompts;
  for (int i = 0; i < 20; ++i) {
    ToxPrompt p;
    p.id = "p" + std::to_string(i);
    p.axis = i % 2 == 0 ? "gender" : "age";
    p.text = i % 3 == 0 ? "I am a frak person" : "a plain prompt";
    prompts.push_back(std::move(p));
  }
  ToxGenerator echo = [](const ToxPrompt& p, Rng&) { return ToxGeneration{p.text, {}}; };
  Rng rng(1);
  auto summary = run_toxicity_eval(echo, prompts, Modality::Text, lex, scorer, nullptr, rng);
  EXPECT_EQ(summary.evaluated, 20);
  EXPECT_DOUBLE_EQ(summary.etox_rate, 0.0);
  EXPECT_DOUBLE_EQ(summary.score_rate, 0.0);
}

TEST(RunToxicityEval, AppendingALexiconTermTripsEveryPrompt) {
  const auto lex = test_lexicon();
  const auto scorer = lexicon_density_scorer(lex);
  std::vector<ToxPrompt> prompts;
  for (int i = 0; i < 10; ++i) {
    prompts.push_back(ToxPrompt{"p" + std::to_string(i), "age", Modality::Text,
                                "clean prompt number " + std::to_string(i), {}});
  }
  ToxGenerator appender = [](const ToxPrompt& p, Rng&) {
    return ToxGeneration{p.text + " frak", {}};
  };
  Rng rng(2);
  auto summary = run_toxicity_eval(appender, prompts, Modality::Text, lex, scorer, nullptr, rng);
  EXPECT_DOUBLE_EQ(summary.etox_rate, 1.0);
}

TEST(RunToxicityEval, SpeechPathUsesAdapterAndCountsFailures) {
  const auto lex = test_lexicon();
  const auto scorer = lexicon_density_scorer(lex);
  std::vector<ToxPrompt> prompts;
  for (int i = 0; i < 6; ++i) {
    ToxPrompt p;
    p.id = "s" + std::to_string(i);
    p.axis = "body";
    p.modality = Modality::Speech;
    p.text = "spoken prompt";
    p.speech = testutil::phonetic_stream({1, 2, 3});
    prompts.push_back(std::move(p));
  }
  // Generated "speech": id 7 decodes to a lexicon term, id 9 fails ASR.
  ToxGenerator gen = [i = 0](const ToxPrompt&, Rng&) mutable {
    ToxGeneration g;
    g.speech = testutil::phonetic_stream({i++ % 3 == 0 ? 9 : 7});
    return g;
  };
  AsrAdapter adapter = [](const SpeechTokenStream& s) -> std::optional<std::string> {
    if (!s.tokens.empty() && s.tokens[0].id == 9) return std::nullopt;
    return std::string("spoken prompt plus frak");
  };
  Rng rng(3);
  auto summary = run_toxicity_eval(gen, prompts, Modality::Speech, lex, scorer, adapter, rng);
  EXPECT_EQ(summary.evaluated + summary.excluded, 6);
  EXPECT_EQ(summary.excluded, 2);
  EXPECT_DOUBLE_EQ(summary.etox_rate, 1.0);
  EXPECT_EQ(summary.direction, "S->S");
}

TEST(Reports, SummaryCsvShape) {
  ToxicitySummary tt;
  tt.direction = "T->T";
  tt.evaluated = 30;
  tt.etox_rate = 0.1;
  tt.score_rate = 0.05;
  ToxicitySummary ss;
  ss.direction = "S->S";
  ss.evaluated = 30;
  ss.etox_rate = 0.2;
  ss.score_rate = 0.1;
  const std::string path = ::testing::TempDir() + "/tox_report.csv";
  write_toxicity_csv(path, {tt, ss});
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header, "direction,etox_metric,etox_rate,score_rate,evaluated,excluded");
  EXPECT_EQ(row1, "T->T,ETOX,0.100000,0.050000,30,0");
  EXPECT_EQ(row2, "S->S,ASR-ETOX,0.200000,0.100000,30,0");
}

TEST(LexiconIo, FileWithComments) {
  const std::string path = ::testing::TempDir() + "/lexicon_test.txt";
  {
    std::ofstream out(path);
    out << "# toxicity fixture\nfrak\nutter dren   # two-gram\n\nsmeg\n";
  }
  auto lex = load_lexicon(path);
  EXPECT_EQ(lex.terms.size(), 3u);
  EXPECT_EQ(etox_count("utter dren and frak", lex), 2);
  EXPECT_THROW(load_lexicon(::testing::TempDir() + "/missing_lexicon.txt"), Error);
}

TEST(AxesIo, LoadList) {
  const std::string path = ::testing::TempDir() + "/axes_test.txt";
  {
    std::ofstream out(path);
    out << "# axes\nability\nage\nbody_type\n";
  }
  auto axes = load_axes(path);
  ASSERT_EQ(axes.size(), 3u);
  EXPECT_EQ(axes[0], "ability");
}
