#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "stlm/errors.hpp"
#include "stlm/ffe.hpp"
#include "stlm/sentiment.hpp"
#include "stlm/stsp.hpp"
#include "test_util.hpp"

using namespace stlm;

namespace {

// Oracle world: generations carry their sentiment as a magic token; the
// matched classifier reads it back perfectly.
const char* sentiment_token(SentimentLabel s) {
  switch (s) {
    case SentimentLabel::Positive: return "glad";
    case SentimentLabel::Negative: return "grim";
    case SentimentLabel::Neutral: return "plain";
  }
  return "";
}

class OracleClassifier : public SentimentClassifier {
 public:
  std::optional<SentimentLabel> classify_text(const std::string& text) const override {
    for (SentimentLabel s : kAllSentiments) {
      if (text.find(sentiment_token(s)) != std::string::npos) return s;
    }
    return std::nullopt;
  }
  std::optional<SentimentLabel> classify_speech(const SpeechTokenStream& speech) const override {
    for (const auto& t : speech.tokens) {
      if (t.kind == TokenKind::Style) return static_cast<SentimentLabel>(t.id % 3);
    }
    return std::nullopt;
  }
};

SpeechTokenStream style_stream(SentimentLabel s, int n = 4) {
  SpeechTokenStream out;
  for (int i = 0; i < n; ++i) {
    out.tokens.push_back(
        SpeechToken{TokenKind::Style, static_cast<int>(s), Rational(i, 1)});
  }
  return out;
}

std::vector<StspItem> balanced_items(Modality modality, int per_class, const std::string& tag) {
  std::vector<StspItem> items;
  int k = 0;
  for (SentimentLabel s : kAllSentiments) {
    for (int i = 0; i < per_class; ++i) {
      StspItem item;
      item.id = tag + std::to_string(k++);
      item.modality = modality;
      item.sentiment = s;
      if (modality == Modality::Text) {
        item.prompt_text = "prompt " + std::to_string(i) + " " + sentiment_token(s);
      } else {
        item.prompt_speech = style_stream(s, 6);
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

StspGenerator oracle_generator() {
  return [](const StspItem& item, const DirectionParams& p, Rng&) {
    StspGeneration gen;
    if (direction_target(p.direction) == Modality::Text) {
      gen.text = std::string("continuation ") + sentiment_token(item.sentiment);
    } else {
      gen.speech = style_stream(item.sentiment, 3);
    }
    return gen;
  };
}

StspGenerator random_generator() {
  return [](const StspItem&, const DirectionParams& p, Rng& rng) {
    const auto s = static_cast<SentimentLabel>(rng.below(3));
    StspGeneration gen;
    if (direction_target(p.direction) == Modality::Text) {
      gen.text = sentiment_token(s);
    } else {
      gen.speech = style_stream(s, 3);
    }
    return gen;
  };
}

}  // namespace

TEST(MapEmotion, PaperMapping) {
  EXPECT_EQ(map_emotion("Amused"), SentimentLabel::Positive);
  EXPECT_EQ(map_emotion("happy"), SentimentLabel::Positive);
  EXPECT_EQ(map_emotion("Angry"), SentimentLabel::Negative);
  EXPECT_EQ(map_emotion("sad"), SentimentLabel::Negative);
  EXPECT_EQ(map_emotion("default"), SentimentLabel::Neutral);
  EXPECT_EQ(map_emotion("Neutral"), SentimentLabel::Neutral);
  EXPECT_THROW(map_emotion("bored"), Error);
}

TEST(SplitDataset, StratifiedSixtyTwentyTwenty) {
  auto items = balanced_items(Modality::Text, 30, "s");
  auto split = split_dataset(items, {0.6, 0.2, 0.2}, 5);
  EXPECT_EQ(split.train.size(), 54u);
  EXPECT_EQ(split.dev.size(), 18u);
  EXPECT_EQ(split.test.size(), 18u);

  auto count = [](const std::vector<StspItem>& part, SentimentLabel s) {
    return std::count_if(part.begin(), part.end(),
                         [&](const StspItem& i) { return i.sentiment == s; });
  };
  for (SentimentLabel s : kAllSentiments) {
    EXPECT_EQ(count(split.train, s), 18);
    EXPECT_EQ(count(split.dev, s), 6);
    EXPECT_EQ(count(split.test, s), 6);
  }
}

TEST(SplitDataset, DeterministicAndLossless) {
  auto items = balanced_items(Modality::Speech, 10, "d");
  auto a = split_dataset(items, {0.6, 0.2, 0.2}, 42);
  auto b = split_dataset(items, {0.6, 0.2, 0.2}, 42);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].id, b.train[i].id);

  // Union of the parts is the input multiset.
  std::multiset<std::string> in_ids, out_ids;
  for (const auto& i : items) in_ids.insert(i.id);
  for (const auto* part : {&a.train, &a.dev, &a.test}) {
    for (const auto& i : *part) out_ids.insert(i.id);
  }
  EXPECT_EQ(in_ids, out_ids);
}

TEST(SplitDataset, SmallClassRejected) {
  auto items = balanced_items(Modality::Text, 2, "x");
  EXPECT_THROW(split_dataset(items, {0.6, 0.2, 0.2}, 1), Error);
}

TEST(RunDirection, OracleLoopIsPerfectInAllDirections) {
  OracleClassifier classifier;
  for (StspDirection d : {StspDirection::TextToText, StspDirection::TextToSpeech,
                          StspDirection::SpeechToSpeech, StspDirection::SpeechToText}) {
    const auto items = balanced_items(direction_source(d), 5, "o");
    auto report = run_direction(oracle_generator(), items, DirectionParams::defaults(d),
                                classifier, {1, 2, 3});
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0) << direction_name(d);
    EXPECT_EQ(report.excluded, 0);
    EXPECT_EQ(report.evaluated, 15);
  }
}

TEST(RunDirection, RandomGeneratorIsNearChance) {
  OracleClassifier classifier;
  const auto items = balanced_items(Modality::Text, 334, "r");  // 1002 items
  auto report = run_direction(random_generator(), items,
                              DirectionParams::defaults(StspDirection::TextToText), classifier,
                              {7, 8, 9});
  EXPECT_NEAR(report.accuracy, 1.0 / 3.0, 0.03);
}

TEST(RunDirection, ErrorsAndExclusions) {
  OracleClassifier classifier;
  EXPECT_THROW(run_direction(oracle_generator(), {},
                             DirectionParams::defaults(StspDirection::TextToText), classifier),
               Error);

  // Modality mismatch between items and direction source.
  auto speech_items = balanced_items(Modality::Speech, 2, "m");
  EXPECT_THROW(run_direction(oracle_generator(), speech_items,
                             DirectionParams::defaults(StspDirection::TextToText), classifier),
               Error);

  // A generator that emits unclassifiable output gets excluded and counted.
  auto items = balanced_items(Modality::Text, 2, "e");
  StspGenerator half_bad = [](const StspItem& item, const DirectionParams&, Rng&) {
    StspGeneration gen;
    gen.text = item.id.back() % 2 == 0 ? "glad words" : "nothing recognizable";
    return gen;
  };
  auto report = run_direction(half_bad, items, DirectionParams::defaults(StspDirection::TextToText),
                              classifier, {1});
  EXPECT_EQ(report.evaluated + report.excluded, 6);
  EXPECT_GT(report.excluded, 0);
}

TEST(FewShot, BalancedSelectionPerSentiment) {
  OracleClassifier classifier;
  // Long prompts whose halves both carry the class token.
  std::vector<StspItem> train;
  for (int i = 0; i < 12; ++i) {
    for (SentimentLabel s : kAllSentiments) {
      StspItem item;
      item.id = "t" + std::to_string(i) + sentiment_name(s);
      item.modality = Modality::Text;
      item.sentiment = s;
      item.prompt_text = std::string(sentiment_token(s)) + " one two three " +
                         sentiment_token(s) + " four five six";
      train.push_back(std::move(item));
    }
  }
  for (int n : {3, 6, 9}) {
    auto sel = build_sentiment_few_shot(train, n, classifier, 77);
    ASSERT_EQ(sel.examples.size(), static_cast<std::size_t>(n));
    std::map<SentimentLabel, int> per_class;
    for (const auto& ex : sel.examples) ++per_class[ex.consistent_label];
    for (SentimentLabel s : kAllSentiments) EXPECT_EQ(per_class[s], n / 3);
  }

  auto again = build_sentiment_few_shot(train, 6, classifier, 123);
  auto again2 = build_sentiment_few_shot(train, 6, classifier, 123);
  EXPECT_EQ(again.ids, again2.ids);

  EXPECT_THROW(build_sentiment_few_shot(train, 4, classifier, 1), Error);
}

TEST(FewShot, InconsistentPoolRejected) {
  OracleClassifier classifier;
  std::vector<StspItem> train;
  for (int i = 0; i < 10; ++i) {
    StspItem item;
    item.id = "bad" + std::to_string(i);
    item.modality = Modality::Text;
    item.sentiment = SentimentLabel::Positive;
    // First half reads positive, second half negative: never consistent.
    item.prompt_text = "glad glad glad glad grim grim grim grim";
    train.push_back(std::move(item));
  }
  EXPECT_THROW(build_sentiment_few_shot(train, 3, classifier, 9), Error);
}

TEST(StyleClassifier, LearnsTokenHistograms) {
  StyleTokenClassifier clf(12);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    // Class c concentrates on style ids 4c..4c+3.
    for (int c = 0; c < 3; ++c) {
      SpeechTokenStream s;
      for (int t = 0; t < 5; ++t) {
        s.tokens.push_back(SpeechToken{TokenKind::Style,
                                       4 * c + static_cast<int>(rng.below(4)), Rational(t, 1)});
      }
      clf.add_example(static_cast<SentimentLabel>(c), s);
    }
  }
  for (int c = 0; c < 3; ++c) {
    SpeechTokenStream probe;
    for (int t = 0; t < 4; ++t) {
      probe.tokens.push_back(SpeechToken{TokenKind::Style, 4 * c + t % 4, Rational(t, 1)});
    }
    EXPECT_EQ(clf.classify_speech(probe), static_cast<SentimentLabel>(c));
  }
  EXPECT_EQ(clf.classify_speech(SpeechTokenStream{}), std::nullopt);
  EXPECT_EQ(clf.classify_text("words"), std::nullopt);
}

TEST(StspIo, JsonlRoundTrip) {
  auto items = balanced_items(Modality::Text, 2, "io");
  auto speech_items = balanced_items(Modality::Speech, 2, "ios");
  items.insert(items.end(), speech_items.begin(), speech_items.end());
  const std::string path = ::testing::TempDir() + "/stsp_test.jsonl";
  write_stsp_items(path, items);
  auto loaded = read_stsp_items(path);
  ASSERT_EQ(loaded.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(loaded[i].id, items[i].id);
    EXPECT_EQ(loaded[i].sentiment, items[i].sentiment);
    EXPECT_EQ(loaded[i].modality, items[i].modality);
    EXPECT_EQ(loaded[i].prompt_text, items[i].prompt_text);
    EXPECT_EQ(loaded[i].prompt_speech.tokens, items[i].prompt_speech.tokens);
  }
}

TEST(Ffe, HandTracedCases) {
  F0Contour ref, same;
  ref.frame_rate = same.frame_rate = 100.0;
  for (int i = 0; i < 10; ++i) {
    ref.frames.push_back({100.0 + i, true});
    same.frames.push_back({100.0 + i, true});
  }
  EXPECT_DOUBLE_EQ(ffe(ref, same), 0.0);

  F0Contour unvoiced;
  unvoiced.frame_rate = 100.0;
  unvoiced.frames.assign(10, {0.0, false});
  EXPECT_DOUBLE_EQ(ffe(ref, unvoiced), 1.0);

  // 10 frames, exactly 3 errors: one voicing flip, one +25% deviation, one
  // -30% deviation; a +15% deviation stays inside the 20% band.
  F0Contour hyp = ref;
  hyp.frames[1] = {0.0, false};
  hyp.frames[4].f0 = ref.frames[4].f0 * 1.25;
  hyp.frames[6].f0 = ref.frames[6].f0 * 0.70;
  hyp.frames[8].f0 = ref.frames[8].f0 * 1.15;
  EXPECT_DOUBLE_EQ(ffe(ref, hyp), 0.3);

  EXPECT_THROW(ffe(F0Contour{}, F0Contour{}), Error);
}

TEST(Ffe, DeviationDenominatorIsTheReference) {
  F0Contour a, b;
  a.frame_rate = b.frame_rate = 100.0;
  a.frames.push_back({100.0, true});
  b.frames.push_back({121.0, true});
  // |121-100| = 21 > 0.2*100, but |100-121| = 21 <= 0.2*121.
  EXPECT_DOUBLE_EQ(ffe(a, b), 1.0);
  EXPECT_DOUBLE_EQ(ffe(b, a), 0.0);
}

TEST(Ffe, ResampleAlignsFrameCounts) {
  F0Contour src;
  src.frame_rate = 100.0;
  for (int i = 0; i < 50; ++i) src.frames.push_back({200.0 + i, true});
  auto down = resample_contour(src, 25.0, 12);
  ASSERT_EQ(down.frames.size(), 12u);
  EXPECT_DOUBLE_EQ(down.frames[1].f0, src.frames[4].f0);
  EXPECT_DOUBLE_EQ(ffe(down, down), 0.0);
}

TEST(StyleAccuracy, WrapsClassifier) {
  std::vector<StyledStream> items;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 4; ++i) {
      StyledStream s;
      s.label = "style" + std::to_string(c);
      s.speech = style_stream(static_cast<SentimentLabel>(c), 3);
      items.push_back(std::move(s));
    }
  }
  StyleClassifier perfect = [](const SpeechTokenStream& s) -> std::optional<std::string> {
    return "style" + std::to_string(s.tokens.front().id);
  };
  EXPECT_DOUBLE_EQ(style_accuracy(items, perfect).accuracy, 1.0);

  StyleClassifier constant = [](const SpeechTokenStream&) -> std::optional<std::string> {
    return "style0";
  };
  EXPECT_NEAR(style_accuracy(items, constant).accuracy, 1.0 / 3.0, 1e-12);

  EXPECT_THROW(style_accuracy({}, perfect), Error);
}
