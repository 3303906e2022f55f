#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "stlm/align.hpp"
#include "stlm/bpe.hpp"
#include "stlm/errors.hpp"
#include "stlm/interleave.hpp"
#include "stlm/mixer.hpp"
#include "test_util.hpp"

using namespace stlm;

namespace {

// Utterance with word spans on the 25 Hz frame grid and a full-rate phonetic
// stream covering them; every word owns at least one frame.
AlignedUtterance random_utterance(Rng& rng, int n_words, int id_range = 40) {
  AlignedUtterance utt;
  utt.id = "u" + std::to_string(rng.below(1000000));
  std::int64_t frame = 0;
  for (int w = 0; w < n_words; ++w) {
    const std::int64_t frames = rng.range(1, 6);
    utt.words.push_back(AlignedWord{testutil::random_word(rng), Rational(frame, 25),
                                    Rational(frame + frames, 25)});
    frame += frames;
  }
  int last_id = -1;
  for (std::int64_t f = 0; f < frame; ++f) {
    int id = (last_id >= 0 && rng.real01() < 0.4)
                 ? last_id
                 : static_cast<int>(rng.below(static_cast<std::uint64_t>(id_range)));
    last_id = id;
    utt.speech.tokens.push_back(SpeechToken{TokenKind::Phonetic, id, Rational(f, 25)});
  }
  return utt;
}

AlignedUtterance fig1b_utterance() {
  // "the cat sat on the mat"; "sat on" covers frames 11..21 and deduplicates
  // to Hu3 Hu7 Hu150 Hu200.
  AlignedUtterance utt;
  utt.id = "fig1b";
  const std::vector<std::pair<std::string, std::pair<int, int>>> words{
      {"the", {0, 5}}, {"cat", {5, 11}}, {"sat", {11, 17}},
      {"on", {17, 22}}, {"the", {22, 27}}, {"mat", {27, 35}}};
  for (const auto& [text, span] : words) {
    utt.words.push_back(AlignedWord{text, Rational(span.first, 25), Rational(span.second, 25)});
  }
  const std::vector<int> frame_ids{
      12, 12, 40, 40, 40,            // the
      77, 77, 13, 13, 90, 90,        // cat
      3, 3, 3, 7, 7, 7,              // sat
      150, 150, 200, 200, 200,       // on (continues the 200 run below? no: ends at frame 21)
      33, 33, 41, 41, 41,            // the
      99, 99, 99, 18, 18, 18, 56, 56};  // mat
  for (std::size_t f = 0; f < frame_ids.size(); ++f) {
    utt.speech.tokens.push_back(
        SpeechToken{TokenKind::Phonetic, frame_ids[f], Rational(static_cast<std::int64_t>(f), 25)});
  }
  validate_utterance(utt);
  return utt;
}

}  // namespace

TEST(SpanPlan, SingleWordUtterance) {
  Rng rng(1);
  auto utt = random_utterance(rng, 1);
  auto plan = sample_span_plan(utt, rng);
  ASSERT_EQ(plan.segments.size(), 1u);
  EXPECT_EQ(plan.segments[0].begin, 0u);
  EXPECT_EQ(plan.segments[0].end, 1u);
}

TEST(SpanPlan, LengthsStayInRangeExceptLast) {
  Rng rng(2);
  auto utt = random_utterance(rng, 100);
  for (int trial = 0; trial < 2000; ++trial) {
    auto plan = sample_span_plan(utt, rng);
    validate_plan(plan, utt);
    for (std::size_t i = 0; i + 1 < plan.segments.size(); ++i) {
      const auto& seg = plan.segments[i];
      const auto len = static_cast<int>(seg.end - seg.begin);
      if (seg.modality == Modality::Text) {
        EXPECT_GE(len, 10);
        EXPECT_LE(len, 30);
      } else {
        EXPECT_GE(len, 5);
        EXPECT_LE(len, 15);
      }
    }
  }
}

TEST(SpanPlan, DeterministicUnderSeed) {
  Rng mk(5);
  auto utt = random_utterance(mk, 60);
  Rng rng_a(77), rng_b(77);
  auto p1 = sample_span_plan(utt, rng_a);
  auto p2 = sample_span_plan(utt, rng_b);
  ASSERT_EQ(p1.segments.size(), p2.segments.size());
  for (std::size_t i = 0; i < p1.segments.size(); ++i) {
    EXPECT_EQ(p1.segments[i].modality, p2.segments[i].modality);
    EXPECT_EQ(p1.segments[i].begin, p2.segments[i].begin);
    EXPECT_EQ(p1.segments[i].end, p2.segments[i].end);
  }
}

TEST(BuildInterleaved, MatchesDisplayExample) {
  auto utt = fig1b_utterance();
  SpanPlan plan;
  plan.segments = {PlanSegment{Modality::Text, 0, 2}, PlanSegment{Modality::Speech, 2, 4},
                   PlanSegment{Modality::Text, 4, 6}};
  TextTokenizer tok;
  auto seq = build_interleaved(utt, plan, tok);
  EXPECT_EQ(serialize(seq, tok), "[Text]the cat [Speech][Hu3][Hu7][Hu150][Hu200][Text]the mat");
}

TEST(BuildInterleaved, AllTextPlanIsTranscript) {
  auto utt = fig1b_utterance();
  SpanPlan plan;
  plan.segments = {PlanSegment{Modality::Text, 0, 6}};
  TextTokenizer tok;
  auto seq = build_interleaved(utt, plan, tok);
  EXPECT_EQ(serialize(seq, tok), "[Text]the cat sat on the mat");
  auto stats = sequence_stats(seq);
  EXPECT_EQ(stats.speech_units, 0u);
}

TEST(BuildInterleaved, AllSpeechPlanEqualsUnimodalEncoding) {
  auto utt = fig1b_utterance();
  SpanPlan plan;
  plan.segments = {PlanSegment{Modality::Speech, 0, 6}};
  TextTokenizer tok;
  auto seq = build_interleaved(utt, plan, tok);
  EXPECT_EQ(seq, encode_unimodal(utt.speech));
}

TEST(BuildInterleaved, AlignmentHoleCarriesWordRange) {
  auto utt = fig1b_utterance();
  // Words beyond the speech stream: fabricate a word span with no tokens.
  utt.words.push_back(AlignedWord{"ghost", Rational(100, 25), Rational(105, 25)});
  SpanPlan plan;
  plan.segments = {PlanSegment{Modality::Text, 0, 6}, PlanSegment{Modality::Speech, 6, 7}};
  TextTokenizer tok;
  try {
    build_interleaved(utt, plan, tok);
    FAIL() << "expected AlignmentHoleError";
  } catch (const AlignmentHoleError& e) {
    EXPECT_EQ(e.word_begin(), 6u);
    EXPECT_EQ(e.word_end(), 7u);
  }
}

TEST(BuildInterleaved, CoverageAndConservationProperties) {
  Rng rng(11);
  TextTokenizer tok;
  SpanConfig toy{.text_min = 1, .text_max = 5, .speech_min = 1, .speech_max = 4};
  for (int trial = 0; trial < 500; ++trial) {
    auto utt = random_utterance(rng, 1 + static_cast<int>(rng.below(30)));
    auto plan = sample_span_plan(utt, rng, toy);
    auto seq = build_interleaved(utt, plan, tok);

    // Marker count equals segment count.
    EXPECT_EQ(sequence_stats(seq).markers, plan.segments.size());

    // Reconstruct the word sequence: decoded text for text segments, aligned
    // words for speech segments.
    std::vector<std::string> reconstructed;
    std::size_t pos = 0;
    for (const auto& seg : plan.segments) {
      ASSERT_TRUE(std::holds_alternative<Marker>(seq.tokens[pos]));
      ++pos;
      if (seg.modality == Modality::Text) {
        std::vector<int> ids;
        while (pos < seq.size() && std::holds_alternative<TextToken>(seq.tokens[pos])) {
          ids.push_back(std::get<TextToken>(seq.tokens[pos]).id);
          ++pos;
        }
        std::string text = tok.decode(ids);
        std::istringstream ss(text);
        std::string word;
        while (ss >> word) reconstructed.push_back(word);
      } else {
        // Independent per-segment trace: RLE over the in-span raw ids.
        std::vector<int> expected;
        for (const auto& t : utt.speech.tokens) {
          if (utt.words[seg.begin].start <= t.time && t.time < utt.words[seg.end - 1].end) {
            if (expected.empty() || expected.back() != t.id) expected.push_back(t.id);
          }
        }
        std::vector<int> got;
        while (pos < seq.size() && std::holds_alternative<SpeechUnit>(seq.tokens[pos])) {
          got.push_back(std::get<SpeechUnit>(seq.tokens[pos]).id);
          ++pos;
        }
        ASSERT_EQ(got, expected);
        for (std::size_t w = seg.begin; w < seg.end; ++w) {
          reconstructed.push_back(utt.words[w].text);
        }
      }
    }
    std::vector<std::string> original;
    for (const auto& w : utt.words) original.push_back(w.text);
    ASSERT_EQ(reconstructed, original);
  }
}

TEST(EncodeUnimodal, PaperFormats) {
  TextTokenizer tok;
  EXPECT_EQ(serialize(encode_unimodal("this is a text sentence", tok), tok),
            "[Text]this is a text sentence");
  EXPECT_EQ(serialize(encode_unimodal("", tok), tok), "[Text]");

  auto s = testutil::phonetic_stream({262, 208, 499, 105});
  EXPECT_EQ(serialize(encode_unimodal(s), tok), "[Speech][Hu262][Hu208][Hu499][Hu105]");
}

TEST(EpochsSeen, ReproducesTrainingTableValues) {
  const double total = 100e9;
  MixerSubset text{"text", SubsetKind::TextOnly, 0, 307e9, 1.0 / 3.0};
  MixerSubset speech{"speech", SubsetKind::SpeechOnly, 28.2e9, 0, 1.0 / 3.0};
  MixerSubset aligned{"aligned", SubsetKind::Aligned, 7.0e9, 1.4e9, 1.0 / 3.0};

  const double text_epochs = epochs_seen(text, total);
  EXPECT_NEAR(std::round(text_epochs * 100.0) / 100.0, 0.11, 1e-12);

  const double speech_epochs = epochs_seen(speech, total);
  EXPECT_LE(std::abs(speech_epochs - 1.24) / 1.24, 0.10);

  const double aligned_epochs = epochs_seen(aligned, total);
  EXPECT_LE(std::abs(aligned_epochs - 3.81) / 3.81, 0.10);

  // Identity case: the whole corpus sampled once.
  MixerSubset whole{"w", SubsetKind::TextOnly, 0, 5000, 1.0};
  EXPECT_DOUBLE_EQ(epochs_seen(whole, 5000), 1.0);

  MixerSubset empty{"e", SubsetKind::TextOnly, 0, 0, 0.5};
  EXPECT_THROW(epochs_seen(empty, total), Error);
}

TEST(Mixer, ValidationAndConfigFile) {
  MixerConfig bad;
  bad.subsets = {MixerSubset{"a", SubsetKind::TextOnly, 0, 10, 0.6},
                 MixerSubset{"b", SubsetKind::SpeechOnly, 10, 0, 0.6}};
  EXPECT_THROW(validate_mixer(bad), Error);

  MixerConfig good;
  good.subsets = {MixerSubset{"a", SubsetKind::TextOnly, 0, 10, 0.25},
                  MixerSubset{"b", SubsetKind::Aligned, 20, 10, 0.75}};
  validate_mixer(good);

  const std::string path = ::testing::TempDir() + "/mixer_test.cfg";
  save_mixer_config(good, path);
  auto loaded = load_mixer_config(path);
  ASSERT_EQ(loaded.subsets.size(), 2u);
  EXPECT_EQ(loaded.subsets[1].name, "b");
  EXPECT_EQ(loaded.subsets[1].kind, SubsetKind::Aligned);
  EXPECT_DOUBLE_EQ(loaded.subsets[1].proportion, 0.75);
}

TEST(SampleBatch, SingleSubsetTakesAllDraws) {
  Rng mk(3), rng(4);
  std::map<std::string, std::vector<AlignedUtterance>> manifests;
  for (int i = 0; i < 5; ++i) manifests["only"].push_back(random_utterance(mk, 8));
  MixerConfig mixer;
  mixer.subsets = {MixerSubset{"only", SubsetKind::SpeechOnly, 100, 0, 1.0}};
  TextTokenizer tok;
  auto batch = sample_batch(mixer, manifests, rng, 200, tok);
  EXPECT_GE(batch.total_tokens, 200u);
  EXPECT_EQ(batch.draws_per_subset.size(), 1u);
  EXPECT_EQ(batch.draws_per_subset["only"], batch.sequences.size());
}

TEST(SampleBatch, EmpiricalFrequenciesMatchProportions) {
  Rng mk(6), rng(7);
  std::map<std::string, std::vector<AlignedUtterance>> manifests;
  for (const char* name : {"a", "b", "c"}) {
    for (int i = 0; i < 3; ++i) manifests[name].push_back(random_utterance(mk, 6));
  }
  MixerConfig mixer;
  mixer.subsets = {MixerSubset{"a", SubsetKind::TextOnly, 0, 10, 1.0 / 3.0},
                   MixerSubset{"b", SubsetKind::SpeechOnly, 10, 0, 1.0 / 3.0},
                   MixerSubset{"c", SubsetKind::Aligned, 10, 5, 1.0 / 3.0}};
  TextTokenizer tok;
  SpanConfig toy{.text_min = 1, .text_max = 3, .speech_min = 1, .speech_max = 3};

  std::map<std::string, std::size_t> draws;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    auto batch = sample_batch(mixer, manifests, rng, 1, tok, KindSet::all(), toy);
    for (const auto& [name, count] : batch.draws_per_subset) draws[name] += count;
  }
  std::size_t total = 0;
  for (const auto& [name, count] : draws) total += count;
  for (const auto& [name, count] : draws) {
    EXPECT_NEAR(static_cast<double>(count) / static_cast<double>(total), 1.0 / 3.0, 0.01) << name;
  }
}

TEST(SampleBatch, DeterministicAndErrors) {
  Rng mk(9);
  std::map<std::string, std::vector<AlignedUtterance>> manifests;
  manifests["x"].push_back(random_utterance(mk, 12));
  MixerConfig mixer;
  mixer.subsets = {MixerSubset{"x", SubsetKind::Aligned, 10, 10, 1.0}};
  TextTokenizer tok;
  SpanConfig toy{.text_min = 1, .text_max = 4, .speech_min = 1, .speech_max = 4};

  Rng r1(42), r2(42);
  auto b1 = sample_batch(mixer, manifests, r1, 100, tok, KindSet::all(), toy);
  auto b2 = sample_batch(mixer, manifests, r2, 100, tok, KindSet::all(), toy);
  ASSERT_EQ(b1.sequences.size(), b2.sequences.size());
  for (std::size_t i = 0; i < b1.sequences.size(); ++i) EXPECT_EQ(b1.sequences[i], b2.sequences[i]);

  MixerConfig missing;
  missing.subsets = {MixerSubset{"nope", SubsetKind::TextOnly, 0, 10, 1.0}};
  Rng r3(1);
  EXPECT_THROW(sample_batch(missing, manifests, r3, 10, tok), Error);
}

TEST(Manifest, JsonlRoundTrip) {
  Rng rng(33);
  std::vector<AlignedUtterance> utts;
  for (int i = 0; i < 8; ++i) utts.push_back(random_utterance(rng, 1 + static_cast<int>(rng.below(10))));
  const std::string path = ::testing::TempDir() + "/manifest_test.jsonl";
  write_manifest(path, utts);
  auto loaded = read_manifest(path);
  ASSERT_EQ(loaded.size(), utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    EXPECT_EQ(loaded[i].id, utts[i].id);
    ASSERT_EQ(loaded[i].words.size(), utts[i].words.size());
    for (std::size_t w = 0; w < utts[i].words.size(); ++w) {
      EXPECT_EQ(loaded[i].words[w].text, utts[i].words[w].text);
      EXPECT_EQ(loaded[i].words[w].start, utts[i].words[w].start);
      EXPECT_EQ(loaded[i].words[w].end, utts[i].words[w].end);
    }
    EXPECT_EQ(loaded[i].speech.tokens, utts[i].speech.tokens);
  }
}

TEST(Manifest, UtteranceValidation) {
  Rng rng(3);
  auto utt = random_utterance(rng, 4);
  validate_utterance(utt);

  auto overlapping = utt;
  overlapping.words[1].start = overlapping.words[0].start;
  EXPECT_THROW(validate_utterance(overlapping), Error);

  auto short_speech = utt;
  short_speech.speech.tokens.resize(1);
  EXPECT_THROW(validate_utterance(short_speech), Error);
}
