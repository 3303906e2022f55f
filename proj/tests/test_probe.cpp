#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "stlm/errors.hpp"
#include "stlm/probe.hpp"
#include "test_util.hpp"

using namespace stlm;

namespace {

VocabularyLayout probe_layout() { return VocabularyLayout{256, 40, 8, 8}; }

TransformerLm probe_model(std::uint64_t seed) {
  ModelConfig c;
  c.layers = 2;
  c.model_dim = 16;
  c.heads = 2;
  c.ff_dim = 24;
  c.context_len = 64;
  c.seed = seed;
  return TransformerLm(c, probe_layout());
}

// Three single-letter words, one phonetic unit each, spans on the 25 Hz grid.
AlignedUtterance three_word_utterance() {
  AlignedUtterance utt;
  utt.id = "probe3";
  const std::vector<std::pair<std::string, int>> words{{"a", 5}, {"b", 11}, {"c", 17}};
  std::int64_t frame = 0;
  for (const auto& [text, hu] : words) {
    utt.words.push_back(AlignedWord{text, Rational(frame, 25), Rational(frame + 2, 25)});
    utt.speech.tokens.push_back(SpeechToken{TokenKind::Phonetic, hu, Rational(frame, 25)});
    utt.speech.tokens.push_back(SpeechToken{TokenKind::Phonetic, hu, Rational(frame + 1, 25)});
    frame += 2;
  }
  return utt;
}

}  // namespace

TEST(ProbePair, PositionMapsCoverEveryWord) {
  TextTokenizer tok;
  auto utt = three_word_utterance();
  auto pair = make_probe_pair(utt, tok);
  ASSERT_EQ(pair.words.size(), 3u);
  EXPECT_EQ(pair.skipped_words, 0);
  // "a" is one byte token at position 1 (marker at 0); later words carry a
  // leading space token.
  EXPECT_EQ(pair.words[0].text_positions, (std::vector<int>{1}));
  EXPECT_EQ(pair.words[1].text_positions, (std::vector<int>{2, 3}));
  // Speech side deduplicates each doubled unit to one position.
  EXPECT_EQ(pair.words[0].speech_positions, (std::vector<int>{1}));
  EXPECT_EQ(pair.words[2].speech_positions, (std::vector<int>{3}));
}

TEST(ProbePair, AlignmentHolesAreSkippedAndCounted) {
  TextTokenizer tok;
  auto utt = three_word_utterance();
  utt.words.push_back(AlignedWord{"ghost", Rational(50, 25), Rational(52, 25)});
  auto pair = make_probe_pair(utt, tok);
  EXPECT_EQ(pair.words.size(), 3u);
  EXPECT_EQ(pair.skipped_words, 1);
}

TEST(CosineMatrix, MatchesNaiveDoubleLoop) {
  TextTokenizer tok;
  auto model = probe_model(3);
  auto pair = make_probe_pair(three_word_utterance(), tok);
  for (int layer = 0; layer <= model.config().layers; ++layer) {
    const auto cm = cosine_matrix(model, pair, layer);
    const Mat ft = model.extract_layer_features(model.layout().encode(pair.text_seq), layer);
    const Mat fs = model.extract_layer_features(model.layout().encode(pair.speech_seq), layer);
    ASSERT_EQ(cm.values.rows(), ft.rows());
    ASSERT_EQ(cm.values.cols(), fs.rows());
    for (Eigen::Index i = 0; i < ft.rows(); ++i) {
      for (Eigen::Index j = 0; j < fs.rows(); ++j) {
        double dot = 0, na = 0, nb = 0;
        for (Eigen::Index k = 0; k < ft.cols(); ++k) {
          dot += ft(i, k) * fs(j, k);
          na += ft(i, k) * ft(i, k);
          nb += fs(j, k) * fs(j, k);
        }
        EXPECT_NEAR(cm.values(i, j), dot / std::sqrt(na * nb), 1e-9);
        EXPECT_GE(cm.values(i, j), -1.0 - 1e-12);
        EXPECT_LE(cm.values(i, j), 1.0 + 1e-12);
      }
    }
  }
}

TEST(CosineMatrix, ZeroNormFeatureFlagged) {
  TextTokenizer tok;
  auto model = probe_model(4);
  AlignedUtterance utt;
  utt.id = "zero";
  utt.words.push_back(AlignedWord{"a", Rational(0, 1), Rational(1, 25)});
  utt.speech.tokens.push_back(SpeechToken{TokenKind::Phonetic, 7, Rational(0, 1)});
  auto pair = make_probe_pair(utt, tok);
  model.params().embed.row(model.layout().phonetic_base() + 7).setZero();
  const auto cm = cosine_matrix(model, pair, 0);
  EXPECT_GT(cm.zero_norm_entries, 0);
  EXPECT_EQ(cm.values(0, 1), 0.0);
}

TEST(WordMaxSimilarity, SharedEmbeddingsGiveOneAtLayerZero) {
  TextTokenizer tok;
  auto model = probe_model(5);
  auto utt = three_word_utterance();
  auto pair = make_probe_pair(utt, tok);
  // Tie each word's speech-unit embedding to its text-token embedding. Word
  // w's text positions include space-prefixed tokens; tying any one text
  // position is enough for the max to reach exactly 1.
  auto& embed = model.params().embed;
  const auto& layout = model.layout();
  const std::vector<std::pair<char, int>> mapping{{'a', 5}, {'b', 11}, {'c', 17}};
  for (const auto& [ch, hu] : mapping) {
    embed.row(layout.phonetic_base() + hu) = embed.row(static_cast<int>(ch));
  }
  EXPECT_NEAR(word_max_similarity(model, {pair}, 0), 1.0, 1e-12);
}

TEST(WordMaxSimilarity, MatchesBruteForceOnThreeWords) {
  TextTokenizer tok;
  auto model = probe_model(6);
  auto pair = make_probe_pair(three_word_utterance(), tok);
  const int layer = 1;
  const auto cm = cosine_matrix(model, pair, layer);
  double mean = 0;
  for (const auto& word : pair.words) {
    double best = -1;
    for (int ti : word.text_positions) {
      for (int si : word.speech_positions) best = std::max(best, cm.values(ti, si));
    }
    mean += best;
  }
  mean /= static_cast<double>(pair.words.size());
  EXPECT_NEAR(word_max_similarity(model, {pair}, layer), mean, 1e-12);
}

TEST(WordMaxSimilarity, DeterministicBoundedAndErrors) {
  TextTokenizer tok;
  auto model = probe_model(7);
  auto pair = make_probe_pair(three_word_utterance(), tok);
  const double a = word_max_similarity(model, {pair}, 2);
  const double b = word_max_similarity(model, {pair}, 2);
  EXPECT_EQ(a, b);
  EXPECT_GT(a, -1.0);
  EXPECT_LT(a, 1.0);
  EXPECT_THROW(word_max_similarity(model, {}, 0), Error);
}

TEST(LayerCurve, CoversAllLayersWithinBounds) {
  TextTokenizer tok;
  auto model = probe_model(8);
  std::vector<ProbePair> pairs{make_probe_pair(three_word_utterance(), tok)};
  auto curve = layer_curve(model, pairs);
  ASSERT_EQ(curve.size(), static_cast<std::size_t>(model.config().layers) + 1);
  for (const auto& point : curve) {
    EXPECT_GE(point.mean_max_similarity, -1.0);
    EXPECT_LE(point.mean_max_similarity, 1.0);
    EXPECT_EQ(point.n_words, 3);
  }
}

TEST(LayerCurve, CosineIsScaleInvariantAtLayerZero) {
  TextTokenizer tok;
  auto model = probe_model(9);
  auto pair = make_probe_pair(three_word_utterance(), tok);
  const double before = word_max_similarity(model, {pair}, 0);
  model.params().embed *= 3.5;  // uniform positive rescaling of layer-0 features
  const double after = word_max_similarity(model, {pair}, 0);
  EXPECT_NEAR(before, after, 1e-12);
}

TEST(ProbeCsv, OutputsAreWellFormed) {
  TextTokenizer tok;
  auto model = probe_model(10);
  std::vector<ProbePair> pairs{make_probe_pair(three_word_utterance(), tok)};
  const std::string curve_path = ::testing::TempDir() + "/curve_test.csv";
  write_layer_curve_csv(curve_path, layer_curve(model, pairs));
  std::ifstream in(curve_path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "layer,mean_max_sim,n_words");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);

  const std::string m_path = ::testing::TempDir() + "/matrix_test.csv";
  write_cosine_matrix_csv(m_path, cosine_matrix(model, pairs[0], 1));
  std::ifstream min(m_path);
  rows = 0;
  while (std::getline(min, line)) ++rows;
  EXPECT_EQ(rows, 6);  // marker, "a", " b" (2 tokens), " c" (2 tokens)
}
