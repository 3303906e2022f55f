#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "stlm/align.hpp"
#include "stlm/bpe.hpp"
#include "stlm/errors.hpp"
#include "stlm/interleave.hpp"
#include "stlm/model.hpp"

namespace stlm {

// One sentence rendered in both modalities, with per-word position maps into
// each unified sequence. Probe features are the post-block residual states
// (layer 0 = embeddings).
struct ProbePair {
  std::string id;
  UnifiedSequence text_seq;
  UnifiedSequence speech_seq;
  struct WordPositions {
    std::vector<int> text_positions;
    std::vector<int> speech_positions;
  };
  std::vector<WordPositions> words;
  int skipped_words = 0;  // alignment holes dropped at construction
};

// Builds the pair from an aligned utterance. The text side is encoded word by
// word (later words carry their leading space) so each word's token positions
// are known; the speech side maps each deduplicated token to the word whose
// span covers its timestamp. Words missing positions on either side are
// skipped and counted.
inline ProbePair make_probe_pair(const AlignedUtterance& utt, const TextTokenizer& tokenizer,
                                 KindSet dedup_kinds = {TokenKind::Phonetic, TokenKind::Pitch}) {
  ProbePair pair;
  pair.id = utt.id;
  pair.text_seq.push_marker(Marker::Text);
  std::vector<std::vector<int>> text_positions(utt.words.size());
  for (std::size_t w = 0; w < utt.words.size(); ++w) {
    const std::string piece = (w == 0 ? "" : " ") + utt.words[w].text;
    for (int id : tokenizer.encode(piece)) {
      text_positions[w].push_back(static_cast<int>(pair.text_seq.size()));
      pair.text_seq.push_text(id);
    }
  }

  pair.speech_seq.push_marker(Marker::Speech);
  std::vector<std::vector<int>> speech_positions(utt.words.size());
  for (const auto& tok : deduplicate(utt.speech, dedup_kinds).tokens) {
    int word = -1;
    for (std::size_t w = 0; w < utt.words.size(); ++w) {
      if (utt.words[w].start <= tok.time && tok.time < utt.words[w].end) {
        word = static_cast<int>(w);
        break;
      }
    }
    const int pos = static_cast<int>(pair.speech_seq.size());
    pair.speech_seq.push_unit(tok.kind, tok.id);
    if (word >= 0) speech_positions[static_cast<std::size_t>(word)].push_back(pos);
  }

  for (std::size_t w = 0; w < utt.words.size(); ++w) {
    if (text_positions[w].empty() || speech_positions[w].empty()) {
      ++pair.skipped_words;
      continue;
    }
    pair.words.push_back(ProbePair::WordPositions{text_positions[w], speech_positions[w]});
  }
  return pair;
}

struct CosineMatrix {
  Mat values;  // n_text_positions x n_speech_positions
  int zero_norm_entries = 0;
};

// Pairwise cosine similarity between every text position and every speech
// position of the pair at one layer. Zero-norm features produce 0 entries,
// flagged in the count.
//
// `centered` subtracts the pooled mean feature of both sequences first.
// Residual streams of small trained models are anisotropic: every position
// shares a dominant direction, and raw cosine then reads that direction
// instead of word identity. Centering removes it. Raw cosine stays the
// default and is what the CSV emission reports.
inline CosineMatrix cosine_matrix(const TransformerLm& model, const ProbePair& pair, int layer,
                                  bool centered = false) {
  Mat ft = model.extract_layer_features(model.layout().encode(pair.text_seq), layer);
  Mat fs = model.extract_layer_features(model.layout().encode(pair.speech_seq), layer);
  if (centered) {
    const Eigen::RowVectorXd mean =
        (ft.colwise().sum() + fs.colwise().sum()) / static_cast<double>(ft.rows() + fs.rows());
    ft.rowwise() -= mean;
    fs.rowwise() -= mean;
  }
  CosineMatrix out;
  out.values.resize(ft.rows(), fs.rows());
  for (Eigen::Index i = 0; i < ft.rows(); ++i) {
    for (Eigen::Index j = 0; j < fs.rows(); ++j) {
      const double denom = ft.row(i).norm() * fs.row(j).norm();
      if (denom == 0.0) {
        out.values(i, j) = 0.0;
        ++out.zero_norm_entries;
      } else {
        out.values(i, j) = ft.row(i).dot(fs.row(j)) / denom;
      }
    }
  }
  return out;
}

// Per word, the maximum cosine similarity over its text x speech position
// cross-product; averaged over words, then over pairs.
inline double word_max_similarity(const TransformerLm& model, const std::vector<ProbePair>& pairs,
                                  int layer, bool centered = false) {
  if (pairs.empty()) fail_data("word_max_similarity: no probe pairs");
  double pair_sum = 0.0;
  int pair_count = 0;
  for (const auto& pair : pairs) {
    if (pair.words.empty()) continue;
    const auto cm = cosine_matrix(model, pair, layer, centered);
    double word_sum = 0.0;
    for (const auto& word : pair.words) {
      double best = -1.0;
      for (int ti : word.text_positions) {
        for (int si : word.speech_positions) {
          best = std::max(best, cm.values(ti, si));
        }
      }
      word_sum += best;
    }
    pair_sum += word_sum / static_cast<double>(pair.words.size());
    ++pair_count;
  }
  if (pair_count == 0) fail_data("word_max_similarity: every pair was empty");
  return pair_sum / static_cast<double>(pair_count);
}

struct LayerCurvePoint {
  int layer = 0;
  double mean_max_similarity = 0.0;
  int n_words = 0;
};

inline std::vector<LayerCurvePoint> layer_curve(const TransformerLm& model,
                                                const std::vector<ProbePair>& pairs,
                                                bool centered = false) {
  int n_words = 0;
  for (const auto& p : pairs) n_words += static_cast<int>(p.words.size());
  std::vector<LayerCurvePoint> curve;
  for (int layer = 0; layer <= model.config().layers; ++layer) {
    curve.push_back(LayerCurvePoint{layer, word_max_similarity(model, pairs, layer, centered), n_words});
  }
  return curve;
}

inline void write_layer_curve_csv(const std::string& path,
                                  const std::vector<LayerCurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write layer curve: " + path);
  out << "layer,mean_max_sim,n_words\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%d\n", p.layer, p.mean_max_similarity, p.n_words);
    out << buf;
  }
}

inline void write_cosine_matrix_csv(const std::string& path, const CosineMatrix& m) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write cosine matrix: " + path);
  char buf[64];
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", m.values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace stlm
