#pragma once

#include <algorithm>
#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "stlm/errors.hpp"

namespace stlm {

// Shared normalization for WER/CER/exact-match: ASCII lowercase, punctuation
// replaced by spaces, whitespace collapsed.
inline std::string normalize_text(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

// Plain dynamic-programming edit distance (insertions, deletions,
// substitutions all cost 1).
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Word error rate: edit distance over normalized words divided by the
// reference word count. The reference must be non-empty after normalization.
inline double wer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = split_words(normalize_text(reference));
  const auto hyp = split_words(normalize_text(hypothesis));
  if (ref.empty()) fail_data("wer: reference is empty after normalization");
  return static_cast<double>(levenshtein(ref, hyp)) / static_cast<double>(ref.size());
}

// Character error rate over the normalized strings (spaces included).
inline double cer(const std::string& reference, const std::string& hypothesis) {
  const std::string ref = normalize_text(reference);
  const std::string hyp = normalize_text(hypothesis);
  if (ref.empty()) fail_data("cer: reference is empty after normalization");
  return static_cast<double>(levenshtein(ref, hyp)) / static_cast<double>(ref.size());
}

inline bool exact_match(const std::string& prediction, const std::string& gold) {
  return normalize_text(prediction) == normalize_text(gold);
}

}  // namespace stlm
