#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stlm/errors.hpp"

namespace stlm {

// Byte-level BPE. The 256 byte values are the base vocabulary; training
// appends merge rules. decode(encode(s)) == s for any byte string, and
// encode(decode(ids)) == ids for any ids produced by encode, which is what
// the token text format's round-trip relies on.
class TextTokenizer {
 public:
  TextTokenizer() { rebuild_pieces(); }

  static TextTokenizer train(const std::vector<std::string>& corpus, int vocab_size) {
    if (vocab_size < 256) fail_config("TextTokenizer: vocab_size must be >= 256");
    TextTokenizer tok;
    std::vector<std::vector<int>> seqs;
    seqs.reserve(corpus.size());
    for (const auto& s : corpus) seqs.push_back(to_bytes(s));

    while (static_cast<int>(256 + tok.merges_.size()) < vocab_size) {
      // Most frequent adjacent pair; ties resolve to the smallest (a, b).
      std::map<std::pair<int, int>, std::int64_t> counts;
      for (const auto& seq : seqs) {
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
          ++counts[{seq[i], seq[i + 1]}];
        }
      }
      std::pair<int, int> best{-1, -1};
      std::int64_t best_count = 1;  // require at least 2 occurrences
      for (const auto& [pair, count] : counts) {
        if (count > best_count) {
          best_count = count;
          best = pair;
        }
      }
      if (best.first < 0) break;
      const int new_id = static_cast<int>(256 + tok.merges_.size());
      tok.merges_.push_back(best);
      for (auto& seq : seqs) seq = merge_pair(seq, best, new_id);
    }
    tok.rebuild_pieces();
    return tok;
  }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> seq = to_bytes(text);
    while (seq.size() >= 2) {
      // Lowest-ranked merge present wins each round.
      int best_rank = -1;
      std::pair<int, int> best{};
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        auto it = ranks_.find({seq[i], seq[i + 1]});
        if (it != ranks_.end() && (best_rank < 0 || it->second < best_rank)) {
          best_rank = it->second;
          best = it->first;
        }
      }
      if (best_rank < 0) break;
      seq = merge_pair(seq, best, 256 + best_rank);
    }
    return seq;
  }

  std::string decode(std::span<const int> ids) const {
    std::string out;
    for (int id : ids) out += piece(id);
    return out;
  }

  const std::string& piece(int id) const {
    if (id < 0 || id >= static_cast<int>(pieces_.size())) {
      fail_data("TextTokenizer: token id out of range: " + std::to_string(id));
    }
    return pieces_[static_cast<std::size_t>(id)];
  }

  int vocab_size() const { return static_cast<int>(pieces_.size()); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail_data("TextTokenizer: cannot write " + path);
    out << "stlm-bpe v1\n" << merges_.size() << "\n";
    for (const auto& [a, b] : merges_) out << a << " " << b << "\n";
  }

  static TextTokenizer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("TextTokenizer: cannot read " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "stlm-bpe" || version != "v1") fail_data("TextTokenizer: bad file header");
    std::size_t n = 0;
    in >> n;
    TextTokenizer tok;
    for (std::size_t i = 0; i < n; ++i) {
      int a = 0, b = 0;
      if (!(in >> a >> b)) fail_data("TextTokenizer: truncated merge list");
      tok.merges_.emplace_back(a, b);
    }
    tok.rebuild_pieces();
    return tok;
  }

 private:
  static std::vector<int> to_bytes(std::string_view text) {
    std::vector<int> out;
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(static_cast<int>(c));
    return out;
  }

  static std::vector<int> merge_pair(const std::vector<int>& seq, std::pair<int, int> pair,
                                     int new_id) {
    std::vector<int> out;
    out.reserve(seq.size());
    std::size_t i = 0;
    while (i < seq.size()) {
      if (i + 1 < seq.size() && seq[i] == pair.first && seq[i + 1] == pair.second) {
        out.push_back(new_id);
        i += 2;
      } else {
        out.push_back(seq[i]);
        ++i;
      }
    }
    return out;
  }

  void rebuild_pieces() {
    pieces_.clear();
    pieces_.reserve(256 + merges_.size());
    for (int b = 0; b < 256; ++b) pieces_.push_back(std::string(1, static_cast<char>(b)));
    ranks_.clear();
    for (std::size_t r = 0; r < merges_.size(); ++r) {
      const auto& [a, b] = merges_[r];
      if (a < 0 || b < 0 || a >= static_cast<int>(pieces_.size()) ||
          b >= static_cast<int>(pieces_.size())) {
        fail_data("TextTokenizer: merge rule references unknown token");
      }
      pieces_.push_back(pieces_[static_cast<std::size_t>(a)] + pieces_[static_cast<std::size_t>(b)]);
      ranks_[{a, b}] = static_cast<int>(r);
    }
  }

  std::vector<std::pair<int, int>> merges_;
  std::vector<std::string> pieces_;
  std::map<std::pair<int, int>, int> ranks_;
};

}  // namespace stlm
