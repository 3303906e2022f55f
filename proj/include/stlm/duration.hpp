#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/tokens.hpp"

namespace stlm {

// Run-length view of a phonetic stream: the deduplicated tokens plus how many
// raw frames each one covered.
struct DurationExtraction {
  SpeechTokenStream dedup;
  std::vector<int> counts;
};

inline DurationExtraction extract_durations(const SpeechTokenStream& raw,
                                            TokenKind kind = TokenKind::Phonetic) {
  DurationExtraction out;
  out.dedup.rates = raw.rates;
  for (const auto& t : raw.tokens) {
    if (t.kind != kind) fail_data("extract_durations: stream contains a foreign kind");
    if (!out.counts.empty() && out.dedup.tokens.back().id == t.id) {
      ++out.counts.back();
    } else {
      out.dedup.tokens.push_back(t);
      out.counts.push_back(1);
    }
  }
  return out;
}

// Smoothed per-id mean run lengths with a global-mean fallback for ids never
// seen in training.
class DurationTable {
 public:
  struct Entry {
    double mean = 1.0;   // smoothed mean run length
    std::int64_t runs = 0;
  };

  static DurationTable train(const std::vector<SpeechTokenStream>& corpus,
                             TokenKind kind = TokenKind::Phonetic) {
    std::map<int, std::pair<std::int64_t, std::int64_t>> sums;  // id -> (frames, runs)
    std::int64_t total_frames = 0, total_runs = 0;
    for (const auto& raw : corpus) {
      auto ext = extract_durations(raw, kind);
      for (std::size_t i = 0; i < ext.counts.size(); ++i) {
        auto& [frames, runs] = sums[ext.dedup.tokens[i].id];
        frames += ext.counts[i];
        runs += 1;
        total_frames += ext.counts[i];
        total_runs += 1;
      }
    }
    if (total_runs == 0) fail_data("DurationTable: empty corpus");

    DurationTable table;
    table.global_mean_ = static_cast<double>(total_frames) / static_cast<double>(total_runs);
    table.total_runs_ = total_runs;
    for (const auto& [id, fr] : sums) {
      // Add-one smoothing toward the global mean: one pseudo-run of global
      // mean length.
      Entry e;
      e.runs = fr.second;
      e.mean = (static_cast<double>(fr.first) + table.global_mean_) /
               (static_cast<double>(fr.second) + 1.0);
      table.entries_[id] = e;
    }
    return table;
  }

  double predict(int id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? global_mean_ : it->second.mean;
  }

  double global_mean() const { return global_mean_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<int, Entry>& entries() const { return entries_; }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail_data("cannot write duration table: " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", global_mean_);
    out << "stlm-durations v1\nglobal " << buf << " " << total_runs_ << "\n";
    for (const auto& [id, e] : entries_) {
      std::snprintf(buf, sizeof buf, "%.17g", e.mean);
      out << id << " " << buf << " " << e.runs << "\n";
    }
  }

  static DurationTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("cannot read duration table: " + path);
    std::string magic, version, label;
    in >> magic >> version >> label;
    if (magic != "stlm-durations" || version != "v1" || label != "global") {
      fail_data("duration table: bad header in " + path);
    }
    DurationTable table;
    if (!(in >> table.global_mean_ >> table.total_runs_)) fail_data("duration table: bad global line");
    int id = 0;
    Entry e;
    while (in >> id >> e.mean >> e.runs) table.entries_[id] = e;
    return table;
  }

 private:
  std::map<int, Entry> entries_;
  double global_mean_ = 1.0;
  std::int64_t total_runs_ = 0;
};

// One output frame of the expanded stream with the pitch/style ids whose
// interval covers it.
struct ExpandedFrame {
  Rational time;
  int phonetic_id = 0;
  std::optional<int> pitch_id;
  std::optional<int> style_id;
};

struct ExpandResult {
  SpeechTokenStream merged;          // expanded phonetic + pitch + style tokens
  std::vector<ExpandedFrame> frames; // one record per expanded phonetic frame
  int clamped_counts = 0;            // predictions that had to be raised to 1
};

inline int round_half_away(double x) {
  return static_cast<int>(x < 0 ? std::ceil(x - 0.5) : std::floor(x + 0.5));
}

namespace detail {

// Id of the last token whose time is <= t, under half-open interval cover.
inline std::optional<int> covering_id(const std::vector<SpeechToken>& tokens, const Rational& t) {
  std::optional<int> id;
  for (const auto& tok : tokens) {
    if (tok.time <= t) id = tok.id;
    else break;
  }
  return id;
}

}  // namespace detail

// Repeats each deduplicated phonetic token per its duration (explicit counts
// when given, otherwise table predictions rounded half away from zero and
// clamped to >= 1), lays the repeats on consecutive frames of the phonetic
// rate, annotates each frame with the covering pitch/style tokens, and merges
// everything back into one timestamp-sorted stream.
inline ExpandResult expand(const SpeechTokenStream& dedup,
                           const DurationTable* table,
                           const std::vector<int>* explicit_counts,
                           const SpeechTokenStream& pitch,
                           const SpeechTokenStream& style) {
  if (explicit_counts != nullptr && explicit_counts->size() != dedup.size()) {
    fail_data("expand: explicit counts do not match stream length");
  }
  if (table == nullptr && explicit_counts == nullptr) {
    fail_config("expand: need a duration table or explicit counts");
  }

  ExpandResult out;
  SpeechTokenStream expanded;
  expanded.rates = dedup.rates;
  const Rational rate = dedup.rates.phonetic;
  std::int64_t frame = 0;
  for (std::size_t i = 0; i < dedup.tokens.size(); ++i) {
    const auto& tok = dedup.tokens[i];
    if (tok.kind != TokenKind::Phonetic) fail_data("expand: stream must be phonetic");
    int count = explicit_counts != nullptr
                    ? (*explicit_counts)[i]
                    : round_half_away(table->predict(tok.id));
    if (count < 1) {
      count = 1;
      ++out.clamped_counts;
    }
    for (int r = 0; r < count; ++r) {
      const Rational t = Rational::from_frame(frame, rate);
      expanded.tokens.push_back(SpeechToken{TokenKind::Phonetic, tok.id, t});
      out.frames.push_back(ExpandedFrame{t, tok.id, detail::covering_id(pitch.tokens, t),
                                         detail::covering_id(style.tokens, t)});
      ++frame;
    }
  }
  out.merged = merge_streams(expanded, pitch, style);
  return out;
}

inline ExpandResult expand_with_counts(const SpeechTokenStream& dedup, const std::vector<int>& counts,
                                       const SpeechTokenStream& pitch = {},
                                       const SpeechTokenStream& style = {}) {
  return expand(dedup, nullptr, &counts, pitch, style);
}

inline ExpandResult expand_with_table(const SpeechTokenStream& dedup, const DurationTable& table,
                                      const SpeechTokenStream& pitch = {},
                                      const SpeechTokenStream& style = {}) {
  return expand(dedup, &table, nullptr, pitch, style);
}

}  // namespace stlm
