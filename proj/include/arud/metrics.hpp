#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arud/error.hpp"

namespace arud {

struct EmptyReference : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct UnknownLabel : Error {
  using Error::Error;
};

struct EditCounts {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
};

// Levenshtein with unit costs. Tie order during backtrace: substitution,
// then deletion, then insertion.
template <typename T>
EditCounts edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      std::size_t del = at(i - 1, j) + 1;
      std::size_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min(sub, std::min(del, ins));
    }
  }
  EditCounts counts;
  counts.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) &&
        ref[i - 1] == hyp[j - 1]) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      ++counts.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

struct TranscriptionScore {
  double wer = 0.0;
  double cer = 0.0;
  EditCounts word_edits;
  EditCounts char_edits;
  std::size_t ref_words = 0;
  std::size_t ref_chars = 0;

  // Associative merge of scores over disjoint utterance sets.
  void merge(const TranscriptionScore& other);
};

std::vector<std::string> whitespace_tokens(std::string_view text);

double wer(std::string_view ref, std::string_view hyp);
double cer(std::string_view ref, std::string_view hyp);
TranscriptionScore transcription_score(std::string_view ref, std::string_view hyp);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::uint64_t>> counts;  // row = truth, col = predicted

  explicit ConfusionMatrix(std::vector<std::string> label_set = {});
  void add(const std::string& truth, const std::string& predicted);
  void merge(const ConfusionMatrix& other);
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::size_t index_of(const std::string& label) const;
};

struct ClassStats {
  std::string label;
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;   // one-vs-rest, percent
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  double f1 = 0.0;         // percent
};

struct ClassReport {
  std::vector<ClassStats> per_class;
  double accuracy = 0.0;         // overall (micro), percent
  double macro_precision = 0.0;  // over classes present in truth, percent
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;  // truth-frequency weighted, percent
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::uint64_t total = 0;
};

ClassReport report_from_confusion(const ConfusionMatrix& cm);

struct ClassificationResult {
  ClassReport report;
  ConfusionMatrix confusion;
};

ClassificationResult classification_report(const std::vector<std::string>& truth,
                                           const std::vector<std::string>& predicted,
                                           const std::vector<std::string>& label_set);

// Flat key/value text rendering, percentages with 2 decimals.
std::string render_report_text(const ClassReport& report);

}  // namespace arud
