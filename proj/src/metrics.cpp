#include "arud/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "arud/text.hpp"

namespace arud {

void TranscriptionScore::merge(const TranscriptionScore& other) {
  word_edits.distance += other.word_edits.distance;
  word_edits.substitutions += other.word_edits.substitutions;
  word_edits.insertions += other.word_edits.insertions;
  word_edits.deletions += other.word_edits.deletions;
  char_edits.distance += other.char_edits.distance;
  char_edits.substitutions += other.char_edits.substitutions;
  char_edits.insertions += other.char_edits.insertions;
  char_edits.deletions += other.char_edits.deletions;
  ref_words += other.ref_words;
  ref_chars += other.ref_chars;
  wer = ref_words == 0 ? 0.0 : static_cast<double>(word_edits.distance) / ref_words;
  cer = ref_chars == 0 ? 0.0 : static_cast<double>(char_edits.distance) / ref_chars;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

TranscriptionScore transcription_score(std::string_view ref, std::string_view hyp) {
  auto ref_words = whitespace_tokens(ref);
  auto hyp_words = whitespace_tokens(hyp);
  if (ref_words.empty()) throw EmptyReference("empty reference text");

  std::u32string ref_u = utf8_decode(ref);
  std::u32string hyp_u = utf8_decode(hyp);
  std::vector<char32_t> ref_chars(ref_u.begin(), ref_u.end());
  std::vector<char32_t> hyp_chars(hyp_u.begin(), hyp_u.end());

  TranscriptionScore s;
  s.word_edits = edit_distance(ref_words, hyp_words);
  s.char_edits = edit_distance(ref_chars, hyp_chars);
  s.ref_words = ref_words.size();
  s.ref_chars = ref_chars.size();
  s.wer = static_cast<double>(s.word_edits.distance) / s.ref_words;
  s.cer = static_cast<double>(s.char_edits.distance) / s.ref_chars;
  return s;
}

double wer(std::string_view ref, std::string_view hyp) {
  return transcription_score(ref, hyp).wer;
}

double cer(std::string_view ref, std::string_view hyp) {
  return transcription_score(ref, hyp).cer;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> label_set)
    : labels(std::move(label_set)),
      counts(labels.size(), std::vector<std::uint64_t>(labels.size(), 0)) {}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw UnknownLabel("unknown label: " + label);
  return static_cast<std::size_t>(it - labels.begin());
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted) {
  counts[index_of(truth)][index_of(predicted)] += 1;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels != labels) throw UnknownLabel("confusion matrix label sets differ");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      counts[i][j] += other.counts[i][j];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) t += counts[i][i];
  return t;
}

ClassReport report_from_confusion(const ConfusionMatrix& cm) {
  ClassReport report;
  const std::size_t n = cm.labels.size();
  const std::uint64_t total = cm.total();
  report.total = total;

  std::vector<std::uint64_t> row_sum(n, 0), col_sum(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      row_sum[i] += cm.counts[i][j];
      col_sum[j] += cm.counts[i][j];
    }

  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double wsum_p = 0, wsum_r = 0, wsum_f1 = 0;
  std::size_t present = 0;

  for (std::size_t i = 0; i < n; ++i) {
    ClassStats s;
    s.label = cm.labels[i];
    s.tp = cm.counts[i][i];
    s.fn = row_sum[i] - s.tp;
    s.fp = col_sum[i] - s.tp;
    s.tn = total - s.tp - s.fn - s.fp;
    auto pct = [](std::uint64_t num, std::uint64_t den) {
      return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
    };
    s.accuracy = pct(s.tp + s.tn, total);
    s.precision = pct(s.tp, s.tp + s.fp);
    s.recall = pct(s.tp, s.tp + s.fn);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    if (row_sum[i] > 0) {
      ++present;
      macro_p += s.precision;
      macro_r += s.recall;
      macro_f1 += s.f1;
      wsum_p += s.precision * static_cast<double>(row_sum[i]);
      wsum_r += s.recall * static_cast<double>(row_sum[i]);
      wsum_f1 += s.f1 * static_cast<double>(row_sum[i]);
    }
    report.per_class.push_back(s);
  }

  report.accuracy = total == 0 ? 0.0
                               : 100.0 * static_cast<double>(cm.trace()) /
                                     static_cast<double>(total);
  if (present > 0) {
    report.macro_precision = macro_p / present;
    report.macro_recall = macro_r / present;
    report.macro_f1 = macro_f1 / present;
  }
  if (total > 0) {
    report.weighted_precision = wsum_p / static_cast<double>(total);
    report.weighted_recall = wsum_r / static_cast<double>(total);
    report.weighted_f1 = wsum_f1 / static_cast<double>(total);
  }
  return report;
}

ClassificationResult classification_report(const std::vector<std::string>& truth,
                                           const std::vector<std::string>& predicted,
                                           const std::vector<std::string>& label_set) {
  if (truth.size() != predicted.size()) {
    throw LengthMismatch("truth and prediction lists differ in length");
  }
  ConfusionMatrix cm(label_set);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return ClassificationResult{report_from_confusion(cm), std::move(cm)};
}

std::string render_report_text(const ClassReport& report) {
  std::string out;
  char buf[128];
  auto kv = [&](const std::string& key, double value) {
    std::snprintf(buf, sizeof(buf), "%s\t%.2f\n", key.c_str(), value);
    out += buf;
  };
  kv("accuracy", report.accuracy);
  kv("macro_precision", report.macro_precision);
  kv("macro_recall", report.macro_recall);
  kv("macro_f1", report.macro_f1);
  kv("weighted_precision", report.weighted_precision);
  kv("weighted_recall", report.weighted_recall);
  kv("weighted_f1", report.weighted_f1);
  for (const auto& s : report.per_class) {
    kv(s.label + ".accuracy", s.accuracy);
    kv(s.label + ".precision", s.precision);
    kv(s.label + ".recall", s.recall);
    kv(s.label + ".f1", s.f1);
  }
  return out;
}

}  // namespace arud
