#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "arud/error.hpp"

namespace arud {

struct EmptyCorpus : Error {
  using Error::Error;
};
struct EmptyText : Error {
  using Error::Error;
};
struct MalformedArpa : Error {
  using Error::Error;
};

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

struct NGramEntry {
  double log10_prob = 0.0;
  std::optional<double> log10_backoff;
};

// Backoff word n-gram model. Keys are token sequences joined with a single
// space; <s> is never predicted (its unigram carries the conventional -99).
class NGramModel {
 public:
  NGramModel() = default;

  int order() const { return order_; }
  const std::map<std::string, NGramEntry>& grams(int k) const { return grams_[k - 1]; }
  const std::unordered_set<std::string>& vocabulary() const { return vocab_; }
  bool in_vocabulary(const std::string& word) const { return vocab_.count(word) > 0; }

  // Longest-match backoff query; OOV words map to <unk>.
  double score(const std::vector<std::string>& history, const std::string& word) const;

  // 10^(-mean log10 P) over the tokens of `text` plus </s>, history padded
  // with <s>. Throws EmptyText.
  double perplexity(const std::string& text) const;

  static NGramModel train(const std::vector<std::string>& corpus, int order,
                          int min_count = 1);

  void write_arpa(std::ostream& out) const;
  static NGramModel read_arpa(std::istream& in);
  void save(const std::string& path) const;
  static NGramModel load(const std::string& path);

 private:
  friend NGramModel train_impl(const std::vector<std::string>&, int, int);
  int order_ = 0;
  std::vector<std::map<std::string, NGramEntry>> grams_;  // [k-1] -> entries
  std::unordered_set<std::string> vocab_;                 // includes <s>, </s>, <unk>

  void rebuild_vocab();
};

// Shallow-fusion weights: total = ln P_ctc + alpha * ln P_lm + beta * words.
struct FusionConfig {
  double alpha = 0.5;
  double beta = 1.0;
};

}  // namespace arud
