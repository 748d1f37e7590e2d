#include "arud/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "arud/metrics.hpp"

namespace arud {

namespace {

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool starts_with_bos(const std::string& key) {
  return key.rfind("<s>", 0) == 0 && (key.size() == 3 || key[3] == ' ');
}

// D = n1 / (n1 + 2 n2) from count-of-count statistics; 0.75 when degenerate.
double discount_from_counts(const std::map<std::string, long>& counts) {
  long n1 = 0, n2 = 0;
  for (const auto& [key, c] : counts) {
    if (starts_with_bos(key)) continue;
    if (c == 1) ++n1;
    if (c == 2) ++n2;
  }
  if (n1 == 0) return 0.75;
  double d = static_cast<double>(n1) / (n1 + 2.0 * n2);
  if (d <= 0.0 || d >= 1.0) return 0.75;
  return d;
}

}  // namespace

NGramModel NGramModel::train(const std::vector<std::string>& corpus, int order,
                             int min_count) {
  if (order < 1) throw Error("order must be >= 1");
  std::vector<std::vector<std::string>> sentences;
  std::size_t longest = 0;
  for (const auto& line : corpus) {
    auto tokens = whitespace_tokens(line);
    if (tokens.empty()) continue;
    longest = std::max(longest, tokens.size());
    sentences.push_back(std::move(tokens));
  }
  if (sentences.empty()) throw EmptyCorpus("no non-empty sentences in corpus");
  if (static_cast<std::size_t>(order) > longest + 1) {
    std::cerr << "warning: order " << order << " exceeds longest sentence + 1\n";
  }

  // Optional vocabulary pruning: rare words become <unk> before counting.
  if (min_count > 1) {
    std::map<std::string, long> word_counts;
    for (const auto& s : sentences)
      for (const auto& w : s) ++word_counts[w];
    for (auto& s : sentences)
      for (auto& w : s)
        if (word_counts[w] < min_count) w = kUnk;
  }

  // Raw counts per level over <s> w1..wm </s>.
  std::vector<std::map<std::string, long>> raw(order);
  for (const auto& s : sentences) {
    std::vector<std::string> padded;
    padded.reserve(s.size() + 2);
    padded.push_back(kBos);
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEos);
    for (int k = 1; k <= order; ++k) {
      if (padded.size() < static_cast<std::size_t>(k)) continue;
      for (std::size_t i = 0; i + k <= padded.size(); ++i) {
        ++raw[k - 1][join(padded, i, i + k)];
      }
    }
  }

  // Kneser-Ney adjusted counts: continuation counts for levels below the
  // top, raw counts at the top and for grams starting with <s>.
  std::vector<std::map<std::string, long>> adj(order);
  adj[order - 1] = raw[order - 1];
  for (int k = order - 1; k >= 1; --k) {
    auto& level = adj[k - 1];
    for (const auto& [key, c] : raw[k - 1]) {
      if (starts_with_bos(key)) level[key] = c;
    }
    for (const auto& [key, c] : raw[k]) {
      // key = "v g..."; strip the leading token to get the continued gram
      std::size_t sp = key.find(' ');
      std::string suffix = key.substr(sp + 1);
      if (!starts_with_bos(suffix)) ++level[suffix];
    }
  }

  std::vector<double> discount(order);
  for (int k = 1; k <= order; ++k) discount[k - 1] = discount_from_counts(adj[k - 1]);

  // Predictable vocabulary: corpus words + </s> + <unk>, never <s>.
  std::unordered_set<std::string> vpred;
  for (const auto& s : sentences)
    for (const auto& w : s) vpred.insert(w);
  vpred.insert(kEos);
  vpred.insert(kUnk);
  const double vsize = static_cast<double>(vpred.size());

  // Unigram distribution, interpolated with the uniform distribution so the
  // leftover mass lands on <unk> and sums are exact.
  double denom1 = 0.0;
  long types1 = 0;
  for (const auto& [key, c] : adj[0]) {
    if (key == kBos) continue;
    denom1 += static_cast<double>(c);
    if (c > 0) ++types1;
  }
  const double d1 = discount[0];
  const double uniform_mass = d1 * static_cast<double>(types1) / denom1;

  std::map<std::string, double> prob;  // space-joined gram -> linear probability
  for (const auto& w : vpred) {
    double c = 0.0;
    auto it = adj[0].find(w);
    if (it != adj[0].end()) c = static_cast<double>(it->second);
    prob[w] = std::max(c - d1, 0.0) / denom1 + uniform_mass / vsize;
  }

  // Higher orders: interpolate level k with level k-1; the stored value is
  // the fully interpolated probability and the backoff weight is gamma(h).
  std::map<std::string, double> backoff;  // history -> gamma
  for (int k = 2; k <= order; ++k) {
    const auto& level = adj[k - 1];
    const double dk = discount[k - 1];
    // history sums and type counts
    std::map<std::string, std::pair<double, long>> hist;  // h -> (sum, types)
    for (const auto& [key, c] : level) {
      std::size_t sp = key.rfind(' ');
      std::string h = key.substr(0, sp);
      auto& e = hist[h];
      e.first += static_cast<double>(c);
      e.second += 1;
    }
    for (const auto& [h, e] : hist) {
      backoff[h] = dk * static_cast<double>(e.second) / e.first;
    }
    for (const auto& [key, c] : level) {
      std::size_t sp = key.rfind(' ');
      std::string h = key.substr(0, sp);
      std::string w = key.substr(sp + 1);
      if (w == kBos) continue;  // <s> is never predicted
      const auto& e = hist.at(h);
      // Lower-order probability of w given the shortened history. The suffix
      // of an observed gram is itself an observed gram, so the lookup hits.
      std::size_t hsp = h.find(' ');
      std::string lower_key =
          (k == 2) ? w : h.substr(hsp + 1) + ' ' + w;
      auto pit = prob.find(lower_key);
      if (pit == prob.end()) {
        throw Error("internal: missing lower-order gram '" + lower_key + "'");
      }
      double p_low = pit->second;
      double gamma = dk * static_cast<double>(e.second) / e.first;
      prob[key] = std::max(static_cast<double>(c) - dk, 0.0) / e.first +
                  gamma * p_low;
    }
  }

  NGramModel model;
  model.order_ = order;
  model.grams_.resize(order);
  const double ln10_guard = 1e-300;
  for (const auto& [key, p] : prob) {
    int k = 1 + static_cast<int>(std::count(key.begin(), key.end(), ' '));
    NGramEntry entry;
    entry.log10_prob = std::log10(std::max(p, ln10_guard));
    model.grams_[k - 1][key] = entry;
  }
  // <s> unigram: conventional placeholder probability
  if (order >= 1) {
    model.grams_[0][kBos] = NGramEntry{-99.0, std::nullopt};
  }
  // Backoff weights for every stored gram below the top order.
  for (int k = 1; k < order; ++k) {
    for (auto& [key, entry] : model.grams_[k - 1]) {
      auto it = backoff.find(key);
      double bow = (it != backoff.end()) ? it->second : 1.0;
      entry.log10_backoff = std::log10(std::max(bow, ln10_guard));
    }
  }
  model.vocab_ = std::move(vpred);
  model.vocab_.insert(kBos);
  return model;
}

double NGramModel::score(const std::vector<std::string>& history,
                         const std::string& word) const {
  std::string w = in_vocabulary(word) && word != kBos ? word : std::string(kUnk);
  // truncate and map history
  std::vector<std::string> h;
  std::size_t start = history.size() >= static_cast<std::size_t>(order_) - 1 &&
                              order_ >= 1
                          ? history.size() - (order_ - 1)
                          : 0;
  for (std::size_t i = start; i < history.size(); ++i) {
    const auto& t = history[i];
    h.push_back(in_vocabulary(t) ? t : std::string(kUnk));
  }

  double bow_sum = 0.0;
  while (true) {
    std::string key = h.empty() ? w : join(h, 0, h.size()) + ' ' + w;
    int k = static_cast<int>(h.size()) + 1;
    auto it = grams_[k - 1].find(key);
    if (it != grams_[k - 1].end()) {
      return bow_sum + it->second.log10_prob;
    }
    if (h.empty()) {
      // <unk> always has a unigram entry; only reachable if w untracked
      auto uit = grams_[0].find(kUnk);
      return bow_sum + (uit != grams_[0].end() ? uit->second.log10_prob : -99.0);
    }
    std::string hkey = join(h, 0, h.size());
    auto hit = grams_[h.size() - 1].find(hkey);
    if (hit != grams_[h.size() - 1].end() && hit->second.log10_backoff) {
      bow_sum += *hit->second.log10_backoff;
    }
    h.erase(h.begin());
  }
}

double NGramModel::perplexity(const std::string& text) const {
  auto tokens = whitespace_tokens(text);
  if (tokens.empty()) throw EmptyText("empty text");
  std::vector<std::string> history{kBos};
  double sum = 0.0;
  for (const auto& t : tokens) {
    sum += score(history, t);
    history.push_back(in_vocabulary(t) ? t : std::string(kUnk));
  }
  sum += score(history, kEos);
  double n = static_cast<double>(tokens.size() + 1);
  return std::pow(10.0, -sum / n);
}

void NGramModel::write_arpa(std::ostream& out) const {
  char buf[64];
  out << "\\data\\\n";
  for (int k = 1; k <= order_; ++k) {
    out << "ngram " << k << '=' << grams_[k - 1].size() << '\n';
  }
  for (int k = 1; k <= order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& [key, entry] : grams_[k - 1]) {
      std::snprintf(buf, sizeof(buf), "%.6f", entry.log10_prob);
      out << buf << '\t' << key;
      if (entry.log10_backoff) {
        std::snprintf(buf, sizeof(buf), "%.6f", *entry.log10_backoff);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

namespace {

double parse_log_value(const std::string& field, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw MalformedArpa("line " + std::to_string(line_no) +
                        ": non-numeric field '" + field + "'");
  }
}

}  // namespace

NGramModel NGramModel::read_arpa(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool pushed_back = false;
  auto next_line = [&](bool required) -> bool {
    if (pushed_back) {
      pushed_back = false;
      return true;
    }
    if (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ++line_no;
      return true;
    }
    if (required) throw MalformedArpa("unexpected end of file at line " +
                                      std::to_string(line_no));
    return false;
  };
  auto push_back_line = [&] { pushed_back = true; };

  // header
  bool found_data = false;
  while (next_line(true)) {
    if (line == "\\data\\") {
      found_data = true;
      break;
    }
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
      throw MalformedArpa("line " + std::to_string(line_no) +
                          ": expected \\data\\ header");
    }
  }
  if (!found_data) throw MalformedArpa("missing \\data\\ header");

  std::vector<std::size_t> declared;
  while (next_line(true)) {
    if (line.empty()) break;
    if (line.rfind("ngram ", 0) != 0) {
      throw MalformedArpa("line " + std::to_string(line_no) +
                          ": expected 'ngram k=N'");
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw MalformedArpa("line " + std::to_string(line_no) +
                          ": expected 'ngram k=N'");
    }
    int k = static_cast<int>(parse_log_value(line.substr(6, eq - 6), line_no));
    std::size_t n = static_cast<std::size_t>(
        parse_log_value(line.substr(eq + 1), line_no));
    if (k != static_cast<int>(declared.size()) + 1) {
      throw MalformedArpa("line " + std::to_string(line_no) +
                          ": out-of-order ngram declaration");
    }
    declared.push_back(n);
  }
  if (declared.empty()) throw MalformedArpa("no ngram declarations");

  NGramModel model;
  model.order_ = static_cast<int>(declared.size());
  model.grams_.resize(model.order_);

  for (int k = 1; k <= model.order_; ++k) {
    std::string section = "\\" + std::to_string(k) + "-grams:";
    bool found = false;
    while (next_line(true)) {
      if (line == section) {
        found = true;
        break;
      }
      if (!line.empty()) {
        throw MalformedArpa("line " + std::to_string(line_no) + ": expected " +
                            section);
      }
    }
    if (!found) throw MalformedArpa("missing section " + section);
    std::size_t read_count = 0;
    while (next_line(true)) {
      if (line.empty()) break;
      if (line[0] == '\\') {
        push_back_line();
        break;
      }
      std::vector<std::string> fields;
      std::size_t pos = 0;
      while (true) {
        std::size_t tab = line.find('\t', pos);
        fields.push_back(line.substr(pos, tab == std::string::npos
                                              ? std::string::npos
                                              : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
      }
      if (fields.size() < 2 || fields.size() > 3) {
        throw MalformedArpa("line " + std::to_string(line_no) +
                            ": expected 2 or 3 tab-separated fields");
      }
      NGramEntry entry;
      entry.log10_prob = parse_log_value(fields[0], line_no);
      if (fields.size() == 3) {
        entry.log10_backoff = parse_log_value(fields[2], line_no);
      }
      const std::string& key = fields[1];
      int token_count = 1 + static_cast<int>(std::count(key.begin(), key.end(), ' '));
      if (token_count != k) {
        throw MalformedArpa("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(k) + " tokens");
      }
      model.grams_[k - 1][key] = entry;
      ++read_count;
    }
    if (read_count != declared[k - 1]) {
      throw MalformedArpa("line " + std::to_string(line_no) + ": section " +
                          std::to_string(k) + "-grams lists " +
                          std::to_string(read_count) + " entries, header claims " +
                          std::to_string(declared[k - 1]));
    }
  }

  // trailer
  bool ended = false;
  while (next_line(false)) {
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    if (!line.empty()) {
      throw MalformedArpa("line " + std::to_string(line_no) +
                          ": expected \\end\\");
    }
  }
  if (!ended) throw MalformedArpa("missing \\end\\ marker");

  // prefix property
  for (int k = 2; k <= model.order_; ++k) {
    for (const auto& [key, entry] : model.grams_[k - 1]) {
      (void)entry;
      std::size_t sp = key.rfind(' ');
      std::string prefix = key.substr(0, sp);
      if (model.grams_[k - 2].find(prefix) == model.grams_[k - 2].end()) {
        throw MalformedArpa("missing prefix '" + prefix + "' for n-gram '" +
                            key + "'");
      }
    }
  }
  model.rebuild_vocab();
  return model;
}

void NGramModel::rebuild_vocab() {
  vocab_.clear();
  for (const auto& [key, entry] : grams_[0]) {
    (void)entry;
    vocab_.insert(key);
  }
  vocab_.insert(kBos);
  vocab_.insert(kEos);
  vocab_.insert(kUnk);
}

void NGramModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_arpa(out);
}

NGramModel NGramModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_arpa(in);
}

}  // namespace arud
