// Acceptance suite. Each criterion prints one pass/fail line; the process
// exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arud/bench.hpp"
#include "arud/ctc.hpp"
#include "arud/lm.hpp"
#include "arud/meter.hpp"
#include "arud/metrics.hpp"
#include "arud/text.hpp"

using namespace arud;

namespace {

int failures = 0;

void verdict(int number, bool ok, const std::string& name,
             const std::string& detail) {
  std::printf("criterion %d %-4s %s (%s)\n", number, ok ? "PASS" : "FAIL",
              name.c_str(), detail.c_str());
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

EmissionMatrix random_emission(std::mt19937& rng, std::size_t frames,
                               std::size_t symbols) {
  static const std::vector<std::string> names = {kBlank, "a", "b", " "};
  EmissionMatrix e;
  e.alphabet.assign(names.begin(), names.begin() + symbols);
  e.frames = frames;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> row(symbols);
    double total = 0.0;
    for (double& p : row) total += (p = u(rng));
    for (double p : row) e.values.push_back(std::log(p / total));
  }
  return e;
}

// independent quadratic DP, distance only
std::size_t dp_distance(const std::vector<std::string>& a,
                        const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t brute_distance(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<std::string> a1(a.begin() + 1, a.end());
  std::vector<std::string> b1(b.begin() + 1, b.end());
  std::size_t sub = brute_distance(a1, b1) + (a[0] == b[0] ? 0 : 1);
  std::size_t del = brute_distance(a1, b) + 1;
  std::size_t ins = brute_distance(a, b1) + 1;
  return std::min({sub, del, ins});
}

std::string mnemonic_hemistich(const MeterTemplate& tmpl,
                               const std::vector<std::size_t>& choice) {
  std::string out;
  for (std::size_t f = 0; f < tmpl.feet_text.size(); ++f) {
    if (!out.empty()) out += ' ';
    out += tmpl.feet_text[f][choice.empty() ? 0 : choice[f]];
  }
  return out;
}

bool same_classification(const ClassificationResult& x,
                         const ClassificationResult& y) {
  return x.confusion.labels == y.confusion.labels &&
         x.confusion.counts == y.confusion.counts;
}

void criterion_1() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(1001);
  std::uniform_int_distribution<std::size_t> frames(1, 6), symbols(2, 4);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto e = random_emission(rng, frames(rng), symbols(rng));
    auto oracle = brute_force_decode(e);
    auto beam = beam_decode(e, 4096);
    if (beam.text != oracle.text ||
        std::abs(beam.log_score - oracle.log_score) > 1e-9) {
      ++mismatches;
    }
  }
  double elapsed = seconds_since(start);
  verdict(1, mismatches == 0 && elapsed < 10.0, "decoder oracle equivalence",
          "200 emissions, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(elapsed).substr(0, 4) + " s");
}

void criterion_2() {
  std::mt19937 rng(1002);
  std::uniform_int_distribution<int> len(0, 12), short_len(0, 6), tok(0, 2);
  auto random_tokens = [&](int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::string(1, char('a' + tok(rng))));
    return out;
  };
  auto join = [](const std::vector<std::string>& toks) {
    std::string s;
    for (const auto& t : toks) {
      if (!s.empty()) s += ' ';
      s += t;
    }
    return s;
  };
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    bool small = trial % 4 == 0;
    auto ref = random_tokens(small ? short_len(rng) : len(rng));
    auto hyp = random_tokens(small ? short_len(rng) : len(rng));
    auto counts = edit_distance(ref, hyp);
    if (counts.distance != dp_distance(ref, hyp)) ++bad;
    if (small && counts.distance != brute_distance(ref, hyp)) ++bad;
    if (!ref.empty()) {
      double w = wer(join(ref), join(hyp));
      if (w != double(counts.distance) / double(ref.size())) ++bad;
    }
  }
  verdict(2, bad == 0, "metric oracle equivalence",
          "1000 pairs, " + std::to_string(bad) + " mismatches");
}

void criterion_3() {
  std::mt19937 rng(1003);
  std::vector<std::string> words;
  for (char a = 'a'; a <= 'f'; ++a)
    for (char b = 'a'; b <= 'e'; ++b) words.push_back(std::string{a, b});
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<int> len(3, 6);
  std::vector<std::string> corpus;
  for (int i = 0; i < 1000; ++i) {
    std::string sentence;
    int n = len(rng);
    for (int j = 0; j < n; ++j) {
      if (j) sentence += ' ';
      sentence += words[pick(rng)];
    }
    corpus.push_back(sentence);
  }
  auto model = NGramModel::train(corpus, 4);

  std::vector<std::string> predictable;
  for (const auto& w : model.vocabulary())
    if (w != kBos) predictable.push_back(w);

  int bad_sums = 0, checked = 0;
  for (int k = 0; k < 4; ++k) {
    std::vector<std::vector<std::string>> histories;
    if (k == 0) {
      histories.push_back({});
    } else {
      for (const auto& [key, entry] : model.grams(k)) {
        std::vector<std::string> h;
        std::istringstream in(key);
        std::string tokn;
        while (in >> tokn) h.push_back(tokn);
        if (h.back() == kEos) continue;
        histories.push_back(std::move(h));
      }
      std::shuffle(histories.begin(), histories.end(), rng);
      if (histories.size() > 50) histories.resize(50);
    }
    for (const auto& h : histories) {
      double total = 0.0;
      for (const auto& w : predictable)
        total += std::pow(10.0, model.score(h, w));
      if (std::abs(total - 1.0) > 1e-6) ++bad_sums;
      ++checked;
    }
  }

  std::ostringstream first;
  model.write_arpa(first);
  std::istringstream reload(first.str());
  auto back = NGramModel::read_arpa(reload);
  std::ostringstream second;
  back.write_arpa(second);
  bool stable = first.str() == second.str();
  bool scores_exact = true;
  for (int k = 1; k <= 4; ++k) {
    if (back.grams(k).size() != model.grams(k).size()) scores_exact = false;
  }

  verdict(3, bad_sums == 0 && stable && scores_exact, "lm normalization",
          std::to_string(checked) + " histories, " + std::to_string(bad_sums) +
              " bad sums, arpa " + (stable ? "stable" : "UNSTABLE"));
}

void criterion_4() {
  int matched = 0;
  for (const auto& tmpl : build_templates()) {
    std::string h = mnemonic_hemistich(tmpl, {});
    auto result = classify_scansion(parse_verse(h + " # " + h));
    if (result.label == tmpl.meter && result.score == 0.0) ++matched;
  }

  std::mt19937 rng(1004);
  std::uniform_int_distribution<int> len(20, 30), bit(0, 1);
  int prose = 0;
  for (int t = 0; t < 50; ++t) {
    std::string bits;
    int n = len(rng);
    for (int i = 0; i < n; ++i) bits += char('0' + bit(rng));
    if (classify_patterns({bits}).label == MeterLabel::Prose) ++prose;
  }

  verdict(4, matched == 16 && prose >= 45, "scansion suite",
          std::to_string(matched) + "/16 mnemonics, " + std::to_string(prose) +
              "/50 prose");
}

std::vector<ManifestEntry> perturbed_manifest(int per_meter) {
  std::mt19937 rng(1005);
  std::vector<ManifestEntry> entries;
  for (const auto& tmpl : build_templates()) {
    for (int c = 0; c < per_meter; ++c) {
      std::vector<std::size_t> choice(tmpl.feet_text.size(), 0);
      if (c > 0) {
        // perturb one foot into one of its classical variants
        std::uniform_int_distribution<std::size_t> foot(0, choice.size() - 1);
        std::size_t f = foot(rng);
        if (tmpl.feet_text[f].size() > 1) {
          std::uniform_int_distribution<std::size_t> alt(
              1, tmpl.feet_text[f].size() - 1);
          choice[f] = alt(rng);
        }
      }
      std::string h = mnemonic_hemistich(tmpl, choice);
      ManifestEntry entry;
      entry.id = to_string(tmpl.meter) + "-" + std::to_string(c);
      entry.transcript = h + " # " + h;
      entry.meter = tmpl.meter;
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

void attach_emissions(std::vector<ManifestEntry>& entries, double noise,
                      std::uint64_t master, const std::string& tag) {
  std::vector<std::string> texts;
  for (const auto& e : entries) texts.push_back(*e.transcript);
  auto alphabet = make_alphabet(texts);
  auto dir = std::filesystem::temp_directory_path() / "arud-acceptance";
  std::filesystem::create_directories(dir);
  for (auto& entry : entries) {
    SynthConfig sc;
    sc.noise = noise;
    sc.seed = child_seed(master, "synth", entry.id);
    auto emission = synth_emission(*entry.transcript, alphabet, sc);
    auto path = (dir / (tag + "-" + entry.id + ".ctce")).string();
    save_emission(emission, path);
    entry.emission_path = path;
  }
}

void criterion_5() {
  auto start = std::chrono::steady_clock::now();
  auto entries = perturbed_manifest(10);  // 160 verses
  attach_emissions(entries, 0.015, 2024, "c5");

  RunConfig config;
  config.decoder = DecoderKind::Beam;
  config.beam_width = 8;
  auto report = evaluate(entries, config, true);
  double elapsed = seconds_since(start);

  double cer_pct = report.transcription ? report.transcription->cer * 100.0 : 100.0;
  double acc = report.classification ? report.classification->report.accuracy : 0.0;
  bool ok = cer_pct <= 5.0 && acc >= 85.0 && elapsed < 120.0;
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "160 verses, cer %.2f%%, accuracy %.2f%%, %zu unscorable, %.1f s",
                cer_pct, acc, report.unscorable, elapsed);
  verdict(5, ok, "synthetic pipeline robustness", detail);
}

void criterion_6() {
  // ambiguity suite: frequent two-char words; acoustics tilt the second
  // character toward a confusable that the model has never seen
  std::vector<std::string> corpus = {"ab cd", "ab ce", "ab cd", "cd ab",
                                     "ce ab", "ab cd"};
  auto lm = NGramModel::train(corpus, 2);
  FusionConfig fusion{1.5, 0.0};

  auto emission_for = [&](char wrong) {
    // truth "ab": first char clean, second ambiguous between 'b' and wrong
    std::vector<std::string> alphabet = {kBlank, " ", "a", "b", "c", "d", "e",
                                         std::string(1, wrong)};
    std::sort(alphabet.begin() + 1, alphabet.end());
    alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
    auto idx = [&](const std::string& s) {
      return std::size_t(std::find(alphabet.begin(), alphabet.end(), s) -
                         alphabet.begin());
    };
    EmissionMatrix e;
    e.alphabet = alphabet;
    e.frames = 2;
    e.values.assign(2 * alphabet.size(), std::log(0.01));
    auto set_row = [&](std::size_t t, std::size_t hot, double p,
                       std::size_t alt = 0, double q = 0.0) {
      double rest = (1.0 - p - q) / double(alphabet.size() - (q > 0 ? 2 : 1));
      for (std::size_t v = 0; v < alphabet.size(); ++v)
        e.at(t, v) = std::log(v == hot ? p : (q > 0 && v == alt ? q : rest));
    };
    set_row(0, idx("a"), 0.9);
    set_row(1, idx(std::string(1, wrong)), 0.42, idx("b"), 0.40);
    return e;
  };

  std::vector<char> confusables = {'q', 'r', 's', 't', 'u'};
  double wer_plain = 0.0, wer_fused = 0.0;
  for (char wrong : confusables) {
    auto e = emission_for(wrong);
    wer_plain += wer("ab", beam_decode(e, 64).text);
    wer_fused += wer("ab", beam_decode(e, 64, &lm, fusion).text);
  }
  wer_plain /= confusables.size();
  wer_fused /= confusables.size();
  char detail[96];
  std::snprintf(detail, sizeof(detail), "mean wer %.2f without lm, %.2f with",
                wer_plain, wer_fused);
  verdict(6, wer_fused < wer_plain, "lm fusion effect", detail);
}

void criterion_7() {
  std::mt19937 rng(1007);
  double max_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> dims(2, 8);
    std::size_t dim = dims(rng);
    LinearHead head = LinearHead::zeros(dim);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& w : head.weights) w = g(rng);
    for (double& b : head.bias) b = g(rng);
    std::vector<double> x(dim);
    for (double& v : x) v = g(rng);
    std::uniform_int_distribution<std::size_t> lab(0, kMeterCount - 1);
    std::size_t label = lab(rng);

    std::vector<double> gw(head.weights.size(), 0.0), gb(kMeterCount, 0.0);
    head_loss_grad(head, x, label, gw, gb);
    auto loss_at = [&](const LinearHead& h) {
      std::vector<double> sw(h.weights.size()), sb(kMeterCount);
      return head_loss_grad(h, x, label, sw, sb);
    };
    const double step = 1e-5;
    auto check_param = [&](double* param, double analytic) {
      double saved = *param;
      *param = saved + step;
      double up = loss_at(head);
      *param = saved - step;
      double down = loss_at(head);
      *param = saved;
      double fd = (up - down) / (2 * step);
      double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
    };
    for (std::size_t i = 0; i < head.weights.size(); ++i)
      check_param(&head.weights[i], gw[i]);
    for (std::size_t i = 0; i < head.bias.size(); ++i)
      check_param(&head.bias[i], gb[i]);
  }

  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<HeadSample> data;
  for (int i = 0; i < 40; ++i) {
    data.push_back({{1.0 + g(rng), g(rng)}, MeterLabel::Taweel});
    data.push_back({{-1.0 + g(rng), g(rng)}, MeterLabel::Kamel});
  }
  HeadTrainOptions opts;
  opts.epochs = 200;
  opts.learning_rate = 0.5;
  opts.seed = 17;
  auto trained = head_train(data, opts);
  int correct = 0;
  for (const auto& sample : data) {
    auto probs = head_forward(trained.head, sample.features);
    auto best = std::size_t(std::max_element(probs.begin(), probs.end()) -
                            probs.begin());
    if (best == std::size_t(sample.label)) ++correct;
  }

  char detail[96];
  std::snprintf(detail, sizeof(detail), "max grad error %.2e, train %d/%zu",
                max_rel, correct, data.size());
  verdict(7, max_rel < 1e-4 && correct == int(data.size()), "end-to-end head",
          detail);
}

void criterion_8() {
  auto base = perturbed_manifest(2);  // 32 verses
  RunConfig config;
  config.decoder = DecoderKind::Greedy;

  auto ablation = evaluate(base, config, false);
  double f1_ablation =
      ablation.classification ? ablation.classification->report.macro_f1 : 0.0;

  bool ordering = true, zero_equal = false;
  std::string detail = "ablation f1 " +
                       std::to_string(f1_ablation).substr(0, 6);
  for (double eps : {0.0, 0.05, 0.1}) {
    auto noisy = base;
    attach_emissions(noisy, eps, 3000 + int(eps * 100), "c8");
    auto report = evaluate(noisy, config, false);
    double f1 = report.classification ? report.classification->report.macro_f1
                                      : 0.0;
    if (eps == 0.0) {
      zero_equal = report.classification && ablation.classification &&
                   same_classification(*report.classification,
                                       *ablation.classification);
    } else if (f1 > f1_ablation + 1e-9) {
      ordering = false;
    }
    detail += ", eps " + std::to_string(eps).substr(0, 4) + " f1 " +
              std::to_string(f1).substr(0, 6);
  }
  verdict(8, ordering && zero_equal, "ablation consistency", detail);
}

void criterion_9() {
  auto entries = perturbed_manifest(2);
  attach_emissions(entries, 0.05, 4000, "c9");
  RunConfig config;
  config.decoder = DecoderKind::Greedy;
  config.seed = 99;
  auto a = report_json(evaluate(entries, config, false));
  auto b = report_json(evaluate(entries, config, true));
  verdict(9, a == b, "report reproducibility",
          a == b ? "byte-identical" : "reports differ");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
