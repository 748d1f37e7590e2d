#include "arud/meter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace arud {

const std::vector<std::string>& meter_names() {
  static const std::vector<std::string> names = {
      "Taweel",   "Madeed",   "Baseet",  "Wafer",    "Kamel",     "Hazaj",
      "Rajaz",    "Ramal",    "Saree",   "Munsareh", "Khafeef",   "Mudhare",
      "Muqtadeb", "Mujtath",  "Mutaqareb", "Mutadarak", "Prose"};
  return names;
}

const std::string& to_string(MeterLabel label) {
  return meter_names()[static_cast<std::size_t>(label)];
}

MeterLabel meter_from_string(const std::string& name) {
  const auto& names = meter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<MeterLabel>(i);
  }
  throw Error("unknown meter label: " + name);
}

MetricalPattern pattern_extract(std::span<const SoundUnit> sounds) {
  MetricalPattern pattern;
  pattern.bits.reserve(sounds.size());
  for (const auto& unit : sounds) {
    pattern.bits.push_back(unit.vowel == Vowel::None ? '0' : '1');
  }
  return pattern;
}

namespace {

// Diacritized tafila and common foot-local variants (zihafat); the first
// entry of each list is the base form.
const std::vector<std::string> kFaoolun = {
    "فَعُولُنْ",   // فَعُولُنْ
    "فَعُولُ"};              // فَعُولُ
const std::vector<std::string> kMafaeelun = {
    "مَفَاعِيلُنْ",  // مَفَاعِيلُنْ
    "مَفَاعِلُنْ",        // مَفَاعِلُنْ
    "مَفَاعِيلُ"};             // مَفَاعِيلُ
const std::vector<std::string> kMufaalatun = {
    "مُفَاعَلَتُنْ",  // مُفَاعَلَتُنْ
    "مُفَاعَلْتُنْ"}; // مُفَاعَلْتُنْ
const std::vector<std::string> kMutafaailun = {
    "مُتَفَاعِلُنْ",  // مُتَفَاعِلُنْ
    "مُتْفَاعِلُنْ"}; // مُتْفَاعِلُنْ
const std::vector<std::string> kFaailatun = {
    "فَاعِلَاتُنْ",  // فَاعِلَاتُنْ
    "فَعِلَاتُنْ",        // فَعِلَاتُنْ
    "فَاعِلَاتُ"};             // فَاعِلَاتُ
const std::vector<std::string> kFaailun = {
    "فَاعِلُنْ",  // فَاعِلُنْ
    "فَعِلُنْ"};       // فَعِلُنْ
const std::vector<std::string> kMustafilun = {
    "مُسْتَفْعِلُنْ",  // مُسْتَفْعِلُنْ
    "مُتَفْعِلُنْ",              // مُتَفْعِلُنْ
    "مُسْتَعِلُنْ"};             // مُسْتَعِلُنْ
const std::vector<std::string> kMafoolatu = {
    "مَفْعُولَاتُ",  // مَفْعُولَاتُ
    "مَعُولَاتُ",              // مَعُولَاتُ
    "مَفْعُلَاتُ",        // مَفْعُلَاتُ
    // hemistich-final form: the open tail is saturated into a long vowel,
    // which the other tafila families never need (they already end still)
    "مَفْعُولَاتُو"};

std::vector<std::string> foot_bits(const std::vector<std::string>& forms) {
  std::vector<std::string> bits;
  bits.reserve(forms.size());
  for (const auto& form : forms) {
    auto sounds = orthography_to_sound(form, Position::Internal);
    bits.push_back(pattern_extract(sounds).bits);
  }
  return bits;
}

MeterTemplate make_template(MeterLabel meter,
                            std::vector<std::vector<std::string>> feet_text) {
  MeterTemplate tmpl;
  tmpl.meter = meter;
  tmpl.feet_text = std::move(feet_text);
  for (const auto& forms : tmpl.feet_text) {
    tmpl.feet.push_back(foot_bits(forms));
    tmpl.base_pattern += tmpl.feet.back().front();
  }
  return tmpl;
}

std::vector<MeterTemplate> build_templates_impl() {
  std::vector<MeterTemplate> templates;
  templates.push_back(make_template(
      MeterLabel::Taweel, {kFaoolun, kMafaeelun, kFaoolun, kMafaeelun}));
  templates.push_back(make_template(
      MeterLabel::Madeed, {kFaailatun, kFaailun, kFaailatun}));
  templates.push_back(make_template(
      MeterLabel::Baseet, {kMustafilun, kFaailun, kMustafilun, kFaailun}));
  templates.push_back(make_template(
      MeterLabel::Wafer, {kMufaalatun, kMufaalatun, kFaoolun}));
  templates.push_back(make_template(
      MeterLabel::Kamel, {kMutafaailun, kMutafaailun, kMutafaailun}));
  templates.push_back(make_template(MeterLabel::Hazaj, {kMafaeelun, kMafaeelun}));
  templates.push_back(make_template(
      MeterLabel::Rajaz, {kMustafilun, kMustafilun, kMustafilun}));
  templates.push_back(make_template(
      MeterLabel::Ramal, {kFaailatun, kFaailatun, kFaailatun}));
  templates.push_back(make_template(
      MeterLabel::Saree, {kMustafilun, kMustafilun, kMafoolatu}));
  templates.push_back(make_template(
      MeterLabel::Munsareh, {kMustafilun, kMafoolatu, kMustafilun}));
  templates.push_back(make_template(
      MeterLabel::Khafeef, {kFaailatun, kMustafilun, kFaailatun}));
  templates.push_back(make_template(MeterLabel::Mudhare, {kMafaeelun, kFaailatun}));
  templates.push_back(make_template(MeterLabel::Muqtadeb, {kMafoolatu, kMustafilun}));
  templates.push_back(make_template(MeterLabel::Mujtath, {kMustafilun, kFaailatun}));
  templates.push_back(make_template(
      MeterLabel::Mutaqareb, {kFaoolun, kFaoolun, kFaoolun, kFaoolun}));
  templates.push_back(make_template(
      MeterLabel::Mutadarak, {kFaailun, kFaailun, kFaailun, kFaailun}));
  return templates;
}

}  // namespace

const std::vector<MeterTemplate>& build_templates() {
  static const std::vector<MeterTemplate> templates = build_templates_impl();
  return templates;
}

namespace {

struct Cost {
  int distance;
  int variants;
  bool operator<(const Cost& other) const {
    if (distance != other.distance) return distance < other.distance;
    return variants < other.variants;
  }
};

constexpr Cost kCostMax{1 << 29, 1 << 29};

// Extends a DP row (cost of consuming pattern prefixes) by one foot
// alternative. row[j] = best cost with the alternative fully matched against
// some suffix of pattern[0..j).
std::vector<Cost> extend_row(const std::vector<Cost>& row, const std::string& alt,
                             const std::string& pattern) {
  const std::size_t P = pattern.size();
  std::vector<Cost> cur = row;
  std::vector<Cost> nxt(P + 1);
  for (char c : alt) {
    nxt[0] = Cost{cur[0].distance + 1, cur[0].variants};
    for (std::size_t j = 1; j <= P; ++j) {
      Cost del{cur[j].distance + 1, cur[j].variants};
      Cost ins{nxt[j - 1].distance + 1, nxt[j - 1].variants};
      Cost sub{cur[j - 1].distance + (c == pattern[j - 1] ? 0 : 1),
               cur[j - 1].variants};
      nxt[j] = std::min(del, std::min(ins, sub));
    }
    cur = nxt;
  }
  return cur;
}

}  // namespace

FootMatch match_template(const MeterTemplate& tmpl, const std::string& bits) {
  const std::size_t P = bits.size();
  std::vector<Cost> row(P + 1);
  for (std::size_t j = 0; j <= P; ++j) row[j] = Cost{static_cast<int>(j), 0};

  for (const auto& alternatives : tmpl.feet) {
    std::vector<Cost> best(P + 1, kCostMax);
    for (std::size_t a = 0; a < alternatives.size(); ++a) {
      std::vector<Cost> candidate = extend_row(row, alternatives[a], bits);
      if (a > 0) {
        for (auto& c : candidate) c.variants += 1;
      }
      for (std::size_t j = 0; j <= P; ++j) best[j] = std::min(best[j], candidate[j]);
    }
    row = std::move(best);
  }
  return FootMatch{row[P].distance, row[P].variants};
}

ScanResult classify_patterns(const std::vector<std::string>& patterns,
                             double prose_threshold) {
  const auto& templates = build_templates();
  ScanResult result;
  double best_distance = 0.0;
  int best_variants = 0;
  std::size_t best_index = templates.size();

  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto& tmpl = templates[i];
    double sum = 0.0;
    int variants = 0;
    for (const auto& bits : patterns) {
      FootMatch m = match_template(tmpl, bits);
      sum += static_cast<double>(m.distance) /
             static_cast<double>(tmpl.base_pattern.size());
      variants += m.variants;
    }
    double mean = patterns.empty() ? 1.0 : sum / static_cast<double>(patterns.size());
    result.nearest.emplace_back(tmpl.meter, mean);
    if (best_index == templates.size() || mean < best_distance - 1e-12 ||
        (std::abs(mean - best_distance) <= 1e-12 && variants < best_variants)) {
      best_distance = mean;
      best_variants = variants;
      best_index = i;
    }
  }
  std::stable_sort(result.nearest.begin(), result.nearest.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  result.score = best_distance;
  result.label = best_distance > prose_threshold ? MeterLabel::Prose
                                                 : templates[best_index].meter;
  return result;
}

ScanResult classify_scansion(const Verse& verse, const ScanConfig& config) {
  std::vector<std::string> patterns;
  for (const auto& hemistich : verse.hemistichs) {
    auto sounds = orthography_to_sound(hemistich, Position::HemistichFinal,
                                       config.coverage_threshold);
    patterns.push_back(pattern_extract(sounds).bits);
  }
  return classify_patterns(patterns, config.prose_threshold);
}

LinearHead LinearHead::zeros(std::size_t dim) {
  LinearHead head;
  head.dim = dim;
  head.weights.assign(kMeterCount * dim, 0.0);
  head.bias.assign(kMeterCount, 0.0);
  return head;
}

std::vector<double> head_forward(const LinearHead& head,
                                 std::span<const double> features) {
  if (features.size() != head.dim) {
    throw DimensionMismatch("feature length " + std::to_string(features.size()) +
                            " != head dimension " + std::to_string(head.dim));
  }
  std::vector<double> logits(kMeterCount);
  for (std::size_t c = 0; c < kMeterCount; ++c) {
    double z = head.bias[c];
    const double* w = head.weights.data() + c * head.dim;
    for (std::size_t j = 0; j < head.dim; ++j) z += w[j] * features[j];
    logits[c] = z;
  }
  double max_z = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - max_z);
    sum += z;
  }
  for (auto& z : logits) z /= sum;
  return logits;
}

double head_loss_grad(const LinearHead& head, std::span<const double> features,
                      std::size_t label, std::span<double> grad_w,
                      std::span<double> grad_b) {
  auto probs = head_forward(head, features);
  for (std::size_t c = 0; c < kMeterCount; ++c) {
    double delta = probs[c] - (c == label ? 1.0 : 0.0);
    grad_b[c] += delta;
    for (std::size_t j = 0; j < head.dim; ++j) {
      grad_w[c * head.dim + j] += delta * features[j];
    }
  }
  return -std::log(std::max(probs[label], 1e-300));
}

HeadTrainResult head_train(const std::vector<HeadSample>& dataset,
                           const HeadTrainOptions& options) {
  if (dataset.empty()) throw EmptyDataset("empty training dataset");
  const std::size_t dim = dataset.front().features.size();
  for (const auto& sample : dataset) {
    if (sample.features.size() != dim) {
      throw DimensionMismatch("inconsistent feature dimensions in dataset");
    }
  }

  HeadTrainResult result;
  result.head = LinearHead::zeros(dim);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> index(dataset.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;

  std::vector<double> grad_w(kMeterCount * dim), grad_b(kMeterCount);
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(index.begin(), index.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < index.size(); start += batch) {
      std::size_t end = std::min(index.size(), start + batch);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& sample = dataset[index[i]];
        loss_sum += head_loss_grad(result.head, sample.features,
                                   static_cast<std::size_t>(sample.label),
                                   grad_w, grad_b);
      }
      double scale = options.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < grad_w.size(); ++k) {
        result.head.weights[k] -= scale * grad_w[k];
      }
      for (std::size_t c = 0; c < kMeterCount; ++c) {
        result.head.bias[c] -= scale * grad_b[c];
      }
    }
    result.loss_trace.push_back(loss_sum / static_cast<double>(dataset.size()));
  }
  return result;
}

std::vector<double> pool_features(const EmissionMatrix& emission) {
  emission.validate();
  const std::size_t V = emission.symbols();
  std::vector<double> pooled(V, 0.0);
  for (std::size_t t = 0; t < emission.frames; ++t) {
    for (std::size_t v = 0; v < V; ++v) pooled[v] += emission.at(t, v);
  }
  for (auto& x : pooled) x /= static_cast<double>(emission.frames);
  return pooled;
}

void save_head(const LinearHead& head, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  char buf[64];
  out << head.dim << '\n';
  for (const auto& name : meter_names()) out << name << '\n';
  for (std::size_t c = 0; c < kMeterCount; ++c) {
    for (std::size_t j = 0; j < head.dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", head.weights[c * head.dim + j]);
      out << buf << (j + 1 == head.dim ? '\n' : ' ');
    }
  }
  for (std::size_t c = 0; c < kMeterCount; ++c) {
    std::snprintf(buf, sizeof(buf), "%.9g", head.bias[c]);
    out << buf << (c + 1 == kMeterCount ? '\n' : ' ');
  }
}

LinearHead load_head(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::size_t dim = 0;
  if (!(in >> dim)) throw Error("bad head file: missing dimension");
  std::string name;
  for (std::size_t i = 0; i < kMeterCount; ++i) {
    if (!(in >> name) || name != meter_names()[i]) {
      throw Error("bad head file: label list mismatch");
    }
  }
  LinearHead head = LinearHead::zeros(dim);
  for (auto& w : head.weights) {
    if (!(in >> w)) throw Error("bad head file: truncated weights");
  }
  for (auto& b : head.bias) {
    if (!(in >> b)) throw Error("bad head file: truncated bias");
  }
  return head;
}

std::string render_template_table() {
  std::ostringstream out;
  for (const auto& tmpl : build_templates()) {
    out << to_string(tmpl.meter) << '\t' << tmpl.base_pattern << '\n';
    for (std::size_t f = 0; f < tmpl.feet.size(); ++f) {
      out << "  foot " << f + 1 << ":";
      for (std::size_t a = 0; a < tmpl.feet[f].size(); ++a) {
        out << ' ' << tmpl.feet_text[f][a] << '=' << tmpl.feet[f][a];
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace arud
