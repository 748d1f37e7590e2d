#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arud/ctc.hpp"
#include "arud/error.hpp"
#include "arud/text.hpp"

namespace arud {

struct DimensionMismatch : Error {
  using Error::Error;
};
struct EmptyDataset : Error {
  using Error::Error;
};

// 16 classical meters plus Prose, in the canonical order used by every
// confusion matrix and report.
enum class MeterLabel : std::uint8_t {
  Taweel, Madeed, Baseet, Wafer, Kamel, Hazaj, Rajaz, Ramal, Saree,
  Munsareh, Khafeef, Mudhare, Muqtadeb, Mujtath, Mutaqareb, Mutadarak,
  Prose,
};
inline constexpr std::size_t kMeterCount = 17;

const std::vector<std::string>& meter_names();
const std::string& to_string(MeterLabel label);
MeterLabel meter_from_string(const std::string& name);

struct MetricalPattern {
  std::string bits;  // '1' = moving, '0' = still
};

MetricalPattern pattern_extract(std::span<const SoundUnit> sounds);

struct MeterTemplate {
  MeterLabel meter;
  // Per foot: the diacritized tafila and its admissible variant forms.
  std::vector<std::vector<std::string>> feet_text;
  // Same shape, as bit strings derived by pattern_extract; [0] is the base.
  std::vector<std::vector<std::string>> feet;
  std::string base_pattern;  // concatenation of each foot's first alternative
};

const std::vector<MeterTemplate>& build_templates();

struct FootMatch {
  int distance = 0;  // edit distance against the best foot-alternative choice
  int variants = 0;  // how many feet used a non-base alternative
};

// Segmental DP: match the pattern against the template's feet left to right,
// each foot choosing one alternative. Minimizes (distance, variants).
FootMatch match_template(const MeterTemplate& tmpl, const std::string& bits);

struct ScanConfig {
  double coverage_threshold = 0.8;
  double prose_threshold = 0.15;  // normalized edit distance
};

struct ScanResult {
  MeterLabel label = MeterLabel::Prose;
  double score = 0.0;  // normalized distance of the winning template
  std::vector<std::pair<MeterLabel, double>> nearest;  // ranked, best first
};

// Classification of a pre-extracted pattern set (one entry per hemistich).
ScanResult classify_patterns(const std::vector<std::string>& patterns,
                             double prose_threshold = 0.15);

ScanResult classify_scansion(const Verse& verse, const ScanConfig& config = {});

// Dense layer + softmax over the 17 labels.
struct LinearHead {
  std::size_t dim = 0;
  std::vector<double> weights;  // kMeterCount x dim, row-major
  std::vector<double> bias;     // kMeterCount

  static LinearHead zeros(std::size_t dim);
};

std::vector<double> head_forward(const LinearHead& head,
                                 std::span<const double> features);

// Cross-entropy loss and its gradient for one sample; gradients are
// accumulated into grad_w / grad_b.
double head_loss_grad(const LinearHead& head, std::span<const double> features,
                      std::size_t label, std::span<double> grad_w,
                      std::span<double> grad_b);

struct HeadSample {
  std::vector<double> features;
  MeterLabel label = MeterLabel::Prose;
};

struct HeadTrainOptions {
  int epochs = 100;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct HeadTrainResult {
  LinearHead head;
  std::vector<double> loss_trace;  // mean cross-entropy per epoch
};

HeadTrainResult head_train(const std::vector<HeadSample>& dataset,
                           const HeadTrainOptions& options);

// Mean over the time axis; d = alphabet size.
std::vector<double> pool_features(const EmissionMatrix& emission);

void save_head(const LinearHead& head, const std::string& path);
LinearHead load_head(const std::string& path);

// Audit dump: meter name, feet, alternatives, bit patterns.
std::string render_template_table();

}  // namespace arud
