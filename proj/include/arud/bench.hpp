#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arud/ctc.hpp"
#include "arud/error.hpp"
#include "arud/lm.hpp"
#include "arud/meter.hpp"
#include "arud/metrics.hpp"

namespace arud {

struct ParseError : Error {
  using Error::Error;
};
struct DuplicateId : Error {
  using Error::Error;
};
struct MissingField : Error {
  using Error::Error;
};
struct UnlabeledEntry : Error {
  using Error::Error;
};
struct AlphabetMismatch : Error {
  using Error::Error;
};

struct ManifestEntry {
  std::string id;
  std::optional<std::string> emission_path;
  std::optional<std::string> transcript;
  std::optional<MeterLabel> meter;
  std::optional<std::string> split;  // train | validation | test
};

// Line-delimited JSON records, one flat object per line, UTF-8, LF endings.
std::vector<ManifestEntry> load_manifest(std::istream& in);
std::vector<ManifestEntry> load_manifest_file(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out);
void save_manifest_file(const std::vector<ManifestEntry>& entries,
                        const std::string& path);

// Per-meter proportional test assignment, rounding half-up, deterministic
// given the seed and independent of input order.
void split_stratified(std::vector<ManifestEntry>& entries, double test_fraction,
                      std::uint64_t seed);

// Child seed derivation: one master seed, per-operation and per-entry.
std::uint64_t child_seed(std::uint64_t master, std::string_view op,
                         std::string_view entry_id);

struct SynthConfig {
  int frames_per_char = 2;
  double noise = 0.0;       // epsilon in [0, 1)
  double blank_prob = 0.3;  // optional blank insertion probability
  std::uint64_t seed = 0;
};

// Alphabet for synthetic emissions: <blank>, then every codepoint of the
// given texts as a single-codepoint symbol, sorted.
std::vector<std::string> make_alphabet(const std::vector<std::string>& texts);

EmissionMatrix synth_emission(const std::string& transcript,
                              const std::vector<std::string>& alphabet,
                              const SynthConfig& config);

enum class DecoderKind { Greedy, Beam };
enum class ClassifierKind { Scansion, Head };

struct RunConfig {
  DecoderKind decoder = DecoderKind::Beam;
  bool use_lm = false;
  FusionConfig fusion;
  ClassifierKind classifier = ClassifierKind::Scansion;
  std::uint64_t seed = 0;
  std::size_t beam_width = 64;
  std::string lm_path;
  std::string head_path;
  ScanConfig scan;

  void validate() const;
};

RunConfig load_run_config(const std::string& path);

struct PipelineOutput {
  std::optional<std::string> decoded;
  std::optional<MeterLabel> label;  // empty = Unscorable
};

PipelineOutput run_pipeline(const ManifestEntry& entry, const RunConfig& config,
                            const NGramModel* lm = nullptr,
                            const LinearHead* head = nullptr);

struct UtteranceRecord {
  std::string id;
  std::string decoded;    // empty when no emission was decoded
  std::string predicted;  // meter name or "Unscorable"
};

struct EvaluationReport {
  RunConfig config;
  std::size_t entries = 0;
  std::size_t unscorable = 0;
  std::optional<TranscriptionScore> transcription;
  std::optional<ClassificationResult> classification;
  std::vector<UtteranceRecord> utterances;
};

// Runs the pipeline over every entry and aggregates. The parallel path uses
// OpenMP over entries; aggregation is order-independent, so the serial
// reference produces an identical report.
EvaluationReport evaluate(const std::vector<ManifestEntry>& entries,
                          const RunConfig& config, bool parallel = true);

std::string report_json(const EvaluationReport& report);   // machine form
std::string report_text(const EvaluationReport& report);   // human form

}  // namespace arud
