#include "arud/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "arud/text.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace arud {

using json = nlohmann::ordered_json;

namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(std::istream& in) {
  std::vector<ManifestEntry> entries;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": invalid record");
    }
    ManifestEntry entry;
    try {
      if (!record.contains("id") || !record["id"].is_string()) {
        throw MissingField("manifest line " + std::to_string(line_no) +
                           ": missing id");
      }
      entry.id = record["id"].get<std::string>();
      if (record.contains("emission_path") && !record["emission_path"].is_null()) {
        entry.emission_path = record["emission_path"].get<std::string>();
      }
      if (record.contains("transcript") && !record["transcript"].is_null()) {
        entry.transcript = record["transcript"].get<std::string>();
      }
      if (record.contains("meter") && !record["meter"].is_null()) {
        entry.meter = meter_from_string(record["meter"].get<std::string>());
      }
      if (record.contains("split") && !record["split"].is_null()) {
        entry.split = record["split"].get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (!entry.emission_path && !entry.transcript) {
      throw MissingField("manifest line " + std::to_string(line_no) +
                         ": entry needs emission_path or transcript");
    }
    if (seen.count(entry.id)) {
      throw DuplicateId("manifest line " + std::to_string(line_no) +
                        ": duplicate id '" + entry.id + "' (first at line " +
                        std::to_string(seen[entry.id]) + ")");
    }
    seen[entry.id] = line_no;
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_manifest(in);
}

void save_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out) {
  for (const auto& entry : entries) {
    json record;
    record["id"] = entry.id;
    if (entry.emission_path) record["emission_path"] = *entry.emission_path;
    if (entry.transcript) record["transcript"] = *entry.transcript;
    if (entry.meter) record["meter"] = to_string(*entry.meter);
    if (entry.split) record["split"] = *entry.split;
    out << record.dump() << '\n';
  }
}

void save_manifest_file(const std::vector<ManifestEntry>& entries,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_manifest(entries, out);
}

std::uint64_t child_seed(std::uint64_t master, std::string_view op,
                         std::string_view entry_id) {
  // FNV-1a over the master seed bytes, the operation name, and the entry id.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(master >> (8 * i)));
  for (char c : op) mix(static_cast<unsigned char>(c));
  mix(0);
  for (char c : entry_id) mix(static_cast<unsigned char>(c));
  return h;
}

void split_stratified(std::vector<ManifestEntry>& entries, double test_fraction,
                      std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test_fraction must be in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> by_meter;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].meter) {
      throw UnlabeledEntry("entry '" + entries[i].id + "' has no meter label");
    }
    by_meter[to_string(*entries[i].meter)].push_back(i);
  }
  for (auto& [meter, index] : by_meter) {
    std::sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
      return entries[a].id < entries[b].id;
    });
    std::mt19937_64 rng(child_seed(seed, "split", meter));
    std::shuffle(index.begin(), index.end(), rng);
    // rounding half-up
    std::size_t k = static_cast<std::size_t>(
        std::floor(static_cast<double>(index.size()) * test_fraction + 0.5));
    for (std::size_t j = 0; j < index.size(); ++j) {
      entries[index[j]].split = j < k ? "test" : "train";
    }
  }
}

std::vector<std::string> make_alphabet(const std::vector<std::string>& texts) {
  std::vector<char32_t> chars;
  for (const auto& text : texts) {
    std::u32string cps = utf8_decode(text);
    chars.insert(chars.end(), cps.begin(), cps.end());
  }
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  std::vector<std::string> alphabet{kBlank};
  for (char32_t c : chars) alphabet.push_back(utf8_encode(std::u32string(1, c)));
  return alphabet;
}

EmissionMatrix synth_emission(const std::string& transcript,
                              const std::vector<std::string>& alphabet,
                              const SynthConfig& config) {
  if (config.noise < 0.0 || config.noise >= 1.0) {
    throw Error("noise must be in [0, 1)");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < alphabet.size(); ++v) index[alphabet[v]] = v;

  std::u32string cps = utf8_decode(transcript);
  std::vector<std::size_t> symbols;
  for (char32_t c : cps) {
    auto it = index.find(utf8_encode(std::u32string(1, c)));
    if (it == index.end() || it->second == 0) {
      throw AlphabetMismatch("transcript character not in alphabet: " +
                             utf8_encode(std::u32string(1, c)));
    }
    symbols.push_back(it->second);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t V = alphabet.size();
  const double eps = config.noise;
  const double off = V > 1 ? eps / static_cast<double>(V - 1) : 0.0;
  // stands in for log 0: exp underflows to zero, yet pooled features and
  // decoder arithmetic stay finite
  const double log_floor = -1e4;

  EmissionMatrix emission;
  emission.alphabet = alphabet;
  auto emit_frames = [&](std::size_t symbol, int count) {
    for (int f = 0; f < count; ++f) {
      for (std::size_t v = 0; v < V; ++v) {
        double p = v == symbol ? 1.0 - eps : off;
        emission.values.push_back(p > 0.0 ? std::log(p) : log_floor);
      }
      ++emission.frames;
    }
  };

  // Noise corrupts the emitted character itself: with probability eps the
  // peak lands on a random wrong symbol, held for the character's frames.
  std::uniform_int_distribution<std::size_t> wrong(1, V > 2 ? V - 2 : 1);
  std::size_t previous = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    std::size_t emitted = symbols[i];
    if (eps > 0.0 && unit(rng) < eps && V > 2) {
      std::size_t pick = wrong(rng);
      if (pick >= emitted) ++pick;
      emitted = pick;
    }
    bool repeat = i > 0 && emitted == previous;
    if (repeat || unit(rng) < config.blank_prob) {
      emit_frames(0, 1);
    }
    emit_frames(emitted, std::max(1, config.frames_per_char));
    previous = emitted;
  }
  if (unit(rng) < config.blank_prob) emit_frames(0, 1);
  if (emission.frames == 0) emit_frames(0, 1);  // empty transcript
  emission.validate();
  return emission;
}

void RunConfig::validate() const {
  if (use_lm && lm_path.empty()) throw Error("use_lm requires an LM path");
  if (classifier == ClassifierKind::Head && head_path.empty()) {
    throw Error("classifier 'head' requires a head file");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ParseError("config " + path + ": invalid JSON");
  }
  RunConfig config;
  if (doc.contains("decoder")) {
    std::string d = doc["decoder"].get<std::string>();
    if (d == "greedy") config.decoder = DecoderKind::Greedy;
    else if (d == "beam") config.decoder = DecoderKind::Beam;
    else throw ParseError("config: unknown decoder '" + d + "'");
  }
  if (doc.contains("use_lm")) config.use_lm = doc["use_lm"].get<bool>();
  if (doc.contains("alpha")) config.fusion.alpha = doc["alpha"].get<double>();
  if (doc.contains("beta")) config.fusion.beta = doc["beta"].get<double>();
  if (doc.contains("classifier")) {
    std::string c = doc["classifier"].get<std::string>();
    if (c == "scansion") config.classifier = ClassifierKind::Scansion;
    else if (c == "head") config.classifier = ClassifierKind::Head;
    else throw ParseError("config: unknown classifier '" + c + "'");
  }
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("beam_width")) config.beam_width = doc["beam_width"].get<std::size_t>();
  if (doc.contains("lm_path")) config.lm_path = doc["lm_path"].get<std::string>();
  if (doc.contains("head_path")) config.head_path = doc["head_path"].get<std::string>();
  if (doc.contains("coverage_threshold")) {
    config.scan.coverage_threshold = doc["coverage_threshold"].get<double>();
  }
  if (doc.contains("prose_threshold")) {
    config.scan.prose_threshold = doc["prose_threshold"].get<double>();
  }
  config.validate();
  return config;
}

PipelineOutput run_pipeline(const ManifestEntry& entry, const RunConfig& config,
                            const NGramModel* lm, const LinearHead* head) {
  PipelineOutput output;

  if (config.classifier == ClassifierKind::Head) {
    if (!entry.emission_path) {
      throw MissingField("entry '" + entry.id + "': head classifier needs an emission");
    }
    EmissionMatrix emission = load_emission(*entry.emission_path);
    auto probs = head_forward(*head, pool_features(emission));
    auto best = std::max_element(probs.begin(), probs.end());
    output.label = static_cast<MeterLabel>(best - probs.begin());
    return output;
  }

  std::string text;
  if (entry.emission_path) {
    EmissionMatrix emission = load_emission(*entry.emission_path);
    DecodeResult decoded =
        config.decoder == DecoderKind::Greedy
            ? greedy_decode(emission)
            : beam_decode(emission, config.beam_width,
                          config.use_lm ? lm : nullptr, config.fusion);
    output.decoded = decoded.text;
    text = decoded.text;
  } else {
    // Table-7 style ablation: classify the ground-truth transcript directly.
    text = *entry.transcript;
  }

  try {
    Verse verse = parse_verse(text);
    output.label = classify_scansion(verse, config.scan).label;
  } catch (const InsufficientDiacritics&) {
    // Unscorable: reported separately, never forced into Prose.
  } catch (const InvalidScript&) {
  }
  return output;
}

EvaluationReport evaluate(const std::vector<ManifestEntry>& entries,
                          const RunConfig& config, bool parallel) {
  config.validate();

  NGramModel lm;
  bool have_lm = false;
  if (config.use_lm) {
    lm = NGramModel::load(config.lm_path);
    have_lm = true;
  }
  LinearHead head;
  if (config.classifier == ClassifierKind::Head) head = load_head(config.head_path);

  const std::size_t n = entries.size();
  std::vector<PipelineOutput> outputs(n);
  std::vector<std::string> errors(n);

#if defined(_OPENMP)
  #pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      outputs[i] = run_pipeline(entries[i], config, have_lm ? &lm : nullptr,
                                &head);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  (void)parallel;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      throw Error("entry '" + entries[i].id + "': " + errors[i]);
    }
  }

  EvaluationReport report;
  report.config = config;
  report.entries = n;

  TranscriptionScore transcription;
  bool any_transcription = false;
  std::vector<std::string> truth, predicted;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = entries[i];
    const auto& output = outputs[i];
    UtteranceRecord record;
    record.id = entry.id;
    if (output.decoded) record.decoded = *output.decoded;
    record.predicted = output.label ? to_string(*output.label) : "Unscorable";
    report.utterances.push_back(std::move(record));

    if (entry.transcript && output.decoded) {
      transcription.merge(transcription_score(*entry.transcript, *output.decoded));
      any_transcription = true;
    }
    if (entry.meter) {
      if (!output.label) {
        ++report.unscorable;
      } else {
        truth.push_back(to_string(*entry.meter));
        predicted.push_back(to_string(*output.label));
      }
    }
  }

  if (any_transcription) report.transcription = transcription;
  if (!truth.empty()) {
    report.classification = classification_report(truth, predicted, meter_names());
  }
  return report;
}

namespace {

json config_json(const RunConfig& config) {
  json c;
  c["decoder"] = config.decoder == DecoderKind::Greedy ? "greedy" : "beam";
  c["use_lm"] = config.use_lm;
  c["alpha"] = format("%.4f", config.fusion.alpha);
  c["beta"] = format("%.4f", config.fusion.beta);
  c["classifier"] = config.classifier == ClassifierKind::Scansion ? "scansion" : "head";
  c["seed"] = config.seed;
  c["beam_width"] = config.beam_width;
  c["lm_path"] = config.lm_path;
  c["head_path"] = config.head_path;
  c["coverage_threshold"] = format("%.4f", config.scan.coverage_threshold);
  c["prose_threshold"] = format("%.4f", config.scan.prose_threshold);
  return c;
}

json classification_json(const ClassificationResult& result) {
  json c;
  const auto& r = result.report;
  c["accuracy"] = format("%.2f", r.accuracy);
  c["macro_precision"] = format("%.2f", r.macro_precision);
  c["macro_recall"] = format("%.2f", r.macro_recall);
  c["macro_f1"] = format("%.2f", r.macro_f1);
  c["weighted_precision"] = format("%.2f", r.weighted_precision);
  c["weighted_recall"] = format("%.2f", r.weighted_recall);
  c["weighted_f1"] = format("%.2f", r.weighted_f1);
  json per_class = json::array();
  for (const auto& s : r.per_class) {
    json row;
    row["label"] = s.label;
    row["tp"] = s.tp;
    row["tn"] = s.tn;
    row["fp"] = s.fp;
    row["fn"] = s.fn;
    row["accuracy"] = format("%.2f", s.accuracy);
    row["precision"] = format("%.2f", s.precision);
    row["recall"] = format("%.2f", s.recall);
    row["f1"] = format("%.2f", s.f1);
    per_class.push_back(std::move(row));
  }
  c["per_class"] = std::move(per_class);
  json confusion;
  confusion["labels"] = result.confusion.labels;
  confusion["counts"] = result.confusion.counts;
  c["confusion"] = std::move(confusion);
  return c;
}

}  // namespace

std::string report_json(const EvaluationReport& report) {
  json doc;
  doc["config"] = config_json(report.config);
  doc["entries"] = report.entries;
  doc["unscorable"] = report.unscorable;
  if (report.transcription) {
    const auto& t = *report.transcription;
    json ts;
    ts["wer"] = format("%.4f", t.wer);
    ts["cer"] = format("%.4f", t.cer);
    ts["word_substitutions"] = t.word_edits.substitutions;
    ts["word_insertions"] = t.word_edits.insertions;
    ts["word_deletions"] = t.word_edits.deletions;
    ts["char_substitutions"] = t.char_edits.substitutions;
    ts["char_insertions"] = t.char_edits.insertions;
    ts["char_deletions"] = t.char_edits.deletions;
    ts["reference_words"] = t.ref_words;
    ts["reference_chars"] = t.ref_chars;
    doc["transcription"] = std::move(ts);
  } else {
    doc["transcription"] = nullptr;
  }
  if (report.classification) {
    doc["classification"] = classification_json(*report.classification);
  } else {
    doc["classification"] = nullptr;
  }
  json utterances = json::array();
  for (const auto& u : report.utterances) {
    json row;
    row["id"] = u.id;
    row["decoded"] = u.decoded;
    row["predicted"] = u.predicted;
    utterances.push_back(std::move(row));
  }
  doc["utterances"] = std::move(utterances);
  return doc.dump(2) + "\n";
}

std::string report_text(const EvaluationReport& report) {
  std::ostringstream out;
  out << "entries\t" << report.entries << "\n";
  out << "unscorable\t" << report.unscorable << "\n";
  if (report.transcription) {
    out << "wer\t" << format("%.4f", report.transcription->wer) << "\n";
    out << "cer\t" << format("%.4f", report.transcription->cer) << "\n";
  }
  if (report.classification) {
    out << render_report_text(report.classification->report);
  }
  return out.str();
}

}  // namespace arud
