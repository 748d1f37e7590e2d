#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arud/bench.hpp"
#include "arud/ctc.hpp"
#include "arud/lm.hpp"
#include "arud/meter.hpp"
#include "arud/text.hpp"

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw arud::Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw arud::Error("cannot open " + path + " for writing");
  out << content;
}

// Hemistich sentences for LM training: normalize and split each verse line.
std::vector<std::string> corpus_sentences(const std::vector<std::string>& lines) {
  std::vector<std::string> sentences;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    arud::Verse verse = arud::parse_verse(line);
    for (const auto& h : verse.hemistichs) sentences.push_back(h);
  }
  return sentences;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recited Arabic poetry meter classification toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path, report_path;
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--config", config_path, "run configuration file (JSON)");
  app.add_option("--report", report_path, "write the machine-readable report here");

  // lm-train
  auto* lm_train = app.add_subcommand("lm-train", "train a word n-gram LM");
  std::string corpus_path, lm_out;
  int order = 4, min_count = 1;
  lm_train->add_option("--corpus", corpus_path, "verse corpus, one per line")->required();
  lm_train->add_option("--order", order, "n-gram order");
  lm_train->add_option("--min-count", min_count, "prune words below this count");
  lm_train->add_option("--out", lm_out, "output ARPA path")->required();

  // lm-query
  auto* lm_query = app.add_subcommand("lm-query", "perplexity and token scores");
  std::string lm_path, query_text;
  lm_query->add_option("--model", lm_path, "ARPA model")->required();
  lm_query->add_option("--text", query_text, "text to score")->required();

  // decode
  auto* decode = app.add_subcommand("decode", "decode an emission file");
  std::string emission_path, decode_mode = "beam", decode_lm;
  std::size_t beam_width = 64;
  double alpha = 0.5, beta = 1.0;
  decode->add_option("--emission", emission_path, "CTCE emission file")->required();
  decode->add_option("--mode", decode_mode, "greedy | beam");
  decode->add_option("--beam-width", beam_width, "beam width");
  decode->add_option("--lm", decode_lm, "ARPA model for shallow fusion");
  decode->add_option("--alpha", alpha, "LM weight");
  decode->add_option("--beta", beta, "word insertion bonus");

  // scan
  auto* scan = app.add_subcommand("scan", "classify verse text to a meter");
  std::string scan_text, scan_file;
  double coverage_threshold = 0.8, prose_threshold = 0.15;
  scan->add_option("--text", scan_text, "verse text");
  scan->add_option("--input", scan_file, "file of verses, one per line");
  scan->add_option("--coverage-threshold", coverage_threshold,
                   "minimum diacritic coverage");
  scan->add_option("--prose-threshold", prose_threshold,
                   "normalized distance above which a verse is Prose");

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize emissions for a manifest");
  std::string synth_manifest, synth_out_manifest, synth_dir;
  int frames_per_char = 2;
  double noise = 0.0, blank_prob = 0.3;
  synth->add_option("--manifest", synth_manifest, "input manifest (needs transcripts)")
      ->required();
  synth->add_option("--out-dir", synth_dir, "directory for emission files")->required();
  synth->add_option("--out-manifest", synth_out_manifest, "output manifest")->required();
  synth->add_option("--frames-per-char", frames_per_char, "frames per character");
  synth->add_option("--noise", noise, "emission noise epsilon");
  synth->add_option("--blank-prob", blank_prob, "optional blank probability");

  // split
  auto* split = app.add_subcommand("split", "stratified train/test split");
  std::string split_in, split_out;
  double test_fraction = 0.1;
  split->add_option("--manifest", split_in, "input manifest")->required();
  split->add_option("--out", split_out, "output manifest")->required();
  split->add_option("--test-fraction", test_fraction, "test fraction in (0,1)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "run the pipeline over a manifest");
  std::string eval_manifest;
  bool serial = false;
  evaluate->add_option("--manifest", eval_manifest, "manifest to evaluate")->required();
  evaluate->add_flag("--serial", serial, "disable the parallel entry loop");

  // head-train
  auto* head_train_cmd = app.add_subcommand("head-train", "train the linear head");
  std::string head_manifest, head_out;
  int epochs = 100;
  double learning_rate = 0.1;
  head_train_cmd->add_option("--manifest", head_manifest,
                             "manifest with emissions and meter labels")->required();
  head_train_cmd->add_option("--out", head_out, "output head file")->required();
  head_train_cmd->add_option("--epochs", epochs, "training epochs");
  head_train_cmd->add_option("--learning-rate", learning_rate, "learning rate");

  // head-classify
  auto* head_classify = app.add_subcommand("head-classify", "classify one emission");
  std::string head_path, classify_emission;
  head_classify->add_option("--head", head_path, "head file")->required();
  head_classify->add_option("--emission", classify_emission, "CTCE emission file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lm_train) {
      auto sentences = corpus_sentences(read_lines(corpus_path));
      auto model = arud::NGramModel::train(sentences, order, min_count);
      model.save(lm_out);
      std::cout << "vocabulary " << model.vocabulary().size() << "\n";
    } else if (*lm_query) {
      auto model = arud::NGramModel::load(lm_path);
      auto tokens = arud::whitespace_tokens(query_text);
      std::vector<std::string> history{arud::kBos};
      for (const auto& t : tokens) {
        std::cout << t << '\t' << model.score(history, t) << '\n';
        history.push_back(t);
      }
      std::cout << arud::kEos << '\t' << model.score(history, arud::kEos) << '\n';
      std::cout << "perplexity\t" << model.perplexity(query_text) << '\n';
    } else if (*decode) {
      auto emission = arud::load_emission(emission_path);
      arud::DecodeResult result;
      if (decode_mode == "greedy") {
        result = arud::greedy_decode(emission);
      } else if (decode_mode == "beam") {
        arud::NGramModel model;
        const arud::NGramModel* lm = nullptr;
        if (!decode_lm.empty()) {
          model = arud::NGramModel::load(decode_lm);
          lm = &model;
        }
        result = arud::beam_decode(emission, beam_width, lm,
                                   arud::FusionConfig{alpha, beta});
      } else {
        std::cerr << "unknown decode mode: " << decode_mode << "\n";
        return 1;
      }
      std::cout << result.text << '\n';
      std::cout << "score\t" << result.log_score << '\n';
    } else if (*scan) {
      if (scan_text.empty() == scan_file.empty()) {
        std::cerr << "scan needs exactly one of --text or --input\n";
        return 1;
      }
      std::vector<std::string> verses =
          scan_text.empty() ? read_lines(scan_file)
                            : std::vector<std::string>{scan_text};
      arud::ScanConfig config{coverage_threshold, prose_threshold};
      for (const auto& v : verses) {
        if (v.empty()) continue;
        try {
          auto result = arud::classify_scansion(arud::parse_verse(v), config);
          std::cout << arud::to_string(result.label) << '\t' << result.score << '\n';
        } catch (const arud::InsufficientDiacritics&) {
          std::cout << "Unscorable\t-\n";
        }
      }
    } else if (*synth) {
      auto entries = arud::load_manifest_file(synth_manifest);
      std::vector<std::string> texts;
      for (const auto& e : entries) {
        if (!e.transcript) throw arud::MissingField("entry '" + e.id + "' has no transcript");
        texts.push_back(*e.transcript);
      }
      texts.emplace_back(" ");
      auto alphabet = arud::make_alphabet(texts);
      for (auto& e : entries) {
        arud::SynthConfig sc;
        sc.frames_per_char = frames_per_char;
        sc.noise = noise;
        sc.blank_prob = blank_prob;
        sc.seed = arud::child_seed(seed, "synth", e.id);
        auto emission = arud::synth_emission(*e.transcript, alphabet, sc);
        std::string path = synth_dir + "/" + e.id + ".ctce";
        arud::save_emission(emission, path);
        e.emission_path = path;
      }
      arud::save_manifest_file(entries, synth_out_manifest);
    } else if (*split) {
      auto entries = arud::load_manifest_file(split_in);
      arud::split_stratified(entries, test_fraction, seed);
      arud::save_manifest_file(entries, split_out);
    } else if (*evaluate) {
      arud::RunConfig config;
      if (!config_path.empty()) config = arud::load_run_config(config_path);
      if (seed != 0) config.seed = seed;
      auto entries = arud::load_manifest_file(eval_manifest);
      auto report = arud::evaluate(entries, config, !serial);
      std::cout << arud::report_text(report);
      if (!report_path.empty()) write_file(report_path, arud::report_json(report));
    } else if (*head_train_cmd) {
      auto entries = arud::load_manifest_file(head_manifest);
      std::vector<arud::HeadSample> dataset;
      for (const auto& e : entries) {
        if (!e.emission_path || !e.meter) {
          throw arud::MissingField("entry '" + e.id + "' needs emission_path and meter");
        }
        arud::HeadSample sample;
        sample.features = arud::pool_features(arud::load_emission(*e.emission_path));
        sample.label = *e.meter;
        dataset.push_back(std::move(sample));
      }
      arud::HeadTrainOptions options;
      options.epochs = epochs;
      options.learning_rate = learning_rate;
      options.seed = seed;
      auto result = arud::head_train(dataset, options);
      arud::save_head(result.head, head_out);
      if (!result.loss_trace.empty()) {
        std::cout << "final loss\t" << result.loss_trace.back() << '\n';
      }
    } else if (*head_classify) {
      auto head = arud::load_head(head_path);
      auto probs = arud::head_forward(
          head, arud::pool_features(arud::load_emission(classify_emission)));
      auto best = std::max_element(probs.begin(), probs.end());
      std::cout << arud::meter_names()[best - probs.begin()] << '\t' << *best << '\n';
    }
  } catch (const arud::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
