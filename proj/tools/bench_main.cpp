// Compares the serial reference evaluation loop against the OpenMP path on a
// synthetic manifest and checks that both produce the same report.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "arud/bench.hpp"
#include "arud/meter.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// One verse per template: both hemistichs are the meter's base tafila.
std::vector<arud::ManifestEntry> synthetic_manifest(const std::string& dir,
                                                    int copies, double noise,
                                                    std::uint64_t seed) {
  std::vector<std::string> texts;
  std::vector<arud::ManifestEntry> entries;
  const auto& templates = arud::build_templates();
  for (const auto& tmpl : templates) {
    std::string hemistich;
    for (const auto& foot : tmpl.feet_text) {
      if (!hemistich.empty()) hemistich += ' ';
      hemistich += foot.front();
    }
    for (int c = 0; c < copies; ++c) {
      arud::ManifestEntry entry;
      entry.id = arud::to_string(tmpl.meter) + "-" + std::to_string(c);
      entry.transcript = hemistich + " # " + hemistich;
      entry.meter = tmpl.meter;
      texts.push_back(*entry.transcript);
      entries.push_back(std::move(entry));
    }
  }
  texts.emplace_back(" #");
  auto alphabet = arud::make_alphabet(texts);
  for (auto& entry : entries) {
    arud::SynthConfig sc;
    sc.noise = noise;
    sc.seed = arud::child_seed(seed, "synth", entry.id);
    auto emission = arud::synth_emission(*entry.transcript, alphabet, sc);
    std::string path = dir + "/" + entry.id + ".ctce";
    arud::save_emission(emission, path);
    entry.emission_path = path;
  }
  return entries;
}

}  // namespace

int main(int argc, char** argv) {
  int copies = argc > 1 ? std::atoi(argv[1]) : 4;
  auto dir = std::filesystem::temp_directory_path() / "arud-bench";
  std::filesystem::create_directories(dir);

  auto entries = synthetic_manifest(dir.string(), copies, 0.02, 7);
  arud::RunConfig config;
  config.decoder = arud::DecoderKind::Beam;
  config.beam_width = 16;

  auto t0 = Clock::now();
  auto serial = arud::evaluate(entries, config, /*parallel=*/false);
  double serial_s = seconds_since(t0);

  t0 = Clock::now();
  auto parallel = arud::evaluate(entries, config, /*parallel=*/true);
  double parallel_s = seconds_since(t0);

  bool identical = arud::report_json(serial) == arud::report_json(parallel);
  std::printf("entries            %zu\n", entries.size());
  std::printf("serial             %.3f s\n", serial_s);
  std::printf("parallel           %.3f s\n", parallel_s);
  std::printf("speedup            %.2fx\n", serial_s / parallel_s);
  std::printf("reports identical  %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
