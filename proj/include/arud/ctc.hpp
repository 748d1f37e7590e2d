#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "arud/error.hpp"
#include "arud/lm.hpp"

namespace arud {

struct TooLarge : Error {
  using Error::Error;
};
struct MissingSpaceSymbol : Error {
  using Error::Error;
};
struct BadEmission : Error {
  using Error::Error;
};

inline constexpr const char* kBlank = "<blank>";

// T x V grid of per-frame natural-log character probabilities. Index 0 of
// the alphabet is the blank symbol.
struct EmissionMatrix {
  std::vector<std::string> alphabet;
  std::size_t frames = 0;
  std::vector<double> values;  // row-major, frames x alphabet.size()

  std::size_t symbols() const { return alphabet.size(); }
  double at(std::size_t t, std::size_t v) const { return values[t * alphabet.size() + v]; }
  double& at(std::size_t t, std::size_t v) { return values[t * alphabet.size() + v]; }

  // Throws BadEmission unless shapes are sane and each frame's probabilities
  // sum to 1 within `tolerance` after exponentiation.
  void validate(double tolerance = 1e-5) const;

  int space_index() const;  // -1 when the alphabet has no " " entry
};

// Binary container: "CTCE", u32 version=1, u32 T, u32 V, V alphabet entries
// (u16 length + UTF-8 bytes, entry 0 is "<blank>"), then T*V f32 values,
// all little-endian. Readers validate magic, version, and per-frame
// normalization within 1e-4.
void write_emission(const EmissionMatrix& emission, std::ostream& out);
EmissionMatrix read_emission(std::istream& in);
void save_emission(const EmissionMatrix& emission, const std::string& path);
EmissionMatrix load_emission(const std::string& path);

struct DecodeResult {
  std::string text;
  double log_score = 0.0;  // natural log
  std::vector<std::pair<std::string, double>> n_best;
};

// Per-frame argmax, collapse repeats, drop blanks.
DecodeResult greedy_decode(const EmissionMatrix& emission);

// Enumerates all V^T alignment paths and sums path probabilities per
// collapsed string. Test oracle; guarded to T <= 8 and V <= 5.
DecodeResult brute_force_decode(const EmissionMatrix& emission);

// Prefix beam search with optional word-level LM shallow fusion. The LM
// term alpha * ln P(word | history) + beta is added when a space is emitted
// and for the trailing word at sequence end.
DecodeResult beam_decode(const EmissionMatrix& emission, std::size_t beam_width,
                         const NGramModel* lm = nullptr,
                         const FusionConfig& fusion = {});

}  // namespace arud
