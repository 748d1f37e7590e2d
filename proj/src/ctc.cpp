#include "arud/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "arud/metrics.hpp"

namespace arud {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn10 = 2.302585092994045684;

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

void EmissionMatrix::validate(double tolerance) const {
  if (alphabet.size() < 2) throw BadEmission("alphabet must have at least 2 symbols");
  if (alphabet[0] != kBlank) throw BadEmission("alphabet entry 0 must be <blank>");
  if (frames < 1) throw BadEmission("emission must have at least one frame");
  if (values.size() != frames * alphabet.size()) {
    throw BadEmission("value grid shape mismatch");
  }
  for (std::size_t t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (std::size_t v = 0; v < alphabet.size(); ++v) sum += std::exp(at(t, v));
    if (std::abs(sum - 1.0) > tolerance) {
      throw BadEmission("frame " + std::to_string(t) +
                        " probabilities sum to " + std::to_string(sum));
    }
  }
}

int EmissionMatrix::space_index() const {
  for (std::size_t v = 0; v < alphabet.size(); ++v) {
    if (alphabet[v] == " ") return static_cast<int>(v);
  }
  return -1;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw BadEmission("truncated emission file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) throw BadEmission("truncated emission file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

float get_f32(std::istream& in) {
  std::uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_emission(const EmissionMatrix& emission, std::ostream& out) {
  emission.validate();
  out.write("CTCE", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(emission.frames));
  put_u32(out, static_cast<std::uint32_t>(emission.alphabet.size()));
  for (const auto& sym : emission.alphabet) {
    if (sym.size() > 0xFFFF) throw BadEmission("alphabet symbol too long");
    put_u16(out, static_cast<std::uint16_t>(sym.size()));
    out.write(sym.data(), static_cast<std::streamsize>(sym.size()));
  }
  for (double v : emission.values) put_f32(out, static_cast<float>(v));
}

EmissionMatrix read_emission(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CTCE", 4) != 0) {
    throw BadEmission("bad magic, not an emission file");
  }
  std::uint32_t version = get_u32(in);
  if (version != 1) throw BadEmission("unsupported emission version " + std::to_string(version));
  std::uint32_t frames = get_u32(in);
  std::uint32_t symbols = get_u32(in);
  if (symbols < 2) throw BadEmission("alphabet must have at least 2 symbols");
  EmissionMatrix emission;
  emission.frames = frames;
  emission.alphabet.reserve(symbols);
  for (std::uint32_t v = 0; v < symbols; ++v) {
    std::uint16_t len = get_u16(in);
    std::string sym(len, '\0');
    if (len > 0 && !in.read(sym.data(), len)) throw BadEmission("truncated alphabet entry");
    emission.alphabet.push_back(std::move(sym));
  }
  if (emission.alphabet[0] != kBlank) throw BadEmission("alphabet entry 0 must be <blank>");
  emission.values.resize(static_cast<std::size_t>(frames) * symbols);
  for (auto& v : emission.values) v = get_f32(in);
  emission.validate(1e-4);
  return emission;
}

void save_emission(const EmissionMatrix& emission, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_emission(emission, out);
}

EmissionMatrix load_emission(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_emission(in);
}

DecodeResult greedy_decode(const EmissionMatrix& emission) {
  emission.validate();
  const std::size_t V = emission.symbols();
  DecodeResult result;
  std::size_t prev = 0;
  bool first = true;
  double score = 0.0;
  for (std::size_t t = 0; t < emission.frames; ++t) {
    std::size_t best = 0;
    for (std::size_t v = 1; v < V; ++v) {
      if (emission.at(t, v) > emission.at(t, best)) best = v;
    }
    score += emission.at(t, best);
    if (best != 0 && (first || best != prev)) {
      result.text += emission.alphabet[best];
    }
    prev = best;
    first = false;
  }
  result.log_score = score;
  return result;
}

DecodeResult brute_force_decode(const EmissionMatrix& emission) {
  emission.validate();
  const std::size_t T = emission.frames;
  const std::size_t V = emission.symbols();
  if (T > 8 || V > 5) throw TooLarge("brute force guard: T <= 8 and V <= 5");

  std::map<std::string, long double> mass;  // collapsed string -> total probability
  std::vector<std::size_t> path(T, 0);
  while (true) {
    long double p = 1.0L;
    for (std::size_t t = 0; t < T; ++t) p *= std::exp(static_cast<long double>(emission.at(t, path[t])));
    std::string collapsed;
    std::size_t prev = 0;
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t s = path[t];
      if (s != 0 && (t == 0 || s != prev)) collapsed += emission.alphabet[s];
      prev = s;
    }
    mass[collapsed] += p;

    // next path in V-ary counting order
    std::size_t t = 0;
    for (; t < T; ++t) {
      if (++path[t] < V) break;
      path[t] = 0;
    }
    if (t == T) break;
  }

  DecodeResult result;
  long double best = -1.0L;
  for (const auto& [text, p] : mass) {
    if (p > best) {  // strict: earlier (lexicographically smaller) wins ties
      best = p;
      result.text = text;
    }
    result.n_best.emplace_back(text, static_cast<double>(std::log(p)));
  }
  result.log_score = static_cast<double>(std::log(best));
  std::sort(result.n_best.begin(), result.n_best.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return result;
}

namespace {

struct Beam {
  double p_blank = kNegInf;     // CTC mass for paths ending in blank
  double p_symbol = kNegInf;    // CTC mass for paths ending in the last symbol
  double lm = 0.0;              // accumulated fusion adjustment
  double total() const { return lse(p_blank, p_symbol); }
};

// Fusion term for the word completed by an emitted space (or sequence end).
double word_fusion(const std::vector<std::string>& words, const std::string& word,
                   const NGramModel& lm, const FusionConfig& fusion) {
  if (word.empty()) return 0.0;
  return fusion.alpha * kLn10 * lm.score(words, word) + fusion.beta;
}

// Words already completed within a prefix (symbol id sequence).
void split_words(const std::vector<int>& prefix, const EmissionMatrix& emission,
                 int space, std::vector<std::string>& words, std::string& trailing) {
  words.clear();
  trailing.clear();
  for (int id : prefix) {
    if (id == space) {
      if (!trailing.empty()) words.push_back(trailing);
      trailing.clear();
    } else {
      trailing += emission.alphabet[static_cast<std::size_t>(id)];
    }
  }
}

std::string prefix_text(const std::vector<int>& prefix, const EmissionMatrix& emission) {
  std::string text;
  for (int id : prefix) text += emission.alphabet[static_cast<std::size_t>(id)];
  return text;
}

}  // namespace

DecodeResult beam_decode(const EmissionMatrix& emission, std::size_t beam_width,
                         const NGramModel* lm, const FusionConfig& fusion) {
  emission.validate();
  if (beam_width < 1) throw Error("beam width must be >= 1");
  const int space = emission.space_index();
  if (lm != nullptr && space < 0) {
    throw MissingSpaceSymbol("LM fusion requires a space symbol in the alphabet");
  }
  const std::size_t V = emission.symbols();

  std::map<std::vector<int>, Beam> beams;
  beams[{}] = Beam{0.0, kNegInf, 0.0};

  std::vector<std::string> words;
  std::string trailing;

  for (std::size_t t = 0; t < emission.frames; ++t) {
    std::map<std::vector<int>, Beam> next;
    for (const auto& [prefix, beam] : beams) {
      const double total = beam.total();

      // blank keeps the prefix
      {
        Beam& nb = next[prefix];
        nb.p_blank = lse(nb.p_blank, total + emission.at(t, 0));
        nb.lm = beam.lm;
      }

      for (std::size_t s = 1; s < V; ++s) {
        const double p = emission.at(t, s);
        const int sid = static_cast<int>(s);
        if (!prefix.empty() && prefix.back() == sid) {
          // repeated symbol collapses onto the same prefix
          Beam& same = next[prefix];
          same.p_symbol = lse(same.p_symbol, beam.p_symbol + p);
          same.lm = beam.lm;
          // a blank-separated repeat extends the prefix
          std::vector<int> extended = prefix;
          extended.push_back(sid);
          Beam& ext = next[extended];
          if (ext.p_blank == kNegInf && ext.p_symbol == kNegInf) {
            ext.lm = beam.lm;
            if (lm != nullptr && sid == space) {
              split_words(prefix, emission, space, words, trailing);
              ext.lm += word_fusion(words, trailing, *lm, fusion);
            }
          }
          ext.p_symbol = lse(ext.p_symbol, beam.p_blank + p);
        } else {
          std::vector<int> extended = prefix;
          extended.push_back(sid);
          Beam& ext = next[extended];
          if (ext.p_blank == kNegInf && ext.p_symbol == kNegInf) {
            ext.lm = beam.lm;
            if (lm != nullptr && sid == space) {
              split_words(prefix, emission, space, words, trailing);
              ext.lm += word_fusion(words, trailing, *lm, fusion);
            }
          }
          ext.p_symbol = lse(ext.p_symbol, total + p);
        }
      }
    }

    // prune
    if (next.size() > beam_width) {
      std::vector<std::pair<const std::vector<int>*, double>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, beam] : next) {
        ranked.emplace_back(&prefix, beam.total() + beam.lm);
      }
      std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return prefix_text(*a.first, emission) < prefix_text(*b.first, emission);
      });
      std::map<std::vector<int>, Beam> kept;
      for (std::size_t i = 0; i < beam_width; ++i) {
        kept[*ranked[i].first] = next[*ranked[i].first];
      }
      next = std::move(kept);
    }
    beams = std::move(next);
  }

  // closure: score the trailing word
  DecodeResult result;
  std::vector<std::tuple<std::string, double>> finals;
  for (const auto& [prefix, beam] : beams) {
    double score = beam.total() + beam.lm;
    if (lm != nullptr) {
      split_words(prefix, emission, space, words, trailing);
      score += word_fusion(words, trailing, *lm, fusion);
    }
    finals.emplace_back(prefix_text(prefix, emission), score);
  }
  std::sort(finals.begin(), finals.end(), [](const auto& a, const auto& b) {
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<0>(a) < std::get<0>(b);
  });
  result.text = std::get<0>(finals.front());
  result.log_score = std::get<1>(finals.front());
  for (const auto& [text, score] : finals) result.n_best.emplace_back(text, score);
  return result;
}

}  // namespace arud
